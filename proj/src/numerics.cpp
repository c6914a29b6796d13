#include "mhpp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mhpp/error.hpp"

namespace mhpp {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("DenseMatrix: data length " + std::to_string(data_.size()) +
                         " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::random_normal(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
    DenseMatrix m(rows, cols);
    for (auto& v : m.data_) v = stddev * rng.normal();
    return m;
}

void DenseMatrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

bool DenseMatrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
    DenseMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto out_row = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const auto b_row = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
        }
    }
    return out;
}

Vector matvec(const DenseMatrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw ShapeError("matvec: dimension mismatch");
    Vector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
    return y;
}

Vector matvec_transposed(const DenseMatrix& a, std::span<const double> x) {
    if (a.rows() != x.size()) throw ShapeError("matvec_transposed: dimension mismatch");
    Vector y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const auto r = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += xi * r[j];
    }
    return y;
}

void add_outer(DenseMatrix& a, std::span<const double> x, std::span<const double> y, double alpha) {
    if (a.rows() != x.size() || a.cols() != y.size()) throw ShapeError("add_outer: dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = alpha * x[i];
        if (s == 0.0) continue;
        auto r = a.row(i);
        for (std::size_t j = 0; j < y.size(); ++j) r[j] += s * y[j];
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Vector cholesky_solve(const DenseMatrix& a, std::span<const double> b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw ShapeError("cholesky_solve: dimension mismatch");
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        const auto lj = l.row(j);
        for (std::size_t k = 0; k < j; ++k) d -= lj[k] * lj[k];
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw NumericalError("cholesky_solve: matrix is not positive definite (pivot " +
                                 std::to_string(j) + ")");
        }
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            const auto li = l.row(i);
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
            l(i, j) = s / ljj;
        }
    }
    Vector z(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * z[k];
        z[i] = s / l(i, i);
    }
    Vector x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = z[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

// ---------------------------------------------------------------------------

void adam_step(DenseMatrix& params, const DenseMatrix& grads, AdamState& state) {
    if (!params.same_shape(grads)) throw ShapeError("adam_step: params and grads differ in shape");
    if (!params.same_shape(state.first_moment) || !params.same_shape(state.second_moment)) {
        throw ShapeError("adam_step: optimizer state does not match params");
    }
    const auto& cfg = state.config;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    auto p = params.data();
    const auto g = grads.data();
    auto m = state.first_moment.data();
    auto v = state.second_moment.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

AdamOptimizer::AdamOptimizer(std::span<DenseMatrix* const> params, AdamConfig config) {
    states_.reserve(params.size());
    for (const auto* p : params) states_.emplace_back(p->rows(), p->cols(), config);
}

void AdamOptimizer::step(std::span<DenseMatrix* const> params,
                         std::span<const DenseMatrix* const> grads) {
    if (params.size() != states_.size() || grads.size() != states_.size()) {
        throw ShapeError("AdamOptimizer::step: parameter list changed");
    }
    for (std::size_t i = 0; i < states_.size(); ++i) adam_step(*params[i], *grads[i], states_[i]);
}

void AdamOptimizer::set_learning_rate(double lr) {
    for (auto& s : states_) s.config.learning_rate = lr;
}

// ---------------------------------------------------------------------------

Vector finite_diff_grad(const ScalarFunction& f, std::span<const double> x, double h) {
    if (!(h > 0.0)) throw DomainError("finite_diff_grad: step must be positive");
    Vector probe(x.begin(), x.end());
    Vector grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double fp = f(probe);
        probe[i] = x[i] - h;
        const double fm = f(probe);
        probe[i] = x[i];
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NumericalError("finite_diff_grad: non-finite evaluation at coordinate " +
                                 std::to_string(i));
        }
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

Vector flatten(std::span<const DenseMatrix* const> params) {
    Vector out;
    for (const auto* p : params) out.insert(out.end(), p->data().begin(), p->data().end());
    return out;
}

void unflatten(std::span<DenseMatrix* const> params, std::span<const double> values) {
    std::size_t total = 0;
    for (const auto* p : params) total += p->size();
    if (total != values.size()) throw ShapeError("unflatten: value count mismatch");
    std::size_t offset = 0;
    for (auto* p : params) {
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), p->size(), p->data().begin());
        offset += p->size();
    }
}

double relative_error(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("relative_error: length mismatch");
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] - b[i]) * (a[i] - b[i]);
    const double scale = std::max(norm2(a), norm2(b));
    if (scale == 0.0) return 0.0;
    return std::sqrt(diff) / scale;
}

// ---------------------------------------------------------------------------

SymmetricEigen jacobi_eigen(const DenseMatrix& symmetric, double tolerance, int max_sweeps) {
    const std::size_t n = symmetric.rows();
    if (symmetric.cols() != n) throw ShapeError("jacobi_eigen: matrix must be square");
    DenseMatrix a = symmetric;
    DenseMatrix v = DenseMatrix::identity(n);

    double frob = 0.0;
    for (const double x : a.data()) frob += x * x;
    frob = std::sqrt(frob);
    const double negligible = tolerance * frob;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        std::size_t rotations = 0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                const double g = 100.0 * std::abs(apq);
                if (std::abs(apq) <= negligible ||
                    (sweep > 3 && std::abs(app) + g == std::abs(app) &&
                     std::abs(aqq) + g == std::abs(aqq))) {
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;
                    continue;
                }
                const double theta = (aqq - app) / (2.0 * apq);
                double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
                ++rotations;
            }
        }
        if (rotations == 0) break;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    SymmetricEigen out;
    out.eigenvalues.resize(n);
    out.eigenvectors = DenseMatrix(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t src = order[r];
        out.eigenvalues[r] = a(src, src);
        // Sign convention: largest-magnitude coordinate positive.
        std::size_t pivot = 0;
        for (std::size_t k = 1; k < n; ++k)
            if (std::abs(v(k, src)) > std::abs(v(pivot, src))) pivot = k;
        const double sign = v(pivot, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t k = 0; k < n; ++k) out.eigenvectors(r, k) = sign * v(k, src);
    }
    return out;
}

PcaModel pca_fit(const DenseMatrix& samples, std::size_t k) {
    const std::size_t n = samples.rows();
    const std::size_t d = samples.cols();
    if (n < 2) throw DomainError("pca_fit: need at least two samples");
    if (k == 0 || k > std::min(n, d)) {
        throw DomainError("pca_fit: k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(std::min(n, d)) + "]");
    }
    PcaModel model;
    model.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = samples.row(i);
        for (std::size_t j = 0; j < d; ++j) model.mean[j] += r[j];
    }
    for (auto& m : model.mean) m /= static_cast<double>(n);

    DenseMatrix cov(d, d);
    Vector centered(d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = samples.row(i);
        for (std::size_t j = 0; j < d; ++j) centered[j] = r[j] - model.mean[j];
        for (std::size_t a = 0; a < d; ++a) {
            const double ca = centered[a];
            if (ca == 0.0) continue;
            auto cov_row = cov.row(a);
            for (std::size_t b = a; b < d; ++b) cov_row[b] += ca * centered[b];
        }
    }
    const double denom = static_cast<double>(n - 1);
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
            cov(a, b) /= denom;
            cov(b, a) = cov(a, b);
        }
    }

    const auto eig = jacobi_eigen(cov);
    model.components = DenseMatrix(k, d);
    model.eigenvalues.resize(k);
    for (std::size_t r = 0; r < k; ++r) {
        model.eigenvalues[r] = std::max(0.0, eig.eigenvalues[r]);
        const auto src = eig.eigenvectors.row(r);
        std::copy(src.begin(), src.end(), model.components.row(r).begin());
    }
    return model;
}

Vector pca_transform(const PcaModel& model, std::span<const double> x) {
    if (x.size() != model.input_dim()) throw ShapeError("pca_transform: dimension mismatch");
    Vector centered(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) centered[j] = x[j] - model.mean[j];
    return matvec(model.components, centered);
}

DenseMatrix pca_transform(const PcaModel& model, const DenseMatrix& samples) {
    DenseMatrix out(samples.rows(), model.output_dim());
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        const auto z = pca_transform(model, samples.row(i));
        std::copy(z.begin(), z.end(), out.row(i).begin());
    }
    return out;
}

Vector pca_reconstruct(const PcaModel& model, std::span<const double> z) {
    if (z.size() != model.output_dim()) throw ShapeError("pca_reconstruct: dimension mismatch");
    Vector x = matvec_transposed(model.components, z);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] += model.mean[j];
    return x;
}

// ---------------------------------------------------------------------------

Vector Standardizer::apply(std::span<const double> x) const {
    if (x.size() != dim()) throw ShapeError("Standardizer::apply: dimension mismatch");
    Vector out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
    return out;
}

DenseMatrix Standardizer::apply(const DenseMatrix& x) const {
    if (x.cols() != dim()) throw ShapeError("Standardizer::apply: column count mismatch");
    DenseMatrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto src = x.row(i);
        auto dst = out.row(i);
        for (std::size_t j = 0; j < x.cols(); ++j) dst[j] = (src[j] - mean[j]) / scale[j];
    }
    return out;
}

Standardizer standardizer_fit(const DenseMatrix& train) {
    const std::size_t n = train.rows();
    const std::size_t d = train.cols();
    if (n == 0) throw DomainError("standardizer_fit: empty train set");
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = train.row(i);
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
    }
    for (auto& m : s.mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = train.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double c = r[j] - s.mean[j];
            s.scale[j] += c * c;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::sqrt(s.scale[j] / static_cast<double>(n));
        s.scale[j] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[j])) ? sd : 1.0;
    }
    return s;
}

StandardizedPair standardize_fit_apply(const DenseMatrix& train, const DenseMatrix& apply_to) {
    if (apply_to.cols() != train.cols()) {
        throw ShapeError("standardize_fit_apply: column counts differ");
    }
    StandardizedPair out;
    out.standardizer = standardizer_fit(train);
    out.transformed = out.standardizer.apply(apply_to);
    return out;
}

}  // namespace mhpp
