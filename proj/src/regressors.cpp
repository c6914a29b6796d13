#include "mhpp/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mhpp/error.hpp"

namespace mhpp {
namespace {

void check_inputs(const DenseMatrix& x, std::span<const double> y, std::string_view who) {
    if (x.rows() == 0 || x.cols() == 0) throw DomainError(std::string(who) + ": empty design matrix");
    if (x.rows() != y.size()) {
        throw ShapeError(std::string(who) + ": " + std::to_string(x.rows()) + " rows but " +
                         std::to_string(y.size()) + " targets");
    }
    if (!x.all_finite()) throw DomainError(std::string(who) + ": non-finite feature value");
    for (const double v : y) {
        if (!std::isfinite(v)) throw DomainError(std::string(who) + ": non-finite target");
    }
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

double tree_predict(const std::vector<TreeNode>& nodes, std::span<const double> x) {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

struct Split {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

/// Grows one exact-greedy tree level by level on residuals r.
RegressionTree grow_tree(const DenseMatrix& x, const std::vector<std::vector<std::size_t>>& sorted,
                         std::span<const double> r, std::size_t depth) {
    const std::size_t n = x.rows(), d = x.cols();
    RegressionTree tree;
    tree.nodes.push_back({});
    std::vector<int> node_of(n, 0);
    std::vector<int> frontier{0};
    std::vector<double> sum(1, 0.0);
    std::vector<std::size_t> count(1, n);
    for (std::size_t i = 0; i < n; ++i) sum[0] += r[i];

    for (std::size_t level = 0; level < depth && !frontier.empty(); ++level) {
        // Per tree node: slot in the frontier or -1.
        std::vector<int> slot(tree.nodes.size(), -1);
        for (std::size_t s = 0; s < frontier.size(); ++s) slot[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
        const std::size_t m = frontier.size();
        std::vector<Split> best(m);
        std::vector<double> left_sum(m);
        std::vector<std::size_t> left_count(m);
        std::vector<double> last(m);
        std::vector<double> tsum(m), tcount(m);
        for (std::size_t s = 0; s < m; ++s) {
            tsum[s] = sum[static_cast<std::size_t>(frontier[s])];
            tcount[s] = static_cast<double>(count[static_cast<std::size_t>(frontier[s])]);
        }
        for (std::size_t j = 0; j < d; ++j) {
            std::fill(left_sum.begin(), left_sum.end(), 0.0);
            std::fill(left_count.begin(), left_count.end(), 0);
            for (const auto i : sorted[j]) {
                const int s_i = slot[static_cast<std::size_t>(node_of[i])];
                if (s_i < 0) continue;
                const auto s = static_cast<std::size_t>(s_i);
                const double v = x(i, j);
                if (left_count[s] > 0 && v > last[s]) {
                    const double nl = static_cast<double>(left_count[s]);
                    const double nr = tcount[s] - nl;
                    const double sl = left_sum[s], sr = tsum[s] - sl;
                    const double gain = sl * sl / nl + sr * sr / nr - tsum[s] * tsum[s] / tcount[s];
                    if (gain > best[s].gain) {
                        double thr = 0.5 * (last[s] + v);
                        if (!(thr < v)) thr = last[s];
                        best[s] = {gain, static_cast<int>(j), thr};
                    }
                }
                left_sum[s] += r[i];
                ++left_count[s];
                last[s] = v;
            }
        }
        std::vector<int> next;
        for (std::size_t s = 0; s < m; ++s) {
            const double scale = std::max(1.0, tsum[s] * tsum[s] / tcount[s]);
            if (best[s].feature < 0 || best[s].gain <= 1e-12 * scale) continue;
            const auto id = static_cast<std::size_t>(frontier[s]);
            const int l = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back({});
            tree.nodes.push_back({});
            sum.resize(tree.nodes.size(), 0.0);
            count.resize(tree.nodes.size(), 0);
            tree.nodes[id].feature = best[s].feature;
            tree.nodes[id].threshold = best[s].threshold;
            tree.nodes[id].left = l;
            tree.nodes[id].right = l + 1;
            next.push_back(l);
            next.push_back(l + 1);
        }
        if (next.empty()) break;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& node = tree.nodes[static_cast<std::size_t>(node_of[i])];
            if (node.feature < 0) continue;
            const int child = x(i, static_cast<std::size_t>(node.feature)) <= node.threshold ? node.left : node.right;
            node_of[i] = child;
            sum[static_cast<std::size_t>(child)] += r[i];
            ++count[static_cast<std::size_t>(child)];
        }
        frontier = std::move(next);
    }
    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
        if (tree.nodes[k].feature < 0 && count[k] > 0) tree.nodes[k].value = sum[k] / static_cast<double>(count[k]);
    }
    return tree;
}

}  // namespace

std::string_view to_string(RegressorKind k) {
    switch (k) {
        case RegressorKind::lasso: return "lasso";
        case RegressorKind::elastic_net: return "enet";
        case RegressorKind::kernel_ridge: return "krr";
        case RegressorKind::gradient_boosting: return "gbm";
    }
    return "?";
}

RegressorKind regressor_kind_from_string(std::string_view s) {
    if (s == "lasso") return RegressorKind::lasso;
    if (s == "enet" || s == "elastic_net") return RegressorKind::elastic_net;
    if (s == "krr" || s == "kernel_ridge") return RegressorKind::kernel_ridge;
    if (s == "gbm" || s == "gradient_boosting") return RegressorKind::gradient_boosting;
    throw DomainError("unknown regressor '" + std::string(s) + "' (expected lasso, enet, krr or gbm)");
}

RegressorSpec RegressorSpec::defaults(RegressorKind kind) {
    RegressorSpec s;
    s.kind = kind;
    if (kind == RegressorKind::kernel_ridge) s.lambda = 0.1;
    return s;
}

double RegressionTree::predict(std::span<const double> x) const { return tree_predict(nodes, x); }

TrainedRegressor fit_elastic_net(const DenseMatrix& x, std::span<const double> y, double lambda, double l1_ratio,
                                 double tol, std::size_t max_iter) {
    check_inputs(x, y, "elastic net");
    if (!(lambda >= 0.0)) throw DomainError("elastic net: lambda must be non-negative");
    if (!(l1_ratio >= 0.0 && l1_ratio <= 1.0)) throw DomainError("elastic net: l1_ratio must lie in [0, 1]");
    if (max_iter == 0) throw DomainError("elastic net: max_iter must be positive");

    const std::size_t n = x.rows(), d = x.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    Vector xmean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) xmean[j] += x(i, j);
    }
    for (auto& v : xmean) v *= inv_n;
    const double ymean = mean_of(y);

    // Centered columns, stored contiguously.
    std::vector<Vector> cols(d, Vector(n));
    Vector z(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            cols[j][i] = x(i, j) - xmean[j];
            z[j] += cols[j][i] * cols[j][i];
        }
        z[j] *= inv_n;
    }
    Vector resid(n);
    for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - ymean;

    const double l1 = lambda * l1_ratio;
    const double l2 = lambda * (1.0 - l1_ratio);
    LinearModel lm{Vector(d, 0.0), 0.0};
    FitDiagnostics diag;
    diag.converged = false;
    for (std::size_t it = 0; it < max_iter; ++it) {
        double max_change = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            if (z[j] <= 0.0) continue;
            const auto& c = cols[j];
            const double old = lm.coef[j];
            double rho = 0.0;
            for (std::size_t i = 0; i < n; ++i) rho += c[i] * resid[i];
            rho = rho * inv_n + z[j] * old;
            const double updated = soft_threshold(rho, l1) / (z[j] + l2);
            const double delta = updated - old;
            if (delta != 0.0) {
                for (std::size_t i = 0; i < n; ++i) resid[i] -= delta * c[i];
                lm.coef[j] = updated;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        diag.iterations = it + 1;
        diag.final_change = max_change;
        if (max_change < tol) {
            diag.converged = true;
            break;
        }
    }
    lm.intercept = ymean - dot(xmean, lm.coef);

    TrainedRegressor out;
    out.kind = l1_ratio == 1.0 ? RegressorKind::lasso : RegressorKind::elastic_net;
    out.feature_count = d;
    out.state = std::move(lm);
    out.diagnostics = diag;
    return out;
}

TrainedRegressor fit_lasso(const DenseMatrix& x, std::span<const double> y, double lambda, double tol,
                           std::size_t max_iter) {
    auto out = fit_elastic_net(x, y, lambda, 1.0, tol, max_iter);
    out.kind = RegressorKind::lasso;
    return out;
}

TrainedRegressor fit_kernel_ridge(const DenseMatrix& x, std::span<const double> y, double lambda, double gamma) {
    check_inputs(x, y, "kernel ridge");
    if (!(lambda >= 0.0)) throw DomainError("kernel ridge: lambda must be non-negative");
    if (!(gamma > 0.0)) throw DomainError("kernel ridge: gamma must be positive");
    const std::size_t n = x.rows();
    DenseMatrix k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        k(i, i) = 1.0 + lambda;
        for (std::size_t j = 0; j < i; ++j) {
            const double v = std::exp(-gamma * sq_dist(x.row(i), x.row(j)));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    KernelModel km;
    km.mean = mean_of(y);
    Vector centered(n);
    for (std::size_t i = 0; i < n; ++i) centered[i] = y[i] - km.mean;
    try {
        km.alpha = cholesky_solve(k, centered);
    } catch (const NumericalError&) {
        throw NumericalError("kernel ridge: K + lambda I is singular (duplicate rows with lambda = 0?)");
    }
    km.train_x = x;
    km.gamma = gamma;
    TrainedRegressor out;
    out.kind = RegressorKind::kernel_ridge;
    out.feature_count = x.cols();
    out.state = std::move(km);
    return out;
}

TrainedRegressor fit_gbm(const DenseMatrix& x, std::span<const double> y, std::size_t trees, std::size_t depth,
                         double shrinkage, std::uint64_t /*seed*/) {
    check_inputs(x, y, "gradient boosting");
    if (trees < 1) throw DomainError("gradient boosting: at least one tree is required");
    if (!(shrinkage > 0.0 && shrinkage <= 1.0)) throw DomainError("gradient boosting: shrinkage must lie in (0, 1]");
    const std::size_t n = x.rows(), d = x.cols();
    std::vector<std::vector<std::size_t>> sorted(d, std::vector<std::size_t>(n));
    for (std::size_t j = 0; j < d; ++j) {
        auto& s = sorted[j];
        std::iota(s.begin(), s.end(), std::size_t{0});
        std::stable_sort(s.begin(), s.end(), [&](std::size_t a, std::size_t b) { return x(a, j) < x(b, j); });
    }
    GbmModel g;
    g.base = mean_of(y);
    g.shrinkage = shrinkage;
    Vector f(n, g.base), r(n);
    for (std::size_t t = 0; t < trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - f[i];
        auto tree = grow_tree(x, sorted, r, depth);
        for (std::size_t i = 0; i < n; ++i) f[i] += shrinkage * tree.predict(x.row(i));
        g.trees.push_back(std::move(tree));
    }
    TrainedRegressor out;
    out.kind = RegressorKind::gradient_boosting;
    out.feature_count = d;
    out.state = std::move(g);
    return out;
}

TrainedRegressor fit(const RegressorSpec& spec, const DenseMatrix& x, std::span<const double> y) {
    switch (spec.kind) {
        case RegressorKind::lasso: return fit_lasso(x, y, spec.lambda, spec.tol, spec.max_iter);
        case RegressorKind::elastic_net:
            return fit_elastic_net(x, y, spec.lambda, spec.l1_ratio, spec.tol, spec.max_iter);
        case RegressorKind::kernel_ridge: {
            const double gamma = spec.gamma > 0.0 ? spec.gamma : 1.0 / static_cast<double>(std::max<std::size_t>(1, x.cols()));
            return fit_kernel_ridge(x, y, spec.lambda, gamma);
        }
        case RegressorKind::gradient_boosting:
            return fit_gbm(x, y, spec.trees, spec.depth, spec.shrinkage, spec.seed);
    }
    throw DomainError("fit: unknown regressor kind");
}

double predict_row(const TrainedRegressor& model, std::span<const double> x) {
    if (x.size() != model.feature_count) {
        throw ShapeError("predict: model expects " + std::to_string(model.feature_count) + " features, got " +
                         std::to_string(x.size()));
    }
    if (const auto* lm = std::get_if<LinearModel>(&model.state)) return lm->intercept + dot(lm->coef, x);
    if (const auto* km = std::get_if<KernelModel>(&model.state)) {
        double s = km->mean;
        for (std::size_t i = 0; i < km->train_x.rows(); ++i) {
            s += km->alpha[i] * std::exp(-km->gamma * sq_dist(km->train_x.row(i), x));
        }
        return s;
    }
    const auto& g = std::get<GbmModel>(model.state);
    double s = g.base;
    for (const auto& t : g.trees) s += g.shrinkage * t.predict(x);
    return s;
}

Vector predict(const TrainedRegressor& model, const DenseMatrix& x) {
    Vector out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_row(model, x.row(i));
    return out;
}

double elastic_net_objective(const DenseMatrix& x, std::span<const double> y, const LinearModel& model, double lambda,
                             double l1_ratio) {
    double sse = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double e = y[i] - model.intercept - dot(model.coef, x.row(i));
        sse += e * e;
    }
    double l1 = 0.0, l2 = 0.0;
    for (const double b : model.coef) {
        l1 += std::abs(b);
        l2 += b * b;
    }
    return sse / (2.0 * static_cast<double>(x.rows())) + lambda * (l1_ratio * l1 + 0.5 * (1.0 - l1_ratio) * l2);
}

Json regressor_to_json(const TrainedRegressor& model) {
    Json j = model_envelope("regressor");
    j["regressor"] = std::string(to_string(model.kind));
    j["feature_count"] = model.feature_count;
    j["diagnostics"] = {{"converged", model.diagnostics.converged},
                        {"iterations", model.diagnostics.iterations},
                        {"final_change", model.diagnostics.final_change}};
    if (const auto* lm = std::get_if<LinearModel>(&model.state)) {
        j["coef"] = vector_to_json(lm->coef);
        j["intercept"] = lm->intercept;
    } else if (const auto* km = std::get_if<KernelModel>(&model.state)) {
        j["train_x"] = matrix_to_json(km->train_x);
        j["alpha"] = vector_to_json(km->alpha);
        j["mean"] = km->mean;
        j["gamma"] = km->gamma;
    } else {
        const auto& g = std::get<GbmModel>(model.state);
        j["base"] = g.base;
        j["shrinkage"] = g.shrinkage;
        Json trees = Json::array();
        for (const auto& t : g.trees) {
            Json nodes = Json::array();
            for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.value, n.left, n.right});
            trees.push_back(std::move(nodes));
        }
        j["trees"] = std::move(trees);
    }
    return j;
}

TrainedRegressor regressor_from_json(const Json& j) {
    check_envelope(j, "regressor");
    TrainedRegressor m;
    try {
        m.kind = regressor_kind_from_string(j.at("regressor").get<std::string>());
        m.feature_count = j.at("feature_count").get<std::size_t>();
        const auto& dj = j.at("diagnostics");
        m.diagnostics = {dj.at("converged").get<bool>(), dj.at("iterations").get<std::size_t>(),
                         dj.at("final_change").get<double>()};
        switch (m.kind) {
            case RegressorKind::lasso:
            case RegressorKind::elastic_net:
                m.state = LinearModel{vector_from_json(j.at("coef")), j.at("intercept").get<double>()};
                break;
            case RegressorKind::kernel_ridge:
                m.state = KernelModel{matrix_from_json(j.at("train_x")), vector_from_json(j.at("alpha")),
                                      j.at("mean").get<double>(), j.at("gamma").get<double>()};
                break;
            case RegressorKind::gradient_boosting: {
                GbmModel g;
                g.base = j.at("base").get<double>();
                g.shrinkage = j.at("shrinkage").get<double>();
                for (const auto& tj : j.at("trees")) {
                    RegressionTree t;
                    for (const auto& nj : tj) {
                        t.nodes.push_back({nj.at(0).get<int>(), nj.at(1).get<double>(), nj.at(2).get<double>(),
                                           nj.at(3).get<int>(), nj.at(4).get<int>()});
                    }
                    if (t.nodes.empty()) throw FormatError("regressor dump: empty tree");
                    g.trees.push_back(std::move(t));
                }
                m.state = std::move(g);
                break;
            }
        }
    } catch (const Json::exception& e) {
        throw FormatError(std::string("regressor dump: ") + e.what());
    }
    return m;
}

}  // namespace mhpp
