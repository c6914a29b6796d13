#include <Eigen/Dense>

#include <cmath>

#include "doctest.h"
#include "mhpp/error.hpp"
#include "mhpp/numerics.hpp"
#include "mhpp/rng.hpp"

using namespace mhpp;

namespace {

Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) e(r, c) = m(r, c);
    return e;
}

DenseMatrix random_spd(std::size_t n, Rng& rng) {
    const auto a = DenseMatrix::random_normal(n, n, 1.0, rng);
    auto s = matmul(a.transpose(), a);
    for (std::size_t i = 0; i < n; ++i) s(i, i) += 0.5;
    return s;
}

}  // namespace

TEST_CASE("rng streams are reproducible and seed-sensitive") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        if (i == 0) CHECK(x != c.next_u64());
    }
    CHECK(derive_seed(7, "split") == derive_seed(7, "split"));
    CHECK(derive_seed(7, "split") != derive_seed(7, "gsne"));
    CHECK(derive_seed(7, "split") != derive_seed(8, "split"));
}

TEST_CASE("rng distributions stay in range with sane moments") {
    Rng rng(1);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        CHECK(rng.uniform_index(7) < 7);
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("matmul and matvec agree with Eigen") {
    Rng rng(5);
    const auto a = DenseMatrix::random_normal(4, 6, 1.0, rng);
    const auto b = DenseMatrix::random_normal(6, 3, 1.0, rng);
    const auto c = matmul(a, b);
    const Eigen::MatrixXd ec = to_eigen(a) * to_eigen(b);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t k = 0; k < 3; ++k) CHECK(c(r, k) == doctest::Approx(ec(r, k)).epsilon(1e-14));
    const Vector x = {1, -2, 0.5, 3, 0, 1};
    const auto y = matvec(a, x);
    const auto yt = matvec_transposed(a.transpose(), x);
    for (std::size_t r = 0; r < 4; ++r) CHECK(y[r] == doctest::Approx(yt[r]).epsilon(1e-14));
    CHECK_THROWS_AS(matmul(a, a), ShapeError);
}

TEST_CASE("cholesky_solve matches Eigen and rejects indefinite systems") {
    Rng rng(8);
    for (const std::size_t n : {1u, 3u, 10u, 25u}) {
        const auto s = random_spd(n, rng);
        Vector b(n);
        for (auto& v : b) v = rng.normal();
        const auto x = cholesky_solve(s, b);
        const Eigen::VectorXd ex = to_eigen(s).llt().solve(Eigen::Map<const Eigen::VectorXd>(b.data(), n));
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(x[i] - ex(i)) < 1e-9);
    }
    DenseMatrix bad(2, 2, std::vector<double>{1, 2, 2, 1});
    CHECK_THROWS_AS(cholesky_solve(bad, Vector{1, 1}), NumericalError);
}

TEST_CASE("jacobi_eigen matches Eigen's symmetric solver") {
    Rng rng(13);
    const auto s = random_spd(12, rng);
    const auto mine = jacobi_eigen(s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(to_eigen(s));
    const auto& ref = solver.eigenvalues();  // ascending
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(mine.eigenvalues[i] == doctest::Approx(ref(11 - i)).epsilon(1e-10));
        // A v = lambda v
        const auto av = matvec(s, mine.eigenvectors.row(i));
        for (std::size_t k = 0; k < 12; ++k) {
            CHECK(std::abs(av[k] - mine.eigenvalues[i] * mine.eigenvectors(i, k)) < 1e-9);
        }
    }
}

TEST_CASE("pca components are orthonormal and the mean maps to zero") {
    Rng rng(21);
    auto x = DenseMatrix::random_normal(150, 12, 1.0, rng);
    for (std::size_t i = 0; i < x.rows(); ++i) x(i, 4) = 2.0 * x(i, 1) + 0.1 * x(i, 4);
    const auto pca = pca_fit(x, 6);
    REQUIRE(pca.output_dim() == 6);
    for (std::size_t a = 0; a < 6; ++a) {
        for (std::size_t b = 0; b < 6; ++b) {
            CHECK(std::abs(dot(pca.components.row(a), pca.components.row(b)) - (a == b ? 1.0 : 0.0)) < 1e-8);
        }
        if (a > 0) CHECK(pca.eigenvalues[a] <= pca.eigenvalues[a - 1]);
    }
    for (const double z : pca_transform(pca, pca.mean)) CHECK(z == doctest::Approx(0.0));
    CHECK_THROWS_AS(pca_fit(x, 13), DomainError);
}

TEST_CASE("full-rank pca is a rotation that preserves distances") {
    Rng rng(22);
    const auto x = DenseMatrix::random_normal(300, 16, 1.0, rng);
    const auto pca = pca_fit(x, 16);
    for (std::size_t i = 0; i + 1 < 20; ++i) {
        const auto a = pca_transform(pca, x.row(i));
        const auto b = pca_transform(pca, x.row(i + 1));
        double d0 = 0, d1 = 0;
        for (std::size_t k = 0; k < 16; ++k) {
            d0 += (x(i, k) - x(i + 1, k)) * (x(i, k) - x(i + 1, k));
            d1 += (a[k] - b[k]) * (a[k] - b[k]);
        }
        CHECK(std::abs(std::sqrt(d0) - std::sqrt(d1)) < 1e-8);
        const auto back = pca_reconstruct(pca, a);
        for (std::size_t k = 0; k < 16; ++k) CHECK(std::abs(back[k] - x(i, k)) < 1e-8);
    }
}

TEST_CASE("adam first step moves each parameter by the learning rate") {
    DenseMatrix p(1, 3, std::vector<double>{1.0, -2.0, 0.5});
    const DenseMatrix g(1, 3, std::vector<double>{0.3, -4.0, 1e-3});
    AdamState st(1, 3, AdamConfig{0.1, 0.9, 0.999, 1e-8});
    adam_step(p, g, st);
    CHECK(p(0, 0) == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(p(0, 1) == doctest::Approx(-1.9).epsilon(1e-6));
    CHECK(p(0, 2) == doctest::Approx(0.4).epsilon(1e-4));
    CHECK(st.step == 1);
}

TEST_CASE("adam minimizes a convex quadratic") {
    DenseMatrix p(1, 2, std::vector<double>{5.0, -3.0});
    std::vector<DenseMatrix*> params = {&p};
    AdamOptimizer opt(params, AdamConfig{0.05});
    for (int i = 0; i < 2000; ++i) {
        DenseMatrix g(1, 2, std::vector<double>{2 * (p(0, 0) - 1.0), 2 * (p(0, 1) + 2.0)});
        const std::vector<const DenseMatrix*> grads = {&g};
        opt.step(params, grads);
    }
    CHECK(p(0, 0) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(p(0, 1) == doctest::Approx(-2.0).epsilon(1e-3));
}

TEST_CASE("finite differences and flatten round trip") {
    const ScalarFunction f = [](std::span<const double> x) { return x[0] * x[0] * x[1] + std::sin(x[1]); };
    const Vector x = {1.5, 0.3};
    const auto g = finite_diff_grad(f, x, 1e-6);
    CHECK(relative_error(g, Vector{2 * 1.5 * 0.3, 1.5 * 1.5 + std::cos(0.3)}) < 1e-8);

    DenseMatrix a(2, 2, std::vector<double>{1, 2, 3, 4}), b(1, 3, std::vector<double>{5, 6, 7});
    std::vector<DenseMatrix*> ms = {&a, &b};
    const auto flat = flatten(ms);
    CHECK(flat == Vector{1, 2, 3, 4, 5, 6, 7});
    unflatten(ms, Vector{7, 6, 5, 4, 3, 2, 1});
    CHECK(a(0, 0) == 7);
    CHECK(b(0, 2) == 1);
    CHECK_THROWS_AS(unflatten(ms, Vector{1, 2}), ShapeError);
}

TEST_CASE("standardizer uses population statistics and guards zero variance") {
    DenseMatrix x(4, 2, std::vector<double>{1, 5, 2, 5, 3, 5, 4, 5});
    const auto s = standardizer_fit(x);
    CHECK(s.mean[0] == doctest::Approx(2.5));
    CHECK(s.scale[0] == doctest::Approx(std::sqrt(1.25)));
    CHECK(s.scale[1] == 1.0);
    const auto z = s.apply(x);
    double m = 0;
    for (std::size_t i = 0; i < 4; ++i) m += z(i, 0);
    CHECK(std::abs(m) < 1e-12);
    CHECK(z(0, 1) == 0.0);
}
