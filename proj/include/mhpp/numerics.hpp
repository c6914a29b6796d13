#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mhpp/rng.hpp"

namespace mhpp {

using Vector = std::vector<double>;

/// Row-major dense matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static DenseMatrix identity(std::size_t n);
    /// Entries drawn from N(0, stddev^2).
    static DenseMatrix random_normal(std::size_t rows, std::size_t cols, double stddev, Rng& rng);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    void fill(double v);
    DenseMatrix transpose() const;
    bool same_shape(const DenseMatrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool all_finite() const noexcept;

    bool operator==(const DenseMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// y = A x
Vector matvec(const DenseMatrix& a, std::span<const double> x);
/// y = A^T x
Vector matvec_transposed(const DenseMatrix& a, std::span<const double> x);
/// A += alpha * x y^T
void add_outer(DenseMatrix& a, std::span<const double> x, std::span<const double> y, double alpha = 1.0);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// Solves A x = b for symmetric positive definite A by Cholesky.
/// Throws NumericalError when A is not numerically positive definite.
Vector cholesky_solve(const DenseMatrix& a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamState() = default;
    AdamState(std::size_t rows, std::size_t cols, AdamConfig config = {})
        : config(config), first_moment(rows, cols), second_moment(rows, cols) {}

    AdamConfig config;
    std::size_t step = 0;
    DenseMatrix first_moment;
    DenseMatrix second_moment;
};

/// One bias-corrected Adam update of params in place.
void adam_step(DenseMatrix& params, const DenseMatrix& grads, AdamState& state);

/// Adam over a fixed list of parameter matrices; the list order must stay the
/// same between calls.
class AdamOptimizer {
public:
    AdamOptimizer() = default;
    AdamOptimizer(std::span<DenseMatrix* const> params, AdamConfig config);

    void step(std::span<DenseMatrix* const> params, std::span<const DenseMatrix* const> grads);
    void set_learning_rate(double lr);

private:
    std::vector<AdamState> states_;
};

// ---------------------------------------------------------------------------
// Finite differences

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central-difference gradient of f at x. Throws NumericalError if any
/// evaluation is non-finite.
Vector finite_diff_grad(const ScalarFunction& f, std::span<const double> x, double h);

/// Concatenates the entries of every matrix, in list order.
Vector flatten(std::span<const DenseMatrix* const> params);
/// Inverse of flatten; values must have exactly the total entry count.
void unflatten(std::span<DenseMatrix* const> params, std::span<const double> values);

/// ||a - b|| / max(||a||, ||b||), or 0 when both vanish.
double relative_error(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition and PCA

struct SymmetricEigen {
    Vector eigenvalues;        // descending
    DenseMatrix eigenvectors;  // row i is the unit eigenvector for eigenvalues[i]
};

/// Cyclic Jacobi rotations on a symmetric matrix.
SymmetricEigen jacobi_eigen(const DenseMatrix& symmetric, double tolerance = 1e-15,
                            int max_sweeps = 100);

struct PcaModel {
    Vector mean;
    DenseMatrix components;  // k x d, orthonormal rows
    Vector eigenvalues;      // k, descending, non-negative

    std::size_t input_dim() const noexcept { return mean.size(); }
    std::size_t output_dim() const noexcept { return components.rows(); }
};

PcaModel pca_fit(const DenseMatrix& samples, std::size_t k);
Vector pca_transform(const PcaModel& model, std::span<const double> x);
DenseMatrix pca_transform(const PcaModel& model, const DenseMatrix& samples);
/// mean + components^T * z
Vector pca_reconstruct(const PcaModel& model, std::span<const double> z);

// ---------------------------------------------------------------------------
// Standardization

struct Standardizer {
    Vector mean;
    Vector scale;  // > 0; zero-variance columns get 1

    std::size_t dim() const noexcept { return mean.size(); }
    Vector apply(std::span<const double> x) const;
    DenseMatrix apply(const DenseMatrix& x) const;
};

/// Population mean and standard deviation per column.
Standardizer standardizer_fit(const DenseMatrix& train);

struct StandardizedPair {
    Standardizer standardizer;
    DenseMatrix transformed;
};

StandardizedPair standardize_fit_apply(const DenseMatrix& train, const DenseMatrix& apply_to);

}  // namespace mhpp
