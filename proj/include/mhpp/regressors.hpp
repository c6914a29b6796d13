#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "mhpp/model_io.hpp"
#include "mhpp/numerics.hpp"

namespace mhpp {

enum class RegressorKind { lasso, elastic_net, kernel_ridge, gradient_boosting };
inline constexpr std::size_t kRegressorKindCount = 4;

/// "lasso", "enet", "krr", "gbm"
std::string_view to_string(RegressorKind k);
RegressorKind regressor_kind_from_string(std::string_view s);

struct RegressorSpec {
    RegressorKind kind = RegressorKind::lasso;
    double lambda = 0.001;
    double l1_ratio = 0.5;  // elastic net only
    double gamma = 0.0;     // kernel ridge; 0 means 1 / feature count
    std::size_t trees = 200;
    std::size_t depth = 3;
    double shrinkage = 0.1;
    double tol = 1e-7;
    std::size_t max_iter = 10000;
    std::uint64_t seed = 1;  // the exact-greedy booster is deterministic and draws nothing

    /// Conventional defaults for each kind.
    static RegressorSpec defaults(RegressorKind kind);
};

struct LinearModel {
    Vector coef;
    double intercept = 0.0;
};

struct KernelModel {
    DenseMatrix train_x;
    Vector alpha;
    double mean = 0.0;
    double gamma = 1.0;
};

struct TreeNode {
    int feature = -1;  // -1 for a leaf
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
};

/// x[feature] <= threshold goes left.
struct RegressionTree {
    std::vector<TreeNode> nodes;  // root at 0
    double predict(std::span<const double> x) const;
};

struct GbmModel {
    double base = 0.0;
    double shrinkage = 0.1;
    std::vector<RegressionTree> trees;
};

/// Coordinate-descent outcome. A fit that hits max_iter is still returned;
/// callers inspect `converged`.
struct FitDiagnostics {
    bool converged = true;
    std::size_t iterations = 0;
    double final_change = 0.0;  // max coefficient change of the last sweep
};

struct TrainedRegressor {
    RegressorKind kind = RegressorKind::lasso;
    std::size_t feature_count = 0;
    std::variant<LinearModel, KernelModel, GbmModel> state;
    FitDiagnostics diagnostics;
};

/// Minimizes (1/2n)||y - X b - b0||^2 + lambda ||b||_1 with b0 unpenalized.
TrainedRegressor fit_lasso(const DenseMatrix& x, std::span<const double> y, double lambda, double tol = 1e-7,
                           std::size_t max_iter = 10000);
/// Penalty lambda (l1_ratio ||b||_1 + (1 - l1_ratio) ||b||^2 / 2), same loss scaling.
TrainedRegressor fit_elastic_net(const DenseMatrix& x, std::span<const double> y, double lambda, double l1_ratio,
                                 double tol = 1e-7, std::size_t max_iter = 10000);
/// RBF kernel exp(-gamma ||a - b||^2) on centered targets.
TrainedRegressor fit_kernel_ridge(const DenseMatrix& x, std::span<const double> y, double lambda, double gamma);
/// Squared-loss boosting of exact-greedy depth-limited trees.
TrainedRegressor fit_gbm(const DenseMatrix& x, std::span<const double> y, std::size_t trees, std::size_t depth,
                         double shrinkage, std::uint64_t seed = 1);

TrainedRegressor fit(const RegressorSpec& spec, const DenseMatrix& x, std::span<const double> y);

double predict_row(const TrainedRegressor& model, std::span<const double> x);
Vector predict(const TrainedRegressor& model, const DenseMatrix& x);

/// Elastic-net objective of a linear model, for monitoring descent.
double elastic_net_objective(const DenseMatrix& x, std::span<const double> y, const LinearModel& model, double lambda,
                             double l1_ratio);

Json regressor_to_json(const TrainedRegressor& model);
TrainedRegressor regressor_from_json(const Json& j);

}  // namespace mhpp
