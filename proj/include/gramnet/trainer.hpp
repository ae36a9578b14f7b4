#pragma once

#include "gramnet/ingest.hpp"
#include "gramnet/solver.hpp"
#include "gramnet/standardize.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace gramnet {

/// Training knobs beyond the solver controls.
struct TrainOptions {
    bool intercept = true;
    double epsilon = 1e-12; // degenerate-column threshold passed to standardize
    int threads = 0;        // fold-level parallelism; 0 = hardware concurrency
    /// Compatibility switch: when set, the final fit and the CV average ignore
    /// the last fold (they normally use all k). Off by default.
    bool skip_last_fold = false;
};

/// Cross-validation record: per-fold held-out MSE for every lambda on the
/// shared grid. Cells that could not be scored (empty fold, unusable training
/// complement, non-converged solve) hold NaN and are left out of the mean.
struct CvReport {
    std::vector<double> lambdas;          // descending, shared across folds
    Eigen::MatrixXd fold_mse;             // k x |lambdas|
    Eigen::VectorXd mean_mse;             // per lambda, over valid cells
    double lambda_opt = 0.0;
    int lambda_opt_index = -1;
    std::vector<std::int64_t> fold_sizes; // per-fold record counts
    std::int64_t skipped_cells = 0;
};

/// A trained model in the original data scale.
struct FittedModel {
    double intercept = 0.0;
    Eigen::VectorXd coefficients; // full p; exact zeros for dropped columns
    double lambda_opt = 0.0;
    PenaltySpec penalty;
    CvReport cv;
    Eigen::VectorXd means; // standardization of the final fit
    Eigen::VectorXd norms;
    bool converged = true;
    double insample_mse = 0.0;
    std::int64_t n = 0;

    double predict(const Eigen::VectorXd& x) const { return intercept + coefficients.dot(x); }
};

/// Merge of every fold except i — the training statistics for fold i.
/// Throws InsufficientDataError when the complement holds no rows.
SuffStats fold_complement(const FoldedStats& folds, int i);

/// Held-out mean squared prediction error directly from statistics:
///
///   ( y'y - 2a*sum_y - 2b'X'y + n*a^2 + 2a*b'sum_x + b'X'Xb ) / n
///
/// which is exactly ||y - a*1 - X*b||^2 / n on the held-out rows, no raw data
/// needed. Throws InsufficientDataError when the fold is empty.
double test_mse_from_stats(const SuffStats& test, double alpha, const Eigen::VectorXd& beta);
double test_mse_from_stats(const SuffStats& test, const FittedModel& model);

/// Map a standardized-scale solution back to the original scale:
/// beta_j = beta_std_j / d_j on active columns (zero on dropped ones) and
/// alpha = y_bar - means' beta (zero without an intercept).
std::pair<double, Eigen::VectorXd> back_transform(const Eigen::VectorXd& beta_std,
                                                  const StandardizedProblem& problem);

/// The cross-validation phase: one shared grid from the all-data correlations,
/// then per fold i — standardize the training complement, solve the path,
/// back-transform with the complement's scaling, score on fold i's raw-scale
/// statistics. lambda_opt minimizes the mean curve, ties to the larger lambda.
CvReport cross_validate(const FoldedStats& folds, const PenaltySpec& spec,
                        const SolveControl& control = {}, const TrainOptions& options = {});

/// Full training: cross-validate, refit on the merged folds at lambda_opt
/// (warm-started down the path), and return the model in the original scale.
/// Degenerate inputs (every column constant, or no correlation with the
/// response) fall back to the null model (y_bar, 0).
FittedModel train(const FoldedStats& folds, const PenaltySpec& spec,
                  const SolveControl& control = {}, const TrainOptions& options = {});

} // namespace gramnet
