#pragma once

#include "gramnet/standardize.hpp"

#include <Eigen/Dense>
#include <vector>

namespace gramnet {

enum class PenaltyFamily { Lasso, Ridge, ElasticNet };

/// Penalty family, mixing weight and lambda grid.
///
/// The objective is the unnormalized residual sum of squares plus the penalty,
///
///   || y - alpha*1 - X*beta ||^2 + lambda * (mix*|beta|_1 + (1-mix)*|beta|_2^2)
///
/// with mix = 1 for lasso and mix = 0 for ridge. Note the RSS is NOT divided by
/// n (or 2n) as some other implementations do, so lambda values scale with the
/// dataset size.
struct PenaltySpec {
    PenaltyFamily family = PenaltyFamily::Lasso;
    double mix = 1.0;             // lasso fraction in [0, 1]
    std::vector<double> lambdas;  // strictly descending; empty = generate
    int n_lambdas = 100;
    double lambda_min_ratio = 0.0; // 0 = auto: 1e-3, or 1e-2 when n < p

    static PenaltySpec lasso() { return {PenaltyFamily::Lasso, 1.0, {}, 100, 0.0}; }
    static PenaltySpec ridge() { return {PenaltyFamily::Ridge, 0.0, {}, 100, 0.0}; }
    static PenaltySpec elastic_net(double mix_weight) {
        return {PenaltyFamily::ElasticNet, mix_weight, {}, 100, 0.0};
    }

    /// Throws std::invalid_argument on mix/family mismatch or a bad grid.
    void validate() const;
};

/// Termination controls for the coordinate-descent solver.
struct SolveControl {
    int max_sweeps = 10000;
    double tol = 1e-9;      // max absolute coefficient update per sweep
    bool active_set = true; // iterate the nonzero set between full sweeps
};

/// A solve result on the standardized scale.
/// converged implies kkt_residual <= 10 * tol.
struct StdSolution {
    Eigen::VectorXd beta_std;
    double lambda = 0.0;
    int sweeps_used = 0;
    bool converged = false;
    bool faulted = false; // solver hit non-finite values; beta_std is the last warm start
    double kkt_residual = 0.0;
};

/// Penalty term of the objective. Zero for beta = 0 in every family.
double penalty_value(const PenaltySpec& spec, double lambda, const Eigen::VectorXd& beta);

/// Smallest lambda at which beta = 0 is optimal: 2 * max_j |b_j| / mix.
/// Requires mix > 0 (no finite lambda zeroes a pure-ridge fit); throws
/// DegenerateGridError when b == 0.
double lambda_max(const StandardizedProblem& problem, const PenaltySpec& spec);

/// The concrete descending grid: the user-supplied one validated, or n_lambdas
/// log-spaced values from lambda_max down to lambda_max * ratio. Pure ridge has
/// no lambda_max of its own, so its auto grid is generated from the lasso
/// lambda_max of the same correlations.
std::vector<double> make_lambda_grid(const StandardizedProblem& problem, const PenaltySpec& spec);

/// Cyclic coordinate descent with soft-thresholding over the Gram system:
///
///   beta_j <- S(2*(b_j - sum_{k != j} g_jk beta_k), lambda*mix)
///             / (2*g_jj + 2*lambda*(1-mix))
///
/// where S(z, t) = sign(z) * max(|z| - t, 0), with |z| = t resolving to zero.
/// Residual correlations are maintained from g and b only (covariance updates).
///
/// Declares convergence once the largest coefficient update in a sweep is at
/// most `tol` AND the largest subgradient violation is at most 10 * tol; the
/// violation is re-measured from a fresh matvec so drift in the running
/// correlations cannot mask it. Non-convergence is reported via the flag, not
/// an error. Throws SolverFault if the iterates go non-finite.
StdSolution coordinate_descent(const StandardizedProblem& problem, const PenaltySpec& spec,
                               double lambda, const Eigen::VectorXd& warm_start,
                               const SolveControl& control = {});

/// Cold-start overload (warm start at zero).
StdSolution coordinate_descent(const StandardizedProblem& problem, const PenaltySpec& spec,
                               double lambda, const SolveControl& control = {});

/// Solve the whole descending grid, warm-starting each lambda from the previous
/// solution. A solver fault at one lambda is recorded in that entry and the
/// remaining grid still runs.
std::vector<StdSolution> solve_path(const StandardizedProblem& problem, const PenaltySpec& spec,
                                    const SolveControl& control = {});

/// Exact ridge minimizer (g + lambda*I)^{-1} b via a dense symmetric solve.
/// Requires lambda > 0; throws SolverFault when the factorization fails.
Eigen::VectorXd ridge_closed_form(const StandardizedProblem& problem, double lambda);

} // namespace gramnet
