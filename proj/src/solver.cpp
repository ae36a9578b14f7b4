#include "gramnet/solver.hpp"

#include "gramnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace gramnet {

namespace {

double effective_mix(const PenaltySpec& spec) {
    switch (spec.family) {
    case PenaltyFamily::Lasso:
        return 1.0;
    case PenaltyFamily::Ridge:
        return 0.0;
    case PenaltyFamily::ElasticNet:
        return spec.mix;
    }
    return 1.0;
}

// |z| == t resolves to zero (strict inequality), which keeps sparsity deterministic.
inline double soft_threshold(double z, double t) {
    if (z > t) {
        return z - t;
    }
    if (z < -t) {
        return z + t;
    }
    return 0.0;
}

// Largest violation of the stationarity conditions at beta, measured from a
// fresh grad = b - g*beta. For beta_j != 0 the condition is an equality,
//   2*grad_j - 2*lambda*(1-mix)*beta_j = lambda*mix*sign(beta_j);
// for beta_j == 0 it is the subgradient box |2*grad_j| <= lambda*mix.
double kkt_violation(const StandardizedProblem& problem, const Eigen::VectorXd& beta,
                     double lambda, double mix, Eigen::VectorXd& grad) {
    grad = problem.b - problem.g * beta;
    const double l1 = lambda * mix;
    const double l2 = 2.0 * lambda * (1.0 - mix);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        double v;
        if (beta[j] != 0.0) {
            v = std::abs(2.0 * grad[j] - l2 * beta[j] - l1 * (beta[j] > 0.0 ? 1.0 : -1.0));
        } else {
            v = std::max(0.0, std::abs(2.0 * grad[j]) - l1);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

} // namespace

void PenaltySpec::validate() const {
    if (!(mix >= 0.0 && mix <= 1.0)) {
        throw std::invalid_argument("mix must lie in [0, 1]");
    }
    if (family == PenaltyFamily::Lasso && mix != 1.0) {
        throw std::invalid_argument("lasso requires mix = 1");
    }
    if (family == PenaltyFamily::Ridge && mix != 0.0) {
        throw std::invalid_argument("ridge requires mix = 0");
    }
    if (n_lambdas < 1) {
        throw std::invalid_argument("n_lambdas must be >= 1");
    }
    if (lambda_min_ratio < 0.0 || lambda_min_ratio >= 1.0) {
        throw std::invalid_argument("lambda_min_ratio must lie in [0, 1)");
    }
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] >= 0.0) || !std::isfinite(lambdas[i])) {
            throw std::invalid_argument("lambdas must be finite and non-negative");
        }
        if (i > 0 && !(lambdas[i] < lambdas[i - 1])) {
            throw std::invalid_argument("lambdas must be strictly descending");
        }
    }
}

double penalty_value(const PenaltySpec& spec, double lambda, const Eigen::VectorXd& beta) {
    const double mix = effective_mix(spec);
    double l1 = 0.0;
    double l2 = 0.0;
    if (mix > 0.0) {
        l1 = beta.lpNorm<1>();
    }
    if (mix < 1.0) {
        l2 = beta.squaredNorm();
    }
    return lambda * (mix * l1 + (1.0 - mix) * l2);
}

double lambda_max(const StandardizedProblem& problem, const PenaltySpec& spec) {
    const double mix = effective_mix(spec);
    if (mix <= 0.0) {
        throw std::invalid_argument(
            "pure ridge has no finite lambda that zeroes the fit; supply a grid "
            "or generate one from the lasso lambda_max");
    }
    const double top = problem.b.size() > 0 ? problem.b.cwiseAbs().maxCoeff() : 0.0;
    if (top == 0.0) {
        throw DegenerateGridError("all feature/response correlations are zero; lambda_max = 0");
    }
    return 2.0 * top / mix;
}

std::vector<double> make_lambda_grid(const StandardizedProblem& problem, const PenaltySpec& spec) {
    spec.validate();
    if (!spec.lambdas.empty()) {
        return spec.lambdas;
    }
    PenaltySpec top_spec = spec;
    if (effective_mix(spec) <= 0.0) {
        // Ridge: anchor the grid at the lasso lambda_max of the same correlations.
        top_spec = PenaltySpec::lasso();
    }
    const double top = lambda_max(problem, top_spec);
    double ratio = spec.lambda_min_ratio;
    if (ratio == 0.0) {
        ratio = problem.n < problem.p_active() ? 1e-2 : 1e-3;
    }
    std::vector<double> grid(static_cast<std::size_t>(spec.n_lambdas));
    grid[0] = top;
    if (spec.n_lambdas > 1) {
        const double step = std::log(ratio) / (spec.n_lambdas - 1);
        for (int i = 1; i < spec.n_lambdas; ++i) {
            grid[static_cast<std::size_t>(i)] = top * std::exp(step * i);
        }
    }
    return grid;
}

StdSolution coordinate_descent(const StandardizedProblem& problem, const PenaltySpec& spec,
                               double lambda, const Eigen::VectorXd& warm_start,
                               const SolveControl& control) {
    spec.validate();
    if (lambda < 0.0 || !std::isfinite(lambda)) {
        throw std::invalid_argument("lambda must be finite and non-negative");
    }
    if (control.max_sweeps < 1 || !(control.tol > 0.0)) {
        throw std::invalid_argument("max_sweeps must be >= 1 and tol > 0");
    }
    const Eigen::Index p = problem.p_active();
    if (warm_start.size() != p) {
        throw IncompatibleError("warm start has " + std::to_string(warm_start.size()) +
                                " entries, problem has " + std::to_string(p));
    }

    const double mix = effective_mix(spec);
    const double l1 = lambda * mix;
    const double l2 = 2.0 * lambda * (1.0 - mix);

    StdSolution sol;
    sol.lambda = lambda;
    sol.beta_std = warm_start;
    Eigen::VectorXd& beta = sol.beta_std;
    Eigen::VectorXd grad = problem.b - problem.g * beta;

    const auto update_coord = [&](Eigen::Index j) -> double {
        const double old = beta[j];
        const double gjj = problem.g(j, j);
        const double denom = 2.0 * gjj + l2;
        if (denom <= 0.0) {
            return 0.0; // column carries no curvature; leave the coefficient alone
        }
        const double z = 2.0 * (grad[j] + gjj * old);
        const double next = soft_threshold(z, l1) / denom;
        const double delta = next - old;
        if (delta != 0.0) {
            beta[j] = next;
            grad.noalias() -= problem.g.col(j) * delta;
        }
        return std::abs(delta);
    };

    double last_kkt = std::numeric_limits<double>::infinity();
    int stalled_checks = 0;
    while (sol.sweeps_used < control.max_sweeps) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            max_change = std::max(max_change, update_coord(j));
        }
        ++sol.sweeps_used;
        if (!std::isfinite(max_change) || !beta.allFinite()) {
            throw SolverFault("coordinate descent produced non-finite coefficients at lambda = " +
                              std::to_string(lambda));
        }

        if (control.active_set && max_change > control.tol) {
            // Iterate the nonzero set until it settles, then fall through to the
            // next full sweep, which re-checks every coordinate.
            std::vector<Eigen::Index> nz;
            nz.reserve(static_cast<std::size_t>(p));
            for (Eigen::Index j = 0; j < p; ++j) {
                if (beta[j] != 0.0) {
                    nz.push_back(j);
                }
            }
            while (sol.sweeps_used < control.max_sweeps) {
                double inner_change = 0.0;
                for (Eigen::Index j : nz) {
                    inner_change = std::max(inner_change, update_coord(j));
                }
                ++sol.sweeps_used;
                if (inner_change <= control.tol) {
                    break;
                }
            }
            continue;
        }

        if (max_change <= control.tol) {
            // The running grad drifts by accumulated round-off; measure the
            // subgradient violation from a fresh matvec before declaring done.
            const double kkt = kkt_violation(problem, beta, lambda, mix, grad);
            sol.kkt_residual = kkt;
            if (kkt <= 10.0 * control.tol) {
                sol.converged = true;
                return sol;
            }
            // Not there yet: grad is now exact again, keep sweeping unless the
            // violation has stopped improving (float-limited problem).
            if (kkt >= last_kkt * (1.0 - 1e-3)) {
                if (++stalled_checks >= 2) {
                    return sol;
                }
            } else {
                stalled_checks = 0;
            }
            last_kkt = kkt;
        }
    }
    sol.kkt_residual = kkt_violation(problem, beta, lambda, mix, grad);
    sol.converged = false;
    return sol;
}

StdSolution coordinate_descent(const StandardizedProblem& problem, const PenaltySpec& spec,
                               double lambda, const SolveControl& control) {
    return coordinate_descent(problem, spec, lambda,
                              Eigen::VectorXd::Zero(problem.p_active()), control);
}

std::vector<StdSolution> solve_path(const StandardizedProblem& problem, const PenaltySpec& spec,
                                    const SolveControl& control) {
    const std::vector<double> grid = make_lambda_grid(problem, spec);
    std::vector<StdSolution> path;
    path.reserve(grid.size());
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(problem.p_active());
    for (double lambda : grid) {
        try {
            path.push_back(coordinate_descent(problem, spec, lambda, warm, control));
            warm = path.back().beta_std;
        } catch (const SolverFault&) {
            StdSolution bad;
            bad.lambda = lambda;
            bad.beta_std = warm;
            bad.faulted = true;
            bad.kkt_residual = std::numeric_limits<double>::infinity();
            path.push_back(std::move(bad));
        }
    }
    return path;
}

Eigen::VectorXd ridge_closed_form(const StandardizedProblem& problem, double lambda) {
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("ridge_closed_form requires lambda > 0");
    }
    Eigen::MatrixXd a = problem.g;
    a.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success) {
        throw SolverFault("ridge system factorization failed at lambda = " +
                          std::to_string(lambda));
    }
    Eigen::VectorXd beta = ldlt.solve(problem.b);
    if (!beta.allFinite()) {
        throw SolverFault("ridge solve produced non-finite coefficients at lambda = " +
                          std::to_string(lambda));
    }
    return beta;
}

} // namespace gramnet
