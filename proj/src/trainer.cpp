#include "gramnet/trainer.hpp"

#include "gramnet/errors.hpp"
#include "gramnet/parallel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace gramnet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

} // namespace

SuffStats fold_complement(const FoldedStats& folds, int i) {
    if (i < 0 || i >= folds.k()) {
        throw std::out_of_range("fold index " + std::to_string(i) + " out of range for k = " +
                                std::to_string(folds.k()));
    }
    SuffStats out(folds.p());
    for (int j = 0; j < folds.k(); ++j) {
        if (j != i) {
            out = merge(out, folds.folds[static_cast<std::size_t>(j)]);
        }
    }
    if (out.n == 0) {
        throw InsufficientDataError("complement of fold " + std::to_string(i) + " holds no rows");
    }
    return out;
}

double test_mse_from_stats(const SuffStats& test, double alpha, const Eigen::VectorXd& beta) {
    if (test.n < 1) {
        throw InsufficientDataError("cannot score an empty fold");
    }
    if (beta.size() != test.dim()) {
        throw IncompatibleError("coefficient vector has " + std::to_string(beta.size()) +
                                " entries, fold statistics have " + std::to_string(test.dim()));
    }
    const double nd = static_cast<double>(test.n);
    // beta' X'X beta straight off the packed triangle.
    double quad = 0.0;
    const double* t = test.xtx_upper.data();
    const Eigen::Index p = test.dim();
    for (Eigen::Index i = 0; i < p; ++i) {
        quad += beta[i] * beta[i] * (*t++);
        for (Eigen::Index j = i + 1; j < p; ++j) {
            quad += 2.0 * beta[i] * beta[j] * (*t++);
        }
    }
    const double sse = test.sum_yy - 2.0 * alpha * test.sum_y - 2.0 * beta.dot(test.xty) +
                       nd * alpha * alpha + 2.0 * alpha * beta.dot(test.sum_x) + quad;
    return sse / nd;
}

double test_mse_from_stats(const SuffStats& test, const FittedModel& model) {
    return test_mse_from_stats(test, model.intercept, model.coefficients);
}

std::pair<double, Eigen::VectorXd> back_transform(const Eigen::VectorXd& beta_std,
                                                  const StandardizedProblem& problem) {
    if (beta_std.size() != problem.p_active()) {
        throw IncompatibleError("standardized coefficients have " +
                                std::to_string(beta_std.size()) + " entries, expected " +
                                std::to_string(problem.p_active()));
    }
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(problem.p_full);
    for (Eigen::Index a = 0; a < beta_std.size(); ++a) {
        const int j = problem.active[static_cast<std::size_t>(a)];
        beta[j] = beta_std[a] / problem.norms[j];
    }
    const double alpha = problem.intercept ? problem.y_bar - problem.means.dot(beta) : 0.0;
    return {alpha, std::move(beta)};
}

namespace {

struct ResolvedGrid {
    std::vector<double> grid;
    bool degenerate = false; // auto grid impossible: no usable signal in the data
};

// Shared grid anchored at the all-data correlations. When the data cannot
// anchor one (every column constant, or zero correlation with the response)
// and the user gave no grid, fall back to the single point lambda = 0 -- the
// fit is the null model at every lambda anyway.
ResolvedGrid resolve_grid(const SuffStats& all, const PenaltySpec& spec,
                          const TrainOptions& options) {
    ResolvedGrid out;
    if (!spec.lambdas.empty()) {
        spec.validate();
        out.grid = spec.lambdas;
        return out;
    }
    try {
        const StandardizedProblem problem = standardize(all, options.intercept, options.epsilon);
        out.grid = make_lambda_grid(problem, spec);
    } catch (const EmptyModelError&) {
        out.grid = {0.0};
        out.degenerate = true;
    } catch (const DegenerateGridError&) {
        out.grid = {0.0};
        out.degenerate = true;
    }
    return out;
}

CvReport cv_with_grid(const FoldedStats& folds, const std::vector<double>& grid,
                      const PenaltySpec& spec, const SolveControl& control,
                      const TrainOptions& options) {
    const int k = folds.k();
    const auto n_lambdas = static_cast<Eigen::Index>(grid.size());
    int nonempty = 0;
    for (const SuffStats& fold : folds.folds) {
        nonempty += fold.n > 0 ? 1 : 0;
    }
    if (nonempty < 2) {
        throw InsufficientDataError("cross-validation needs at least 2 non-empty folds, got " +
                                    std::to_string(nonempty));
    }

    CvReport report;
    report.lambdas = grid;
    report.fold_mse = Eigen::MatrixXd::Constant(k, n_lambdas, kNaN);
    report.fold_sizes.resize(static_cast<std::size_t>(k));
    std::vector<std::int64_t> fold_skipped(static_cast<std::size_t>(k), 0);

    PenaltySpec fold_spec = spec;
    fold_spec.lambdas = grid;

    parallel_for_index(static_cast<std::size_t>(k), options.threads, [&](std::size_t i) {
        const SuffStats& test = folds.folds[i];
        report.fold_sizes[i] = test.n;
        if (test.n == 0) {
            return; // empty fold: recorded via fold_sizes, excluded from the mean
        }
        SuffStats complement;
        StandardizedProblem problem;
        bool null_fold = false;
        try {
            complement = fold_complement(folds, static_cast<int>(i));
            problem = standardize(complement, options.intercept, options.epsilon);
        } catch (const EmptyModelError&) {
            null_fold = true; // training columns all degenerate: the fit is (y_bar, 0)
        } catch (const InsufficientDataError&) {
            fold_skipped[i] += n_lambdas;
            return;
        }
        if (null_fold) {
            const double alpha = options.intercept ? complement.y_mean() : 0.0;
            const Eigen::VectorXd zero = Eigen::VectorXd::Zero(folds.p());
            const double mse = test_mse_from_stats(test, alpha, zero);
            report.fold_mse.row(static_cast<Eigen::Index>(i)).setConstant(mse);
            return;
        }
        const std::vector<StdSolution> path = solve_path(problem, fold_spec, control);
        for (Eigen::Index l = 0; l < n_lambdas; ++l) {
            const StdSolution& sol = path[static_cast<std::size_t>(l)];
            if (sol.faulted || !sol.converged) {
                ++fold_skipped[i];
                continue;
            }
            const auto [alpha, beta] = back_transform(sol.beta_std, problem);
            report.fold_mse(static_cast<Eigen::Index>(i), l) = test_mse_from_stats(test, alpha, beta);
        }
    });

    // Average each lambda over the valid cells of the folds in the mean set.
    const int mean_k = options.skip_last_fold ? k - 1 : k;
    report.mean_mse.resize(n_lambdas);
    for (Eigen::Index l = 0; l < n_lambdas; ++l) {
        double sum = 0.0;
        int count = 0;
        for (int i = 0; i < mean_k; ++i) {
            const double cell = report.fold_mse(i, l);
            if (report.fold_sizes[static_cast<std::size_t>(i)] > 0 && std::isfinite(cell)) {
                sum += cell;
                ++count;
            }
        }
        report.mean_mse[l] = count > 0 ? sum / count : kNaN;
    }

    int best = -1;
    for (Eigen::Index l = 0; l < n_lambdas; ++l) {
        if (std::isfinite(report.mean_mse[l]) &&
            (best < 0 || report.mean_mse[l] < report.mean_mse[best])) {
            best = static_cast<int>(l); // strict < keeps ties at the larger lambda
        }
    }
    if (best < 0) {
        throw SolverFault("cross-validation produced no usable cells");
    }
    report.lambda_opt_index = best;
    report.lambda_opt = grid[static_cast<std::size_t>(best)];
    for (std::int64_t s : fold_skipped) {
        report.skipped_cells += s;
    }
    return report;
}

} // namespace

CvReport cross_validate(const FoldedStats& folds, const PenaltySpec& spec,
                        const SolveControl& control, const TrainOptions& options) {
    SuffStats all(folds.p());
    for (const SuffStats& fold : folds.folds) {
        all = merge(all, fold);
    }
    const ResolvedGrid grid = resolve_grid(all, spec, options);
    return cv_with_grid(folds, grid.grid, spec, control, options);
}

FittedModel train(const FoldedStats& folds, const PenaltySpec& spec, const SolveControl& control,
                  const TrainOptions& options) {
    const Eigen::Index p = folds.p();
    SuffStats all(p);
    for (const SuffStats& fold : folds.folds) {
        all = merge(all, fold);
    }
    SuffStats fit_stats = all;
    if (options.skip_last_fold) {
        fit_stats = SuffStats(p);
        for (int i = 0; i + 1 < folds.k(); ++i) {
            fit_stats = merge(fit_stats, folds.folds[static_cast<std::size_t>(i)]);
        }
    }

    const ResolvedGrid grid = resolve_grid(all, spec, options);
    const CvReport cv = cv_with_grid(folds, grid.grid, spec, control, options);

    FittedModel model;
    model.penalty = spec;
    model.cv = cv;
    model.lambda_opt = cv.lambda_opt;
    model.n = fit_stats.n;

    try {
        const StandardizedProblem problem =
            standardize(fit_stats, options.intercept, options.epsilon);
        // Warm-start down the grid to lambda_opt instead of cold-starting there.
        PenaltySpec final_spec = spec;
        final_spec.lambdas.assign(grid.grid.begin(),
                                  grid.grid.begin() + cv.lambda_opt_index + 1);
        const std::vector<StdSolution> path = solve_path(problem, final_spec, control);
        const StdSolution& sol = path.back();
        if (sol.faulted) {
            throw SolverFault("final solve failed at lambda_opt = " +
                              std::to_string(cv.lambda_opt));
        }
        auto [alpha, beta] = back_transform(sol.beta_std, problem);
        model.intercept = alpha;
        model.coefficients = std::move(beta);
        model.converged = sol.converged;
        model.means = problem.means;
        model.norms = problem.norms;
    } catch (const EmptyModelError&) {
        model.intercept = options.intercept ? fit_stats.y_mean() : 0.0;
        model.coefficients = Eigen::VectorXd::Zero(p);
        model.converged = true;
        model.means = options.intercept ? fit_stats.x_mean() : Eigen::VectorXd::Zero(p);
        model.norms = Eigen::VectorXd::Zero(p);
    }
    model.insample_mse = test_mse_from_stats(fit_stats, model.intercept, model.coefficients);
    return model;
}

} // namespace gramnet
