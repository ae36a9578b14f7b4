#pragma once

// Transparent in-memory reference for the statistics-only pipeline. It keeps
// the raw rows, materializes each fold's training submatrix explicitly,
// standardizes from the rows, runs the same coordinate-descent solver on the
// explicitly computed Gram system, back-transforms with explicit arithmetic
// and scores every held-out row directly. Nothing flows through SuffStats, so
// agreement checks the whole aggregation path end to end. The lambda grid is
// an input, shared with the pipeline under test.

#include "gramnet/ingest.hpp"
#include "gramnet/solver.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace testref {

struct ReferenceResult {
    std::vector<double> lambdas;
    Eigen::VectorXd mean_mse;
    double lambda_opt = 0.0;
    int lambda_opt_index = -1;
    double intercept = 0.0;
    Eigen::VectorXd coefficients;
};

namespace detail {

struct ExplicitStd {
    Eigen::MatrixXd xs;  // centered, unit-norm columns (active only)
    Eigen::VectorXd yc;  // centered response
    Eigen::VectorXd means;
    Eigen::VectorXd norms;
    std::vector<int> active;
    double y_bar = 0.0;
};

inline ExplicitStd standardize_rows(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    bool intercept, double epsilon = 1e-12) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    ExplicitStd out;
    out.means = intercept ? Eigen::VectorXd(X.colwise().mean())
                          : Eigen::VectorXd(Eigen::VectorXd::Zero(p));
    out.y_bar = intercept ? y.mean() : 0.0;
    out.yc = y.array() - out.y_bar;
    out.norms.resize(p);
    Eigen::MatrixXd centered(n, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        centered.col(j) = X.col(j).array() - out.means[j];
        out.norms[j] = centered.col(j).norm();
        const double raw_ss = X.col(j).squaredNorm();
        if (out.norms[j] > epsilon * std::sqrt(raw_ss + 1.0)) {
            out.active.push_back(static_cast<int>(j));
        }
    }
    out.xs.resize(n, static_cast<Eigen::Index>(out.active.size()));
    for (std::size_t a = 0; a < out.active.size(); ++a) {
        const int j = out.active[a];
        out.xs.col(static_cast<Eigen::Index>(a)) = centered.col(j) / out.norms[j];
    }
    return out;
}

// Fit one training matrix over the grid and return original-scale (alpha, beta)
// per lambda.
inline std::vector<std::pair<double, Eigen::VectorXd>>
fit_rows(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<double>& grid,
         const gramnet::PenaltySpec& spec, const gramnet::SolveControl& control,
         bool intercept) {
    const ExplicitStd std_data = standardize_rows(X, y, intercept);

    gramnet::StandardizedProblem problem;
    problem.p_full = X.cols();
    problem.active = std_data.active;
    problem.means = std_data.means;
    problem.norms = std_data.norms;
    problem.y_bar = std_data.y_bar;
    problem.g = std_data.xs.transpose() * std_data.xs;
    problem.b = std_data.xs.transpose() * std_data.yc;
    problem.tss = std_data.yc.squaredNorm();
    problem.n = X.rows();
    problem.intercept = intercept;

    gramnet::PenaltySpec grid_spec = spec;
    grid_spec.lambdas = grid;
    const std::vector<gramnet::StdSolution> path = gramnet::solve_path(problem, grid_spec, control);

    std::vector<std::pair<double, Eigen::VectorXd>> fits;
    fits.reserve(path.size());
    for (const gramnet::StdSolution& sol : path) {
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
        for (std::size_t a = 0; a < std_data.active.size(); ++a) {
            const int j = std_data.active[a];
            beta[j] = sol.beta_std[static_cast<Eigen::Index>(a)] / std_data.norms[j];
        }
        const double alpha = intercept ? std_data.y_bar - std_data.means.dot(beta) : 0.0;
        fits.emplace_back(alpha, std::move(beta));
    }
    return fits;
}

} // namespace detail

inline ReferenceResult reference_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k,
                                     std::uint64_t seed, const std::vector<double>& grid,
                                     const gramnet::PenaltySpec& spec,
                                     const gramnet::SolveControl& control = {},
                                     bool intercept = true) {
    const Eigen::Index n = X.rows();
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        fold_of[static_cast<std::size_t>(i)] =
            gramnet::assign_fold(static_cast<std::uint64_t>(i), seed, k);
    }

    const auto n_lambdas = static_cast<Eigen::Index>(grid.size());
    Eigen::VectorXd mse_sum = Eigen::VectorXd::Zero(n_lambdas);
    int folds_used = 0;
    for (int fold = 0; fold < k; ++fold) {
        std::vector<Eigen::Index> train_rows;
        std::vector<Eigen::Index> test_rows;
        for (Eigen::Index i = 0; i < n; ++i) {
            (fold_of[static_cast<std::size_t>(i)] == fold ? test_rows : train_rows).push_back(i);
        }
        if (test_rows.empty()) {
            continue;
        }
        Eigen::MatrixXd x_train(static_cast<Eigen::Index>(train_rows.size()), X.cols());
        Eigen::VectorXd y_train(static_cast<Eigen::Index>(train_rows.size()));
        for (std::size_t r = 0; r < train_rows.size(); ++r) {
            x_train.row(static_cast<Eigen::Index>(r)) = X.row(train_rows[r]);
            y_train[static_cast<Eigen::Index>(r)] = y[train_rows[r]];
        }
        const auto fits = detail::fit_rows(x_train, y_train, grid, spec, control, intercept);
        for (Eigen::Index l = 0; l < n_lambdas; ++l) {
            const auto& [alpha, beta] = fits[static_cast<std::size_t>(l)];
            double se = 0.0;
            for (Eigen::Index i : test_rows) {
                const double r = y[i] - alpha - X.row(i).dot(beta);
                se += r * r;
            }
            mse_sum[l] += se / static_cast<double>(test_rows.size());
        }
        ++folds_used;
    }

    ReferenceResult result;
    result.lambdas = grid;
    result.mean_mse = mse_sum / static_cast<double>(folds_used);
    for (Eigen::Index l = 0; l < n_lambdas; ++l) {
        if (result.lambda_opt_index < 0 ||
            result.mean_mse[l] < result.mean_mse[result.lambda_opt_index]) {
            result.lambda_opt_index = static_cast<int>(l); // ties stay at the larger lambda
        }
    }
    result.lambda_opt = grid[static_cast<std::size_t>(result.lambda_opt_index)];

    // Final fit on all rows, warm-started down the grid to lambda_opt.
    const std::vector<double> head(grid.begin(),
                                   grid.begin() + result.lambda_opt_index + 1);
    const auto fits = detail::fit_rows(X, y, head, spec, control, intercept);
    result.intercept = fits.back().first;
    result.coefficients = fits.back().second;
    return result;
}

} // namespace testref
