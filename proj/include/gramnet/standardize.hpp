#pragma once

#include "gramnet/suffstats.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace gramnet {

/// The centered, unit-scaled Gram system the solver consumes, derived from raw
/// sufficient statistics without touching data rows.
///
/// With X = Xc * D + 1 * means' (Xc columns centered and scaled to unit 2-norm):
///
///   g   = Xc'Xc                 (diagonal 1, |g_ij| <= 1)
///   b   = Xc'(y - y_bar * 1)
///   tss = y'y - n * y_bar^2
///
/// Columns whose centered norm is degenerate are dropped from the active set;
/// `active` maps active positions back to original column indices.
struct StandardizedProblem {
    Eigen::Index p_full = 0;   // original feature count
    std::vector<int> active;   // active position -> original column
    std::vector<int> dropped;  // original columns excluded as degenerate
    Eigen::VectorXd means;     // size p_full; zero when intercept disabled
    Eigen::VectorXd norms;     // size p_full; centered column 2-norms (raw norms without intercept)
    double y_bar = 0.0;        // zero when intercept disabled
    Eigen::MatrixXd g;         // p_active x p_active
    Eigen::VectorXd b;         // p_active
    double tss = 0.0;
    std::int64_t n = 0;
    bool intercept = true;

    Eigen::Index p_active() const { return static_cast<Eigen::Index>(active.size()); }
};

/// Build the standardized Gram system from raw statistics.
///
/// With an intercept the columns are centered at their means and y at y_bar;
/// without one, centering is skipped (means and y_bar forced to zero) but
/// unit-norm scaling is kept, since scaling is a pure reparameterization while
/// centering without an intercept would change the model.
///
/// Column j is dropped when its scale d_j <= epsilon * sqrt(xtx_jj + 1).
///
/// Throws InsufficientDataError when n < 2 with intercept (n < 1 without), and
/// EmptyModelError when every column is degenerate.
StandardizedProblem standardize(const SuffStats& stats, bool intercept = true,
                                double epsilon = 1e-12);

/// Residual sum of squares around the centered fit, evaluated from statistics only:
///
///   tss - 2 b'beta + beta' g beta  ==  || y - y_bar*1 - Xc*beta ||^2
///
/// `beta_std` lives on the standardized scale and has p_active entries.
double loss_from_stats(const StandardizedProblem& problem, const Eigen::VectorXd& beta_std);

} // namespace gramnet
