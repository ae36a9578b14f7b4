#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace gramnet {

/// One observation: p feature values and a scalar response, in the raw data scale.
struct Sample {
    Eigen::VectorXd x;
    double y = 0.0;
};

/// Additive sufficient statistics of a dataset:
///
///   n, sum(y), y'y, sum(x), X'y, X'X
///
/// Everything downstream (standardization, the penalized solve, cross-validation
/// scoring) is computed from these alone, so the raw rows are touched exactly once.
/// Sums are stored instead of means: sums add exactly, means are derived views.
///
/// X'X is kept as the packed upper triangle (row-major), which halves memory for
/// wide inputs; `xtx(i, j)` and `xtx_dense()` expose the symmetric view.
struct SuffStats {
    std::int64_t n = 0;
    double sum_y = 0.0;
    double sum_yy = 0.0;
    Eigen::VectorXd sum_x;
    Eigen::VectorXd xty;
    std::vector<double> xtx_upper; // size p*(p+1)/2

    SuffStats() = default;
    explicit SuffStats(Eigen::Index p)
        : sum_x(Eigen::VectorXd::Zero(p)),
          xty(Eigen::VectorXd::Zero(p)),
          xtx_upper(static_cast<std::size_t>(p) * (p + 1) / 2, 0.0) {}

    Eigen::Index dim() const { return sum_x.size(); }

    /// Packed index of the (i, j) entry, i <= j required.
    std::size_t packed_index(Eigen::Index i, Eigen::Index j) const {
        return static_cast<std::size_t>(i) * dim() - static_cast<std::size_t>(i) * (i - 1) / 2 +
               static_cast<std::size_t>(j - i);
    }

    /// Symmetric accessor into the packed triangle.
    double xtx(Eigen::Index i, Eigen::Index j) const {
        return i <= j ? xtx_upper[packed_index(i, j)] : xtx_upper[packed_index(j, i)];
    }

    Eigen::MatrixXd xtx_dense() const;

    double y_mean() const { return n > 0 ? sum_y / static_cast<double>(n) : 0.0; }
    Eigen::VectorXd x_mean() const {
        return n > 0 ? Eigen::VectorXd(sum_x / static_cast<double>(n))
                     : Eigen::VectorXd(Eigen::VectorXd::Zero(dim()));
    }

    /// Fold one raw sample into the accumulator. Assumes finite input of matching
    /// dimension; `stats_of_sample` is the checked entry point.
    void accumulate(const Eigen::VectorXd& x, double y);
};

/// Compensation buffers for Kahan-corrected accumulation over long streams.
struct KahanState {
    double sum_y = 0.0;
    double sum_yy = 0.0;
    Eigen::VectorXd sum_x;
    Eigen::VectorXd xty;
    std::vector<double> xtx_upper;

    explicit KahanState(Eigen::Index p)
        : sum_x(Eigen::VectorXd::Zero(p)),
          xty(Eigen::VectorXd::Zero(p)),
          xtx_upper(static_cast<std::size_t>(p) * (p + 1) / 2, 0.0) {}
};

/// Accumulate with per-component Kahan compensation. Off the default path; enabled
/// by IngestConfig::kahan.
void accumulate_kahan(SuffStats& stats, KahanState& comp, const Eigen::VectorXd& x, double y);

/// Statistics of a single sample: n = 1, sum_x = x, X'y = y*x, X'X = outer(x, x).
/// Throws NonFiniteError on NaN/Inf entries.
SuffStats stats_of_sample(const Sample& s);

/// Component-wise sum of two statistics over the same feature space.
/// Associative and commutative up to floating-point reassociation; merging with
/// an empty (n = 0) operand returns the other side unchanged.
/// Throws IncompatibleError on dimension mismatch.
SuffStats merge(const SuffStats& a, const SuffStats& b);

} // namespace gramnet
