#include "gramnet/standardize.hpp"

#include "gramnet/errors.hpp"

#include <cmath>
#include <string>

namespace gramnet {

StandardizedProblem standardize(const SuffStats& stats, bool intercept, double epsilon) {
    const Eigen::Index p = stats.dim();
    const std::int64_t min_n = intercept ? 2 : 1;
    if (stats.n < min_n) {
        throw InsufficientDataError("standardize needs at least " + std::to_string(min_n) +
                                    " rows, got " + std::to_string(stats.n));
    }

    StandardizedProblem out;
    out.p_full = p;
    out.n = stats.n;
    out.intercept = intercept;

    const double nd = static_cast<double>(stats.n);
    if (intercept) {
        out.means = stats.sum_x / nd;
        out.y_bar = stats.sum_y / nd;
        out.tss = stats.sum_yy - nd * out.y_bar * out.y_bar;
    } else {
        out.means = Eigen::VectorXd::Zero(p);
        out.y_bar = 0.0;
        out.tss = stats.sum_yy;
    }

    // Centered diagonal: sum(x_j^2) - n*mean_j^2, clamped at zero since the
    // subtraction can go slightly negative for near-constant columns.
    out.norms.resize(p);
    out.active.clear();
    out.dropped.clear();
    for (Eigen::Index j = 0; j < p; ++j) {
        const double raw_jj = stats.xtx(j, j);
        double cg_jj = intercept ? raw_jj - nd * out.means[j] * out.means[j] : raw_jj;
        if (cg_jj < 0.0) {
            cg_jj = 0.0;
        }
        const double d = std::sqrt(cg_jj);
        out.norms[j] = d;
        if (d <= epsilon * std::sqrt(raw_jj + 1.0)) {
            out.dropped.push_back(static_cast<int>(j));
        } else {
            out.active.push_back(static_cast<int>(j));
        }
    }
    if (out.active.empty()) {
        throw EmptyModelError("all " + std::to_string(p) + " columns are degenerate");
    }

    const Eigen::Index pa = out.p_active();
    out.g.resize(pa, pa);
    out.b.resize(pa);
    for (Eigen::Index a = 0; a < pa; ++a) {
        const Eigen::Index j = out.active[static_cast<std::size_t>(a)];
        const double dj = out.norms[j];
        out.b[a] = intercept ? (stats.xty[j] - nd * out.y_bar * out.means[j]) / dj
                             : stats.xty[j] / dj;
        for (Eigen::Index c = a; c < pa; ++c) {
            const Eigen::Index k = out.active[static_cast<std::size_t>(c)];
            const double cg = intercept ? stats.xtx(j, k) - nd * out.means[j] * out.means[k]
                                        : stats.xtx(j, k);
            const double v = cg / (dj * out.norms[k]);
            out.g(a, c) = v;
            out.g(c, a) = v; // symmetry enforced on write
        }
    }
    return out;
}

double loss_from_stats(const StandardizedProblem& problem, const Eigen::VectorXd& beta_std) {
    if (beta_std.size() != problem.p_active()) {
        throw IncompatibleError("coefficient vector has " + std::to_string(beta_std.size()) +
                                " entries, problem has " + std::to_string(problem.p_active()) +
                                " active columns");
    }
    return problem.tss - 2.0 * problem.b.dot(beta_std) +
           beta_std.dot(problem.g * beta_std);
}

} // namespace gramnet
