#include "gramnet/suffstats.hpp"

#include "gramnet/errors.hpp"

#include <cmath>
#include <string>

namespace gramnet {

Eigen::MatrixXd SuffStats::xtx_dense() const {
    const Eigen::Index p = dim();
    Eigen::MatrixXd m(p, p);
    const double* t = xtx_upper.data();
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i; j < p; ++j) {
            m(i, j) = *t;
            m(j, i) = *t;
            ++t;
        }
    }
    return m;
}

void SuffStats::accumulate(const Eigen::VectorXd& x, double y) {
    n += 1;
    sum_y += y;
    sum_yy += y * y;
    sum_x += x;
    xty += y * x;
    double* t = xtx_upper.data();
    const Eigen::Index p = x.size();
    for (Eigen::Index i = 0; i < p; ++i) {
        const double xi = x[i];
        for (Eigen::Index j = i; j < p; ++j) {
            *t++ += xi * x[j];
        }
    }
}

namespace {

inline void kahan_add(double& target, double& comp, double value) {
    const double adjusted = value - comp;
    const double next = target + adjusted;
    comp = (next - target) - adjusted;
    target = next;
}

} // namespace

void accumulate_kahan(SuffStats& stats, KahanState& comp, const Eigen::VectorXd& x, double y) {
    stats.n += 1;
    kahan_add(stats.sum_y, comp.sum_y, y);
    kahan_add(stats.sum_yy, comp.sum_yy, y * y);
    const Eigen::Index p = x.size();
    for (Eigen::Index i = 0; i < p; ++i) {
        kahan_add(stats.sum_x[i], comp.sum_x[i], x[i]);
        kahan_add(stats.xty[i], comp.xty[i], y * x[i]);
    }
    double* t = stats.xtx_upper.data();
    double* c = comp.xtx_upper.data();
    for (Eigen::Index i = 0; i < p; ++i) {
        const double xi = x[i];
        for (Eigen::Index j = i; j < p; ++j, ++t, ++c) {
            kahan_add(*t, *c, xi * x[j]);
        }
    }
}

SuffStats stats_of_sample(const Sample& s) {
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i])) {
            throw NonFiniteError("non-finite feature value at index " + std::to_string(i),
                                 static_cast<int>(i));
        }
    }
    if (!std::isfinite(s.y)) {
        throw NonFiniteError("non-finite response value", -1);
    }
    SuffStats out(s.x.size());
    out.accumulate(s.x, s.y);
    return out;
}

SuffStats merge(const SuffStats& a, const SuffStats& b) {
    if (a.n == 0 && a.dim() == 0) {
        return b;
    }
    if (b.n == 0 && b.dim() == 0) {
        return a;
    }
    if (a.dim() != b.dim()) {
        throw IncompatibleError("cannot merge statistics of dimension " +
                                std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
    }
    // n = 0 implies all-zero fields, so returning the other side is exact and
    // keeps merge(a, zero) bit-identical to a.
    if (a.n == 0) {
        return b;
    }
    if (b.n == 0) {
        return a;
    }
    SuffStats out(a.dim());
    out.n = a.n + b.n;
    out.sum_y = a.sum_y + b.sum_y;
    out.sum_yy = a.sum_yy + b.sum_yy;
    out.sum_x = a.sum_x + b.sum_x;
    out.xty = a.xty + b.xty;
    for (std::size_t i = 0; i < out.xtx_upper.size(); ++i) {
        out.xtx_upper[i] = a.xtx_upper[i] + b.xtx_upper[i];
    }
    return out;
}

} // namespace gramnet
