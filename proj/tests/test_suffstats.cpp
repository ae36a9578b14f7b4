#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gramnet/errors.hpp"
#include "gramnet/suffstats.hpp"

#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace gramnet;

namespace {

bool bit_equal(const SuffStats& a, const SuffStats& b) {
    if (a.n != b.n || a.sum_y != b.sum_y || a.sum_yy != b.sum_yy) {
        return false;
    }
    if (a.sum_x != b.sum_x || a.xty != b.xty) {
        return false;
    }
    return a.xtx_upper == b.xtx_upper;
}

} // namespace

TEST_CASE("single-sample statistics match the definitions") {
    const SuffStats s = stats_of_sample({Eigen::Vector2d(1.0, 2.0), 3.0});
    CHECK(s.n == 1);
    CHECK(s.sum_y == 3.0);
    CHECK(s.sum_yy == 9.0);
    CHECK(s.sum_x == Eigen::Vector2d(1.0, 2.0));
    CHECK(s.xty == Eigen::Vector2d(3.0, 6.0));
    CHECK(s.xtx(0, 0) == 1.0);
    CHECK(s.xtx(0, 1) == 2.0);
    CHECK(s.xtx(1, 0) == 2.0);
    CHECK(s.xtx(1, 1) == 4.0);
}

TEST_CASE("zero sample gives zero statistics with n = 1") {
    const SuffStats s = stats_of_sample({Eigen::Vector2d(0.0, 0.0), 0.0});
    CHECK(s.n == 1);
    CHECK(s.sum_y == 0.0);
    CHECK(s.sum_yy == 0.0);
    CHECK(s.sum_x.isZero(0.0));
    CHECK(s.xty.isZero(0.0));
    CHECK(s.xtx_dense().isZero(0.0));
}

TEST_CASE("one-dimensional sample") {
    Eigen::VectorXd x(1);
    x << 2.0;
    const SuffStats s = stats_of_sample({x, -1.0});
    CHECK(s.xtx(0, 0) == 4.0);
    CHECK(s.xty[0] == -2.0);
    CHECK(s.sum_yy == 1.0);
}

TEST_CASE("non-finite samples are rejected with the offending field") {
    Eigen::VectorXd x(3);
    x << 1.0, std::nan(""), 3.0;
    try {
        stats_of_sample({x, 0.0});
        FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
        CHECK(e.field == 1);
    }
    try {
        stats_of_sample({Eigen::Vector2d(1.0, 2.0), std::numeric_limits<double>::infinity()});
        FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
        CHECK(e.field == -1);
    }
}

TEST_CASE("merge with the empty statistics is bit-identical") {
    std::mt19937_64 rng(7);
    const auto data = testsup::random_dataset(rng, 17, 4, 2, 0.3);
    const SuffStats s = testsup::stats_of(data.X, data.y);
    const SuffStats zero(4);
    CHECK(bit_equal(merge(zero, s), s));
    CHECK(bit_equal(merge(s, zero), s));
}

TEST_CASE("merge of two samples equals the two-row statistics") {
    const Sample s1{Eigen::Vector2d(1.0, -2.0), 0.5};
    const Sample s2{Eigen::Vector2d(3.0, 0.25), -1.5};
    const SuffStats merged = merge(stats_of_sample(s1), stats_of_sample(s2));
    SuffStats direct(2);
    direct.accumulate(s1.x, s1.y);
    direct.accumulate(s2.x, s2.y);
    CHECK(bit_equal(merged, direct));
}

TEST_CASE("merge is commutative component-wise") {
    std::mt19937_64 rng(11);
    const auto d1 = testsup::random_dataset(rng, 9, 3, 3, 1.0);
    const auto d2 = testsup::random_dataset(rng, 13, 3, 3, 1.0);
    const SuffStats a = testsup::stats_of(d1.X, d1.y);
    const SuffStats b = testsup::stats_of(d2.X, d2.y);
    CHECK(bit_equal(merge(a, b), merge(b, a)));
}

TEST_CASE("merge rejects mismatched dimensions") {
    CHECK_THROWS_AS(merge(SuffStats(2), SuffStats(3)), IncompatibleError);
}

TEST_CASE("permuted accumulation matches within 1e-12 relative per component") {
    std::mt19937_64 rng(23);
    const auto data = testsup::random_dataset(rng, 60, 5, 3, 0.7);
    const SuffStats base = testsup::stats_of(data.X, data.y);

    std::vector<int> order(60);
    std::iota(order.begin(), order.end(), 0);
    for (int round = 0; round < 5; ++round) {
        std::shuffle(order.begin(), order.end(), rng);
        SuffStats perm(5);
        for (int i : order) {
            perm.accumulate(data.X.row(i).transpose(), data.y[i]);
        }
        CHECK(perm.n == base.n);
        CHECK(testsup::rel_diff(perm.sum_y, base.sum_y) <= 1e-12);
        CHECK(testsup::rel_diff(perm.sum_yy, base.sum_yy) <= 1e-12);
        for (int j = 0; j < 5; ++j) {
            CHECK(testsup::rel_diff(perm.sum_x[j], base.sum_x[j]) <= 1e-12);
            CHECK(testsup::rel_diff(perm.xty[j], base.xty[j]) <= 1e-12);
        }
        for (std::size_t t = 0; t < base.xtx_upper.size(); ++t) {
            CHECK(testsup::rel_diff(perm.xtx_upper[t], base.xtx_upper[t]) <= 1e-12);
        }
    }
}

TEST_CASE("the packed Gram accessor is symmetric by construction") {
    std::mt19937_64 rng(5);
    const auto data = testsup::random_dataset(rng, 20, 6, 4, 0.5);
    const SuffStats s = testsup::stats_of(data.X, data.y);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            CHECK(s.xtx(i, j) == s.xtx(j, i));
        }
    }
    const Eigen::MatrixXd dense = s.xtx_dense();
    CHECK(dense == dense.transpose());
}

TEST_CASE("compensated accumulation recovers low-order mass a plain sum loses") {
    SuffStats plain(1);
    SuffStats comp(1);
    KahanState state(1);
    Eigen::VectorXd x(1);
    x << 0.0;
    plain.accumulate(x, 1e16);
    accumulate_kahan(comp, state, x, 1e16);
    for (int i = 0; i < 8; ++i) {
        plain.accumulate(x, 1.0);
        accumulate_kahan(comp, state, x, 1.0);
    }
    CHECK(plain.sum_y == 1e16);      // each +1 falls below the spacing at 1e16
    CHECK(comp.sum_y == 1e16 + 8.0); // the compensation carries it
}

TEST_CASE("compensated and plain accumulation agree on ordinary data") {
    std::mt19937_64 rng(31);
    const auto data = testsup::random_dataset(rng, 200, 4, 2, 1.0);
    SuffStats plain(4);
    SuffStats comp(4);
    KahanState state(4);
    for (int i = 0; i < 200; ++i) {
        plain.accumulate(data.X.row(i).transpose(), data.y[i]);
        accumulate_kahan(comp, state, data.X.row(i).transpose(), data.y[i]);
    }
    CHECK(testsup::rel_diff(plain.sum_yy, comp.sum_yy) <= 1e-13);
    for (std::size_t t = 0; t < plain.xtx_upper.size(); ++t) {
        CHECK(testsup::rel_diff(plain.xtx_upper[t], comp.xtx_upper[t]) <= 1e-13);
    }
}
