#include <doctest.h>

#include <cmath>

#include "depthkit/common.hpp"
#include "depthkit/metrics.hpp"
#include "oracles.hpp"

using namespace dk;

namespace {

std::vector<double> random_positive(std::size_t n, Rng& rng, double lo = 0.1, double hi = 2.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

}  // namespace

TEST_CASE("rmse: identity, two-element case, Jensen vs MAE") {
    std::vector<double> y{1.0, 2.0, 3.0};
    CHECK(rmse(y, y) == 0.0);

    std::vector<double> a{0.0, 0.0}, b{3.0, 4.0};
    CHECK(rmse(a, b) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-14));

    Rng rng(201);
    auto u = random_positive(64, rng);
    auto v = random_positive(64, rng);
    double mae = 0;
    for (std::size_t i = 0; i < u.size(); ++i) mae += std::abs(u[i] - v[i]);
    mae /= static_cast<double>(u.size());
    CHECK(rmse(u, v) >= mae);

    CHECK_THROWS_AS(rmse(a, y), DimError);
}

TEST_CASE("log10_error: one decade, identity, oracle, domain error") {
    std::vector<double> y{10.0}, p{1.0};
    CHECK(log10_error(y, p) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(log10_error(y, y) == 0.0);

    Rng rng(202);
    auto u = random_positive(128, rng);
    auto v = random_positive(128, rng);
    double acc = 0;
    for (std::size_t i = 0; i < u.size(); ++i)
        acc += std::abs(std::log10(u[i]) - std::log10(v[i]));
    CHECK(log10_error(u, v) == doctest::Approx(acc / 128.0).epsilon(1e-14));

    std::vector<double> bad{1.0, -0.5};
    try {
        log10_error(bad, std::vector<double>{1.0, 1.0});
        FAIL("expected ValueError");
    } catch (const ValueError& e) {
        CHECK(std::string(e.what()).find("pixel 1") != std::string::npos);
    }
}

TEST_CASE("abs_rel_error: halves, identity, scale invariance") {
    std::vector<double> y{2.0}, p{1.0};
    CHECK(abs_rel_error(y, p) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(abs_rel_error(y, y) == 0.0);

    Rng rng(203);
    auto u = random_positive(64, rng);
    auto v = random_positive(64, rng);
    auto scale = [](std::vector<double> a, double k) {
        for (auto& x : a) x *= k;
        return a;
    };
    CHECK(abs_rel_error(scale(u, 3.7), scale(v, 3.7)) ==
          doctest::Approx(abs_rel_error(u, v)).epsilon(1e-12));

    std::vector<double> zeroed{1.0, 0.0};
    CHECK_THROWS_AS(abs_rel_error(zeroed, std::vector<double>{1.0, 1.0}), ValueError);
}

TEST_CASE("delta_accuracy: identity, hand-enumerated thresholds, symmetry") {
    std::vector<double> y{1.0, 2.0};
    auto d = delta_accuracy(y, y);
    CHECK(d.d1 == 1.0);
    CHECK(d.d2 == 1.0);
    CHECK(d.d3 == 1.0);

    // ratios {1.2, 2.0}: 1.2 passes all thresholds, 2.0 > 1.25^3 = 1.953125
    std::vector<double> a{1.0, 1.0}, b{1.2, 2.0};
    auto e = delta_accuracy(a, b);
    CHECK(e.d1 == 0.5);
    CHECK(e.d2 == 0.5);
    CHECK(e.d3 == 0.5);

    auto es = delta_accuracy(b, a);
    CHECK(es.d1 == e.d1);
    CHECK(es.d2 == e.d2);
    CHECK(es.d3 == e.d3);
}

TEST_CASE("delta thresholds are strict") {
    // ratio exactly 1.25 must not count
    std::vector<double> y{1.0}, p{1.25};
    auto d = delta_accuracy(y, p);
    CHECK(d.d1 == 0.0);
    CHECK(d.d2 == 1.0);
}

TEST_CASE("r_squared: perfect fit, mean predictor, oracle, constant input") {
    Rng rng(204);
    auto y = random_positive(64, rng);
    CHECK(r_squared(y, y) == doctest::Approx(1.0));

    double mean = 0;
    for (double v : y) mean += v;
    mean /= 64.0;
    std::vector<double> mp(64, mean);
    CHECK(r_squared(y, mp) == doctest::Approx(0.0).epsilon(1e-12));

    auto p = random_positive(64, rng);
    CHECK(r_squared(y, p) == doctest::Approx(oracle::metrics_bruteforce(y, p).r2).epsilon(1e-12));

    std::vector<double> c(64, 0.5);
    CHECK_THROWS_AS(r_squared(c, p), ValueError);
}

TEST_CASE("report: perfect pair, pooling equivalence, randomized oracle equality") {
    Rng rng(205);
    auto y = random_positive(64, rng);
    auto perfect = report({y}, {y});
    CHECK(perfect.rmse == 0.0);
    CHECK(perfect.are == 0.0);
    CHECK(perfect.log10 == 0.0);
    CHECK(perfect.delta1 == 1.0);
    CHECK(perfect.r2 == 1.0);
    CHECK(perfect.n_pixels == 64);

    // two images vs their concatenation as a single image
    auto y2 = random_positive(64, rng);
    auto p1 = random_positive(64, rng);
    auto p2 = random_positive(64, rng);
    auto two = report({y, y2}, {p1, p2});
    std::vector<double> ycat(y), pcat(p1);
    ycat.insert(ycat.end(), y2.begin(), y2.end());
    pcat.insert(pcat.end(), p2.begin(), p2.end());
    auto one = report({ycat}, {pcat});
    CHECK(two.rmse == doctest::Approx(one.rmse).epsilon(1e-15));
    CHECK(two.are == doctest::Approx(one.are).epsilon(1e-15));
    CHECK(two.log10 == doctest::Approx(one.log10).epsilon(1e-15));
    CHECK(two.delta1 == one.delta1);
    CHECK(two.r2 == doctest::Approx(one.r2).epsilon(1e-15));

    // 100 random 8x8 pairs against the brute-force oracle
    std::vector<std::vector<double>> ys, ps;
    std::vector<double> ally, allp;
    for (int i = 0; i < 100; ++i) {
        ys.push_back(random_positive(64, rng));
        ps.push_back(random_positive(64, rng));
        ally.insert(ally.end(), ys.back().begin(), ys.back().end());
        allp.insert(allp.end(), ps.back().begin(), ps.back().end());
    }
    auto rep = report(ys, ps);
    auto ref = oracle::metrics_bruteforce(ally, allp);
    CHECK(std::abs(rep.are - ref.are) < 1e-12);
    CHECK(std::abs(rep.rmse - ref.rmse) < 1e-12);
    CHECK(std::abs(rep.log10 - ref.log10) < 1e-12);
    CHECK(rep.delta1 == ref.d1);
    CHECK(rep.delta2 == ref.d2);
    CHECK(rep.delta3 == ref.d3);
    CHECK(std::abs(rep.r2 - ref.r2) < 1e-12);

    CHECK_THROWS_AS(report({}, {}), ValueError);
}

TEST_CASE("delta nesting and flip invariance hold on random instances") {
    Rng rng(206);
    for (int t = 0; t < 30; ++t) {
        auto y = random_positive(49, rng);
        auto p = random_positive(49, rng);
        auto d = delta_accuracy(y, p);
        CHECK(d.d1 <= d.d2);
        CHECK(d.d2 <= d.d3);

        auto flip = [](std::vector<double> v) {
            std::vector<double> out(v.rbegin(), v.rend());
            return out;
        };
        auto yf = flip(y), pf = flip(p);
        CHECK(rmse(yf, pf) == doctest::Approx(rmse(y, p)).epsilon(1e-15));
        CHECK(abs_rel_error(yf, pf) == doctest::Approx(abs_rel_error(y, p)).epsilon(1e-15));
        auto df = delta_accuracy(yf, pf);
        CHECK(df.d1 == d.d1);
    }
}
