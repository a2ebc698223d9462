#include <doctest.h>

#include <cmath>

#include "depthkit/losses.hpp"
#include "oracles.hpp"

using namespace dk;

namespace {

TensorD map2d(int h, int w, std::vector<double> v) {
    return TensorD::from({1, 1, h, w}, std::move(v));
}

TensorD random_map(Shape s, Rng& rng, double lo = 0.05, double hi = 0.95) {
    TensorD t(s);
    for (auto& v : t.raw()) v = rng.uniform(lo, hi);
    return t;
}

std::vector<double> to_vec(const TensorD& t) {
    return {t.data().begin(), t.data().end()};
}

}  // namespace

TEST_CASE("depth_loss: zero at identity, forced arithmetic, oracle equality") {
    auto y = map2d(1, 2, {0.5, 0.5});
    CHECK(depth_loss(y, y).scalar() == 0.0);

    auto yh = map2d(1, 2, {0.25, 0.75});
    CHECK(depth_loss(y, yh).scalar() == doctest::Approx(0.25).epsilon(1e-14));

    Rng rng(101);
    auto a = random_map({1, 1, 16, 16}, rng);
    auto b = random_map({1, 1, 16, 16}, rng);
    CHECK(std::abs(depth_loss(a, b).scalar() - oracle::depth_loss(to_vec(a), to_vec(b))) < 1e-12);

    CHECK_THROWS_AS(depth_loss(a, map2d(1, 2, {0, 0})), DimError);
}

TEST_CASE("gradient_edge_loss: constants, worked 2x2 case, symmetry, oracle") {
    auto c1 = TensorD::full({1, 1, 4, 4}, 0.3);
    auto c2 = TensorD::full({1, 1, 4, 4}, 0.8);
    CHECK(gradient_edge_loss(c1, c2).scalar() == 0.0);

    // y=[[0,1],[0,1]] vs 0: |dgx|=1 on the left column, border column is 0
    auto y = map2d(2, 2, {0, 1, 0, 1});
    auto z = TensorD({1, 1, 2, 2});
    CHECK(gradient_edge_loss(y, z).scalar() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(gradient_edge_loss(z, y).scalar() ==
          doctest::Approx(gradient_edge_loss(y, z).scalar()));

    Rng rng(102);
    auto a = random_map({1, 1, 12, 9}, rng);
    auto b = random_map({1, 1, 12, 9}, rng);
    CHECK(std::abs(gradient_edge_loss(a, b).scalar() -
                   oracle::grad_edge_loss(to_vec(a), to_vec(b), 12, 9)) < 1e-12);

    CHECK_THROWS_AS(gradient_edge_loss(map2d(1, 1, {1}), map2d(1, 1, {1})), DimError);
}

TEST_CASE("ssim: identity gives 1, constant-images closed form, symmetry") {
    Rng rng(103);
    auto y = random_map({1, 1, 8, 8}, rng);
    CHECK(ssim(y, y, 1e-4, 9e-4).scalar() == doctest::Approx(1.0).epsilon(1e-12));

    // y=0, yhat=1: means 0 and 1, variances and covariance vanish:
    // ssim = (0 + c1)(0 + c2) / ((0 + 1 + c1)(0 + c2)) = c1/(1 + c1)
    auto zeros = TensorD({1, 1, 8, 8});
    auto ones = TensorD::full({1, 1, 8, 8}, 1.0);
    const double c1 = 1e-4;
    const double expect = c1 / (1.0 + c1);
    CHECK(ssim(zeros, ones, c1, 9e-4).scalar() == doctest::Approx(expect).epsilon(1e-12));

    auto b = random_map({1, 1, 8, 8}, rng);
    CHECK(ssim(y, b, 1e-4, 9e-4).scalar() == doctest::Approx(ssim(b, y, 1e-4, 9e-4).scalar()));

    // matches the loop oracle
    CHECK(std::abs(ssim(y, b, 1e-4, 9e-4).scalar() -
                   oracle::ssim_global(to_vec(y), to_vec(b), 1e-4, 9e-4)) < 1e-12);

    CHECK_THROWS_AS(ssim(y, b, 0.0, 9e-4), ValueError);
}

TEST_CASE("ssim over a batch averages per-image indices") {
    Rng rng(104);
    auto y = random_map({3, 1, 6, 6}, rng);
    auto p = random_map({3, 1, 6, 6}, rng);
    double want = 0.0;
    for (int i = 0; i < 3; ++i) {
        std::vector<double> yi, pi;
        for (int j = 0; j < 36; ++j) {
            yi.push_back(y.at(i, 0, j / 6, j % 6));
            pi.push_back(p.at(i, 0, j / 6, j % 6));
        }
        want += oracle::ssim_global(yi, pi, kSsimC1, kSsimC2);
    }
    want /= 3.0;
    CHECK(ssim(y, p, kSsimC1, kSsimC2).scalar() == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("ssim_loss: endpoints and identity") {
    Rng rng(105);
    auto y = random_map({1, 1, 8, 8}, rng);
    CHECK(ssim_loss(y, y).scalar() == doctest::Approx(0.0).epsilon(1e-12));

    // anti-correlated zero-mean pair scaled into range pushes ssim to -1
    TensorD a({1, 1, 2, 2});
    TensorD b({1, 1, 2, 2});
    a.raw()[0] = 1.0; a.raw()[1] = 0.0; a.raw()[2] = 1.0; a.raw()[3] = 0.0;
    b.raw()[0] = 0.0; b.raw()[1] = 1.0; b.raw()[2] = 0.0; b.raw()[3] = 1.0;
    const double s = ssim(a, b, 1e-9, 1e-9).scalar();
    CHECK(s == doctest::Approx(-1.0).epsilon(1e-6));
    const double sl = (1.0 - s) / 2.0;
    CHECK(sl == doctest::Approx(1.0).epsilon(1e-6));

    // constant-images case from the ssim test
    auto zeros = TensorD({1, 1, 8, 8});
    auto ones = TensorD::full({1, 1, 8, 8}, 1.0);
    const double si = ssim(zeros, ones, kSsimC1, kSsimC2).scalar();
    CHECK(ssim_loss(zeros, ones).scalar() == doctest::Approx((1.0 - si) / 2.0).epsilon(1e-12));
}

TEST_CASE("composite_loss: masking, identity at y=yhat, weight linearity") {
    Rng rng(106);
    auto y = random_map({1, 1, 8, 8}, rng);
    auto p = random_map({1, 1, 8, 8}, rng);

    auto at_identity = composite_loss(y, y, {1, 1, 1}).values();
    CHECK(at_identity.total == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(at_identity.depth == 0.0);
    CHECK(at_identity.grad == 0.0);
    CHECK(at_identity.ssim == doctest::Approx(0.0).epsilon(1e-12));

    auto only_depth = composite_loss(y, p, {1, 0, 0});
    CHECK(only_depth.values().total == doctest::Approx(depth_loss(y, p).scalar()).epsilon(1e-14));

    CHECK_THROWS_AS(composite_loss(y, p, {0, 0, 0}), ValueError);

    // evaluating at the unit weight vectors recombines to any weighted total
    const double d = composite_loss(y, p, {1, 0, 0}).values().total;
    const double g = composite_loss(y, p, {0, 1, 0}).values().total;
    const double s = composite_loss(y, p, {0, 0, 1}).values().total;
    for (auto [w1, w2, w3] : {std::array<double, 3>{0.3, 0.7, 0.1},
                              std::array<double, 3>{1, 1, 1},
                              std::array<double, 3>{0.5, 0.0, 1.0}}) {
        auto bd = composite_loss(y, p, {w1, w2, w3}).values();
        CHECK(std::abs(bd.total - (w1 * d + w2 * g + w3 * s)) < 1e-12);
        CHECK(std::abs(bd.total - (w1 * bd.depth + w2 * bd.grad + w3 * bd.ssim)) < 1e-12);
    }
}

TEST_CASE("losses are invariant under simultaneous horizontal flip") {
    Rng rng(107);
    auto y = random_map({1, 1, 8, 8}, rng);
    auto p = random_map({1, 1, 8, 8}, rng);
    auto flip = [](const TensorD& t) {
        const Shape s = t.shape();
        TensorD out(s);
        for (int r = 0; r < s.h; ++r)
            for (int c = 0; c < s.w; ++c)
                out.raw()[static_cast<std::size_t>(r) * s.w + c] =
                    t.data()[static_cast<std::size_t>(r) * s.w + (s.w - 1 - c)];
        return out;
    };
    auto yf = flip(y), pf = flip(p);
    CHECK(depth_loss(yf, pf).scalar() == doctest::Approx(depth_loss(y, p).scalar()).epsilon(1e-12));
    CHECK(gradient_edge_loss(yf, pf).scalar() ==
          doctest::Approx(gradient_edge_loss(y, p).scalar()).epsilon(1e-12));
}

TEST_CASE("composite loss gradient matches finite differences") {
    Rng rng(108);
    // no exact ties so the |.| kinks stay unvisited
    TensorD y({1, 1, 8, 8});
    TensorD p({1, 1, 8, 8}, true);
    for (auto& v : y.raw()) v = rng.uniform(0.1, 0.9);
    for (auto& v : p.raw()) v = rng.uniform(0.1, 0.9);

    std::vector<TensorD> inputs{p};
    auto rep = gradcheck(
        [&]() { return composite_loss(y, p, {0.6, 0.9, 0.8}).total; }, inputs, 1e-5, 1e-4);
    CHECK(rep.pass);

    // each component individually
    for (int which = 0; which < 3; ++which) {
        auto repc = gradcheck(
            [&]() {
                if (which == 0) return depth_loss(y, p);
                if (which == 1) return gradient_edge_loss(y, p);
                return ssim_loss(y, p);
            },
            inputs, 1e-5, 1e-4);
        CHECK(repc.pass);
    }
}

TEST_CASE("loss components are nonnegative and ssim_loss stays in [0,1]") {
    Rng rng(109);
    for (int trial = 0; trial < 50; ++trial) {
        auto y = random_map({1, 1, 8, 8}, rng, 0.0, 1.0);
        auto p = random_map({1, 1, 8, 8}, rng, 0.0, 1.0);
        CHECK(depth_loss(y, p).scalar() >= 0.0);
        CHECK(gradient_edge_loss(y, p).scalar() >= 0.0);
        const double sl = ssim_loss(y, p).scalar();
        CHECK(sl >= 0.0);
        CHECK(sl <= 1.0);
    }
}
