#include "depthkit/gradcheck_suite.hpp"

#include "depthkit/losses.hpp"
#include "depthkit/network.hpp"

namespace dk {

namespace {

constexpr double kH = 1e-5;
constexpr double kTol = 1e-4;

TensorD rand_t(Shape s, std::uint64_t seed, double lo, double hi, bool rg = true) {
    Rng rng(seed);
    TensorD t(s, rg);
    for (auto& v : t.raw()) v = rng.uniform(lo, hi);
    return t;
}

// single-input op checked through a smooth scalar readout
GradcheckCase unary_case(const std::string& name, Shape s, double lo, double hi,
                         std::function<TensorD(const TensorD&)> op) {
    return {name, false, [=]() {
                auto x = rand_t(s, 0xABC0 + std::hash<std::string>{}(name), lo, hi);
                std::vector<TensorD> in{x};
                return gradcheck([op, x]() { return mean_all(op(x)); }, in, kH, kTol);
            }};
}

}  // namespace

std::vector<GradcheckCase> gradcheck_registry() {
    std::vector<GradcheckCase> cases;

    cases.push_back({"conv2d", false, []() {
        auto x = rand_t({2, 3, 6, 6}, 1, -1, 1);
        auto k = rand_t({4, 3, 3, 3}, 2, -0.9, 0.9);
        auto b = rand_t({1, 4, 1, 1}, 3, -0.3, 0.3);
        std::vector<TensorD> in{x, k, b};
        return gradcheck(
            [=]() { return mean_all(sigmoid(conv2d(x, k, b, {2, 2}, {1, 1}))); }, in, kH, kTol);
    }});

    cases.push_back({"asymmetric_conv_pair", false, []() {
        auto x = rand_t({1, 2, 5, 5}, 4, -1, 1);
        auto kr = rand_t({3, 2, 1, 5}, 5, -0.8, 0.8);
        auto br = rand_t({1, 3, 1, 1}, 6, -0.2, 0.2);
        auto kc = rand_t({2, 3, 5, 1}, 7, -0.8, 0.8);
        auto bc = rand_t({1, 2, 1, 1}, 8, -0.2, 0.2);
        std::vector<TensorD> in{x, kr, br, kc, bc};
        return gradcheck(
            [=]() { return mean_all(asymmetric_conv_pair(x, kr, br, kc, bc)); }, in, kH, kTol);
    }});

    // pool-max inputs are drawn continuous, so window ties have measure zero
    cases.push_back(unary_case("pool2d_max", {2, 2, 6, 6}, -1, 1,
                               [](const TensorD& x) { return pool2d(x, PoolKind::max, 2, 2); }));
    cases.push_back(unary_case("pool2d_avg", {2, 2, 6, 6}, -1, 1,
                               [](const TensorD& x) { return pool2d(x, PoolKind::avg, 3, 1); }));
    cases.push_back(unary_case("upsample2x_nearest", {1, 2, 4, 4}, -1, 1, [](const TensorD& x) {
        return upsample2x(x, UpsampleMode::nearest);
    }));
    cases.push_back(unary_case("upsample2x_bilinear", {1, 2, 4, 4}, -1, 1, [](const TensorD& x) {
        return upsample2x(x, UpsampleMode::bilinear);
    }));

    cases.push_back({"concat_channels", false, []() {
        auto a = rand_t({1, 2, 4, 4}, 9, -1, 1);
        auto b = rand_t({1, 3, 4, 4}, 10, -1, 1);
        std::vector<TensorD> in{a, b};
        return gradcheck([=]() { return mean_all(mul(concat_channels(a, b), concat_channels(a, b))); },
                         in, kH, kTol);
    }});

    cases.push_back(unary_case("slice_batch", {3, 2, 4, 4}, -1, 1,
                               [](const TensorD& x) { return slice_batch(x, 1); }));

    // activation inputs stay clear of the origin kinks
    cases.push_back(unary_case("relu", {1, 1, 6, 6}, 0.1, 1.0,
                               [](const TensorD& x) { return relu(x); }));
    cases.push_back(unary_case("leaky_relu", {1, 1, 6, 6}, -1.0, -0.1,
                               [](const TensorD& x) { return leaky_relu(x, 0.2); }));
    cases.push_back(unary_case("sigmoid", {1, 1, 6, 6}, -2, 2,
                               [](const TensorD& x) { return sigmoid(x); }));
    cases.push_back(unary_case("abs", {1, 1, 6, 6}, 0.2, 1.0,
                               [](const TensorD& x) { return abs_t(x); }));

    cases.push_back({"add", false, []() {
        auto a = rand_t({1, 1, 4, 4}, 11, -1, 1);
        auto b = rand_t({1, 1, 4, 4}, 12, -1, 1);
        std::vector<TensorD> in{a, b};
        return gradcheck([=]() { return mean_all(mul(add(a, b), add(a, b))); }, in, kH, kTol);
    }});
    cases.push_back({"sub", false, []() {
        auto a = rand_t({1, 1, 4, 4}, 13, -1, 1);
        auto b = rand_t({1, 1, 4, 4}, 14, -1, 1);
        std::vector<TensorD> in{a, b};
        return gradcheck([=]() { return mean_all(mul(sub(a, b), sub(a, b))); }, in, kH, kTol);
    }});
    cases.push_back({"mul", false, []() {
        auto a = rand_t({1, 1, 4, 4}, 15, 0.2, 1.2);
        auto b = rand_t({1, 1, 4, 4}, 16, 0.2, 1.2);
        std::vector<TensorD> in{a, b};
        return gradcheck([=]() { return mean_all(mul(a, b)); }, in, kH, kTol);
    }});
    cases.push_back({"div", false, []() {
        auto a = rand_t({1, 1, 4, 4}, 17, 0.2, 1.2);
        auto b = rand_t({1, 1, 4, 4}, 18, 0.5, 1.5);
        std::vector<TensorD> in{a, b};
        return gradcheck([=]() { return mean_all(divt(a, b)); }, in, kH, kTol);
    }});
    cases.push_back(unary_case("add_scalar", {1, 1, 4, 4}, -1, 1, [](const TensorD& x) {
        return mul(add_scalar(x, 0.7), add_scalar(x, 0.7));
    }));
    cases.push_back(unary_case("mul_scalar", {1, 1, 4, 4}, -1, 1, [](const TensorD& x) {
        return mul(mul_scalar(x, 1.7), mul_scalar(x, -0.3));
    }));
    cases.push_back(unary_case("sub_bscalar", {1, 1, 4, 4}, -1, 1, [](const TensorD& x) {
        auto m = mean_all(x);
        return mul(sub_bscalar(x, m), sub_bscalar(x, m));
    }));
    cases.push_back(unary_case("sum_all", {1, 1, 4, 4}, -1, 1, [](const TensorD& x) {
        return mul(sum_all(x), sum_all(x));
    }));
    cases.push_back(unary_case("mean_all", {1, 1, 4, 4}, -1, 1, [](const TensorD& x) {
        return mul(mean_all(x), mean_all(x));
    }));
    cases.push_back(unary_case("forward_diff_x", {1, 1, 5, 5}, -1, 1, [](const TensorD& x) {
        return mul(forward_diff_x(x), forward_diff_x(x));
    }));
    cases.push_back(unary_case("forward_diff_y", {1, 1, 5, 5}, -1, 1, [](const TensorD& x) {
        return mul(forward_diff_y(x), forward_diff_y(x));
    }));

    // losses against a fixed target, gradients flowing through the prediction
    auto loss_case = [](const std::string& name,
                        std::function<TensorD(const TensorD&, const TensorD&)> op) {
        return GradcheckCase{name, false, [=]() {
            auto y = rand_t({2, 1, 8, 8}, 19, 0.1, 0.9, false);
            auto p = rand_t({2, 1, 8, 8}, 20, 0.1, 0.9);
            std::vector<TensorD> in{p};
            return gradcheck([=]() { return op(y, p); }, in, kH, kTol);
        }};
    };
    cases.push_back(loss_case("depth_loss", [](const TensorD& y, const TensorD& p) {
        return depth_loss(y, p);
    }));
    cases.push_back(loss_case("gradient_edge_loss", [](const TensorD& y, const TensorD& p) {
        return gradient_edge_loss(y, p);
    }));
    cases.push_back(loss_case("ssim", [](const TensorD& y, const TensorD& p) {
        return ssim(y, p, kSsimC1, kSsimC2);
    }));
    cases.push_back(loss_case("ssim_loss", [](const TensorD& y, const TensorD& p) {
        return ssim_loss(y, p);
    }));
    cases.push_back(loss_case("composite_loss", [](const TensorD& y, const TensorD& p) {
        return composite_loss(y, p, {0.7, 0.9, 0.8}).total;
    }));

    // End-to-end: desk model parameters against the full training loss.
    // Seeds are pinned to keep every sampled activation away from the
    // relu/|.|/max kinks, which central differences cannot straddle.
    cases.push_back({"model_end_to_end", false, []() {
        Model<double> model(ModelConfig::desk(32, 32), 2);
        auto x = rand_t({1, 3, 32, 32}, 21, 0.0, 1.0, false);
        auto y = rand_t({1, 1, 16, 16}, 22, 0.1, 0.9, false);
        std::vector<TensorD> params;
        for (auto& p : model.parameters()) params.push_back(p.tensor);
        return gradcheck(
            [&model, x, y]() { return composite_loss(y, model.forward(x), {1, 1, 1}).total; },
            params, kH, kTol, /*coords_per_input=*/3, /*seed=*/100);
    }});

    // sabotage: the recorded gradient is double the true one
    cases.push_back({"negative_control", true, []() {
        auto x = rand_t({1, 1, 4, 4}, 23, -1, 1);
        std::vector<TensorD> in{x};
        auto bad_sum = [x]() {
            double acc = 0;
            for (double v : x.data()) acc += v;
            TensorD out = TensorD::from({1, 1, 1, 1}, {acc});
            out.ptr()->is_leaf = false;
            if (auto* t = Tape<double>::current()) {
                out.ptr()->enable_grad();
                Tape<double>::Node n;
                n.op = "sabotaged_sum";
                n.inputs = {x.ptr()};
                n.output = out.ptr();
                n.backward = [xs = x.ptr(), os = out.ptr()]() {
                    for (auto& g : xs->grad) g += 2.0 * os->grad[0];
                };
                t->record(std::move(n));
            }
            return out;
        };
        return gradcheck(bad_sum, in, kH, kTol);
    }});

    return cases;
}

std::vector<GradcheckOutcome> run_gradcheck_suite() {
    std::vector<GradcheckOutcome> rows;
    for (const auto& c : gradcheck_registry()) {
        GradcheckOutcome row;
        row.name = c.name;
        row.expected_fail = c.expect_fail;
        const GradcheckReport rep = c.run();
        row.max_rel_err = rep.max_rel_err;
        row.coords = rep.coords_checked;
        row.ok = c.expect_fail ? !rep.pass : rep.pass;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace dk
