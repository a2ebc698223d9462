#include <doctest.h>

#include <cmath>

#include "depthkit/optim.hpp"

using namespace dk;

namespace {

std::vector<NamedParam<float>> single_param(float value, float grad) {
    TensorF t({1, 1, 1, 1}, true);
    t.raw()[0] = value;
    t.grad_raw()[0] = grad;
    return {{"theta", t}};
}

}  // namespace

TEST_CASE("adam_step: zero gradient leaves parameters unchanged") {
    auto params = single_param(1.0f, 0.0f);
    auto state = AdamState<float>::init(params, {1e-4, 0.9, 0.999, 1e-8});
    adam_step(params, state);
    CHECK(params[0].tensor.data()[0] == 1.0f);
    CHECK(state.t == 1);
}

TEST_CASE("adam_step: first step moves by about -lr (bias corrections cancel)") {
    auto params = single_param(1.0f, 2.0f);
    auto state = AdamState<float>::init(params, {1e-4, 0.9, 0.999, 1e-8});
    adam_step(params, state);
    // m_hat = g, sqrt(v_max/bc2) = |g|, so the step is -lr * g/(|g|+eps') ~ -lr
    CHECK(params[0].tensor.data()[0] == doctest::Approx(1.0 - 1e-4).epsilon(1e-6));
}

TEST_CASE("adam_step: v_max retains the larger second moment") {
    auto params = single_param(1.0f, 2.0f);
    auto state = AdamState<float>::init(params, {1e-4, 0.9, 0.999, 1e-8});
    adam_step(params, state);
    const float vmax_after_big = state.slots[0].vmax[0];
    CHECK(vmax_after_big == doctest::Approx((1.0 - 0.999) * 4.0).epsilon(1e-6));

    for (int i = 0; i < 5; ++i) {
        params[0].tensor.grad_raw()[0] = 0.0f;
        adam_step(params, state);
        CHECK(state.slots[0].vmax[0] >= vmax_after_big);  // running max never decreases
    }
    // v decays once the large gradients stop; vmax keeps the spike
    CHECK(state.slots[0].v[0] < state.slots[0].vmax[0]);
    CHECK(state.slots[0].vmax[0] == vmax_after_big);
}

TEST_CASE("adam_step: v_max is elementwise nondecreasing over random steps") {
    TensorF t({1, 1, 2, 2}, true);
    std::vector<NamedParam<float>> params{{"p", t}};
    auto state = AdamState<float>::init(params, {1e-3, 0.9, 0.999, 1e-8});
    Rng rng(77);
    std::vector<float> prev(4, 0.f);
    for (int step = 0; step < 50; ++step) {
        for (int j = 0; j < 4; ++j)
            t.grad_raw()[j] = static_cast<float>(rng.uniform(-2.0, 2.0));
        adam_step(params, state);
        for (int j = 0; j < 4; ++j) {
            CHECK(state.slots[0].vmax[j] >= prev[j]);
            prev[j] = state.slots[0].vmax[j];
        }
    }
}

TEST_CASE("adam_step: non-finite gradient names the parameter") {
    auto params = single_param(1.0f, std::numeric_limits<float>::quiet_NaN());
    auto state = AdamState<float>::init(params, {1e-4, 0.9, 0.999, 1e-8});
    try {
        adam_step(params, state);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("theta") != std::string::npos);
    }
}

TEST_CASE("train: config invariants reject bad values") {
    TrainConfig cfg;
    cfg.iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), ValueError);
    cfg.iterations = 1;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ValueError);
    cfg.batch_size = 1;
    cfg.lr = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ValueError);
    cfg.lr = 0.0;
    cfg.validate();  // lr = 0 is the no-op training boundary
}

TEST_CASE("train: lr=0 leaves parameters bit-identical") {
    auto data = synth_dataset(3, 8, 32, 32, 3);
    Model<float> model(ModelConfig::desk(32, 32), 5);
    std::vector<std::vector<float>> before;
    for (const auto& p : model.parameters())
        before.emplace_back(p.tensor.data().begin(), p.tensor.data().end());

    TrainConfig cfg;
    cfg.lr = 0.0;
    cfg.iterations = 3;
    cfg.batch_size = 4;
    cfg.seed = 1;
    train(model, data, cfg);

    const auto& params = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto now = params[i].tensor.data();
        for (std::size_t j = 0; j < now.size(); ++j) CHECK(now[j] == before[i][j]);
    }
}

TEST_CASE("train: loss history is recorded and reproducible for a fixed seed") {
    auto data = synth_dataset(11, 12, 32, 32, 3);
    TrainConfig cfg;
    cfg.iterations = 5;
    cfg.batch_size = 4;
    cfg.seed = 42;

    Model<float> m1(ModelConfig::desk(32, 32), 9);
    Model<float> m2(ModelConfig::desk(32, 32), 9);
    auto r1 = train(m1, data, cfg);
    auto r2 = train(m2, data, cfg);
    REQUIRE(r1.history.size() == 5);
    for (std::size_t i = 0; i < r1.history.size(); ++i) {
        CHECK(r1.history[i].total == r2.history[i].total);
        CHECK(r1.history[i].depth == r2.history[i].depth);
        CHECK(r1.history[i].grad == r2.history[i].grad);
        CHECK(r1.history[i].ssim == r2.history[i].ssim);
        CHECK(std::abs(r1.history[i].total -
                       (r1.history[i].depth + r1.history[i].grad + r1.history[i].ssim)) < 1e-12);
    }

    // the two trained models agree parameter-for-parameter
    for (std::size_t i = 0; i < m1.parameters().size(); ++i) {
        auto a = m1.parameters()[i].tensor.data();
        auto b = m2.parameters()[i].tensor.data();
        for (std::size_t j = 0; j < a.size(); ++j) CHECK(a[j] == b[j]);
    }
}

TEST_CASE("train: rejects mismatched datasets and empty data") {
    Model<float> model(ModelConfig::desk(32, 32), 2);
    TrainConfig cfg;
    cfg.iterations = 1;
    CHECK_THROWS_AS(train(model, {}, cfg), ValueError);
    auto wrong = synth_dataset(1, 2, 64, 64, 2);
    CHECK_THROWS_AS(train(model, wrong, cfg), DimError);
}

TEST_CASE("evaluate: perfect-oracle predictions give zero errors and delta 1") {
    // inject yhat := y by evaluating metrics on the sample's own depth;
    // exercised through the library by a model-free report call plus the
    // evaluate purity check below
    auto data = synth_dataset(21, 4, 32, 32, 3);
    std::vector<std::vector<double>> ys;
    for (const auto& s : data) {
        std::vector<double> v;
        for (float x : s.depth.data()) v.push_back(x + kMetricFloor);
        ys.push_back(std::move(v));
    }
    auto rep = report(ys, ys);
    CHECK(rep.rmse == 0.0);
    CHECK(rep.are == 0.0);
    CHECK(rep.delta1 == 1.0);
    CHECK(rep.delta2 == 1.0);
    CHECK(rep.delta3 == 1.0);
    CHECK(rep.r2 == 1.0);
}

TEST_CASE("evaluate: matches a by-hand constant-predictor computation") {
    auto data = synth_dataset(23, 3, 32, 32, 2);
    Model<float> model(ModelConfig::desk(32, 32), 3);
    // zero the head so the model predicts exactly 0.5 everywhere
    for (auto& p : model.parameters())
        if (p.name == "dec.head.w" || p.name == "dec.head.b")
            for (auto& v : p.tensor.raw()) v = 0.f;

    auto res = evaluate(model, data, {1, 1, 1});
    std::vector<std::vector<double>> ys, ps;
    for (const auto& s : data) {
        std::vector<double> y;
        for (float x : s.depth.data()) y.push_back(x + kMetricFloor);
        ys.push_back(y);
        ps.emplace_back(y.size(), 0.5 + kMetricFloor);
    }
    auto want = report(ys, ps);
    CHECK(res.metrics.rmse == doctest::Approx(want.rmse).epsilon(1e-12));
    CHECK(res.metrics.are == doctest::Approx(want.are).epsilon(1e-12));
    CHECK(res.metrics.delta1 == doctest::Approx(want.delta1));
    CHECK(res.seconds_per_sample > 0.0);

    // purity: repeated evaluation returns identical reports
    auto res2 = evaluate(model, data, {1, 1, 1});
    CHECK(res.metrics.rmse == res2.metrics.rmse);
    CHECK(res.metrics.r2 == res2.metrics.r2);
    CHECK(res.mean_loss.total == res2.mean_loss.total);

    CHECK_THROWS_AS(evaluate(model, {}, LossWeights{1, 1, 1}), ValueError);
}

TEST_CASE("evaluate: de-normalizes through the sample depth range when present") {
    auto data = synth_dataset(29, 2, 32, 32, 2);
    for (auto& s : data) s.depth_range = DepthRange{0.5, 10.0};
    Model<float> model(ModelConfig::desk(32, 32), 4);
    auto res = evaluate(model, data, {1, 1, 1});
    CHECK(std::isfinite(res.metrics.rmse));
    // ARE is scale-sensitive through the affine shift, so the report must
    // differ from the floored-normalized one
    for (auto& s : data) s.depth_range.reset();
    auto res2 = evaluate(model, data, {1, 1, 1});
    CHECK(res.metrics.rmse != res2.metrics.rmse);
}

TEST_CASE("tune_weights: constant evaluator keeps (1,1,1)") {
    int calls = 0;
    auto res = tune_weights(
        [&](const LossWeights&) {
            ++calls;
            return 3.0;
        },
        0.1, 0.1);
    CHECK(res.best.w1 == 1.0);
    CHECK(res.best.w2 == 1.0);
    CHECK(res.best.w3 == 1.0);
    CHECK(res.best_score == 3.0);
    CHECK(res.passes == 1);
    CHECK(calls == static_cast<int>(res.trace.size()));
}

TEST_CASE("tune_weights: closed-form evaluator descends w1 to 0.3 exactly") {
    auto res = tune_weights(
        [](const LossWeights& w) { return std::abs(w.w1 - 0.3) + (1 - w.w2) + (1 - w.w3); }, 0.1,
        0.1);
    CHECK(std::abs(res.best.w1 - 0.3) < 1e-9);
    CHECK(res.best.w2 == 1.0);
    CHECK(res.best.w3 == 1.0);
    CHECK(res.best_score <= res.initial_score);

    // pass 1: initial + 7 accepted decrements + 1 rejected probe on w1,
    // 1 rejected probe each on w2 and w3; pass 2: 3 rejected probes
    CHECK(res.trace.size() == 1 + 8 + 2 + 3);
    int accepted = 0;
    for (const auto& m : res.trace) accepted += m.accepted ? 1 : 0;
    CHECK(accepted == 1 + 7);
    CHECK(res.passes == 2);
}

TEST_CASE("tune_weights: weights stay within [floor, 1] and score never worsens") {
    // pathological evaluator that always improves pushes to the floor
    auto res = tune_weights(
        [](const LossWeights& w) { return w.w1 + w.w2 + w.w3; }, 0.1, 0.1);
    CHECK(res.best.w1 == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(res.best.w2 == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(res.best.w3 == doctest::Approx(0.1).epsilon(1e-9));
    for (const auto& m : res.trace) {
        CHECK(m.weights.w1 >= 0.1 - 1e-12);
        CHECK(m.weights.w1 <= 1.0 + 1e-12);
    }
    CHECK(res.best_score <= res.initial_score);

    CHECK_THROWS_AS(tune_weights([](const LossWeights&) { return 1.0; }, 0.0, 0.1), ValueError);
    CHECK_THROWS_AS(
        tune_weights([](const LossWeights&) { return std::nan(""); }, 0.1, 0.1),
        NumericError);
}

TEST_CASE("split_dataset carves the validation tail") {
    auto data = synth_dataset(1, 10, 16, 16, 1);
    auto [train_set, val_set] = split_dataset(data, 0.2);
    CHECK(train_set.size() == 8);
    CHECK(val_set.size() == 2);
    auto [t2, v2] = split_dataset(data, 0.0);
    CHECK(t2.size() == 10);
    CHECK(v2.empty());
}
