#pragma once

#include <functional>

#include "depthkit/datapipe.hpp"
#include "depthkit/losses.hpp"
#include "depthkit/metrics.hpp"
#include "depthkit/network.hpp"

namespace dk {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9, beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with AMSGrad: v_max is the elementwise running maximum of the second
// moment, so the effective step denominator never shrinks.
template <typename T>
struct AdamState {
    struct Slot {
        std::vector<T> m, v, vmax;
    };
    AdamConfig hyper;
    long t = 0;
    std::vector<Slot> slots;

    static AdamState init(const std::vector<NamedParam<T>>& params, AdamConfig cfg);
};

// one optimizer step over every parameter; reads the accumulated gradients
template <typename T>
void adam_step(std::vector<NamedParam<T>>& params, AdamState<T>& state);

struct TrainConfig {
    double lr = 1e-4;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int iterations = 1;  // T
    int batch_size = 8;
    std::uint64_t seed = 0;
    LossWeights weights;
    double val_split = 0.2;
    bool augment_hflip = true;

    void validate() const;
    AdamConfig adam() const { return {lr, beta1, beta2, eps}; }
};

struct TrainResult {
    std::vector<LossBreakdown> history;  // one row per iteration
};

// Alg-style loop: load batch -> forward -> composite loss -> backward ->
// adam step. Ground truth is average-pooled 2x to the head resolution.
// Deterministic for a fixed (seed, config, dataset).
TrainResult train(Model<float>& model, const std::vector<SamplePair>& data,
                  const TrainConfig& cfg);

struct EvalResult {
    MetricsReport metrics;
    LossBreakdown mean_loss;
    double seconds_per_sample = 0.0;
};

// Runs predict on every sample and pools metrics across all pixels. Depths
// enter the metrics de-normalized when the sample carries a range, else as
// normalized values shifted by the positivity floor.
EvalResult evaluate(const Model<float>& model, const std::vector<SamplePair>& data,
                    const LossWeights& w);

inline constexpr double kMetricFloor = 1e-3;

struct TuneMove {
    LossWeights weights;
    double score = 0.0;
    bool accepted = false;
    int weight_index = -1;  // -1 for the initial evaluation
};

struct TuneResult {
    LossWeights best;
    double initial_score = 0.0;
    double best_score = 0.0;
    int passes = 0;
    std::vector<TuneMove> trace;  // one row per evaluator call
};

// Greedy coordinate descent from (1,1,1): each weight is decremented while
// the score strictly improves, reverting the losing step; passes repeat to a
// fixed point. Lower scores are better.
TuneResult tune_weights(const std::function<double(const LossWeights&)>& evaluator, double step,
                        double floor);

// train/validation split helper: the last ceil(n*split) samples validate
std::pair<std::vector<SamplePair>, std::vector<SamplePair>> split_dataset(
    const std::vector<SamplePair>& data, double val_split);

}  // namespace dk
