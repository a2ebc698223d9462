#include "depthkit/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dk {

template <typename T>
AdamState<T> AdamState<T>::init(const std::vector<NamedParam<T>>& params, AdamConfig cfg) {
    AdamState<T> s;
    s.hyper = cfg;
    s.slots.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::size_t n = static_cast<std::size_t>(params[i].tensor.numel());
        s.slots[i].m.assign(n, T(0));
        s.slots[i].v.assign(n, T(0));
        s.slots[i].vmax.assign(n, T(0));
    }
    return s;
}

template <typename T>
void adam_step(std::vector<NamedParam<T>>& params, AdamState<T>& state) {
    if (state.slots.size() != params.size())
        throw ValueError("adam_step: state has " + std::to_string(state.slots.size()) +
                         " slots for " + std::to_string(params.size()) + " parameters");
    const AdamConfig& h = state.hyper;
    state.t += 1;
    const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        auto g = p.tensor.grad();
        if (g.empty())
            throw ValueError("adam_step: parameter '" + p.name + "' has no gradient");
        auto w = p.tensor.raw();
        auto& slot = state.slots[i];
        if (slot.m.size() != w.size())
            throw DimError("adam_step: state shape mismatch on '" + p.name + "'");

        for (std::size_t j = 0; j < w.size(); ++j) {
            const double gj = static_cast<double>(g[j]);
            if (!std::isfinite(gj))
                throw NumericError("adam_step: non-finite gradient in parameter '" + p.name +
                                   "' at element " + std::to_string(j));
            const double m = h.beta1 * slot.m[j] + (1.0 - h.beta1) * gj;
            const double v = h.beta2 * slot.v[j] + (1.0 - h.beta2) * gj * gj;
            const double vmax = std::max(static_cast<double>(slot.vmax[j]), v);
            slot.m[j] = static_cast<T>(m);
            slot.v[j] = static_cast<T>(v);
            slot.vmax[j] = static_cast<T>(vmax);
            const double m_hat = m / bc1;
            const double denom = std::sqrt(vmax / bc2) + h.eps;
            w[j] = static_cast<T>(w[j] - h.lr * m_hat / denom);
        }
    }
}

void TrainConfig::validate() const {
    if (iterations < 1) throw ValueError("TrainConfig: iterations must be >= 1");
    if (batch_size < 1) throw ValueError("TrainConfig: batch_size must be >= 1");
    if (lr < 0.0) throw ValueError("TrainConfig: learning rate must be >= 0");
    if (!(val_split >= 0.0 && val_split < 1.0))
        throw ValueError("TrainConfig: val_split must be in [0,1)");
    weights.validate();
}

namespace {

// stack samples into (B,3,h,w)/(B,1,h,w); flips applied per the rng coin
void fill_batch(const std::vector<SamplePair>& data, const std::vector<int>& idx, bool augment,
                Rng& rng, TensorF& x, TensorF& y) {
    const Shape xs = x.shape();
    const Shape ys = y.shape();
    const std::size_t xstride = static_cast<std::size_t>(xs.c) * xs.h * xs.w;
    const std::size_t ystride = static_cast<std::size_t>(ys.h) * ys.w;
    for (std::size_t b = 0; b < idx.size(); ++b) {
        const SamplePair& s = data[static_cast<std::size_t>(idx[b])];
        const bool flip = augment && rng.coin();
        const TensorF rgb = flip ? hflip_tensor(s.rgb) : s.rgb;
        const TensorF dep = flip ? hflip_tensor(s.depth) : s.depth;
        std::copy(rgb.data().begin(), rgb.data().end(), x.raw().begin() + b * xstride);
        std::copy(dep.data().begin(), dep.data().end(), y.raw().begin() + b * ystride);
    }
}

void check_dataset(const std::vector<SamplePair>& data, const ModelConfig& cfg) {
    if (data.empty()) throw ValueError("train: dataset is empty");
    for (const auto& s : data) {
        const Shape& r = s.rgb.shape();
        if (r.c != cfg.in_channels || r.h != cfg.in_h || r.w != cfg.in_w)
            throw DimError("train: sample rgb " + r.str() + " does not match model input (n," +
                           std::to_string(cfg.in_channels) + "," + std::to_string(cfg.in_h) + "," +
                           std::to_string(cfg.in_w) + ")");
        if (s.depth.shape().h != r.h || s.depth.shape().w != r.w)
            throw DimError("train: depth map not aligned with rgb");
    }
}

}  // namespace

TrainResult train(Model<float>& model, const std::vector<SamplePair>& data,
                  const TrainConfig& cfg) {
    cfg.validate();
    check_dataset(data, model.config());

    const int n = static_cast<int>(data.size());
    const int batch = std::min(cfg.batch_size, n);
    Rng rng(Rng::mix(cfg.seed, 0xba7c4));

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    int pos = n;  // force a shuffle on the first batch

    auto shuffle = [&]() {
        for (int i = n - 1; i > 0; --i)
            std::swap(order[static_cast<std::size_t>(i)],
                      order[static_cast<std::size_t>(rng.uniform_int(0, i))]);
        pos = 0;
    };

    AdamState<float> adam = AdamState<float>::init(model.parameters(), cfg.adam());
    TrainResult result;
    result.history.reserve(static_cast<std::size_t>(cfg.iterations));

    const ModelConfig& mc = model.config();
    TensorF x({batch, mc.in_channels, mc.in_h, mc.in_w});
    TensorF y({batch, 1, mc.in_h, mc.in_w});

    for (int t = 1; t <= cfg.iterations; ++t) {
        if (pos + batch > n) shuffle();
        std::vector<int> idx(order.begin() + pos, order.begin() + pos + batch);
        pos += batch;
        fill_batch(data, idx, cfg.augment_hflip, rng, x, y);
        const TensorF y_half = downsample2x_avg(y);

        Tape<float> tape;
        LossBreakdown bd;
        {
            Tape<float>::Scope scope(tape);
            auto pred = model.forward(x);
            auto loss = composite_loss(y_half, pred, cfg.weights);
            bd = loss.values();
            if (!std::isfinite(bd.total)) {
                std::ostringstream os;
                os << "train: non-finite loss at iteration " << t << " (depth=" << bd.depth
                   << ", grad=" << bd.grad << ", ssim=" << bd.ssim << ", total=" << bd.total
                   << ")";
                throw NumericError(os.str());
            }
            model.zero_grad();
            tape.backward(loss.total);
        }
        adam_step(model.parameters(), adam);
        result.history.push_back(bd);
    }
    return result;
}

EvalResult evaluate(const Model<float>& model, const std::vector<SamplePair>& data,
                    const LossWeights& w) {
    if (data.empty()) throw ValueError("evaluate: dataset is empty");
    w.validate();

    std::vector<std::vector<double>> y_set, p_set;
    y_set.reserve(data.size());
    p_set.reserve(data.size());
    LossBreakdown mean;
    double seconds = 0.0;

    for (const auto& sample : data) {
        const auto t0 = std::chrono::steady_clock::now();
        const TensorF pred_full = model.predict(sample.rgb);
        seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        // losses at head resolution, like training sees them
        const TensorF y_half = downsample2x_avg(sample.depth);
        const TensorF pred_half = model.forward(sample.rgb);
        const LossBreakdown bd = composite_loss(y_half, pred_half, w).values();
        mean.depth += bd.depth;
        mean.grad += bd.grad;
        mean.ssim += bd.ssim;
        mean.total += bd.total;

        auto to_metric = [&](std::span<const float> v) {
            std::vector<double> out(v.size());
            if (sample.depth_range) {
                const double lo = sample.depth_range->min_m;
                const double hi = sample.depth_range->max_m;
                if (!(lo > 0.0 && hi > lo))
                    throw ValueError("evaluate: depth range must satisfy 0 < min < max");
                for (std::size_t i = 0; i < v.size(); ++i) out[i] = lo + v[i] * (hi - lo);
            } else {
                for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] + kMetricFloor;
            }
            return out;
        };
        y_set.push_back(to_metric(sample.depth.data()));
        p_set.push_back(to_metric(pred_full.data()));
    }

    const double inv = 1.0 / static_cast<double>(data.size());
    mean.depth *= inv;
    mean.grad *= inv;
    mean.ssim *= inv;
    mean.total *= inv;

    EvalResult out;
    out.metrics = report(y_set, p_set);
    out.mean_loss = mean;
    out.seconds_per_sample = seconds * inv;
    return out;
}

TuneResult tune_weights(const std::function<double(const LossWeights&)>& evaluator, double step,
                        double floor) {
    if (!(step > 0.0 && step < 1.0)) throw ValueError("tune_weights: step must be in (0,1)");
    if (!(floor > 0.0 && floor <= 1.0)) throw ValueError("tune_weights: floor must be in (0,1]");

    // weights tracked as decrement counts so w = 1 - k*step carries no
    // accumulated rounding
    int k[3] = {0, 0, 0};
    auto weights_at = [&](const int kk[3]) {
        return LossWeights{1.0 - kk[0] * step, 1.0 - kk[1] * step, 1.0 - kk[2] * step};
    };
    auto run = [&](const LossWeights& w, int widx, TuneResult& res) {
        const double s = evaluator(w);
        if (!std::isfinite(s))
            throw NumericError("tune_weights: evaluator returned a non-finite score");
        res.trace.push_back({w, s, false, widx});
        return s;
    };

    TuneResult res;
    res.initial_score = run(weights_at(k), -1, res);
    res.trace.back().accepted = true;
    res.best_score = res.initial_score;

    bool changed = true;
    while (changed) {
        changed = false;
        res.passes += 1;
        for (int i = 0; i < 3; ++i) {
            while (true) {
                int cand[3] = {k[0], k[1], k[2]};
                cand[i] += 1;
                if (1.0 - cand[i] * step < floor - 1e-12) break;  // stay within [floor, 1]
                const double s = run(weights_at(cand), i, res);
                if (s < res.best_score) {
                    k[i] = cand[i];
                    res.best_score = s;
                    res.trace.back().accepted = true;
                    changed = true;
                } else {
                    break;  // deterioration or tie: revert the decrement
                }
            }
        }
    }

    res.best = weights_at(k);
    return res;
}

std::pair<std::vector<SamplePair>, std::vector<SamplePair>> split_dataset(
    const std::vector<SamplePair>& data, double val_split) {
    if (!(val_split >= 0.0 && val_split < 1.0))
        throw ValueError("split_dataset: val_split must be in [0,1)");
    const std::size_t n_val =
        static_cast<std::size_t>(std::ceil(data.size() * val_split - 1e-12));
    const std::size_t n_train = data.size() - n_val;
    std::vector<SamplePair> train_set(data.begin(), data.begin() + static_cast<long>(n_train));
    std::vector<SamplePair> val_set(data.begin() + static_cast<long>(n_train), data.end());
    return {std::move(train_set), std::move(val_set)};
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(std::vector<NamedParam<float>>&, AdamState<float>&);
template void adam_step<double>(std::vector<NamedParam<double>>&, AdamState<double>&);

}  // namespace dk
