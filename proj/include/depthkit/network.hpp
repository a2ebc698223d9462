#pragma once

#include <string>
#include <vector>

#include "depthkit/tensor.hpp"

namespace dk {

enum class BlockKind { stem, ir_a, ir_b, ir_c, red_a, red_b };

const char* block_kind_name(BlockKind k);

// one encoder block: branch conv widths in application order, one inner list
// per branch. ir_* blocks preserve spatial dims; stem and red_* halve them.
struct BlockSpec {
    BlockKind kind = BlockKind::ir_a;
    int in_channels = 0;
    std::vector<std::vector<int>> branch_widths;
    double residual_scale = 0.2;  // ir_* only

    void validate(int channel_budget) const;
    // channels produced by forward()
    int out_channels() const;
};

struct ModelConfig {
    int repeats_a = 10, repeats_b = 5, repeats_c = 10;
    double width_factor = 1.0;
    int in_channels = 3, in_h = 64, in_w = 64;
    int decoder_levels = 4;
    double leaky_alpha = 0.2;
    double residual_scale = 0.2;
    int channel_budget = 4096;
    double head_bias = 0.0;
    std::vector<std::string> skip_taps = {"stem1", "stem2", "red_a", "red_b"};

    // repeats (2,1,2), width_factor 0.25: largest stage width is 64 channels
    static ModelConfig desk(int h = 64, int w = 64);
    // repeats (10,5,10) at full canonical widths; shape/count checks only
    static ModelConfig paper(int h = 64, int w = 64);

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

// stage widths derived from the canonical tables scaled by width_factor
struct WidthPlan {
    int stem1 = 0, stem2 = 0;
    std::vector<std::vector<int>> ir_a, ir_b, ir_c;
    std::vector<std::vector<int>> red_a, red_b;  // conv branches only; maxpool branch implicit
    int trunk_a = 0, trunk_b = 0, trunk_c = 0;
    std::vector<int> decoder;
};

WidthPlan make_width_plan(double width_factor);

template <typename T>
struct ConvLayer {
    Tensor<T> w, b;
    IntPair stride{1, 1}, pad{0, 0};

    Tensor<T> operator()(const Tensor<T>& x) const { return conv2d(x, w, b, stride, pad); }
};

// a parameterized encoder block built from a BlockSpec
template <typename T>
struct Block {
    BlockSpec spec;
    std::vector<std::vector<ConvLayer<T>>> branches;
    ConvLayer<T> project;  // ir_* only

    // taps, when given and kind==stem, receives each stage output
    Tensor<T> forward(const Tensor<T>& x, std::vector<Tensor<T>>* taps = nullptr) const;
};

template <typename T>
Block<T> build_block(const BlockSpec& spec, std::uint64_t rng_seed, int channel_budget = 4096);

template <typename T>
struct EncoderOutput {
    Tensor<T> bottleneck;               // input/16
    std::vector<Tensor<T>> skips;       // shallowest first: /2, /4, /8, /16
};

template <typename T>
struct NamedParam {
    std::string name;
    Tensor<T> tensor;
};

template <typename T>
class Model {
  public:
    Model() = default;
    Model(const ModelConfig& config, std::uint64_t seed);

    EncoderOutput<T> encode(const Tensor<T>& x) const;
    Tensor<T> decode(const EncoderOutput<T>& enc) const;
    // head-resolution map (n,1,h/2,w/2), values in (0,1)
    Tensor<T> forward(const Tensor<T>& x) const;
    // full-resolution map (n,1,h,w): forward + bilinear 2x
    Tensor<T> predict(const Tensor<T>& rgb) const;

    const ModelConfig& config() const { return config_; }
    const std::vector<NamedParam<T>>& parameters() const { return params_; }
    std::vector<NamedParam<T>>& parameters() { return params_; }
    std::int64_t parameter_count() const;
    void zero_grad();
    void set_requires_grad(bool rg);

    template <typename U>
    Model<U> cast() const {
        Model<U> out(config_, 0);
        auto& dst = out.parameters();
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto src = params_[i].tensor.data();
            auto d = dst[i].tensor.raw();
            for (std::size_t j = 0; j < d.size(); ++j) d[j] = static_cast<U>(src[j]);
        }
        return out;
    }

  private:
    ModelConfig config_;
    std::vector<Block<T>> stem_;      // single entry
    std::vector<Block<T>> blocks_a_, blocks_b_, blocks_c_;
    Block<T> red_a_, red_b_;
    std::vector<std::vector<ConvLayer<T>>> decoder_;  // two 3x3 convs per level
    ConvLayer<T> head_;                                // 1x1 -> sigmoid
    std::vector<NamedParam<T>> params_;

    void register_params();
};

using ModelF = Model<float>;
using ModelD = Model<double>;

// Checkpoint file: magic "DFKT1", text header with config and tensor
// manifest, then raw little-endian float32 blobs in manifest order.
void save_checkpoint(const Model<float>& model, const std::string& path);
Model<float> load_checkpoint(const std::string& path);

std::string serialize_config(const ModelConfig& c);
ModelConfig parse_config(const std::string& text);

}  // namespace dk
