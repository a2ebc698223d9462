#include "depthkit/network.hpp"

#include <cmath>

namespace dk {

namespace {

// canonical branch widths at width_factor 1.0
const std::vector<std::vector<int>> kIrA = {{16}, {16, 16}, {16, 24, 32}};
const std::vector<std::vector<int>> kRedA = {{32}, {24, 32, 32}};
const std::vector<std::vector<int>> kIrB = {{32}, {32, 32}, {32, 32, 32}};
const std::vector<std::vector<int>> kRedB = {{32, 48}, {32, 48}, {32, 32, 32}};
const std::vector<std::vector<int>> kIrC = {{64}, {48, 48}, {48, 48, 48}};
const int kStem1 = 32, kStem2 = 64;
const std::vector<int> kDecoder = {256, 128, 64, 32};

int scale_width(int w, double f) {
    return static_cast<int>(std::ceil(w * f - 1e-9));
}

std::vector<std::vector<int>> scale_widths(const std::vector<std::vector<int>>& ws, double f) {
    std::vector<std::vector<int>> out(ws.size());
    for (std::size_t i = 0; i < ws.size(); ++i)
        for (int w : ws[i]) out[i].push_back(scale_width(w, f));
    return out;
}

struct ConvGeom {
    int kh = 1, kw = 1;
    IntPair stride{1, 1};
    IntPair pad{0, 0};
};

// kernel geometry for conv j of branch b
ConvGeom branch_geom(BlockKind kind, std::size_t b, std::size_t j, std::size_t chain_len) {
    const bool last = j + 1 == chain_len;
    switch (kind) {
        case BlockKind::stem:
            return {3, 3, {2, 2}, {1, 1}};
        case BlockKind::ir_a:
            if (j == 0) return {};
            return {3, 3, {1, 1}, {1, 1}};
        case BlockKind::ir_b:
            if (j == 0) return {};
            if (b == 2 && j == 1) return {1, 7, {1, 1}, {0, 3}};
            if (b == 2 && j == 2) return {7, 1, {1, 1}, {3, 0}};
            return {3, 3, {1, 1}, {1, 1}};
        case BlockKind::ir_c:
            if (j == 0) return {};
            if (b == 2 && j == 1) return {1, 3, {1, 1}, {0, 1}};
            if (b == 2 && j == 2) return {3, 1, {1, 1}, {1, 0}};
            return {3, 3, {1, 1}, {1, 1}};
        case BlockKind::red_a:
            if (b == 0) return {3, 3, {2, 2}, {1, 1}};
            if (j == 0) return {};
            return last ? ConvGeom{3, 3, {2, 2}, {1, 1}} : ConvGeom{3, 3, {1, 1}, {1, 1}};
        case BlockKind::red_b:
            if (j == 0) return {};
            return last ? ConvGeom{3, 3, {2, 2}, {1, 1}} : ConvGeom{3, 3, {1, 1}, {1, 1}};
    }
    return {};
}

bool is_ir(BlockKind k) {
    return k == BlockKind::ir_a || k == BlockKind::ir_b || k == BlockKind::ir_c;
}
bool is_reduction(BlockKind k) { return k == BlockKind::red_a || k == BlockKind::red_b; }

template <typename T>
ConvLayer<T> make_conv(int c_in, int c_out, const ConvGeom& g, Rng& rng, double bias_init = 0.0) {
    ConvLayer<T> layer;
    layer.w = Tensor<T>({c_out, c_in, g.kh, g.kw}, true);
    layer.b = Tensor<T>({1, c_out, 1, 1}, true);
    layer.stride = g.stride;
    layer.pad = g.pad;
    const double limit = std::sqrt(6.0 / (static_cast<double>(c_in) * g.kh * g.kw));
    for (auto& v : layer.w.raw()) v = static_cast<T>(rng.uniform(-limit, limit));
    for (auto& v : layer.b.raw()) v = static_cast<T>(bias_init);
    return layer;
}

}  // namespace

const char* block_kind_name(BlockKind k) {
    switch (k) {
        case BlockKind::stem: return "stem";
        case BlockKind::ir_a: return "ir_a";
        case BlockKind::ir_b: return "ir_b";
        case BlockKind::ir_c: return "ir_c";
        case BlockKind::red_a: return "red_a";
        case BlockKind::red_b: return "red_b";
    }
    return "?";
}

void BlockSpec::validate(int channel_budget) const {
    if (in_channels < 1) throw ValueError("BlockSpec: in_channels must be >= 1");
    if (branch_widths.empty()) throw ValueError("BlockSpec: no branches");
    for (const auto& br : branch_widths) {
        if (br.empty()) throw ValueError("BlockSpec: empty branch chain");
        for (int w : br) {
            if (w < 1) throw ValueError("BlockSpec: branch width must be >= 1");
            if (w > channel_budget)
                throw ValueError("BlockSpec: branch width " + std::to_string(w) +
                                 " exceeds channel budget " + std::to_string(channel_budget));
        }
    }
    if (is_ir(kind) && !(residual_scale > 0.0 && residual_scale <= 1.0))
        throw ValueError("BlockSpec: residual_scale must be in (0,1]");
    const std::size_t want = kind == BlockKind::stem ? 1 : (kind == BlockKind::red_a ? 2 : 3);
    if (branch_widths.size() != want)
        throw ValueError(std::string("BlockSpec: ") + block_kind_name(kind) + " expects " +
                         std::to_string(want) + " branches, got " +
                         std::to_string(branch_widths.size()));
}

int BlockSpec::out_channels() const {
    if (kind == BlockKind::stem) return branch_widths[0].back();
    if (is_ir(kind)) return in_channels;  // residual projection back to input width
    int out = in_channels;                // maxpool branch passes the trunk through
    for (const auto& br : branch_widths) out += br.back();
    return out;
}

WidthPlan make_width_plan(double f) {
    if (!(f > 0.0)) throw ValueError("width_factor must be > 0");
    WidthPlan p;
    p.stem1 = scale_width(kStem1, f);
    p.stem2 = scale_width(kStem2, f);
    p.ir_a = scale_widths(kIrA, f);
    p.red_a = scale_widths(kRedA, f);
    p.ir_b = scale_widths(kIrB, f);
    p.red_b = scale_widths(kRedB, f);
    p.ir_c = scale_widths(kIrC, f);
    p.trunk_a = p.stem2;
    p.trunk_b = p.trunk_a + p.red_a[0].back() + p.red_a[1].back();
    p.trunk_c = p.trunk_b + p.red_b[0].back() + p.red_b[1].back() + p.red_b[2].back();
    for (int w : kDecoder) p.decoder.push_back(scale_width(w, f));
    return p;
}

ModelConfig ModelConfig::desk(int h, int w) {
    ModelConfig c;
    c.repeats_a = 2;
    c.repeats_b = 1;
    c.repeats_c = 2;
    c.width_factor = 0.25;
    c.in_h = h;
    c.in_w = w;
    return c;
}

ModelConfig ModelConfig::paper(int h, int w) {
    ModelConfig c;
    c.repeats_a = 10;
    c.repeats_b = 5;
    c.repeats_c = 10;
    c.width_factor = 1.0;
    c.in_h = h;
    c.in_w = w;
    return c;
}

void ModelConfig::validate() const {
    if (repeats_a < 1 || repeats_b < 1 || repeats_c < 1)
        throw ValueError("ModelConfig: repeats must be >= 1");
    if (!(width_factor > 0.0)) throw ValueError("ModelConfig: width_factor must be > 0");
    if (in_channels != 3) throw ValueError("ModelConfig: input must have 3 channels");
    if (in_h < 16 || in_w < 16 || in_h % 16 != 0 || in_w % 16 != 0)
        throw ValueError("ModelConfig: input " + std::to_string(in_h) + "x" +
                         std::to_string(in_w) +
                         " not divisible by the encoder downsampling factor 16");
    if (!(leaky_alpha > 0.0 && leaky_alpha < 1.0))
        throw ValueError("ModelConfig: leaky_alpha must be in (0,1)");
    if (!(residual_scale > 0.0 && residual_scale <= 1.0))
        throw ValueError("ModelConfig: residual_scale must be in (0,1]");
    if (channel_budget < 1) throw ValueError("ModelConfig: channel_budget must be >= 1");
    if (!std::isfinite(head_bias)) throw ValueError("ModelConfig: head_bias must be finite");
    const std::vector<std::string> want = {"stem1", "stem2", "red_a", "red_b"};
    if (skip_taps != want)
        throw ValueError("ModelConfig: skip_taps must be stem1,stem2,red_a,red_b");
    if (decoder_levels != static_cast<int>(want.size()))
        throw ValueError("ModelConfig: decoder_levels must equal the number of skip taps (4)");
}

template <typename T>
Block<T> build_block(const BlockSpec& spec, std::uint64_t rng_seed, int channel_budget) {
    spec.validate(channel_budget);
    Rng rng(rng_seed);
    Block<T> block;
    block.spec = spec;
    block.branches.resize(spec.branch_widths.size());
    for (std::size_t b = 0; b < spec.branch_widths.size(); ++b) {
        int c_in = spec.in_channels;
        const auto& chain = spec.branch_widths[b];
        for (std::size_t j = 0; j < chain.size(); ++j) {
            const ConvGeom g = branch_geom(spec.kind, b, j, chain.size());
            block.branches[b].push_back(make_conv<T>(c_in, chain[j], g, rng));
            c_in = chain[j];
        }
    }
    if (is_ir(spec.kind)) {
        int cat = 0;
        for (const auto& br : spec.branch_widths) cat += br.back();
        block.project = make_conv<T>(cat, spec.in_channels, ConvGeom{}, rng);
    }
    return block;
}

template <typename T>
Tensor<T> Block<T>::forward(const Tensor<T>& x, std::vector<Tensor<T>>* taps) const {
    if (x.shape().c != spec.in_channels)
        throw DimError(std::string(block_kind_name(spec.kind)) + " block expects " +
                       std::to_string(spec.in_channels) + " channels, got " + x.shape().str());

    if (spec.kind == BlockKind::stem) {
        Tensor<T> y = x;
        for (const auto& conv : branches[0]) {
            y = relu(conv(y));
            if (taps) taps->push_back(y);
        }
        return y;
    }

    std::vector<Tensor<T>> outs;
    for (const auto& chain : branches) {
        Tensor<T> y = x;
        for (const auto& conv : chain) y = relu(conv(y));
        outs.push_back(y);
    }
    if (is_reduction(spec.kind)) outs.push_back(pool2d(x, PoolKind::max, 2, 2));

    Tensor<T> cat = outs[0];
    for (std::size_t i = 1; i < outs.size(); ++i) cat = concat_channels(cat, outs[i]);

    if (is_reduction(spec.kind)) return cat;

    auto proj = project(cat);
    return relu(add(x, mul_scalar(proj, static_cast<T>(spec.residual_scale))));
}

template <typename T>
Model<T>::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    const WidthPlan plan = make_width_plan(config_.width_factor);
    std::uint64_t counter = 0;
    auto next_seed = [&]() { return Rng::mix(seed, counter++); };

    BlockSpec stem_spec{BlockKind::stem, config_.in_channels, {{plan.stem1, plan.stem2}}, 1.0};
    stem_.push_back(build_block<T>(stem_spec, next_seed(), config_.channel_budget));

    auto ir_spec = [&](BlockKind kind, int trunk, const std::vector<std::vector<int>>& ws) {
        return BlockSpec{kind, trunk, ws, config_.residual_scale};
    };
    for (int i = 0; i < config_.repeats_a; ++i)
        blocks_a_.push_back(build_block<T>(ir_spec(BlockKind::ir_a, plan.trunk_a, plan.ir_a),
                                           next_seed(), config_.channel_budget));
    red_a_ = build_block<T>(BlockSpec{BlockKind::red_a, plan.trunk_a, plan.red_a, 1.0},
                            next_seed(), config_.channel_budget);
    for (int i = 0; i < config_.repeats_b; ++i)
        blocks_b_.push_back(build_block<T>(ir_spec(BlockKind::ir_b, plan.trunk_b, plan.ir_b),
                                           next_seed(), config_.channel_budget));
    red_b_ = build_block<T>(BlockSpec{BlockKind::red_b, plan.trunk_b, plan.red_b, 1.0},
                            next_seed(), config_.channel_budget);
    for (int i = 0; i < config_.repeats_c; ++i)
        blocks_c_.push_back(build_block<T>(ir_spec(BlockKind::ir_c, plan.trunk_c, plan.ir_c),
                                           next_seed(), config_.channel_budget));

    // decoder level inputs: running feature map concatenated with its skip
    const int skip_ch[4] = {plan.trunk_c, plan.trunk_b, plan.stem2, plan.stem1};
    int run = plan.trunk_c;
    Rng dec_rng(next_seed());
    for (int level = 0; level < 4; ++level) {
        std::vector<ConvLayer<T>> convs;
        const int cat_in = run + skip_ch[level];
        convs.push_back(
            make_conv<T>(cat_in, plan.decoder[level], ConvGeom{3, 3, {1, 1}, {1, 1}}, dec_rng));
        convs.push_back(make_conv<T>(plan.decoder[level], plan.decoder[level],
                                     ConvGeom{3, 3, {1, 1}, {1, 1}}, dec_rng));
        decoder_.push_back(std::move(convs));
        run = plan.decoder[level];
    }
    head_ = make_conv<T>(run, 1, ConvGeom{}, dec_rng, config_.head_bias);

    register_params();
}

template <typename T>
void Model<T>::register_params() {
    params_.clear();
    auto reg_conv = [&](const std::string& prefix, const ConvLayer<T>& c) {
        params_.push_back({prefix + ".w", c.w});
        params_.push_back({prefix + ".b", c.b});
    };
    auto reg_block = [&](const std::string& prefix, const Block<T>& b) {
        for (std::size_t br = 0; br < b.branches.size(); ++br)
            for (std::size_t j = 0; j < b.branches[br].size(); ++j)
                reg_conv(prefix + ".br" + std::to_string(br) + ".c" + std::to_string(j),
                         b.branches[br][j]);
        if (is_ir(b.spec.kind)) reg_conv(prefix + ".proj", b.project);
    };

    reg_block("enc.stem", stem_[0]);
    for (std::size_t i = 0; i < blocks_a_.size(); ++i)
        reg_block("enc.a" + std::to_string(i), blocks_a_[i]);
    reg_block("enc.red_a", red_a_);
    for (std::size_t i = 0; i < blocks_b_.size(); ++i)
        reg_block("enc.b" + std::to_string(i), blocks_b_[i]);
    reg_block("enc.red_b", red_b_);
    for (std::size_t i = 0; i < blocks_c_.size(); ++i)
        reg_block("enc.c" + std::to_string(i), blocks_c_[i]);
    for (std::size_t l = 0; l < decoder_.size(); ++l)
        for (std::size_t j = 0; j < decoder_[l].size(); ++j)
            reg_conv("dec.l" + std::to_string(l) + ".c" + std::to_string(j), decoder_[l][j]);
    reg_conv("dec.head", head_);
}

template <typename T>
EncoderOutput<T> Model<T>::encode(const Tensor<T>& x) const {
    const Shape& s = x.shape();
    if (s.c != config_.in_channels || s.h != config_.in_h || s.w != config_.in_w)
        throw DimError("encode: input " + s.str() + " does not match configured shape (n," +
                       std::to_string(config_.in_channels) + "," + std::to_string(config_.in_h) +
                       "," + std::to_string(config_.in_w) + ")");

    EncoderOutput<T> out;
    std::vector<Tensor<T>> stem_taps;
    Tensor<T> y = stem_[0].forward(x, &stem_taps);
    out.skips = {stem_taps[0], stem_taps[1]};  // /2, /4

    for (const auto& b : blocks_a_) y = b.forward(y);
    y = red_a_.forward(y);
    out.skips.push_back(y);  // /8
    for (const auto& b : blocks_b_) y = b.forward(y);
    y = red_b_.forward(y);
    out.skips.push_back(y);  // /16
    for (const auto& b : blocks_c_) y = b.forward(y);
    out.bottleneck = y;
    return out;
}

template <typename T>
Tensor<T> Model<T>::decode(const EncoderOutput<T>& enc) const {
    if (enc.skips.size() != 4) throw DimError("decode: expected 4 skips");
    const T alpha = static_cast<T>(config_.leaky_alpha);

    // level 0 joins the bottleneck with the same-resolution skip; deeper
    // levels upsample first, then concatenate the matching skip
    Tensor<T> y = leaky_relu(enc.bottleneck, alpha);
    for (int level = 0; level < 4; ++level) {
        if (level > 0) y = upsample2x(y, UpsampleMode::bilinear);
        const Tensor<T>& skip = enc.skips[3 - level];
        if (skip.shape().h != y.shape().h || skip.shape().w != y.shape().w)
            throw DimError("decode: skip " + skip.shape().str() + " does not match feature " +
                           y.shape().str() + " at level " + std::to_string(level));
        y = concat_channels(y, skip);
        y = leaky_relu(decoder_[level][0](y), alpha);
        y = leaky_relu(decoder_[level][1](y), alpha);
    }
    return sigmoid(head_(y));
}

template <typename T>
Tensor<T> Model<T>::forward(const Tensor<T>& x) const {
    return decode(encode(x));
}

template <typename T>
Tensor<T> Model<T>::predict(const Tensor<T>& rgb) const {
    return upsample2x(forward(rgb), UpsampleMode::bilinear);
}

template <typename T>
std::int64_t Model<T>::parameter_count() const {
    std::int64_t count = 0;
    for (const auto& p : params_) count += p.tensor.numel();
    return count;
}

template <typename T>
void Model<T>::zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
}

template <typename T>
void Model<T>::set_requires_grad(bool rg) {
    for (auto& p : params_) p.tensor.set_requires_grad(rg);
}

template struct Block<float>;
template struct Block<double>;
template Block<float> build_block<float>(const BlockSpec&, std::uint64_t, int);
template Block<double> build_block<double>(const BlockSpec&, std::uint64_t, int);
template class Model<float>;
template class Model<double>;

}  // namespace dk
