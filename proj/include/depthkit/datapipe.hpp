#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "depthkit/tensor.hpp"

namespace dk {

// depth range in meters for de-normalizing metric evaluation
struct DepthRange {
    double min_m = 0.0, max_m = 0.0;
};

// aligned RGB image and ground-truth depth map, both normalized to [0,1]
struct SamplePair {
    TensorF rgb;    // (1,3,h,w)
    TensorF depth;  // (1,1,h,w)
    std::optional<DepthRange> depth_range;
};

struct NormalizeResult {
    std::vector<float> values;
    bool degenerate = false;  // max == min: all zeros returned
};

// (x - min)/(max - min)
NormalizeResult minmax_normalize(std::span<const float> x);

TensorF hflip_tensor(const TensorF& t);
SamplePair hflip(const SamplePair& p);

struct ImageU8 {
    int w = 0, h = 0;
    std::vector<std::uint8_t> rgb;  // interleaved r,g,b
};

struct ImageU16 {
    int w = 0, h = 0;
    std::vector<std::uint16_t> gray;
};

ImageU8 read_rgb8_png(const std::string& path);
void write_rgb8_png(const ImageU8& img, const std::string& path);
ImageU16 read_gray16_png(const std::string& path);
void write_gray16_png(const ImageU16& img, const std::string& path);

// 8-bit rgb and 16-bit depth scaled to [0,1] (/255, /65535)
SamplePair load_pair(const std::string& rgb_path, const std::string& depth_path);
// exact inverse of load with round-half-up
void save_depth(const TensorF& depth, const std::string& path);

// Deterministic scenes: background plane at depth 1.0 plus k axis-aligned
// rectangles at depths in [0.1,0.9], nearer rectangles painted over farther
// ones, rgb = per-shape base color shaded by (1 - depth).
std::vector<SamplePair> synth_dataset(std::uint64_t seed, int count, int h, int w, int k_shapes);

// directory layout: rgb/NNNN.png (8-bit RGB) + depth/NNNN.png (16-bit gray)
void save_dataset(const std::vector<SamplePair>& set, const std::string& dir);
std::vector<SamplePair> load_dataset(const std::string& dir);

// entry 0 is the bright-yellow near end, entry 255 the near-black far end
struct ColorMap {
    std::array<std::array<std::uint8_t, 3>, 256> table;
};

const ColorMap& inferno_reversed();
ImageU8 depth_to_color(const TensorF& depth, const ColorMap& map);
// "index r g b" lines
void write_colormap_table(const ColorMap& map, const std::string& path);

// half-pixel-center bilinear resize for data preparation (no gradients)
TensorF resize_tensor(const TensorF& t, int oh, int ow);

// 2x2 average pooling used to bring ground truth to head resolution
TensorF downsample2x_avg(const TensorF& t);

}  // namespace dk
