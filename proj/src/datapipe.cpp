#include "depthkit/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace dk {

namespace fs = std::filesystem;

NormalizeResult minmax_normalize(std::span<const float> x) {
    if (x.empty()) throw ValueError("minmax_normalize: empty input");
    float lo = x[0], hi = x[0];
    for (float v : x) {
        if (!std::isfinite(v)) throw ValueError("minmax_normalize: non-finite input");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    NormalizeResult out;
    out.values.resize(x.size());
    if (hi == lo) {
        out.degenerate = true;  // blank frame: all zeros instead of an error
        return out;
    }
    const float inv = 1.0f / (hi - lo);
    for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = (x[i] - lo) * inv;
    return out;
}

TensorF hflip_tensor(const TensorF& t) {
    const Shape& s = t.shape();
    TensorF out(s);
    auto src = t.data();
    auto dst = out.raw();
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < s.h; ++y) {
                const std::size_t row = index4(s, n, c, y, 0);
                for (int x = 0; x < s.w; ++x) dst[row + x] = src[row + (s.w - 1 - x)];
            }
    return out;
}

SamplePair hflip(const SamplePair& p) {
    return {hflip_tensor(p.rgb), hflip_tensor(p.depth), p.depth_range};
}

SamplePair load_pair(const std::string& rgb_path, const std::string& depth_path) {
    const ImageU8 rgb = read_rgb8_png(rgb_path);
    const ImageU16 depth = read_gray16_png(depth_path);
    if (rgb.w != depth.w || rgb.h != depth.h)
        throw IoError("load_pair: rgb " + std::to_string(rgb.w) + "x" + std::to_string(rgb.h) +
                      " does not match depth " + std::to_string(depth.w) + "x" +
                      std::to_string(depth.h));

    SamplePair p;
    p.rgb = TensorF({1, 3, rgb.h, rgb.w});
    p.depth = TensorF({1, 1, depth.h, depth.w});
    auto rv = p.rgb.raw();
    const std::size_t plane = static_cast<std::size_t>(rgb.h) * rgb.w;
    for (std::size_t i = 0; i < plane; ++i) {
        rv[i] = rgb.rgb[3 * i] / 255.0f;
        rv[plane + i] = rgb.rgb[3 * i + 1] / 255.0f;
        rv[2 * plane + i] = rgb.rgb[3 * i + 2] / 255.0f;
    }
    auto dv = p.depth.raw();
    for (std::size_t i = 0; i < plane; ++i) dv[i] = depth.gray[i] / 65535.0f;
    return p;
}

void save_depth(const TensorF& depth, const std::string& path) {
    const Shape& s = depth.shape();
    if (s.n != 1 || s.c != 1) throw ValueError("save_depth: expected (1,1,h,w), got " + s.str());
    ImageU16 img;
    img.w = s.w;
    img.h = s.h;
    img.gray.resize(static_cast<std::size_t>(s.w) * s.h);
    auto v = depth.data();
    for (std::size_t i = 0; i < img.gray.size(); ++i) {
        const long q = std::lround(static_cast<double>(v[i]) * 65535.0);
        img.gray[i] = static_cast<std::uint16_t>(std::clamp(q, 0l, 65535l));
    }
    write_gray16_png(img, path);
}

std::vector<SamplePair> synth_dataset(std::uint64_t seed, int count, int h, int w, int k_shapes) {
    if (count < 1) throw ValueError("synth_dataset: count must be >= 1");
    if (h < 16 || w < 16 || h % 16 != 0 || w % 16 != 0)
        throw ValueError("synth_dataset: h and w must be divisible by 16, got " +
                         std::to_string(h) + "x" + std::to_string(w));
    if (k_shapes < 0) throw ValueError("synth_dataset: k_shapes must be >= 0");

    struct Rect {
        int x0, y0, rw, rh;
        double d;
        double color[3];
    };

    std::vector<SamplePair> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(i)));
        std::vector<Rect> rects(static_cast<std::size_t>(k_shapes));
        for (auto& r : rects) {
            r.rw = rng.uniform_int(w / 5, w / 2);
            r.rh = rng.uniform_int(h / 5, h / 2);
            r.x0 = rng.uniform_int(0, w - r.rw);
            r.y0 = rng.uniform_int(0, h - r.rh);
            r.d = rng.uniform(0.1, 0.9);
            for (double& c : r.color) c = 0.8 + 0.2 * rng.uniform();
        }
        // painter's algorithm: far to near, so nearer rectangles occlude
        std::stable_sort(rects.begin(), rects.end(),
                         [](const Rect& a, const Rect& b) { return a.d > b.d; });

        SamplePair p;
        p.rgb = TensorF({1, 3, h, w});
        p.depth = TensorF::full({1, 1, h, w}, 1.0f);
        auto rgb = p.rgb.raw();
        auto depth = p.depth.raw();
        const std::size_t plane = static_cast<std::size_t>(h) * w;
        for (const auto& r : rects) {
            const double shade = 1.0 - r.d;
            for (int y = r.y0; y < r.y0 + r.rh; ++y)
                for (int x = r.x0; x < r.x0 + r.rw; ++x) {
                    const std::size_t at = static_cast<std::size_t>(y) * w + x;
                    depth[at] = static_cast<float>(r.d);
                    for (int c = 0; c < 3; ++c)
                        rgb[c * plane + at] = static_cast<float>(r.color[c] * shade);
                }
        }
        out.push_back(std::move(p));
    }
    return out;
}

void save_dataset(const std::vector<SamplePair>& set, const std::string& dir) {
    if (set.empty()) throw ValueError("save_dataset: empty set");
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "rgb", ec);
    fs::create_directories(fs::path(dir) / "depth", ec);
    if (ec) throw IoError("save_dataset: cannot create '" + dir + "': " + ec.message());

    char name[16];
    for (std::size_t i = 0; i < set.size(); ++i) {
        std::snprintf(name, sizeof(name), "%04zu.png", i);
        const Shape& s = set[i].rgb.shape();
        ImageU8 img;
        img.w = s.w;
        img.h = s.h;
        img.rgb.resize(static_cast<std::size_t>(s.w) * s.h * 3);
        auto v = set[i].rgb.data();
        const std::size_t plane = static_cast<std::size_t>(s.w) * s.h;
        for (std::size_t j = 0; j < plane; ++j)
            for (int c = 0; c < 3; ++c) {
                const long q = std::lround(static_cast<double>(v[c * plane + j]) * 255.0);
                img.rgb[3 * j + c] = static_cast<std::uint8_t>(std::clamp(q, 0l, 255l));
            }
        write_rgb8_png(img, (fs::path(dir) / "rgb" / name).string());
        save_depth(set[i].depth, (fs::path(dir) / "depth" / name).string());
    }
}

std::vector<SamplePair> load_dataset(const std::string& dir) {
    const fs::path rgb_dir = fs::path(dir) / "rgb";
    const fs::path depth_dir = fs::path(dir) / "depth";
    if (!fs::is_directory(rgb_dir) || !fs::is_directory(depth_dir))
        throw IoError("load_dataset: '" + dir + "' lacks rgb/ and depth/ subdirectories");

    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(rgb_dir))
        if (e.path().extension() == ".png") names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw IoError("load_dataset: no png files under '" + rgb_dir.string() + "'");

    std::vector<SamplePair> out;
    out.reserve(names.size());
    for (const auto& n : names) {
        const fs::path dp = depth_dir / n;
        if (!fs::exists(dp)) throw IoError("load_dataset: missing depth file '" + dp.string() + "'");
        out.push_back(load_pair((rgb_dir / n).string(), dp.string()));
    }
    return out;
}

ImageU8 depth_to_color(const TensorF& depth, const ColorMap& map) {
    const Shape& s = depth.shape();
    if (s.n != 1 || s.c != 1)
        throw ValueError("depth_to_color: expected (1,1,h,w), got " + s.str());
    ImageU8 img;
    img.w = s.w;
    img.h = s.h;
    img.rgb.resize(static_cast<std::size_t>(s.w) * s.h * 3);
    auto v = depth.data();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] >= 0.0f && v[i] <= 1.0f))
            throw ValueError("depth_to_color: depth value " + std::to_string(v[i]) +
                             " outside [0,1] at pixel " + std::to_string(i));
        const int idx = static_cast<int>(std::lround(static_cast<double>(v[i]) * 255.0));
        const auto& c = map.table[static_cast<std::size_t>(idx)];
        img.rgb[3 * i] = c[0];
        img.rgb[3 * i + 1] = c[1];
        img.rgb[3 * i + 2] = c[2];
    }
    return img;
}

void write_colormap_table(const ColorMap& map, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("write_colormap_table: cannot open '" + path + "'");
    for (int i = 0; i < 256; ++i)
        os << i << " " << static_cast<int>(map.table[i][0]) << " "
           << static_cast<int>(map.table[i][1]) << " " << static_cast<int>(map.table[i][2])
           << "\n";
    if (!os) throw IoError("write_colormap_table: write failed for '" + path + "'");
}

TensorF resize_tensor(const TensorF& t, int oh, int ow) {
    const Shape& s = t.shape();
    if (oh < 1 || ow < 1) throw ValueError("resize_tensor: bad target size");
    if (oh == s.h && ow == s.w) return t.clone();
    TensorF out({s.n, s.c, oh, ow});
    auto src = t.data();
    auto dst = out.raw();
    const double sy = static_cast<double>(s.h) / oh;
    const double sx = static_cast<double>(s.w) / ow;
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const float* in = src.data() + index4(s, n, c, 0, 0);
            float* o = dst.data() + index4(out.shape(), n, c, 0, 0);
            for (int y = 0; y < oh; ++y) {
                double fy = (y + 0.5) * sy - 0.5;
                fy = std::clamp(fy, 0.0, static_cast<double>(s.h - 1));
                const int y0 = static_cast<int>(fy);
                const int y1 = std::min(y0 + 1, s.h - 1);
                const double wy = fy - y0;
                for (int x = 0; x < ow; ++x) {
                    double fx = (x + 0.5) * sx - 0.5;
                    fx = std::clamp(fx, 0.0, static_cast<double>(s.w - 1));
                    const int x0 = static_cast<int>(fx);
                    const int x1 = std::min(x0 + 1, s.w - 1);
                    const double wx = fx - x0;
                    const double top = (1 - wx) * in[y0 * s.w + x0] + wx * in[y0 * s.w + x1];
                    const double bot = (1 - wx) * in[y1 * s.w + x0] + wx * in[y1 * s.w + x1];
                    o[static_cast<std::size_t>(y) * ow + x] =
                        static_cast<float>((1 - wy) * top + wy * bot);
                }
            }
        }
    return out;
}

TensorF downsample2x_avg(const TensorF& t) {
    const Shape& s = t.shape();
    if (s.h % 2 != 0 || s.w % 2 != 0)
        throw DimError("downsample2x_avg: spatial dims must be even, got " + s.str());
    TensorF out({s.n, s.c, s.h / 2, s.w / 2});
    auto src = t.data();
    auto dst = out.raw();
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const float* in = src.data() + index4(s, n, c, 0, 0);
            float* o = dst.data() + index4(out.shape(), n, c, 0, 0);
            for (int y = 0; y < s.h / 2; ++y)
                for (int x = 0; x < s.w / 2; ++x)
                    o[static_cast<std::size_t>(y) * (s.w / 2) + x] =
                        0.25f * (in[(2 * y) * s.w + 2 * x] + in[(2 * y) * s.w + 2 * x + 1] +
                                 in[(2 * y + 1) * s.w + 2 * x] + in[(2 * y + 1) * s.w + 2 * x + 1]);
        }
    return out;
}

}  // namespace dk
