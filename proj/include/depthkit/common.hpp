#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dk {

// Error taxonomy. The CLI maps these onto exit codes:
// usage/shape/config -> 2, numeric -> 3, io/checkpoint -> 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimError : Error {
    using Error::Error;
};
struct ValueError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct CheckpointError : IoError {
    using IoError::IoError;
};

// Dense 4-D layout: (batch, channels, height, width), row-major, w fastest.
struct Shape {
    int n = 0, c = 0, h = 0, w = 0;

    std::int64_t numel() const {
        return static_cast<std::int64_t>(n) * c * h * w;
    }
    bool operator==(const Shape&) const = default;

    std::string str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }
};

inline std::int64_t index4(const Shape& s, int n, int c, int h, int w) {
    return ((static_cast<std::int64_t>(n) * s.c + c) * s.h + h) * s.w + w;
}

// SplitMix64 stream. Chosen over std::mt19937 distributions because every
// draw here must reproduce bit-identically in golden files and tests; the
// standard distributions are implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1) with 53 random bits
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive bounds
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    bool coin() { return (next_u64() & 1ull) != 0; }

    // derive an independent stream; used for per-sample substreams
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
};

}  // namespace dk
