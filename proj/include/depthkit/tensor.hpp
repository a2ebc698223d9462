#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "depthkit/common.hpp"

namespace dk {

template <typename T>
class Tape;

namespace detail {

template <typename T>
struct Storage {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // same length as value once grad_enabled
    bool requires_grad = false;
    bool is_leaf = true;
    bool grad_enabled = false;

    void enable_grad() {
        if (!grad_enabled) {
            grad.assign(value.size(), T(0));
            grad_enabled = true;
        }
    }
};

}  // namespace detail

// Shared handle to a dense (n,c,h,w) array. Values are immutable once a
// forward op has consumed the tensor; raw() exists for initialization and
// optimizer updates only.
template <typename T>
class Tensor {
  public:
    using StoragePtr = std::shared_ptr<detail::Storage<T>>;

    Tensor() = default;

    explicit Tensor(Shape s, bool requires_grad = false) {
        if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0)
            throw ValueError("Tensor: negative dimension in " + s.str());
        s_ = std::make_shared<detail::Storage<T>>();
        s_->shape = s;
        s_->value.assign(static_cast<std::size_t>(s.numel()), T(0));
        if (requires_grad) set_requires_grad(true);
    }

    static Tensor full(Shape s, T v, bool requires_grad = false) {
        Tensor t(s, requires_grad);
        for (auto& x : t.s_->value) x = v;
        return t;
    }

    static Tensor from(Shape s, std::vector<T> data, bool requires_grad = false) {
        if (static_cast<std::int64_t>(data.size()) != s.numel())
            throw DimError("Tensor::from: data length " + std::to_string(data.size()) +
                           " does not match shape " + s.str());
        Tensor t(s, requires_grad);
        t.s_->value = std::move(data);
        return t;
    }

    static Tensor wrap(StoragePtr p) {
        Tensor t;
        t.s_ = std::move(p);
        return t;
    }

    bool defined() const { return static_cast<bool>(s_); }
    const Shape& shape() const { return s_->shape; }
    std::int64_t numel() const { return s_->shape.numel(); }

    bool requires_grad() const { return s_ && s_->requires_grad; }

    void set_requires_grad(bool rg) {
        s_->requires_grad = rg;
        if (rg) s_->enable_grad();
    }

    std::span<const T> data() const { return {s_->value.data(), s_->value.size()}; }
    std::span<T> raw() { return {s_->value.data(), s_->value.size()}; }

    bool has_grad() const { return s_ && s_->grad_enabled; }
    std::span<const T> grad() const {
        return s_->grad_enabled ? std::span<const T>{s_->grad.data(), s_->grad.size()}
                                : std::span<const T>{};
    }
    std::span<T> grad_raw() { return {s_->grad.data(), s_->grad.size()}; }

    void zero_grad() {
        if (s_ && s_->grad_enabled) std::fill(s_->grad.begin(), s_->grad.end(), T(0));
    }

    T at(int n, int c, int h, int w) const { return s_->value[index4(s_->shape, n, c, h, w)]; }

    // value of a (1,1,1,1) tensor
    T scalar() const {
        if (numel() != 1) throw ValueError("scalar(): tensor has shape " + shape().str());
        return s_->value[0];
    }

    bool same_storage(const Tensor& o) const { return s_ == o.s_; }
    const StoragePtr& ptr() const { return s_; }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> r(s_->shape, s_->requires_grad);
        auto dst = r.raw();
        for (std::size_t i = 0; i < s_->value.size(); ++i)
            dst[i] = static_cast<U>(s_->value[i]);
        return r;
    }

    // deep copy of values; result is a fresh leaf
    Tensor clone() const {
        Tensor r(s_->shape, s_->requires_grad);
        r.s_->value = s_->value;
        return r;
    }

  private:
    StoragePtr s_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

// Linear record of forward ops. Creation order is topological order;
// backward() replays the closures in reverse, visiting each node once.
// One tape per training context; never shared across threads.
template <typename T>
class Tape {
  public:
    struct Node {
        const char* op;
        std::vector<typename Tensor<T>::StoragePtr> inputs;
        typename Tensor<T>::StoragePtr output;
        std::function<void()> backward;
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape*& current_slot() {
        thread_local Tape* cur = nullptr;
        return cur;
    }
    static Tape* current() { return current_slot(); }

    // RAII activation; ops record onto the active tape
    class Scope {
      public:
        explicit Scope(Tape& t) : prev_(current_slot()) { current_slot() = &t; }
        ~Scope() { current_slot() = prev_; }
        Scope(const Scope&) = delete;
        Scope& operator=(const Scope&) = delete;

      private:
        Tape* prev_;
    };

    // suppresses recording (finite-difference replays, inference inside a scope)
    class Pause {
      public:
        Pause() : prev_(current_slot()) { current_slot() = nullptr; }
        ~Pause() { current_slot() = prev_; }
        Pause(const Pause&) = delete;
        Pause& operator=(const Pause&) = delete;

      private:
        Tape* prev_;
    };

    void record(Node n) { nodes_.push_back(std::move(n)); }

    // Seeds d(loss)=1 and walks the tape in reverse. Non-leaf gradients are
    // reset first; leaf gradients accumulate across calls.
    void backward(const Tensor<T>& loss);

    void zero_all_grads();
    void clear() { nodes_.clear(); }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<Node>& nodes() const { return nodes_; }

  private:
    std::vector<Node> nodes_;
};

struct IntPair {
    int y = 1, x = 1;
};

enum class PoolKind { max, avg };
enum class UpsampleMode { nearest, bilinear };

// ---- ops (all record a tape node when an input carries gradient) ----

// cross-correlation; kernel (c_out, c_in, kh, kw); bias per c_out or undefined
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias,
                 IntPair stride = {1, 1}, IntPair pad = {0, 0});

// 1xk then kx1, each padded to preserve spatial size; k odd, k >= 3
template <typename T>
Tensor<T> asymmetric_conv_pair(const Tensor<T>& x, const Tensor<T>& k_row, const Tensor<T>& b_row,
                               const Tensor<T>& k_col, const Tensor<T>& b_col);

template <typename T>
Tensor<T> pool2d(const Tensor<T>& x, PoolKind kind, int k, int stride);

template <typename T>
Tensor<T> upsample2x(const Tensor<T>& x, UpsampleMode mode);

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T alpha);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> divt(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T c);
template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& x, T c);

// x - s broadcast over x, s of shape (1,1,1,1)
template <typename T>
Tensor<T> sub_bscalar(const Tensor<T>& x, const Tensor<T>& s);

// |x|; subgradient at 0 is 0
template <typename T>
Tensor<T> abs_t(const Tensor<T>& x);

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x);
template <typename T>
Tensor<T> mean_all(const Tensor<T>& x);

// single image i as (1,c,h,w)
template <typename T>
Tensor<T> slice_batch(const Tensor<T>& x, int i);

// forward differences along w / h; replicated border (last column/row -> 0)
template <typename T>
Tensor<T> forward_diff_x(const Tensor<T>& x);
template <typename T>
Tensor<T> forward_diff_y(const Tensor<T>& x);

// ---- gradient checking ----

struct GradcheckReport {
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    bool pass = false;
    long coords_checked = 0;
    std::string worst;  // "input#k[i]" of the worst coordinate
};

// Compares the tape gradient of f() against central finite differences on
// the listed inputs. f must be a scalar-valued closure over `inputs` (shared
// storage handles). coords_per_input < 0 checks every coordinate.
GradcheckReport gradcheck(const std::function<TensorD()>& f, std::span<TensorD> inputs,
                          double h, double tol, int coords_per_input = -1,
                          std::uint64_t seed = 0x5eed);

}  // namespace dk
