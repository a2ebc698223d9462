#include "depthkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace dk {

namespace {

template <typename T>
bool should_record(std::initializer_list<const Tensor<T>*> ins) {
    if (!Tape<T>::current()) return false;
    for (const auto* t : ins)
        if (t && t->defined() && t->ptr()->grad_enabled) return true;
    return false;
}

template <typename T>
Tensor<T> make_output(Shape s) {
    Tensor<T> out(s);
    out.ptr()->is_leaf = false;
    return out;
}

// marks the output as a gradient carrier and appends the node
template <typename T>
void record_node(const char* op, std::initializer_list<const Tensor<T>*> ins, Tensor<T>& out,
                 std::function<void()> backward) {
    out.ptr()->enable_grad();
    typename Tape<T>::Node node;
    node.op = op;
    for (const auto* t : ins)
        if (t && t->defined()) node.inputs.push_back(t->ptr());
    node.output = out.ptr();
    node.backward = std::move(backward);
    Tape<T>::current()->record(std::move(node));
}

template <typename T>
bool wants_grad(const typename Tensor<T>::StoragePtr& p) {
    return p && p->grad_enabled;
}

// ---- small row-major matrix kernels ----

// C[M,N] (+)= A[M,K] x B[K,N]
template <typename T>
void gemm_nn(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate) {
    if (!accumulate) std::fill(C, C + static_cast<std::size_t>(M) * N, T(0));
    for (int m = 0; m < M; ++m) {
        const T* a = A + static_cast<std::size_t>(m) * K;
        T* c = C + static_cast<std::size_t>(m) * N;
        for (int k = 0; k < K; ++k) {
            const T av = a[k];
            if (av == T(0)) continue;
            const T* b = B + static_cast<std::size_t>(k) * N;
            for (int n = 0; n < N; ++n) c[n] += av * b[n];
        }
    }
}

// C[M,N] (+)= A[M,K] x B[N,K]^T
template <typename T>
void gemm_nt(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate) {
    for (int m = 0; m < M; ++m) {
        const T* a = A + static_cast<std::size_t>(m) * K;
        T* c = C + static_cast<std::size_t>(m) * N;
        for (int n = 0; n < N; ++n) {
            const T* b = B + static_cast<std::size_t>(n) * K;
            T acc = accumulate ? c[n] : T(0);
            for (int k = 0; k < K; ++k) acc += a[k] * b[k];
            c[n] = acc;
        }
    }
}

// C[M,N] (+)= A[K,M]^T x B[K,N]
template <typename T>
void gemm_tn(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate) {
    if (!accumulate) std::fill(C, C + static_cast<std::size_t>(M) * N, T(0));
    for (int k = 0; k < K; ++k) {
        const T* a = A + static_cast<std::size_t>(k) * M;
        const T* b = B + static_cast<std::size_t>(k) * N;
        for (int m = 0; m < M; ++m) {
            const T av = a[m];
            if (av == T(0)) continue;
            T* c = C + static_cast<std::size_t>(m) * N;
            for (int n = 0; n < N; ++n) c[n] += av * b[n];
        }
    }
}

// cols: (C*KH*KW) x (OH*OW), row-major
template <typename T>
void im2col(const T* x, int C, int H, int W, int KH, int KW, int SY, int SX, int PY, int PX,
            int OH, int OW, T* cols) {
    const int spatial = OH * OW;
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < KH; ++ky) {
            for (int kx = 0; kx < KW; ++kx) {
                T* row = cols + (static_cast<std::size_t>(c) * KH * KW + ky * KW + kx) * spatial;
                for (int oy = 0; oy < OH; ++oy) {
                    const int iy = oy * SY - PY + ky;
                    T* out = row + static_cast<std::size_t>(oy) * OW;
                    if (iy < 0 || iy >= H) {
                        std::fill(out, out + OW, T(0));
                        continue;
                    }
                    const T* in = x + (static_cast<std::size_t>(c) * H + iy) * W;
                    for (int ox = 0; ox < OW; ++ox) {
                        const int ix = ox * SX - PX + kx;
                        out[ox] = (ix >= 0 && ix < W) ? in[ix] : T(0);
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* cols, int C, int H, int W, int KH, int KW, int SY, int SX, int PY,
                int PX, int OH, int OW, T* dx) {
    const int spatial = OH * OW;
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < KH; ++ky) {
            for (int kx = 0; kx < KW; ++kx) {
                const T* row =
                    cols + (static_cast<std::size_t>(c) * KH * KW + ky * KW + kx) * spatial;
                for (int oy = 0; oy < OH; ++oy) {
                    const int iy = oy * SY - PY + ky;
                    if (iy < 0 || iy >= H) continue;
                    T* out = dx + (static_cast<std::size_t>(c) * H + iy) * W;
                    const T* in = row + static_cast<std::size_t>(oy) * OW;
                    for (int ox = 0; ox < OW; ++ox) {
                        const int ix = ox * SX - PX + kx;
                        if (ix >= 0 && ix < W) out[ix] += in[ox];
                    }
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward(const typename Tensor<T>::StoragePtr& xs,
                     const typename Tensor<T>::StoragePtr& ks,
                     const typename Tensor<T>::StoragePtr& bs,
                     const typename Tensor<T>::StoragePtr& os, IntPair stride, IntPair pad) {
    const Shape& xsh = xs->shape;
    const Shape& ksh = ks->shape;
    const Shape& osh = os->shape;
    const int CI = xsh.c, H = xsh.h, W = xsh.w;
    const int CO = ksh.n, KH = ksh.h, KW = ksh.w;
    const int OH = osh.h, OW = osh.w;
    const int spatial = OH * OW;
    const int ckk = CI * KH * KW;

    std::vector<T> cols(static_cast<std::size_t>(ckk) * spatial);
    std::vector<T> dcols;
    const bool need_dx = wants_grad<T>(xs);
    if (need_dx) dcols.resize(cols.size());

    for (int n = 0; n < xsh.n; ++n) {
        const T* xn = xs->value.data() + static_cast<std::size_t>(n) * CI * H * W;
        const T* dout = os->grad.data() + static_cast<std::size_t>(n) * CO * spatial;

        if (wants_grad<T>(ks) || need_dx)
            im2col(xn, CI, H, W, KH, KW, stride.y, stride.x, pad.y, pad.x, OH, OW, cols.data());

        if (wants_grad<T>(ks))
            gemm_nt(CO, ckk, spatial, dout, cols.data(), ks->grad.data(), true);

        if (wants_grad<T>(bs)) {
            for (int co = 0; co < CO; ++co) {
                T acc = T(0);
                const T* d = dout + static_cast<std::size_t>(co) * spatial;
                for (int i = 0; i < spatial; ++i) acc += d[i];
                bs->grad[co] += acc;
            }
        }

        if (need_dx) {
            gemm_tn(ckk, spatial, CO, ks->value.data(), dout, dcols.data(), false);
            col2im_add(dcols.data(), CI, H, W, KH, KW, stride.y, stride.x, pad.y, pad.x, OH, OW,
                       xs->grad.data() + static_cast<std::size_t>(n) * CI * H * W);
        }
    }
}

template <typename T>
T stable_sigmoid(T x) {
    T s;
    if (x >= T(0)) {
        const T t = std::exp(-x);
        s = T(1) / (T(1) + t);
    } else {
        const T t = std::exp(x);
        s = t / (T(1) + t);
    }
    // keep the contract range open even in saturation
    if (s <= T(0)) s = std::numeric_limits<T>::min();
    if (s >= T(1)) s = T(1) - std::numeric_limits<T>::epsilon() / T(2);
    return s;
}

// elementwise binary op plumbing
template <typename T, typename Fwd, typename Bwd>
Tensor<T> binary_op(const char* name, const Tensor<T>& a, const Tensor<T>& b, Fwd fwd, Bwd bwd) {
    if (!(a.shape() == b.shape()))
        throw DimError(std::string(name) + ": shape mismatch " + a.shape().str() + " vs " +
                       b.shape().str());
    Tensor<T> out = make_output<T>(a.shape());
    auto av = a.data();
    auto bv = b.data();
    auto ov = out.raw();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = fwd(av[i], bv[i]);
    if (should_record<T>({&a, &b})) {
        record_node<T>(name, {&a, &b}, out,
                       [as = a.ptr(), bs = b.ptr(), os = out.ptr(), bwd]() {
                           const std::size_t m = os->grad.size();
                           for (std::size_t i = 0; i < m; ++i) {
                               const T d = os->grad[i];
                               if (d == T(0)) continue;
                               T da, db;
                               bwd(as->value[i], bs->value[i], os->value[i], d, da, db);
                               if (as->grad_enabled) as->grad[i] += da;
                               if (bs->grad_enabled) bs->grad[i] += db;
                           }
                       });
    }
    return out;
}

// elementwise unary op plumbing
template <typename T, typename Fwd, typename Bwd>
Tensor<T> unary_op(const char* name, const Tensor<T>& x, Fwd fwd, Bwd bwd) {
    Tensor<T> out = make_output<T>(x.shape());
    auto xv = x.data();
    auto ov = out.raw();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = fwd(xv[i]);
    if (should_record<T>({&x})) {
        record_node<T>(name, {&x}, out, [xs = x.ptr(), os = out.ptr(), bwd]() {
            const std::size_t m = os->grad.size();
            for (std::size_t i = 0; i < m; ++i) {
                const T d = os->grad[i];
                if (d != T(0)) xs->grad[i] += bwd(xs->value[i], os->value[i], d);
            }
        });
    }
    return out;
}

}  // namespace

// ---- Tape ----

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
    if (!loss.defined() || !(loss.shape() == Shape{1, 1, 1, 1}))
        throw ValueError("backward: loss must have shape (1,1,1,1), got " +
                         (loss.defined() ? loss.shape().str() : std::string("<undefined>")));
    if (!loss.has_grad())
        throw ValueError("backward: loss does not participate in this tape");

    // reset intermediate grads; leaves keep accumulating across calls
    for (auto& node : nodes_) {
        if (node.output && !node.output->is_leaf)
            std::fill(node.output->grad.begin(), node.output->grad.end(), T(0));
        for (auto& in : node.inputs)
            if (in && !in->is_leaf && in->grad_enabled)
                std::fill(in->grad.begin(), in->grad.end(), T(0));
    }

    loss.ptr()->grad[0] += T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
        if (it->backward) it->backward();
}

template <typename T>
void Tape<T>::zero_all_grads() {
    for (auto& node : nodes_) {
        if (node.output && node.output->grad_enabled)
            std::fill(node.output->grad.begin(), node.output->grad.end(), T(0));
        for (auto& in : node.inputs)
            if (in && in->grad_enabled) std::fill(in->grad.begin(), in->grad.end(), T(0));
    }
}

// ---- convolution ----

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias,
                 IntPair stride, IntPair pad) {
    const Shape& xs = x.shape();
    const Shape& ks = kernel.shape();
    if (ks.c != xs.c)
        throw DimError("conv2d: kernel expects " + std::to_string(ks.c) +
                       " input channels, input is " + xs.str() + ", kernel " + ks.str());
    if (stride.y <= 0 || stride.x <= 0) throw ValueError("conv2d: stride must be positive");
    if (pad.y < 0 || pad.x < 0) throw ValueError("conv2d: padding must be nonnegative");
    if (bias.defined() && !(bias.shape() == Shape{1, ks.n, 1, 1}))
        throw DimError("conv2d: bias shape " + bias.shape().str() + " does not match " +
                       Shape{1, ks.n, 1, 1}.str());

    const int OH = (xs.h + 2 * pad.y - ks.h) / stride.y + 1;
    const int OW = (xs.w + 2 * pad.x - ks.w) / stride.x + 1;
    if (xs.h + 2 * pad.y < ks.h || xs.w + 2 * pad.x < ks.w || OH < 1 || OW < 1)
        throw DimError("conv2d: kernel " + ks.str() + " does not fit input " + xs.str() +
                       " with given stride/padding");

    Tensor<T> out = make_output<T>({xs.n, ks.n, OH, OW});
    const int spatial = OH * OW;
    const int ckk = xs.c * ks.h * ks.w;

    std::vector<T> cols(static_cast<std::size_t>(ckk) * spatial);
    for (int n = 0; n < xs.n; ++n) {
        const T* xn = x.data().data() + static_cast<std::size_t>(n) * xs.c * xs.h * xs.w;
        T* on = out.raw().data() + static_cast<std::size_t>(n) * ks.n * spatial;
        im2col(xn, xs.c, xs.h, xs.w, ks.h, ks.w, stride.y, stride.x, pad.y, pad.x, OH, OW,
               cols.data());
        gemm_nn(ks.n, spatial, ckk, kernel.data().data(), cols.data(), on, false);
        if (bias.defined()) {
            for (int co = 0; co < ks.n; ++co) {
                const T b = bias.data()[co];
                T* row = on + static_cast<std::size_t>(co) * spatial;
                for (int i = 0; i < spatial; ++i) row[i] += b;
            }
        }
    }

    if (should_record<T>({&x, &kernel, &bias})) {
        record_node<T>("conv2d", {&x, &kernel, &bias}, out,
                       [xs_ = x.ptr(), ks_ = kernel.ptr(),
                        bs_ = bias.defined() ? bias.ptr() : nullptr, os_ = out.ptr(), stride,
                        pad]() { conv2d_backward<T>(xs_, ks_, bs_, os_, stride, pad); });
    }
    return out;
}

template <typename T>
Tensor<T> asymmetric_conv_pair(const Tensor<T>& x, const Tensor<T>& k_row, const Tensor<T>& b_row,
                               const Tensor<T>& k_col, const Tensor<T>& b_col) {
    const Shape& kr = k_row.shape();
    const Shape& kc = k_col.shape();
    if (kr.h != 1 || kc.w != 1)
        throw ValueError("asymmetric_conv_pair: kernels must be 1xk and kx1, got " + kr.str() +
                         " and " + kc.str());
    const int k = kr.w;
    if (kc.h != k)
        throw ValueError("asymmetric_conv_pair: kernel lengths differ: " + kr.str() + " vs " +
                         kc.str());
    if (k < 3 || k % 2 == 0)
        throw ValueError("asymmetric_conv_pair: k must be odd and >= 3, got " +
                         std::to_string(k));
    const int p = (k - 1) / 2;
    Tensor<T> mid = conv2d(x, k_row, b_row, {1, 1}, {0, p});
    return conv2d(mid, k_col, b_col, {1, 1}, {p, 0});
}

// ---- pooling ----

template <typename T>
Tensor<T> pool2d(const Tensor<T>& x, PoolKind kind, int k, int stride) {
    const Shape& xs = x.shape();
    if (k < 1 || stride < 1) throw ValueError("pool2d: window and stride must be >= 1");
    if (xs.h < k || xs.w < k)
        throw DimError("pool2d: window " + std::to_string(k) + " larger than input " + xs.str());
    const int OH = (xs.h - k) / stride + 1;
    const int OW = (xs.w - k) / stride + 1;
    Tensor<T> out = make_output<T>({xs.n, xs.c, OH, OW});

    auto xv = x.data();
    auto ov = out.raw();
    std::vector<std::int32_t> argmax;
    if (kind == PoolKind::max) argmax.resize(ov.size());

    const T inv = T(1) / static_cast<T>(k * k);
    std::size_t oi = 0;
    for (int n = 0; n < xs.n; ++n) {
        for (int c = 0; c < xs.c; ++c) {
            const T* plane = xv.data() + (static_cast<std::size_t>(n) * xs.c + c) * xs.h * xs.w;
            for (int oy = 0; oy < OH; ++oy) {
                for (int ox = 0; ox < OW; ++ox, ++oi) {
                    const int y0 = oy * stride, x0 = ox * stride;
                    if (kind == PoolKind::max) {
                        // ties resolve to the first maximum in row-major order
                        T best = plane[static_cast<std::size_t>(y0) * xs.w + x0];
                        int besti = y0 * xs.w + x0;
                        for (int dy = 0; dy < k; ++dy)
                            for (int dx = 0; dx < k; ++dx) {
                                const int idx = (y0 + dy) * xs.w + (x0 + dx);
                                if (plane[idx] > best) {
                                    best = plane[idx];
                                    besti = idx;
                                }
                            }
                        ov[oi] = best;
                        argmax[oi] = besti;
                    } else {
                        T acc = T(0);
                        for (int dy = 0; dy < k; ++dy)
                            for (int dx = 0; dx < k; ++dx)
                                acc += plane[static_cast<std::size_t>(y0 + dy) * xs.w + (x0 + dx)];
                        ov[oi] = acc * inv;
                    }
                }
            }
        }
    }

    if (should_record<T>({&x})) {
        record_node<T>(kind == PoolKind::max ? "pool2d_max" : "pool2d_avg", {&x}, out,
                       [xs_ = x.ptr(), os_ = out.ptr(), am = std::move(argmax), k, stride, inv]() {
                           const Shape& s = xs_->shape;
                           const Shape& o = os_->shape;
                           const int plane = s.h * s.w;
                           const int oplane = o.h * o.w;
                           std::size_t oi = 0;
                           for (int n = 0; n < s.n; ++n)
                               for (int c = 0; c < s.c; ++c) {
                                   T* dx = xs_->grad.data() +
                                           (static_cast<std::size_t>(n) * s.c + c) * plane;
                                   const T* dout = os_->grad.data() +
                                                   (static_cast<std::size_t>(n) * s.c + c) * oplane;
                                   if (!am.empty()) {
                                       for (int i = 0; i < oplane; ++i, ++oi) dx[am[oi]] += dout[i];
                                   } else {
                                       for (int oy = 0; oy < o.h; ++oy)
                                           for (int ox = 0; ox < o.w; ++ox) {
                                               const T d = dout[oy * o.w + ox] * inv;
                                               if (d == T(0)) continue;
                                               const int y0 = oy * stride, x0 = ox * stride;
                                               for (int dy = 0; dy < k; ++dy)
                                                   for (int dxx = 0; dxx < k; ++dxx)
                                                       dx[(y0 + dy) * s.w + (x0 + dxx)] += d;
                                           }
                                   }
                               }
                       });
    }
    return out;
}

// ---- upsampling ----

template <typename T>
Tensor<T> upsample2x(const Tensor<T>& x, UpsampleMode mode) {
    const Shape& xs = x.shape();
    Tensor<T> out = make_output<T>({xs.n, xs.c, xs.h * 2, xs.w * 2});
    auto xv = x.data();
    auto ov = out.raw();
    const int H = xs.h, W = xs.w, OH = 2 * xs.h, OW = 2 * xs.w;

    if (mode == UpsampleMode::nearest) {
        for (int nc = 0; nc < xs.n * xs.c; ++nc) {
            const T* in = xv.data() + static_cast<std::size_t>(nc) * H * W;
            T* o = ov.data() + static_cast<std::size_t>(nc) * OH * OW;
            for (int oy = 0; oy < OH; ++oy) {
                const T* row = in + static_cast<std::size_t>(oy / 2) * W;
                for (int ox = 0; ox < OW; ++ox) o[static_cast<std::size_t>(oy) * OW + ox] = row[ox / 2];
            }
        }
    } else {
        // half-pixel centers: src = (dst + 0.5)/2 - 0.5, clamped
        for (int nc = 0; nc < xs.n * xs.c; ++nc) {
            const T* in = xv.data() + static_cast<std::size_t>(nc) * H * W;
            T* o = ov.data() + static_cast<std::size_t>(nc) * OH * OW;
            for (int oy = 0; oy < OH; ++oy) {
                double sy = 0.5 * (oy + 0.5) - 0.5;
                sy = std::clamp(sy, 0.0, static_cast<double>(H - 1));
                const int y0 = static_cast<int>(sy);
                const int y1 = std::min(y0 + 1, H - 1);
                const T wy = static_cast<T>(sy - y0);
                for (int ox = 0; ox < OW; ++ox) {
                    double sx = 0.5 * (ox + 0.5) - 0.5;
                    sx = std::clamp(sx, 0.0, static_cast<double>(W - 1));
                    const int x0 = static_cast<int>(sx);
                    const int x1 = std::min(x0 + 1, W - 1);
                    const T wx = static_cast<T>(sx - x0);
                    o[static_cast<std::size_t>(oy) * OW + ox] =
                        (T(1) - wy) * ((T(1) - wx) * in[y0 * W + x0] + wx * in[y0 * W + x1]) +
                        wy * ((T(1) - wx) * in[y1 * W + x0] + wx * in[y1 * W + x1]);
                }
            }
        }
    }

    if (should_record<T>({&x})) {
        record_node<T>(mode == UpsampleMode::nearest ? "upsample2x_nearest" : "upsample2x_bilinear",
                       {&x}, out, [xs_ = x.ptr(), os_ = out.ptr(), mode]() {
                           const Shape& s = xs_->shape;
                           const int H = s.h, W = s.w, OH = 2 * s.h, OW = 2 * s.w;
                           for (int nc = 0; nc < s.n * s.c; ++nc) {
                               T* dx = xs_->grad.data() + static_cast<std::size_t>(nc) * H * W;
                               const T* d = os_->grad.data() + static_cast<std::size_t>(nc) * OH * OW;
                               if (mode == UpsampleMode::nearest) {
                                   for (int oy = 0; oy < OH; ++oy)
                                       for (int ox = 0; ox < OW; ++ox)
                                           dx[(oy / 2) * W + ox / 2] +=
                                               d[static_cast<std::size_t>(oy) * OW + ox];
                               } else {
                                   for (int oy = 0; oy < OH; ++oy) {
                                       double sy = 0.5 * (oy + 0.5) - 0.5;
                                       sy = std::clamp(sy, 0.0, static_cast<double>(H - 1));
                                       const int y0 = static_cast<int>(sy);
                                       const int y1 = std::min(y0 + 1, H - 1);
                                       const T wy = static_cast<T>(sy - y0);
                                       for (int ox = 0; ox < OW; ++ox) {
                                           double sx = 0.5 * (ox + 0.5) - 0.5;
                                           sx = std::clamp(sx, 0.0, static_cast<double>(W - 1));
                                           const int x0 = static_cast<int>(sx);
                                           const int x1 = std::min(x0 + 1, W - 1);
                                           const T wx = static_cast<T>(sx - x0);
                                           const T g = d[static_cast<std::size_t>(oy) * OW + ox];
                                           dx[y0 * W + x0] += (T(1) - wy) * (T(1) - wx) * g;
                                           dx[y0 * W + x1] += (T(1) - wy) * wx * g;
                                           dx[y1 * W + x0] += wy * (T(1) - wx) * g;
                                           dx[y1 * W + x1] += wy * wx * g;
                                       }
                                   }
                               }
                           }
                       });
    }
    return out;
}

// ---- concat / slice ----

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    const Shape& as = a.shape();
    const Shape& bs = b.shape();
    if (as.n != bs.n || as.h != bs.h || as.w != bs.w)
        throw DimError("concat_channels: spatial/batch mismatch " + as.str() + " vs " + bs.str());
    Tensor<T> out = make_output<T>({as.n, as.c + bs.c, as.h, as.w});
    const std::size_t plane = static_cast<std::size_t>(as.h) * as.w;
    auto ov = out.raw();
    for (int n = 0; n < as.n; ++n) {
        std::memcpy(ov.data() + (static_cast<std::size_t>(n) * (as.c + bs.c)) * plane,
                    a.data().data() + static_cast<std::size_t>(n) * as.c * plane,
                    sizeof(T) * as.c * plane);
        std::memcpy(ov.data() + (static_cast<std::size_t>(n) * (as.c + bs.c) + as.c) * plane,
                    b.data().data() + static_cast<std::size_t>(n) * bs.c * plane,
                    sizeof(T) * bs.c * plane);
    }
    if (should_record<T>({&a, &b})) {
        record_node<T>("concat_channels", {&a, &b}, out,
                       [as_ = a.ptr(), bs_ = b.ptr(), os_ = out.ptr()]() {
                           const Shape& sa = as_->shape;
                           const Shape& sb = bs_->shape;
                           const std::size_t plane = static_cast<std::size_t>(sa.h) * sa.w;
                           const int cc = sa.c + sb.c;
                           for (int n = 0; n < sa.n; ++n) {
                               const T* d = os_->grad.data() + static_cast<std::size_t>(n) * cc * plane;
                               if (as_->grad_enabled) {
                                   T* da = as_->grad.data() + static_cast<std::size_t>(n) * sa.c * plane;
                                   for (std::size_t i = 0; i < sa.c * plane; ++i) da[i] += d[i];
                               }
                               if (bs_->grad_enabled) {
                                   T* db = bs_->grad.data() + static_cast<std::size_t>(n) * sb.c * plane;
                                   const T* dsrc = d + static_cast<std::size_t>(sa.c) * plane;
                                   for (std::size_t i = 0; i < sb.c * plane; ++i) db[i] += dsrc[i];
                               }
                           }
                       });
    }
    return out;
}

template <typename T>
Tensor<T> slice_batch(const Tensor<T>& x, int i) {
    const Shape& xs = x.shape();
    if (i < 0 || i >= xs.n)
        throw ValueError("slice_batch: index " + std::to_string(i) + " out of range for " +
                         xs.str());
    Tensor<T> out = make_output<T>({1, xs.c, xs.h, xs.w});
    const std::size_t m = static_cast<std::size_t>(xs.c) * xs.h * xs.w;
    std::memcpy(out.raw().data(), x.data().data() + static_cast<std::size_t>(i) * m,
                sizeof(T) * m);
    if (should_record<T>({&x})) {
        record_node<T>("slice_batch", {&x}, out, [xs_ = x.ptr(), os_ = out.ptr(), i, m]() {
            T* dx = xs_->grad.data() + static_cast<std::size_t>(i) * m;
            for (std::size_t j = 0; j < m; ++j) dx[j] += os_->grad[j];
        });
    }
    return out;
}

// ---- activations ----

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    return unary_op<T>(
        "relu", x, [](T v) { return v > T(0) ? v : T(0); },
        [](T v, T, T d) { return v > T(0) ? d : T(0); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T alpha) {
    if (!(alpha > T(0) && alpha < T(1)))
        throw ValueError("leaky_relu: alpha must be in (0,1)");
    return unary_op<T>(
        "leaky_relu", x, [alpha](T v) { return v > T(0) ? v : alpha * v; },
        [alpha](T v, T, T d) { return v > T(0) ? d : alpha * d; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    return unary_op<T>(
        "sigmoid", x, [](T v) { return stable_sigmoid(v); },
        [](T, T o, T d) { return d * o * (T(1) - o); });
}

template <typename T>
Tensor<T> abs_t(const Tensor<T>& x) {
    return unary_op<T>(
        "abs", x, [](T v) { return std::abs(v); },
        [](T v, T, T d) { return v > T(0) ? d : (v < T(0) ? -d : T(0)); });
}

// ---- elementwise arithmetic ----

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    return binary_op<T>(
        "add", a, b, [](T x, T y) { return x + y; },
        [](T, T, T, T d, T& da, T& db) {
            da = d;
            db = d;
        });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    return binary_op<T>(
        "sub", a, b, [](T x, T y) { return x - y; },
        [](T, T, T, T d, T& da, T& db) {
            da = d;
            db = -d;
        });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    return binary_op<T>(
        "mul", a, b, [](T x, T y) { return x * y; },
        [](T x, T y, T, T d, T& da, T& db) {
            da = d * y;
            db = d * x;
        });
}

template <typename T>
Tensor<T> divt(const Tensor<T>& a, const Tensor<T>& b) {
    return binary_op<T>(
        "div", a, b, [](T x, T y) { return x / y; },
        [](T, T y, T o, T d, T& da, T& db) {
            da = d / y;
            db = -d * o / y;
        });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T c) {
    return unary_op<T>(
        "add_scalar", x, [c](T v) { return v + c; }, [](T, T, T d) { return d; });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& x, T c) {
    return unary_op<T>(
        "mul_scalar", x, [c](T v) { return v * c; }, [c](T, T, T d) { return d * c; });
}

template <typename T>
Tensor<T> sub_bscalar(const Tensor<T>& x, const Tensor<T>& s) {
    if (!(s.shape() == Shape{1, 1, 1, 1}))
        throw DimError("sub_bscalar: subtrahend must be (1,1,1,1), got " + s.shape().str());
    Tensor<T> out = make_output<T>(x.shape());
    const T sv = s.data()[0];
    auto xv = x.data();
    auto ov = out.raw();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] - sv;
    if (should_record<T>({&x, &s})) {
        record_node<T>("sub_bscalar", {&x, &s}, out,
                       [xs_ = x.ptr(), ss_ = s.ptr(), os_ = out.ptr()]() {
                           T acc = T(0);
                           const std::size_t m = os_->grad.size();
                           for (std::size_t i = 0; i < m; ++i) {
                               const T d = os_->grad[i];
                               if (xs_->grad_enabled) xs_->grad[i] += d;
                               acc += d;
                           }
                           if (ss_->grad_enabled) ss_->grad[0] -= acc;
                       });
    }
    return out;
}

// ---- reductions ----

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
    Tensor<T> out = make_output<T>({1, 1, 1, 1});
    T acc = T(0);
    for (T v : x.data()) acc += v;
    out.raw()[0] = acc;
    if (should_record<T>({&x})) {
        record_node<T>("sum_all", {&x}, out, [xs_ = x.ptr(), os_ = out.ptr()]() {
            const T d = os_->grad[0];
            if (d == T(0)) return;
            for (auto& g : xs_->grad) g += d;
        });
    }
    return out;
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
    if (x.numel() == 0) throw ValueError("mean_all: empty tensor");
    Tensor<T> out = make_output<T>({1, 1, 1, 1});
    T acc = T(0);
    for (T v : x.data()) acc += v;
    const T inv = T(1) / static_cast<T>(x.numel());
    out.raw()[0] = acc * inv;
    if (should_record<T>({&x})) {
        record_node<T>("mean_all", {&x}, out, [xs_ = x.ptr(), os_ = out.ptr(), inv]() {
            const T d = os_->grad[0] * inv;
            if (d == T(0)) return;
            for (auto& g : xs_->grad) g += d;
        });
    }
    return out;
}

// ---- forward differences ----

template <typename T>
Tensor<T> forward_diff_x(const Tensor<T>& x) {
    const Shape& s = x.shape();
    if (s.w < 2 || s.h < 2)
        throw DimError("forward_diff_x: spatial dims must be >= 2, got " + s.str());
    Tensor<T> out = make_output<T>(s);
    auto xv = x.data();
    auto ov = out.raw();
    const std::size_t planes = static_cast<std::size_t>(s.n) * s.c;
    for (std::size_t p = 0; p < planes; ++p) {
        const T* in = xv.data() + p * s.h * s.w;
        T* o = ov.data() + p * s.h * s.w;
        for (int y = 0; y < s.h; ++y) {
            for (int xcol = 0; xcol + 1 < s.w; ++xcol)
                o[y * s.w + xcol] = in[y * s.w + xcol + 1] - in[y * s.w + xcol];
            o[y * s.w + s.w - 1] = T(0);  // replicated last column
        }
    }
    if (should_record<T>({&x})) {
        record_node<T>("forward_diff_x", {&x}, out, [xs_ = x.ptr(), os_ = out.ptr()]() {
            const Shape& s = xs_->shape;
            const std::size_t planes = static_cast<std::size_t>(s.n) * s.c;
            for (std::size_t p = 0; p < planes; ++p) {
                T* dx = xs_->grad.data() + p * s.h * s.w;
                const T* d = os_->grad.data() + p * s.h * s.w;
                for (int y = 0; y < s.h; ++y)
                    for (int xcol = 0; xcol + 1 < s.w; ++xcol) {
                        const T g = d[y * s.w + xcol];
                        dx[y * s.w + xcol + 1] += g;
                        dx[y * s.w + xcol] -= g;
                    }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> forward_diff_y(const Tensor<T>& x) {
    const Shape& s = x.shape();
    if (s.w < 2 || s.h < 2)
        throw DimError("forward_diff_y: spatial dims must be >= 2, got " + s.str());
    Tensor<T> out = make_output<T>(s);
    auto xv = x.data();
    auto ov = out.raw();
    const std::size_t planes = static_cast<std::size_t>(s.n) * s.c;
    for (std::size_t p = 0; p < planes; ++p) {
        const T* in = xv.data() + p * s.h * s.w;
        T* o = ov.data() + p * s.h * s.w;
        for (int y = 0; y + 1 < s.h; ++y)
            for (int xcol = 0; xcol < s.w; ++xcol)
                o[y * s.w + xcol] = in[(y + 1) * s.w + xcol] - in[y * s.w + xcol];
        for (int xcol = 0; xcol < s.w; ++xcol) o[(s.h - 1) * s.w + xcol] = T(0);
    }
    if (should_record<T>({&x})) {
        record_node<T>("forward_diff_y", {&x}, out, [xs_ = x.ptr(), os_ = out.ptr()]() {
            const Shape& s = xs_->shape;
            const std::size_t planes = static_cast<std::size_t>(s.n) * s.c;
            for (std::size_t p = 0; p < planes; ++p) {
                T* dx = xs_->grad.data() + p * s.h * s.w;
                const T* d = os_->grad.data() + p * s.h * s.w;
                for (int y = 0; y + 1 < s.h; ++y)
                    for (int xcol = 0; xcol < s.w; ++xcol) {
                        const T g = d[y * s.w + xcol];
                        dx[(y + 1) * s.w + xcol] += g;
                        dx[y * s.w + xcol] -= g;
                    }
            }
        });
    }
    return out;
}

// ---- gradcheck ----

GradcheckReport gradcheck(const std::function<TensorD()>& f, std::span<TensorD> inputs, double h,
                          double tol, int coords_per_input, std::uint64_t seed) {
    Tape<double> tape;
    TensorD out;
    {
        Tape<double>::Scope scope(tape);
        out = f();
    }
    if (!out.defined() || !(out.shape() == Shape{1, 1, 1, 1}))
        throw ValueError("gradcheck: f must return a (1,1,1,1) scalar");
    if (!std::isfinite(out.scalar()))
        throw NumericError("gradcheck: f produced a non-finite value");
    for (auto& in : inputs) in.zero_grad();  // measure this tape only
    tape.backward(out);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(inputs.size());
    for (auto& in : inputs) {
        auto g = in.grad();
        analytic.emplace_back(g.begin(), g.end());
        if (analytic.back().empty())
            analytic.back().assign(static_cast<std::size_t>(in.numel()), 0.0);
    }

    GradcheckReport rep;
    Rng rng(seed);
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        auto vals = inputs[k].raw();
        const std::int64_t m = inputs[k].numel();
        std::vector<std::int64_t> coords;
        if (coords_per_input < 0 || coords_per_input >= m) {
            coords.resize(static_cast<std::size_t>(m));
            for (std::int64_t i = 0; i < m; ++i) coords[static_cast<std::size_t>(i)] = i;
        } else {
            for (int i = 0; i < coords_per_input; ++i)
                coords.push_back(static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(m)));
        }
        for (std::int64_t i : coords) {
            const double saved = vals[static_cast<std::size_t>(i)];
            double fp, fm;
            {
                Tape<double>::Pause pause;
                vals[static_cast<std::size_t>(i)] = saved + h;
                fp = f().scalar();
                vals[static_cast<std::size_t>(i)] = saved - h;
                fm = f().scalar();
                vals[static_cast<std::size_t>(i)] = saved;
            }
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw NumericError("gradcheck: non-finite value during finite differences");
            const double fd = (fp - fm) / (2.0 * h);
            const double an = analytic[k][static_cast<std::size_t>(i)];
            const double abs_err = std::abs(an - fd);
            const double rel = abs_err / std::max({std::abs(an), std::abs(fd), 1e-3});
            ++rep.coords_checked;
            rep.max_abs_err = std::max(rep.max_abs_err, abs_err);
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst = "input#" + std::to_string(k) + "[" + std::to_string(i) + "]";
            }
        }
    }
    rep.pass = rep.max_rel_err < tol;
    return rep;
}

// ---- explicit instantiations ----

#define DK_INSTANTIATE_OPS(T)                                                                   \
    template class Tape<T>;                                                                     \
    template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, IntPair, \
                                 IntPair);                                                      \
    template Tensor<T> asymmetric_conv_pair<T>(const Tensor<T>&, const Tensor<T>&,              \
                                               const Tensor<T>&, const Tensor<T>&,              \
                                               const Tensor<T>&);                               \
    template Tensor<T> pool2d<T>(const Tensor<T>&, PoolKind, int, int);                         \
    template Tensor<T> upsample2x<T>(const Tensor<T>&, UpsampleMode);                           \
    template Tensor<T> concat_channels<T>(const Tensor<T>&, const Tensor<T>&);                  \
    template Tensor<T> slice_batch<T>(const Tensor<T>&, int);                                   \
    template Tensor<T> relu<T>(const Tensor<T>&);                                               \
    template Tensor<T> leaky_relu<T>(const Tensor<T>&, T);                                      \
    template Tensor<T> sigmoid<T>(const Tensor<T>&);                                            \
    template Tensor<T> abs_t<T>(const Tensor<T>&);                                              \
    template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                              \
    template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                              \
    template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                              \
    template Tensor<T> divt<T>(const Tensor<T>&, const Tensor<T>&);                             \
    template Tensor<T> add_scalar<T>(const Tensor<T>&, T);                                      \
    template Tensor<T> mul_scalar<T>(const Tensor<T>&, T);                                      \
    template Tensor<T> sub_bscalar<T>(const Tensor<T>&, const Tensor<T>&);                      \
    template Tensor<T> sum_all<T>(const Tensor<T>&);                                            \
    template Tensor<T> mean_all<T>(const Tensor<T>&);                                           \
    template Tensor<T> forward_diff_x<T>(const Tensor<T>&);                                     \
    template Tensor<T> forward_diff_y<T>(const Tensor<T>&);

DK_INSTANTIATE_OPS(float)
DK_INSTANTIATE_OPS(double)

#undef DK_INSTANTIATE_OPS

}  // namespace dk
