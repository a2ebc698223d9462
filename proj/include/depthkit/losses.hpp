#pragma once

#include "depthkit/tensor.hpp"

namespace dk {

struct LossWeights {
    double w1 = 1.0, w2 = 1.0, w3 = 1.0;

    void validate() const {
        auto in01 = [](double w) { return w >= 0.0 && w <= 1.0; };
        if (!in01(w1) || !in01(w2) || !in01(w3))
            throw ValueError("LossWeights: each weight must lie in [0,1]");
        if (w1 == 0.0 && w2 == 0.0 && w3 == 0.0)
            throw ValueError("LossWeights: weights must not all be zero");
    }
};

// component values for reporting; total recombined in double so the
// weighted-sum identity holds to 1e-12 regardless of training precision
struct LossBreakdown {
    double depth = 0.0;
    double grad = 0.0;
    double ssim = 0.0;
    double total = 0.0;
};

// stabilizers for dynamic range 1
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// mean |y - yhat| over every pixel of the batch
template <typename T>
Tensor<T> depth_loss(const Tensor<T>& y, const Tensor<T>& yhat);

// mean |gx(y)-gx(yhat)| + |gy(y)-gy(yhat)|, forward differences with
// replicated border
template <typename T>
Tensor<T> gradient_edge_loss(const Tensor<T>& y, const Tensor<T>& yhat);

// global-image structural similarity with population statistics; batches
// average the per-image index
template <typename T>
Tensor<T> ssim(const Tensor<T>& y, const Tensor<T>& yhat, T c1, T c2);

// (1 - ssim)/2
template <typename T>
Tensor<T> ssim_loss(const Tensor<T>& y, const Tensor<T>& yhat);

template <typename T>
struct CompositeLoss {
    Tensor<T> depth;
    Tensor<T> grad;
    Tensor<T> ssim;
    Tensor<T> total;
    LossWeights weights;

    LossBreakdown values() const {
        LossBreakdown b;
        b.depth = static_cast<double>(depth.scalar());
        b.grad = static_cast<double>(grad.scalar());
        b.ssim = static_cast<double>(ssim.scalar());
        b.total = weights.w1 * b.depth + weights.w2 * b.grad + weights.w3 * b.ssim;
        return b;
    }
};

// w1*depth + w2*grad + w3*ssim, differentiable end to end
template <typename T>
CompositeLoss<T> composite_loss(const Tensor<T>& y, const Tensor<T>& yhat, const LossWeights& w);

}  // namespace dk
