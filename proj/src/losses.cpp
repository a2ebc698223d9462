#include "depthkit/losses.hpp"

namespace dk {

namespace {

template <typename T>
void check_pair(const char* name, const Tensor<T>& y, const Tensor<T>& yhat) {
    if (!y.defined() || !yhat.defined()) throw ValueError(std::string(name) + ": undefined tensor");
    if (!(y.shape() == yhat.shape()))
        throw DimError(std::string(name) + ": shape mismatch " + y.shape().str() + " vs " +
                       yhat.shape().str());
}

}  // namespace

template <typename T>
Tensor<T> depth_loss(const Tensor<T>& y, const Tensor<T>& yhat) {
    check_pair("depth_loss", y, yhat);
    return mean_all(abs_t(sub(y, yhat)));
}

template <typename T>
Tensor<T> gradient_edge_loss(const Tensor<T>& y, const Tensor<T>& yhat) {
    check_pair("gradient_edge_loss", y, yhat);
    if (y.shape().h < 2 || y.shape().w < 2)
        throw DimError("gradient_edge_loss: needs at least 2x2 maps, got " + y.shape().str());
    auto dx = abs_t(sub(forward_diff_x(y), forward_diff_x(yhat)));
    auto dy = abs_t(sub(forward_diff_y(y), forward_diff_y(yhat)));
    return mean_all(add(dx, dy));
}

template <typename T>
Tensor<T> ssim(const Tensor<T>& y, const Tensor<T>& yhat, T c1, T c2) {
    check_pair("ssim", y, yhat);
    if (!(c1 > T(0)) || !(c2 > T(0))) throw ValueError("ssim: c1 and c2 must be positive");

    const int batch = y.shape().n;
    Tensor<T> acc;
    for (int i = 0; i < batch; ++i) {
        Tensor<T> yi = batch == 1 ? y : slice_batch(y, i);
        Tensor<T> pi = batch == 1 ? yhat : slice_batch(yhat, i);

        auto mu_y = mean_all(yi);
        auto mu_p = mean_all(pi);
        auto cy = sub_bscalar(yi, mu_y);
        auto cp = sub_bscalar(pi, mu_p);
        auto var_y = mean_all(mul(cy, cy));
        auto var_p = mean_all(mul(cp, cp));
        auto cov = mean_all(mul(cy, cp));

        auto num = mul(add_scalar(mul_scalar(mul(mu_y, mu_p), T(2)), c1),
                       add_scalar(mul_scalar(cov, T(2)), c2));
        auto den = mul(add_scalar(add(mul(mu_y, mu_y), mul(mu_p, mu_p)), c1),
                       add_scalar(add(var_y, var_p), c2));
        auto s = divt(num, den);
        acc = acc.defined() ? add(acc, s) : s;
    }
    return batch == 1 ? acc : mul_scalar(acc, T(1) / static_cast<T>(batch));
}

template <typename T>
Tensor<T> ssim_loss(const Tensor<T>& y, const Tensor<T>& yhat) {
    auto s = ssim(y, yhat, static_cast<T>(kSsimC1), static_cast<T>(kSsimC2));
    // (1 - s)/2
    return mul_scalar(add_scalar(mul_scalar(s, T(-1)), T(1)), T(0.5));
}

template <typename T>
CompositeLoss<T> composite_loss(const Tensor<T>& y, const Tensor<T>& yhat, const LossWeights& w) {
    w.validate();
    check_pair("composite_loss", y, yhat);
    CompositeLoss<T> out;
    out.weights = w;
    out.depth = depth_loss(y, yhat);
    out.grad = gradient_edge_loss(y, yhat);
    out.ssim = ssim_loss(y, yhat);
    out.total = add(add(mul_scalar(out.depth, static_cast<T>(w.w1)),
                        mul_scalar(out.grad, static_cast<T>(w.w2))),
                    mul_scalar(out.ssim, static_cast<T>(w.w3)));
    return out;
}

#define DK_INSTANTIATE_LOSSES(T)                                                    \
    template Tensor<T> depth_loss<T>(const Tensor<T>&, const Tensor<T>&);           \
    template Tensor<T> gradient_edge_loss<T>(const Tensor<T>&, const Tensor<T>&);   \
    template Tensor<T> ssim<T>(const Tensor<T>&, const Tensor<T>&, T, T);           \
    template Tensor<T> ssim_loss<T>(const Tensor<T>&, const Tensor<T>&);            \
    template CompositeLoss<T> composite_loss<T>(const Tensor<T>&, const Tensor<T>&, \
                                                const LossWeights&);

DK_INSTANTIATE_LOSSES(float)
DK_INSTANTIATE_LOSSES(double)

#undef DK_INSTANTIATE_LOSSES

}  // namespace dk
