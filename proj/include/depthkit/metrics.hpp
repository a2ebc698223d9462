#pragma once

#include <span>
#include <string>
#include <vector>

#include "depthkit/common.hpp"

namespace dk {

struct MetricsReport {
    double are = 0.0;
    double rmse = 0.0;
    double log10 = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double delta3 = 0.0;
    double r2 = 0.0;
    long n_pixels = 0;

    // one key per metric
    std::string to_text() const;
    // are,rmse,log10,delta1,delta2,delta3,r2,n_pixels
    std::string to_csv_row() const;
    static std::string csv_header();
};

double rmse(std::span<const double> y, std::span<const double> yhat);

// mean |log10 y - log10 yhat|; every value must be positive
double log10_error(std::span<const double> y, std::span<const double> yhat);

// mean |y - yhat| / y; ground truth must be positive
double abs_rel_error(std::span<const double> y, std::span<const double> yhat);

struct DeltaAccuracy {
    double d1 = 0.0, d2 = 0.0, d3 = 0.0;
};

// fraction of pixels with max(y/yhat, yhat/y) < 1.25^i, strict comparison
DeltaAccuracy delta_accuracy(std::span<const double> y, std::span<const double> yhat);

// 1 - SS_res/SS_tot over the flattened pixels; y must not be constant
double r_squared(std::span<const double> y, std::span<const double> yhat);

// pixel-pooled report over a set of aligned pairs (all pixels weighted equally)
MetricsReport report(const std::vector<std::vector<double>>& y_set,
                     const std::vector<std::vector<double>>& yhat_set);

}  // namespace dk
