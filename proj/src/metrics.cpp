#include "depthkit/metrics.hpp"

#include <cmath>
#include <sstream>

namespace dk {

namespace {

void check_sizes(const char* name, std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size())
        throw DimError(std::string(name) + ": size mismatch " + std::to_string(y.size()) +
                       " vs " + std::to_string(yhat.size()));
    if (y.empty()) throw ValueError(std::string(name) + ": empty input");
}

void check_positive(const char* name, std::span<const double> v, const char* which) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!(v[i] > 0.0))
            throw ValueError(std::string(name) + ": nonpositive " + which + " value " +
                             std::to_string(v[i]) + " at pixel " + std::to_string(i));
}

// accumulators shared by the pooled report and the single-pair entry points
struct Pool {
    double se = 0.0;        // sum of squared error
    double are = 0.0;       // sum |y-yh|/y
    double l10 = 0.0;       // sum |log10 y - log10 yh|
    long c1 = 0, c2 = 0, c3 = 0;
    double sum_y = 0.0;
    long n = 0;

    void add(std::span<const double> y, std::span<const double> yhat) {
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double d = y[i] - yhat[i];
            se += d * d;
            are += std::abs(d) / y[i];
            l10 += std::abs(std::log10(y[i]) - std::log10(yhat[i]));
            const double r = y[i] > yhat[i] ? y[i] / yhat[i] : yhat[i] / y[i];
            if (r < 1.25) ++c1;
            if (r < 1.5625) ++c2;
            if (r < 1.953125) ++c3;
            sum_y += y[i];
        }
        n += static_cast<long>(y.size());
    }
};

}  // namespace

double rmse(std::span<const double> y, std::span<const double> yhat) {
    check_sizes("rmse", y, yhat);
    double se = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - yhat[i];
        se += d * d;
    }
    return std::sqrt(se / static_cast<double>(y.size()));
}

double log10_error(std::span<const double> y, std::span<const double> yhat) {
    check_sizes("log10_error", y, yhat);
    check_positive("log10_error", y, "ground-truth");
    check_positive("log10_error", yhat, "predicted");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        acc += std::abs(std::log10(y[i]) - std::log10(yhat[i]));
    return acc / static_cast<double>(y.size());
}

double abs_rel_error(std::span<const double> y, std::span<const double> yhat) {
    check_sizes("abs_rel_error", y, yhat);
    check_positive("abs_rel_error", y, "ground-truth");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += std::abs(y[i] - yhat[i]) / y[i];
    return acc / static_cast<double>(y.size());
}

DeltaAccuracy delta_accuracy(std::span<const double> y, std::span<const double> yhat) {
    check_sizes("delta_accuracy", y, yhat);
    check_positive("delta_accuracy", y, "ground-truth");
    check_positive("delta_accuracy", yhat, "predicted");
    long c1 = 0, c2 = 0, c3 = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] > yhat[i] ? y[i] / yhat[i] : yhat[i] / y[i];
        if (r < 1.25) ++c1;
        if (r < 1.5625) ++c2;
        if (r < 1.953125) ++c3;
    }
    const double n = static_cast<double>(y.size());
    return {c1 / n, c2 / n, c3 / n};
}

double r_squared(std::span<const double> y, std::span<const double> yhat) {
    check_sizes("r_squared", y, yhat);
    if (y.size() < 2) throw ValueError("r_squared: needs at least 2 pixels");
    double mean_y = 0.0;
    for (double v : y) mean_y += v;
    mean_y /= static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
    }
    if (ss_tot == 0.0) throw ValueError("r_squared: ground truth is constant");
    return 1.0 - ss_res / ss_tot;
}

MetricsReport report(const std::vector<std::vector<double>>& y_set,
                     const std::vector<std::vector<double>>& yhat_set) {
    if (y_set.size() != yhat_set.size())
        throw ValueError("report: set sizes differ: " + std::to_string(y_set.size()) + " vs " +
                         std::to_string(yhat_set.size()));
    if (y_set.empty()) throw ValueError("report: empty set");

    Pool pool;
    for (std::size_t k = 0; k < y_set.size(); ++k) {
        check_sizes("report", y_set[k], yhat_set[k]);
        check_positive("report", y_set[k], "ground-truth");
        check_positive("report", yhat_set[k], "predicted");
        pool.add(y_set[k], yhat_set[k]);
    }

    const double n = static_cast<double>(pool.n);
    const double mean_y = pool.sum_y / n;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t k = 0; k < y_set.size(); ++k) {
        const auto& y = y_set[k];
        const auto& p = yhat_set[k];
        for (std::size_t i = 0; i < y.size(); ++i) {
            ss_res += (y[i] - p[i]) * (y[i] - p[i]);
            ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
        }
    }

    if (ss_tot == 0.0) throw ValueError("report: ground truth is constant, R^2 undefined");

    MetricsReport r;
    r.rmse = std::sqrt(pool.se / n);
    r.are = pool.are / n;
    r.log10 = pool.l10 / n;
    r.delta1 = pool.c1 / n;
    r.delta2 = pool.c2 / n;
    r.delta3 = pool.c3 / n;
    r.r2 = 1.0 - ss_res / ss_tot;
    r.n_pixels = pool.n;
    return r;
}

std::string MetricsReport::to_text() const {
    std::ostringstream os;
    os.precision(9);
    os << "are=" << are << "\n"
       << "rmse=" << rmse << "\n"
       << "log10=" << log10 << "\n"
       << "delta1=" << delta1 << "\n"
       << "delta2=" << delta2 << "\n"
       << "delta3=" << delta3 << "\n"
       << "r2=" << r2 << "\n"
       << "n_pixels=" << n_pixels << "\n";
    return os.str();
}

std::string MetricsReport::csv_header() {
    return "are,rmse,log10,delta1,delta2,delta3,r2,n_pixels";
}

std::string MetricsReport::to_csv_row() const {
    std::ostringstream os;
    os.precision(9);
    os << are << "," << rmse << "," << log10 << "," << delta1 << "," << delta2 << "," << delta3
       << "," << r2 << "," << n_pixels;
    return os.str();
}

}  // namespace dk
