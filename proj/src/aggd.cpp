#include "coz/aggd.hpp"

#include <array>
#include <cmath>
#include <string>

namespace coz {

namespace {

constexpr int kGridSize = 9801;  // 0.2, 0.201, ..., 10.0

double grid_shape(int k) {
    return 0.2 + 0.001 * k;
}

// ρ(γ) = Γ(2/γ)² / (Γ(1/γ) Γ(3/γ))
const std::array<double, kGridSize>& shape_ratio_table() {
    static const auto table = [] {
        std::array<double, kGridSize> t{};
        for (int k = 0; k < kGridSize; ++k) {
            const double g = grid_shape(k);
            t[static_cast<std::size_t>(k)] =
                std::exp(2.0 * std::lgamma(2.0 / g) - std::lgamma(1.0 / g) - std::lgamma(3.0 / g));
        }
        return t;
    }();
    return table;
}

}  // namespace

double AggdFit::mean_param() const {
    const double ratio = std::exp(std::lgamma(2.0 / alpha) - std::lgamma(1.0 / alpha));
    const double constant = std::sqrt(std::exp(std::lgamma(1.0 / alpha) - std::lgamma(3.0 / alpha)));
    return (sigma_r - sigma_l) * ratio * constant;
}

AggdFit fit_aggd(std::span<const double> samples, std::size_t min_samples) {
    if (samples.size() < min_samples) {
        throw FitError("AGGD fit needs at least " + std::to_string(min_samples) + " samples");
    }
    double neg_sq = 0.0;
    double pos_sq = 0.0;
    double abs_sum = 0.0;
    std::size_t neg = 0;
    std::size_t pos = 0;
    for (double v : samples) {
        if (!std::isfinite(v)) {
            throw FitError("non-finite sample");
        }
        if (v < 0.0) {
            neg_sq += v * v;
            abs_sum -= v;
            ++neg;
        } else if (v > 0.0) {
            pos_sq += v * v;
            abs_sum += v;
            ++pos;
        }
    }
    if (neg == 0 || pos == 0) {
        throw FitError("AGGD fit needs samples on both sides of zero");
    }
    const double n = static_cast<double>(samples.size());
    AggdFit fit;
    fit.sigma_l = std::sqrt(neg_sq / static_cast<double>(neg));
    fit.sigma_r = std::sqrt(pos_sq / static_cast<double>(pos));

    const double gamma_hat = fit.sigma_l / fit.sigma_r;
    const double mean_abs = abs_sum / n;
    const double r_hat = mean_abs * mean_abs / ((neg_sq + pos_sq) / n);
    const double g2 = gamma_hat * gamma_hat;
    const double r_norm = r_hat * (g2 * gamma_hat + 1.0) * (gamma_hat + 1.0) / ((g2 + 1.0) * (g2 + 1.0));

    const auto& table = shape_ratio_table();
    int best = 0;
    double best_diff = std::abs(table[0] - r_norm);
    for (int k = 1; k < kGridSize; ++k) {
        const double d = std::abs(table[static_cast<std::size_t>(k)] - r_norm);
        if (d < best_diff) {
            best_diff = d;
            best = k;
        }
    }
    fit.alpha = grid_shape(best);
    return fit;
}

}  // namespace coz
