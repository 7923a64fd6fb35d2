#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

namespace coz {

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Asymmetric generalized Gaussian: shape alpha, left/right standard
/// deviations.
struct AggdFit {
    double alpha = 0.0;
    double sigma_l = 0.0;
    double sigma_r = 0.0;

    /// (σ_r − σ_l) · Γ(2/α)/Γ(1/α) · sqrt(Γ(1/α)/Γ(3/α))
    double mean_param() const;
};

/// Moment-matching estimate over the shape grid 0.2:0.001:10. Throws
/// FitError for fewer than min_samples samples, zero variance, or a missing
/// side (no negative or no positive samples).
AggdFit fit_aggd(std::span<const double> samples, std::size_t min_samples = 100);

}  // namespace coz
