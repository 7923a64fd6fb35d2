#pragma once

#include <cstdint>
#include <vector>

namespace coz {

/// Finite two-step chain (x0, x1, c2, x2) with explicit probability tables,
/// used to check the AR-2 latent-prompt factorization numerically.
struct ToyFactorizationInstance {
    int n_x0 = 0;
    int n_x1 = 0;
    int n_c = 0;
    int n_x2 = 0;
    std::vector<double> joint01;       // p(x0, x1), indexed [x0][x1]
    std::vector<double> prompt_given;  // p(c2 | x1, x0), indexed [x0][x1][c]
    std::vector<double> next_given;    // p(x2 | x1, x0, c2), indexed [x0][x1][c][x2]

    std::size_t i01(int x0, int x1) const { return static_cast<std::size_t>(x0) * n_x1 + x1; }
    std::size_t ic(int x0, int x1, int c) const { return i01(x0, x1) * n_c + c; }
    std::size_t i2(int x0, int x1, int c, int x2) const { return ic(x0, x1, c) * n_x2 + x2; }

    /// Throws std::invalid_argument on negative entries, rows not summing to
    /// one within 1e-12, or state spaces outside [1, 8].
    void validate() const;

    /// Seeded random instance with state spaces of 1..8 elements.
    static ToyFactorizationInstance random(std::uint64_t seed);
    /// Variant whose latent c2 takes a single value.
    static ToyFactorizationInstance random_single_latent(std::uint64_t seed);
    /// Variant whose p(x2 | ·) ignores c2.
    static ToyFactorizationInstance random_latent_free(std::uint64_t seed);
};

/// p(x2 | x1, x0) recovered from the full joint over (x0, c2, x1, x2): the
/// product form is built first, c2 is summed out, and the result is divided
/// by p(x0, x1). Indexed [x0][x1][x2].
std::vector<double> conditional_from_joint(const ToyFactorizationInstance& inst);

/// Max absolute discrepancy between the joint built from the latent-prompt
/// product (then marginalized over c2) and the direct AR-2 evaluation
/// p(x0,x1) · Σ_c p(x2|x1,x0,c) p(c|x1,x0).
double verify_ar2_factorization(const ToyFactorizationInstance& inst);

}  // namespace coz
