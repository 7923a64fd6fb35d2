#include "coz/factorization.hpp"

#include "coz/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coz {

namespace {

void normalize_rows(std::vector<double>& table, int row_len) {
    for (std::size_t r = 0; r < table.size(); r += static_cast<std::size_t>(row_len)) {
        double sum = 0.0;
        for (int k = 0; k < row_len; ++k) sum += table[r + k];
        for (int k = 0; k < row_len; ++k) table[r + k] /= sum;
    }
}

void fill_random(std::vector<double>& table, std::mt19937_64& rng) {
    for (double& v : table) {
        v = 0.05 + uniform01(rng);
    }
}

ToyFactorizationInstance make_random(std::uint64_t seed, int forced_nc) {
    std::mt19937_64 rng(seed);
    ToyFactorizationInstance inst;
    inst.n_x0 = uniform_int(rng, 1, 8);
    inst.n_x1 = uniform_int(rng, 1, 8);
    inst.n_c = forced_nc > 0 ? forced_nc : uniform_int(rng, 1, 8);
    inst.n_x2 = uniform_int(rng, 1, 8);

    inst.joint01.resize(static_cast<std::size_t>(inst.n_x0) * inst.n_x1);
    fill_random(inst.joint01, rng);
    normalize_rows(inst.joint01, static_cast<int>(inst.joint01.size()));

    inst.prompt_given.resize(inst.joint01.size() * inst.n_c);
    fill_random(inst.prompt_given, rng);
    normalize_rows(inst.prompt_given, inst.n_c);

    inst.next_given.resize(inst.prompt_given.size() * inst.n_x2);
    fill_random(inst.next_given, rng);
    normalize_rows(inst.next_given, inst.n_x2);
    return inst;
}

void check_rows(const std::vector<double>& table, int row_len, const char* name) {
    for (std::size_t r = 0; r < table.size(); r += static_cast<std::size_t>(row_len)) {
        double sum = 0.0;
        for (int k = 0; k < row_len; ++k) {
            if (!(table[r + k] >= 0.0)) {
                throw std::invalid_argument(std::string(name) + " has a negative entry");
            }
            sum += table[r + k];
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            throw std::invalid_argument(std::string(name) + " row does not sum to 1");
        }
    }
}

}  // namespace

void ToyFactorizationInstance::validate() const {
    for (int n : {n_x0, n_x1, n_c, n_x2}) {
        if (n < 1 || n > 8) {
            throw std::invalid_argument("state spaces must have 1..8 elements");
        }
    }
    const std::size_t n01 = static_cast<std::size_t>(n_x0) * n_x1;
    if (joint01.size() != n01 || prompt_given.size() != n01 * n_c ||
        next_given.size() != n01 * n_c * n_x2) {
        throw std::invalid_argument("table sizes do not match state spaces");
    }
    check_rows(joint01, static_cast<int>(n01), "p(x0,x1)");
    check_rows(prompt_given, n_c, "p(c2|x1,x0)");
    check_rows(next_given, n_x2, "p(x2|x1,x0,c2)");
}

ToyFactorizationInstance ToyFactorizationInstance::random(std::uint64_t seed) {
    return make_random(seed, 0);
}

ToyFactorizationInstance ToyFactorizationInstance::random_single_latent(std::uint64_t seed) {
    return make_random(seed, 1);
}

ToyFactorizationInstance ToyFactorizationInstance::random_latent_free(std::uint64_t seed) {
    ToyFactorizationInstance inst = make_random(seed, 0);
    for (int x0 = 0; x0 < inst.n_x0; ++x0) {
        for (int x1 = 0; x1 < inst.n_x1; ++x1) {
            for (int c = 1; c < inst.n_c; ++c) {
                for (int x2 = 0; x2 < inst.n_x2; ++x2) {
                    inst.next_given[inst.i2(x0, x1, c, x2)] = inst.next_given[inst.i2(x0, x1, 0, x2)];
                }
            }
        }
    }
    return inst;
}

namespace {

// p(x0, c2, x1, x2) from the latent-prompt product, then Σ_c2.
std::vector<double> marginal_from_product(const ToyFactorizationInstance& in) {
    std::vector<double> joint(static_cast<std::size_t>(in.n_x0) * in.n_x1 * in.n_c * in.n_x2);
    for (int x0 = 0; x0 < in.n_x0; ++x0)
        for (int x1 = 0; x1 < in.n_x1; ++x1)
            for (int c = 0; c < in.n_c; ++c)
                for (int x2 = 0; x2 < in.n_x2; ++x2)
                    joint[in.i2(x0, x1, c, x2)] = in.joint01[in.i01(x0, x1)] *
                                                   in.next_given[in.i2(x0, x1, c, x2)] *
                                                   in.prompt_given[in.ic(x0, x1, c)];

    std::vector<double> marginal(static_cast<std::size_t>(in.n_x0) * in.n_x1 * in.n_x2, 0.0);
    for (int x0 = 0; x0 < in.n_x0; ++x0)
        for (int x1 = 0; x1 < in.n_x1; ++x1)
            for (int x2 = 0; x2 < in.n_x2; ++x2) {
                double sum = 0.0;
                for (int c = 0; c < in.n_c; ++c) sum += joint[in.i2(x0, x1, c, x2)];
                marginal[in.i01(x0, x1) * in.n_x2 + x2] = sum;
            }
    return marginal;
}

}  // namespace

std::vector<double> conditional_from_joint(const ToyFactorizationInstance& in) {
    std::vector<double> cond = marginal_from_product(in);
    for (int x0 = 0; x0 < in.n_x0; ++x0)
        for (int x1 = 0; x1 < in.n_x1; ++x1) {
            const double p01 = in.joint01[in.i01(x0, x1)];
            for (int x2 = 0; x2 < in.n_x2; ++x2) {
                double& v = cond[in.i01(x0, x1) * in.n_x2 + x2];
                v = p01 > 0.0 ? v / p01 : 0.0;
            }
        }
    return cond;
}

double verify_ar2_factorization(const ToyFactorizationInstance& in) {
    in.validate();
    const std::vector<double> marginal = marginal_from_product(in);

    double max_err = 0.0;
    for (int x0 = 0; x0 < in.n_x0; ++x0)
        for (int x1 = 0; x1 < in.n_x1; ++x1) {
            const double p01 = in.joint01[in.i01(x0, x1)];
            for (int x2 = 0; x2 < in.n_x2; ++x2) {
                // Direct route: integrate the latent out of the transition first.
                double transition = 0.0;
                for (int c = 0; c < in.n_c; ++c) {
                    transition += in.next_given[in.i2(x0, x1, c, x2)] * in.prompt_given[in.ic(x0, x1, c)];
                }
                const std::size_t k = in.i01(x0, x1) * in.n_x2 + x2;
                max_err = std::max(max_err, std::abs(p01 * transition - marginal[k]));
            }
        }
    return max_err;
}

}  // namespace coz
