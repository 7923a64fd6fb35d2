#include "coz/factorization.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using coz::ToyFactorizationInstance;

TEST_CASE("random instances are valid distributions") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto inst = ToyFactorizationInstance::random(seed);
        CHECK_NOTHROW(inst.validate());
        CHECK(inst.n_x0 >= 1);
        CHECK(inst.n_x2 <= 8);
    }
    CHECK(ToyFactorizationInstance::random_single_latent(3).n_c == 1);
}

TEST_CASE("validate rejects broken tables") {
    auto inst = ToyFactorizationInstance::random(1);
    inst.prompt_given[0] += 0.01;
    CHECK_THROWS_AS(inst.validate(), std::invalid_argument);
    inst = ToyFactorizationInstance::random(1);
    inst.next_given.pop_back();
    CHECK_THROWS_AS(inst.validate(), std::invalid_argument);
    inst = ToyFactorizationInstance::random(1);
    inst.n_c = 9;
    CHECK_THROWS_AS(inst.validate(), std::invalid_argument);
}

TEST_CASE("factorization error is at rounding level") {
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        CHECK(coz::verify_ar2_factorization(ToyFactorizationInstance::random(seed)) <= 1e-12);
    }
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        CHECK(coz::verify_ar2_factorization(ToyFactorizationInstance::random_single_latent(seed)) == 0.0);
    }
}

TEST_CASE("conditional matches a brute-force marginalization") {
    const auto in = ToyFactorizationInstance::random(77);
    const auto cond = coz::conditional_from_joint(in);
    for (int x0 = 0; x0 < in.n_x0; ++x0) {
        for (int x1 = 0; x1 < in.n_x1; ++x1) {
            double row = 0.0;
            for (int x2 = 0; x2 < in.n_x2; ++x2) {
                double num = 0.0;
                double den = 0.0;
                for (int c = 0; c < in.n_c; ++c) {
                    for (int y = 0; y < in.n_x2; ++y) {
                        const double p = in.joint01[in.i01(x0, x1)] * in.prompt_given[in.ic(x0, x1, c)] *
                                         in.next_given[in.i2(x0, x1, c, y)];
                        den += p;
                        if (y == x2) num += p;
                    }
                }
                const double v = cond[in.i01(x0, x1) * in.n_x2 + x2];
                CHECK(v == doctest::Approx(num / den).epsilon(1e-12));
                row += v;
            }
            CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("latent-free transition makes the prompt irrelevant") {
    const auto in = ToyFactorizationInstance::random_latent_free(5);
    const auto cond = coz::conditional_from_joint(in);
    for (int x0 = 0; x0 < in.n_x0; ++x0)
        for (int x1 = 0; x1 < in.n_x1; ++x1)
            for (int x2 = 0; x2 < in.n_x2; ++x2)
                CHECK(cond[in.i01(x0, x1) * in.n_x2 + x2] ==
                      doctest::Approx(in.next_given[in.i2(x0, x1, 0, x2)]).epsilon(1e-12));
}
