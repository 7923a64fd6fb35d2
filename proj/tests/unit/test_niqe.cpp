#include "coz/aggd.hpp"
#include "coz/niqe.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

using namespace coz;

namespace {

std::vector<double> gaussian_samples(std::size_t n, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, sigma);
    std::vector<double> out(n);
    for (double& v : out) v = nd(rng);
    return out;
}

std::vector<double> laplace_samples(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> ed(1.0);
    std::vector<double> out(n);
    for (double& v : out) v = (rng() & 1 ? 1.0 : -1.0) * ed(rng);
    return out;
}

// Symmetric GGD log-likelihood maximized over a shape grid with the scale
// profiled out in closed form.
double ggd_mle_alpha(const std::vector<double>& x) {
    double best_alpha = 0.0;
    double best_ll = -INFINITY;
    const double n = static_cast<double>(x.size());
    for (double a = 0.3; a <= 4.0; a += 0.01) {
        double s = 0.0;
        for (double v : x) s += std::pow(std::abs(v), a);
        const double scale = std::pow(a * s / n, 1.0 / a);
        const double ll = n * (std::log(a) - std::log(2.0 * scale) - std::lgamma(1.0 / a)) - n / a;
        if (ll > best_ll) {
            best_ll = ll;
            best_alpha = a;
        }
    }
    return best_alpha;
}

// 7x7 Gaussian window sum with replicated borders, evaluated directly.
double local_mean(const Image& g, int cx, int cy, bool square) {
    double wsum = 0.0;
    double acc = 0.0;
    const double s = 7.0 / 6.0;
    for (int dy = -3; dy <= 3; ++dy)
        for (int dx = -3; dx <= 3; ++dx) {
            const double w = std::exp(-(dx * dx + dy * dy) / (2 * s * s));
            const int x = std::clamp(cx + dx, 0, g.width() - 1);
            const int y = std::clamp(cy + dy, 0, g.height() - 1);
            const double v = g.at(x, y);
            acc += w * (square ? v * v : v);
            wsum += w;
        }
    return acc / wsum;
}

std::vector<Image> corpus(int count, int side, std::uint64_t first) {
    std::vector<Image> out;
    for (int i = 0; i < count; ++i) out.push_back(testing::synthetic_scene(side, first + static_cast<std::uint64_t>(i)));
    return out;
}

}  // namespace

TEST_CASE("aggd recovers gaussian and laplacian shapes") {
    const auto g = gaussian_samples(100000, 0.7, 1);
    const AggdFit fg = fit_aggd(g);
    CHECK(std::abs(fg.alpha - 2.0) < 0.1);
    CHECK(fg.sigma_l == doctest::Approx(0.7).epsilon(0.02));
    CHECK(std::abs(fg.mean_param()) < 0.02);

    const AggdFit fl = fit_aggd(laplace_samples(100000, 2));
    CHECK(std::abs(fl.alpha - 1.0) < 0.1);
}

TEST_CASE("aggd moment matching agrees with likelihood maximization") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto x = seed == 1 ? laplace_samples(20000, seed) : gaussian_samples(20000, 1.3, seed);
        CHECK(std::abs(fit_aggd(x).alpha - ggd_mle_alpha(x)) < 0.1);
    }
}

TEST_CASE("aggd asymmetric scales") {
    auto x = gaussian_samples(50000, 1.0, 4);
    for (double& v : x)
        if (v > 0) v *= 3.0;
    const AggdFit f = fit_aggd(x);
    CHECK(f.sigma_r / f.sigma_l == doctest::Approx(3.0).epsilon(0.05));
    CHECK(f.mean_param() > 0.0);
}

TEST_CASE("aggd failures") {
    CHECK_THROWS_AS(fit_aggd(gaussian_samples(50, 1.0, 1)), FitError);
    std::vector<double> positive(500, 1.0);
    CHECK_THROWS_AS(fit_aggd(positive), FitError);
    auto bad = gaussian_samples(500, 1.0, 1);
    bad[7] = NAN;
    CHECK_THROWS_AS(fit_aggd(bad), FitError);
}

TEST_CASE("mscn matches direct window evaluation") {
    const Image g = to_gray(testing::synthetic_scene(40, 3));
    const MscnResult m = mscn(g);
    for (auto [x, y] : {std::pair{0, 0}, {5, 17}, {39, 2}, {20, 39}}) {
        const double mu = local_mean(g, x, y, false);
        const double sd = std::sqrt(std::abs(local_mean(g, x, y, true) - mu * mu));
        CHECK(m.local_sigma.at(x, y) == doctest::Approx(sd).epsilon(1e-6));
        CHECK(m.coefficients.at(x, y) == doctest::Approx((g.at(x, y) - mu) / (sd + 1.0 / 255)).epsilon(1e-6));
    }
    const MscnResult flat = mscn(Image(20, 20, 1, 0.37f));
    for (double v : flat.coefficients.values) CHECK(v == 0.0);
}

TEST_CASE("niqe features per patch") {
    const Image img = testing::synthetic_scene(128, 9);
    const auto rows = niqe_patch_features(img, {32, 0.75}, false);
    CHECK(rows.size() == 16);
    for (const auto& r : rows) CHECK(r.size() == static_cast<std::size_t>(kNiqeFeatures));
    const auto sharp = niqe_patch_features(img, {32, 0.75}, true);
    CHECK(sharp.size() < rows.size());
    CHECK(niqe_patch_features(Image(128, 128, 3, 0.5f), {32, 0.75}, false).empty());
    CHECK_THROWS(niqe_patch_features(img, {31, 0.75}, false));
}

TEST_CASE("niqe model fit, scoring and file round trip") {
    const NiqeOptions opts{32, 0.75};
    const auto fit = fit_niqe_model(corpus(20, 128, 1000), opts);
    CHECK(fit.model.mu.size() == static_cast<std::size_t>(kNiqeFeatures));
    CHECK(fit.patches > 20);
    CHECK_NOTHROW(fit.model.validate());
    CHECK_THROWS_AS(fit_niqe_model(corpus(19, 128, 1000), opts), FitError);

    const Image clean = testing::synthetic_scene(128, 42);
    const NiqeScore s = niqe(clean, fit.model);
    CHECK(std::isfinite(s.score));
    CHECK(s.score >= 0.0);
    CHECK(s.patches == 16);
    CHECK(niqe(clean, fit.model).score == s.score);
    CHECK(niqe(testing::add_gaussian_noise(clean, 0.1, 1), fit.model).score > s.score);
    CHECK_THROWS_AS(niqe(Image(128, 128, 3, 0.5f), fit.model), NiqeError);
    CHECK_THROWS_AS(niqe(testing::synthetic_scene(48, 1), fit.model), NiqeError);

    const auto dir = testing::fresh_dir("niqe_model");
    write_niqe_model(fit, dir / "m.bin");
    const NiqeModel back = read_niqe_model(dir / "m.bin");
    CHECK(back.mu == fit.model.mu);
    CHECK(back.sigma == fit.model.sigma);
    CHECK(back.patch_size == 32);
    CHECK(std::filesystem::exists(dir / "m.bin.json"));
    CHECK(std::filesystem::file_size(dir / "m.bin") == 8 + 16 + 8 + 8 * (36 + 36 * 36));

    std::ofstream(dir / "junk.bin") << "not a model";
    CHECK_THROWS(read_niqe_model(dir / "junk.bin"));
}
