#include "synthetic.hpp"

#include "coz/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace coz::testing {

namespace {

double smooth(double t) {
    return t * t * (3.0 - 2.0 * t);
}

// One octave of bilinear value noise with cells x cells nodes.
void add_octave(std::vector<double>& acc, int side, int cells, double amplitude, std::mt19937_64& rng) {
    std::vector<double> grid(static_cast<std::size_t>(cells + 1) * (cells + 1) * 3);
    for (auto& g : grid) g = uniform01(rng) * 2.0 - 1.0;
    auto node = [&](int gx, int gy, int c) {
        return grid[(static_cast<std::size_t>(gy) * (cells + 1) + gx) * 3 + c];
    };
    for (int y = 0; y < side; ++y) {
        const double fy = (y + 0.5) * cells / side;
        const int gy = std::min(static_cast<int>(fy), cells - 1);
        const double ty = smooth(fy - gy);
        for (int x = 0; x < side; ++x) {
            const double fx = (x + 0.5) * cells / side;
            const int gx = std::min(static_cast<int>(fx), cells - 1);
            const double tx = smooth(fx - gx);
            for (int c = 0; c < 3; ++c) {
                const double top = node(gx, gy, c) * (1 - tx) + node(gx + 1, gy, c) * tx;
                const double bot = node(gx, gy + 1, c) * (1 - tx) + node(gx + 1, gy + 1, c) * tx;
                acc[(static_cast<std::size_t>(y) * side + x) * 3 + c] += amplitude * (top * (1 - ty) + bot * ty);
            }
        }
    }
}

}  // namespace

Image synthetic_scene(int side, std::uint64_t seed) {
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 17);
    std::vector<double> acc(static_cast<std::size_t>(side) * side * 3, 0.0);
    double base[3];
    for (double& b : base) b = 0.25 + 0.5 * uniform01(rng);

    for (int cells = 2, o = 0; cells <= side / 2; cells *= 2, ++o) {
        add_octave(acc, side, cells, 0.35 / (1 << o) * (0.6 + 0.8 * uniform01(rng)), rng);
    }

    const int shapes = 5 + uniform_int(rng, 0, 7);
    for (int s = 0; s < shapes; ++s) {
        const double cx = uniform01(rng) * side;
        const double cy = uniform01(rng) * side;
        const double r = (0.05 + 0.25 * uniform01(rng)) * side;
        const bool disc = uniform01(rng) < 0.5;
        const double edge = 0.5 + 2.0 * uniform01(rng);
        double color[3];
        for (double& c : color) c = uniform01(rng) - 0.5;
        const double gx = (uniform01(rng) - 0.5) / side;
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                const double dx = x + 0.5 - cx;
                const double dy = y + 0.5 - cy;
                const double d = disc ? std::sqrt(dx * dx + dy * dy) - r : std::max(std::abs(dx), std::abs(dy)) - r;
                const double w = 1.0 / (1.0 + std::exp(d / edge));
                if (w < 1e-4) continue;
                for (int c = 0; c < 3; ++c) {
                    auto& v = acc[(static_cast<std::size_t>(y) * side + x) * 3 + c];
                    v = v * (1 - w) + w * (color[c] + gx * dx);
                }
            }
        }
    }

    Image out(side, side, 3);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            const double grain = 0.02 * standard_normal(rng);
            for (int c = 0; c < 3; ++c) {
                const double v = base[c] + acc[(static_cast<std::size_t>(y) * side + x) * 3 + c] + grain;
                out.at(x, y, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return quantize8(out);
}

Image add_gaussian_noise(const Image& image, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Image out = image;
    for (float& v : out.data()) {
        v = static_cast<float>(std::clamp(v + sigma * standard_normal(rng), 0.0, 1.0));
    }
    return out;
}

Image random_image(int side, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Image out(side, side, 3);
    for (float& v : out.data()) v = static_cast<float>(uniform_int(rng, 0, 255) / 255.0);
    return out;
}

std::vector<std::filesystem::path> write_corpus(const std::filesystem::path& dir, int count, int side,
                                                std::uint64_t first_seed) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> out;
    for (int i = 0; i < count; ++i) {
        const std::uint64_t seed = first_seed + static_cast<std::uint64_t>(i);
        out.push_back(dir / ("scene_" + std::to_string(seed) + ".png"));
        write_png(synthetic_scene(side, seed), out.back());
    }
    return out;
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("coz_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace coz::testing
