#include "coz/resample.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace coz {

namespace {

struct Taps {
    int first = 0;
    std::vector<double> weights;
};

// Weight tables for one axis; source indices are clamped when applied.
std::vector<Taps> bicubic_taps(int in, int out) {
    const double scale = static_cast<double>(in) / out;
    const double support = scale > 1.0 ? 2.0 * scale : 2.0;
    const double stretch = scale > 1.0 ? scale : 1.0;
    std::vector<Taps> taps(static_cast<std::size_t>(out));
    for (int d = 0; d < out; ++d) {
        const double center = (d + 0.5) * scale - 0.5;
        const int lo = static_cast<int>(std::floor(center - support)) + 1;
        const int hi = static_cast<int>(std::floor(center + support));
        Taps& t = taps[static_cast<std::size_t>(d)];
        t.first = lo;
        double sum = 0.0;
        for (int j = lo; j <= hi; ++j) {
            const double w = catmull_rom((center - j) / stretch);
            t.weights.push_back(w);
            sum += w;
        }
        for (double& w : t.weights) {
            w /= sum;
        }
    }
    return taps;
}

int nearest_source(int dst, int in, int out) {
    // floor((dst + 0.5) * in / out) in exact integer arithmetic.
    return static_cast<int>(((2LL * dst + 1) * in) / (2LL * out));
}

Image resize_nearest(const Image& img, int width, int height) {
    Image out(width, height, img.channels());
    std::vector<int> xs(static_cast<std::size_t>(width));
    for (int x = 0; x < width; ++x) {
        xs[static_cast<std::size_t>(x)] = nearest_source(x, img.width(), width);
    }
    for (int y = 0; y < height; ++y) {
        const int sy = nearest_source(y, img.height(), height);
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < img.channels(); ++c) {
                out.at(x, y, c) = img.at(xs[static_cast<std::size_t>(x)], sy, c);
            }
        }
    }
    return out;
}

Image resize_bicubic(const Image& img, int width, int height) {
    const int ch = img.channels();
    const int in_w = img.width();
    const int in_h = img.height();
    const auto tx = bicubic_taps(in_w, width);
    const auto ty = bicubic_taps(in_h, height);

    // Horizontal pass into a double buffer of size width × in_h.
    std::vector<double> mid(static_cast<std::size_t>(width) * in_h * ch, 0.0);
    for (int y = 0; y < in_h; ++y) {
        for (int x = 0; x < width; ++x) {
            const Taps& t = tx[static_cast<std::size_t>(x)];
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (std::size_t k = 0; k < t.weights.size(); ++k) {
                    const int sx = std::clamp(t.first + static_cast<int>(k), 0, in_w - 1);
                    acc += t.weights[k] * img.at(sx, y, c);
                }
                mid[(static_cast<std::size_t>(y) * width + x) * ch + c] = acc;
            }
        }
    }

    Image out(width, height, ch);
    for (int y = 0; y < height; ++y) {
        const Taps& t = ty[static_cast<std::size_t>(y)];
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (std::size_t k = 0; k < t.weights.size(); ++k) {
                    const int sy = std::clamp(t.first + static_cast<int>(k), 0, in_h - 1);
                    acc += t.weights[k] * mid[(static_cast<std::size_t>(sy) * width + x) * ch + c];
                }
                out.at(x, y, c) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
            }
        }
    }
    return out;
}

}  // namespace

ResizeKernel parse_kernel(std::string_view name) {
    if (name == "nearest") return ResizeKernel::nearest;
    if (name == "bicubic") return ResizeKernel::bicubic;
    throw std::invalid_argument("unknown resize kernel: " + std::string(name));
}

std::string_view kernel_name(ResizeKernel kernel) {
    return kernel == ResizeKernel::nearest ? "nearest" : "bicubic";
}

double catmull_rom(double t) {
    constexpr double a = -0.5;
    const double x = std::abs(t);
    if (x <= 1.0) {
        return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    }
    if (x < 2.0) {
        return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    }
    return 0.0;
}

Image resize_to(const Image& img, int width, int height, ResizeKernel kernel) {
    if (img.empty()) {
        throw std::invalid_argument("resize of empty image");
    }
    if (width < 1 || height < 1) {
        throw std::invalid_argument("resize target must be at least 1 pixel");
    }
    if (width == img.width() && height == img.height()) {
        Image copy = img;
        copy.clamp01();
        return copy;
    }
    Image out = kernel == ResizeKernel::nearest ? resize_nearest(img, width, height)
                                                : resize_bicubic(img, width, height);
    out.clamp01();
    return out;
}

Image resize(const Image& img, int target_side, ResizeKernel kernel) {
    return resize_to(img, target_side, target_side, kernel);
}

}  // namespace coz
