#include "coz/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <openssl/evp.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace coz {

Image::Image(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
    if (width <= 0 || height <= 0 || (channels != 1 && channels != 3)) {
        throw std::invalid_argument("invalid image dimensions");
    }
    pixels_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image Image::crop(int x, int y, int w, int h) const {
    if (x < 0 || y < 0 || w <= 0 || h <= 0 || x + w > width_ || y + h > height_) {
        throw std::out_of_range("crop window outside image");
    }
    Image out(w, h, channels_);
    const std::size_t row = static_cast<std::size_t>(w) * channels_;
    for (int r = 0; r < h; ++r) {
        const float* src = &pixels_[(static_cast<std::size_t>(y + r) * width_ + x) * channels_];
        std::copy_n(src, row, &out.at(0, r));
    }
    return out;
}

bool Image::clamp01() {
    bool moved = false;
    for (float& v : pixels_) {
        const float c = std::clamp(v, 0.0f, 1.0f);
        if (c != v || std::isnan(v)) {
            moved = true;
            v = std::isnan(v) ? 0.0f : c;
        }
    }
    return moved;
}

Image to_gray(const Image& rgb) {
    if (rgb.channels() == 1) {
        return rgb;
    }
    Image out(rgb.width(), rgb.height(), 1);
    for (int y = 0; y < rgb.height(); ++y) {
        for (int x = 0; x < rgb.width(); ++x) {
            const double v = 0.2989 * rgb.at(x, y, 0) + 0.5870 * rgb.at(x, y, 1) +
                             0.1140 * rgb.at(x, y, 2);
            out.at(x, y) = static_cast<float>(v);
        }
    }
    return out;
}

Image from_rgb8(std::span<const std::uint8_t> rgb, int width, int height) {
    Image out(width, height, 3);
    if (rgb.size() != out.data().size()) {
        throw std::invalid_argument("rgb8 buffer size mismatch");
    }
    std::transform(rgb.begin(), rgb.end(), out.data().begin(),
                   [](std::uint8_t v) { return static_cast<float>(v) / 255.0f; });
    return out;
}

std::vector<std::uint8_t> to_rgb8(const Image& img) {
    std::vector<std::uint8_t> out;
    out.reserve(static_cast<std::size_t>(img.width()) * img.height() * 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                const float v = img.at(x, y, img.channels() == 3 ? c : 0);
                const float q = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f);
                out.push_back(static_cast<std::uint8_t>(q));
            }
        }
    }
    return out;
}

Image quantize8(const Image& img) {
    const auto bytes = to_rgb8(img);
    return from_rgb8(bytes, img.width(), img.height());
}

Image decode_image(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) {
        throw std::runtime_error("empty image buffer");
    }
    const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1,
                      const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat bgr = cv::imdecode(buf, cv::IMREAD_COLOR);
    if (bgr.empty()) {
        throw std::runtime_error("undecodable image data");
    }
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    if (!rgb.isContinuous()) {
        rgb = rgb.clone();
    }
    return from_rgb8({rgb.data, rgb.total() * 3}, rgb.cols, rgb.rows);
}

Image read_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_image(bytes);
}

std::vector<std::uint8_t> encode_png(const Image& img) {
    auto rgb8 = to_rgb8(img);
    cv::Mat rgb(img.height(), img.width(), CV_8UC3, rgb8.data());
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    std::vector<std::uint8_t> out;
    if (!cv::imencode(".png", bgr, out)) {
        throw std::runtime_error("png encoding failed");
    }
    return out;
}

void write_png(const Image& img, const std::filesystem::path& path) {
    const auto bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) {
        throw std::runtime_error("malformed base64 payload");
    }
    std::vector<std::uint8_t> out(3 * (text.size() / 4));
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) {
        throw std::runtime_error("malformed base64 payload");
    }
    // EVP_DecodeBlock counts padding as zero bytes.
    std::size_t len = static_cast<std::size_t>(n);
    if (!text.empty() && text.back() == '=') --len;
    if (text.size() >= 2 && text[text.size() - 2] == '=') --len;
    out.resize(len);
    return out;
}

std::string image_to_png_b64(const Image& img) {
    return base64_encode(encode_png(img));
}

Image image_from_png_b64(std::string_view b64) {
    return decode_image(base64_decode(b64));
}

}  // namespace coz
