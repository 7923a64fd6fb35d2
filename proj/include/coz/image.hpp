#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coz {

/// Interleaved float raster. Pixel components live in [0,1]; RGB images have
/// three channels, grayscale images one.
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels = 3, float fill = 0.0f);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return pixels_.empty(); }
    bool is_square() const { return width_ == height_; }

    float& at(int x, int y, int c = 0) {
        return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    float at(int x, int y, int c = 0) const {
        return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    std::span<float> data() { return pixels_; }
    std::span<const float> data() const { return pixels_; }

    /// Copy of the sub-window [x, x+w) × [y, y+h).
    Image crop(int x, int y, int w, int h) const;

    /// Clamps every component into [0,1]; returns true when anything moved.
    bool clamp01();

    friend bool operator==(const Image&, const Image&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> pixels_;
};

/// Luma with the BT.601 weights used by the classic NIQE code (0.2989, 0.5870, 0.1140).
Image to_gray(const Image& rgb);

/// 8-bit sRGB to float by plain division by 255 (no gamma linearization).
Image from_rgb8(std::span<const std::uint8_t> rgb, int width, int height);
std::vector<std::uint8_t> to_rgb8(const Image& rgb);

/// Quantizes to 8 bit and back; the values a PNG round trip would produce.
Image quantize8(const Image& img);

/// Decodes PNG or JPEG bytes into an RGB image. Throws std::runtime_error.
Image decode_image(std::span<const std::uint8_t> bytes);
Image read_image(const std::filesystem::path& path);

/// 8-bit RGB PNG encoding. Grayscale inputs are replicated into RGB.
std::vector<std::uint8_t> encode_png(const Image& img);
void write_png(const Image& img, const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string image_to_png_b64(const Image& img);
Image image_from_png_b64(std::string_view b64);

}  // namespace coz
