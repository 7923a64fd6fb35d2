#pragma once

#include "coz/image.hpp"

#include <string_view>

namespace coz {

enum class ResizeKernel { nearest, bicubic };

ResizeKernel parse_kernel(std::string_view name);
std::string_view kernel_name(ResizeKernel kernel);

/// Catmull-Rom cubic (a = -0.5).
double catmull_rom(double t);

/// Resamples to width × height with pixel-center alignment. Bicubic clamps
/// source coordinates at the borders and, when shrinking, stretches the kernel
/// by the reduction factor so the result is antialiased. Output is clamped to
/// [0,1].
Image resize_to(const Image& img, int width, int height, ResizeKernel kernel);

/// Square resize to target_side × target_side.
Image resize(const Image& img, int target_side, ResizeKernel kernel);

}  // namespace coz
