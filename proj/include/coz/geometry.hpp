#pragma once

#include "coz/image.hpp"
#include "coz/rational.hpp"
#include "coz/resample.hpp"

#include <stdexcept>
#include <string>

namespace coz {

/// Invalid run parameters (scale ratio, recursion count, resolution, ...).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Region of the original input, in its pixel coordinates.
struct SourceRect {
    Rational x;
    Rational y;
    Rational width;
    Rational height;

    bool contains(const SourceRect& inner) const;
    friend bool operator==(const SourceRect&, const SourceRect&) = default;
};

/// Origin of the centered window of side `side / factor`:
/// floor((side - side/factor) / 2).
int center_crop_origin(int side, int factor);

struct ZoomFragment {
    Image raster;  // side / factor pixels square
    SourceRect source_rect;
    int origin = 0;  // crop origin in the parent raster
};

/// Centered side/factor window of a square raster plus the rect it covers in
/// original coordinates, given the parent's rect.
ZoomFragment center_crop_for_zoom(const Image& image, const SourceRect& parent_rect, int factor);

/// Crop the center side/factor window and resize it back to the full side.
/// Every backend prepares its input through this one function.
Image zoom_window(const Image& image, int factor, ResizeKernel kernel);

}  // namespace coz
