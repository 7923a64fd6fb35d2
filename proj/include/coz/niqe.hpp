#pragma once

#include "coz/aggd.hpp"
#include "coz/image.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace coz {

/// Dense double-precision single-channel plane.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

struct MscnResult {
    Plane coefficients;
    Plane local_sigma;
};

/// Mean-subtracted contrast-normalized coefficients (I − μ)/(σ + 1/255) with
/// a 7×7 Gaussian window (σ = 7/6) and replicated borders.
MscnResult mscn(const Image& gray);

inline Plane mscn_coefficients(const Image& gray) {
    return mscn(gray).coefficients;
}

struct NiqeOptions {
    int patch_size = 96;
    double sharpness_fraction = 0.75;
};

inline constexpr int kNiqeFeatures = 36;

/// Per-patch feature rows (36 each) over both scales, in raster patch order.
/// Patches whose AGGD fits fail are dropped. When `sharp_only` is set, only
/// patches whose mean local sigma exceeds sharpness_fraction × the image max
/// are kept.
std::vector<std::vector<double>> niqe_patch_features(const Image& image, const NiqeOptions& options,
                                                     bool sharp_only);

struct NiqeModel {
    std::vector<double> mu;     // 36
    std::vector<double> sigma;  // 36×36 row-major
    int patch_size = 96;
    double sharpness_fraction = 0.75;

    /// Throws std::invalid_argument on inconsistent sizes, asymmetry, or a
    /// non-positive-semidefinite covariance.
    void validate() const;

    NiqeOptions options() const { return {patch_size, sharpness_fraction}; }
};

struct NiqeScore {
    double score = 0.0;
    bool regularized = false;  // pooled covariance needed the 1e-6·I ridge
    int patches = 0;
};

class NiqeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// sqrt((ν−μ)ᵀ ((Σ + Σ_img)/2)⁻¹ (ν−μ)). Throws NiqeError when the image is
/// smaller than two patches per side or yields fewer than two usable patches.
NiqeScore niqe(const Image& image, const NiqeModel& model);

struct NiqeFitReport {
    NiqeModel model;
    std::vector<std::string> images;
    int patches = 0;
};

/// Fits the pristine Gaussian from every PNG/JPEG in the directory (sorted by
/// file name). Needs at least 20 images and enough sharp patches.
NiqeFitReport fit_niqe_model(const std::filesystem::path& pristine_dir, const NiqeOptions& options = {});
NiqeFitReport fit_niqe_model(const std::vector<Image>& images, const NiqeOptions& options = {});

/// Binary model file (little-endian header, then float64 mu and row-major
/// sigma) plus a `<path>.json` sidecar describing the fit.
void write_niqe_model(const NiqeFitReport& fit, const std::filesystem::path& path);
NiqeModel read_niqe_model(const std::filesystem::path& path);

}  // namespace coz
