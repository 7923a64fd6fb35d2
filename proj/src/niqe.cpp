#include "coz/niqe.hpp"

#include "coz/resample.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

namespace coz {

namespace {

constexpr double kMscnC = 1.0 / 255.0;
// Rounding residue of the blur on flat regions; far below an 8-bit step.
constexpr double kFlatEps = 1e-10;

Plane to_plane(const cv::Mat& m) {
    Plane p;
    p.width = m.cols;
    p.height = m.rows;
    p.values.assign(m.begin<double>(), m.end<double>());
    return p;
}

// Patch ∘ circularly shifted patch, shift (dy, dx).
std::vector<double> pair_products(const std::vector<double>& patch, int side, int dy, int dx) {
    std::vector<double> out(patch.size());
    for (int y = 0; y < side; ++y) {
        const int sy = ((y - dy) % side + side) % side;
        for (int x = 0; x < side; ++x) {
            const int sx = ((x - dx) % side + side) % side;
            out[static_cast<std::size_t>(y) * side + x] =
                patch[static_cast<std::size_t>(y) * side + x] * patch[static_cast<std::size_t>(sy) * side + sx];
        }
    }
    return out;
}

// 18 features of one patch; throws FitError when any fit fails.
void patch_features(const std::vector<double>& patch, int side, std::vector<double>& out) {
    const AggdFit base = fit_aggd(patch);
    out.push_back(base.alpha);
    out.push_back((base.sigma_l * base.sigma_l + base.sigma_r * base.sigma_r) / 2.0);
    constexpr int shifts[4][2] = {{0, 1}, {1, 0}, {1, 1}, {-1, 1}};
    for (const auto& s : shifts) {
        const AggdFit f = fit_aggd(pair_products(patch, side, s[0], s[1]));
        out.push_back(f.alpha);
        out.push_back(f.mean_param());
        out.push_back(f.sigma_l * f.sigma_l);
        out.push_back(f.sigma_r * f.sigma_r);
    }
}

std::vector<double> extract_patch(const Plane& plane, int px, int py, int side) {
    std::vector<double> patch(static_cast<std::size_t>(side) * side);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            patch[static_cast<std::size_t>(y) * side + x] = plane.at(px * side + x, py * side + y);
        }
    }
    return patch;
}

double plane_mean(const Plane& plane, int px, int py, int side) {
    double sum = 0.0;
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            sum += plane.at(px * side + x, py * side + y);
        }
    }
    return sum / (static_cast<double>(side) * side);
}

struct Moments {
    std::vector<double> mean;
    std::vector<double> cov;  // row-major, n-1 normalization
};

Moments feature_moments(const std::vector<std::vector<double>>& rows) {
    const std::size_t d = kNiqeFeatures;
    Moments m;
    m.mean.assign(d, 0.0);
    m.cov.assign(d * d, 0.0);
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < d; ++i) m.mean[i] += r[i];
    }
    for (double& v : m.mean) v /= n;
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < d; ++i) {
            const double di = r[i] - m.mean[i];
            for (std::size_t j = i; j < d; ++j) {
                m.cov[i * d + j] += di * (r[j] - m.mean[j]);
            }
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            m.cov[i * d + j] /= (n - 1.0);
            m.cov[j * d + i] = m.cov[i * d + j];
        }
    }
    return m;
}

}  // namespace

MscnResult mscn(const Image& gray_in) {
    const Image gray = gray_in.channels() == 1 ? gray_in : to_gray(gray_in);
    cv::Mat im(gray.height(), gray.width(), CV_64F);
    for (int y = 0; y < gray.height(); ++y) {
        for (int x = 0; x < gray.width(); ++x) {
            im.at<double>(y, x) = gray.at(x, y);
        }
    }
    const cv::Mat k = cv::getGaussianKernel(7, 7.0 / 6.0, CV_64F);
    cv::Mat mu;
    cv::Mat mu_sq_in;
    cv::sepFilter2D(im, mu, CV_64F, k, k, cv::Point(-1, -1), 0, cv::BORDER_REPLICATE);
    cv::sepFilter2D(im.mul(im), mu_sq_in, CV_64F, k, k, cv::Point(-1, -1), 0, cv::BORDER_REPLICATE);

    cv::Mat sigma(im.size(), CV_64F);
    cv::Mat coeff(im.size(), CV_64F);
    for (int y = 0; y < im.rows; ++y) {
        for (int x = 0; x < im.cols; ++x) {
            const double m = mu.at<double>(y, x);
            double var = std::abs(mu_sq_in.at<double>(y, x) - m * m);
            double num = im.at<double>(y, x) - m;
            if (std::abs(num) < kFlatEps) num = 0.0;
            if (var < kFlatEps * kFlatEps) var = 0.0;
            const double s = std::sqrt(var);
            sigma.at<double>(y, x) = s;
            coeff.at<double>(y, x) = num / (s + kMscnC);
        }
    }
    return {to_plane(coeff), to_plane(sigma)};
}

std::vector<std::vector<double>> niqe_patch_features(const Image& image, const NiqeOptions& options,
                                                     bool sharp_only) {
    const int p = options.patch_size;
    if (p < 2 || p % 2 != 0) {
        throw std::invalid_argument("NIQE patch size must be even");
    }
    const int cols = image.width() / p;
    const int rows = image.height() / p;
    if (cols < 1 || rows < 1) {
        return {};
    }
    Image gray = to_gray(image).crop(0, 0, cols * p, rows * p);

    const std::size_t count = static_cast<std::size_t>(cols) * rows;
    std::vector<std::vector<double>> feats(count);
    std::vector<bool> ok(count, true);
    std::vector<double> sharpness(count, 0.0);

    for (int scale = 1; scale <= 2; ++scale) {
        const int side = p / scale;
        const MscnResult m = mscn(gray);
        for (int py = 0; py < rows; ++py) {
            for (int px = 0; px < cols; ++px) {
                const std::size_t idx = static_cast<std::size_t>(py) * cols + px;
                if (scale == 1) {
                    sharpness[idx] = plane_mean(m.local_sigma, px, py, side);
                }
                if (!ok[idx]) continue;
                try {
                    patch_features(extract_patch(m.coefficients, px, py, side), side, feats[idx]);
                } catch (const FitError&) {
                    ok[idx] = false;
                }
            }
        }
        if (scale == 1) {
            gray = resize_to(gray, gray.width() / 2, gray.height() / 2, ResizeKernel::bicubic);
        }
    }

    const double max_sharp = *std::max_element(sharpness.begin(), sharpness.end());
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < count; ++i) {
        if (!ok[i]) continue;
        if (sharp_only && !(sharpness[i] > options.sharpness_fraction * max_sharp)) continue;
        const bool finite = std::all_of(feats[i].begin(), feats[i].end(),
                                        [](double v) { return std::isfinite(v); });
        if (finite) out.push_back(std::move(feats[i]));
    }
    return out;
}

void NiqeModel::validate() const {
    const std::size_t d = mu.size();
    if (d == 0 || sigma.size() != d * d) {
        throw std::invalid_argument("NIQE model dimensions are inconsistent");
    }
    double scale = 0.0;
    for (double v : sigma) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (std::abs(sigma[i * d + j] - sigma[j * d + i]) > 1e-12 * std::max(1.0, scale)) {
                throw std::invalid_argument("NIQE covariance is not symmetric");
            }
        }
    }
    cv::Mat s(static_cast<int>(d), static_cast<int>(d), CV_64F, const_cast<double*>(sigma.data()));
    cv::Mat evals;
    cv::eigen(s, evals);
    double min_eval = 0.0;
    cv::minMaxLoc(evals, &min_eval);
    if (min_eval < -1e-9 * std::max(1.0, scale)) {
        throw std::invalid_argument("NIQE covariance is not positive semi-definite");
    }
}

NiqeScore niqe(const Image& image, const NiqeModel& model) {
    const int p = model.patch_size;
    if (image.width() < 2 * p || image.height() < 2 * p) {
        throw NiqeError(fmt::format("image {}x{} is smaller than two {}-pixel patches per side",
                                    image.width(), image.height(), p));
    }
    const auto rows = niqe_patch_features(image, model.options(), false);
    if (rows.size() < 2) {
        throw NiqeError("too few patches with valid statistics");
    }
    const Moments img = feature_moments(rows);
    const int d = kNiqeFeatures;

    cv::Mat pooled(d, d, CV_64F);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * d + j;
            pooled.at<double>(i, j) = (model.sigma[k] + img.cov[k]) / 2.0;
        }
    }

    NiqeScore out;
    out.patches = static_cast<int>(rows.size());
    cv::Mat evals;
    cv::Mat evecs;
    cv::eigen(pooled, evals, evecs);
    double max_eval = 0.0;
    double min_eval = 0.0;
    cv::minMaxLoc(evals, &min_eval, &max_eval);
    if (!(min_eval > 1e-12 * std::max(max_eval, 1e-300))) {
        pooled += cv::Mat::eye(d, d, CV_64F) * 1e-6;
        cv::eigen(pooled, evals, evecs);
        out.regularized = true;
    }

    cv::Mat diff(d, 1, CV_64F);
    for (int i = 0; i < d; ++i) {
        diff.at<double>(i) = model.mu[static_cast<std::size_t>(i)] - img.mean[static_cast<std::size_t>(i)];
    }
    const cv::Mat proj = evecs * diff;  // rows of evecs are eigenvectors
    double q = 0.0;
    for (int i = 0; i < d; ++i) {
        const double lambda = evals.at<double>(i);
        if (lambda > 0.0) {
            q += proj.at<double>(i) * proj.at<double>(i) / lambda;
        }
    }
    out.score = std::sqrt(q);
    return out;
}

NiqeFitReport fit_niqe_model(const std::vector<Image>& images, const NiqeOptions& options) {
    if (images.size() < 20) {
        throw FitError(fmt::format("NIQE fit needs at least 20 images, got {}", images.size()));
    }
    std::vector<std::vector<double>> rows;
    for (const Image& img : images) {
        auto f = niqe_patch_features(img, options, true);
        for (auto& r : f) rows.push_back(std::move(r));
    }
    if (rows.size() < 2) {
        throw FitError("no sharp patches with valid statistics in the corpus");
    }
    const Moments m = feature_moments(rows);
    NiqeFitReport out;
    out.model.mu = m.mean;
    out.model.sigma = m.cov;
    out.model.patch_size = options.patch_size;
    out.model.sharpness_fraction = options.sharpness_fraction;
    out.patches = static_cast<int>(rows.size());
    return out;
}

NiqeFitReport fit_niqe_model(const std::filesystem::path& dir, const NiqeOptions& options) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<Image> images;
    std::vector<std::string> names;
    for (const auto& f : files) {
        images.push_back(read_image(f));
        names.push_back(f.filename().string());
    }
    NiqeFitReport fit = fit_niqe_model(images, options);
    fit.images = std::move(names);
    return fit;
}

namespace {

static_assert(std::endian::native == std::endian::little, "model I/O assumes a little-endian host");

constexpr char kMagic[8] = {'C', 'O', 'Z', 'N', 'I', 'Q', 'E', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) {
        throw std::runtime_error("truncated NIQE model file");
    }
    return v;
}

}  // namespace

void write_niqe_model(const NiqeFitReport& fit, const std::filesystem::path& path) {
    const NiqeModel& m = fit.model;
    {
        std::ofstream out(path, std::ios::binary);
        out.write(kMagic, sizeof(kMagic));
        put<std::uint32_t>(out, kVersion);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(m.mu.size()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(m.patch_size));
        put<std::uint32_t>(out, 0);
        put<double>(out, m.sharpness_fraction);
        for (double v : m.mu) put<double>(out, v);
        for (double v : m.sigma) put<double>(out, v);
        if (!out) {
            throw std::runtime_error("cannot write " + path.string());
        }
    }
    const nlohmann::json sidecar = {{"format", "coz-niqe"},
                                    {"version", kVersion},
                                    {"dim", m.mu.size()},
                                    {"patch_size", m.patch_size},
                                    {"sharpness_fraction", m.sharpness_fraction},
                                    {"images", fit.images},
                                    {"image_count", fit.images.size()},
                                    {"patches", fit.patches}};
    std::ofstream side(path.string() + ".json");
    side << sidecar.dump(2) << "\n";
}

NiqeModel read_niqe_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error(path.string() + " is not a NIQE model file");
    }
    if (get<std::uint32_t>(in) != kVersion) {
        throw std::runtime_error("unsupported NIQE model version");
    }
    const auto dim = get<std::uint32_t>(in);
    NiqeModel m;
    m.patch_size = static_cast<int>(get<std::uint32_t>(in));
    get<std::uint32_t>(in);
    m.sharpness_fraction = get<double>(in);
    m.mu.resize(dim);
    for (double& v : m.mu) v = get<double>(in);
    m.sigma.resize(static_cast<std::size_t>(dim) * dim);
    for (double& v : m.sigma) v = get<double>(in);
    m.validate();
    return m;
}

}  // namespace coz
