#pragma once

#include "coz/image.hpp"
#include "coz/metrics.hpp"
#include "coz/scale_chain.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace coz {

enum class Method { nn_interp, direct_sr, coz_null, coz_dape_tags, coz_vlm };

Method parse_method(std::string_view name);
std::string_view method_name(Method method);

/// Endpoint roles: "sr", "vlm", "critic", "metric".
struct RunSpec {
    std::filesystem::path input_dir;
    std::filesystem::path output_dir;
    ZoomConfig zoom;
    std::vector<Method> methods;
    std::vector<std::string> metrics;
    std::map<std::string, std::string> endpoints;
    std::uint64_t seed = 0;
    std::filesystem::path niqe_model;
    std::filesystem::path tags_file;
    int parallelism = 1;
    int timeout_ms = 120000;
    bool write_transcripts = false;
    bool write_rasters = false;

    /// Throws ConfigError on any inconsistency, including remote methods or
    /// metrics without an endpoint.
    void validate() const;

    /// Replaces endpoint urls from COZ_SR_URL, COZ_VLM_URL, COZ_CRITIC_URL and
    /// COZ_METRIC_URL when set. `getenv` is injectable for tests.
    void apply_env_overrides(const std::function<const char*(const char*)>& getenv);

    std::optional<Endpoint> endpoint(const std::string& role) const;

    static RunSpec from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
};

struct PreparedImage {
    std::string id;
    Image image;
    int original_width = 0;
    int original_height = 0;
    bool upscaled = false;  // "upscaled-ingest"
};

/// Short-side resize to `base_resolution` with the bicubic kernel, then a
/// centered square crop.
PreparedImage prepare_image(const Image& image, const std::string& id, int base_resolution);

/// Scaled short side: round(long * base / short).
int scaled_long_side(int long_side, int short_side, int base_resolution);

struct IngestResult {
    std::vector<PreparedImage> images;  // sorted by file name
    std::vector<std::string> rejects;   // "<file>: <reason>"
};

/// Throws std::runtime_error when the directory is missing or yields nothing.
IngestResult ingest(const std::filesystem::path& input_dir, int base_resolution);

struct MethodRun {
    Method method = Method::nn_interp;
    std::vector<MetricReport> levels;  // index k-1 holds scale s^k
    std::vector<std::string> errors;
    std::optional<ChainTranscript> transcript;
};

struct ImageResult {
    std::string image_id;
    bool upscaled = false;
    std::vector<MethodRun> runs;  // RunSpec method order
};

struct ProtocolResult {
    std::vector<ImageResult> images;
    std::vector<std::string> ingest_rejects;

    /// Substituted metric cells plus step errors plus ingest rejects.
    int failure_count() const;
};

/// Runs every method on every prepared image. Config problems throw before
/// any work; per-image problems are recorded and substituted.
ProtocolResult run_protocol(const RunSpec& spec, const std::vector<PreparedImage>& images);

/// Ingest, run, and (when output_dir is set) write report.csv / report.md.
ProtocolResult run_protocol(const RunSpec& spec);

struct ReportCell {
    double mean = 0.0;
    int failures = 0;
    int count = 0;
    int rank = 0;  // 1 best, 2 second best, 0 otherwise
};

struct ScaleRow {
    int level = 1;
    std::string scale_label;  // "16x"
    std::map<std::pair<std::string, std::string>, ReportCell> cells;  // (method, metric)
};

struct Report {
    std::vector<std::string> methods;
    std::vector<std::string> metrics;
    std::vector<ScaleRow> rows;
};

/// Per-scale means over all images. Throws std::invalid_argument on empty input.
Report aggregate(const ProtocolResult& result, int scale, const std::vector<Method>& methods,
                 const std::vector<std::string>& metrics);

std::string scale_label(std::int64_t factor);

std::string report_csv(const Report& report);
std::string report_markdown(const Report& report);

}  // namespace coz
