#pragma once

#include "coz/geometry.hpp"
#include "coz/image.hpp"
#include "coz/prompt_extraction.hpp"
#include "coz/rational.hpp"
#include "coz/sr_backends.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace coz {

struct ScaleState {
    int index = 0;
    Image image;
    SourceRect source_rect;
    Rational cumulative_factor{1};
};

/// The input state x_0: index 0, factor 1, covering the whole square image.
ScaleState make_initial_state(Image image);

struct ZoomConfig {
    int scale = 4;
    int recursions = 4;
    int base_resolution = 512;
    PromptMode prompt_mode = PromptMode::null;
    std::string backend_id = "bicubic";
    std::uint64_t seed = 0;

    /// Throws ConfigError when scale < 2, recursions < 1, or base_resolution
    /// is not a multiple of scale.
    void validate() const;
};

enum class ChainStage { prompt, sr };

struct StepError {
    int step = 0;
    ChainStage stage = ChainStage::sr;
    std::string kind;
    std::string request_id;
    std::string message;
    bool fell_back_to_null_prompt = false;
};

struct ChainTranscript {
    ZoomConfig config;
    std::string image_id;
    std::string backend_id;
    std::vector<ScaleState> states;   // n+1 when complete
    std::vector<Prompt> prompts;      // one per attempted step
    std::vector<double> step_seconds;
    std::vector<std::map<std::string, std::string>> backend_meta;
    std::vector<StepError> errors;

    /// True when every configured step produced a state.
    bool complete() const {
        return static_cast<int>(states.size()) == config.recursions + 1;
    }
};

/// Zoom chain driver: c_1 from x_0, then c_i from (x_{i-2}, x_{i-1}); each
/// x_i is the backend's zoom of x_{i-1} guided by c_i.
///
/// A backend failure truncates the transcript at the last good state and
/// records the error. A prompt failure falls back to the null prompt and is
/// recorded as well.
ChainTranscript run_chain(const ScaleState& x0, const ZoomConfig& config, const SrBackend& backend,
                          const PromptSource& prompter, const std::string& image_id = "x0");

/// Single backend application at total_factor = scale^k. Throws ConfigError
/// when total_factor is not such a power; propagates BackendError.
ScaleState run_direct(const ScaleState& x0, std::int64_t total_factor, int scale,
                      const SrBackend& backend, const std::string& request_id = "direct",
                      std::uint64_t seed = 0);

/// Exponent k with scale^k == factor, or -1.
int power_of(std::int64_t factor, int scale);

/// Human-readable descriptions of broken transcript invariants (empty when
/// the transcript is consistent).
std::vector<std::string> transcript_violations(const ChainTranscript& transcript);

nlohmann::json transcript_to_json(const ChainTranscript& transcript);

/// Restores everything except raster data (states carry empty images).
ChainTranscript transcript_from_json(const nlohmann::json& doc);

/// `<image-id>_step<i>_x<factor>.png`
std::string state_png_name(const std::string& image_id, const ScaleState& state);

/// Writes `<image-id>.json` and, when requested, one PNG per state.
void write_transcript(const ChainTranscript& transcript, const std::filesystem::path& dir,
                      bool write_rasters);

}  // namespace coz
