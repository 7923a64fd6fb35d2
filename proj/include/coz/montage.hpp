#pragma once

#include "coz/image.hpp"
#include "coz/scale_chain.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace coz {

struct MontageOptions {
    int panel_size = 256;
    int gap = 8;
    int label_height = 28;
};

struct DisplayRect {
    double x = 0.0;
    double y = 0.0;
    double width = 0.0;
    double height = 0.0;
};

/// "<factor>x" for every state, panel order.
std::vector<std::string> montage_labels(const ChainTranscript& transcript);

/// The deepest state's source rect in panel-0 display coordinates.
DisplayRect montage_inset(const ChainTranscript& transcript, int panel_size);

/// Horizontal strip: x_0 with the inset outlined, then every later state.
/// Throws std::invalid_argument when the transcript has no rasters.
Image render_montage(const ChainTranscript& transcript, const MontageOptions& options = {});

/// Fills state rasters of a transcript read back from JSON, using the PNG
/// names written next to it.
void load_transcript_rasters(ChainTranscript& transcript, const std::filesystem::path& dir);

}  // namespace coz
