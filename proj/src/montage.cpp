#include "coz/montage.hpp"

#include "coz/resample.hpp"

#include <cmath>
#include <stdexcept>

#include <opencv2/imgproc.hpp>

namespace coz {

std::vector<std::string> montage_labels(const ChainTranscript& transcript) {
    std::vector<std::string> out;
    for (const auto& s : transcript.states) out.push_back(s.cumulative_factor.to_string() + "x");
    return out;
}

DisplayRect montage_inset(const ChainTranscript& transcript, int panel_size) {
    if (transcript.states.empty()) throw std::invalid_argument("empty transcript");
    const double d0 = transcript.states.front().source_rect.width.to_double();
    const double k = panel_size / d0;
    const SourceRect& r = transcript.states.back().source_rect;
    return {r.x.to_double() * k, r.y.to_double() * k, r.width.to_double() * k, r.height.to_double() * k};
}

Image render_montage(const ChainTranscript& transcript, const MontageOptions& options) {
    const auto& states = transcript.states;
    if (states.empty()) throw std::invalid_argument("empty transcript");
    for (const auto& s : states) {
        if (s.image.empty()) throw std::invalid_argument("transcript state without raster");
    }
    const int p = options.panel_size;
    const int panels = static_cast<int>(states.size());
    const int width = panels * p + (panels + 1) * options.gap;
    const int height = p + 2 * options.gap + options.label_height;
    cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));

    const auto labels = montage_labels(transcript);
    for (int i = 0; i < panels; ++i) {
        Image panel = resize(states[static_cast<std::size_t>(i)].image, p, ResizeKernel::bicubic);
        if (panel.channels() == 1) {
            Image rgb(p, p, 3);
            for (int y = 0; y < p; ++y)
                for (int x = 0; x < p; ++x)
                    for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = panel.at(x, y);
            panel = std::move(rgb);
        }
        auto bytes = to_rgb8(panel);
        cv::Mat m(p, p, CV_8UC3, bytes.data());
        const int x0 = options.gap + i * (p + options.gap);
        m.copyTo(canvas(cv::Rect(x0, options.gap, p, p)));

        const auto& text = labels[static_cast<std::size_t>(i)];
        int baseline = 0;
        const cv::Size ts = cv::getTextSize(text, cv::FONT_HERSHEY_SIMPLEX, 0.6, 1, &baseline);
        cv::putText(canvas, text, cv::Point(x0 + (p - ts.width) / 2, options.gap + p + (options.label_height + ts.height) / 2),
                    cv::FONT_HERSHEY_SIMPLEX, 0.6, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    }

    if (panels > 1) {
        const DisplayRect r = montage_inset(transcript, p);
        const int x = options.gap + static_cast<int>(std::floor(r.x));
        const int y = options.gap + static_cast<int>(std::floor(r.y));
        const int w = std::max(1, static_cast<int>(std::ceil(r.width)));
        const int h = std::max(1, static_cast<int>(std::ceil(r.height)));
        cv::rectangle(canvas, cv::Rect(x, y, w, h), cv::Scalar(255, 0, 0), 1);
    }

    return from_rgb8(std::span<const std::uint8_t>(canvas.data, canvas.total() * 3), width, height);
}

void load_transcript_rasters(ChainTranscript& transcript, const std::filesystem::path& dir) {
    for (auto& s : transcript.states) {
        s.image = read_image(dir / state_png_name(transcript.image_id, s));
    }
}

}  // namespace coz
