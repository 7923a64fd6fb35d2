#include "coz/scale_chain.hpp"

#include <chrono>
#include <fmt/format.h>

namespace coz {

bool SourceRect::contains(const SourceRect& inner) const {
    return inner.x >= x && inner.y >= y && inner.x + inner.width <= x + width &&
           inner.y + inner.height <= y + height;
}

int center_crop_origin(int side, int factor) {
    return (side - side / factor) / 2;
}

ZoomFragment center_crop_for_zoom(const Image& image, const SourceRect& parent_rect, int factor) {
    if (factor < 2) {
        throw ConfigError("zoom factor must be at least 2, got " + std::to_string(factor));
    }
    if (!image.is_square()) {
        throw ConfigError("zoom input must be square");
    }
    const int side = image.width();
    if (side % factor != 0) {
        throw ConfigError(fmt::format("side {} is not divisible by zoom factor {}", side, factor));
    }
    const int window = side / factor;
    const int origin = center_crop_origin(side, factor);

    ZoomFragment out;
    out.raster = image.crop(origin, origin, window, window);
    out.origin = origin;
    const Rational px_w = parent_rect.width / Rational(side);
    const Rational px_h = parent_rect.height / Rational(side);
    out.source_rect.x = parent_rect.x + Rational(origin) * px_w;
    out.source_rect.y = parent_rect.y + Rational(origin) * px_h;
    out.source_rect.width = Rational(window) * px_w;
    out.source_rect.height = Rational(window) * px_h;
    return out;
}

Image zoom_window(const Image& image, int factor, ResizeKernel kernel) {
    const SourceRect unit{Rational(0), Rational(0), Rational(image.width()), Rational(image.height())};
    const ZoomFragment frag = center_crop_for_zoom(image, unit, factor);
    return resize(frag.raster, image.width(), kernel);
}

ScaleState make_initial_state(Image image) {
    if (image.empty() || !image.is_square()) {
        throw ConfigError("x0 must be a non-empty square image");
    }
    ScaleState s;
    s.index = 0;
    s.source_rect = {Rational(0), Rational(0), Rational(image.width()), Rational(image.height())};
    s.cumulative_factor = Rational(1);
    s.image = std::move(image);
    return s;
}

void ZoomConfig::validate() const {
    if (scale < 2) {
        throw ConfigError("scale must be >= 2");
    }
    if (recursions < 1) {
        throw ConfigError("recursions must be >= 1");
    }
    if (base_resolution < 1 || base_resolution % scale != 0) {
        throw ConfigError(fmt::format("base resolution {} is not divisible by scale {}",
                                      base_resolution, scale));
    }
}

int power_of(std::int64_t factor, int scale) {
    if (scale < 2 || factor < scale) {
        return -1;
    }
    int k = 0;
    while (factor > 1) {
        if (factor % scale != 0) {
            return -1;
        }
        factor /= scale;
        ++k;
    }
    return k;
}

namespace {

ScaleState next_state(const ScaleState& prev, Image image, int factor) {
    // Geometry is owned here; the backend output only supplies pixels.
    const ZoomFragment frag = center_crop_for_zoom(prev.image, prev.source_rect, factor);
    ScaleState s;
    s.index = prev.index + 1;
    s.image = std::move(image);
    s.source_rect = frag.source_rect;
    s.cumulative_factor = prev.cumulative_factor * Rational(factor);
    return s;
}

void check_backend_output(const SRResponse& resp, const ScaleState& prev, const std::string& request_id) {
    if (resp.image.width() != prev.image.width() || resp.image.height() != prev.image.height()) {
        throw BackendError(FailureKind::wrong_dimension, request_id,
                           fmt::format("backend returned {}x{} for a {}x{} window", resp.image.width(),
                                       resp.image.height(), prev.image.width(), prev.image.height()));
    }
}

}  // namespace

ChainTranscript run_chain(const ScaleState& x0, const ZoomConfig& config, const SrBackend& backend,
                          const PromptSource& prompter, const std::string& image_id) {
    config.validate();
    if (x0.image.width() != config.base_resolution || !x0.image.is_square()) {
        throw ConfigError(fmt::format("x0 must be {0}x{0}", config.base_resolution));
    }
    if (prompter.mode() != config.prompt_mode) {
        throw ConfigError("prompt source does not match the configured prompt mode");
    }

    ChainTranscript t;
    t.config = config;
    t.image_id = image_id;
    t.backend_id = backend.id();
    t.states.push_back(x0);

    for (int i = 1; i <= config.recursions; ++i) {
        const auto started = std::chrono::steady_clock::now();
        const ScaleState& prev = t.states.back();

        PromptContext ctx;
        ctx.step = i;
        ctx.image_id = image_id;
        ctx.seed = config.seed + static_cast<std::uint64_t>(i);
        if (i >= 2) {
            const ScaleState& older = t.states[t.states.size() - 2];
            ctx.images.push_back({older.index, &older.image});
        }
        ctx.images.push_back({prev.index, &prev.image});

        Prompt prompt;
        try {
            prompt = prompter.extract(ctx);
        } catch (const RemoteError& e) {
            t.errors.push_back({i, ChainStage::prompt, std::string(failure_kind_name(e.kind())),
                                e.request_id(), e.what(), true});
            prompt = make_null_prompt();
        } catch (const std::invalid_argument& e) {
            t.errors.push_back({i, ChainStage::prompt, "invalid_prompt", image_id, e.what(), true});
            prompt = make_null_prompt();
        }
        t.prompts.push_back(prompt);

        SRRequest req;
        req.image = prev.image;
        req.prompt_text = prompt.text;
        req.scale_hint = config.scale;
        req.request_id = fmt::format("{}:step{}", image_id, i);
        req.seed = config.seed + static_cast<std::uint64_t>(i);

        try {
            SRResponse resp = backend.upscale(req);
            check_backend_output(resp, prev, req.request_id);
            t.backend_meta.push_back(std::move(resp.backend_meta));
            t.states.push_back(next_state(prev, std::move(resp.image), config.scale));
        } catch (const RemoteError& e) {
            t.errors.push_back({i, ChainStage::sr, std::string(failure_kind_name(e.kind())),
                                e.request_id(), e.what(), false});
            t.step_seconds.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
            break;
        }
        t.step_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
    }
    return t;
}

ScaleState run_direct(const ScaleState& x0, std::int64_t total_factor, int scale,
                      const SrBackend& backend, const std::string& request_id, std::uint64_t seed) {
    const int k = power_of(total_factor, scale);
    if (k < 1) {
        throw ConfigError(fmt::format("total factor {} is not a power of {}", total_factor, scale));
    }
    if (x0.image.width() % total_factor != 0) {
        throw ConfigError(fmt::format("side {} is not divisible by {}", x0.image.width(), total_factor));
    }
    SRRequest req;
    req.image = x0.image;
    req.scale_hint = static_cast<int>(total_factor);
    req.request_id = request_id;
    req.seed = seed;
    SRResponse resp = backend.upscale(req);
    check_backend_output(resp, x0, request_id);

    ScaleState out = next_state(x0, std::move(resp.image), static_cast<int>(total_factor));
    out.index = k;
    return out;
}

std::vector<std::string> transcript_violations(const ChainTranscript& t) {
    std::vector<std::string> out;
    const int n = t.config.recursions;
    if (t.states.empty()) {
        out.push_back("no states");
        return out;
    }
    if (static_cast<int>(t.states.size()) > n + 1) {
        out.push_back("more states than recursions + 1");
    }
    if (t.complete() && static_cast<int>(t.prompts.size()) != n) {
        out.push_back("complete transcript must carry one prompt per step");
    }
    const int side = t.states.front().image.width();
    for (std::size_t i = 0; i < t.states.size(); ++i) {
        const ScaleState& s = t.states[i];
        if (s.index != static_cast<int>(i)) {
            out.push_back(fmt::format("state {} has index {}", i, s.index));
        }
        if (!s.image.empty() && (s.image.width() != side || !s.image.is_square())) {
            out.push_back(fmt::format("state {} is not {}x{}", i, side, side));
        }
        const Rational expected = Rational(checked_pow(t.config.scale, static_cast<int>(i)));
        if (s.cumulative_factor != expected) {
            out.push_back(fmt::format("state {} factor {} != {}", i, s.cumulative_factor.to_string(),
                                      expected.to_string()));
        }
        if (i >= 1) {
            const ScaleState& p = t.states[i - 1];
            if (!p.source_rect.contains(s.source_rect)) {
                out.push_back(fmt::format("state {} rect escapes its parent", i));
            }
            if (s.source_rect.width * Rational(t.config.scale) != p.source_rect.width) {
                out.push_back(fmt::format("state {} rect side is not parent / scale", i));
            }
        }
    }
    for (std::size_t k = 0; k < t.prompts.size(); ++k) {
        const Prompt& p = t.prompts[k];
        const int i = static_cast<int>(k) + 1;
        if (p.mode == PromptMode::null) {
            if (!p.text.empty() || !p.tokens.empty()) {
                out.push_back(fmt::format("null prompt {} carries text", i));
            }
            continue;
        }
        const std::vector<int> expected =
            i == 1 ? std::vector<int>{0} : std::vector<int>{i - 2, i - 1};
        if (p.conditioning_indices != expected) {
            out.push_back(fmt::format("prompt {} conditioned on the wrong states", i));
        }
        if (p.tokens != tokenize(p.text)) {
            out.push_back(fmt::format("prompt {} tokens do not match its text", i));
        }
    }
    return out;
}

std::string state_png_name(const std::string& image_id, const ScaleState& state) {
    return fmt::format("{}_step{}_x{}.png", image_id, state.index, state.cumulative_factor.to_string());
}

}  // namespace coz
