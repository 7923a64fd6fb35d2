#include "coz/sr_backends.hpp"

#include "coz/geometry.hpp"

#include <fmt/format.h>

namespace coz {

namespace {

void check_request(const SRRequest& req) {
    if (req.image.empty() || !req.image.is_square()) {
        throw ConfigError("SR request image must be square");
    }
    if (req.scale_hint < 2) {
        throw ConfigError("SR request scale must be >= 2");
    }
}

}  // namespace

SRResponse NearestBackend::upscale(const SRRequest& req) const {
    check_request(req);
    return {zoom_window(req.image, req.scale_hint, ResizeKernel::nearest), {{"model", "nearest"}}};
}

SRResponse BicubicBackend::upscale(const SRRequest& req) const {
    check_request(req);
    return {zoom_window(req.image, req.scale_hint, ResizeKernel::bicubic), {{"model", "bicubic"}}};
}

SRResponse RemoteBackend::upscale(const SRRequest& req) const {
    check_request(req);
    const Image window = zoom_window(req.image, req.scale_hint, ResizeKernel::bicubic);
    const nlohmann::json body = {{"request_id", req.request_id},
                                 {"image_png_b64", image_to_png_b64(window)},
                                 {"prompt", req.prompt_text},
                                 {"scale", req.scale_hint},
                                 {"seed", req.seed}};
    nlohmann::json reply;
    try {
        reply = post_json(endpoint_, "/v1/sr", body, req.request_id);
    } catch (const RemoteError& e) {
        throw BackendError(e);
    }

    SRResponse out;
    try {
        if (reply.at("request_id").get<std::string>() != req.request_id) {
            throw BackendError(FailureKind::malformed, req.request_id, "reply carries a different request_id");
        }
        out.image = image_from_png_b64(reply.at("image_png_b64").get<std::string>());
        if (reply.contains("meta") && reply["meta"].is_object()) {
            for (const auto& [key, value] : reply["meta"].items()) {
                out.backend_meta[key] = value.is_string() ? value.get<std::string>() : value.dump();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(FailureKind::malformed, req.request_id, e.what());
    } catch (const BackendError&) {
        throw;
    } catch (const std::runtime_error& e) {
        throw BackendError(FailureKind::malformed, req.request_id, e.what());
    }

    if (out.image.width() != window.width() || out.image.height() != window.height()) {
        throw BackendError(FailureKind::wrong_dimension, req.request_id,
                           fmt::format("expected {0}x{0}, got {1}x{2}", window.width(),
                                       out.image.width(), out.image.height()));
    }
    if (out.image.clamp01()) {
        out.backend_meta["clamped"] = "true";
    }
    return out;
}

std::unique_ptr<SrBackend> make_backend(const std::string& backend_id, const Endpoint& sr_endpoint) {
    if (backend_id == "nearest") return std::make_unique<NearestBackend>();
    if (backend_id == "bicubic") return std::make_unique<BicubicBackend>();
    if (backend_id == "remote") {
        if (sr_endpoint.url.empty()) {
            throw ConfigError("remote backend requires an SR endpoint url");
        }
        return std::make_unique<RemoteBackend>(sr_endpoint);
    }
    throw ConfigError("unknown backend: " + backend_id);
}

}  // namespace coz
