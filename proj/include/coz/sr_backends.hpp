#pragma once

#include "coz/http_json.hpp"
#include "coz/image.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>

namespace coz {

struct SRRequest {
    Image image;  // the previous scale-state, square at base resolution
    std::string prompt_text;
    int scale_hint = 4;  // zoom factor applied by this call
    std::string request_id;
    std::uint64_t seed = 0;
};

struct SRResponse {
    Image image;
    std::map<std::string, std::string> backend_meta;
};

/// One zoom step: given a square state and a factor, produce the state that
/// depicts its centered 1/factor window at the same resolution. Implementations
/// must be safe to call concurrently.
class SrBackend {
public:
    virtual ~SrBackend() = default;
    virtual std::string id() const = 0;
    virtual SRResponse upscale(const SRRequest& request) const = 0;
};

class NearestBackend final : public SrBackend {
public:
    std::string id() const override { return "nearest"; }
    SRResponse upscale(const SRRequest& request) const override;
};

class BicubicBackend final : public SrBackend {
public:
    std::string id() const override { return "bicubic"; }
    SRResponse upscale(const SRRequest& request) const override;
};

/// Client for the /v1/sr service. The centered window is cropped and
/// bicubic-resized locally; the service sees a fixed-size window and must
/// return one of identical size.
class RemoteBackend final : public SrBackend {
public:
    explicit RemoteBackend(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::string id() const override { return "remote"; }
    SRResponse upscale(const SRRequest& request) const override;

    const Endpoint& endpoint() const { return endpoint_; }

private:
    Endpoint endpoint_;
};

/// "nearest", "bicubic", or "remote" (requires an endpoint url).
std::unique_ptr<SrBackend> make_backend(const std::string& backend_id, const Endpoint& sr_endpoint);

}  // namespace coz
