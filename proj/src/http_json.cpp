#include "coz/http_json.hpp"

#include <httplib.h>

namespace coz {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host:port
    std::string prefix;  // path prefix without trailing slash
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto host_begin = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_begin = url.find('/', host_begin);
    SplitUrl out;
    if (path_begin == std::string::npos) {
        out.origin = url;
    } else {
        out.origin = url.substr(0, path_begin);
        out.prefix = url.substr(path_begin);
        while (!out.prefix.empty() && out.prefix.back() == '/') {
            out.prefix.pop_back();
        }
    }
    return out;
}

}  // namespace

std::string_view failure_kind_name(FailureKind kind) {
    switch (kind) {
        case FailureKind::transport: return "transport";
        case FailureKind::timeout: return "timeout";
        case FailureKind::http_status: return "http_status";
        case FailureKind::malformed: return "malformed";
        case FailureKind::wrong_dimension: return "wrong_dimension";
        case FailureKind::empty_output: return "empty_output";
    }
    return "unknown";
}

RemoteError::RemoteError(FailureKind kind, std::string request_id, const std::string& message,
                         int http_status)
    : std::runtime_error(std::string(failure_kind_name(kind)) + " [" + request_id + "]: " + message),
      kind_(kind),
      request_id_(std::move(request_id)),
      http_status_(http_status) {}

nlohmann::json post_json(const Endpoint& endpoint, std::string_view path,
                         const nlohmann::json& body, const std::string& request_id) {
    if (endpoint.url.empty()) {
        throw RemoteError(FailureKind::transport, request_id, "no endpoint configured");
    }
    const SplitUrl url = split_url(endpoint.url);
    const std::string full_path = url.prefix + std::string(path);
    const std::string payload = body.dump();

    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);

    for (int attempt = 0;; ++attempt) {
        httplib::Client client(url.origin);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());

        auto res = client.Post(full_path, payload, "application/json");
        if (!res) {
            const auto err = res.error();
            const bool timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                                   err == httplib::Error::ConnectionTimeout;
            if (attempt == 0) {
                continue;
            }
            throw RemoteError(timed_out ? FailureKind::timeout : FailureKind::transport, request_id,
                              httplib::to_string(err));
        }
        if (res->status != 200) {
            throw RemoteError(FailureKind::http_status, request_id,
                              "HTTP " + std::to_string(res->status), res->status);
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw RemoteError(FailureKind::malformed, request_id, e.what());
        }
    }
}

}  // namespace coz
