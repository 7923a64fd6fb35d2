#pragma once

#include <chrono>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace coz {

enum class FailureKind {
    transport,        // connection refused, reset, DNS
    timeout,          // no response within the per-request timeout
    http_status,      // non-200 reply
    malformed,        // body is not the expected JSON shape
    wrong_dimension,  // decoded image violates the fixed-window contract
    empty_output,     // model replied with nothing usable
};

std::string_view failure_kind_name(FailureKind kind);

/// Failure talking to a model service. Always carries the correlation id of
/// the request that failed.
class RemoteError : public std::runtime_error {
public:
    RemoteError(FailureKind kind, std::string request_id, const std::string& message,
                int http_status = 0);

    FailureKind kind() const { return kind_; }
    const std::string& request_id() const { return request_id_; }
    int http_status() const { return http_status_; }

private:
    FailureKind kind_;
    std::string request_id_;
    int http_status_;
};

class BackendError : public RemoteError {
public:
    using RemoteError::RemoteError;
    explicit BackendError(const RemoteError& e) : RemoteError(e) {}
};

class PromptError : public RemoteError {
public:
    using RemoteError::RemoteError;
    explicit PromptError(const RemoteError& e) : RemoteError(e) {}
};

class MetricError : public RemoteError {
public:
    using RemoteError::RemoteError;
    explicit MetricError(const RemoteError& e) : RemoteError(e) {}
};

struct Endpoint {
    std::string url;  // scheme://host[:port][/prefix]
    std::chrono::milliseconds timeout{std::chrono::seconds(120)};
};

/// POSTs a JSON document to url + path and returns the parsed reply. Transport
/// failures (including timeouts) are retried exactly once; HTTP status and
/// payload errors are not.
nlohmann::json post_json(const Endpoint& endpoint, std::string_view path,
                         const nlohmann::json& body, const std::string& request_id);

}  // namespace coz
