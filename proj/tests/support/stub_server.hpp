#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace httplib {
class Server;
}

namespace coz::testing {

enum class SrFault { none, wrong_dimension, slow, http_500, malformed, wrong_request_id };

struct StubBehavior {
    SrFault sr_fault = SrFault::none;
    int slow_ms = 600;
    std::string prompt_text = "fur";
    std::string critic_text = "Rating (0-100): 85";
    std::map<std::string, double> metric_scores;  // missing metric -> HTTP 500
};

/// Deterministic W1/W2/W3 server on 127.0.0.1. /v1/sr echoes its input window.
class StubServer {
public:
    explicit StubServer(StubBehavior behavior = {});
    ~StubServer();
    StubServer(const StubServer&) = delete;
    StubServer& operator=(const StubServer&) = delete;

    std::string url() const;
    void set_behavior(StubBehavior behavior);

    /// Bodies received on a path, in arrival order.
    std::vector<nlohmann::json> requests(const std::string& path) const;
    /// Replies sent on a path, in order.
    std::vector<nlohmann::json> replies(const std::string& path) const;
    void clear();

private:
    StubBehavior behavior() const;
    void record(const std::string& path, const nlohmann::json& request, const nlohmann::json& reply);

    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mutex_;
    StubBehavior behavior_;
    std::map<std::string, std::vector<nlohmann::json>> requests_;
    std::map<std::string, std::vector<nlohmann::json>> replies_;
};

}  // namespace coz::testing
