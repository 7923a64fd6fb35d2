#pragma once

#include "coz/http_json.hpp"
#include "coz/image.hpp"
#include "coz/niqe.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coz {

enum class MetricDirection { lower_is_better, higher_is_better };

struct MetricInfo {
    std::string name;
    MetricDirection direction;
    double worst_value;  // substituted on failure
    bool native;
};

/// niqe (native, ↓, worst 100.0); musiq, maniqa, clipiqa (remote, ↑, worst 0.0).
/// Throws std::invalid_argument for unknown names.
const MetricInfo& metric_info(std::string_view name);
std::vector<std::string> known_metrics();

/// Client for /v1/metric.
class RemoteMetricClient {
public:
    explicit RemoteMetricClient(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}
    double score(const Image& image, const std::string& metric, const std::string& correlation_id) const;

private:
    Endpoint endpoint_;
};

struct MetricCell {
    double value = 0.0;
    bool failed = false;
    bool regularized = false;
    std::string failure;
};

/// Every requested metric for one image; failed cells hold the worst value.
struct MetricReport {
    std::map<std::string, MetricCell> cells;
};

/// Scores images with native NIQE and/or the remote metric service. Never
/// throws for per-image failures: they are flagged and substituted.
class MetricEvaluator {
public:
    MetricEvaluator(std::optional<NiqeModel> niqe_model, std::optional<Endpoint> metric_endpoint);

    /// Throws ConfigError when a requested metric has no backing model or endpoint.
    void check_available(const std::vector<std::string>& metrics) const;

    MetricCell evaluate(const Image& image, const std::string& metric, const std::string& correlation_id) const;
    MetricReport evaluate_all(const Image& image, const std::vector<std::string>& metrics,
                              const std::string& correlation_id) const;

    /// The substituted cell used when the image itself is missing.
    static MetricCell failure_cell(const std::string& metric, const std::string& reason);

private:
    std::optional<NiqeModel> niqe_model_;
    std::optional<RemoteMetricClient> remote_;
};

}  // namespace coz
