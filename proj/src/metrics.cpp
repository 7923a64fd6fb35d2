#include "coz/metrics.hpp"

#include "coz/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace coz {

namespace {

const std::vector<MetricInfo>& registry() {
    static const std::vector<MetricInfo> metrics = {
        {"niqe", MetricDirection::lower_is_better, 100.0, true},
        {"musiq", MetricDirection::higher_is_better, 0.0, false},
        {"maniqa", MetricDirection::higher_is_better, 0.0, false},
        {"clipiqa", MetricDirection::higher_is_better, 0.0, false},
    };
    return metrics;
}

}  // namespace

const MetricInfo& metric_info(std::string_view name) {
    for (const auto& m : registry()) {
        if (m.name == name) return m;
    }
    throw std::invalid_argument("unknown metric: " + std::string(name));
}

std::vector<std::string> known_metrics() {
    std::vector<std::string> out;
    for (const auto& m : registry()) out.push_back(m.name);
    return out;
}

double RemoteMetricClient::score(const Image& image, const std::string& metric,
                                 const std::string& correlation_id) const {
    const nlohmann::json body = {{"image_png_b64", image_to_png_b64(image)}, {"metric", metric}};
    nlohmann::json reply;
    try {
        reply = post_json(endpoint_, "/v1/metric", body, correlation_id);
    } catch (const RemoteError& e) {
        throw MetricError(e);
    }
    try {
        const double v = reply.at("score").get<double>();
        if (!std::isfinite(v)) {
            throw MetricError(FailureKind::malformed, correlation_id, "non-finite score");
        }
        return v;
    } catch (const nlohmann::json::exception& e) {
        throw MetricError(FailureKind::malformed, correlation_id, e.what());
    }
}

MetricEvaluator::MetricEvaluator(std::optional<NiqeModel> niqe_model, std::optional<Endpoint> metric_endpoint)
    : niqe_model_(std::move(niqe_model)) {
    if (metric_endpoint && !metric_endpoint->url.empty()) {
        remote_.emplace(*metric_endpoint);
    }
}

void MetricEvaluator::check_available(const std::vector<std::string>& metrics) const {
    for (const auto& name : metrics) {
        const MetricInfo* info = nullptr;
        try {
            info = &metric_info(name);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (info->native && !niqe_model_) {
            throw ConfigError("metric " + name + " needs a NIQE model file");
        }
        if (!info->native && !remote_) {
            throw ConfigError("metric " + name + " needs a metric endpoint");
        }
    }
}

MetricCell MetricEvaluator::failure_cell(const std::string& metric, const std::string& reason) {
    MetricCell c;
    c.value = metric_info(metric).worst_value;
    c.failed = true;
    c.failure = reason;
    return c;
}

MetricCell MetricEvaluator::evaluate(const Image& image, const std::string& metric,
                                     const std::string& correlation_id) const {
    const MetricInfo& info = metric_info(metric);
    try {
        if (info.native) {
            if (!niqe_model_) {
                return failure_cell(metric, "no NIQE model");
            }
            const NiqeScore s = niqe(image, *niqe_model_);
            MetricCell c;
            c.value = s.score;
            c.regularized = s.regularized;
            return c;
        }
        if (!remote_) {
            return failure_cell(metric, "no metric endpoint");
        }
        MetricCell c;
        c.value = remote_->score(image, metric, correlation_id);
        return c;
    } catch (const std::exception& e) {
        return failure_cell(metric, e.what());
    }
}

MetricReport MetricEvaluator::evaluate_all(const Image& image, const std::vector<std::string>& metrics,
                                           const std::string& correlation_id) const {
    MetricReport r;
    for (const auto& m : metrics) {
        r.cells[m] = evaluate(image, m, correlation_id + ":" + m);
    }
    return r;
}

}  // namespace coz
