#include "coz/grpo.hpp"

#include "coz/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace coz {

std::vector<double> group_advantages(std::span<const double> rewards, bool normalize_std) {
    if (rewards.size() < 2) {
        throw std::invalid_argument("a group needs at least two generations for a baseline");
    }
    const double n = static_cast<double>(rewards.size());
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    std::vector<double> adv;
    adv.reserve(rewards.size());
    for (double r : rewards) {
        adv.push_back(r - mean);
    }
    if (normalize_std) {
        double var = 0.0;
        for (double a : adv) var += a * a;
        const double sd = std::sqrt(var / n);
        if (sd > 0.0) {
            for (double& a : adv) a /= sd;
        }
    }
    return adv;
}

AdvantageGroup make_advantage_group(std::vector<GroupSample> samples, bool normalize_std) {
    std::vector<double> rewards;
    for (const auto& s : samples) {
        rewards.push_back(s.breakdown.total);
    }
    AdvantageGroup g;
    g.advantages = group_advantages(rewards, normalize_std);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        samples[i].advantage = g.advantages[i];
    }
    g.samples = std::move(samples);
    return g;
}

std::vector<double> softmax(std::span<const double> logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

namespace {

double log_softmax_at(std::span<const double> logits, std::size_t k) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - mx);
    return logits[k] - mx - std::log(sum);
}

}  // namespace

ToyPromptPolicy::ToyPromptPolicy(std::vector<std::string> vocabulary, double learning_rate)
    : ToyPromptPolicy(vocabulary, std::vector<double>(vocabulary.size(), 0.0), learning_rate) {}

ToyPromptPolicy::ToyPromptPolicy(std::vector<std::string> vocabulary, std::vector<double> logits,
                                 double learning_rate)
    : vocabulary_(std::move(vocabulary)), logits_(std::move(logits)), learning_rate_(learning_rate) {
    if (vocabulary_.empty() || vocabulary_.size() > 64) {
        throw std::invalid_argument("toy vocabulary must hold 1..64 candidates");
    }
    if (logits_.size() != vocabulary_.size()) {
        throw std::invalid_argument("one logit per candidate required");
    }
    if (!(learning_rate_ >= 0.0)) {
        throw std::invalid_argument("learning rate must be non-negative");
    }
    reference_ = logits_;
}

std::vector<double> ToyPromptPolicy::probabilities() const {
    return softmax(logits_);
}

double ToyPromptPolicy::log_probability(std::size_t candidate) const {
    return log_softmax_at(logits_, candidate);
}

double surrogate_objective(std::span<const double> logits, std::span<const std::size_t> candidates,
                           std::span<const double> advantages) {
    double j = 0.0;
    for (std::size_t g = 0; g < candidates.size(); ++g) {
        j += advantages[g] * log_softmax_at(logits, candidates[g]);
    }
    return j;
}

std::vector<double> surrogate_gradient(std::span<const double> logits,
                                       std::span<const std::size_t> candidates,
                                       std::span<const double> advantages) {
    const std::vector<double> p = softmax(logits);
    std::vector<double> grad(logits.size(), 0.0);
    for (std::size_t g = 0; g < candidates.size(); ++g) {
        for (std::size_t v = 0; v < logits.size(); ++v) {
            grad[v] += advantages[g] * ((v == candidates[g] ? 1.0 : 0.0) - p[v]);
        }
    }
    return grad;
}

PromptScorer make_table_scorer(std::map<std::string, double> critic_raw_scores, RewardConfig config) {
    return [table = std::move(critic_raw_scores), cfg = std::move(config)](const std::string& text) {
        RewardComponents c;
        const auto it = table.find(text);
        c.critic = it == table.end() ? 0.0 : critic_reward(it->second);
        c.phrase = phrase_exclusion_reward(text, cfg.blacklist);
        c.rep = repetition_penalty(text, cfg.ngram);
        return total_reward(c, cfg.weights);
    };
}

GroupLog grpo_step(ToyPromptPolicy& policy, const PromptScorer& scorer, const GrpoOptions& options,
                   std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::vector<double> p = policy.probabilities();

    GroupLog log;
    std::vector<GroupSample> samples;
    for (int g = 0; g < options.group_size; ++g) {
        const double u = uniform01(rng);
        std::size_t pick = p.size() - 1;
        double acc = 0.0;
        for (std::size_t v = 0; v < p.size(); ++v) {
            acc += p[v];
            if (u < acc) {
                pick = v;
                break;
            }
        }
        log.candidates.push_back(pick);

        GroupSample s;
        const std::string& text = policy.vocabulary()[pick];
        s.prompt.mode = PromptMode::vlm;
        s.prompt.text = text;
        s.prompt.tokens = tokenize(text);
        s.breakdown = scorer(text);
        s.logprob_under_policy = policy.log_probability(pick);
        samples.push_back(std::move(s));
    }
    log.group = make_advantage_group(std::move(samples), options.normalize_std);

    std::vector<double> grad = surrogate_gradient(policy.logits(), log.candidates, log.group.advantages);
    if (options.kl_coef > 0.0) {
        // d/dθ KL(π_θ || π_ref) = π ⊙ (log π - log π_ref - KL)
        const auto& ref = policy.reference_logits();
        double kl = 0.0;
        std::vector<double> diff(p.size());
        for (std::size_t v = 0; v < p.size(); ++v) {
            diff[v] = log_softmax_at(policy.logits(), v) - log_softmax_at(ref, v);
            kl += p[v] * diff[v];
        }
        for (std::size_t v = 0; v < p.size(); ++v) {
            grad[v] -= options.kl_coef * p[v] * (diff[v] - kl);
        }
    }
    for (std::size_t v = 0; v < grad.size(); ++v) {
        policy.logits()[v] += policy.learning_rate() * grad[v];
    }
    return log;
}

CurvePoint expected_rewards(const ToyPromptPolicy& policy, const std::vector<RewardBreakdown>& scores,
                            int iteration) {
    const std::vector<double> p = policy.probabilities();
    CurvePoint pt;
    pt.iteration = iteration;
    for (std::size_t v = 0; v < p.size(); ++v) {
        pt.expected_reward += p[v] * scores[v].total;
        pt.r_critic_mean += p[v] * scores[v].r_critic;
        pt.r_phrase_mean += p[v] * scores[v].r_phrase;
        pt.r_rep_mean += p[v] * scores[v].r_rep;
    }
    return pt;
}

std::vector<CurvePoint> train_toy(ToyPromptPolicy& policy, const PromptScorer& scorer, int iterations,
                                  const GrpoOptions& options, std::uint64_t seed) {
    std::vector<RewardBreakdown> scores;
    for (const auto& text : policy.vocabulary()) {
        scores.push_back(scorer(text));
    }
    std::vector<CurvePoint> curve;
    curve.push_back(expected_rewards(policy, scores, 0));
    std::mt19937_64 seeds(seed);
    for (int t = 1; t <= iterations; ++t) {
        grpo_step(policy, scorer, options, seeds());
        curve.push_back(expected_rewards(policy, scores, t));
    }
    return curve;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path) {
    std::ofstream out(path);
    out << "iteration,expected_reward,r_critic_mean,r_phrase_mean,r_rep_mean\n";
    for (const auto& pt : curve) {
        out << fmt::format("{},{:.9f},{:.9f},{:.9f},{:.9f}\n", pt.iteration, pt.expected_reward,
                           pt.r_critic_mean, pt.r_phrase_mean, pt.r_rep_mean);
    }
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

void export_reward_batch(std::span<const GroupSample> samples, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    for (const auto& s : samples) {
        nlohmann::json line = {{"prompt", s.prompt.text},
                               {"conditioning_image_ids", s.conditioning_image_ids},
                               {"breakdown", breakdown_to_json(s.breakdown)},
                               {"advantage", s.advantage},
                               {"logprob", s.logprob_under_policy}};
        out << line.dump() << "\n";
    }
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

std::vector<GroupSample> read_reward_batch(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::vector<GroupSample> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        GroupSample s;
        s.prompt.mode = PromptMode::vlm;
        s.prompt.text = j.at("prompt").get<std::string>();
        s.prompt.tokens = tokenize(s.prompt.text);
        s.conditioning_image_ids = j.at("conditioning_image_ids").get<std::vector<std::string>>();
        const auto& b = j.at("breakdown");
        s.breakdown = {b.at("r_critic").get<double>(), b.at("r_phrase").get<double>(),
                       b.at("r_rep").get<double>(), b.at("total").get<double>()};
        s.advantage = j.at("advantage").get<double>();
        s.logprob_under_policy = j.value("logprob", 0.0);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace coz
