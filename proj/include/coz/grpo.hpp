#pragma once

#include "coz/prompt_extraction.hpp"
#include "coz/rewards.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace coz {

struct GroupSample {
    Prompt prompt;
    RewardBreakdown breakdown;
    double logprob_under_policy = 0.0;
    double advantage = 0.0;
    std::vector<std::string> conditioning_image_ids;
};

struct AdvantageGroup {
    std::vector<GroupSample> samples;
    std::vector<double> advantages;
};

/// Reward minus group mean. With normalize_std the result is further divided
/// by the group standard deviation (skipped when it is zero). Throws
/// std::invalid_argument for groups smaller than two.
std::vector<double> group_advantages(std::span<const double> rewards, bool normalize_std = false);

/// Builds an AdvantageGroup and stamps each sample's advantage.
AdvantageGroup make_advantage_group(std::vector<GroupSample> samples, bool normalize_std = false);

/// Softmax policy over a fixed list of candidate prompt strings.
class ToyPromptPolicy {
public:
    ToyPromptPolicy(std::vector<std::string> vocabulary, double learning_rate);
    ToyPromptPolicy(std::vector<std::string> vocabulary, std::vector<double> logits, double learning_rate);

    const std::vector<std::string>& vocabulary() const { return vocabulary_; }
    const std::vector<double>& logits() const { return logits_; }
    std::vector<double>& logits() { return logits_; }
    const std::vector<double>& reference_logits() const { return reference_; }
    double learning_rate() const { return learning_rate_; }

    std::vector<double> probabilities() const;
    double log_probability(std::size_t candidate) const;

    /// Freezes the current logits as the KL reference.
    void freeze_reference() { reference_ = logits_; }

private:
    std::vector<std::string> vocabulary_;
    std::vector<double> logits_;
    std::vector<double> reference_;
    double learning_rate_;
};

std::vector<double> softmax(std::span<const double> logits);

/// Σ_g A_g · log softmax(logits)[candidate_g]: the on-policy GRPO surrogate
/// (importance ratio 1, clipping inactive).
double surrogate_objective(std::span<const double> logits, std::span<const std::size_t> candidates,
                           std::span<const double> advantages);

/// Analytic gradient of surrogate_objective with respect to the logits:
/// Σ_g A_g (1[v = v_g] - softmax_v).
std::vector<double> surrogate_gradient(std::span<const double> logits,
                                       std::span<const std::size_t> candidates,
                                       std::span<const double> advantages);

using PromptScorer = std::function<RewardBreakdown(const std::string&)>;

/// Reward-module scorer over fixed candidates: critic raw scores come from a
/// table (missing entries score critic 0), phrase and repetition terms from
/// the prompt text.
PromptScorer make_table_scorer(std::map<std::string, double> critic_raw_scores, RewardConfig config);

struct GrpoOptions {
    int group_size = 2;
    bool normalize_std = false;
    double kl_coef = 0.0;  // penalty towards reference_logits when > 0
};

struct GroupLog {
    std::vector<std::size_t> candidates;
    AdvantageGroup group;
};

/// One iteration: sample group_size candidates, score, compute advantages,
/// and take one gradient-ascent step on the logits.
GroupLog grpo_step(ToyPromptPolicy& policy, const PromptScorer& scorer, const GrpoOptions& options,
                   std::uint64_t seed);

struct CurvePoint {
    int iteration = 0;
    double expected_reward = 0.0;
    double r_critic_mean = 0.0;
    double r_phrase_mean = 0.0;
    double r_rep_mean = 0.0;
};

/// Policy-weighted reward components over the whole vocabulary.
CurvePoint expected_rewards(const ToyPromptPolicy& policy, const std::vector<RewardBreakdown>& scores,
                            int iteration);

/// Runs `iterations` GRPO steps; the curve holds the initial point plus one
/// point per iteration.
std::vector<CurvePoint> train_toy(ToyPromptPolicy& policy, const PromptScorer& scorer, int iterations,
                                  const GrpoOptions& options, std::uint64_t seed);

/// iteration,expected_reward,r_critic_mean,r_phrase_mean,r_rep_mean
void write_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path);

/// One JSON object per line: prompt, conditioning_image_ids, breakdown, advantage.
void export_reward_batch(std::span<const GroupSample> samples, const std::filesystem::path& path);
std::vector<GroupSample> read_reward_batch(const std::filesystem::path& path);

}  // namespace coz
