#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace coz {

struct RewardWeights {
    double critic = 1.0;
    double phrase = 0.5;
    double rep = 0.5;

    void validate() const;
};

/// Raw reward components before weighting.
struct RewardComponents {
    double critic = 0.0;  // [0, 1]
    double phrase = 1.0;  // {0, 1}
    double rep = 0.0;     // [-1, 0]
};

struct RewardBreakdown {
    double r_critic = 0.0;
    double r_phrase = 0.0;
    double r_rep = 0.0;
    double total = 0.0;
};

/// Case-insensitive substring blacklist for viewpoint markers.
class PhraseBlacklist {
public:
    explicit PhraseBlacklist(std::vector<std::string> phrases);

    /// {"first image", "second image", "the image", "zoom-in"}
    static PhraseBlacklist defaults();

    bool matches(std::string_view text) const;
    const std::vector<std::string>& phrases() const { return phrases_; }

private:
    std::vector<std::string> phrases_;
};

class CriticParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raw critic score in [0, 100] rescaled linearly to [0, 1], clamped.
double critic_reward(double raw_score);

/// First integer or decimal literal of the reply, clamped to [0, 100]. An
/// echoed "Rating (0-100):" label is skipped first. Throws CriticParseError
/// when the reply holds no numeral.
double parse_critic_reply(std::string_view reply);

/// 1 when no blacklisted phrase occurs in the text, else 0.
double phrase_exclusion_reward(std::string_view prompt_text, const PhraseBlacklist& blacklist);

/// 1 - |distinct n-grams| / |n-grams| over word n-grams; 0 when there are none.
double repeated_ngram_fraction(const std::vector<std::string>& tokens, int n);

/// Negative repeated n-gram fraction of the tokenized prompt, in [-1, 0].
double repetition_penalty(std::string_view prompt_text, int n = 3);

/// Weighted sum; throws std::invalid_argument if a component is out of range.
RewardBreakdown total_reward(const RewardComponents& components, const RewardWeights& weights);

/// Weights, blacklist and n-gram order, loadable from a run config.
struct RewardConfig {
    RewardWeights weights;
    PhraseBlacklist blacklist = PhraseBlacklist::defaults();
    int ngram = 3;

    /// Reads optional keys "weights" {critic, phrase, rep}, "blacklist" [..],
    /// "ngram" from a JSON object.
    static RewardConfig from_json(const nlohmann::json& doc);
};

/// Scores a prompt given the critic's raw reply text. An unparseable reply
/// yields r_critic = 0.
RewardBreakdown score_prompt(std::string_view prompt_text, std::string_view critic_reply,
                             const RewardConfig& config);

nlohmann::json breakdown_to_json(const RewardBreakdown& b);

}  // namespace coz
