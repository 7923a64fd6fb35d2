#include "coz/rewards.hpp"

#include "coz/prompt_extraction.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

namespace coz {

namespace {

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

void RewardWeights::validate() const {
    if (critic < 0.0 || phrase < 0.0 || rep < 0.0) {
        throw std::invalid_argument("reward weights must be non-negative");
    }
}

PhraseBlacklist::PhraseBlacklist(std::vector<std::string> phrases) {
    if (phrases.empty()) {
        throw std::invalid_argument("phrase blacklist is empty");
    }
    for (auto& p : phrases) {
        if (p.empty()) {
            throw std::invalid_argument("blacklist phrase is empty");
        }
        phrases_.push_back(ascii_lower(p));
    }
}

PhraseBlacklist PhraseBlacklist::defaults() {
    return PhraseBlacklist({"first image", "second image", "the image", "zoom-in"});
}

bool PhraseBlacklist::matches(std::string_view text) const {
    const std::string lowered = ascii_lower(text);
    return std::any_of(phrases_.begin(), phrases_.end(),
                       [&](const std::string& p) { return lowered.find(p) != std::string::npos; });
}

double critic_reward(double raw_score) {
    return std::clamp(raw_score / 100.0, 0.0, 1.0);
}

double parse_critic_reply(std::string_view reply) {
    constexpr std::string_view label = "Rating (0-100):";
    if (const auto pos = reply.rfind(label); pos != std::string_view::npos) {
        reply.remove_prefix(pos + label.size());
    }
    const auto first = std::find_if(reply.begin(), reply.end(),
                                    [](unsigned char c) { return std::isdigit(c) != 0; });
    if (first == reply.end()) {
        throw CriticParseError("critic reply holds no numeral");
    }
    auto last = first;
    while (last != reply.end() && std::isdigit(static_cast<unsigned char>(*last))) ++last;
    if (last != reply.end() && *last == '.' && last + 1 != reply.end() &&
        std::isdigit(static_cast<unsigned char>(*(last + 1)))) {
        ++last;
        while (last != reply.end() && std::isdigit(static_cast<unsigned char>(*last))) ++last;
    }
    double value = 0.0;
    std::from_chars(&*first, &*first + (last - first), value);
    return std::clamp(value, 0.0, 100.0);
}

double phrase_exclusion_reward(std::string_view prompt_text, const PhraseBlacklist& blacklist) {
    return blacklist.matches(prompt_text) ? 0.0 : 1.0;
}

double repeated_ngram_fraction(const std::vector<std::string>& tokens, int n) {
    if (n < 1) {
        throw std::invalid_argument("n-gram order must be >= 1");
    }
    if (tokens.size() < static_cast<std::size_t>(n)) {
        return 0.0;
    }
    const std::size_t count = tokens.size() - static_cast<std::size_t>(n) + 1;
    std::set<std::vector<std::string>> distinct;
    for (std::size_t i = 0; i < count; ++i) {
        distinct.emplace(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                         tokens.begin() + static_cast<std::ptrdiff_t>(i) + n);
    }
    return 1.0 - static_cast<double>(distinct.size()) / static_cast<double>(count);
}

double repetition_penalty(std::string_view prompt_text, int n) {
    const double f = repeated_ngram_fraction(tokenize(prompt_text), n);
    return f == 0.0 ? 0.0 : -f;
}

RewardBreakdown total_reward(const RewardComponents& c, const RewardWeights& w) {
    w.validate();
    if (c.critic < 0.0 || c.critic > 1.0 || (c.phrase != 0.0 && c.phrase != 1.0) || c.rep < -1.0 ||
        c.rep > 0.0) {
        throw std::invalid_argument("reward component out of range");
    }
    RewardBreakdown b;
    b.r_critic = c.critic;
    b.r_phrase = c.phrase;
    b.r_rep = c.rep;
    b.total = w.critic * c.critic + w.phrase * c.phrase + w.rep * c.rep;
    return b;
}

RewardConfig RewardConfig::from_json(const nlohmann::json& doc) {
    RewardConfig cfg;
    if (doc.contains("weights")) {
        const auto& w = doc.at("weights");
        cfg.weights.critic = w.value("critic", cfg.weights.critic);
        cfg.weights.phrase = w.value("phrase", cfg.weights.phrase);
        cfg.weights.rep = w.value("rep", cfg.weights.rep);
        cfg.weights.validate();
    }
    if (doc.contains("blacklist")) {
        cfg.blacklist = PhraseBlacklist(doc.at("blacklist").get<std::vector<std::string>>());
    }
    cfg.ngram = doc.value("ngram", cfg.ngram);
    if (cfg.ngram < 1) {
        throw std::invalid_argument("ngram must be >= 1");
    }
    return cfg;
}

RewardBreakdown score_prompt(std::string_view prompt_text, std::string_view critic_reply,
                             const RewardConfig& config) {
    RewardComponents c;
    try {
        c.critic = critic_reward(parse_critic_reply(critic_reply));
    } catch (const CriticParseError&) {
        c.critic = 0.0;
    }
    c.phrase = phrase_exclusion_reward(prompt_text, config.blacklist);
    c.rep = repetition_penalty(prompt_text, config.ngram);
    return total_reward(c, config.weights);
}

nlohmann::json breakdown_to_json(const RewardBreakdown& b) {
    return {{"r_critic", b.r_critic}, {"r_phrase", b.r_phrase}, {"r_rep", b.r_rep}, {"total", b.total}};
}

}  // namespace coz
