#include "coz/prompt_extraction.hpp"
#include "coz/rewards.hpp"

#include <doctest.h>

#include <random>

using namespace coz;

namespace {

// Distinct-count by pairwise comparison against all earlier windows.
double brute_repeated_fraction(const std::vector<std::string>& t, int n) {
    if (t.size() < static_cast<std::size_t>(n)) return 0.0;
    const std::size_t count = t.size() - n + 1;
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < count; ++i) {
        bool seen = false;
        for (std::size_t j = 0; j < i && !seen; ++j) {
            bool same = true;
            for (int k = 0; k < n; ++k) same = same && t[i + k] == t[j + k];
            seen = same;
        }
        distinct += seen ? 0 : 1;
    }
    return 1.0 - static_cast<double>(distinct) / static_cast<double>(count);
}

const char* kRepetitive =
    "fur texture orange background animal fur close-up pattern "
    "texture orange fur texture orange fur background orange fur "
    "texture orange fur background orange fur texture orange fur "
    "texture orange fur texture orange fur texture orange fur texture "
    "orange fur texture orange fur texture orange fur texture orange "
    "fur texture orange fur texture orange fur texture orange fur ...";

const char* kViewpoint =
    "The second image shows a close-up view of a surface with a textured pattern. The texture appears to be "
    "a combination of smooth and slightly raised areas, giving it a somewhat wavy or ripple-like appearance. "
    "The color gradient ranges from a lighter shade at the top to a darker shade at the bottom, creating a "
    "sense of depth and dimension.";

}  // namespace

TEST_CASE("phrase exclusion") {
    const auto bl = PhraseBlacklist::defaults();
    CHECK(phrase_exclusion_reward(kViewpoint, bl) == 0.0);
    CHECK(phrase_exclusion_reward("fur", bl) == 1.0);
    CHECK(phrase_exclusion_reward("feathers", bl) == 1.0);
    CHECK(phrase_exclusion_reward("FIRST IMAGE shows", bl) == 0.0);
    CHECK(phrase_exclusion_reward("a Zoom-In of leaves", bl) == 0.0);
    CHECK(phrase_exclusion_reward("imagery of the sea", bl) == 1.0);
    CHECK_THROWS(PhraseBlacklist({}));
    CHECK_THROWS(PhraseBlacklist({""}));
}

TEST_CASE("repetition penalty") {
    CHECK(repetition_penalty("fur") == 0.0);
    CHECK_FALSE(std::signbit(repetition_penalty("fur")));
    CHECK(repetition_penalty("a b c a b c") == doctest::Approx(-0.25));
    CHECK(repetition_penalty("x x x x x", 1) == doctest::Approx(-0.8));
    CHECK(repetition_penalty(kRepetitive, 3) <= -0.5);
    CHECK(repetition_penalty("fur texture orange background animal fur close-up pattern", 3) == 0.0);
    CHECK_THROWS(repeated_ngram_fraction({"a"}, 0));

    std::mt19937_64 rng(3);
    const std::vector<std::string> vocab = {"a", "b", "c", "fur", "Fur"};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> toks(rng() % 20);
        for (auto& t : toks) t = vocab[rng() % vocab.size()];
        const int n = 1 + static_cast<int>(rng() % 4);
        CHECK(repeated_ngram_fraction(toks, n) == brute_repeated_fraction(toks, n));
    }
}

TEST_CASE("critic reply parsing") {
    CHECK(parse_critic_reply("85") == 85.0);
    CHECK(parse_critic_reply("Rating (0-100): 92/100") == 92.0);
    CHECK(parse_critic_reply("I would say 73.5 overall") == 73.5);
    CHECK(parse_critic_reply("150") == 100.0);
    CHECK(parse_critic_reply("score: 7.") == 7.0);
    CHECK_THROWS_AS(parse_critic_reply("excellent"), CriticParseError);
    CHECK(critic_reward(85) == doctest::Approx(0.85));
    CHECK(critic_reward(-3) == 0.0);
    CHECK(critic_reward(250) == 1.0);
}

TEST_CASE("total reward") {
    const RewardWeights w;
    const auto b = total_reward({0.8, 1.0, -0.25}, w);
    CHECK(b.total == doctest::Approx(0.8 + 0.5 - 0.125));
    CHECK(total_reward({0, 0, -1}, w).total == doctest::Approx(-0.5));
    CHECK(total_reward({1, 1, 0}, w).total == doctest::Approx(1.5));
    CHECK_THROWS(total_reward({1.1, 1, 0}, w));
    CHECK_THROWS(total_reward({0.5, 0.5, 0}, w));
    CHECK_THROWS(total_reward({0.5, 1, 0.1}, w));
    CHECK_THROWS(total_reward({0.5, 1, 0}, RewardWeights{-1, 0, 0}));
}

TEST_CASE("score_prompt and config") {
    const RewardConfig cfg;
    const auto b = score_prompt("fur", "Rating (0-100): 90", cfg);
    CHECK(b.r_critic == doctest::Approx(0.9));
    CHECK(b.r_phrase == 1.0);
    CHECK(b.r_rep == 0.0);
    CHECK(b.total == doctest::Approx(1.4));
    CHECK(score_prompt("fur", "no idea", cfg).r_critic == 0.0);

    const auto custom = RewardConfig::from_json(
        nlohmann::json::parse(R"({"weights": {"critic": 2.0}, "blacklist": ["fur"], "ngram": 2})"));
    CHECK(custom.weights.critic == 2.0);
    CHECK(custom.weights.phrase == 0.5);
    CHECK(custom.ngram == 2);
    CHECK(score_prompt("fur", "50", custom).r_phrase == 0.0);
    CHECK_THROWS(RewardConfig::from_json(nlohmann::json::parse(R"({"ngram": 0})")));
    const auto j = breakdown_to_json(b);
    CHECK(j["total"].get<double>() == doctest::Approx(1.4));
}
