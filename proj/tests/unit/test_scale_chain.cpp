#include "coz/scale_chain.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <fstream>
#include <mutex>

using namespace coz;

namespace {

// Bicubic zoom that records requests and fails from a given step on.
class ScriptedBackend final : public SrBackend {
public:
    explicit ScriptedBackend(int fail_from = 0) : fail_from_(fail_from) {}
    std::string id() const override { return "scripted"; }
    SRResponse upscale(const SRRequest& req) const override {
        std::lock_guard lock(mutex_);
        requests.push_back(req);
        if (fail_from_ > 0 && static_cast<int>(requests.size()) >= fail_from_) {
            throw BackendError(FailureKind::timeout, req.request_id, "scripted timeout");
        }
        return {zoom_window(req.image, req.scale_hint, ResizeKernel::bicubic), {{"n", std::to_string(requests.size())}}};
    }
    mutable std::vector<SRRequest> requests;

private:
    int fail_from_;
    mutable std::mutex mutex_;
};

class ScriptedPrompts final : public PromptSource {
public:
    explicit ScriptedPrompts(int fail_step = 0) : fail_step_(fail_step) {}
    PromptMode mode() const override { return PromptMode::vlm; }
    Prompt extract(const PromptContext& ctx) const override {
        contexts.push_back(ctx);
        if (ctx.step == fail_step_) throw PromptError(FailureKind::empty_output, "p", "nothing");
        Prompt p;
        p.text = "words " + std::to_string(ctx.step);
        p.tokens = tokenize(p.text);
        p.mode = PromptMode::vlm;
        for (const auto& c : ctx.images) p.conditioning_indices.push_back(c.index);
        return p;
    }
    mutable std::vector<PromptContext> contexts;

private:
    int fail_step_;
};

ZoomConfig small_config(PromptMode mode = PromptMode::null) {
    ZoomConfig c;
    c.base_resolution = 64;
    c.recursions = 3;
    c.prompt_mode = mode;
    c.seed = 40;
    return c;
}

}  // namespace

TEST_CASE("config validation") {
    ZoomConfig c;
    CHECK_NOTHROW(c.validate());
    c.scale = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.recursions = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.base_resolution = 510;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("chain passes the previous state, factor, ids and seeds to the backend") {
    const Image img = testing::random_image(64, 1);
    const ScriptedBackend backend;
    const NullPromptSource null_src;
    const auto t = run_chain(make_initial_state(img), small_config(), backend, null_src, "img7");
    REQUIRE(t.complete());
    REQUIRE(backend.requests.size() == 3);
    for (int i = 1; i <= 3; ++i) {
        const auto& req = backend.requests[static_cast<std::size_t>(i) - 1];
        CHECK(req.image == t.states[static_cast<std::size_t>(i) - 1].image);
        CHECK(req.scale_hint == 4);
        CHECK(req.request_id == "img7:step" + std::to_string(i));
        CHECK(req.seed == 40u + static_cast<unsigned>(i));
        CHECK(req.prompt_text.empty());
    }
    CHECK(t.backend_meta.size() == 3);
    CHECK(t.backend_meta[2].at("n") == "3");
    CHECK(t.step_seconds.size() == 3);
    CHECK(transcript_violations(t).empty());
}

TEST_CASE("prompts see x_{i-2} and x_{i-1} in order") {
    const Image img = testing::random_image(64, 2);
    const ScriptedBackend backend;
    const ScriptedPrompts prompts;
    const auto t = run_chain(make_initial_state(img), small_config(PromptMode::vlm), backend, prompts, "a");
    REQUIRE(prompts.contexts.size() == 3);
    CHECK(prompts.contexts[0].images.size() == 1);
    CHECK(prompts.contexts[0].images[0].index == 0);
    CHECK(prompts.contexts[2].images.size() == 2);
    CHECK(prompts.contexts[2].images[0].index == 1);
    CHECK(prompts.contexts[2].images[1].index == 2);
    CHECK(prompts.contexts[1].seed == 42u);
    CHECK(t.prompts[1].text == "words 2");
    CHECK(backend.requests[1].prompt_text == "words 2");
    CHECK(t.prompts[2].conditioning_indices == std::vector<int>{1, 2});
    CHECK(transcript_violations(t).empty());
}

TEST_CASE("backend failure truncates the transcript") {
    const Image img = testing::random_image(64, 3);
    const ScriptedBackend backend(2);
    const NullPromptSource null_src;
    const auto t = run_chain(make_initial_state(img), small_config(), backend, null_src, "b");
    CHECK_FALSE(t.complete());
    CHECK(t.states.size() == 2);
    REQUIRE(t.errors.size() == 1);
    CHECK(t.errors[0].step == 2);
    CHECK(t.errors[0].stage == ChainStage::sr);
    CHECK(t.errors[0].kind == "timeout");
    CHECK(t.errors[0].request_id == "b:step2");
    CHECK(transcript_violations(t).empty());
}

TEST_CASE("prompt failure falls back to the null prompt") {
    const Image img = testing::random_image(64, 4);
    const ScriptedBackend backend;
    const ScriptedPrompts prompts(2);
    const auto t = run_chain(make_initial_state(img), small_config(PromptMode::vlm), backend, prompts, "c");
    CHECK(t.complete());
    REQUIRE(t.errors.size() == 1);
    CHECK(t.errors[0].stage == ChainStage::prompt);
    CHECK(t.errors[0].fell_back_to_null_prompt);
    CHECK(t.errors[0].kind == "empty_output");
    CHECK(t.prompts[1].mode == PromptMode::null);
    CHECK(backend.requests[1].prompt_text.empty());
}

TEST_CASE("prompt source must match the configured mode") {
    const Image img = testing::random_image(64, 5);
    const ScriptedBackend backend;
    const NullPromptSource null_src;
    CHECK_THROWS_AS(run_chain(make_initial_state(img), small_config(PromptMode::vlm), backend, null_src), ConfigError);
    CHECK_THROWS_AS(run_chain(make_initial_state(testing::random_image(32, 1)), small_config(), backend, null_src),
                    ConfigError);
}

TEST_CASE("run_direct applies one backend call at the composite factor") {
    const Image img = testing::random_image(64, 6);
    const ScriptedBackend backend;
    const auto s = run_direct(make_initial_state(img), 16, 4, backend, "d", 9);
    REQUIRE(backend.requests.size() == 1);
    CHECK(backend.requests[0].scale_hint == 16);
    CHECK(s.index == 2);
    CHECK(s.cumulative_factor == Rational(16));
    CHECK(s.source_rect.width == Rational(4));
    CHECK(s.source_rect.x == Rational(30));
    CHECK(s.image == zoom_window(img, 16, ResizeKernel::bicubic));
    CHECK_THROWS_AS(run_direct(make_initial_state(img), 8, 4, backend), ConfigError);
    CHECK_THROWS_AS(run_direct(make_initial_state(img), 256, 4, backend), ConfigError);
}

TEST_CASE("power_of") {
    CHECK(power_of(256, 4) == 4);
    CHECK(power_of(4, 4) == 1);
    CHECK(power_of(1, 4) == -1);
    CHECK(power_of(32, 4) == -1);
    CHECK(power_of(27, 3) == 3);
}

TEST_CASE("transcript json round trip and files") {
    const Image img = testing::random_image(64, 7);
    const ScriptedBackend backend;
    const ScriptedPrompts prompts(3);
    const auto t = run_chain(make_initial_state(img), small_config(PromptMode::vlm), backend, prompts, "rt");
    const auto doc = transcript_to_json(t);
    const auto back = transcript_from_json(nlohmann::json::parse(doc.dump()));
    CHECK(back.image_id == "rt");
    CHECK(back.config.prompt_mode == PromptMode::vlm);
    CHECK(back.config.seed == 40u);
    REQUIRE(back.states.size() == t.states.size());
    for (std::size_t i = 0; i < t.states.size(); ++i) {
        CHECK(back.states[i].source_rect == t.states[i].source_rect);
        CHECK(back.states[i].cumulative_factor == t.states[i].cumulative_factor);
    }
    CHECK(back.prompts[0].text == t.prompts[0].text);
    CHECK(back.errors.size() == 1);
    CHECK(back.errors[0].fell_back_to_null_prompt);
    CHECK(back.backend_meta == t.backend_meta);
    CHECK(transcript_to_json(back) == doc);

    CHECK(state_png_name("rt", t.states[2]) == "rt_step2_x16.png");
    const auto dir = testing::fresh_dir("transcript");
    write_transcript(t, dir, true);
    CHECK(std::filesystem::exists(dir / "rt.json"));
    CHECK(read_image(dir / "rt_step3_x64.png") == quantize8(t.states[3].image));
}

TEST_CASE("violations are reported") {
    const Image img = testing::random_image(64, 8);
    const ScriptedBackend backend;
    const NullPromptSource null_src;
    auto t = run_chain(make_initial_state(img), small_config(), backend, null_src);
    t.states[2].cumulative_factor = Rational(15);
    t.states[3].source_rect.x = Rational(1000);
    CHECK(transcript_violations(t).size() >= 2);
}
