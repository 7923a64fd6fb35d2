#include "coz/scale_chain.hpp"

#include <fstream>

namespace coz {

namespace {

using nlohmann::json;

json rect_to_json(const SourceRect& r) {
    return {{"x", r.x.to_string()},
            {"y", r.y.to_string()},
            {"width", r.width.to_string()},
            {"height", r.height.to_string()}};
}

SourceRect rect_from_json(const json& j) {
    return {Rational::parse(j.at("x").get<std::string>()), Rational::parse(j.at("y").get<std::string>()),
            Rational::parse(j.at("width").get<std::string>()),
            Rational::parse(j.at("height").get<std::string>())};
}

json config_to_json(const ZoomConfig& c) {
    return {{"scale", c.scale},
            {"recursions", c.recursions},
            {"base_resolution", c.base_resolution},
            {"prompt_mode", std::string(prompt_mode_name(c.prompt_mode))},
            {"backend_id", c.backend_id},
            {"seed", c.seed}};
}

ZoomConfig config_from_json(const json& j) {
    ZoomConfig c;
    c.scale = j.at("scale").get<int>();
    c.recursions = j.at("recursions").get<int>();
    c.base_resolution = j.at("base_resolution").get<int>();
    c.prompt_mode = parse_prompt_mode(j.at("prompt_mode").get<std::string>());
    c.backend_id = j.at("backend_id").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace

json transcript_to_json(const ChainTranscript& t) {
    json states = json::array();
    for (const ScaleState& s : t.states) {
        states.push_back({{"index", s.index},
                          {"cumulative_factor", s.cumulative_factor.to_string()},
                          {"source_rect", rect_to_json(s.source_rect)},
                          {"png", state_png_name(t.image_id, s)}});
    }
    json prompts = json::array();
    for (std::size_t k = 0; k < t.prompts.size(); ++k) {
        const Prompt& p = t.prompts[k];
        prompts.push_back({{"step", k + 1},
                           {"mode", std::string(prompt_mode_name(p.mode))},
                           {"text", p.text},
                           {"conditioning_indices", p.conditioning_indices}});
    }
    json errors = json::array();
    for (const StepError& e : t.errors) {
        errors.push_back({{"step", e.step},
                          {"stage", e.stage == ChainStage::sr ? "sr" : "prompt"},
                          {"kind", e.kind},
                          {"request_id", e.request_id},
                          {"message", e.message},
                          {"fell_back_to_null_prompt", e.fell_back_to_null_prompt}});
    }
    json meta = json::array();
    for (const auto& m : t.backend_meta) {
        meta.push_back(m);
    }
    return {{"image_id", t.image_id},
            {"backend_id", t.backend_id},
            {"config", config_to_json(t.config)},
            {"complete", t.complete()},
            {"states", states},
            {"prompts", prompts},
            {"step_seconds", t.step_seconds},
            {"backend_meta", meta},
            {"errors", errors}};
}

ChainTranscript transcript_from_json(const json& doc) {
    ChainTranscript t;
    t.image_id = doc.at("image_id").get<std::string>();
    t.backend_id = doc.at("backend_id").get<std::string>();
    t.config = config_from_json(doc.at("config"));
    for (const json& s : doc.at("states")) {
        ScaleState st;
        st.index = s.at("index").get<int>();
        st.cumulative_factor = Rational::parse(s.at("cumulative_factor").get<std::string>());
        st.source_rect = rect_from_json(s.at("source_rect"));
        t.states.push_back(std::move(st));
    }
    for (const json& p : doc.at("prompts")) {
        Prompt pr;
        pr.mode = parse_prompt_mode(p.at("mode").get<std::string>());
        pr.text = p.at("text").get<std::string>();
        pr.tokens = tokenize(pr.text);
        pr.conditioning_indices = p.at("conditioning_indices").get<std::vector<int>>();
        t.prompts.push_back(std::move(pr));
    }
    t.step_seconds = doc.at("step_seconds").get<std::vector<double>>();
    for (const json& m : doc.at("backend_meta")) {
        t.backend_meta.push_back(m.get<std::map<std::string, std::string>>());
    }
    for (const json& e : doc.at("errors")) {
        StepError err;
        err.step = e.at("step").get<int>();
        err.stage = e.at("stage").get<std::string>() == "sr" ? ChainStage::sr : ChainStage::prompt;
        err.kind = e.at("kind").get<std::string>();
        err.request_id = e.at("request_id").get<std::string>();
        err.message = e.at("message").get<std::string>();
        err.fell_back_to_null_prompt = e.at("fell_back_to_null_prompt").get<bool>();
        t.errors.push_back(std::move(err));
    }
    return t;
}

void write_transcript(const ChainTranscript& t, const std::filesystem::path& dir, bool write_rasters) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / (t.image_id + ".json"));
    out << transcript_to_json(t).dump(2) << "\n";
    if (!out) {
        throw std::runtime_error("cannot write transcript for " + t.image_id);
    }
    if (write_rasters) {
        for (const ScaleState& s : t.states) {
            if (!s.image.empty()) {
                write_png(s.image, dir / state_png_name(t.image_id, s));
            }
        }
    }
}

}  // namespace coz
