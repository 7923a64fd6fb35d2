// coz: command-line front end for the zoom chain engine.

#include "coz/eval_harness.hpp"
#include "coz/grpo.hpp"
#include "coz/montage.hpp"
#include "coz/niqe.hpp"
#include "coz/scale_chain.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw coz::ConfigError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw coz::ConfigError(path + ": " + e.what());
    }
}

int report_protocol(const coz::RunSpec& spec, const coz::ProtocolResult& result) {
    for (const auto& r : result.ingest_rejects) fmt::print(stderr, "skipped {}\n", r);
    for (const auto& img : result.images) {
        if (img.upscaled) fmt::print(stderr, "{}: upscaled-ingest\n", img.image_id);
        for (const auto& run : img.runs) {
            for (const auto& e : run.errors) fmt::print(stderr, "error {}\n", e);
        }
    }
    const auto rep = coz::aggregate(result, spec.zoom.scale, spec.methods, spec.metrics);
    if (spec.output_dir.empty()) {
        fmt::print("{}", coz::report_csv(rep));
    } else {
        fmt::print("{}", coz::report_markdown(rep));
        fmt::print(stderr, "wrote {}\n", (spec.output_dir / "report.csv").string());
    }
    const int failures = result.failure_count();
    if (failures > 0) {
        fmt::print(stderr, "{} failure(s) substituted\n", failures);
        return kExitPartial;
    }
    return kExitOk;
}

int env_lookup_run(coz::RunSpec spec) {
    spec.apply_env_overrides([](const char* name) { return std::getenv(name); });
    return report_protocol(spec, coz::run_protocol(spec));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recursive zoom super-resolution engine"};
    app.require_subcommand(1);

    // run
    auto* run_cmd = app.add_subcommand("run", "Execute an evaluation described by a JSON run config");
    std::string config_path;
    run_cmd->add_option("--config", config_path, "Run config (JSON)")->required();

    // chain
    auto* chain_cmd = app.add_subcommand("chain", "Zoom into one image");
    std::string chain_input, chain_out = "coz_out", chain_id, chain_mode = "null", chain_backend = "bicubic";
    std::string sr_url, vlm_url, tags_file;
    int scale = 4, recursions = 4, base = 512, timeout_ms = 120000;
    std::uint64_t seed = 0;
    bool no_rasters = false;
    chain_cmd->add_option("--input", chain_input, "Input image")->required();
    chain_cmd->add_option("--output-dir", chain_out, "Directory for transcript and states");
    chain_cmd->add_option("--image-id", chain_id, "Identifier (default: file stem)");
    chain_cmd->add_option("--scale", scale, "Per-step scale factor");
    chain_cmd->add_option("--recursions", recursions, "Number of zoom steps");
    chain_cmd->add_option("--base-resolution", base, "Working resolution");
    chain_cmd->add_option("--prompt-mode", chain_mode, "null, tags or vlm");
    chain_cmd->add_option("--backend", chain_backend, "nearest, bicubic or remote");
    chain_cmd->add_option("--sr-url", sr_url, "SR service url");
    chain_cmd->add_option("--vlm-url", vlm_url, "Prompt service url");
    chain_cmd->add_option("--tags-file", tags_file, "JSON tags by image id");
    chain_cmd->add_option("--seed", seed, "Seed");
    chain_cmd->add_option("--timeout-ms", timeout_ms, "Per-request timeout");
    chain_cmd->add_flag("--no-rasters", no_rasters, "Skip writing state PNGs");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Run the evaluation protocol over a directory");
    std::string eval_in, eval_out, methods = "nn_interp,direct_sr,coz_null", metrics = "niqe", niqe_model;
    std::string eval_backend = "bicubic", metric_url;
    int parallelism = 1;
    bool write_transcripts = false;
    eval_cmd->add_option("--input-dir", eval_in, "Image directory")->required();
    eval_cmd->add_option("--output-dir", eval_out, "Report directory");
    eval_cmd->add_option("--methods", methods, "Comma-separated methods");
    eval_cmd->add_option("--metrics", metrics, "Comma-separated metrics");
    eval_cmd->add_option("--niqe-model", niqe_model, "NIQE model file");
    eval_cmd->add_option("--scale", scale, "Per-step scale factor");
    eval_cmd->add_option("--recursions", recursions, "Number of zoom steps");
    eval_cmd->add_option("--base-resolution", base, "Working resolution");
    eval_cmd->add_option("--backend", eval_backend, "nearest, bicubic or remote");
    eval_cmd->add_option("--sr-url", sr_url, "SR service url");
    eval_cmd->add_option("--vlm-url", vlm_url, "Prompt service url");
    eval_cmd->add_option("--metric-url", metric_url, "Metric service url");
    eval_cmd->add_option("--tags-file", tags_file, "JSON tags by image id");
    eval_cmd->add_option("--seed", seed, "Seed");
    eval_cmd->add_option("--parallelism", parallelism, "Images processed concurrently");
    eval_cmd->add_option("--timeout-ms", timeout_ms, "Per-request timeout");
    eval_cmd->add_flag("--write-transcripts", write_transcripts, "Write chain transcripts");

    // fit-niqe
    auto* fit_cmd = app.add_subcommand("fit-niqe", "Fit a NIQE model on a pristine corpus");
    std::string corpus, model_out = "niqe_model.bin";
    coz::NiqeOptions niqe_opts;
    fit_cmd->add_option("--corpus", corpus, "Pristine image directory")->required();
    fit_cmd->add_option("--output", model_out, "Model file");
    fit_cmd->add_option("--patch-size", niqe_opts.patch_size, "Patch side");
    fit_cmd->add_option("--sharpness", niqe_opts.sharpness_fraction, "Sharp-patch threshold fraction");

    // grpo-toy
    auto* grpo_cmd = app.add_subcommand("grpo-toy", "Train a softmax prompt policy on a candidate table");
    int vocab = 8, iters = 300, group = 2;
    double lr = 0.1, kl = 0.0;
    bool normalize = false;
    std::string candidates_file, curve_out = "grpo_curve.csv", reward_cfg;
    grpo_cmd->add_option("--vocab", vocab, "Synthetic candidate count (ignored with --candidates)");
    grpo_cmd->add_option("--candidates", candidates_file, "JSON [{\"prompt\": str, \"critic\": 0..100}]");
    grpo_cmd->add_option("--iters", iters, "Iterations");
    grpo_cmd->add_option("--lr", lr, "Learning rate");
    grpo_cmd->add_option("--group-size", group, "Samples per group");
    grpo_cmd->add_option("--kl", kl, "KL coefficient towards the initial policy");
    grpo_cmd->add_flag("--normalize-std", normalize, "Divide advantages by group std");
    grpo_cmd->add_option("--reward-config", reward_cfg, "JSON reward weights/blacklist");
    grpo_cmd->add_option("--seed", seed, "Seed");
    grpo_cmd->add_option("--output", curve_out, "Curve CSV");

    // montage
    auto* montage_cmd = app.add_subcommand("montage", "Render a zoom strip from a written transcript");
    std::string transcript_path, montage_out = "montage.png";
    int panel = 256;
    montage_cmd->add_option("--transcript", transcript_path, "Transcript JSON")->required();
    montage_cmd->add_option("--output", montage_out, "PNG file");
    montage_cmd->add_option("--panel-size", panel, "Panel side in pixels");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            return env_lookup_run(coz::RunSpec::from_json(read_json_file(config_path)));
        }

        if (*eval_cmd) {
            coz::RunSpec spec;
            spec.input_dir = eval_in;
            spec.output_dir = eval_out;
            spec.zoom.scale = scale;
            spec.zoom.recursions = recursions;
            spec.zoom.base_resolution = base;
            spec.zoom.backend_id = eval_backend;
            spec.zoom.seed = seed;
            spec.seed = seed;
            for (const auto& m : split_list(methods)) spec.methods.push_back(coz::parse_method(m));
            spec.metrics = split_list(metrics);
            spec.niqe_model = niqe_model;
            spec.tags_file = tags_file;
            spec.parallelism = parallelism;
            spec.timeout_ms = timeout_ms;
            spec.write_transcripts = write_transcripts;
            if (!sr_url.empty()) spec.endpoints["sr"] = sr_url;
            if (!vlm_url.empty()) spec.endpoints["vlm"] = vlm_url;
            if (!metric_url.empty()) spec.endpoints["metric"] = metric_url;
            return env_lookup_run(std::move(spec));
        }

        if (*chain_cmd) {
            coz::RunSpec env;
            if (!sr_url.empty()) env.endpoints["sr"] = sr_url;
            if (!vlm_url.empty()) env.endpoints["vlm"] = vlm_url;
            env.timeout_ms = timeout_ms;
            env.apply_env_overrides([](const char* name) { return std::getenv(name); });

            coz::ZoomConfig cfg;
            cfg.scale = scale;
            cfg.recursions = recursions;
            cfg.base_resolution = base;
            cfg.backend_id = chain_backend;
            cfg.seed = seed;
            try {
                cfg.prompt_mode = coz::parse_prompt_mode(chain_mode);
            } catch (const std::invalid_argument& e) {
                throw coz::ConfigError(e.what());
            }
            cfg.validate();

            std::unique_ptr<coz::PromptSource> prompter;
            switch (cfg.prompt_mode) {
                case coz::PromptMode::null: prompter = std::make_unique<coz::NullPromptSource>(); break;
                case coz::PromptMode::tags:
                    if (tags_file.empty()) throw coz::ConfigError("tags mode needs --tags-file");
                    prompter = std::make_unique<coz::TagPromptSource>(coz::TagPromptSource::from_file(tags_file));
                    break;
                case coz::PromptMode::vlm: {
                    auto ep = env.endpoint("vlm");
                    if (!ep) throw coz::ConfigError("vlm mode needs --vlm-url or COZ_VLM_URL");
                    coz::Decoding d;
                    d.seed = seed;
                    prompter = std::make_unique<coz::VlmPromptSource>(coz::VlmClient(*ep), d);
                    break;
                }
            }
            if (cfg.backend_id == "remote" && !env.endpoint("sr")) {
                throw coz::ConfigError("remote backend needs --sr-url or COZ_SR_URL");
            }
            std::unique_ptr<coz::SrBackend> backend;
            try {
                backend = coz::make_backend(cfg.backend_id, env.endpoint("sr").value_or(coz::Endpoint{}));
            } catch (const std::invalid_argument& e) {
                throw coz::ConfigError(e.what());
            }

            const std::filesystem::path input(chain_input);
            const std::string id = chain_id.empty() ? input.stem().string() : chain_id;
            const auto prepared = coz::prepare_image(coz::read_image(input), id, base);
            const auto t = coz::run_chain(coz::make_initial_state(prepared.image), cfg, *backend, *prompter, id);
            coz::write_transcript(t, chain_out, !no_rasters);
            for (const auto& s : t.states) {
                fmt::print("step {} x{} {}\n", s.index, s.cumulative_factor.to_string(),
                           t.prompts.empty() || s.index == 0 ? std::string{}
                                                             : t.prompts[static_cast<std::size_t>(s.index - 1)].text);
            }
            for (const auto& e : t.errors) {
                fmt::print(stderr, "step {} {} error ({}): {}\n", e.step, e.stage == coz::ChainStage::sr ? "sr" : "prompt",
                           e.kind, e.message);
            }
            return t.errors.empty() ? kExitOk : kExitPartial;
        }

        if (*fit_cmd) {
            const auto fit = coz::fit_niqe_model(std::filesystem::path(corpus), niqe_opts);
            coz::write_niqe_model(fit, model_out);
            fmt::print("fitted {} patches from {} images -> {}\n", fit.patches, fit.images.size(), model_out);
            return kExitOk;
        }

        if (*grpo_cmd) {
            std::vector<std::string> prompts;
            std::map<std::string, double> critic;
            if (!candidates_file.empty()) {
                for (const auto& c : read_json_file(candidates_file)) {
                    prompts.push_back(c.at("prompt").get<std::string>());
                    critic[prompts.back()] = c.at("critic").get<double>();
                }
            } else {
                for (int i = 0; i < vocab; ++i) {
                    prompts.push_back(fmt::format("candidate {}", i));
                    critic[prompts.back()] = 100.0 * (i + 1) / vocab;
                }
            }
            coz::RewardConfig rc;
            if (!reward_cfg.empty()) rc = coz::RewardConfig::from_json(read_json_file(reward_cfg));
            coz::ToyPromptPolicy policy(prompts, lr);
            policy.freeze_reference();
            coz::GrpoOptions opts;
            opts.group_size = group;
            opts.normalize_std = normalize;
            opts.kl_coef = kl;
            const auto curve = coz::train_toy(policy, coz::make_table_scorer(critic, rc), iters, opts, seed);
            coz::write_curve_csv(curve, curve_out);
            const auto p = policy.probabilities();
            for (std::size_t i = 0; i < prompts.size(); ++i) fmt::print("{:.6f}  {}\n", p[i], prompts[i]);
            fmt::print("expected reward {:.6f} -> {:.6f}\n", curve.front().expected_reward,
                       curve.back().expected_reward);
            return kExitOk;
        }

        if (*montage_cmd) {
            const std::filesystem::path tp(transcript_path);
            auto t = coz::transcript_from_json(read_json_file(transcript_path));
            coz::load_transcript_rasters(t, tp.parent_path());
            coz::MontageOptions mo;
            mo.panel_size = panel;
            coz::write_png(coz::render_montage(t, mo), montage_out);
            fmt::print("wrote {}\n", montage_out);
            return kExitOk;
        }
    } catch (const coz::ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitConfig;
    }
    return kExitOk;
}
