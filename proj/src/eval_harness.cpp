#include "coz/eval_harness.hpp"

#include "coz/resample.hpp"
#include "coz/sr_backends.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

namespace coz {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 5> kMethods = {{
    {Method::nn_interp, "nn_interp"},
    {Method::direct_sr, "direct_sr"},
    {Method::coz_null, "coz_null"},
    {Method::coz_dape_tags, "coz_dape_tags"},
    {Method::coz_vlm, "coz_vlm"},
}};

constexpr std::array<std::pair<std::string_view, const char*>, 4> kEnvRoles = {{
    {"sr", "COZ_SR_URL"},
    {"vlm", "COZ_VLM_URL"},
    {"critic", "COZ_CRITIC_URL"},
    {"metric", "COZ_METRIC_URL"},
}};

bool uses(const RunSpec& spec, Method m) {
    return std::find(spec.methods.begin(), spec.methods.end(), m) != spec.methods.end();
}

bool uses_configured_backend(const RunSpec& spec) {
    return uses(spec, Method::direct_sr) || uses(spec, Method::coz_null) ||
           uses(spec, Method::coz_dape_tags) || uses(spec, Method::coz_vlm);
}

// Everything a run needs, built up front so config errors surface before work.
struct Resources {
    std::unique_ptr<SrBackend> backend;
    NearestBackend nearest;
    NullPromptSource null_prompts;
    std::optional<TagPromptSource> tag_prompts;
    std::optional<VlmPromptSource> vlm_prompts;
    std::optional<MetricEvaluator> evaluator;
};

Resources build_resources(const RunSpec& spec) {
    spec.validate();
    Resources r;
    if (uses_configured_backend(spec)) {
        Endpoint sr = spec.endpoint("sr").value_or(Endpoint{});
        r.backend = make_backend(spec.zoom.backend_id, sr);
    }
    if (uses(spec, Method::coz_dape_tags)) {
        try {
            r.tag_prompts.emplace(TagPromptSource::from_file(spec.tags_file.string()));
        } catch (const std::exception& e) {
            throw ConfigError(fmt::format("tags file {}: {}", spec.tags_file.string(), e.what()));
        }
    }
    if (uses(spec, Method::coz_vlm)) {
        Decoding d;
        d.seed = spec.seed;
        r.vlm_prompts.emplace(VlmClient(*spec.endpoint("vlm")), d);
    }
    std::optional<NiqeModel> model;
    if (std::find(spec.metrics.begin(), spec.metrics.end(), "niqe") != spec.metrics.end()) {
        try {
            model = read_niqe_model(spec.niqe_model);
        } catch (const std::exception& e) {
            throw ConfigError(fmt::format("NIQE model {}: {}", spec.niqe_model.string(), e.what()));
        }
    }
    r.evaluator.emplace(std::move(model), spec.endpoint("metric"));
    r.evaluator->check_available(spec.metrics);
    return r;
}

const PromptSource& prompter_for(const Resources& r, Method m) {
    switch (m) {
        case Method::coz_dape_tags: return *r.tag_prompts;
        case Method::coz_vlm: return *r.vlm_prompts;
        default: return r.null_prompts;
    }
}

PromptMode mode_for(Method m) {
    switch (m) {
        case Method::coz_dape_tags: return PromptMode::tags;
        case Method::coz_vlm: return PromptMode::vlm;
        default: return PromptMode::null;
    }
}

MetricReport failed_level(const std::vector<std::string>& metrics, const std::string& reason) {
    MetricReport rep;
    for (const auto& m : metrics) rep.cells[m] = MetricEvaluator::failure_cell(m, reason);
    return rep;
}

MethodRun run_method(const RunSpec& spec, const Resources& r, Method method, const PreparedImage& img) {
    MethodRun run;
    run.method = method;
    const int n = spec.zoom.recursions;
    const std::string base_id = fmt::format("{}:{}", img.id, method_name(method));
    const ScaleState x0 = make_initial_state(img.image);

    if (method == Method::nn_interp || method == Method::direct_sr) {
        const SrBackend& backend = method == Method::nn_interp ? static_cast<const SrBackend&>(r.nearest)
                                                               : *r.backend;
        std::int64_t factor = 1;
        for (int k = 1; k <= n; ++k) {
            factor *= spec.zoom.scale;
            const std::string rid = fmt::format("{}:x{}", base_id, factor);
            try {
                const ScaleState s = run_direct(x0, factor, spec.zoom.scale, backend, rid, spec.seed);
                run.levels.push_back(r.evaluator->evaluate_all(s.image, spec.metrics, rid));
            } catch (const std::exception& e) {
                run.errors.push_back(fmt::format("{}: {}", rid, e.what()));
                run.levels.push_back(failed_level(spec.metrics, e.what()));
            }
        }
        return run;
    }

    ZoomConfig cfg = spec.zoom;
    cfg.prompt_mode = mode_for(method);
    cfg.seed = spec.seed;
    ChainTranscript t = run_chain(x0, cfg, *r.backend, prompter_for(r, method), img.id);
    for (const auto& e : t.errors) {
        run.errors.push_back(fmt::format("{} step {}: {} ({})", base_id, e.step, e.message, e.kind));
    }
    for (int k = 1; k <= n; ++k) {
        if (k < static_cast<int>(t.states.size())) {
            run.levels.push_back(
                r.evaluator->evaluate_all(t.states[static_cast<std::size_t>(k)].image, spec.metrics,
                                          fmt::format("{}:step{}", base_id, k)));
        } else {
            run.levels.push_back(failed_level(spec.metrics, "chain truncated"));
        }
    }
    run.transcript = std::move(t);
    return run;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

}  // namespace

Method parse_method(std::string_view name) {
    for (const auto& [m, n] : kMethods) {
        if (n == name) return m;
    }
    throw std::invalid_argument("unknown method: " + std::string(name));
}

std::string_view method_name(Method method) {
    for (const auto& [m, n] : kMethods) {
        if (m == method) return n;
    }
    return "?";
}

void RunSpec::validate() const {
    zoom.validate();
    if (methods.empty()) throw ConfigError("no methods requested");
    if (metrics.empty()) throw ConfigError("no metrics requested");
    for (const auto& m : metrics) {
        try {
            (void)metric_info(m);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
    if (timeout_ms < 1) throw ConfigError("timeout must be positive");
    if (uses(*this, Method::nn_interp) || uses(*this, Method::direct_sr)) {
        std::int64_t total = 1;
        for (int k = 0; k < zoom.recursions; ++k) total *= zoom.scale;
        if (zoom.base_resolution % total != 0) {
            throw ConfigError(fmt::format("base resolution {} is not divisible by {}", zoom.base_resolution, total));
        }
    }
    if (uses_configured_backend(*this)) {
        if (zoom.backend_id != "nearest" && zoom.backend_id != "bicubic" && zoom.backend_id != "remote") {
            throw ConfigError("unknown backend: " + zoom.backend_id);
        }
        if (zoom.backend_id == "remote" && !endpoint("sr")) {
            throw ConfigError("remote backend needs an sr endpoint");
        }
    }
    if (uses(*this, Method::coz_vlm) && !endpoint("vlm")) {
        throw ConfigError("coz_vlm needs a vlm endpoint");
    }
    if (uses(*this, Method::coz_dape_tags) && tags_file.empty()) {
        throw ConfigError("coz_dape_tags needs a tags file");
    }
    for (const auto& m : metrics) {
        const MetricInfo& info = metric_info(m);
        if (info.native && niqe_model.empty()) throw ConfigError("niqe needs a model file");
        if (!info.native && !endpoint("metric")) throw ConfigError("metric " + m + " needs a metric endpoint");
    }
}

void RunSpec::apply_env_overrides(const std::function<const char*(const char*)>& getenv) {
    for (const auto& [role, var] : kEnvRoles) {
        const char* v = getenv(var);
        if (v != nullptr && *v != '\0') endpoints[std::string(role)] = v;
    }
}

std::optional<Endpoint> RunSpec::endpoint(const std::string& role) const {
    auto it = endpoints.find(role);
    if (it == endpoints.end() || it->second.empty()) return std::nullopt;
    return Endpoint{it->second, std::chrono::milliseconds(timeout_ms)};
}

RunSpec RunSpec::from_json(const nlohmann::json& doc) {
    RunSpec s;
    try {
        s.input_dir = doc.value("input_dir", std::string{});
        s.output_dir = doc.value("output_dir", std::string{});
        if (doc.contains("zoom")) {
            const auto& z = doc.at("zoom");
            s.zoom.scale = z.value("scale", s.zoom.scale);
            s.zoom.recursions = z.value("recursions", s.zoom.recursions);
            s.zoom.base_resolution = z.value("base_resolution", s.zoom.base_resolution);
            s.zoom.backend_id = z.value("backend", s.zoom.backend_id);
        }
        for (const auto& m : doc.value("methods", nlohmann::json::array())) {
            s.methods.push_back(parse_method(m.get<std::string>()));
        }
        s.metrics = doc.value("metrics", std::vector<std::string>{});
        s.endpoints = doc.value("endpoints", std::map<std::string, std::string>{});
        s.seed = doc.value("seed", std::uint64_t{0});
        s.niqe_model = doc.value("niqe_model", std::string{});
        s.tags_file = doc.value("tags_file", std::string{});
        s.parallelism = doc.value("parallelism", 1);
        s.timeout_ms = doc.value("timeout_ms", 120000);
        s.write_transcripts = doc.value("write_transcripts", false);
        s.write_rasters = doc.value("write_rasters", false);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad run config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    s.zoom.seed = s.seed;
    return s;
}

nlohmann::json RunSpec::to_json() const {
    nlohmann::json methods_json = nlohmann::json::array();
    for (Method m : methods) methods_json.push_back(std::string(method_name(m)));
    return {
        {"input_dir", input_dir.string()},
        {"output_dir", output_dir.string()},
        {"zoom",
         {{"scale", zoom.scale},
          {"recursions", zoom.recursions},
          {"base_resolution", zoom.base_resolution},
          {"backend", zoom.backend_id}}},
        {"methods", methods_json},
        {"metrics", metrics},
        {"endpoints", endpoints},
        {"seed", seed},
        {"niqe_model", niqe_model.string()},
        {"tags_file", tags_file.string()},
        {"parallelism", parallelism},
        {"timeout_ms", timeout_ms},
        {"write_transcripts", write_transcripts},
        {"write_rasters", write_rasters},
    };
}

int scaled_long_side(int long_side, int short_side, int base_resolution) {
    const std::int64_t num = static_cast<std::int64_t>(long_side) * base_resolution;
    return static_cast<int>((2 * num + short_side) / (2 * static_cast<std::int64_t>(short_side)));
}

PreparedImage prepare_image(const Image& image, const std::string& id, int base_resolution) {
    if (image.empty()) throw std::invalid_argument("empty image");
    PreparedImage out;
    out.id = id;
    out.original_width = image.width();
    out.original_height = image.height();
    const int w = image.width();
    const int h = image.height();
    const int short_side = std::min(w, h);
    out.upscaled = short_side < base_resolution;

    Image resized = image;
    if (short_side != base_resolution) {
        const int nw = w <= h ? base_resolution : scaled_long_side(w, h, base_resolution);
        const int nh = w <= h ? scaled_long_side(h, w, base_resolution) : base_resolution;
        resized = resize_to(image, nw, nh, ResizeKernel::bicubic);
    }
    const int x = (resized.width() - base_resolution) / 2;
    const int y = (resized.height() - base_resolution) / 2;
    out.image = (x == 0 && y == 0 && resized.width() == base_resolution && resized.height() == base_resolution)
                    ? std::move(resized)
                    : resized.crop(x, y, base_resolution, base_resolution);
    return out;
}

IngestResult ingest(const std::filesystem::path& input_dir, int base_resolution) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(input_dir)) {
        throw std::runtime_error("input directory not found: " + input_dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(input_dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    IngestResult out;
    for (const auto& f : files) {
        try {
            out.images.push_back(prepare_image(read_image(f), f.stem().string(), base_resolution));
        } catch (const std::exception& e) {
            out.rejects.push_back(fmt::format("{}: {}", f.filename().string(), e.what()));
        }
    }
    if (out.images.empty()) {
        throw std::runtime_error("no decodable images in " + input_dir.string());
    }
    return out;
}

int ProtocolResult::failure_count() const {
    int n = static_cast<int>(ingest_rejects.size());
    for (const auto& img : images) {
        for (const auto& run : img.runs) {
            n += static_cast<int>(run.errors.size());
            for (const auto& level : run.levels) {
                for (const auto& [name, cell] : level.cells) n += cell.failed ? 1 : 0;
            }
        }
    }
    return n;
}

ProtocolResult run_protocol(const RunSpec& spec, const std::vector<PreparedImage>& images) {
    const Resources res = build_resources(spec);
    for (const auto& img : images) {
        if (img.image.width() != spec.zoom.base_resolution || !img.image.is_square()) {
            throw ConfigError(fmt::format("image {} is not {}x{}", img.id, spec.zoom.base_resolution,
                                          spec.zoom.base_resolution));
        }
    }

    ProtocolResult out;
    out.images.resize(images.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < images.size(); i = next++) {
            ImageResult& r = out.images[i];
            r.image_id = images[i].id;
            r.upscaled = images[i].upscaled;
            for (Method m : spec.methods) r.runs.push_back(run_method(spec, res, m, images[i]));
        }
    };
    const int workers = std::min<int>(spec.parallelism, static_cast<int>(images.size()));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    }
    return out;
}

ProtocolResult run_protocol(const RunSpec& spec) {
    (void)build_resources(spec);
    IngestResult in = ingest(spec.input_dir, spec.zoom.base_resolution);
    ProtocolResult out = run_protocol(spec, in.images);
    out.ingest_rejects = std::move(in.rejects);

    if (!spec.output_dir.empty()) {
        std::filesystem::create_directories(spec.output_dir);
        const Report rep = aggregate(out, spec.zoom.scale, spec.methods, spec.metrics);
        write_text(spec.output_dir / "report.csv", report_csv(rep));
        write_text(spec.output_dir / "report.md", report_markdown(rep));
        if (spec.write_transcripts) {
            for (const auto& img : out.images) {
                for (const auto& run : img.runs) {
                    if (!run.transcript) continue;
                    write_transcript(*run.transcript, spec.output_dir / "transcripts" / method_name(run.method),
                                     spec.write_rasters);
                }
            }
        }
    }
    return out;
}

std::string scale_label(std::int64_t factor) {
    return fmt::format("{}x", factor);
}

Report aggregate(const ProtocolResult& result, int scale, const std::vector<Method>& methods,
                 const std::vector<std::string>& metrics) {
    if (result.images.empty()) throw std::invalid_argument("nothing to aggregate");
    Report rep;
    for (Method m : methods) rep.methods.emplace_back(method_name(m));
    rep.metrics = metrics;

    std::size_t levels = 0;
    for (const auto& img : result.images) {
        for (const auto& run : img.runs) levels = std::max(levels, run.levels.size());
    }

    std::int64_t factor = 1;
    for (std::size_t k = 0; k < levels; ++k) {
        factor *= scale;
        ScaleRow row;
        row.level = static_cast<int>(k) + 1;
        row.scale_label = scale_label(factor);
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            for (const auto& metric : metrics) {
                ReportCell cell;
                double sum = 0.0;
                for (const auto& img : result.images) {
                    const MethodRun* run = nullptr;
                    for (const auto& r : img.runs) {
                        if (r.method == methods[mi]) run = &r;
                    }
                    MetricCell c = MetricEvaluator::failure_cell(metric, "missing");
                    if (run != nullptr && k < run->levels.size()) {
                        auto it = run->levels[k].cells.find(metric);
                        if (it != run->levels[k].cells.end()) c = it->second;
                    }
                    sum += c.value;
                    cell.failures += c.failed ? 1 : 0;
                    ++cell.count;
                }
                cell.mean = sum / cell.count;
                row.cells[{rep.methods[mi], metric}] = cell;
            }
        }
        for (const auto& metric : metrics) {
            const bool lower = metric_info(metric).direction == MetricDirection::lower_is_better;
            std::vector<double> values;
            for (const auto& m : rep.methods) values.push_back(row.cells[{m, metric}].mean);
            std::sort(values.begin(), values.end());
            if (!lower) std::reverse(values.begin(), values.end());
            values.erase(std::unique(values.begin(), values.end()), values.end());
            for (const auto& m : rep.methods) {
                ReportCell& c = row.cells[{m, metric}];
                if (!values.empty() && c.mean == values[0]) c.rank = 1;
                else if (values.size() > 1 && c.mean == values[1]) c.rank = 2;
            }
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

std::string report_csv(const Report& report) {
    std::string out = "scale,method,metric,mean,failures,count\n";
    for (const auto& row : report.rows) {
        for (const auto& m : report.methods) {
            for (const auto& metric : report.metrics) {
                const ReportCell& c = row.cells.at({m, metric});
                out += fmt::format("{},{},{},{:.6f},{},{}\n", row.scale_label, m, metric, c.mean, c.failures,
                                   c.count);
            }
        }
    }
    return out;
}

std::string report_markdown(const Report& report) {
    std::string out = "| Scale | Method |";
    std::string rule = "|---|---|";
    for (const auto& metric : report.metrics) {
        const bool lower = metric_info(metric).direction == MetricDirection::lower_is_better;
        std::string upper = metric;
        std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
        out += fmt::format(" {}{} |", upper, lower ? "↓" : "↑");
        rule += "---:|";
    }
    out += "\n" + rule + "\n";
    for (const auto& row : report.rows) {
        for (const auto& m : report.methods) {
            out += fmt::format("| {} | {} |", row.scale_label, m);
            for (const auto& metric : report.metrics) {
                const ReportCell& c = row.cells.at({m, metric});
                std::string v = fmt::format("{:.4f}", c.mean);
                if (c.rank == 1) v = "**" + v + "**";
                else if (c.rank == 2) v = "<u>" + v + "</u>";
                if (c.failures > 0) v += fmt::format(" ({} failed)", c.failures);
                out += " " + v + " |";
            }
            out += "\n";
        }
    }
    out += "\nBold marks the best value per scale and metric, underline the second best.\n";
    return out;
}

}  // namespace coz
