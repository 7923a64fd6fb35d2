#include "coz/prompt_extraction.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace coz {

PromptMode parse_prompt_mode(std::string_view name) {
    if (name == "null") return PromptMode::null;
    if (name == "tags") return PromptMode::tags;
    if (name == "vlm") return PromptMode::vlm;
    throw std::invalid_argument("unknown prompt mode: " + std::string(name));
}

std::string_view prompt_mode_name(PromptMode mode) {
    switch (mode) {
        case PromptMode::null: return "null";
        case PromptMode::tags: return "tags";
        case PromptMode::vlm: return "vlm";
    }
    return "null";
}

namespace {

// Decodes one UTF-8 sequence starting at text[i]; returns the code point and
// advances i. Invalid bytes decode as themselves.
char32_t next_code_point(std::string_view text, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    int extra = 0;
    char32_t cp = b0;
    if (b0 >= 0xF0) {
        extra = 3;
        cp = b0 & 0x07;
    } else if (b0 >= 0xE0) {
        extra = 2;
        cp = b0 & 0x0F;
    } else if (b0 >= 0xC0) {
        extra = 1;
        cp = b0 & 0x1F;
    }
    if (extra > 0 && i + extra >= text.size()) {
        ++i;
        return b0;
    }
    for (int k = 1; k <= extra; ++k) {
        const auto b = static_cast<unsigned char>(text[i + k]);
        if ((b & 0xC0) != 0x80) {
            ++i;
            return b0;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    i += 1 + extra;
    return cp;
}

bool is_unicode_space(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        while (!current.empty() && std::ispunct(static_cast<unsigned char>(current.back()))) {
            current.pop_back();
        }
        if (!current.empty()) {
            tokens.push_back(std::move(current));
        }
        current.clear();
    };
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t start = i;
        const char32_t cp = next_code_point(text, i);
        if (is_unicode_space(cp)) {
            flush();
        } else {
            current.append(text.substr(start, i - start));
        }
    }
    flush();
    return tokens;
}

Prompt make_null_prompt() {
    return Prompt{};
}

Prompt make_tag_prompt(const std::vector<std::string>& tags) {
    if (tags.empty()) {
        throw std::invalid_argument("tag list is empty");
    }
    Prompt p;
    p.mode = PromptMode::tags;
    for (std::size_t k = 0; k < tags.size(); ++k) {
        if (tags[k].empty()) {
            throw std::invalid_argument("empty tag");
        }
        if (k > 0) {
            p.text += ", ";
        }
        p.text += tags[k];
    }
    p.tokens = tokenize(p.text);
    return p;
}

std::string base_vlm_template(std::size_t image_count) {
    if (image_count == 1) {
        return "what is in the image? Give me a set of words.";
    }
    return std::string(kZoomInSentence) +
           "\nBased on this knowledge, what is in the second image? Give me a set of words.";
}

std::string critic_template(std::string_view description) {
    return fmt::format(
        "First Image: <image>\n"
        "Second Image: <image>\n"
        "{} Please rate the quality of the following description on how well it describes "
        "the second image. Output only a single score between 0 and 100.\n"
        "Description: {}\n"
        "Rating (0-100):",
        kZoomInSentence, description);
}

std::string_view template_id_name(TemplateId id) {
    return id == TemplateId::base_vlm ? "base_vlm" : "critic";
}

void PromptRequest::validate() const {
    if (images.empty() || images.size() > 2) {
        throw std::invalid_argument("prompt requests carry one or two images");
    }
    if (decoding.max_tokens < 1) {
        throw std::invalid_argument("max_tokens must be >= 1");
    }
    if (decoding.temperature < 0.0) {
        throw std::invalid_argument("temperature must be >= 0");
    }
}

nlohmann::json prompt_request_body(const PromptRequest& req) {
    nlohmann::json images = nlohmann::json::array();
    for (const Image& img : req.images) {
        images.push_back(image_to_png_b64(img));
    }
    return {{"request_id", req.request_id},
            {"images_png_b64", images},
            {"template_id", std::string(template_id_name(req.template_id))},
            {"prompt", req.text},
            {"temperature", req.decoding.temperature},
            {"max_tokens", req.decoding.max_tokens},
            {"seed", req.decoding.seed}};
}

std::string VlmClient::complete(const PromptRequest& req) const {
    req.validate();
    nlohmann::json reply;
    try {
        reply = post_json(endpoint_, "/v1/prompt", prompt_request_body(req), req.request_id);
    } catch (const RemoteError& e) {
        throw PromptError(e);
    }
    try {
        if (reply.at("request_id").get<std::string>() != req.request_id) {
            throw PromptError(FailureKind::malformed, req.request_id, "reply carries a different request_id");
        }
        return reply.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw PromptError(FailureKind::malformed, req.request_id, e.what());
    }
}

Prompt NullPromptSource::extract(const PromptContext&) const {
    return make_null_prompt();
}

namespace {

std::vector<int> indices_of(const PromptContext& ctx) {
    std::vector<int> out;
    for (const auto& c : ctx.images) {
        out.push_back(c.index);
    }
    return out;
}

}  // namespace

Prompt TagPromptSource::extract(const PromptContext& ctx) const {
    const auto it = tags_.find(ctx.image_id);
    if (it == tags_.end()) {
        throw std::invalid_argument("no tags for image " + ctx.image_id);
    }
    Prompt p = make_tag_prompt(it->second);
    p.conditioning_indices = indices_of(ctx);
    return p;
}

TagPromptSource TagPromptSource::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open tags file " + path);
    }
    const auto doc = nlohmann::json::parse(in);
    return TagPromptSource(doc.get<std::map<std::string, std::vector<std::string>>>());
}

Prompt VlmPromptSource::extract(const PromptContext& ctx) const {
    PromptRequest req;
    for (const auto& c : ctx.images) {
        req.images.push_back(*c.image);
    }
    req.template_id = TemplateId::base_vlm;
    req.text = base_vlm_template(req.images.size());
    req.decoding = decoding_;
    req.decoding.seed = decoding_.seed + ctx.seed;
    req.request_id = fmt::format("{}:prompt{}", ctx.image_id, ctx.step);

    std::string text = client_.complete(req);
    if (tokenize(text).empty()) {
        throw PromptError(FailureKind::empty_output, req.request_id, "model returned an empty prompt");
    }
    Prompt p;
    p.mode = PromptMode::vlm;
    p.text = std::move(text);
    p.tokens = tokenize(p.text);
    p.conditioning_indices = indices_of(ctx);
    return p;
}

std::string CriticClient::rate(const Image& coarse, const Image& fine, std::string_view description,
                               const std::string& request_id) const {
    PromptRequest req;
    req.images = {coarse, fine};
    req.template_id = TemplateId::critic;
    req.text = critic_template(description);
    req.decoding.temperature = 0.0;
    req.decoding.max_tokens = 16;
    req.request_id = request_id;
    return client_.complete(req);
}

}  // namespace coz
