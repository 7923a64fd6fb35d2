#pragma once

#include "coz/http_json.hpp"
#include "coz/image.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace coz {

enum class PromptMode { null, tags, vlm };

PromptMode parse_prompt_mode(std::string_view name);
std::string_view prompt_mode_name(PromptMode mode);

/// Splits on Unicode whitespace and strips trailing ASCII punctuation from
/// every token; tokens that end up empty are dropped.
std::vector<std::string> tokenize(std::string_view text);

struct Prompt {
    std::string text;
    std::vector<std::string> tokens;
    std::vector<int> conditioning_indices;
    PromptMode mode = PromptMode::null;

    std::size_t length() const { return tokens.size(); }
    friend bool operator==(const Prompt&, const Prompt&) = default;
};

Prompt make_null_prompt();

/// Comma-joined tag prompt. Throws std::invalid_argument on an empty list or
/// an empty tag.
Prompt make_tag_prompt(const std::vector<std::string>& tags);

inline constexpr std::string_view kZoomInSentence = "The second image is a zoom-in of the first image.";

/// Request text for the prompt-extraction model.
std::string base_vlm_template(std::size_t image_count);

/// Request text for the critic model with the candidate description filled in.
std::string critic_template(std::string_view description);

struct Decoding {
    double temperature = 0.7;
    int max_tokens = 128;
    std::uint64_t seed = 0;
};

enum class TemplateId { base_vlm, critic };
std::string_view template_id_name(TemplateId id);

struct PromptRequest {
    std::vector<Image> images;  // coarser first
    TemplateId template_id = TemplateId::base_vlm;
    std::string text;           // the filled template
    Decoding decoding;
    std::string request_id;

    void validate() const;
};

/// The JSON body sent to /v1/prompt for a request.
nlohmann::json prompt_request_body(const PromptRequest& request);

/// Client for /v1/prompt. Returns the raw model text.
class VlmClient {
public:
    explicit VlmClient(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::string complete(const PromptRequest& request) const;
    const Endpoint& endpoint() const { return endpoint_; }

private:
    Endpoint endpoint_;
};

/// One conditioning image with its chain index.
struct ConditioningImage {
    int index = 0;
    const Image* image = nullptr;
};

struct PromptContext {
    int step = 1;  // i, 1-based
    std::vector<ConditioningImage> images;  // ascending index, one for i=1, two for i>=2
    std::string image_id;
    std::uint64_t seed = 0;
};

/// Produces c_i for a chain step. Implementations must be safe to call
/// concurrently from independent chains.
class PromptSource {
public:
    virtual ~PromptSource() = default;
    virtual PromptMode mode() const = 0;
    virtual Prompt extract(const PromptContext& context) const = 0;
};

class NullPromptSource final : public PromptSource {
public:
    PromptMode mode() const override { return PromptMode::null; }
    Prompt extract(const PromptContext& context) const override;
};

/// Externally supplied tag lists keyed by image id (DAPE-style prompts).
class TagPromptSource final : public PromptSource {
public:
    explicit TagPromptSource(std::map<std::string, std::vector<std::string>> tags_by_image)
        : tags_(std::move(tags_by_image)) {}
    PromptMode mode() const override { return PromptMode::tags; }
    Prompt extract(const PromptContext& context) const override;

    /// Reads a JSON object {"image_id": ["tag", ...], ...}.
    static TagPromptSource from_file(const std::string& path);

private:
    std::map<std::string, std::vector<std::string>> tags_;
};

class VlmPromptSource final : public PromptSource {
public:
    VlmPromptSource(VlmClient client, Decoding decoding)
        : client_(std::move(client)), decoding_(decoding) {}
    PromptMode mode() const override { return PromptMode::vlm; }
    Prompt extract(const PromptContext& context) const override;

private:
    VlmClient client_;
    Decoding decoding_;
};

/// Asks the critic model to rate a description against a (coarse, fine)
/// image pair and returns the raw reply text.
class CriticClient {
public:
    explicit CriticClient(VlmClient client) : client_(std::move(client)) {}
    std::string rate(const Image& coarse, const Image& fine, std::string_view description,
                     const std::string& request_id) const;

private:
    VlmClient client_;
};

}  // namespace coz
