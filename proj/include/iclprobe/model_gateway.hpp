#pragma once

#include "iclprobe/prompt_forge.hpp"

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iclprobe {

enum class ModelKind { remote, prior_oracle, knn_mapper, majority, fixed };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct RequestParams {
    std::size_t max_tokens = 16;
    double temperature = 0.0;
    std::vector<std::string> stop{"\n\n"};
};

struct RetryPolicy {
    std::size_t max_retries = 3;
    std::chrono::milliseconds initial_delay{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_delay{8000};

    std::chrono::milliseconds delay_for(std::size_t attempt) const;
};

/// Maps an evaluation input to the class a semantic prior would pick.
using PriorFn = std::function<std::size_t(std::string_view)>;

/// Identity of a model plus how to reach it. Remote models speak a
/// completions-style HTTP protocol; the other kinds are offline mocks.
struct ModelSpec {
    ModelKind kind = ModelKind::fixed;
    std::string endpoint_url;
    std::string model_name;
    RequestParams params;
    std::string api_key_env = "ICLPROBE_API_KEY";
    RetryPolicy retry;
    double rate_limit = 0.0;  // requests per second, 0 = unlimited
    std::chrono::seconds timeout{60};
    std::filesystem::path cache_dir;

    std::string fixed_response;
    std::size_t k_neighbors = 1;
    PriorFn prior;
    std::string prior_name;

    void validate() const;
    std::string display_name() const;
};

ModelSpec remote_model(std::string endpoint_url, std::string model_name);
ModelSpec fixed_model(std::string response);
ModelSpec prior_oracle_model(PriorFn prior, std::string prior_name = "custom");
ModelSpec knn_mapping_model(std::size_t k_neighbors = 1);
ModelSpec majority_model();

/// Priors selectable by name from config files ("marker").
PriorFn builtin_prior(std::string_view name);

/// Template and target set a prompt was rendered with. Mock learners read
/// the prompt back through it; remote models ignore it.
struct PromptContext {
    PromptTemplate prompt_template;
    TargetSet target_set;
};

enum class MatchKind { exact, normalized, none };

std::string_view to_string(MatchKind kind);

struct Prediction {
    std::string raw_text;
    std::optional<std::size_t> matched_label_index;
    MatchKind match_kind = MatchKind::none;
};

/// Trim, first line, case-fold, strip terminal punctuation.
std::string normalize_answer(std::string_view raw);

/// Exact match of the trimmed output wins, then a normalized match,
/// otherwise no label.
Prediction match_label(std::string_view raw, std::span<const std::string> label_set);

/// Content digest of everything that determines a remote completion.
struct CacheKey {
    std::string digest;

    static CacheKey of(const ModelSpec& model, std::string_view prompt);
    bool operator==(const CacheKey&) const = default;
};

/// Append-only, content-addressed response store: one JSON file per key
/// under `<dir>/<first two hex digits>/`. Entries become visible
/// atomically (write to a temporary, then rename).
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<std::string> get(const CacheKey& key) const;
    void put(const CacheKey& key, std::string_view response, std::string_view description = {});

    const std::filesystem::path& dir() const noexcept { return dir_; }

    struct Stats {
        std::size_t entries = 0;
        std::uintmax_t bytes = 0;
    };
    Stats stats() const;
    std::size_t clear();

private:
    std::filesystem::path path_for(const CacheKey& key) const;

    std::filesystem::path dir_;
};

/// HTTP client for a completions endpoint with bounded retries,
/// exponential backoff and a request-rate limit.
class CompletionClient {
public:
    explicit CompletionClient(ModelSpec spec);

    std::string complete(std::string_view prompt);

    std::size_t requests_sent() const noexcept { return requests_.load(); }

private:
    void wait_for_slot();

    ModelSpec spec_;
    std::string origin_;
    std::string path_;
    std::atomic<std::size_t> requests_{0};
    std::mutex slot_mutex_;
    std::chrono::steady_clock::time_point next_slot_{};
};

/// Uniform entry point for answering prompts. Safe to share across
/// worker threads.
class ModelGateway {
public:
    explicit ModelGateway(ModelSpec spec);
    ~ModelGateway();

    ModelGateway(const ModelGateway&) = delete;
    ModelGateway& operator=(const ModelGateway&) = delete;

    const ModelSpec& spec() const noexcept { return spec_; }

    std::string complete(std::string_view prompt, const PromptContext& context);

    Prediction predict_label(const RenderedPrompt& prompt, const PromptContext& context,
                             std::span<const std::string> label_set);

    std::size_t network_requests() const noexcept;
    std::size_t cache_hits() const noexcept { return cache_hits_.load(); }

private:
    std::string answer_offline(std::string_view prompt, const PromptContext& context) const;

    ModelSpec spec_;
    std::unique_ptr<CompletionClient> client_;
    std::optional<ResponseCache> cache_;
    std::atomic<std::size_t> cache_hits_{0};
};

}  // namespace iclprobe
