#include "iclprobe/model_gateway.hpp"

#include "iclprobe/error.hpp"
#include "iclprobe/task_registry.hpp"
#include "iclprobe/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

namespace iclprobe {

namespace {

std::set<std::string_view> token_set(std::string_view s) {
    auto toks = text::tokens(s);
    return {toks.begin(), toks.end()};
}

std::size_t overlap(const std::set<std::string_view>& a, const std::set<std::string_view>& b) {
    std::size_t n = 0;
    for (auto t : a) n += b.contains(t) ? 1 : 0;
    return n;
}

// Most frequent label among `labels`; ties go to the label seen first.
std::string plurality(std::span<const std::string> labels) {
    std::map<std::string_view, std::size_t> votes;
    for (const auto& l : labels) ++votes[l];
    std::string_view best;
    std::size_t best_votes = 0;
    for (const auto& l : labels) {
        if (votes[l] > best_votes) {
            best = l;
            best_votes = votes[l];
        }
    }
    return std::string(best);
}

}  // namespace

std::string_view to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::remote: return "remote";
    case ModelKind::prior_oracle: return "prior_oracle";
    case ModelKind::knn_mapper: return "knn_mapper";
    case ModelKind::majority: return "majority";
    case ModelKind::fixed: return "fixed";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view s) {
    for (auto kind : {ModelKind::remote, ModelKind::prior_oracle, ModelKind::knn_mapper,
                      ModelKind::majority, ModelKind::fixed}) {
        if (to_string(kind) == s) return kind;
    }
    throw InputError("unknown model kind '" + std::string(s) + "'");
}

std::string_view to_string(MatchKind kind) {
    switch (kind) {
    case MatchKind::exact: return "exact";
    case MatchKind::normalized: return "normalized";
    case MatchKind::none: return "none";
    }
    return "?";
}

void ModelSpec::validate() const {
    switch (kind) {
    case ModelKind::remote:
        if (endpoint_url.empty() || model_name.empty()) {
            throw InputError("remote model needs an endpoint URL and a model name");
        }
        break;
    case ModelKind::prior_oracle:
        if (!prior) throw InputError("prior_oracle model has no prior");
        break;
    case ModelKind::knn_mapper:
        if (k_neighbors == 0) throw InputError("knn_mapper needs k_neighbors >= 1");
        break;
    case ModelKind::majority:
    case ModelKind::fixed:
        break;
    }
    if (params.temperature < 0.0) throw InputError("temperature must be non-negative");
    if (rate_limit < 0.0) throw InputError("rate limit must be non-negative");
}

std::string ModelSpec::display_name() const {
    switch (kind) {
    case ModelKind::remote: return model_name;
    case ModelKind::prior_oracle: return "prior_oracle:" + prior_name;
    case ModelKind::knn_mapper: return "knn_mapper:" + std::to_string(k_neighbors);
    case ModelKind::majority: return "majority";
    case ModelKind::fixed: return "fixed:" + fixed_response;
    }
    return "?";
}

ModelSpec remote_model(std::string endpoint_url, std::string model_name) {
    ModelSpec m;
    m.kind = ModelKind::remote;
    m.endpoint_url = std::move(endpoint_url);
    m.model_name = std::move(model_name);
    return m;
}

ModelSpec fixed_model(std::string response) {
    ModelSpec m;
    m.kind = ModelKind::fixed;
    m.fixed_response = std::move(response);
    return m;
}

ModelSpec prior_oracle_model(PriorFn prior, std::string prior_name) {
    ModelSpec m;
    m.kind = ModelKind::prior_oracle;
    m.prior = std::move(prior);
    m.prior_name = std::move(prior_name);
    return m;
}

ModelSpec knn_mapping_model(std::size_t k_neighbors) {
    ModelSpec m;
    m.kind = ModelKind::knn_mapper;
    m.k_neighbors = k_neighbors;
    return m;
}

ModelSpec majority_model() {
    ModelSpec m;
    m.kind = ModelKind::majority;
    return m;
}

PriorFn builtin_prior(std::string_view name) {
    if (name == "marker") return marker_prior;
    throw InputError("unknown prior '" + std::string(name) + "'");
}

std::string normalize_answer(std::string_view raw) {
    auto s = text::trim(raw);
    s = text::trim(s.substr(0, s.find('\n')));
    constexpr std::string_view terminal = ".,!?;:";
    while (!s.empty() && (terminal.find(s.back()) != std::string_view::npos ||
                          std::isspace(static_cast<unsigned char>(s.back())))) {
        s.remove_suffix(1);
    }
    return text::ascii_lower(s);
}

Prediction match_label(std::string_view raw, std::span<const std::string> label_set) {
    if (label_set.empty()) {
        throw PreconditionError("label set is empty");
    }
    std::vector<std::string> normalized;
    for (const auto& label : label_set) {
        auto n = normalize_answer(label);
        if (std::find(normalized.begin(), normalized.end(), n) != normalized.end()) {
            throw PreconditionError("labels collide after normalization: '" + label + "'");
        }
        normalized.push_back(std::move(n));
    }

    Prediction out{std::string(raw), std::nullopt, MatchKind::none};
    const auto trimmed = text::trim(raw);
    for (std::size_t i = 0; i < label_set.size(); ++i) {
        if (trimmed == label_set[i]) {
            out.matched_label_index = i;
            out.match_kind = MatchKind::exact;
            return out;
        }
    }
    const auto key = normalize_answer(raw);
    for (std::size_t i = 0; i < normalized.size(); ++i) {
        if (key == normalized[i]) {
            out.matched_label_index = i;
            out.match_kind = MatchKind::normalized;
            return out;
        }
    }
    return out;
}

ModelGateway::ModelGateway(ModelSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    if (spec_.kind == ModelKind::remote) {
        client_ = std::make_unique<CompletionClient>(spec_);
        if (!spec_.cache_dir.empty()) cache_.emplace(spec_.cache_dir);
    }
}

ModelGateway::~ModelGateway() = default;

std::size_t ModelGateway::network_requests() const noexcept {
    return client_ ? client_->requests_sent() : 0;
}

std::string ModelGateway::complete(std::string_view prompt, const PromptContext& context) {
    if (spec_.kind != ModelKind::remote) {
        return answer_offline(prompt, context);
    }
    const auto key = CacheKey::of(spec_, prompt);
    if (cache_) {
        if (auto hit = cache_->get(key)) {
            ++cache_hits_;
            return *hit;
        }
    }
    auto response = client_->complete(prompt);
    if (cache_) cache_->put(key, response, spec_.model_name);
    return response;
}

Prediction ModelGateway::predict_label(const RenderedPrompt& prompt, const PromptContext& context,
                                       std::span<const std::string> label_set) {
    return match_label(complete(prompt.text, context), label_set);
}

std::string ModelGateway::answer_offline(std::string_view prompt,
                                         const PromptContext& context) const {
    if (spec_.kind == ModelKind::fixed) {
        return spec_.fixed_response;
    }
    const auto parsed = parse_prompt(prompt, context.prompt_template);
    if (spec_.kind == ModelKind::prior_oracle) {
        return apply_target_set(spec_.prior(parsed.query_input), context.target_set);
    }
    std::vector<std::string> labels;
    for (const auto& [_, label] : parsed.exemplars) labels.push_back(label);
    if (labels.empty()) return {};
    if (spec_.kind == ModelKind::majority) {
        return plurality(labels);
    }

    // knn_mapper: nearest exemplars by token overlap, earliest first on ties.
    const auto query = token_set(parsed.query_input);
    std::vector<std::pair<std::size_t, std::size_t>> ranked;  // (similarity, position)
    for (std::size_t i = 0; i < parsed.exemplars.size(); ++i) {
        ranked.emplace_back(overlap(query, token_set(parsed.exemplars[i].first)), i);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    ranked.resize(std::min(ranked.size(), spec_.k_neighbors));
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    std::vector<std::string> neighbours;
    for (const auto& [_, pos] : ranked) neighbours.push_back(labels[pos]);
    return plurality(neighbours);
}

}  // namespace iclprobe
