#include "iclprobe/config.hpp"

#include "iclprobe/error.hpp"

#include <fstream>

namespace iclprobe {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

template <typename T>
T get_or(const json& node, const char* key, T fallback) {
    if (!node.contains(key) || node.at(key).is_null()) return fallback;
    try {
        return node.at(key).get<T>();
    } catch (const json::exception&) {
        throw InputError(std::string("config key '") + key + "' has the wrong type");
    }
}

void absolutize(json& node, const char* key, const fs::path& base) {
    if (node.contains(key) && node[key].is_string()) {
        fs::path p = node[key].get<std::string>();
        if (p.is_relative()) node[key] = (base / p).lexically_normal().string();
    }
}

PromptTemplate resolve_template(const json& node) {
    if (node.is_string()) return builtin_template(node.get<std::string>());
    PromptTemplate t = default_template();
    t.name = get_or<std::string>(node, "name", "custom");
    t.exemplar_pattern = get_or<std::string>(node, "exemplar", t.exemplar_pattern);
    t.query_pattern = get_or<std::string>(node, "query", t.query_pattern);
    t.separator = get_or<std::string>(node, "separator", t.separator);
    t.input_newline = get_or<std::string>(node, "input_newline", t.input_newline);
    t.validate();
    return t;
}

TargetSet resolve_targets(const json& node, const TaskSpec& spec) {
    if (node.is_string()) return builtin_target_set(node.get<std::string>(), spec);
    TargetSet t;
    t.name = get_or<std::string>(node, "name", "custom");
    t.targets = get_or<std::vector<std::string>>(node, "targets", {});
    t.reversed = get_or<bool>(node, "reversed", false);
    t.validate();
    return t;
}

}  // namespace

json load_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open config file " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("config file " + path.string() + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw InputError("config file " + path.string() + " must hold a JSON object");
    }
    const auto base = fs::absolute(path).parent_path();
    absolutize(doc, "manifest", base);
    absolutize(doc, "output_dir", base);
    if (doc.contains("model") && doc["model"].is_object()) {
        absolutize(doc["model"], "cache_dir", base);
    }
    return doc;
}

ModelSpec resolve_model(const json& node) {
    ModelSpec m;
    if (node.is_string()) {
        m.kind = parse_model_kind(node.get<std::string>());
    } else {
        m.kind = parse_model_kind(get_or<std::string>(node, "kind", "knn_mapper"));
    }
    const json& n = node.is_object() ? node : json::object();
    m.endpoint_url = get_or<std::string>(n, "endpoint_url", "");
    m.model_name = get_or<std::string>(n, "model_name", "");
    m.params.max_tokens = get_or<std::size_t>(n, "max_tokens", m.params.max_tokens);
    m.params.temperature = get_or<double>(n, "temperature", m.params.temperature);
    m.params.stop = get_or<std::vector<std::string>>(n, "stop", m.params.stop);
    m.api_key_env = get_or<std::string>(n, "api_key_env", m.api_key_env);
    m.retry.max_retries = get_or<std::size_t>(n, "retries", m.retry.max_retries);
    m.retry.initial_delay = std::chrono::milliseconds(
        get_or<long>(n, "initial_delay_ms", static_cast<long>(m.retry.initial_delay.count())));
    m.rate_limit = get_or<double>(n, "rate_limit", m.rate_limit);
    m.timeout = std::chrono::seconds(get_or<long>(n, "timeout_s", static_cast<long>(m.timeout.count())));
    m.cache_dir = get_or<std::string>(n, "cache_dir", "");
    m.fixed_response = get_or<std::string>(n, "response", "");
    m.k_neighbors = get_or<std::size_t>(n, "k_neighbors", m.k_neighbors);
    if (m.kind == ModelKind::prior_oracle) {
        m.prior_name = get_or<std::string>(n, "prior", "marker");
        m.prior = builtin_prior(m.prior_name);
    }
    m.validate();
    return m;
}

ExperimentConfig resolve_experiment(const json& s, const TaskSpec& spec) {
    ExperimentConfig c;
    c.task = get_or<std::string>(s, "task", spec.name);
    c.model = resolve_model(s.contains("model") ? s.at("model") : json("knn_mapper"));
    c.prompt.prompt_template =
        s.contains("template") ? resolve_template(s.at("template")) : default_template();
    c.prompt.target_set = s.contains("target_set") ? resolve_targets(s.at("target_set"), spec)
                                                   : builtin_target_set("foobar", spec);
    c.prompt.k_per_class = get_or<std::size_t>(s, "k", kDefaultKPerClass);
    c.prompt.flip_proportion = get_or<double>(s, "p_flip", 0.0);
    c.prompt.remap_proportion = get_or<double>(s, "p_remap", 0.0);
    c.prompt.seed = get_or<std::uint64_t>(s, "prompt_seed", 0);
    c.n_eval = get_or<std::size_t>(s, "n_eval", kDefaultEvalCount);
    c.eval_label_mode = parse_eval_label_mode(get_or<std::string>(s, "eval_label_mode", "unflipped"));
    c.experiment_seed = get_or<std::uint64_t>(s, "seed", 0);
    c.workers = get_or<std::size_t>(s, "workers", 1);
    c.validate(spec);
    return c;
}

TaskRegistry registry_for(const json& settings) {
    if (settings.contains("manifest") && settings["manifest"].is_string()) {
        return TaskRegistry::from_manifest(settings["manifest"].get<std::string>());
    }
    return TaskRegistry{};
}

}  // namespace iclprobe
