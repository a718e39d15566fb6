#pragma once

#include "iclprobe/experiment.hpp"
#include "iclprobe/task_registry.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace iclprobe {

/// Experiment config files are JSON objects with these keys (all optional
/// except `task` at run time):
///
///   task, manifest, template, target_set, k, p_flip, p_remap, n_eval,
///   eval_label_mode, seed, prompt_seed, output_dir, workers,
///   model: {kind, endpoint_url, model_name, max_tokens, temperature, stop,
///           prior, k_neighbors, response, retries, initial_delay_ms,
///           rate_limit, timeout_s, cache_dir, api_key_env}
///
/// `template` is a built-in name or {name, exemplar, query, separator,
/// input_newline}; `target_set` is a built-in name or {name, targets,
/// reversed}. Relative paths in a file resolve against the file's
/// directory.
nlohmann::json load_config_file(const std::filesystem::path& path);

/// Values layered in order: built-in defaults, then `settings`.
ExperimentConfig resolve_experiment(const nlohmann::json& settings, const TaskSpec& spec);

ModelSpec resolve_model(const nlohmann::json& model);

/// Registry named by `settings["manifest"]`, or the marker-only default.
TaskRegistry registry_for(const nlohmann::json& settings);

}  // namespace iclprobe
