#pragma once

#include "iclprobe/model_gateway.hpp"
#include "iclprobe/prompt_forge.hpp"
#include "iclprobe/task_corpus.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iclprobe {

/// Whether evaluation ground truth is scored as-is or flipped (binary
/// tasks only), the latter for comparing against a flipped-label prompt.
enum class EvalLabelMode { unflipped, flipped };

std::string_view to_string(EvalLabelMode mode);
EvalLabelMode parse_eval_label_mode(std::string_view text);

inline constexpr std::size_t kDefaultKPerClass = 16;
inline constexpr std::size_t kDefaultEvalCount = 100;

struct ExperimentConfig {
    std::string task;
    ModelSpec model;
    PromptConfig prompt;
    std::size_t n_eval = kDefaultEvalCount;
    EvalLabelMode eval_label_mode = EvalLabelMode::unflipped;
    std::uint64_t experiment_seed = 0;
    std::size_t workers = 1;

    void validate(const TaskSpec& spec) const;

    /// Canonical description of everything that determines the results.
    nlohmann::json to_json() const;
    std::string digest() const;
};

struct RunRecord {
    std::size_t eval_index = 0;
    RecordId eval_id;
    std::string prompt_digest;
    std::size_t expected_label = 0;  // ground truth of the eval example
    std::size_t scored_label = 0;    // what a prediction must match
    Prediction prediction;
    bool correct = false;
    bool skipped = false;
    std::string skip_reason;
};

struct ResultTable {
    std::string config_digest;
    std::string dataset;
    std::string model;
    std::string axis = "none";
    std::string axis_value;
    std::vector<RunRecord> records;
    double accuracy = 0.0;  // correct / non-skipped
    std::size_t skip_count = 0;

    std::size_t scored_count() const noexcept { return records.size() - skip_count; }
    std::size_t correct_count() const noexcept;
};

/// Evaluates `config` on `corpus`. Each eval example gets its own
/// exemplar draw seeded from (experiment seed, eval index). Records are
/// ordered by eval index; gateway failures skip a record and are counted.
ResultTable run_experiment(const ExperimentConfig& config, const TaskCorpus& corpus,
                           ModelGateway& gateway);
ResultTable run_experiment(const ExperimentConfig& config, const TaskCorpus& corpus);

/// The evaluation examples a config scores, in eval-index order.
std::vector<Example> eval_set_for(const ExperimentConfig& config, const TaskCorpus& corpus);

enum class SweepAxis { k, p_flip, p_remap, target_set, prompt_template };

std::string_view to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view text);

/// `base` with one axis set to `value` (a number, or a built-in target set
/// or template name).
ExperimentConfig with_axis_value(const ExperimentConfig& base, SweepAxis axis,
                                 std::string_view value, const TaskSpec& spec);

struct SweepPoint {
    std::string value;
    std::optional<ResultTable> table;
    std::string error;
};

/// One run per value with the shared experiment seed, so every run scores
/// the same eval examples. A failing value is reported, not fatal.
std::vector<SweepPoint> sweep(const ExperimentConfig& base, SweepAxis axis,
                              std::span<const std::string> values, const TaskCorpus& corpus,
                              ModelGateway& gateway);

}  // namespace iclprobe
