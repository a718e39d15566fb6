#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iclprobe {

/// Declared label space of a classification task. `label_names` are the
/// natural-language targets rendered in regular prompts; `label_aliases`
/// lists extra spellings accepted when reading data files.
struct TaskSpec {
    std::string name;
    std::vector<std::string> label_names;
    std::vector<std::vector<std::string>> label_aliases;
    std::string notes;

    std::size_t class_count() const noexcept { return label_names.size(); }

    /// Throws InputError unless there are at least two distinct labels.
    void validate() const;

    /// Resolves a label as written in a data file: exact name, then
    /// case-insensitive name or alias, then a decimal class index.
    std::optional<std::size_t> resolve_label(std::string_view raw) const;
};

/// Identity of a record: the task it was read from and its position in
/// that task's record file. Duplicate texts stay distinct records.
struct RecordId {
    std::string source;
    std::size_t index = 0;

    auto operator<=>(const RecordId&) const = default;
};

struct Example {
    RecordId id;
    std::string input;
    std::size_t label = 0;

    bool operator==(const Example&) const = default;
};

/// Immutable labeled corpus with a train (exemplar) pool and a
/// validation (evaluation) pool.
class TaskCorpus {
public:
    TaskCorpus(TaskSpec spec, std::vector<Example> train, std::vector<Example> validation);

    const TaskSpec& spec() const noexcept { return spec_; }
    std::span<const Example> train() const noexcept { return train_; }
    std::span<const Example> validation() const noexcept { return validation_; }

private:
    TaskSpec spec_;
    std::vector<Example> train_;
    std::vector<Example> validation_;
};

struct EvalInstance {
    Example eval_example;
    std::vector<Example> exemplars;
    std::uint64_t draw_seed = 0;
};

struct CorpusSplit {
    std::vector<Example> train;
    std::vector<Example> validation;
};

/// Reads `input<TAB>label` records in file order. Lines starting with `#`
/// and blank lines are skipped; record indices count data lines only.
std::vector<Example> load_records(const std::filesystem::path& path, const TaskSpec& spec);

/// Loads one record file and splits it 80/20 with `split_seed`.
TaskCorpus load_task(const std::filesystem::path& path, const TaskSpec& spec,
                     std::uint64_t split_seed);

/// Loads a task whose train and validation records come pre-split.
TaskCorpus load_task(const std::filesystem::path& train_path,
                     const std::filesystem::path& validation_path, const TaskSpec& spec);

/// Seeded 80/20 partition; |train| = round(0.8 n). Both halves keep the
/// input's relative order.
CorpusSplit split_corpus(std::span<const Example> examples, std::uint64_t seed);

/// Uniform sample without replacement of min(n_eval, |validation|)
/// examples, in draw order.
std::vector<Example> sample_eval_set(std::span<const Example> validation, std::size_t n_eval,
                                     std::uint64_t seed);

/// Exactly `k_per_class` examples of every class, presented in one seeded
/// shuffle of the union.
std::vector<Example> sample_exemplars(std::span<const Example> train, const TaskSpec& spec,
                                      std::size_t k_per_class, std::uint64_t seed);

EvalInstance make_eval_instance(const TaskCorpus& corpus, const Example& eval_example,
                                std::size_t k_per_class, std::uint64_t draw_seed);

/// Exemplars from one task, evaluation examples from another. The
/// correspondence maps each eval-task label index to an exemplar-task
/// index; when omitted, labels are matched by case-insensitive name.
TaskCorpus make_ood_pair(const TaskCorpus& exemplar_task, const TaskCorpus& eval_task,
                         std::optional<std::vector<std::size_t>> correspondence = std::nullopt);

}  // namespace iclprobe
