#pragma once

#include "iclprobe/task_corpus.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iclprobe {

/// Strings standing in for the class labels, indexed by class. When
/// `reversed` is set, class i renders as targets[n - 1 - i].
struct TargetSet {
    std::string name;
    std::vector<std::string> targets;
    bool reversed = false;

    void validate() const;
    TargetSet reverse() const;
};

/// Natural-language targets of a task (its label names).
TargetSet natural_targets(const TaskSpec& spec);

/// Built-in target sets: "natural", "foobar", "numeric", "alpha", "fruit",
/// each optionally suffixed "-reversed". Sized to `spec.class_count()`.
TargetSet builtin_target_set(std::string_view name, const TaskSpec& spec);

std::string apply_target_set(std::size_t label_index, const TargetSet& targets);

/// Layout of a prompt. `[input]` and `[label]` are placeholders. The
/// query pattern stops where the answer would begin. Newlines inside an
/// input are rendered as `input_newline`.
struct PromptTemplate {
    std::string name;
    std::string exemplar_pattern;
    std::string query_pattern;
    std::string separator = "\n\n";
    std::string input_newline = "\n";

    void validate() const;
};

/// Built-in templates: "input-output" (default), "arrow", "comma",
/// "question-answer", "student-teacher", "q-a", and the task-flavoured
/// "sst2-semantic", "trec-semantic", "rte-semantic".
PromptTemplate builtin_template(std::string_view name);
std::vector<std::string> builtin_template_names();
PromptTemplate default_template();

struct PromptConfig {
    PromptTemplate prompt_template = default_template();
    TargetSet target_set;
    std::size_t k_per_class = 16;
    double flip_proportion = 0.0;
    double remap_proportion = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// An exemplar together with the label index shown in the prompt, which
/// differs from `example.label` when the label was flipped.
struct ShownExemplar {
    Example example;
    std::size_t shown_label = 0;

    bool operator==(const ShownExemplar&) const = default;
};

std::vector<ShownExemplar> as_shown(std::span<const Example> exemplars);

/// Flips exactly round(p * n) exemplar labels (1 - label), chosen
/// uniformly by seed. Only binary tasks may be flipped.
std::vector<ShownExemplar> flip_labels(std::span<const ShownExemplar> exemplars,
                                       double flip_proportion, std::uint64_t seed,
                                       std::size_t class_count);

/// One substitution function over the words of a prompt. Never maps a
/// word to itself.
class WordMap {
public:
    using Entries = std::map<std::string, std::string, std::less<>>;

    WordMap() = default;
    explicit WordMap(Entries entries);

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::optional<std::string_view> find(std::string_view word) const;
    const Entries& entries() const noexcept { return entries_; }

private:
    Entries entries_;
};

/// Distinct whitespace-delimited words over all `inputs`, sorted.
std::vector<std::string> prompt_vocabulary(std::span<const std::string> inputs);

/// Picks round(p * |V|) source words uniformly from the vocabulary and
/// maps each to a uniformly drawn different vocabulary word.
WordMap build_word_map(std::span<const std::string> inputs, double remap_proportion,
                       std::uint64_t seed);

std::string remap_input(std::string_view input, const WordMap& map);
std::vector<std::string> remap_inputs(std::span<const std::string> inputs, const WordMap& map);

struct ExemplarProvenance {
    RecordId id;
    std::size_t shown_label = 0;

    bool operator==(const ExemplarProvenance&) const = default;
};

struct RenderedPrompt {
    std::string text;
    std::vector<ExemplarProvenance> exemplar_provenance;
    std::size_t expected_label_index = 0;
    std::size_t word_map_size = 0;
};

/// Joins the exemplars rendered through the template and target set,
/// then appends the query for `eval_example`. Inputs are used as given.
RenderedPrompt render_prompt(const PromptConfig& config, std::span<const ShownExemplar> exemplars,
                             const Example& eval_example);

/// Full pipeline for one evaluation instance: flip, then remap the inputs
/// of exemplars and eval example with one per-prompt word map, then render.
RenderedPrompt forge_prompt(const PromptConfig& config, const EvalInstance& instance,
                            std::size_t class_count);

/// Inverse of rendering, used by the mock learners to read a prompt back.
struct ParsedPrompt {
    std::vector<std::pair<std::string, std::string>> exemplars;  // (input, label)
    std::string query_input;
};

ParsedPrompt parse_prompt(std::string_view text, const PromptTemplate& tmpl);

}  // namespace iclprobe
