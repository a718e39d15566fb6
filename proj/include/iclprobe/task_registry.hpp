#pragma once

#include "iclprobe/task_corpus.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iclprobe {

/// Label vocabularies of the known tasks (sst2, subj, trec, qqp, fp,
/// ethos, rte, rt, linclass, marker). Indices follow the usual dataset
/// label ids, e.g. sst2 0 = negative, 1 = positive.
std::optional<TaskSpec> builtin_task_spec(std::string_view name);

// Synthetic marker task: eight random filler pseudo-words plus exactly one
// marker word ("blue" = class 0, "red" = class 1) at a random position.

TaskSpec marker_task_spec();
std::vector<Example> make_marker_records(std::size_t n_records, std::uint64_t seed);
TaskCorpus make_marker_task(std::size_t n_records, std::uint64_t seed);

/// Prior of the marker task: class of the marker word the input carries.
std::size_t marker_prior(std::string_view input);

/// One entry of a task manifest (JSON):
///
///     {"tasks": [{"name": "sst2", "labels": [...], "aliases": [[...], ...],
///                 "file": "tasks/sst2.tsv", "split_seed": 0}]}
///
/// Either `file` (split 80/20 by `split_seed`) or `train_file` plus
/// `validation_file` is given. `generator: "marker"` with `records` builds
/// the synthetic marker task instead. `labels` may be omitted for a
/// built-in task name. Relative paths resolve against the manifest.
struct TaskEntry {
    TaskSpec spec;
    std::filesystem::path file;
    std::filesystem::path train_file;
    std::filesystem::path validation_file;
    std::uint64_t split_seed = 0;
    std::string generator;
    std::size_t generator_records = 600;
};

class TaskRegistry {
public:
    /// Registry holding only the generated marker task.
    TaskRegistry();

    static TaskRegistry from_manifest(const std::filesystem::path& manifest);

    void add(TaskEntry entry);
    bool contains(std::string_view name) const;
    const TaskEntry& entry(std::string_view name) const;
    std::vector<std::string> names() const;

    TaskCorpus load(std::string_view name) const;

private:
    std::map<std::string, TaskEntry, std::less<>> entries_;
};

}  // namespace iclprobe
