#include "iclprobe/task_corpus.hpp"

#include "iclprobe/error.hpp"
#include "iclprobe/random.hpp"
#include "iclprobe/text.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

namespace iclprobe {

void TaskSpec::validate() const {
    if (name.empty()) {
        throw InputError("task spec has no name");
    }
    if (label_names.size() < 2) {
        throw InputError("task '" + name + "' needs at least two labels");
    }
    std::set<std::string> seen;
    for (const auto& label : label_names) {
        if (!seen.insert(label).second) {
            throw InputError("task '" + name + "' declares label '" + label + "' twice");
        }
    }
    if (label_aliases.size() > label_names.size()) {
        throw InputError("task '" + name + "' has more alias groups than labels");
    }
}

std::optional<std::size_t> TaskSpec::resolve_label(std::string_view raw) const {
    const auto key = text::trim(raw);
    for (std::size_t i = 0; i < label_names.size(); ++i) {
        if (label_names[i] == key) return i;
    }
    const auto folded = text::ascii_lower(key);
    for (std::size_t i = 0; i < label_names.size(); ++i) {
        if (text::ascii_lower(label_names[i]) == folded) return i;
    }
    for (std::size_t i = 0; i < label_aliases.size(); ++i) {
        for (const auto& alias : label_aliases[i]) {
            if (text::ascii_lower(alias) == folded) return i;
        }
    }
    std::size_t index = 0;
    auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), index);
    if (ec == std::errc{} && ptr == key.data() + key.size() && !key.empty() &&
        index < label_names.size()) {
        return index;
    }
    return std::nullopt;
}

TaskCorpus::TaskCorpus(TaskSpec spec, std::vector<Example> train, std::vector<Example> validation)
    : spec_(std::move(spec)), train_(std::move(train)), validation_(std::move(validation)) {
    spec_.validate();
    std::set<RecordId> train_ids;
    for (const auto& ex : train_) {
        if (ex.label >= spec_.class_count()) {
            throw InputError("task '" + spec_.name + "': label index out of range");
        }
        train_ids.insert(ex.id);
    }
    for (const auto& ex : validation_) {
        if (ex.label >= spec_.class_count()) {
            throw InputError("task '" + spec_.name + "': label index out of range");
        }
        if (train_ids.contains(ex.id)) {
            throw InputError("task '" + spec_.name + "': record " + ex.id.source + "#" +
                             std::to_string(ex.id.index) + " is in both train and validation");
        }
    }
}

std::vector<Example> load_records(const std::filesystem::path& path, const TaskSpec& spec) {
    spec.validate();
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open record file " + path.string());
    }
    std::vector<Example> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto fields = text::split(line, '\t');
        const auto where = path.string() + ":" + std::to_string(line_no);
        if (fields.size() != 2) {
            throw InputError(where + ": expected 2 tab-separated fields, found " +
                             std::to_string(fields.size()));
        }
        auto input = text::unescape_field(fields[0]);
        if (text::trim(input).empty()) {
            throw InputError(where + ": empty input text");
        }
        const auto label = spec.resolve_label(fields[1]);
        if (!label) {
            throw InputError(where + ": label '" + fields[1] + "' is not in task '" + spec.name +
                             "'");
        }
        out.push_back(Example{RecordId{spec.name, out.size()}, std::move(input), *label});
    }
    return out;
}

TaskCorpus load_task(const std::filesystem::path& path, const TaskSpec& spec,
                     std::uint64_t split_seed) {
    auto records = load_records(path, spec);
    auto parts = split_corpus(records, split_seed);
    return TaskCorpus(spec, std::move(parts.train), std::move(parts.validation));
}

TaskCorpus load_task(const std::filesystem::path& train_path,
                     const std::filesystem::path& validation_path, const TaskSpec& spec) {
    auto train = load_records(train_path, spec);
    auto validation = load_records(validation_path, spec);
    // Both files index from zero; keep identities disjoint.
    for (auto& ex : validation) ex.id.index += train.size();
    return TaskCorpus(spec, std::move(train), std::move(validation));
}

CorpusSplit split_corpus(std::span<const Example> examples, std::uint64_t seed) {
    const std::size_t n = examples.size();
    if (n < 5) {
        throw PreconditionError("split_corpus needs at least 5 examples, got " + std::to_string(n));
    }
    const std::size_t n_train = proportion_count(0.8, n);
    Rng rng(seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<bool> in_train(n, false);
    for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;

    CorpusSplit out;
    out.train.reserve(n_train);
    out.validation.reserve(n - n_train);
    for (std::size_t i = 0; i < n; ++i) {
        (in_train[i] ? out.train : out.validation).push_back(examples[i]);
    }
    return out;
}

std::vector<Example> sample_eval_set(std::span<const Example> validation, std::size_t n_eval,
                                     std::uint64_t seed) {
    if (validation.empty()) {
        throw PreconditionError("cannot sample evaluation examples from an empty validation set");
    }
    const std::size_t take = std::min(n_eval, validation.size());
    Rng rng(seed);
    std::vector<Example> out;
    out.reserve(take);
    for (std::size_t idx : rng.sample_indices(validation.size(), take)) {
        out.push_back(validation[idx]);
    }
    return out;
}

std::vector<Example> sample_exemplars(std::span<const Example> train, const TaskSpec& spec,
                                      std::size_t k_per_class, std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> by_class(spec.class_count());
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (train[i].label >= by_class.size()) {
            throw InputError("exemplar pool has a label outside task '" + spec.name + "'");
        }
        by_class[train[i].label].push_back(i);
    }
    Rng rng(seed);
    std::vector<Example> out;
    out.reserve(k_per_class * spec.class_count());
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        const auto& pool = by_class[c];
        if (pool.size() < k_per_class) {
            throw PreconditionError("class '" + spec.label_names[c] + "' of task '" + spec.name +
                                    "' has " + std::to_string(pool.size()) +
                                    " training examples, need " + std::to_string(k_per_class));
        }
        for (std::size_t pick : rng.sample_indices(pool.size(), k_per_class)) {
            out.push_back(train[pool[pick]]);
        }
    }
    rng.shuffle(out);
    return out;
}

EvalInstance make_eval_instance(const TaskCorpus& corpus, const Example& eval_example,
                                std::size_t k_per_class, std::uint64_t draw_seed) {
    auto exemplars = sample_exemplars(corpus.train(), corpus.spec(), k_per_class, draw_seed);
    for (const auto& ex : exemplars) {
        if (ex.id == eval_example.id) {
            throw PreconditionError("evaluation example " + ex.id.source + "#" +
                                    std::to_string(ex.id.index) + " drawn as its own exemplar");
        }
    }
    return EvalInstance{eval_example, std::move(exemplars), draw_seed};
}

TaskCorpus make_ood_pair(const TaskCorpus& exemplar_task, const TaskCorpus& eval_task,
                         std::optional<std::vector<std::size_t>> correspondence) {
    const auto& src = exemplar_task.spec();
    const auto& dst = eval_task.spec();
    if (src.class_count() != dst.class_count()) {
        throw PreconditionError("cannot pair task '" + src.name + "' (" +
                                std::to_string(src.class_count()) + " classes) with '" + dst.name +
                                "' (" + std::to_string(dst.class_count()) + " classes)");
    }
    if (!correspondence) {
        std::vector<std::size_t> derived;
        for (const auto& label : dst.label_names) {
            auto idx = src.resolve_label(label);
            if (!idx) {
                throw PreconditionError("no label correspondence for '" + label + "' of task '" +
                                        dst.name + "'");
            }
            derived.push_back(*idx);
        }
        correspondence = std::move(derived);
    }
    const auto& map = *correspondence;
    if (map.size() != dst.class_count()) {
        throw PreconditionError("label correspondence must cover every class of '" + dst.name + "'");
    }
    std::vector<bool> hit(src.class_count(), false);
    for (auto target : map) {
        if (target >= hit.size() || hit[target]) {
            throw PreconditionError("label correspondence is not a bijection");
        }
        hit[target] = true;
    }
    std::vector<Example> validation(eval_task.validation().begin(), eval_task.validation().end());
    for (auto& ex : validation) ex.label = map[ex.label];
    return TaskCorpus(src, std::vector<Example>(exemplar_task.train().begin(),
                                                exemplar_task.train().end()),
                      std::move(validation));
}

}  // namespace iclprobe
