#include "iclprobe/task_registry.hpp"

#include "iclprobe/error.hpp"
#include "iclprobe/random.hpp"
#include "iclprobe/text.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace iclprobe {

namespace {

using json = nlohmann::json;

TaskSpec make_spec(std::string name, std::vector<std::string> labels,
                   std::vector<std::vector<std::string>> aliases, std::string notes = {}) {
    return TaskSpec{std::move(name), std::move(labels), std::move(aliases), std::move(notes)};
}

constexpr std::string_view kSyllableOnsets = "bdfghklmnprstvz";
constexpr std::string_view kSyllableVowels = "aeiou";

std::string filler_word(Rng& rng) {
    const auto syllables = 2 + rng.below(3);
    std::string word;
    for (std::uint64_t i = 0; i < syllables; ++i) {
        word += kSyllableOnsets[rng.below(kSyllableOnsets.size())];
        word += kSyllableVowels[rng.below(kSyllableVowels.size())];
    }
    return word;
}

}  // namespace

std::optional<TaskSpec> builtin_task_spec(std::string_view name) {
    if (name == "sst2" || name == "rt") {
        return make_spec(std::string(name), {"Negative Sentiment", "Positive Sentiment"},
                         {{"negative", "neg"}, {"positive", "pos"}});
    }
    if (name == "subj") {
        return make_spec("subj", {"Objective Sentence", "Subjective Sentence"},
                         {{"objective", "obj"}, {"subjective", "subj"}});
    }
    if (name == "trec") {
        return make_spec("trec",
                         {"Abbreviation", "Entity", "Description and Abstract Concept",
                          "Human Being", "Location", "Numeric Value"},
                         {{"ABBR"}, {"ENTY"}, {"DESC"}, {"HUM"}, {"LOC"}, {"NUM"}},
                         "coarse labels");
    }
    if (name == "qqp") {
        return make_spec("qqp", {"Not a duplicate", "Duplicate"},
                         {{"not_duplicate"}, {"duplicate"}},
                         "question pairs joined by a newline");
    }
    if (name == "fp") {
        return make_spec("fp", {"Negative", "Positive"}, {}, "sentences_allagree, binary");
    }
    if (name == "ethos") {
        return make_spec("ethos", {"Not Hate Speech", "Hate Speech"},
                         {{"not_hate", "no_hate"}, {"hate"}}, "binary subset");
    }
    if (name == "rte") {
        return make_spec("rte", {"Entails", "Does not entail"},
                         {{"entailment"}, {"not_entailment"}},
                         "premise and hypothesis joined by a newline");
    }
    if (name == "linclass") {
        return make_spec("linclass", {"Foo", "Bar"}, {{"below", "negative"}, {"above", "positive"}},
                         "synthetic linear classification");
    }
    if (name == "marker") {
        return marker_task_spec();
    }
    return std::nullopt;
}

TaskSpec marker_task_spec() {
    return make_spec("marker", {"Blue Marker", "Red Marker"}, {{"blue"}, {"red"}},
                     "synthetic separable task");
}

std::vector<Example> make_marker_records(std::size_t n_records, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Example> out;
    out.reserve(n_records);
    for (std::size_t i = 0; i < n_records; ++i) {
        const std::size_t label = rng.below(2);
        std::vector<std::string> words;
        for (int w = 0; w < 8; ++w) words.push_back(filler_word(rng));
        const auto slot = static_cast<std::ptrdiff_t>(rng.below(words.size() + 1));
        words.insert(words.begin() + slot, label == 0 ? "blue" : "red");
        std::string input;
        for (const auto& w : words) {
            if (!input.empty()) input += ' ';
            input += w;
        }
        out.push_back(Example{RecordId{"marker", i}, std::move(input), label});
    }
    return out;
}

TaskCorpus make_marker_task(std::size_t n_records, std::uint64_t seed) {
    auto records = make_marker_records(n_records, seed);
    auto parts = split_corpus(records, derive_seed(seed, 0));
    return TaskCorpus(marker_task_spec(), std::move(parts.train), std::move(parts.validation));
}

std::size_t marker_prior(std::string_view input) {
    for (auto tok : text::tokens(input)) {
        if (tok == "blue") return 0;
        if (tok == "red") return 1;
    }
    throw InputError("marker prior: input carries no marker word");
}

TaskRegistry::TaskRegistry() {
    TaskEntry marker;
    marker.spec = marker_task_spec();
    marker.generator = "marker";
    add(std::move(marker));
}

TaskRegistry TaskRegistry::from_manifest(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) {
        throw InputError("cannot open task manifest " + manifest.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("task manifest " + manifest.string() + ": " + e.what());
    }
    const auto base = manifest.parent_path();
    auto resolve = [&](const json& node, const char* key) -> std::filesystem::path {
        if (!node.contains(key)) return {};
        std::filesystem::path p = node.at(key).get<std::string>();
        return p.is_absolute() ? p : base / p;
    };

    TaskRegistry registry;
    if (!doc.contains("tasks") || !doc["tasks"].is_array()) {
        throw InputError("task manifest " + manifest.string() + " has no 'tasks' array");
    }
    for (const auto& node : doc["tasks"]) {
        try {
            TaskEntry entry;
            const auto name = node.at("name").get<std::string>();
            if (node.contains("labels")) {
                entry.spec.name = name;
                entry.spec.label_names = node.at("labels").get<std::vector<std::string>>();
                if (node.contains("aliases")) {
                    entry.spec.label_aliases =
                        node.at("aliases").get<std::vector<std::vector<std::string>>>();
                }
            } else if (auto builtin = builtin_task_spec(name)) {
                entry.spec = *builtin;
            } else {
                throw InputError("task '" + name + "' declares no labels");
            }
            entry.spec.notes = node.value("notes", entry.spec.notes);
            entry.spec.validate();
            entry.file = resolve(node, "file");
            entry.train_file = resolve(node, "train_file");
            entry.validation_file = resolve(node, "validation_file");
            entry.split_seed = node.value("split_seed", std::uint64_t{0});
            entry.generator = node.value("generator", std::string{});
            entry.generator_records = node.value("records", entry.generator_records);
            const bool single = !entry.file.empty();
            const bool pair = !entry.train_file.empty() && !entry.validation_file.empty();
            if (entry.generator.empty() && single == pair) {
                throw InputError("task '" + name +
                                 "' needs either 'file' or 'train_file' + 'validation_file'");
            }
            registry.add(std::move(entry));
        } catch (const json::exception& e) {
            throw InputError("task manifest " + manifest.string() + ": " + e.what());
        }
    }
    return registry;
}

void TaskRegistry::add(TaskEntry entry) {
    auto name = entry.spec.name;
    entries_.insert_or_assign(std::move(name), std::move(entry));
}

bool TaskRegistry::contains(std::string_view name) const { return entries_.contains(name); }

const TaskEntry& TaskRegistry::entry(std::string_view name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw InputError("unknown task '" + std::string(name) + "'");
    }
    return it->second;
}

std::vector<std::string> TaskRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : entries_) out.push_back(name);
    return out;
}

TaskCorpus TaskRegistry::load(std::string_view name) const {
    const auto& e = entry(name);
    if (e.generator == "marker") {
        auto records = make_marker_records(e.generator_records, e.split_seed);
        for (auto& r : records) r.id.source = e.spec.name;
        auto parts = split_corpus(records, derive_seed(e.split_seed, 0));
        return TaskCorpus(e.spec, std::move(parts.train), std::move(parts.validation));
    }
    if (!e.generator.empty()) {
        throw InputError("task '" + e.spec.name + "': unknown generator '" + e.generator + "'");
    }
    if (!e.file.empty()) {
        return load_task(e.file, e.spec, e.split_seed);
    }
    return load_task(e.train_file, e.validation_file, e.spec);
}

}  // namespace iclprobe
