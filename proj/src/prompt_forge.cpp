#include "iclprobe/prompt_forge.hpp"

#include "iclprobe/error.hpp"
#include "iclprobe/random.hpp"
#include "iclprobe/text.hpp"

#include <array>
#include <cctype>
#include <set>

namespace iclprobe {

namespace {

constexpr std::string_view kInput = "[input]";
constexpr std::string_view kLabel = "[label]";

constexpr std::array<std::string_view, 6> kFooBar = {"Foo", "Bar", "Baz", "Qux", "Quux", "Corge"};
constexpr std::array<std::string_view, 6> kFruit = {"apple", "banana", "cherry",
                                                    "grape", "mango",  "orange"};

void check_proportion(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw PreconditionError(std::string(what) + " must lie in [0, 1], got " + std::to_string(p));
    }
}

// Pattern split around its placeholders.
struct ExemplarParts {
    std::string_view prefix, middle, suffix;
};
struct QueryParts {
    std::string_view prefix, suffix;
};

ExemplarParts exemplar_parts(const PromptTemplate& t) {
    std::string_view p = t.exemplar_pattern;
    const auto in = p.find(kInput);
    const auto lb = p.find(kLabel);
    return {p.substr(0, in), p.substr(in + kInput.size(), lb - in - kInput.size()),
            p.substr(lb + kLabel.size())};
}

QueryParts query_parts(const PromptTemplate& t) {
    std::string_view q = t.query_pattern;
    const auto in = q.find(kInput);
    return {q.substr(0, in), q.substr(in + kInput.size())};
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }
bool ends_with(std::string_view s, std::string_view p) {
    return s.size() >= p.size() && s.substr(s.size() - p.size()) == p;
}

}  // namespace

void TargetSet::validate() const {
    if (targets.size() < 2) {
        throw InputError("target set '" + name + "' needs at least two targets");
    }
    std::set<std::string_view> seen;
    for (const auto& t : targets) {
        if (!seen.insert(t).second) {
            throw InputError("target set '" + name + "' repeats target '" + t + "'");
        }
    }
}

TargetSet TargetSet::reverse() const {
    TargetSet out = *this;
    out.reversed = !reversed;
    constexpr std::string_view suffix = "-reversed";
    if (ends_with(out.name, suffix)) {
        out.name.resize(out.name.size() - suffix.size());
    } else {
        out.name += suffix;
    }
    return out;
}

TargetSet natural_targets(const TaskSpec& spec) {
    return TargetSet{"natural", spec.label_names, false};
}

TargetSet builtin_target_set(std::string_view name, const TaskSpec& spec) {
    constexpr std::string_view suffix = "-reversed";
    if (ends_with(name, suffix)) {
        return builtin_target_set(name.substr(0, name.size() - suffix.size()), spec).reverse();
    }
    const std::size_t n = spec.class_count();
    auto too_many = [&](std::size_t limit) {
        if (n > limit) {
            throw InputError("target set '" + std::string(name) + "' supports at most " +
                             std::to_string(limit) + " classes, task '" + spec.name + "' has " +
                             std::to_string(n));
        }
    };
    TargetSet out{std::string(name), {}, false};
    if (name == "natural") {
        out.targets = spec.label_names;
    } else if (name == "foobar") {
        too_many(kFooBar.size());
        out.targets.assign(kFooBar.begin(), kFooBar.begin() + static_cast<std::ptrdiff_t>(n));
    } else if (name == "fruit") {
        too_many(kFruit.size());
        out.targets.assign(kFruit.begin(), kFruit.begin() + static_cast<std::ptrdiff_t>(n));
    } else if (name == "numeric") {
        too_many(10);
        for (std::size_t i = 0; i < n; ++i) out.targets.push_back(std::to_string(i));
    } else if (name == "alpha") {
        too_many(26);
        for (std::size_t i = 0; i < n; ++i) out.targets.emplace_back(1, static_cast<char>('A' + i));
    } else {
        throw InputError("unknown target set '" + std::string(name) + "'");
    }
    return out;
}

std::string apply_target_set(std::size_t label_index, const TargetSet& targets) {
    const std::size_t n = targets.targets.size();
    if (label_index >= n) {
        throw PreconditionError("label index " + std::to_string(label_index) +
                                " out of range for target set '" + targets.name + "'");
    }
    return targets.targets[targets.reversed ? n - 1 - label_index : label_index];
}

void PromptTemplate::validate() const {
    auto fail = [&](const std::string& why) {
        throw InputError("template '" + name + "': " + why);
    };
    if (text::count_occurrences(exemplar_pattern, kInput) != 1 ||
        text::count_occurrences(exemplar_pattern, kLabel) != 1) {
        fail("exemplar pattern must contain [input] and [label] exactly once");
    }
    if (exemplar_pattern.find(kInput) > exemplar_pattern.find(kLabel)) {
        fail("[input] must precede [label] in the exemplar pattern");
    }
    if (text::count_occurrences(query_pattern, kInput) != 1 ||
        text::count_occurrences(query_pattern, kLabel) != 0) {
        fail("query pattern must contain [input] exactly once and no [label]");
    }
    if (separator.empty()) fail("separator must not be empty");
    if (exemplar_parts(*this).middle.empty()) fail("[input] and [label] must be delimited");
    if (input_newline.empty()) fail("input_newline must not be empty");
}

PromptTemplate default_template() { return builtin_template("input-output"); }

std::vector<std::string> builtin_template_names() {
    return {"input-output",    "arrow", "comma",         "question-answer",
            "student-teacher", "q-a",   "sst2-semantic", "trec-semantic",
            "rte-semantic"};
}

PromptTemplate builtin_template(std::string_view name) {
    auto two_line = [&](std::string_view in, std::string_view out) {
        const std::string i(in), o(out);
        return PromptTemplate{std::string(name), i + ": [input]\n" + o + ": [label]",
                              i + ": [input]\n" + o + ":", "\n\n", "\n"};
    };
    if (name == "input-output") return two_line("Input", "Output");
    if (name == "question-answer") return two_line("Question", "Answer");
    if (name == "student-teacher") return two_line("Student", "Teacher");
    if (name == "q-a") return two_line("Q", "A");
    if (name == "sst2-semantic") return two_line("Review", "Sentiment");
    if (name == "trec-semantic") return two_line("Question", "Answer Type");
    if (name == "rte-semantic") {
        auto t = two_line("Premise", "Answer");
        t.input_newline = "\nHypothesis: ";
        return t;
    }
    if (name == "arrow") return {"arrow", "[input]->[label]", "[input]->", "\n\n", "\n"};
    if (name == "comma") return {"comma", "[input], [label]", "[input],", "\n\n", "\n"};
    throw InputError("unknown template '" + std::string(name) + "'");
}

void PromptConfig::validate() const {
    prompt_template.validate();
    target_set.validate();
    check_proportion(flip_proportion, "flip proportion");
    check_proportion(remap_proportion, "remap proportion");
}

std::vector<ShownExemplar> as_shown(std::span<const Example> exemplars) {
    std::vector<ShownExemplar> out;
    out.reserve(exemplars.size());
    for (const auto& ex : exemplars) out.push_back(ShownExemplar{ex, ex.label});
    return out;
}

std::vector<ShownExemplar> flip_labels(std::span<const ShownExemplar> exemplars,
                                       double flip_proportion, std::uint64_t seed,
                                       std::size_t class_count) {
    check_proportion(flip_proportion, "flip proportion");
    std::vector<ShownExemplar> out(exemplars.begin(), exemplars.end());
    if (flip_proportion == 0.0) return out;
    if (class_count != 2) {
        throw PreconditionError("label flipping needs a binary task, this one has " +
                                std::to_string(class_count) + " classes");
    }
    Rng rng(seed);
    const auto count = proportion_count(flip_proportion, out.size());
    for (std::size_t idx : rng.sample_indices(out.size(), count)) {
        out[idx].shown_label = 1 - out[idx].shown_label;
    }
    return out;
}

WordMap::WordMap(Entries entries)
    : entries_(std::move(entries)) {
    for (const auto& [from, to] : entries_) {
        if (from == to) {
            throw PreconditionError("word map sends '" + from + "' to itself");
        }
    }
}

std::optional<std::string_view> WordMap::find(std::string_view word) const {
    auto it = entries_.find(word);
    if (it == entries_.end()) return std::nullopt;
    return std::string_view(it->second);
}

std::vector<std::string> prompt_vocabulary(std::span<const std::string> inputs) {
    std::set<std::string, std::less<>> words;
    for (const auto& input : inputs) {
        for (auto tok : text::tokens(input)) {
            if (!words.contains(tok)) words.emplace(tok);
        }
    }
    return {words.begin(), words.end()};
}

WordMap build_word_map(std::span<const std::string> inputs, double remap_proportion,
                       std::uint64_t seed) {
    check_proportion(remap_proportion, "remap proportion");
    if (remap_proportion == 0.0) return {};
    const auto vocab = prompt_vocabulary(inputs);
    if (vocab.size() < 2) {
        throw PreconditionError("word remapping needs at least 2 distinct words, prompt has " +
                                std::to_string(vocab.size()));
    }
    Rng rng(seed);
    std::map<std::string, std::string, std::less<>> entries;
    const auto count = proportion_count(remap_proportion, vocab.size());
    for (std::size_t src : rng.sample_indices(vocab.size(), count)) {
        auto dst = static_cast<std::size_t>(rng.below(vocab.size() - 1));
        if (dst >= src) ++dst;
        entries.emplace(vocab[src], vocab[dst]);
    }
    return WordMap(std::move(entries));
}

std::string remap_input(std::string_view input, const WordMap& map) {
    if (map.empty()) return std::string(input);
    std::string out;
    out.reserve(input.size());
    std::size_t i = 0;
    auto space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (i < input.size()) {
        if (space(input[i])) {
            out += input[i++];
            continue;
        }
        std::size_t start = i;
        while (i < input.size() && !space(input[i])) ++i;
        const auto word = input.substr(start, i - start);
        if (auto image = map.find(word)) {
            out += *image;
        } else {
            out += word;
        }
    }
    return out;
}

std::vector<std::string> remap_inputs(std::span<const std::string> inputs, const WordMap& map) {
    std::vector<std::string> out;
    out.reserve(inputs.size());
    for (const auto& input : inputs) out.push_back(remap_input(input, map));
    return out;
}

RenderedPrompt render_prompt(const PromptConfig& config, std::span<const ShownExemplar> exemplars,
                             const Example& eval_example) {
    const auto& tmpl = config.prompt_template;
    tmpl.validate();
    const auto ex = exemplar_parts(tmpl);
    const auto q = query_parts(tmpl);
    auto shown_input = [&](const std::string& input) {
        return tmpl.input_newline == "\n" ? input
                                          : text::replace_all(input, "\n", tmpl.input_newline);
    };

    RenderedPrompt out;
    out.expected_label_index = eval_example.label;
    for (const auto& item : exemplars) {
        out.text.append(ex.prefix);
        out.text.append(shown_input(item.example.input));
        out.text.append(ex.middle);
        out.text.append(apply_target_set(item.shown_label, config.target_set));
        out.text.append(ex.suffix);
        out.text.append(tmpl.separator);
        out.exemplar_provenance.push_back({item.example.id, item.shown_label});
    }
    out.text.append(q.prefix);
    out.text.append(shown_input(eval_example.input));
    out.text.append(q.suffix);
    return out;
}

RenderedPrompt forge_prompt(const PromptConfig& config, const EvalInstance& instance,
                            std::size_t class_count) {
    config.validate();
    if (config.target_set.targets.size() != class_count) {
        throw InputError("target set '" + config.target_set.name + "' has " +
                         std::to_string(config.target_set.targets.size()) + " targets, task has " +
                         std::to_string(class_count) + " classes");
    }
    const auto prompt_seed = derive_seed(config.seed, instance.draw_seed);
    auto shown = flip_labels(as_shown(instance.exemplars), config.flip_proportion,
                             derive_seed(prompt_seed, 1), class_count);

    Example eval = instance.eval_example;
    std::size_t map_size = 0;
    if (config.remap_proportion > 0.0) {
        std::vector<std::string> inputs;
        inputs.reserve(shown.size() + 1);
        for (const auto& s : shown) inputs.push_back(s.example.input);
        inputs.push_back(eval.input);
        const auto map = build_word_map(inputs, config.remap_proportion, derive_seed(prompt_seed, 2));
        map_size = map.size();
        for (auto& s : shown) s.example.input = remap_input(s.example.input, map);
        eval.input = remap_input(eval.input, map);
    }
    auto rendered = render_prompt(config, shown, eval);
    rendered.word_map_size = map_size;
    return rendered;
}

ParsedPrompt parse_prompt(std::string_view prompt, const PromptTemplate& tmpl) {
    tmpl.validate();
    const auto ex = exemplar_parts(tmpl);
    const auto q = query_parts(tmpl);
    auto restore = [&](std::string_view s) {
        return tmpl.input_newline == "\n" ? std::string(s)
                                          : text::replace_all(s, tmpl.input_newline, "\n");
    };
    auto fail = [&](const std::string& why) {
        throw InputError("prompt does not match template '" + tmpl.name + "': " + why);
    };

    std::vector<std::string_view> segments;
    std::size_t start = 0;
    for (;;) {
        const auto hit = prompt.find(tmpl.separator, start);
        if (hit == std::string_view::npos) {
            segments.push_back(prompt.substr(start));
            break;
        }
        segments.push_back(prompt.substr(start, hit - start));
        start = hit + tmpl.separator.size();
    }

    ParsedPrompt out;
    for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
        auto seg = segments[i];
        if (!starts_with(seg, ex.prefix) || !ends_with(seg, ex.suffix) ||
            seg.size() < ex.prefix.size() + ex.suffix.size()) {
            fail("exemplar " + std::to_string(i) + " is malformed");
        }
        seg = seg.substr(ex.prefix.size(), seg.size() - ex.prefix.size() - ex.suffix.size());
        const auto cut = seg.rfind(ex.middle);
        if (cut == std::string_view::npos) {
            fail("exemplar " + std::to_string(i) + " has no label delimiter");
        }
        out.exemplars.emplace_back(restore(seg.substr(0, cut)),
                                   std::string(seg.substr(cut + ex.middle.size())));
    }
    auto last = segments.back();
    if (!starts_with(last, q.prefix) || !ends_with(last, q.suffix) ||
        last.size() < q.prefix.size() + q.suffix.size()) {
        fail("query is malformed");
    }
    out.query_input =
        restore(last.substr(q.prefix.size(), last.size() - q.prefix.size() - q.suffix.size()));
    return out;
}

}  // namespace iclprobe
