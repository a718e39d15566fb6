#include "iclprobe/experiment.hpp"

#include "iclprobe/digest.hpp"
#include "iclprobe/error.hpp"
#include "iclprobe/random.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <thread>

namespace iclprobe {

using json = nlohmann::json;

namespace {

double parse_number(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        throw InputError("expected a number, got '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string> target_strings(const TargetSet& targets) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < targets.targets.size(); ++i) {
        out.push_back(apply_target_set(i, targets));
    }
    return out;
}

}  // namespace

std::string_view to_string(EvalLabelMode mode) {
    return mode == EvalLabelMode::flipped ? "flipped" : "unflipped";
}

EvalLabelMode parse_eval_label_mode(std::string_view s) {
    if (s == "unflipped") return EvalLabelMode::unflipped;
    if (s == "flipped") return EvalLabelMode::flipped;
    throw InputError("unknown eval label mode '" + std::string(s) + "'");
}

void ExperimentConfig::validate(const TaskSpec& spec) const {
    model.validate();
    prompt.validate();
    if (prompt.target_set.targets.size() != spec.class_count()) {
        throw InputError("target set '" + prompt.target_set.name + "' does not fit task '" +
                         spec.name + "'");
    }
    if (eval_label_mode == EvalLabelMode::flipped && spec.class_count() != 2) {
        throw PreconditionError("flipped evaluation labels need a binary task");
    }
    if (prompt.flip_proportion > 0.0 && spec.class_count() != 2) {
        throw PreconditionError("label flipping needs a binary task, '" + spec.name + "' has " +
                                std::to_string(spec.class_count()) + " classes");
    }
    if (workers == 0) throw InputError("workers must be at least 1");
}

json ExperimentConfig::to_json() const {
    const auto& t = prompt.prompt_template;
    return json{
        {"task", task},
        {"model",
         {{"kind", to_string(model.kind)},
          {"endpoint_url", model.endpoint_url},
          {"model_name", model.model_name},
          {"max_tokens", model.params.max_tokens},
          {"temperature", model.params.temperature},
          {"stop", model.params.stop},
          {"response", model.fixed_response},
          {"k_neighbors", model.k_neighbors},
          {"prior", model.prior_name}}},
        {"template",
         {{"name", t.name},
          {"exemplar", t.exemplar_pattern},
          {"query", t.query_pattern},
          {"separator", t.separator},
          {"input_newline", t.input_newline}}},
        {"target_set",
         {{"name", prompt.target_set.name},
          {"targets", prompt.target_set.targets},
          {"reversed", prompt.target_set.reversed}}},
        {"k", prompt.k_per_class},
        {"p_flip", prompt.flip_proportion},
        {"p_remap", prompt.remap_proportion},
        {"prompt_seed", prompt.seed},
        {"n_eval", n_eval},
        {"eval_label_mode", to_string(eval_label_mode)},
        {"seed", experiment_seed},
    };
}

std::string ExperimentConfig::digest() const { return sha256_hex(to_json().dump()).substr(0, 16); }

std::size_t ResultTable::correct_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const RunRecord& r) { return r.correct; }));
}

std::vector<Example> eval_set_for(const ExperimentConfig& config, const TaskCorpus& corpus) {
    return sample_eval_set(corpus.validation(), config.n_eval, derive_seed(config.experiment_seed, 0));
}

ResultTable run_experiment(const ExperimentConfig& config, const TaskCorpus& corpus,
                           ModelGateway& gateway) {
    const auto& spec = corpus.spec();
    config.validate(spec);
    const auto eval_set = eval_set_for(config, corpus);
    const PromptContext context{config.prompt.prompt_template, config.prompt.target_set};
    const auto labels = target_strings(config.prompt.target_set);

    std::vector<RunRecord> records(eval_set.size());
    auto evaluate = [&](std::size_t i) {
        RunRecord& rec = records[i];
        rec.eval_index = i;
        rec.eval_id = eval_set[i].id;
        rec.expected_label = eval_set[i].label;
        rec.scored_label = config.eval_label_mode == EvalLabelMode::flipped
                               ? 1 - rec.expected_label
                               : rec.expected_label;
        const auto draw_seed = derive_seed(config.experiment_seed, i + 1);
        const auto instance = make_eval_instance(corpus, eval_set[i], config.prompt.k_per_class,
                                                 draw_seed);
        const auto prompt = forge_prompt(config.prompt, instance, spec.class_count());
        rec.prompt_digest = sha256_hex(prompt.text);
        try {
            rec.prediction = gateway.predict_label(prompt, context, labels);
            rec.correct = rec.prediction.matched_label_index == rec.scored_label;
        } catch (const Error& e) {
            rec.skipped = true;
            rec.skip_reason = std::string(e.category()) + ": " + e.what();
        }
    };

    const std::size_t workers = std::min(config.workers, std::max<std::size_t>(eval_set.size(), 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < eval_set.size(); ++i) evaluate(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        {
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (std::size_t i = next++; i < eval_set.size(); i = next++) {
                        try {
                            evaluate(i);
                        } catch (...) {
                            std::lock_guard lock(failure_mutex);
                            if (!failure) failure = std::current_exception();
                        }
                    }
                });
            }
        }
        if (failure) std::rethrow_exception(failure);
    }

    ResultTable table;
    table.config_digest = config.digest();
    table.dataset = config.task.empty() ? spec.name : config.task;
    table.model = config.model.display_name();
    table.records = std::move(records);
    table.skip_count = static_cast<std::size_t>(std::count_if(
        table.records.begin(), table.records.end(), [](const RunRecord& r) { return r.skipped; }));
    if (!table.records.empty() && table.skip_count == table.records.size()) {
        throw Error("every evaluation instance was skipped; first reason: " +
                    table.records.front().skip_reason);
    }
    const auto scored = table.scored_count();
    table.accuracy = scored == 0 ? 0.0
                                 : static_cast<double>(table.correct_count()) /
                                       static_cast<double>(scored);
    return table;
}

ResultTable run_experiment(const ExperimentConfig& config, const TaskCorpus& corpus) {
    ModelGateway gateway(config.model);
    return run_experiment(config, corpus, gateway);
}

std::string_view to_string(SweepAxis axis) {
    switch (axis) {
    case SweepAxis::k: return "k";
    case SweepAxis::p_flip: return "p_flip";
    case SweepAxis::p_remap: return "p_remap";
    case SweepAxis::target_set: return "target_set";
    case SweepAxis::prompt_template: return "template";
    }
    return "?";
}

SweepAxis parse_sweep_axis(std::string_view s) {
    for (auto axis : {SweepAxis::k, SweepAxis::p_flip, SweepAxis::p_remap, SweepAxis::target_set,
                      SweepAxis::prompt_template}) {
        if (to_string(axis) == s) return axis;
    }
    throw InputError("unknown sweep axis '" + std::string(s) + "'");
}

ExperimentConfig with_axis_value(const ExperimentConfig& base, SweepAxis axis,
                                 std::string_view value, const TaskSpec& spec) {
    ExperimentConfig out = base;
    switch (axis) {
    case SweepAxis::k: {
        const double k = parse_number(value);
        if (k < 0 || k != static_cast<double>(static_cast<std::size_t>(k))) {
            throw InputError("k must be a non-negative integer, got '" + std::string(value) + "'");
        }
        out.prompt.k_per_class = static_cast<std::size_t>(k);
        break;
    }
    case SweepAxis::p_flip: out.prompt.flip_proportion = parse_number(value); break;
    case SweepAxis::p_remap: out.prompt.remap_proportion = parse_number(value); break;
    case SweepAxis::target_set: out.prompt.target_set = builtin_target_set(value, spec); break;
    case SweepAxis::prompt_template: out.prompt.prompt_template = builtin_template(value); break;
    }
    return out;
}

std::vector<SweepPoint> sweep(const ExperimentConfig& base, SweepAxis axis,
                              std::span<const std::string> values, const TaskCorpus& corpus,
                              ModelGateway& gateway) {
    std::vector<SweepPoint> out;
    for (const auto& value : values) {
        SweepPoint point{value, std::nullopt, {}};
        try {
            auto config = with_axis_value(base, axis, value, corpus.spec());
            auto table = run_experiment(config, corpus, gateway);
            table.axis = std::string(to_string(axis));
            table.axis_value = value;
            point.table = std::move(table);
        } catch (const Error& e) {
            point.error = std::string(e.category()) + ": " + e.what();
        }
        out.push_back(std::move(point));
    }
    return out;
}

}  // namespace iclprobe
