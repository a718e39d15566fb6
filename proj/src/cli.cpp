#include "iclprobe/cli.hpp"

#include "iclprobe/config.hpp"
#include "iclprobe/error.hpp"
#include "iclprobe/experiment.hpp"
#include "iclprobe/linclass.hpp"
#include "iclprobe/model_gateway.hpp"
#include "iclprobe/random.hpp"
#include "iclprobe/report.hpp"
#include "iclprobe/task_registry.hpp"
#include "iclprobe/text.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>

namespace iclprobe::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class UsageError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "usage"; }
};

void report_error(std::ostream& err, std::string_view category, std::string_view message) {
    err << json{{"error", category}, {"message", message}}.dump() << '\n';
}

/// Flags shared by `run` and `sweep`; unset flags leave the config alone.
struct ExperimentFlags {
    std::string config;
    std::optional<std::string> task, manifest, model_kind, endpoint, model_name, cache_dir, prior;
    std::optional<std::string> targets, prompt_template, eval_label_mode, output_dir, response;
    std::optional<std::size_t> k, n_eval, workers, k_neighbors;
    std::optional<double> p_flip, p_remap;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App& cmd) {
        cmd.add_option("--config", config, "Experiment config file (JSON)");
        cmd.add_option("--task", task, "Task name from the manifest");
        cmd.add_option("--manifest", manifest, "Task manifest file");
        cmd.add_option("--model-kind", model_kind,
                       "remote | prior_oracle | knn_mapper | majority | fixed");
        cmd.add_option("--endpoint", endpoint, "Completions endpoint URL (remote)");
        cmd.add_option("--model-name", model_name, "Model name sent to the endpoint (remote)");
        cmd.add_option("--cache-dir", cache_dir, "Response cache directory (remote)");
        cmd.add_option("--prior", prior, "Prior of the prior_oracle mock");
        cmd.add_option("--response", response, "Answer of the fixed mock");
        cmd.add_option("--k-neighbors", k_neighbors, "Neighbours consulted by knn_mapper");
        cmd.add_option("--k", k, "In-context exemplars per class (default 16)");
        cmd.add_option("--p-flip", p_flip, "Proportion of exemplar labels flipped");
        cmd.add_option("--p-remap", p_remap, "Proportion of input words remapped");
        cmd.add_option("--targets", targets, "Target set: natural, foobar, numeric, alpha, fruit[-reversed]");
        cmd.add_option("--template", prompt_template, "Prompt template name");
        cmd.add_option("--n-eval", n_eval, "Evaluation examples (default 100)");
        cmd.add_option("--eval-label-mode", eval_label_mode, "unflipped | flipped");
        cmd.add_option("--seed", seed, "Experiment seed");
        cmd.add_option("--output-dir", output_dir, "Results root directory (default results)");
        cmd.add_option("--workers", workers, "Concurrent evaluation workers");
    }

    json settings() const {
        json s = json::object();
        if (!config.empty()) {
            if (!fs::exists(config)) {
                throw UsageError("config file not found: " + config);
            }
            s = load_config_file(config);
        }
        if (!s.contains("model") || !s["model"].is_object()) {
            s["model"] = s.contains("model") ? json{{"kind", s["model"]}} : json::object();
        }
        auto set = [&](json& node, const char* key, const auto& value) {
            if (value) node[key] = *value;
        };
        auto& m = s["model"];
        set(m, "kind", model_kind);
        set(m, "endpoint_url", endpoint);
        set(m, "model_name", model_name);
        if (cache_dir) m["cache_dir"] = fs::absolute(*cache_dir).string();
        set(m, "prior", prior);
        set(m, "response", response);
        set(m, "k_neighbors", k_neighbors);
        set(s, "task", task);
        if (manifest) s["manifest"] = fs::absolute(*manifest).string();
        set(s, "target_set", targets);
        set(s, "template", prompt_template);
        set(s, "eval_label_mode", eval_label_mode);
        set(s, "output_dir", output_dir);
        set(s, "k", k);
        set(s, "n_eval", n_eval);
        set(s, "workers", workers);
        set(s, "p_flip", p_flip);
        set(s, "p_remap", p_remap);
        set(s, "seed", seed);
        return s;
    }
};

/// Manifest lookup: explicit setting, $ICLPROBE_MANIFEST, ./data/tasks.json,
/// then the repository's bundled manifest.
void default_manifest(json& settings) {
    if (settings.contains("manifest")) return;
    if (const char* env = std::getenv("ICLPROBE_MANIFEST"); env && *env) {
        settings["manifest"] = env;
        return;
    }
    for (const fs::path& candidate : {fs::path("data/tasks.json"),
#ifdef ICLPROBE_DATA_DIR
                                     fs::path(ICLPROBE_DATA_DIR) / "tasks.json"
#endif
         }) {
        if (fs::exists(candidate)) {
            settings["manifest"] = candidate.string();
            return;
        }
    }
}

struct Prepared {
    TaskCorpus corpus;
    ExperimentConfig config;
    fs::path output_dir;
};

Prepared prepare(json settings) {
    default_manifest(settings);
    if (!settings.contains("task")) {
        throw UsageError("no task given (use --task or the config key 'task')");
    }
    const auto registry = registry_for(settings);
    auto corpus = registry.load(settings["task"].get<std::string>());
    auto config = resolve_experiment(settings, corpus.spec());
    fs::path out = settings.value("output_dir", std::string("results"));
    return {std::move(corpus), std::move(config), std::move(out)};
}

int cmd_run(const ExperimentFlags& flags, std::ostream& out) {
    auto p = prepare(flags.settings());
    ModelGateway gateway(p.config.model);
    const auto table = run_experiment(p.config, p.corpus, gateway);
    const auto dir = write_result_dir(p.output_dir, p.config, table);
    const std::vector<ResultTable> tables{table};
    out << format_report(aggregate(tables), ReportFormat::table);
    out << "results: " << dir.string() << '\n';
    return kExitOk;
}

int cmd_sweep(const ExperimentFlags& flags, const std::string& axis_name,
              const std::vector<std::string>& values, const std::string& plot_out,
              std::ostream& out, std::ostream& err) {
    auto p = prepare(flags.settings());
    const auto axis = parse_sweep_axis(axis_name);
    ModelGateway gateway(p.config.model);
    const auto points = sweep(p.config, axis, values, p.corpus, gateway);

    std::vector<ResultTable> tables;
    for (const auto& point : points) {
        if (!point.table) {
            report_error(err, "sweep_point", to_string(axis).data() + std::string("=") +
                                                 point.value + ": " + point.error);
            continue;
        }
        auto config = with_axis_value(p.config, axis, point.value, p.corpus.spec());
        write_result_dir(p.output_dir, config, *point.table);
        tables.push_back(*point.table);
    }
    if (tables.empty()) {
        if (values.empty()) {
            out << "no sweep values given\n";
            return kExitOk;
        }
        throw Error("every sweep value failed");
    }
    const auto summary = aggregate(tables);
    out << format_report(summary, ReportFormat::table);
    const fs::path plot_path =
        plot_out.empty() ? p.output_dir / ("sweep-" + p.config.digest() + "-" +
                                           std::string(to_string(axis)) + ".csv")
                         : fs::path(plot_out);
    emit_report(summary, ReportFormat::plot_data, plot_path);
    out << "plot data: " << plot_path.string() << '\n';
    return tables.size() == points.size() ? kExitOk : kExitRuntime;
}

int cmd_render(const ExperimentFlags& flags, std::size_t index, std::ostream& out) {
    auto settings = flags.settings();
    if (!settings["model"].contains("kind")) settings["model"]["kind"] = "majority";
    auto p = prepare(std::move(settings));
    const auto eval_set = eval_set_for(p.config, p.corpus);
    if (index >= eval_set.size()) {
        throw UsageError("--index " + std::to_string(index) + " is beyond the " +
                         std::to_string(eval_set.size()) + " evaluation examples");
    }
    const auto instance = make_eval_instance(p.corpus, eval_set[index], p.config.prompt.k_per_class,
                                             derive_seed(p.config.experiment_seed, index + 1));
    const auto prompt = forge_prompt(p.config.prompt, instance, p.corpus.spec().class_count());
    out << prompt.text << '\n';
    return kExitOk;
}

struct LinclassFlags {
    std::size_t dim = 16;
    std::size_t k = 16;
    std::size_t n_eval = 100;
    std::uint64_t seed = 0;
    std::string out;
    bool audit = false;
};

fs::path sibling(const fs::path& out, std::string_view suffix) {
    auto stem = out.filename().string();
    if (out.extension() == ".tsv") stem = out.stem().string();
    return out.parent_path() / (stem + std::string(suffix));
}

void write_points(const fs::path& path, const std::vector<std::pair<linclass::Point, bool>>& rows) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write " + path.string());
    for (const auto& [point, above] : rows) {
        f << linclass::serialize_point(point) << '\t' << (above ? "Bar" : "Foo") << '\n';
    }
    if (!f.flush()) throw InputError("cannot write " + path.string());
}

int audit_linclass(const fs::path& manifest_path, std::ostream& out) {
    std::ifstream in(manifest_path);
    if (!in) throw InputError("cannot open " + manifest_path.string());
    const auto doc = json::parse(in);
    linclass::Hyperplane h;
    h.weights = doc.at("hyperplane").at("weights").get<std::vector<std::int64_t>>();
    h.threshold = doc.at("hyperplane").at("threshold").get<std::int64_t>();
    h.denominator = doc.at("hyperplane").at("denominator").get<std::int64_t>();
    const auto registry = TaskRegistry::from_manifest(manifest_path);
    const auto corpus = registry.load(doc.at("tasks").at(0).at("name").get<std::string>());

    std::size_t checked = 0, mismatched = 0, out_of_box = 0;
    std::array<std::size_t, 2> train_counts{}, eval_counts{};
    auto check = [&](std::span<const Example> examples, std::array<std::size_t, 2>& counts) {
        for (const auto& ex : examples) {
            const auto point = linclass::parse_point(ex.input);
            for (auto c : point) {
                if (c < linclass::kCoordMin || c > linclass::kCoordMax) ++out_of_box;
            }
            const auto side = linclass::classify_oracle(h, point);
            const auto stored = ex.label == 1 ? linclass::Side::above : linclass::Side::below;
            if (side != stored) ++mismatched;
            ++counts[ex.label];
            ++checked;
        }
    };
    check(corpus.train(), train_counts);
    check(corpus.validation(), eval_counts);
    const bool ok = mismatched == 0 && out_of_box == 0 && train_counts[0] == train_counts[1] &&
                    eval_counts[0] == eval_counts[1];
    out << "audit: " << checked << " points, " << mismatched << " misclassified, " << out_of_box
        << " coordinates out of range, exemplars " << train_counts[0] << "/" << train_counts[1]
        << ", eval " << eval_counts[0] << "/" << eval_counts[1] << " -> " << (ok ? "ok" : "FAILED")
        << '\n';
    if (!ok) throw Error("linear classification audit failed for " + manifest_path.string());
    return kExitOk;
}

int cmd_gen_linclass(const LinclassFlags& f, std::ostream& out) {
    const fs::path out_path = f.out;
    const auto h = linclass::gen_hyperplane(f.dim, derive_seed(f.seed, 0));
    const auto dataset = linclass::gen_dataset(h, f.k, f.n_eval, derive_seed(f.seed, 1));

    std::vector<std::pair<linclass::Point, bool>> train, eval;
    for (const auto& p : dataset.positives) train.emplace_back(p, true);
    for (const auto& p : dataset.negatives) train.emplace_back(p, false);
    Rng order(derive_seed(f.seed, 2));
    order.shuffle(train);
    for (const auto& lp : dataset.eval_points) {
        eval.emplace_back(lp.point, lp.side == linclass::Side::above);
    }
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    const auto eval_path = sibling(out_path, ".eval.tsv");
    const auto manifest_path = sibling(out_path, ".manifest.json");
    write_points(out_path, train);
    write_points(eval_path, eval);

    json manifest = {
        {"tasks",
         json::array({{{"name", "linclass"},
                       {"labels", {"Foo", "Bar"}},
                       {"aliases", json::array({json::array({"below", "negative"}), json::array({"above", "positive"})})},
                       {"train_file", out_path.filename().string()},
                       {"validation_file", eval_path.filename().string()},
                       {"notes", "class 0 (Foo) below the hyperplane, class 1 (Bar) above"}}})},
        {"dimension", f.dim},
        {"k", f.k},
        {"n_eval", f.n_eval},
        {"seed", f.seed},
        {"hyperplane",
         {{"weights", h.weights},
          {"threshold", h.threshold},
          {"denominator", h.denominator},
          {"real_weights", h.real_weights()},
          {"real_threshold", h.real_threshold()}}},
    };
    std::ofstream mf(manifest_path, std::ios::trunc);
    mf << manifest.dump(2) << '\n';
    if (!mf.flush()) throw InputError("cannot write " + manifest_path.string());
    out << "wrote " << out_path.string() << ", " << eval_path.string() << ", "
        << manifest_path.string() << '\n';
    if (f.audit) return audit_linclass(manifest_path, out);
    return kExitOk;
}

int cmd_report(const std::vector<std::string>& roots, const std::string& format,
               const std::string& out_path, std::ostream& out) {
    std::vector<ResultTable> tables;
    for (const auto& root : roots) {
        for (const auto& dir : find_result_dirs(root)) tables.push_back(load_result_dir(dir));
    }
    if (tables.empty()) throw InputError("no result directories found");
    const auto summary = aggregate(tables);
    const auto fmt = parse_report_format(format);
    if (out_path.empty()) {
        out << format_report(summary, fmt);
    } else {
        emit_report(summary, fmt, out_path);
        out << "wrote " << out_path << '\n';
    }
    return kExitOk;
}

int cmd_cache(const std::string& dir, bool clear, std::ostream& out) {
    ResponseCache cache(dir);
    if (clear) {
        out << "removed " << cache.clear() << " entries\n";
        return kExitOk;
    }
    const auto s = cache.stats();
    out << "entries: " << s.entries << "\nbytes: " << s.bytes << '\n';
    return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"iclprobe: in-context learning probe experiments"};
    app.name("iclprobe");
    app.require_subcommand(1);

    ExperimentFlags run_flags;
    auto* run = app.add_subcommand("run", "Run one experiment config");
    run_flags.attach(*run);

    ExperimentFlags sweep_flags;
    std::string axis;
    std::vector<std::string> values;
    std::string plot_out;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run one experiment per value of an axis");
    sweep_flags.attach(*sweep_cmd);
    sweep_cmd->add_option("--axis", axis, "k | p_flip | p_remap | target_set | template")->required();
    sweep_cmd->add_option("--values", values, "Comma-separated axis values")->delimiter(',');
    sweep_cmd->add_option("--plot-out", plot_out, "Where to write the sweep's plot data");

    ExperimentFlags render_flags;
    std::size_t index = 0;
    auto* render = app.add_subcommand("render-prompt", "Print one rendered prompt");
    render_flags.attach(*render);
    render->add_option("--index", index, "Which evaluation example (default 0)");

    LinclassFlags lc;
    auto* gen = app.add_subcommand("gen-linclass", "Generate a synthetic linear classification task");
    gen->add_option("--dim", lc.dim, "Dimension N (default 16)");
    gen->add_option("--k", lc.k, "Exemplars per class (default 16)");
    gen->add_option("--n-eval", lc.n_eval, "Evaluation points, even (default 100)");
    gen->add_option("--seed", lc.seed, "Generation seed");
    gen->add_option("--out", lc.out, "Exemplar record file; .eval.tsv and .manifest.json are written beside it")
        ->required();
    gen->add_flag("--audit", lc.audit, "Re-read the output and re-check every point with the oracle");

    std::vector<std::string> roots;
    std::string format = "table";
    std::string report_out;
    auto* report = app.add_subcommand("report", "Aggregate existing result directories");
    report->add_option("--results", roots, "Result root or result directory (repeatable)")->required();
    report->add_option("--format", format, "table | tsv | plot");
    report->add_option("--out", report_out, "Output file (default stdout)");

    std::string cache_dir;
    bool clear = false;
    auto* cache = app.add_subcommand("cache", "Inspect or clear a response cache");
    cache->add_option("--dir", cache_dir, "Cache directory")->required();
    cache->add_flag("--clear", clear, "Delete every cached response");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        const auto* failing = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << failing->help();
        report_error(err, "usage", e.what());
        return kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(run_flags, out);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_flags, axis, values, plot_out, out, err);
        if (render->parsed()) return cmd_render(render_flags, index, out);
        if (gen->parsed()) return cmd_gen_linclass(lc, out);
        if (report->parsed()) return cmd_report(roots, format, report_out, out);
        if (cache->parsed()) return cmd_cache(cache_dir, clear, out);
    } catch (const UsageError& e) {
        report_error(err, e.category(), e.what());
        return kExitUsage;
    } catch (const Error& e) {
        report_error(err, e.category(), e.what());
        return kExitRuntime;
    } catch (const std::exception& e) {
        report_error(err, "internal", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace iclprobe::cli
