#include <doctest.h>

#include "iclprobe/cli.hpp"
#include "support/paths.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

using namespace iclprobe;
using iclprobe::testing::TempDir;

namespace {

struct Invocation {
    int status = 0;
    std::string out;
    std::string err;
};

Invocation invoke(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Invocation r;
    r.status = cli::dispatch(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string manifest() { return (iclprobe::testing::data_dir() / "tasks.json").string(); }

nlohmann::json last_error_line(const std::string& err) {
    auto text = err;
    while (!text.empty() && text.back() == '\n') text.pop_back();
    return nlohmann::json::parse(text.substr(text.rfind('\n') + 1));
}

}  // namespace

TEST_CASE("render-prompt prints a prompt") {
    const auto r = invoke({"render-prompt", "--task", "sst2", "--k", "1", "--seed", "7",
                           "--targets", "foobar", "--manifest", manifest()});
    CHECK(r.status == cli::kExitOk);
    CHECK(r.out.starts_with("Input: "));
    CHECK(r.out.ends_with("\nOutput:\n"));
    CHECK(r.out.find("\nOutput: Foo") != std::string::npos);
    CHECK(r.out.find("\nOutput: Bar") != std::string::npos);
    // Same seed, same prompt.
    CHECK(invoke({"render-prompt", "--task", "sst2", "--k", "1", "--seed", "7", "--targets",
                  "foobar", "--manifest", manifest()})
              .out == r.out);
}

TEST_CASE("a missing config is a usage error naming the path") {
    const auto r = invoke({"run", "--config", "/nonexistent/experiment.json"});
    CHECK(r.status == cli::kExitUsage);
    const auto e = last_error_line(r.err);
    CHECK(e["message"].get<std::string>().find("/nonexistent/experiment.json") != std::string::npos);
}

TEST_CASE("unknown flags and subcommands are rejected") {
    CHECK(invoke({"run", "--frobnicate"}).status == cli::kExitUsage);
    CHECK(invoke({"dance"}).status == cli::kExitUsage);
    CHECK(invoke({}).status == cli::kExitUsage);
    const auto help = invoke({"--help"});
    CHECK(help.status == cli::kExitOk);
    CHECK(help.out.find("render-prompt") != std::string::npos);
}

TEST_CASE("runtime errors are one JSON line") {
    const auto r = invoke({"run", "--task", "no-such-task", "--manifest", manifest()});
    CHECK(r.status == cli::kExitRuntime);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
    const auto e = last_error_line(r.err);
    CHECK(e.contains("error"));
    CHECK(e["message"].get<std::string>().find("no-such-task") != std::string::npos);
}

TEST_CASE("gen-linclass writes an auditable task") {
    TempDir dir;
    const auto out = (dir / "lc.tsv").string();
    const auto r = invoke({"gen-linclass", "--dim", "4", "--k", "8", "--n-eval", "20", "--seed",
                           "3", "--out", out, "--audit"});
    CHECK(r.status == cli::kExitOk);
    CHECK(r.out.find("-> ok") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "lc.eval.tsv"));
    CHECK(std::filesystem::exists(dir / "lc.manifest.json"));

    std::ifstream in(dir / "lc.tsv");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 16);

    CHECK(invoke({"gen-linclass", "--out", out, "--n-eval", "3"}).status == cli::kExitRuntime);
}

TEST_CASE("run, sweep and report") {
    TempDir dir;
    const auto results = (dir / "results").string();
    const auto run = invoke({"run", "--task", "marker", "--manifest", manifest(), "--model-kind",
                             "knn_mapper", "--k", "2", "--n-eval", "10", "--output-dir", results});
    REQUIRE(run.status == cli::kExitOk);
    CHECK(run.out.find("marker") != std::string::npos);

    const auto plot = (dir / "sweep.csv").string();
    const auto sw = invoke({"sweep", "--task", "marker", "--manifest", manifest(), "--model-kind",
                            "prior_oracle", "--prior", "marker", "--k", "2", "--n-eval", "10",
                            "--axis", "p_flip", "--values", "0,0.5,1", "--output-dir", results,
                            "--plot-out", plot});
    REQUIRE(sw.status == cli::kExitOk);
    CHECK(std::filesystem::exists(plot));

    const auto rep = invoke({"report", "--results", results, "--format", "tsv"});
    CHECK(rep.status == cli::kExitOk);
    CHECK(rep.out.starts_with("dataset\tmodel"));
    CHECK(rep.out.find("macro-average") != std::string::npos);
    CHECK(invoke({"report", "--results", (dir / "empty").string()}).status == cli::kExitRuntime);
}

TEST_CASE("config files drive runs") {
    TempDir dir;
    std::ofstream(dir / "exp.json") << R"({"task": "marker", "manifest": ")" << manifest()
                                     << R"(", "model": {"kind": "fixed", "response": "Foo"},
        "k": 1, "n_eval": 4, "output_dir": "out"})";
    const auto r = invoke({"run", "--config", (dir / "exp.json").string()});
    CHECK(r.status == cli::kExitOk);
    CHECK(std::filesystem::exists(dir / "out"));
}

TEST_CASE("cache subcommand") {
    TempDir dir;
    const auto r = invoke({"cache", "--dir", dir.path().string()});
    CHECK(r.status == cli::kExitOk);
    CHECK(r.out.find("entries: 0") != std::string::npos);
    CHECK(invoke({"cache", "--dir", dir.path().string(), "--clear"}).status == cli::kExitOk);
}
