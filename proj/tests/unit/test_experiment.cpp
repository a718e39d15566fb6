#include <doctest.h>

#include "iclprobe/error.hpp"
#include "iclprobe/experiment.hpp"
#include "iclprobe/task_registry.hpp"
#include "support/stub_server.hpp"

using namespace iclprobe;
using iclprobe::testing::StubCompletionServer;

namespace {

ExperimentConfig marker_config(ModelSpec model, std::size_t n_eval = 40, std::size_t k = 4) {
    ExperimentConfig c;
    c.task = "marker";
    c.model = std::move(model);
    c.prompt.target_set = builtin_target_set("foobar", marker_task_spec());
    c.prompt.k_per_class = k;
    c.n_eval = n_eval;
    c.experiment_seed = 3;
    return c;
}

TaskCorpus toy_corpus() {
    TaskSpec spec{"toy", {"Foo", "Bar"}, {}, ""};
    std::vector<Example> train, validation;
    for (std::size_t i = 0; i < 10; ++i) train.push_back({{"toy", i}, "t" + std::to_string(i), i % 2});
    for (std::size_t i = 0; i < 6; ++i) validation.push_back({{"toy", 10 + i}, "v" + std::to_string(i), 1});
    return TaskCorpus(spec, train, validation);
}

}  // namespace

TEST_CASE("fixed model is perfect on a single-class eval set") {
    const auto corpus = toy_corpus();
    auto config = marker_config(fixed_model(" Bar"), 6, 2);
    config.task = "toy";
    const auto table = run_experiment(config, corpus);
    CHECK(table.records.size() == 6);
    CHECK(table.accuracy == 1.0);
    CHECK(table.skip_count == 0);
    CHECK(table.dataset == "toy");
    CHECK(table.config_digest == config.digest());
    CHECK(table.config_digest.size() == 16);
    for (std::size_t i = 0; i < table.records.size(); ++i) CHECK(table.records[i].eval_index == i);

    config.eval_label_mode = EvalLabelMode::flipped;
    CHECK(run_experiment(config, corpus).accuracy == 0.0);
}

TEST_CASE("prior oracle is flat across flip proportions") {
    const auto corpus = make_marker_task(200, 5);
    auto base = marker_config(prior_oracle_model(builtin_prior("marker"), "marker"));
    ModelGateway gateway(base.model);
    const std::vector<std::string> values = {"0", "0.25", "0.5", "0.75", "1"};
    const auto points = sweep(base, SweepAxis::p_flip, values, corpus, gateway);
    REQUIRE(points.size() == values.size());
    for (const auto& p : points) {
        REQUIRE(p.table.has_value());
        CHECK(p.table->accuracy == 1.0);
        CHECK(p.table->axis == "p_flip");
        CHECK(p.table->axis_value == p.value);
    }
}

TEST_CASE("knn mapper follows the shown labels") {
    const auto corpus = make_marker_task(200, 5);
    auto config = marker_config(knn_mapping_model());
    config.prompt.flip_proportion = 0.0;
    const auto clean = run_experiment(config, corpus).accuracy;
    config.prompt.flip_proportion = 1.0;
    const auto flipped = run_experiment(config, corpus).accuracy;
    config.eval_label_mode = EvalLabelMode::flipped;
    const auto flipped_scored_flipped = run_experiment(config, corpus).accuracy;
    CHECK(clean >= 0.95);
    CHECK(flipped <= 0.05);
    CHECK(flipped_scored_flipped == doctest::Approx(clean).epsilon(0.02));
}

TEST_CASE("sweeps share the evaluation set") {
    const auto corpus = make_marker_task(200, 9);
    auto base = marker_config(knn_mapping_model(), 20);
    ModelGateway gateway(base.model);
    const std::vector<std::string> values = {"1", "2", "4"};
    const auto points = sweep(base, SweepAxis::k, values, corpus, gateway);
    REQUIRE(points.size() == 3);
    for (const auto& p : points) {
        REQUIRE(p.table.has_value());
        REQUIRE(p.table->records.size() == 20);
        for (std::size_t i = 0; i < 20; ++i) {
            CHECK(p.table->records[i].eval_id == points[0].table->records[i].eval_id);
        }
    }
    CHECK(points[0].table->config_digest != points[1].table->config_digest);
    CHECK(sweep(base, SweepAxis::k, std::vector<std::string>{}, corpus, gateway).empty());
}

TEST_CASE("bad sweep values are reported per point") {
    const auto corpus = make_marker_task(100, 9);
    auto base = marker_config(knn_mapping_model(), 10);
    ModelGateway gateway(base.model);
    const std::vector<std::string> values = {"0.5", "1.5", "abc"};
    const auto points = sweep(base, SweepAxis::p_flip, values, corpus, gateway);
    CHECK(points[0].table.has_value());
    CHECK_FALSE(points[1].table.has_value());
    CHECK_FALSE(points[1].error.empty());
    CHECK_FALSE(points[2].table.has_value());
    CHECK(parse_sweep_axis("template") == SweepAxis::prompt_template);
    CHECK_THROWS_AS(parse_sweep_axis("temperature"), InputError);
}

TEST_CASE("runs are reproducible and worker count does not matter") {
    const auto corpus = make_marker_task(200, 2);
    auto config = marker_config(knn_mapping_model(3), 30);
    config.prompt.remap_proportion = 0.3;
    config.prompt.flip_proportion = 0.25;
    const auto a = run_experiment(config, corpus);
    config.workers = 4;
    const auto b = run_experiment(config, corpus);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].prompt_digest == b.records[i].prompt_digest);
        CHECK(a.records[i].correct == b.records[i].correct);
    }
    CHECK(a.config_digest == b.config_digest);  // worker count is not part of the identity
}

TEST_CASE("configuration is validated against the task") {
    const auto trec = *builtin_task_spec("trec");
    auto config = marker_config(knn_mapping_model());
    config.prompt.target_set = builtin_target_set("foobar", trec);
    config.prompt.flip_proportion = 0.5;
    CHECK_THROWS_AS(config.validate(trec), PreconditionError);
    config.prompt.flip_proportion = 0.0;
    CHECK_NOTHROW(config.validate(trec));
    CHECK_THROWS_AS(config.validate(marker_task_spec()), InputError);
}

TEST_CASE("gateway failures skip records") {
    StubCompletionServer server;
    server.script(401, "{}");
    server.script(401, "{}");
    const auto corpus = make_marker_task(100, 4);
    auto model = remote_model(server.url(), "stub");
    auto config = marker_config(model, 5, 1);
    ModelGateway gateway(model);
    const auto table = run_experiment(config, corpus, gateway);
    CHECK(table.skip_count == 2);
    CHECK(table.records[0].skipped);
    CHECK(table.records[0].skip_reason.starts_with("authentication"));
    CHECK(table.scored_count() == 3);

    StubCompletionServer dead;
    for (int i = 0; i < 5; ++i) dead.script(403, "{}");
    ModelGateway dead_gateway(remote_model(dead.url(), "stub"));
    CHECK_THROWS_AS(run_experiment(config, corpus, dead_gateway), Error);
}
