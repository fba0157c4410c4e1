#include <doctest.h>

#include "cdas/errors.hpp"
#include "cdas/experiment.hpp"

#include <filesystem>
#include <sstream>

using namespace cdas;

namespace {

ExperimentConfig small(Strategy s, std::uint64_t seed = 3) {
    ExperimentConfig c;
    c.n_problems = 300;
    c.batch_size = 30;
    c.total_steps = 40;
    c.strategy = s;
    c.seed = seed;
    return c;
}

std::string csv_of(const Experiment& e) {
    std::ostringstream out;
    write_metrics_csv(out, to_string(e.config().strategy), e.config().seed, e.metrics());
    return out.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("cdas_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("one random step over the whole bank") {
    ExperimentConfig c;
    c.n_problems = 16;
    c.batch_size = 16;
    c.total_steps = 1;
    c.strategy = Strategy::Random;
    Experiment e(c);
    e.run_to_end();
    REQUIRE(e.metrics().size() == 1);
    const auto& m = e.metrics().front();
    CHECK(m.step == 1);
    CHECK(m.rollout_batches_consumed == 16);
    auto ids = e.last_batch();
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        CHECK(to_underlying(ids[i]) == i);
    }
    CHECK(e.finished());
    CHECK_THROWS(e.step());
}

TEST_CASE("repeated runs are byte identical") {
    for (auto s : {Strategy::Cdas, Strategy::Random, Strategy::Curriculum, Strategy::Prioritized,
                   Strategy::Dynamic}) {
        Experiment a(small(s));
        Experiment b(small(s));
        a.run_to_end();
        b.run_to_end();
        CHECK(csv_of(a) == csv_of(b));
    }
    auto dir = scratch("repeat");
    auto c = small(Strategy::Cdas);
    c.out = (dir / "a").string();
    run(c);
    c.out = (dir / "b").string();
    run(c);
    CHECK(read_text_file(dir / "a" / "metrics.csv") == read_text_file(dir / "b" / "metrics.csv"));
    CHECK(std::filesystem::exists(dir / "a" / "summary.json"));
    CHECK(std::filesystem::exists(dir / "a" / "problems.csv"));
}

TEST_CASE("warm-up batches then symmetric selection") {
    ExperimentConfig c;
    c.n_problems = 1000;
    c.batch_size = 100;
    c.total_steps = 12;
    Experiment e(c);
    const auto order = e.cdas()->warmup_order();
    CHECK(e.cdas()->warmup_steps() == 10);
    for (std::size_t k = 0; k < 10; ++k) {
        e.step();
        std::vector<ProblemId> expected(order.begin() + static_cast<std::ptrdiff_t>(k * 100),
                                        order.begin() + static_cast<std::ptrdiff_t>(k * 100 + 100));
        CHECK(e.last_batch() == expected);
    }
    for (int k = 0; k < 2; ++k) {
        const auto expected =
            select_by_alignment(e.cdas()->records(), e.cdas()->competence(), 100, true);
        e.step();
        CHECK(e.last_batch() == expected);
    }
}

TEST_CASE("resume reproduces the uninterrupted run") {
    for (auto s : {Strategy::Cdas, Strategy::Prioritized, Strategy::Dynamic}) {
        auto c = small(s);
        c.total_steps = 100;
        Experiment full(c);
        full.run_to_end();

        Experiment half(c);
        half.run_until(50);
        const auto text = half.checkpoint().dump();
        Experiment resumed = Experiment::resume(nlohmann::json::parse(text));
        CHECK(resumed.steps_done() == 50);
        resumed.run_to_end();
        CHECK(csv_of(resumed) == csv_of(full));
        CHECK(resumed.summary() == full.summary());
    }
}

TEST_CASE("tampered checkpoints are refused") {
    Experiment e(small(Strategy::Cdas));
    e.run_until(5);
    auto cp = e.checkpoint();

    auto bad = cp;
    bad["config"]["batch_size"] = 20;
    CHECK_THROWS_AS(Experiment::resume(bad), CheckpointError);

    bad = cp;
    bad["config_hash"] = "0000000000000000";
    CHECK_THROWS_AS(Experiment::resume(bad), CheckpointError);

    bad = cp;
    bad["bank"]["problems"][0]["true_difficulty"] = 9.0;
    CHECK_THROWS_AS(Experiment::resume(bad), CheckpointError);

    bad = cp;
    bad["version"] = 99;
    CHECK_THROWS_AS(Experiment::resume(bad), CheckpointError);

    bad = cp;
    bad.erase("learner");
    CHECK_THROWS_AS(Experiment::resume(bad), CheckpointError);
}

TEST_CASE("resuming a finished run changes nothing") {
    auto c = small(Strategy::Random);
    auto first = run(c);
    auto again = resume(first.checkpoint);
    CHECK(again.already_complete);
    CHECK(again.result.summary == first.summary);
    CHECK(again.result.metrics == first.metrics);
}

TEST_CASE("config validation names the field") {
    auto check_field = [](ExperimentConfig c, const std::string& field) {
        try {
            validate(c);
            FAIL("expected ConfigError for " << field);
        } catch (const ConfigError& e) {
            CHECK(e.field() == field);
        }
    };
    auto c = small(Strategy::Cdas);
    c.batch_size = 31;
    check_field(c, "batch_size");
    c = small(Strategy::Cdas);
    c.batch_size = 301;
    check_field(c, "batch_size");
    c = small(Strategy::Cdas);
    c.rollouts = 1;
    check_field(c, "rollouts");
    c = small(Strategy::Cdas);
    c.total_steps = 0;
    check_field(c, "total_steps");
    c = small(Strategy::Random);
    c.batch_size = 31;
    CHECK_NOTHROW(validate(c));
    c = small(Strategy::Cdas);
    c.symmetric = false;
    c.batch_size = 31;
    CHECK_NOTHROW(validate(c));
}

TEST_CASE("config json round trip and strictness") {
    auto c = small(Strategy::Curriculum, 11);
    c.bank_seed = 4;
    c.initial_ability = -0.5;
    auto back = config_from_json(nlohmann::json::parse(to_json(c).dump()));
    CHECK(to_json(back) == to_json(c));
    CHECK(config_hash(back) == config_hash(c));
    auto moved = c;
    moved.out = "elsewhere";
    CHECK(config_hash(moved) == config_hash(c));
    moved.seed = 12;
    CHECK(config_hash(moved) != config_hash(c));

    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"batchsize", 3}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"strategy", "greedy"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"batch_size", "big"}}), ConfigError);
    auto partial = config_from_json(nlohmann::json{{"strategy", "dynamic"}});
    CHECK(partial.strategy == Strategy::Dynamic);
    CHECK(partial.batch_size == 128);
}

TEST_CASE("compare shares one bank and rejects mismatched configs") {
    std::vector<ExperimentConfig> configs;
    for (auto s : {Strategy::Cdas, Strategy::Random, Strategy::Dynamic}) {
        configs.push_back(small(s));
    }
    auto runs = compare(configs);
    REQUIRE(runs.size() == 3);
    for (const auto& r : runs) {
        CHECK(r.summary.at("bank_hash") == runs[0].summary.at("bank_hash"));
        CHECK(r.metrics.size() == 40);
    }
    // Same learner start for every strategy.
    Experiment a(configs[0]);
    Experiment b(configs[1]);
    CHECK(a.learner().ability == b.learner().ability);

    auto mismatched = configs;
    mismatched[1].bank_seed = 99;
    CHECK_THROWS_AS(compare(mismatched), ConfigError);
    mismatched = configs;
    mismatched[2].batch_size = 20;
    CHECK_THROWS_AS(compare(mismatched), ConfigError);
}

TEST_CASE("dynamic sampling pays for its filtering") {
    std::vector<ExperimentConfig> configs;
    for (auto s : {Strategy::Cdas, Strategy::Random, Strategy::Curriculum, Strategy::Prioritized,
                   Strategy::Dynamic}) {
        configs.push_back(small(s, 21));
    }
    auto runs = compare(configs);
    const auto k_b = 40u * 30u;
    std::size_t dynamic_cost = runs.back().summary.at("cumulative_rollout_batches");
    for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
        CHECK(runs[i].summary.at("cumulative_rollout_batches").get<std::size_t>() == k_b);
    }
    CHECK(dynamic_cost >= k_b);
    for (const auto& m : runs.back().metrics) {
        CHECK(m.rollout_batches_consumed >= 30);
    }
}

TEST_CASE("curriculum moves to hard problems at the switch") {
    auto c = small(Strategy::Curriculum);
    c.curriculum_switch_step = 10;
    Experiment e(c);
    e.run_until(10);
    e.step();
    for (auto id : e.last_batch()) {
        CHECK(*e.bank().problems[to_underlying(id)].level_tag >= 4);
    }
}

TEST_CASE("ablation switches change the batches") {
    auto base = small(Strategy::Cdas);
    auto no_sym = base;
    no_sym.symmetric = false;
    auto no_warm = base;
    no_warm.warmup = false;
    Experiment a(base);
    Experiment b(no_sym);
    Experiment c(no_warm);
    bool sym_differs = false;
    bool warm_differs = false;
    for (int i = 0; i < 20; ++i) {
        a.step();
        b.step();
        c.step();
        sym_differs = sym_differs || a.last_batch() != b.last_batch();
        warm_differs = warm_differs || a.last_batch() != c.last_batch();
    }
    CHECK(sym_differs);
    CHECK(warm_differs);
    CHECK(c.cdas()->warmup_steps() == 0);
}

TEST_CASE("reward rises as soon as warm-up ends") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ExperimentConfig c;
        c.seed = seed;
        Experiment e(c);
        const auto warm = e.cdas()->warmup_steps();
        e.run_until(warm + 1);
        const auto& m = e.metrics();
        CHECK(m[warm].mean_reward > m[warm - 1].mean_reward);
    }
}
