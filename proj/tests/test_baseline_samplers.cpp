#include <doctest.h>

#include "cdas/baseline_samplers.hpp"
#include "cdas/errors.hpp"

#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <set>

using namespace cdas;

namespace {

std::vector<ProblemRecord> records_with_levels(std::size_t n) {
    std::vector<ProblemRecord> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].id = ProblemId{static_cast<std::uint32_t>(i)};
        out[i].level_tag = 1 + static_cast<int>(i % 5);
    }
    return out;
}

std::set<std::uint32_t> as_set(const std::vector<ProblemId>& ids) {
    std::set<std::uint32_t> out;
    for (auto id : ids) {
        out.insert(to_underlying(id));
    }
    return out;
}

BaselineSampler make(BaselineStrategy s, std::size_t n, std::uint64_t seed,
                     BaselineOptions opts = {}) {
    return BaselineSampler(records_with_levels(n), s, opts, seed);
}

}  // namespace

TEST_CASE("random selection of the whole pool is a permutation") {
    auto s = make(BaselineStrategy::Random, 10, 1);
    auto batch = s.random_select(10);
    CHECK(batch.size() == 10);
    CHECK(as_set(batch).size() == 10);
    CHECK_THROWS_AS(s.random_select(11), ConfigError);
}

TEST_CASE("random selection is deterministic under a seed") {
    auto a = make(BaselineStrategy::Random, 50, 9);
    auto b = make(BaselineStrategy::Random, 50, 9);
    for (int i = 0; i < 5; ++i) {
        CHECK(a.random_select(7) == b.random_select(7));
    }
}

TEST_CASE("random selection frequencies match the binomial oracle") {
    auto s = make(BaselineStrategy::Random, 100, 2024);
    const int draws = 100000;
    std::vector<int> hits(100, 0);
    for (int k = 0; k < draws; ++k) {
        for (auto id : s.random_select(10)) {
            ++hits[to_underlying(id)];
        }
    }
    const double se = std::sqrt(0.1 * 0.9 / draws);
    int outside = 0;
    for (int h : hits) {
        outside += std::abs(h / static_cast<double>(draws) - 0.1) > 3.0 * se ? 1 : 0;
    }
    CHECK(outside == 0);
}

TEST_CASE("curriculum switches to the hard pool") {
    BaselineOptions opts;
    opts.curriculum_switch_step = 2;
    auto s = make(BaselineStrategy::Curriculum, 50, 4, opts);
    auto twin = make(BaselineStrategy::Random, 50, 4, opts);
    // Before the switch it draws exactly like random sampling on the same seed.
    CHECK(s.curriculum_select(8) == twin.random_select(8));
    s.report_outcomes({});
    s.report_outcomes({});
    for (int step = 0; step < 20; ++step) {
        for (auto id : s.curriculum_select(8)) {
            CHECK(s.records()[to_underlying(id)].level_tag.value() >= 4);
        }
    }
}

TEST_CASE("curriculum with threshold 5 and a pool of exactly the batch size") {
    BaselineOptions opts;
    opts.curriculum_threshold = 5;
    auto s = make(BaselineStrategy::Curriculum, 20, 4, opts);  // 4 level-5 problems
    CHECK(as_set(s.curriculum_select(4)) == std::set<std::uint32_t>{4, 9, 14, 19});
    CHECK_THROWS_AS(s.curriculum_select(5), ConfigError);
}

TEST_CASE("curriculum requires level tags") {
    std::vector<ProblemRecord> records(4);
    for (std::uint32_t i = 0; i < 4; ++i) {
        records[i].id = ProblemId{i};
    }
    CHECK_THROWS_AS(BaselineSampler(records, BaselineStrategy::Curriculum, {}, 0), ConfigError);
}

TEST_CASE("prioritized weights follow one minus the last pass rate") {
    auto s = make(BaselineStrategy::Prioritized, 3, 0);
    std::vector<PassRateObservation> obs{
        {ProblemId{0}, 1.0, 0}, {ProblemId{1}, 0.5, 0}, {ProblemId{2}, 0.0, 0}};
    s.report_outcomes(obs);
    const auto w = s.prioritized_weights();
    CHECK(w[0] == 0.0);
    CHECK(w[1] == doctest::Approx(1.0 / 3.0));
    CHECK(w[2] == doctest::Approx(2.0 / 3.0));

    const int draws = 100000;
    std::map<std::uint32_t, int> hits;
    for (int k = 0; k < draws; ++k) {
        ++hits[to_underlying(s.prioritized_select(1).front())];
    }
    CHECK(hits[0] == 0);
    for (auto [id, p] : {std::pair{1u, 1.0 / 3.0}, std::pair{2u, 2.0 / 3.0}}) {
        const double se = std::sqrt(p * (1 - p) / draws);
        CHECK(std::abs(hits[id] / static_cast<double>(draws) - p) < 3.0 * se);
    }
}

TEST_CASE("prioritized with equal pass rates is uniform") {
    auto s = make(BaselineStrategy::Prioritized, 4, 0);
    const auto w = s.prioritized_weights();  // all unseen, initial weight 1
    for (double x : w) {
        CHECK(x == 0.25);
    }
}

TEST_CASE("prioritized never picks zero-weight problems while positive ones remain") {
    auto s = make(BaselineStrategy::Prioritized, 10, 3);
    std::vector<PassRateObservation> obs;
    for (std::uint32_t i = 0; i < 10; ++i) {
        obs.push_back({ProblemId{i}, i < 6 ? 1.0 : 0.25, 0});
    }
    s.report_outcomes(obs);
    for (int k = 0; k < 200; ++k) {
        auto batch = s.prioritized_select(4);
        CHECK(as_set(batch) == std::set<std::uint32_t>{6, 7, 8, 9});
    }
    CHECK(s.uniform_fallbacks() == 0);
    // Six draws: four positive ones first, then a flagged uniform fallback.
    auto batch = s.prioritized_select(6);
    CHECK(as_set(batch).size() == 6);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(to_underlying(batch[i]) >= 6);
    }
    CHECK(s.uniform_fallbacks() == 1);
}

TEST_CASE("dynamic sampling filters pass rates of 0 and 1") {
    auto s = make(BaselineStrategy::Dynamic, 4, 0);
    const double rates[] = {1.0, 0.5, 0.0, 0.25};
    auto fn = [&](ProblemId id) { return PassRateObservation{id, rates[to_underlying(id)], 0}; };
    auto sel = s.dynamic_select_and_filter(2, fn);
    CHECK(as_set(sel.ids) == std::set<std::uint32_t>{1, 3});
    CHECK(sel.padded == 0);
    for (const auto& o : sel.observations) {
        CHECK(o.pass_rate > 0.0);
        CHECK(o.pass_rate < 1.0);
    }
}

TEST_CASE("dynamic sampling without anything to filter costs one batch") {
    auto s = make(BaselineStrategy::Dynamic, 40, 6);
    auto twin = make(BaselineStrategy::Random, 40, 6);
    auto fn = [](ProblemId id) { return PassRateObservation{id, 0.5, 0}; };
    auto sel = s.dynamic_select_and_filter(8, fn);
    CHECK(sel.total_rollout_batches == 8);
    CHECK(sel.ids == twin.random_select(8));
}

TEST_CASE("dynamic sampling cost under half-dead pool follows the thinning oracle") {
    // Even ids always fail. Drawing without replacement from N problems with
    // G good ones, the expected number of draws to collect B good ones is
    // B (N + 1) / (G + 1).
    const std::size_t n = 1000;
    const std::size_t b = 20;
    auto s = make(BaselineStrategy::Dynamic, n, 8);
    auto fn = [](ProblemId id) {
        return PassRateObservation{id, to_underlying(id) % 2 == 0 ? 0.0 : 0.5, 0};
    };
    const int steps = 400;
    double total = 0.0;
    double total_sq = 0.0;
    for (int k = 0; k < steps; ++k) {
        auto sel = s.dynamic_select_and_filter(b, fn);
        REQUIRE(sel.ids.size() == b);
        CHECK(sel.padded == 0);
        total += static_cast<double>(sel.total_rollout_batches);
        total_sq += static_cast<double>(sel.total_rollout_batches * sel.total_rollout_batches);
    }
    const double mean = total / steps;
    const double var = total_sq / steps - mean * mean;
    const double expected = static_cast<double>(b) * (n + 1) / (n / 2 + 1);
    CHECK(std::abs(mean - expected) < 3.0 * std::sqrt(var / steps));
    CHECK(mean == doctest::Approx(2.0 * b).epsilon(0.05));
}

TEST_CASE("dynamic sampling pads after the retry cap and errors when nothing survives") {
    BaselineOptions opts;
    opts.dynamic_retry_cap = 2;
    // Six problems, batches of five: the second round holds the one left over,
    // so id 3 (the only informative problem) is always found.
    auto s = make(BaselineStrategy::Dynamic, 6, 1, opts);
    auto fn = [](ProblemId id) {
        return PassRateObservation{id, to_underlying(id) == 3 ? 0.5 : 1.0, 0};
    };
    for (int k = 0; k < 20; ++k) {
        auto sel = s.dynamic_select_and_filter(5, fn);
        CHECK(sel.ids.size() == 5);
        CHECK(as_set(sel.ids).size() == 5);
        CHECK(sel.total_rollout_batches == 6);
        CHECK(sel.padded == 4);
        CHECK(to_underlying(sel.ids.front()) == 3);
    }

    auto dead = make(BaselineStrategy::Dynamic, 10, 1, opts);
    auto zero = [](ProblemId id) { return PassRateObservation{id, 0.0, 0}; };
    CHECK_THROWS_AS(dead.dynamic_select_and_filter(3, zero), std::runtime_error);
}

TEST_CASE("baseline report bookkeeping") {
    auto s = make(BaselineStrategy::Prioritized, 5, 0);
    std::vector<PassRateObservation> first{{ProblemId{2}, 0.75, 1}};
    s.report_outcomes(first);
    CHECK(s.last_pass_rate(ProblemId{2}) == 0.75);
    std::vector<PassRateObservation> second{{ProblemId{2}, 0.125, 2}};
    s.report_outcomes(second);
    CHECK(s.last_pass_rate(ProblemId{2}) == 0.125);
    const auto before = s.last_pass_rates();
    s.report_outcomes({});
    CHECK(s.last_pass_rates() == before);
    CHECK(s.step() == 3);
    std::vector<PassRateObservation> unknown{{ProblemId{42}, 0.5, 0}};
    CHECK_THROWS_AS(s.report_outcomes(unknown), ConsistencyError);
}

TEST_CASE("baseline snapshot round trip") {
    auto a = make(BaselineStrategy::Prioritized, 30, 12);
    std::vector<PassRateObservation> obs{{ProblemId{1}, 0.25, 1}, {ProblemId{4}, 1.0, 1}};
    a.report_outcomes(obs);
    a.prioritized_select(5);
    auto b = BaselineSampler::restore(nlohmann::json::parse(a.snapshot().dump()));
    CHECK(b.snapshot() == a.snapshot());
    for (int k = 0; k < 5; ++k) {
        CHECK(a.prioritized_select(6) == b.prioritized_select(6));
    }
}

TEST_CASE("every strategy returns exactly batch-size distinct ids") {
    for (auto strategy : {BaselineStrategy::Random, BaselineStrategy::Curriculum,
                          BaselineStrategy::Prioritized}) {
        auto s = make(strategy, 60, 5);
        for (int k = 0; k < 20; ++k) {
            auto batch = s.select_batch(12);
            CHECK(batch.size() == 12);
            CHECK(as_set(batch).size() == 12);
            s.report_outcomes({});
        }
    }
    auto d = make(BaselineStrategy::Dynamic, 10, 0);
    CHECK_THROWS_AS(d.select_batch(2), ConfigError);
}
