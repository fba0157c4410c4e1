#include <doctest.h>

#include "cdas/errors.hpp"
#include "cdas/metrics.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace cdas;

namespace {

// Pearson correlation of ranks computed by counting, for tie-free samples.
double spearman_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double rx = 1.0;
        double ry = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            rx += x[j] < x[i] ? 1.0 : 0.0;
            ry += y[j] < y[i] ? 1.0 : 0.0;
        }
        d2 += (rx - ry) * (rx - ry);
    }
    const double nn = static_cast<double>(n);
    return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
}

}  // namespace

TEST_CASE("all-solved batch") {
    std::vector<GroupOutcome> g{{ProblemId{0}, 1.0, true}, {ProblemId{1}, 1.0, true}};
    auto m = summarize_step(g, StepContext{});
    CHECK(m.mean_reward == 1.0);
    CHECK(m.zero_gradient_fraction == 1.0);
}

TEST_CASE("mixed batch") {
    std::vector<GroupOutcome> g{{ProblemId{0}, 0.0, true},
                                {ProblemId{1}, 0.5, false},
                                {ProblemId{2}, 1.0, true},
                                {ProblemId{3}, 0.25, false}};
    StepContext ctx;
    ctx.step = 4;
    ctx.rollout_batches_consumed = 4;
    ctx.competence = 0.125;
    auto m = summarize_step(g, ctx);
    CHECK(m.zero_gradient_fraction == 0.5);
    CHECK(m.mean_reward == 0.4375);
    CHECK(m.step == 4);
    CHECK(m.competence == 0.125);
    CHECK_THROWS_AS(summarize_step({}, ctx), DomainError);
}

TEST_CASE("metrics csv layout") {
    StepMetrics m{3, 0.5, 0.25, 128, -0.125, 0.0625, 1.5};
    std::ostringstream out;
    write_metrics_csv(out, "cdas", 7, std::span(&m, 1));
    CHECK(out.str() ==
          "step,strategy,seed,mean_reward,zero_gradient_fraction,rollout_batches_consumed,"
          "competence,mean_sampled_difficulty,learner_ability\n"
          "3,cdas,7,0.5,0.25,128,-0.125,0.0625,1.5\n");
}

TEST_CASE("difficulty table skips unsampled problems") {
    std::vector<ProblemRecord> records(3);
    records[0] = {ProblemId{0}, std::nullopt, std::nullopt, 2, 0.3};
    records[1] = {ProblemId{1}, std::nullopt, std::nullopt, 0, 0.0};
    records[2] = {ProblemId{2}, std::nullopt, std::nullopt, 5, -0.2};
    std::vector<std::optional<double>> last{0.25, std::nullopt, 1.0};
    auto rows = difficulty_passrate_table(records, last);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].id == ProblemId{0});
    CHECK(rows[1].t == 5);
    CHECK(rows[1].final_pass_rate == 1.0);
}

TEST_CASE("spearman matches the rank-difference formula") {
    std::mt19937_64 gen(8);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(30);
        std::vector<double> y(30);
        for (std::size_t i = 0; i < 30; ++i) {
            x[i] = z(gen);
            y[i] = 0.5 * x[i] + z(gen);
        }
        CHECK(spearman(x, y) == doctest::Approx(spearman_oracle(x, y)).epsilon(1e-12));
    }
    std::vector<double> a{1, 2, 3, 4};
    std::vector<double> b{8, 6, 4, 2};
    CHECK(spearman(a, b) == doctest::Approx(-1.0));
    std::vector<double> flat{1, 1, 1, 1};
    CHECK(std::isnan(spearman(a, flat)));
    // Ties get average ranks: ranks of {1,1,2} are {1.5,1.5,3}.
    std::vector<double> t{1, 1, 2};
    std::vector<double> u{1, 2, 3};
    CHECK(spearman(t, u) == doctest::Approx(0.8660254037844386));
}
