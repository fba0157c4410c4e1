#include "cdas/fixed_point.hpp"

#include "cdas/errors.hpp"
#include "cdas/scheduler_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace cdas {

namespace {

constexpr double kMeasurableStep = 10.0 * std::numeric_limits<double>::epsilon();

void validate(std::span<const double> d, double c, std::span<const double> s_star) {
    if (d.size() != s_star.size()) {
        throw DomainError(fmt::format("difficulty vector has {} entries but S* has {}", d.size(),
                                      s_star.size()));
    }
    if (d.empty()) {
        throw DomainError("fixed-point system needs at least one problem");
    }
    if (!std::isfinite(c)) {
        throw DomainError("competence must be finite");
    }
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!std::isfinite(d[i])) {
            throw DomainError(fmt::format("difficulty {} is not finite", i));
        }
        if (!(s_star[i] >= 0.0 && s_star[i] <= 1.0)) {
            throw DomainError(fmt::format("S*[{}] = {} lies outside [0,1]", i, s_star[i]));
        }
    }
}

}  // namespace

FixedPointState iterate_once(std::span<const double> d, double c, std::span<const double> s_star) {
    validate(d, c, s_star);
    FixedPointState next;
    next.d.resize(d.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        next.d[i] = sigmoid(c - d[i]) - s_star[i];
        sum += next.d[i];
    }
    next.c = -(sum / static_cast<double>(d.size()));
    return next;
}

double state_distance(const FixedPointState& a, const FixedPointState& b) {
    double dist = std::abs(a.c - b.c);
    for (std::size_t i = 0; i < a.d.size(); ++i) {
        dist = std::max(dist, std::abs(a.d[i] - b.d[i]));
    }
    return dist;
}

std::vector<double> contraction_ratios(std::span<const double> deltas) {
    std::vector<double> ratios;
    for (std::size_t n = 0; n + 1 < deltas.size(); ++n) {
        if (deltas[n] > kMeasurableStep) {
            ratios.push_back(deltas[n + 1] / deltas[n]);
        }
    }
    return ratios;
}

EquilibriumSolution solve(const EquilibriumProblem& problem, double tolerance,
                          std::size_t max_iters, bool record_trajectory) {
    if (!(tolerance > 0.0)) {
        throw DomainError(fmt::format("tolerance must be positive, got {}", tolerance));
    }
    validate(problem.init_d, problem.init_c, problem.s_star);

    EquilibriumSolution sol;
    FixedPointState current{problem.init_d, problem.init_c};
    if (record_trajectory) {
        sol.trajectory.push_back(current);
    }
    for (std::size_t it = 0; it < max_iters; ++it) {
        FixedPointState next = iterate_once(current.d, current.c, problem.s_star);
        const double delta = state_distance(current, next);
        sol.deltas.push_back(delta);
        current = std::move(next);
        if (record_trajectory) {
            sol.trajectory.push_back(current);
        }
        if (delta <= tolerance) {
            sol.iterations = it + 1;
            sol.final_residual = delta;
            sol.contraction_ratios = contraction_ratios(sol.deltas);
            sol.d_star = std::move(current.d);
            sol.c_star = current.c;
            return sol;
        }
    }
    throw ConvergenceError(
        fmt::format("fixed point not reached within {} iterations (last step {})", max_iters,
                    sol.deltas.empty() ? 0.0 : sol.deltas.back()),
        std::move(sol.deltas));
}

double measure_contraction(std::span<const FixedPointState> trajectory) {
    if (trajectory.size() < 3) {
        throw DomainError(fmt::format("contraction needs at least 3 states, got {}",
                                      trajectory.size()));
    }
    std::vector<double> deltas;
    for (std::size_t n = 0; n + 1 < trajectory.size(); ++n) {
        deltas.push_back(state_distance(trajectory[n], trajectory[n + 1]));
    }
    const auto ratios = contraction_ratios(deltas);
    return ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end());
}

double equilibrium_residual(std::span<const double> d, double c, std::span<const double> s_star) {
    validate(d, c, s_star);
    double worst = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        worst = std::max(worst, std::abs(d[i] - (sigmoid(c - d[i]) - s_star[i])));
        sum += d[i];
    }
    return std::max(worst, std::abs(c + sum / static_cast<double>(d.size())));
}

void write_trajectory_csv(std::ostream& out, const EquilibriumSolution& solution) {
    out << "iteration,delta,ratio\n";
    const auto& deltas = solution.deltas;
    for (std::size_t n = 0; n < deltas.size(); ++n) {
        fmt::print(out, "{},{}", n + 1, deltas[n]);
        if (n > 0 && deltas[n - 1] > kMeasurableStep) {
            fmt::print(out, ",{}", deltas[n] / deltas[n - 1]);
        } else {
            out << ',';
        }
        out << '\n';
    }
}

}  // namespace cdas
