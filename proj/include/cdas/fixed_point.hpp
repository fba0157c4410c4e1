#pragma once

// Equilibrium of the joint competence/difficulty map
//
//   D'(x) = sigmoid(C - D(x)) - S(x)
//   C'    = -mean_x D'(x)
//
// which is a contraction with constant 1/2 in the sup norm over (D, C).

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace cdas {

struct FixedPointState {
    std::vector<double> d;
    double c = 0.0;
};

struct EquilibriumProblem {
    std::vector<double> s_star;  // converged pass rates, each in [0,1]
    std::vector<double> init_d;
    double init_c = 0.0;
};

struct EquilibriumSolution {
    std::vector<double> d_star;
    double c_star = 0.0;
    std::size_t iterations = 0;
    double final_residual = 0.0;            // last sup-norm step size
    std::vector<double> deltas;             // sup-norm distance between successive iterates
    std::vector<double> contraction_ratios; // deltas[n+1] / deltas[n]
    std::vector<FixedPointState> trajectory;  // only when requested
};

constexpr double kDefaultFixedPointTolerance = 1e-10;
constexpr std::size_t kDefaultFixedPointMaxIters = 200;

/// One synchronous application of the joint map.
FixedPointState iterate_once(std::span<const double> d, double c, std::span<const double> s_star);

/// sup-norm distance max(max_x |D - D'|, |C - C'|).
double state_distance(const FixedPointState& a, const FixedPointState& b);

/// Iterates from the problem's initial point until the step size drops to
/// `tolerance`. Throws ConvergenceError (with the deltas so far) when
/// max_iters applications are not enough.
EquilibriumSolution solve(const EquilibriumProblem& problem,
                          double tolerance = kDefaultFixedPointTolerance,
                          std::size_t max_iters = kDefaultFixedPointMaxIters,
                          bool record_trajectory = false);

/// Largest successive step ratio along a trajectory of states, ignoring steps
/// below 10 machine epsilons. 0 when nothing is measurable.
double measure_contraction(std::span<const FixedPointState> trajectory);

/// Same measurement from precomputed step sizes.
std::vector<double> contraction_ratios(std::span<const double> deltas);

/// max(max_x |D - (sigmoid(C - D) - S)|, |C + mean D|).
double equilibrium_residual(std::span<const double> d, double c, std::span<const double> s_star);

/// CSV with header "iteration,delta,ratio"; ratio is empty where unmeasurable.
void write_trajectory_csv(std::ostream& out, const EquilibriumSolution& solution);

}  // namespace cdas
