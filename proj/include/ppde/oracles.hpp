#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppde/scheme.hpp"

namespace ppde {

struct ReferenceValue {
    enum class Kind { ClosedForm, MonteCarlo, BruteForce };
    double value = 0.0;
    Kind kind = Kind::ClosedForm;
    double stderr_ = 0.0;  // nonzero only for Monte Carlo
    std::string note;
};

// A named problem instance: generator/terminal with fixed parameters, an
// optional exact solution, and the memo policies declared sound for it.
struct NamedProblem {
    std::string id;
    int dim = 1;
    std::string generator;
    nlohmann::json generator_params;
    std::string terminal;
    nlohmann::json terminal_params;
    std::function<double(const ProblemSpec&, int i, const DiscretePath&)> exact;  // may be null
    std::vector<MemoPolicy> sound_policies;
};

const std::vector<NamedProblem>& registered_problems();
const NamedProblem& find_problem(const std::string& id);
ProblemSpec instantiate(const NamedProblem& named, const TimeGrid& grid);

// Exact u(t_i, omega) for a registered instance with a closed form.
ReferenceValue closed_form(const std::string& problem_id, const ProblemSpec& problem, int i,
                           const DiscretePath& omega);

// Feynman-Kac sampling for problems whose generator is the heat operator
// plus a linear zero-order term: mean of g over simulated Brownian grid
// skeletons started at (i, omega), scaled by exp(lambda (T - t_i)).
ReferenceValue mc_reference(const ProblemSpec& problem, int i, const DiscretePath& omega,
                            long long samples, std::uint64_t seed);

// Lower-bound reference for one-dimensional uncertain-volatility problems:
// max over the given constant volatilities of the corresponding linear
// Monte-Carlo value. Exact for convex or concave terminals.
ReferenceValue mc_sup_reference(const ProblemSpec& problem, const std::vector<double>& sigma_grid,
                                long long samples, std::uint64_t seed);

// Full-tree backward evaluation with no memoization; shares the stencil
// construction but owns its recursion and difference arithmetic.
ReferenceValue brute_force_solve(const ProblemSpec& problem, const SchemeParams& params,
                                 long long budget = 100'000'000);
double brute_force_eval(const ProblemSpec& problem, const SchemeParams& params, int i,
                        const DiscretePath& omega, long long budget = 100'000'000);

}  // namespace ppde
