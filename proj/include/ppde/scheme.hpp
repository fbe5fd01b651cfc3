#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppde/functionals.hpp"
#include "ppde/grid.hpp"
#include "ppde/linalg.hpp"
#include "ppde/stencil.hpp"

namespace ppde {

struct ProblemSpec {
    int dim = 1;
    TimeGrid grid;
    GeneratorSpec generator;
    TerminalSpec terminal;
};

void validate_problem(const ProblemSpec& problem);

// Value, gradient and Hessian surrogates reconstructed from the one-step
// expectations. d2 is symmetrized by averaging (the cross stencils already
// make it symmetric up to roundoff).
struct DiffOps {
    double d0 = 0.0;
    Vec d1;
    Matrix d2;
};

// ex is indexed by measure_index(); it must hold all 1 + 2d + d(d-1) values.
DiffOps diff_operators(const std::vector<double>& ex, const SchemeParams& params, double h,
                       int dim);

// One application of the discretization operator at node (i, omega):
// D0 + h G(t_i, omega, D0, D1, D2), with phi evaluated on every stencil
// child of the step.
double apply_step(const ProblemSpec& problem, const SchemeParams& params, int i,
                  const DiscretePath& omega, const PathFunctional& phi);

// Child-measure weights of the one-step comparison expansion. With the
// derivative-sign conditions they are all nonnegative and sum to 1 + h dy.
struct StencilWeights {
    double a0 = 0.0;
    Vec a_drift;
    Vec a_diag;
    Matrix a_cross;  // off-diagonal entries; diagonal unused
    double dy = 0.0;
    double sum_residual = 0.0;
};

StencilWeights monotonicity_weights(const DerivativeBundle& b, const SchemeParams& params,
                                    double h);

// Point-cloud specification for the derivative audit. Skeletons are sampled
// on a grid with `path_steps` steps over `horizon`, with entries uniform in
// [omega_lo, omega_hi]; y, z, gamma likewise (gamma symmetric).
struct SamplePointSpec {
    int count = 1000;
    std::uint64_t seed = 7;
    double horizon = 1.0;
    int path_steps = 4;
    double omega_lo = -1.0, omega_hi = 1.0;
    double y_lo = -1.0, y_hi = 1.0;
    double z_lo = -1.0, z_hi = 1.0;
    double gamma_lo = -2.0, gamma_hi = 2.0;
};

struct SamplePointEcho {
    double t = 0.0;
    double y = 0.0;
    Vec z;
    Matrix gamma;
    Vec omega_endpoint;
};

struct MonotonicityReport {
    SchemeParams params;
    double h = 0.0;
    int points = 0;
    // minima over the sample, per weight family
    double min_a0 = 0.0;
    double min_a_drift = 0.0;
    double min_a_diag = 0.0;
    double min_a_cross = 0.0;
    double max_sum_residual = 0.0;
    // minima of the derivative-condition slacks over the sample
    double slack_dz = 0.0;
    double slack_cross = 0.0;
    double slack_diag_row = 0.0;
    double slack_bound = 0.0;  // (1 - epsilon0) minus the weight-mass bound
    bool diagonal_dominance = true;
    bool pass = false;
    bool has_witness = false;
    SamplePointEcho witness;
    double lipschitz_zg = 0.0;  // generator's L0, informational
};

MonotonicityReport check_monotonicity(const GeneratorSpec& G, const SchemeParams& params,
                                      double h, const SamplePointSpec& sample);

// Doubling search from unit mu/sigma until the audit passes with margin
// epsilon0 (all sigma kept equal; requires the diagonal-dominance row
// condition to hold on the sample). Throws when the binding inequality
// cannot be satisfied by scaling.
SchemeParams suggest_params(const GeneratorSpec& G, const SamplePointSpec& sample,
                            double epsilon0, int quad_order = 5);

// State-key policies for memoizing the backward recursion. Soundness is a
// declared contract: the policy key must determine u^h(t_i, .) for the
// problem at hand.
enum class MemoPolicy { None, FullPrefix, Markov, MarkovRunningSum, MarkovRunningMax };

MemoPolicy memo_policy_from_string(const std::string& name);
std::string to_string(MemoPolicy policy);

struct SolveOptions {
    MemoPolicy policy = MemoPolicy::None;
    long long budget = 100'000'000;  // child-evaluation cap
};

struct SolveResult {
    double value = 0.0;
    std::vector<long long> level_nodes;  // evaluations performed per level
    long long memo_hits = 0;
    long long child_evals = 0;
    SchemeParams params;
    MemoPolicy policy = MemoPolicy::None;
};

// Backward recursion from (0, zero path) down the stencil tree.
SolveResult solve(const ProblemSpec& problem, const SchemeParams& params,
                  const SolveOptions& options);

// Same recursion rooted at (i, omega); omega must be defined exactly up to i.
double evaluate_uh(const ProblemSpec& problem, const SchemeParams& params, int i,
                   const DiscretePath& omega, const SolveOptions& options);

}  // namespace ppde
