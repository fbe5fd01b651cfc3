#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "ppde/oracles.hpp"
#include "ppde/scheme.hpp"

namespace ppde {

struct ConvergenceRow {
    long n = 0;
    double h = 0.0;
    double value = 0.0;
    double reference = 0.0;
    double error = 0.0;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;  // sorted by decreasing h
    double slope = 0.0;
    double slope_halfwidth = 0.0;
    bool exact = false;  // all errors at roundoff scale; slope fit skipped
};

// Solve the registered problem at each n, compare against its closed form at
// (0, origin), and fit log error against log h.
ConvergenceTable convergence_study(const NamedProblem& problem, const SchemeParams& params,
                                   const std::vector<int>& n_list, MemoPolicy policy,
                                   double horizon = 1.0, long long budget = 100'000'000);

struct ConsistencyRow {
    double h = 0.0;
    double residual = 0.0;
};

struct ConsistencyTable {
    std::vector<ConsistencyRow> rows;
    double slope = 0.0;
    double slope_halfwidth = 0.0;
    bool exact = false;
};

// One-step residual |(phi(t,.) - T_h[phi(t+h,.)])/h - L phi| at an anchor
// state, for each h. The anchor is realized per h on a grid whose step is h
// and whose node k = anchor_time/h carries the anchor value (linear ramp
// history from the origin); anchor_time must be an integer multiple of each
// h. The generator is evaluated with the functional's analytic derivatives.
ConsistencyTable consistency_sweep(const TestFunctionalSpec& phi, const GeneratorSpec& G,
                                   const SchemeParams& params, double anchor_time,
                                   const Vec& anchor_value, const std::vector<double>& h_list);
// Anchor taken from (i, omega): time t_i and value omega_{t_i}.
ConsistencyTable consistency_sweep(const TestFunctionalSpec& phi, const GeneratorSpec& G,
                                   const SchemeParams& params, int i, const DiscretePath& omega,
                                   const std::vector<double>& h_list);

struct PerturbationSpec {
    int count = 16;        // random multi-row pairs (single-row bumps are always probed)
    double magnitude = 0.1;
    std::uint64_t seed = 11;
};

struct StabilityReport {
    double lipschitz_ratio = 0.0;  // sup |u^h(w1) - u^h(w2)| / ||w1 - w2||
    int lipschitz_pairs = 0;
    double time_ratio = 0.0;  // sup |u^h(t,w) - u^h(t',w_{.^t})| / sqrt(t'-t+h)
    int time_pairs = 0;
};

StabilityReport stability_probe(const ProblemSpec& problem, const SchemeParams& params,
                                const PerturbationSpec& perturbation, MemoPolicy policy,
                                long long budget = 100'000'000);

// Least-squares slope of log y against log x, with a 2-standard-error
// half-width.
struct FitResult {
    double slope = 0.0;
    double halfwidth = 0.0;
};
FitResult fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

nlohmann::json to_json(const ConvergenceTable& table);
nlohmann::json to_json(const ConsistencyTable& table);
std::string to_csv(const ConvergenceTable& table);
std::string to_csv(const ConsistencyTable& table);

// format is "csv" or "json".
void emit(const ConvergenceTable& table, const std::string& path, const std::string& format);
void emit(const ConsistencyTable& table, const std::string& path, const std::string& format);

}  // namespace ppde
