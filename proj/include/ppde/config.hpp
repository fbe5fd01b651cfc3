#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppde/harness.hpp"
#include "ppde/oracles.hpp"
#include "ppde/scheme.hpp"

namespace ppde {

// Parsed and validated run configuration. The problem section either names a
// registered instance ("id") or spells out dimension/generator/terminal.
struct RunConfig {
    // problem
    std::string problem_id;  // empty when spelled out
    int dim = 1;
    double horizon = 1.0;
    std::string generator_name;
    nlohmann::json generator_params = nlohmann::json::object();
    std::string terminal_name;
    nlohmann::json terminal_params = nlohmann::json::object();

    // scheme
    SchemeParams params;
    MemoPolicy policy = MemoPolicy::None;
    long long budget = 100'000'000;

    // run
    int n = 0;  // 0 = unset
    std::vector<int> n_list;
    std::uint64_t seed = 0;
    std::string out;
    std::string format = "json";

    // consistency section
    std::optional<TestFunctionalSpec> functional;
    double anchor_time = 0.5;
    Vec anchor_value;
    std::vector<double> h_list;

    // audit section
    SamplePointSpec sample;
};

RunConfig parse_config(const nlohmann::json& doc);

// Grid + generator + terminal for the configured problem with `n` steps.
ProblemSpec build_problem(const RunConfig& config, int n);
// Registered instance named by the config (ConfigError when absent).
const NamedProblem& named_problem(const RunConfig& config);

}  // namespace ppde
