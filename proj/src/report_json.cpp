#include "ppde/report_json.hpp"

namespace ppde {

using nlohmann::json;

json to_json(const SchemeParams& params) {
    return {{"mu", params.mu},
            {"sigma", params.sigma},
            {"quad_order", params.quad_order},
            {"epsilon0", params.epsilon0}};
}

json to_json(const SolveResult& result) {
    return {{"value", result.value},
            {"level_nodes", result.level_nodes},
            {"memo_hits", result.memo_hits},
            {"child_evals", result.child_evals},
            {"policy", to_string(result.policy)},
            {"scheme", to_json(result.params)}};
}

json to_json(const MonotonicityReport& report) {
    json j{{"verdict", report.pass ? "PASS" : "FAIL"},
           {"points", report.points},
           {"h", report.h},
           {"scheme", to_json(report.params)},
           {"min_weights",
            {{"a0", report.min_a0},
             {"a_drift", report.min_a_drift},
             {"a_diag", report.min_a_diag},
             {"a_cross", report.min_a_cross}}},
           {"max_sum_residual", report.max_sum_residual},
           {"slack",
            {{"dz", report.slack_dz},
             {"cross", report.slack_cross},
             {"diag_row", report.slack_diag_row},
             {"bound", report.slack_bound}}},
           {"diagonal_dominance", report.diagonal_dominance},
           {"lipschitz_zg", report.lipschitz_zg}};
    if (report.has_witness) {
        json gamma = json::array();
        const int d = report.witness.gamma.dim();
        for (int r = 0; r < d; ++r) {
            json row = json::array();
            for (int c = 0; c < d; ++c) row.push_back(report.witness.gamma(r, c));
            gamma.push_back(row);
        }
        j["witness"] = {{"t", report.witness.t},
                        {"y", report.witness.y},
                        {"z", report.witness.z},
                        {"gamma", gamma},
                        {"omega_endpoint", report.witness.omega_endpoint}};
    }
    return j;
}

}  // namespace ppde
