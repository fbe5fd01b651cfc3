#include "ppde/config.hpp"

#include <cmath>

#include "ppde/errors.hpp"

namespace ppde {

namespace {

using nlohmann::json;

const json& require_object(const json& doc, const std::string& key) {
    if (!doc.contains(key)) throw ConfigError("missing section '" + key + "'");
    if (!doc[key].is_object()) throw ConfigError("section '" + key + "' must be an object");
    return doc[key];
}

double number_field(const json& obj, const std::string& path, double fallback,
                    bool required = false) {
    const auto key = path.substr(path.rfind('.') + 1);
    if (!obj.contains(key)) {
        if (required) throw ConfigError("missing field " + path);
        return fallback;
    }
    if (!obj[key].is_number()) throw ConfigError("field " + path + " must be a number");
    return obj[key].get<double>();
}

std::string string_field(const json& obj, const std::string& path, const std::string& fallback,
                         bool required = false) {
    const auto key = path.substr(path.rfind('.') + 1);
    if (!obj.contains(key)) {
        if (required) throw ConfigError("missing field " + path);
        return fallback;
    }
    if (!obj[key].is_string()) throw ConfigError("field " + path + " must be a string");
    return obj[key].get<std::string>();
}

Vec vec_field(const json& obj, const std::string& path, int dim, double fallback) {
    const auto key = path.substr(path.rfind('.') + 1);
    if (!obj.contains(key)) return Vec(dim, fallback);
    const json& v = obj[key];
    if (v.is_number()) return Vec(dim, v.get<double>());
    if (v.is_array()) {
        if (static_cast<int>(v.size()) != dim) {
            throw ConfigError("field " + path + " must have one entry per coordinate");
        }
        Vec out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError("field " + path + " entries must be numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }
    throw ConfigError("field " + path + " must be a number or an array");
}

TestFunctionalSpec parse_functional(const json& f, int dim) {
    TestFunctionalSpec spec;
    spec.dim = dim;
    const std::string kind = string_field(f, "functional.kind", "cylinder");
    if (kind == "cylinder") {
        spec.kind = TestFunctionalSpec::Kind::Cylinder;
    } else if (kind == "integral") {
        spec.kind = TestFunctionalSpec::Kind::Integral;
    } else {
        throw ConfigError("field functional.kind must be 'cylinder' or 'integral'");
    }
    if (!f.contains("terms") || !f["terms"].is_array() || f["terms"].empty()) {
        throw ConfigError("field functional.terms must be a nonempty array");
    }
    for (const auto& t : f["terms"]) {
        PolyTerm term;
        term.coef = number_field(t, "functional.terms.coef", 1.0);
        term.tpow = static_cast<int>(number_field(t, "functional.terms.tpow", 0.0));
        auto read_pows = [&](const char* key) {
            std::vector<int> pows;
            if (!t.contains(key)) return pows;
            if (!t[key].is_array()) {
                throw ConfigError(std::string("field functional.terms.") + key +
                                  " must be an array");
            }
            for (const auto& e : t[key]) pows.push_back(e.get<int>());
            if (static_cast<int>(pows.size()) > dim) {
                throw ConfigError(std::string("field functional.terms.") + key +
                                  " has more entries than coordinates");
            }
            return pows;
        };
        term.xpow = read_pows("xpow");
        term.ipow = read_pows("ipow");
        if (!term.ipow.empty() && spec.kind != TestFunctionalSpec::Kind::Integral) {
            throw ConfigError("functional.terms.ipow requires functional.kind 'integral'");
        }
        spec.terms.push_back(std::move(term));
    }
    return spec;
}

}  // namespace

RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig cfg;

    const json& pb = require_object(doc, "problem");
    cfg.problem_id = string_field(pb, "problem.id", "");
    if (!cfg.problem_id.empty()) {
        const NamedProblem& named = find_problem(cfg.problem_id);
        cfg.dim = named.dim;
        cfg.generator_name = named.generator;
        cfg.generator_params = named.generator_params;
        cfg.terminal_name = named.terminal;
        cfg.terminal_params = named.terminal_params;
        cfg.horizon = number_field(pb, "problem.horizon", 1.0);
    } else {
        cfg.dim = static_cast<int>(number_field(pb, "problem.dimension", 1.0));
        if (cfg.dim < 1) throw ConfigError("field problem.dimension must be >= 1");
        cfg.horizon = number_field(pb, "problem.horizon", 1.0);
        const json& gen = require_object(pb, "generator");
        cfg.generator_name = string_field(gen, "problem.generator.name", "", true);
        cfg.generator_params = gen.contains("params") ? gen["params"] : json::object();
        const json& term = require_object(pb, "terminal");
        cfg.terminal_name = string_field(term, "problem.terminal.name", "", true);
        cfg.terminal_params = term.contains("params") ? term["params"] : json::object();
    }
    if (!(cfg.horizon > 0.0)) throw ConfigError("field problem.horizon must be > 0");

    const json scheme = doc.contains("scheme") ? doc["scheme"] : json::object();
    if (!scheme.is_object()) throw ConfigError("section 'scheme' must be an object");
    cfg.params.mu = vec_field(scheme, "scheme.mu", cfg.dim, 1.0);
    cfg.params.sigma = vec_field(scheme, "scheme.sigma", cfg.dim, std::sqrt(2.0));
    cfg.params.quad_order = static_cast<int>(number_field(scheme, "scheme.quad_order", 5.0));
    cfg.params.epsilon0 = number_field(scheme, "scheme.epsilon0", 0.25);
    for (double v : cfg.params.mu) {
        if (!(v > 0.0)) throw ConfigError("field scheme.mu entries must be > 0");
    }
    for (double v : cfg.params.sigma) {
        if (!(v > 0.0)) throw ConfigError("field scheme.sigma entries must be > 0");
    }
    if (cfg.params.quad_order < 1 || cfg.params.quad_order > kMaxQuadOrder) {
        throw ConfigError("field scheme.quad_order must lie in [1, 64]");
    }
    if (!(cfg.params.epsilon0 > 0.0 && cfg.params.epsilon0 < 1.0)) {
        throw ConfigError("field scheme.epsilon0 must lie in (0, 1)");
    }
    cfg.policy = memo_policy_from_string(string_field(scheme, "scheme.memo", "none"));
    cfg.budget = static_cast<long long>(number_field(scheme, "scheme.budget", 1e8));
    if (cfg.budget < 1) throw ConfigError("field scheme.budget must be >= 1");

    const json run = doc.contains("run") ? doc["run"] : json::object();
    if (!run.is_object()) throw ConfigError("section 'run' must be an object");
    cfg.n = static_cast<int>(number_field(run, "run.n", 0.0));
    if (run.contains("n_list")) {
        if (!run["n_list"].is_array()) throw ConfigError("field run.n_list must be an array");
        for (const auto& e : run["n_list"]) cfg.n_list.push_back(e.get<int>());
    }
    cfg.seed = static_cast<std::uint64_t>(number_field(run, "run.seed", 0.0));
    cfg.out = string_field(run, "run.out", "");
    cfg.format = string_field(run, "run.format", "json");
    if (cfg.format != "csv" && cfg.format != "json") {
        throw ConfigError("field run.format must be 'csv' or 'json'");
    }

    if (doc.contains("functional")) {
        cfg.functional = parse_functional(doc["functional"], cfg.dim);
    }
    if (doc.contains("anchor")) {
        const json& a = doc["anchor"];
        if (!a.is_object()) throw ConfigError("section 'anchor' must be an object");
        cfg.anchor_time = number_field(a, "anchor.time", 0.5);
        cfg.anchor_value = vec_field(a, "anchor.value", cfg.dim, 0.0);
    } else {
        cfg.anchor_value = Vec(cfg.dim, 0.0);
    }
    if (doc.contains("h_list")) {
        if (!doc["h_list"].is_array()) throw ConfigError("field h_list must be an array");
        for (const auto& e : doc["h_list"]) cfg.h_list.push_back(e.get<double>());
    }

    if (doc.contains("sample")) {
        const json& s = doc["sample"];
        if (!s.is_object()) throw ConfigError("section 'sample' must be an object");
        cfg.sample.count = static_cast<int>(number_field(s, "sample.count", 1000.0));
        cfg.sample.seed = static_cast<std::uint64_t>(number_field(s, "sample.seed", 7.0));
        cfg.sample.horizon = number_field(s, "sample.horizon", cfg.horizon);
        cfg.sample.path_steps = static_cast<int>(number_field(s, "sample.path_steps", 4.0));
        cfg.sample.omega_lo = number_field(s, "sample.omega_lo", -1.0);
        cfg.sample.omega_hi = number_field(s, "sample.omega_hi", 1.0);
        cfg.sample.y_lo = number_field(s, "sample.y_lo", -1.0);
        cfg.sample.y_hi = number_field(s, "sample.y_hi", 1.0);
        cfg.sample.z_lo = number_field(s, "sample.z_lo", -1.0);
        cfg.sample.z_hi = number_field(s, "sample.z_hi", 1.0);
        cfg.sample.gamma_lo = number_field(s, "sample.gamma_lo", -2.0);
        cfg.sample.gamma_hi = number_field(s, "sample.gamma_hi", 2.0);
        if (cfg.sample.count < 1) throw ConfigError("field sample.count must be >= 1");
    } else {
        cfg.sample.horizon = cfg.horizon;
    }
    return cfg;
}

ProblemSpec build_problem(const RunConfig& config, int n) {
    if (n < 1) throw ConfigError("field run.n must be >= 1");
    ProblemSpec pb;
    pb.dim = config.dim;
    pb.grid = make_grid(config.horizon, n);
    pb.generator = make_generator(config.generator_name, config.generator_params, config.dim);
    pb.terminal = make_terminal(config.terminal_name, config.terminal_params, config.dim);
    validate_problem(pb);
    return pb;
}

const NamedProblem& named_problem(const RunConfig& config) {
    if (config.problem_id.empty()) {
        throw ConfigError("field problem.id naming a registered problem is required here");
    }
    return find_problem(config.problem_id);
}

}  // namespace ppde
