#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "ppde/config.hpp"
#include "ppde/errors.hpp"
#include "ppde/harness.hpp"
#include "ppde/report_json.hpp"
#include "ppde/rng.hpp"

namespace {

using nlohmann::json;

std::string single_line(std::string s) {
    for (char& c : s) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

json load_config(const std::string& path) {
    std::string text;
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        text = ss.str();
    } else {
        std::ifstream is(path);
        if (!is) throw ppde::ConfigError("cannot open config '" + path + "'");
        std::ostringstream ss;
        ss << is.rdbuf();
        text = ss.str();
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ppde::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

struct Flags {
    std::string config_path;
    int n = -1;
    std::int64_t seed = -1;
    std::string out;
    std::string format;
    std::int64_t budget = -1;
    bool suggest = false;
};

void apply_overrides(ppde::RunConfig& cfg, const Flags& flags) {
    if (flags.n >= 0) cfg.n = flags.n;
    if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);
    if (!flags.out.empty()) cfg.out = flags.out;
    if (!flags.format.empty()) {
        if (flags.format != "csv" && flags.format != "json") {
            throw ppde::ConfigError("field run.format must be 'csv' or 'json'");
        }
        cfg.format = flags.format;
    }
    if (flags.budget >= 0) {
        if (flags.budget < 1) throw ppde::ConfigError("field scheme.budget must be >= 1");
        cfg.budget = flags.budget;
    }
}

int cmd_solve(ppde::RunConfig& cfg) {
    if (cfg.n < 1) throw ppde::ConfigError("field run.n must be >= 1");
    const ppde::ProblemSpec pb = ppde::build_problem(cfg, cfg.n);
    ppde::SolveOptions opts;
    opts.policy = cfg.policy;
    opts.budget = cfg.budget;
    const ppde::SolveResult res = ppde::solve(pb, cfg.params, opts);
    json out = ppde::to_json(res);
    out["problem"] = {{"dimension", cfg.dim},
                      {"horizon", cfg.horizon},
                      {"n", cfg.n},
                      {"generator", cfg.generator_name},
                      {"terminal", cfg.terminal_name}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_check(ppde::RunConfig& cfg, bool suggest) {
    const ppde::GeneratorSpec G =
        ppde::make_generator(cfg.generator_name, cfg.generator_params, cfg.dim);
    const double h = cfg.n >= 1 ? cfg.horizon / cfg.n : 0.0;
    if (suggest) {
        const ppde::SchemeParams suggested =
            ppde::suggest_params(G, cfg.sample, cfg.params.epsilon0, cfg.params.quad_order);
        const ppde::MonotonicityReport rep =
            ppde::check_monotonicity(G, suggested, h, cfg.sample);
        json out{{"suggested", ppde::to_json(suggested)}, {"report", ppde::to_json(rep)}};
        std::cout << out.dump(2) << "\n";
        return rep.pass ? 0 : 4;
    }
    const ppde::MonotonicityReport rep = ppde::check_monotonicity(G, cfg.params, h, cfg.sample);
    std::cout << ppde::to_json(rep).dump(2) << "\n";
    return rep.pass ? 0 : 4;
}

int cmd_converge(ppde::RunConfig& cfg) {
    const ppde::NamedProblem& named = ppde::named_problem(cfg);
    if (cfg.n_list.empty()) throw ppde::ConfigError("field run.n_list is required for converge");
    const ppde::ConvergenceTable table = ppde::convergence_study(
        named, cfg.params, cfg.n_list, cfg.policy, cfg.horizon, cfg.budget);
    if (!cfg.out.empty()) ppde::emit(table, cfg.out, cfg.format);
    std::cout << ppde::to_json(table).dump(2) << "\n";
    return 0;
}

int cmd_consistency(ppde::RunConfig& cfg) {
    if (!cfg.functional) throw ppde::ConfigError("section 'functional' is required here");
    if (cfg.h_list.empty()) throw ppde::ConfigError("field h_list is required here");
    const ppde::GeneratorSpec G =
        ppde::make_generator(cfg.generator_name, cfg.generator_params, cfg.dim);
    const ppde::ConsistencyTable table = ppde::consistency_sweep(
        *cfg.functional, G, cfg.params, cfg.anchor_time, cfg.anchor_value, cfg.h_list);
    if (!cfg.out.empty()) ppde::emit(table, cfg.out, cfg.format);
    std::cout << ppde::to_json(table).dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* env = std::getenv("PPDE_THREADS")) {
        ppde::set_max_threads(std::atoi(env));
    }

    CLI::App app{"Monotone finite-difference solver for path-dependent parabolic equations"};
    app.require_subcommand(1);

    Flags flags;
    std::string command;
    for (const char* name : {"solve", "check", "converge", "consistency"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", flags.config_path, "config JSON path, or - for stdin")
            ->required();
        sub->add_option("--n", flags.n, "override run.n");
        sub->add_option("--seed", flags.seed, "override run.seed");
        sub->add_option("--out", flags.out, "override run.out");
        sub->add_option("--format", flags.format, "override run.format (csv|json)");
        sub->add_option("--budget", flags.budget, "override scheme.budget");
        if (std::string(name) == "check") {
            sub->add_flag("--suggest", flags.suggest, "search for passing scheme parameters");
        }
        sub->callback([&command, name] { command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << single_line(e.what()) << "\n";
        return 2;
    }

    try {
        ppde::RunConfig cfg = ppde::parse_config(load_config(flags.config_path));
        apply_overrides(cfg, flags);
        if (command == "solve") return cmd_solve(cfg);
        if (command == "check") return cmd_check(cfg, flags.suggest);
        if (command == "converge") return cmd_converge(cfg);
        if (command == "consistency") return cmd_consistency(cfg);
        std::cerr << "error: unknown command\n";
        return 1;
    } catch (const ppde::ConfigError& e) {
        std::cerr << "error: " << single_line(e.what()) << "\n";
        return 2;
    } catch (const ppde::BudgetError& e) {
        std::cerr << "error: " << single_line(e.what()) << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << single_line(e.what()) << "\n";
        return 1;
    }
}
