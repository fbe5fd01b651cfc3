#include "ppde/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "ppde/errors.hpp"
#include "ppde/rng.hpp"

namespace ppde {

namespace {

constexpr double kExactEpsFactor = 64.0;

bool roundoff_scale(double err, double magnitude) {
    return err <= kExactEpsFactor * std::numeric_limits<double>::epsilon() *
                      std::max(std::abs(magnitude), 1.0);
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

FitResult fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("fit_loglog: need at least two points");
    }
    const size_t m = x.size();
    std::vector<double> lx(m), ly(m);
    for (size_t k = 0; k < m; ++k) {
        if (!(x[k] > 0.0)) throw std::invalid_argument("fit_loglog: x must be positive");
        lx[k] = std::log(x[k]);
        ly[k] = std::log(std::max(y[k], 1e-300));
    }
    double mx = 0.0, my = 0.0;
    for (size_t k = 0; k < m; ++k) {
        mx += lx[k];
        my += ly[k];
    }
    mx /= double(m);
    my /= double(m);
    double sxx = 0.0, sxy = 0.0;
    for (size_t k = 0; k < m; ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_loglog: x values must differ");
    FitResult fit;
    fit.slope = sxy / sxx;
    if (m > 2) {
        double rss = 0.0;
        const double intercept = my - fit.slope * mx;
        for (size_t k = 0; k < m; ++k) {
            const double r = ly[k] - (intercept + fit.slope * lx[k]);
            rss += r * r;
        }
        fit.halfwidth = 2.0 * std::sqrt(rss / double(m - 2) / sxx);
    }
    return fit;
}

ConvergenceTable convergence_study(const NamedProblem& named, const SchemeParams& params,
                                   const std::vector<int>& n_list, MemoPolicy policy,
                                   double horizon, long long budget) {
    if (n_list.size() < 3) throw ConfigError("run.n_list needs at least 3 entries");
    for (size_t k = 0; k < n_list.size(); ++k) {
        if (n_list[k] < 2) throw ConfigError("run.n_list entries must be >= 2");
        if (k > 0 && n_list[k] <= n_list[k - 1]) {
            throw ConfigError("run.n_list must be strictly increasing");
        }
    }
    if (!named.exact) {
        throw ConfigError("problem '" + named.id + "' has no registered closed form");
    }

    ConvergenceTable table;
    double ref_scale = 0.0;
    for (int n : n_list) {
        const ProblemSpec pb = instantiate(named, make_grid(horizon, n));
        SolveOptions opts;
        opts.policy = policy;
        opts.budget = budget;
        const SolveResult res = solve(pb, params, opts);
        const DiscretePath origin = DiscretePath::zero(pb.grid, pb.dim);
        const double ref = named.exact(pb, 0, origin);
        ConvergenceRow row;
        row.n = n;
        row.h = pb.grid.step();
        row.value = res.value;
        row.reference = ref;
        row.error = std::abs(res.value - ref);
        ref_scale = std::max(ref_scale, std::abs(ref));
        table.rows.push_back(row);
    }

    table.exact = true;
    for (const auto& row : table.rows) {
        if (!roundoff_scale(row.error, ref_scale)) table.exact = false;
    }
    if (table.exact) {
        table.slope = std::numeric_limits<double>::quiet_NaN();
        table.slope_halfwidth = std::numeric_limits<double>::quiet_NaN();
    } else {
        std::vector<double> hs, errs;
        for (const auto& row : table.rows) {
            hs.push_back(row.h);
            errs.push_back(row.error);
        }
        const FitResult fit = fit_loglog(hs, errs);
        table.slope = fit.slope;
        table.slope_halfwidth = fit.halfwidth;
    }
    return table;
}

namespace {

DiscretePath ramp_path(const TimeGrid& grid, const Vec& anchor_value, int k) {
    const int d = static_cast<int>(anchor_value.size());
    std::vector<double> rows(static_cast<size_t>(k + 1) * d, 0.0);
    for (int j = 1; j <= k; ++j) {
        for (int c = 0; c < d; ++c) {
            rows[static_cast<size_t>(j) * d + c] = anchor_value[c] * double(j) / double(k);
        }
    }
    return DiscretePath::from_rows(grid, d, std::move(rows));
}

}  // namespace

ConsistencyTable consistency_sweep(const TestFunctionalSpec& phi, const GeneratorSpec& G,
                                   const SchemeParams& params, double anchor_time,
                                   const Vec& anchor_value, const std::vector<double>& h_list) {
    const int d = G.dim;
    if (phi.dim != d) throw ConfigError("functional dimension does not match the generator");
    if (static_cast<int>(anchor_value.size()) != d) {
        throw ConfigError("anchor.value dimension does not match the generator");
    }
    if (h_list.size() < 2) throw ConfigError("h_list needs at least 2 entries");
    for (size_t k = 0; k < h_list.size(); ++k) {
        if (!(h_list[k] > 0.0)) throw ConfigError("h_list entries must be > 0");
        if (k > 0 && h_list[k] >= h_list[k - 1]) {
            throw ConfigError("h_list must be strictly decreasing");
        }
    }
    if (anchor_time < 0.0) throw ConfigError("anchor.time must be >= 0");
    validate_params(params, d);

    ConsistencyTable table;
    double lphi_scale = 1.0;
    for (double h : h_list) {
        int k = 0;
        if (anchor_time > 0.0) {
            const double ratio = anchor_time / h;
            k = static_cast<int>(std::llround(ratio));
            if (k < 1 || std::abs(ratio - k) > 1e-9) {
                throw ConfigError("anchor.time must be an integer multiple of every h");
            }
        } else {
            for (double v : anchor_value) {
                if (v != 0.0) {
                    throw ConfigError("anchor at time 0 must carry the origin value");
                }
            }
        }
        const TimeGrid grid = make_grid(anchor_time + h, k + 1);
        const double h_eff = grid.step();
        const DiscretePath anchor = ramp_path(grid, anchor_value, k);

        const FunctionalJet jet = eval_test_functional(phi, k, anchor);
        const double g_at_jet =
            eval_generator(G, k, anchor, jet.value, jet.dw, jet.dww);
        const double lphi = -jet.dt - g_at_jet;

        const Vec base_integral = running_integral(anchor, k);
        const double t_next = grid.node(k + 1);
        ProblemSpec pb;
        pb.dim = d;
        pb.grid = grid;
        pb.generator = G;
        pb.terminal = make_terminal("const", {{"value", 0.0}}, d);
        const double applied =
            apply_step(pb, params, k, anchor, [&](const DiscretePath& child) {
                const auto e = child.endpoint();
                Vec x(e.begin(), e.end());
                Vec I = base_integral;
                for (int c = 0; c < d; ++c) I[c] += x[c] * h_eff;
                return eval_functional_value(phi, t_next, x, I);
            });

        ConsistencyRow row;
        row.h = h_eff;
        row.residual = std::abs((jet.value - applied) / h_eff - lphi);
        lphi_scale = std::max(lphi_scale, std::abs(lphi));
        table.rows.push_back(row);
    }

    table.exact = true;
    for (const auto& row : table.rows) {
        if (!roundoff_scale(row.residual, lphi_scale)) table.exact = false;
    }
    if (table.exact) {
        table.slope = std::numeric_limits<double>::quiet_NaN();
        table.slope_halfwidth = std::numeric_limits<double>::quiet_NaN();
    } else {
        std::vector<double> hs, rs;
        for (const auto& row : table.rows) {
            hs.push_back(row.h);
            rs.push_back(row.residual);
        }
        const FitResult fit = fit_loglog(hs, rs);
        table.slope = fit.slope;
        table.slope_halfwidth = fit.halfwidth;
    }
    return table;
}

ConsistencyTable consistency_sweep(const TestFunctionalSpec& phi, const GeneratorSpec& G,
                                   const SchemeParams& params, int i, const DiscretePath& omega,
                                   const std::vector<double>& h_list) {
    const auto row = omega.row(i);
    return consistency_sweep(phi, G, params, omega.grid().node(i), Vec(row.begin(), row.end()),
                             h_list);
}

namespace {

double stopped_sup_distance(const DiscretePath& a, const DiscretePath& b, int upto) {
    double m = 0.0;
    Vec diff(a.dim());
    for (int j = 0; j <= upto; ++j) {
        const auto ra = a.row(j);
        const auto rb = b.row(j);
        for (int c = 0; c < a.dim(); ++c) diff[c] = ra[c] - rb[c];
        m = std::max(m, euclidean_norm(diff.data(), a.dim()));
    }
    return m;
}

DiscretePath freeze_to(const DiscretePath& base, int target) {
    DiscretePath p = base;
    const auto e = base.endpoint();
    const Vec row(e.begin(), e.end());
    for (int j = base.upto(); j < target; ++j) p = DiscretePath::extended(p, row);
    return p;
}

DiscretePath random_walk(const TimeGrid& grid, int dim, int upto, double scale,
                         NormalStream& rng) {
    std::vector<double> rows(static_cast<size_t>(upto + 1) * dim, 0.0);
    for (int j = 1; j <= upto; ++j) {
        for (int c = 0; c < dim; ++c) {
            rows[static_cast<size_t>(j) * dim + c] =
                rows[static_cast<size_t>(j - 1) * dim + c] + scale * rng.normal();
        }
    }
    return DiscretePath::from_rows(grid, dim, std::move(rows));
}

}  // namespace

StabilityReport stability_probe(const ProblemSpec& problem, const SchemeParams& params,
                                const PerturbationSpec& perturbation, MemoPolicy policy,
                                long long budget) {
    validate_problem(problem);
    const int n = problem.grid.steps();
    const int d = problem.dim;
    SolveOptions opts;
    opts.policy = policy;
    opts.budget = budget;
    NormalStream rng(perturbation.seed);

    StabilityReport rep;
    const double mag = perturbation.magnitude;

    // Space regularity: single-row bumps at every node, plus random
    // multi-row bumps, all anchored at i = n-1 and i = n.
    auto probe_pair = [&](int i, const DiscretePath& w1, const DiscretePath& w2) {
        const double dist = stopped_sup_distance(w1, w2, i);
        if (dist <= 0.0) return;  // degenerate pair
        const double u1 = evaluate_uh(problem, params, i, w1, opts);
        const double u2 = evaluate_uh(problem, params, i, w2, opts);
        rep.lipschitz_ratio = std::max(rep.lipschitz_ratio, std::abs(u1 - u2) / dist);
        ++rep.lipschitz_pairs;
    };

    for (int i : {n - 1, n}) {
        if (i < 1) continue;
        const DiscretePath base = random_walk(problem.grid, d, i, 0.5 * mag, rng);
        for (int r = 1; r <= i; ++r) {
            std::vector<double> rows;
            for (int j = 0; j <= i; ++j) {
                const auto row = base.row(j);
                rows.insert(rows.end(), row.begin(), row.end());
            }
            rows[static_cast<size_t>(r) * d] += mag;
            probe_pair(i, base, DiscretePath::from_rows(problem.grid, d, std::move(rows)));
        }
        for (int k = 0; k < perturbation.count; ++k) {
            std::vector<double> rows;
            for (int j = 0; j <= i; ++j) {
                const auto row = base.row(j);
                rows.insert(rows.end(), row.begin(), row.end());
            }
            for (int j = 1; j <= i; ++j) {
                for (int c = 0; c < d; ++c) {
                    rows[static_cast<size_t>(j) * d + c] += mag * (rng.uniform01() - 0.5);
                }
            }
            probe_pair(i, base, DiscretePath::from_rows(problem.grid, d, std::move(rows)));
        }
    }

    // Time regularity along frozen paths, from the origin path and two
    // random skeletons.
    for (int s = 0; s < 3; ++s) {
        for (int i = 0; i < n; ++i) {
            DiscretePath trunc = s == 0 ? freeze_to(DiscretePath::zero(problem.grid, d), i)
                                        : random_walk(problem.grid, d, i, 0.5 * mag, rng);
            const double ui = evaluate_uh(problem, params, i, trunc, opts);
            for (int j = i + 1; j <= n; ++j) {
                const double uj = evaluate_uh(problem, params, j, freeze_to(trunc, j), opts);
                const double denom = std::sqrt(problem.grid.node(j) - problem.grid.node(i) +
                                               problem.grid.step());
                rep.time_ratio = std::max(rep.time_ratio, std::abs(ui - uj) / denom);
                ++rep.time_pairs;
            }
        }
    }
    return rep;
}

nlohmann::json to_json(const ConvergenceTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows) {
        rows.push_back({{"n", r.n},
                        {"h", r.h},
                        {"value", r.value},
                        {"reference", r.reference},
                        {"error", r.error}});
    }
    return {{"rows", rows},
            {"slope", table.slope},
            {"slope_halfwidth", table.slope_halfwidth},
            {"exact", table.exact}};
}

nlohmann::json to_json(const ConsistencyTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows) {
        rows.push_back({{"h", r.h}, {"residual", r.residual}});
    }
    return {{"rows", rows},
            {"slope", table.slope},
            {"slope_halfwidth", table.slope_halfwidth},
            {"exact", table.exact}};
}

std::string to_csv(const ConvergenceTable& table) {
    std::string out = "n,h,value,reference,error\n";
    for (const auto& r : table.rows) {
        out += std::to_string(r.n) + "," + fmt17(r.h) + "," + fmt17(r.value) + "," +
               fmt17(r.reference) + "," + fmt17(r.error) + "\n";
    }
    return out;
}

std::string to_csv(const ConsistencyTable& table) {
    std::string out = "h,residual\n";
    for (const auto& r : table.rows) {
        out += fmt17(r.h) + "," + fmt17(r.residual) + "\n";
    }
    return out;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("emit: cannot open '" + path + "' for writing");
    os << content;
    if (!os) throw std::runtime_error("emit: write to '" + path + "' failed");
}

template <typename Table>
void emit_impl(const Table& table, const std::string& path, const std::string& format) {
    if (format == "csv") {
        write_file(path, to_csv(table));
    } else if (format == "json") {
        write_file(path, to_json(table).dump(2) + "\n");
    } else {
        throw ConfigError("run.format must be 'csv' or 'json'");
    }
}

}  // namespace

void emit(const ConvergenceTable& table, const std::string& path, const std::string& format) {
    emit_impl(table, path, format);
}

void emit(const ConsistencyTable& table, const std::string& path, const std::string& format) {
    emit_impl(table, path, format);
}

}  // namespace ppde
