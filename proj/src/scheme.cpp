#include "ppde/scheme.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "ppde/errors.hpp"
#include "ppde/rng.hpp"

namespace ppde {

void validate_problem(const ProblemSpec& problem) {
    if (problem.dim < 1) throw ConfigError("problem.dimension must be >= 1");
    if (problem.generator.dim != problem.dim) {
        throw ConfigError("problem.generator dimension does not match problem.dimension");
    }
    if (problem.terminal.dim != problem.dim) {
        throw ConfigError("problem.terminal dimension does not match problem.dimension");
    }
    if (problem.grid.steps() < 1) throw ConfigError("problem grid must have at least one step");
}

DiffOps diff_operators(const std::vector<double>& ex, const SchemeParams& params, double h,
                       int dim) {
    if (static_cast<int>(ex.size()) != measure_count(dim)) {
        throw std::invalid_argument("diff_operators: expectation for some measure is missing");
    }
    validate_params(params, dim);
    DiffOps ops;
    ops.d0 = ex[0];
    ops.d1.assign(dim, 0.0);
    ops.d2 = Matrix(dim);
    for (int i = 0; i < dim; ++i) {
        const double ei = ex[measure_index({MeasureFamily::Drift, i, -1}, dim)];
        ops.d1[i] = (ei - ops.d0) / (params.mu[i] * h);
    }
    for (int i = 0; i < dim; ++i) {
        const double eii = ex[measure_index({MeasureFamily::Diag, i, -1}, dim)];
        ops.d2(i, i) = (eii - ops.d0) / (0.5 * params.sigma[i] * params.sigma[i] * h);
    }
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            if (i == j) continue;
            const double eij = ex[measure_index({MeasureFamily::Cross, i, j}, dim)];
            const double eii = ex[measure_index({MeasureFamily::Diag, i, -1}, dim)];
            const double ejj = ex[measure_index({MeasureFamily::Diag, j, -1}, dim)];
            ops.d2(i, j) =
                (eij - eii - ejj + ops.d0) / (params.sigma[i] * params.sigma[j] * h);
        }
    }
    ops.d2.symmetrize();
    return ops;
}

double apply_step(const ProblemSpec& problem, const SchemeParams& params, int i,
                  const DiscretePath& omega, const PathFunctional& phi) {
    validate_problem(problem);
    validate_params(params, problem.dim);
    if (i < 0 || i >= problem.grid.steps()) {
        throw std::invalid_argument("apply_step: index must satisfy 0 <= i < n");
    }
    const int d = problem.dim;
    const double h = problem.grid.step();
    std::vector<double> ex(measure_count(d), 0.0);
    for (const auto& id : all_measures(d)) {
        const int idx = measure_index(id, d);
        if (id.family == MeasureFamily::Cross && id.j < id.i) {
            // identical children as the (j,i) stencil
            ex[idx] = ex[measure_index({MeasureFamily::Cross, id.j, id.i}, d)];
            continue;
        }
        ex[idx] = step_expectation(id, params, h, i, omega, phi);
    }
    const DiffOps ops = diff_operators(ex, params, h, d);
    const double g = eval_generator(problem.generator, i, omega, ops.d0, ops.d1, ops.d2);
    return ops.d0 + h * g;
}

StencilWeights monotonicity_weights(const DerivativeBundle& b, const SchemeParams& params,
                                    double h) {
    const int d = b.dgamma.dim();
    validate_params(params, d);
    if (!(h >= 0.0)) throw std::invalid_argument("monotonicity_weights: h must be >= 0");
    StencilWeights w;
    w.dy = b.dy;
    w.a_drift.assign(d, 0.0);
    w.a_diag.assign(d, 0.0);
    w.a_cross = Matrix(d);

    double drift_mass = 0.0, diag_mass = 0.0, cross_mass = 0.0;
    for (int i = 0; i < d; ++i) {
        w.a_drift[i] = b.dz[i] / params.mu[i];
        drift_mass += w.a_drift[i];
    }
    for (int i = 0; i < d; ++i) {
        double row = 2.0 * b.dgamma(i, i) / (params.sigma[i] * params.sigma[i]);
        diag_mass += row;
        for (int j = 0; j < d; ++j) {
            if (j == i) continue;
            row -= (b.dgamma(i, j) + b.dgamma(j, i)) / (params.sigma[i] * params.sigma[j]);
        }
        w.a_diag[i] = row;
    }
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            w.a_cross(i, j) = b.dgamma(i, j) / (params.sigma[i] * params.sigma[j]);
            cross_mass += w.a_cross(i, j);
        }
    }
    w.a0 = 1.0 + h * b.dy - drift_mass - diag_mass + cross_mass;

    double sum = w.a0 + drift_mass;
    for (int i = 0; i < d; ++i) sum += w.a_diag[i];
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j) sum += w.a_cross(i, j);
    w.sum_residual = sum - (1.0 + h * b.dy);
    return w;
}

namespace {

constexpr double kAuditTol = 1e-12;

Matrix random_symmetric(NormalStream& rng, int d, double lo, double hi) {
    Matrix m(d);
    auto u = [&] { return lo + (hi - lo) * rng.uniform01(); };
    for (int i = 0; i < d; ++i) {
        m(i, i) = u();
        for (int j = i + 1; j < d; ++j) {
            const double v = u();
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return m;
}

}  // namespace

MonotonicityReport check_monotonicity(const GeneratorSpec& G, const SchemeParams& params,
                                      double h, const SamplePointSpec& sample) {
    const int d = G.dim;
    validate_params(params, d);
    if (sample.count < 1) throw ConfigError("sample.count must be >= 1");

    MonotonicityReport rep;
    rep.params = params;
    rep.h = h;
    rep.points = sample.count;
    rep.lipschitz_zg = G.lipschitz_zg;
    const double inf = std::numeric_limits<double>::infinity();
    rep.min_a0 = rep.min_a_drift = rep.min_a_diag = rep.min_a_cross = inf;
    rep.slack_dz = rep.slack_cross = rep.slack_diag_row = rep.slack_bound = inf;
    rep.max_sum_residual = 0.0;

    NormalStream rng(sample.seed);
    const TimeGrid grid = make_grid(sample.horizon, sample.path_steps);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform01(); };

    for (int pt = 0; pt < sample.count; ++pt) {
        std::vector<double> rows(static_cast<size_t>(sample.path_steps + 1) * d, 0.0);
        for (size_t k = d; k < rows.size(); ++k) rows[k] = uni(sample.omega_lo, sample.omega_hi);
        const DiscretePath omega = DiscretePath::from_rows(grid, d, std::move(rows));
        const int i = pt % (sample.path_steps + 1);
        const double y = uni(sample.y_lo, sample.y_hi);
        Vec z(d);
        for (int c = 0; c < d; ++c) z[c] = uni(sample.z_lo, sample.z_hi);
        const Matrix gamma = random_symmetric(rng, d, sample.gamma_lo, sample.gamma_hi);

        const DerivativeBundle b = generator_derivs(G, i, omega, y, z, gamma);
        const StencilWeights w = monotonicity_weights(b, params, h);

        rep.min_a0 = std::min(rep.min_a0, w.a0);
        double mass = 0.0;
        for (int c = 0; c < d; ++c) {
            rep.min_a_drift = std::min(rep.min_a_drift, w.a_drift[c]);
            rep.slack_dz = std::min(rep.slack_dz, b.dz[c]);
            rep.min_a_diag = std::min(rep.min_a_diag, w.a_diag[c]);
            mass += b.dz[c] / params.mu[c];
            mass += 2.0 * b.dgamma(c, c) / (params.sigma[c] * params.sigma[c]);
        }
        for (int r = 0; r < d; ++r) {
            double row = 2.0 * b.dgamma(r, r) / params.sigma[r];
            double dom = 2.0 * b.dgamma(r, r);
            for (int c = 0; c < d; ++c) {
                if (c == r) continue;
                rep.min_a_cross = std::min(rep.min_a_cross, w.a_cross(r, c));
                rep.slack_cross = std::min(rep.slack_cross, b.dgamma(r, c));
                row -= (b.dgamma(r, c) + b.dgamma(c, r)) / params.sigma[c];
                dom -= b.dgamma(r, c) + b.dgamma(c, r);
                mass -= b.dgamma(r, c) / (params.sigma[r] * params.sigma[c]);
            }
            rep.slack_diag_row = std::min(rep.slack_diag_row, row);
            if (dom < -kAuditTol) rep.diagonal_dominance = false;
        }
        rep.slack_bound = std::min(rep.slack_bound, (1.0 - params.epsilon0) - mass);
        rep.max_sum_residual = std::max(rep.max_sum_residual, std::abs(w.sum_residual));

        const double min_weight =
            std::min(std::min(rep.min_a0, rep.min_a_drift),
                     std::min(rep.min_a_diag, d > 1 ? rep.min_a_cross : inf));
        const bool bad = min_weight < -kAuditTol || rep.slack_bound < -kAuditTol;
        if (bad && !rep.has_witness) {
            rep.has_witness = true;
            rep.witness.t = b.t;
            rep.witness.y = y;
            rep.witness.z = z;
            rep.witness.gamma = gamma;
            const auto e = omega.row(i);
            rep.witness.omega_endpoint.assign(e.begin(), e.end());
        }
    }

    const double min_weight = std::min(std::min(rep.min_a0, rep.min_a_drift),
                                       std::min(rep.min_a_diag, d > 1 ? rep.min_a_cross : inf));
    rep.pass = min_weight >= -kAuditTol && rep.slack_bound >= -kAuditTol;
    return rep;
}

SchemeParams suggest_params(const GeneratorSpec& G, const SamplePointSpec& sample,
                            double epsilon0, int quad_order) {
    if (!(epsilon0 > 0.0 && epsilon0 < 1.0)) {
        throw ConfigError("suggest_params: epsilon0 must lie in (0, 1)");
    }
    const int d = G.dim;
    SchemeParams p;
    p.mu.assign(d, 1.0);
    p.sigma.assign(d, 1.0);
    p.quad_order = quad_order;
    p.epsilon0 = epsilon0;

    constexpr int kMaxDoublings = 60;
    for (int iter = 0; iter <= kMaxDoublings; ++iter) {
        const MonotonicityReport rep = check_monotonicity(G, p, 0.0, sample);
        if (rep.pass) return p;
        if (rep.slack_dz < -kAuditTol) {
            throw std::runtime_error(
                "suggest_params: generator has negative z-derivatives on the sample; "
                "no scaling satisfies the sign condition");
        }
        if (rep.slack_cross < -kAuditTol) {
            throw std::runtime_error(
                "suggest_params: generator has negative cross gamma-derivatives on the "
                "sample; no scaling satisfies the sign condition");
        }
        if (!rep.diagonal_dominance) {
            throw std::runtime_error(
                "suggest_params: diagonal dominance fails on the sample; the "
                "equal-volatility row inequality cannot be met by scaling");
        }
        for (double& v : p.mu) v *= 2.0;
        for (double& v : p.sigma) v *= 2.0;
    }
    throw std::runtime_error(
        "suggest_params: search cap exceeded; binding inequality: weight-mass bound");
}

MemoPolicy memo_policy_from_string(const std::string& name) {
    if (name == "none") return MemoPolicy::None;
    if (name == "full-prefix") return MemoPolicy::FullPrefix;
    if (name == "markov") return MemoPolicy::Markov;
    if (name == "markov+running-sum") return MemoPolicy::MarkovRunningSum;
    if (name == "markov+running-max") return MemoPolicy::MarkovRunningMax;
    throw ConfigError("unknown memo policy '" + name + "'");
}

std::string to_string(MemoPolicy policy) {
    switch (policy) {
        case MemoPolicy::None: return "none";
        case MemoPolicy::FullPrefix: return "full-prefix";
        case MemoPolicy::Markov: return "markov";
        case MemoPolicy::MarkovRunningSum: return "markov+running-sum";
        case MemoPolicy::MarkovRunningMax: return "markov+running-max";
    }
    throw std::logic_error("unreachable");
}

namespace {

// Backward recursion over the stencil tree. Node states carry per-increment
// counts; each node's row is recomputed as a fixed-order sum over the
// increment table, so permutation-equivalent nodes agree bit-for-bit and the
// value-keyed memo recombines the tree into a lattice.
class TreeSolver {
public:
    TreeSolver(const ProblemSpec& problem, const SchemeParams& params,
               const SolveOptions& options)
        : problem_(problem),
          params_(params),
          options_(options),
          d_(problem.dim),
          n_(problem.grid.steps()),
          h_(problem.grid.step()) {
        validate_problem(problem_);
        validate_params(params_, d_);
        if (options_.budget < 1) throw ConfigError("scheme.budget must be >= 1");
        for (const auto& id : all_measures(d_)) {
            stencils_.push_back(step_children(id, params_, h_, d_));
        }
        build_increment_table();
        if (options_.policy == MemoPolicy::MarkovRunningMax && problem_.terminal.coordinate < 0) {
            throw ConfigError(
                "memo policy markov+running-max requires a terminal with a monitored "
                "coordinate");
        }
        memo_.assign(n_ + 1, {});
        stats_level_.assign(n_ + 1, 0);
    }

    double run(int level, const DiscretePath& root) {
        if (level < 0 || level > n_) throw std::invalid_argument("evaluate: level out of range");
        if (root.upto() != level) {
            throw std::invalid_argument("evaluate: path must be defined exactly up to i");
        }
        precheck_budget(level);
        Node node;
        node.path = root;
        node.counts.assign(table_.size(), 0);
        const auto e = root.endpoint();
        node.root_endpoint.assign(e.begin(), e.end());
        if (options_.policy == MemoPolicy::MarkovRunningSum) {
            node.running_sum.assign(d_, 0.0);
            for (int j = 1; j <= level; ++j) {
                const auto row = root.row(j);
                for (int c = 0; c < d_; ++c) node.running_sum[c] += row[c];
            }
        }
        if (options_.policy == MemoPolicy::MarkovRunningMax) {
            const int c = problem_.terminal.coordinate;
            node.running_max = 0.0;
            for (int j = 0; j <= level; ++j) {
                node.running_max = std::max(node.running_max, std::abs(root.value(j, c)));
            }
        }
        return value_at(level, node);
    }

    long long memo_hits() const { return memo_hits_; }
    long long child_evals() const { return child_evals_; }
    const std::vector<long long>& level_nodes() const { return stats_level_; }

private:
    struct Node {
        DiscretePath path;
        std::vector<std::uint32_t> counts;
        Vec root_endpoint;
        Vec running_sum;
        double running_max = 0.0;
    };

    void build_increment_table() {
        for (size_t m = 0; m < stencils_.size(); ++m) {
            std::vector<int> map;
            for (const auto& child : stencils_[m].children) {
                int idx = -1;
                for (size_t k = 0; k < table_.size(); ++k) {
                    if (table_[k] == child.increment) {
                        idx = static_cast<int>(k);
                        break;
                    }
                }
                if (idx < 0) {
                    table_.push_back(child.increment);
                    idx = static_cast<int>(table_.size()) - 1;
                }
                map.push_back(idx);
            }
            child_table_.push_back(std::move(map));
        }
    }

    void precheck_budget(int root_level) const {
        double branching = 0.0;
        if (options_.policy == MemoPolicy::None) {
            for (const auto& st : stencils_) branching += double(st.children.size());
        } else if (options_.policy == MemoPolicy::FullPrefix) {
            branching = double(table_.size());
        } else {
            return;  // recombining policies are bounded by the runtime counter
        }
        double level = 1.0, total = 0.0;
        for (int l = root_level; l < n_; ++l) {
            level *= branching;
            total += level;
            if (total > double(options_.budget)) {
                throw BudgetError("solve: projected child evaluations exceed budget");
            }
        }
    }

    Vec canonical_row(const Node& node) const {
        Vec row = node.root_endpoint;
        for (size_t k = 0; k < table_.size(); ++k) {
            if (node.counts[k] == 0) continue;
            const double m = double(node.counts[k]);
            for (int c = 0; c < d_; ++c) row[c] += m * table_[k][c];
        }
        return row;
    }

    std::string make_key(const Node& node) const {
        std::string key;
        auto push = [&key](double v) {
            if (v == 0.0) v = 0.0;  // normalize -0.0
            char b[8];
            std::memcpy(b, &v, 8);
            key.append(b, 8);
        };
        switch (options_.policy) {
            case MemoPolicy::FullPrefix:
                for (int j = 0; j <= node.path.upto(); ++j) {
                    for (double v : node.path.row(j)) push(v);
                }
                break;
            case MemoPolicy::Markov:
                for (double v : node.path.endpoint()) push(v);
                break;
            case MemoPolicy::MarkovRunningSum:
                for (double v : node.path.endpoint()) push(v);
                for (double v : node.running_sum) push(v);
                break;
            case MemoPolicy::MarkovRunningMax:
                for (double v : node.path.endpoint()) push(v);
                push(node.running_max);
                break;
            case MemoPolicy::None:
                break;
        }
        return key;
    }

    double value_at(int level, const Node& node) {
        if (level == n_) {
            ++stats_level_[n_];
            return eval_terminal(problem_.terminal, node.path);
        }
        std::string key;
        if (options_.policy != MemoPolicy::None) {
            key = make_key(node);
            const auto it = memo_[level].find(key);
            if (it != memo_[level].end()) {
                ++memo_hits_;
                return it->second;
            }
        }
        ++stats_level_[level];

        std::vector<double> ex(stencils_.size(), 0.0);
        Node child;
        child.counts = node.counts;
        child.root_endpoint = node.root_endpoint;
        for (size_t m = 0; m < stencils_.size(); ++m) {
            double e = 0.0;
            const auto& st = stencils_[m];
            for (size_t k = 0; k < st.children.size(); ++k) {
                if (++child_evals_ > options_.budget) {
                    throw BudgetError("solve: child-evaluation budget exceeded");
                }
                const int idx = child_table_[m][k];
                child.counts = node.counts;
                ++child.counts[idx];
                const Vec row = canonical_row(child);
                child.path = DiscretePath::extended(node.path, row);
                if (options_.policy == MemoPolicy::MarkovRunningSum) {
                    child.running_sum = node.running_sum;
                    for (int c = 0; c < d_; ++c) child.running_sum[c] += row[c];
                }
                if (options_.policy == MemoPolicy::MarkovRunningMax) {
                    const int c = problem_.terminal.coordinate;
                    child.running_max = std::max(node.running_max, std::abs(row[c]));
                }
                e += st.children[k].weight * value_at(level + 1, child);
            }
            ex[m] = e;
        }
        const DiffOps ops = diff_operators(ex, params_, h_, d_);
        const double g =
            eval_generator(problem_.generator, level, node.path, ops.d0, ops.d1, ops.d2);
        const double value = ops.d0 + h_ * g;
        if (options_.policy != MemoPolicy::None) memo_[level].emplace(std::move(key), value);
        return value;
    }

    const ProblemSpec& problem_;
    SchemeParams params_;
    SolveOptions options_;
    int d_;
    int n_;
    double h_;
    std::vector<Stencil> stencils_;
    std::vector<Vec> table_;
    std::vector<std::vector<int>> child_table_;
    std::vector<std::unordered_map<std::string, double>> memo_;
    std::vector<long long> stats_level_;
    long long memo_hits_ = 0;
    long long child_evals_ = 0;
};

}  // namespace

SolveResult solve(const ProblemSpec& problem, const SchemeParams& params,
                  const SolveOptions& options) {
    TreeSolver solver(problem, params, options);
    SolveResult res;
    res.value = solver.run(0, DiscretePath::zero(problem.grid, problem.dim));
    res.level_nodes = solver.level_nodes();
    res.memo_hits = solver.memo_hits();
    res.child_evals = solver.child_evals();
    res.params = params;
    res.policy = options.policy;
    return res;
}

double evaluate_uh(const ProblemSpec& problem, const SchemeParams& params, int i,
                   const DiscretePath& omega, const SolveOptions& options) {
    TreeSolver solver(problem, params, options);
    return solver.run(i, omega);
}

}  // namespace ppde
