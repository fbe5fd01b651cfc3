#include "ppde/oracles.hpp"

#include <cmath>
#include <cstring>
#include <future>
#include <mutex>

#include "ppde/errors.hpp"
#include "ppde/rng.hpp"

namespace ppde {

namespace {

double heat_square_exact(const ProblemSpec& pb, int i, const DiscretePath& w) {
    const auto e = w.row(i);
    double s = 0.0;
    for (int c = 0; c < pb.dim; ++c) s += e[c] * e[c];
    return s + pb.dim * (pb.grid.horizon() - pb.grid.node(i));
}

std::vector<NamedProblem> build_registry() {
    std::vector<NamedProblem> v;

    v.push_back({"heat-coordinate", 1, "heat", nlohmann::json::object(), "coordinate",
                 {{"index", 0}},
                 [](const ProblemSpec&, int i, const DiscretePath& w) { return w.value(i, 0); },
                 {MemoPolicy::Markov, MemoPolicy::FullPrefix, MemoPolicy::None}});

    v.push_back({"heat-square", 1, "heat", nlohmann::json::object(), "square",
                 nlohmann::json::object(), heat_square_exact,
                 {MemoPolicy::Markov, MemoPolicy::FullPrefix, MemoPolicy::None}});

    v.push_back({"heat-average", 1, "heat", nlohmann::json::object(), "average",
                 {{"index", 0}},
                 [](const ProblemSpec& pb, int i, const DiscretePath& w) {
                     const int n = pb.grid.steps();
                     double s = 0.0;
                     for (int j = 1; j <= i; ++j) s += w.value(j, 0);
                     s += (n - i) * w.value(i, 0);
                     return s / n;
                 },
                 {MemoPolicy::MarkovRunningSum, MemoPolicy::FullPrefix, MemoPolicy::None}});

    v.push_back({"heat-max", 1, "heat", nlohmann::json::object(), "max", {{"index", 0}},
                 nullptr,
                 {MemoPolicy::MarkovRunningMax, MemoPolicy::FullPrefix, MemoPolicy::None}});

    v.push_back({"semilinear-const", 1, "semilinear-linear-y", {{"lambda", 1.0}}, "const",
                 {{"value", 1.0}},
                 [](const ProblemSpec& pb, int i, const DiscretePath&) {
                     return std::exp(pb.grid.horizon() - pb.grid.node(i));
                 },
                 {MemoPolicy::Markov, MemoPolicy::FullPrefix, MemoPolicy::None}});

    v.push_back({"gheat-square", 1, "g-heat", {{"sigma_low", 0.5}, {"sigma_high", 1.0}},
                 "square", nlohmann::json::object(),
                 [](const ProblemSpec& pb, int i, const DiscretePath& w) {
                     const double x = w.value(i, 0);
                     return x * x + 1.0 * (pb.grid.horizon() - pb.grid.node(i));
                 },
                 {MemoPolicy::Markov, MemoPolicy::FullPrefix, MemoPolicy::None}});

    v.push_back({"heat2-square", 2, "heat", nlohmann::json::object(), "square",
                 nlohmann::json::object(), heat_square_exact,
                 {MemoPolicy::Markov, MemoPolicy::FullPrefix, MemoPolicy::None}});

    v.push_back({"corr-bilinear", 2, "corr-heat", {{"rho", 0.5}}, "product",
                 nlohmann::json::object(),
                 [](const ProblemSpec& pb, int i, const DiscretePath& w) {
                     return w.value(i, 0) * w.value(i, 1) +
                            0.5 * (pb.grid.horizon() - pb.grid.node(i));
                 },
                 {MemoPolicy::Markov, MemoPolicy::FullPrefix, MemoPolicy::None}});

    return v;
}

void ensure_product_terminal() {
    static std::once_flag once;
    std::call_once(once, [] {
        register_terminal_factory("product", [](const nlohmann::json&, int dim) {
            if (dim != 2) throw ConfigError("terminal 'product' requires dimension 2");
            TerminalSpec g{"product", 2, 2.0, -1, {}};
            g.fn = [](const DiscretePath& w) {
                return w.value(w.upto(), 0) * w.value(w.upto(), 1);
            };
            return g;
        });
    });
}

}  // namespace

const std::vector<NamedProblem>& registered_problems() {
    ensure_product_terminal();
    static const std::vector<NamedProblem> reg = build_registry();
    return reg;
}

const NamedProblem& find_problem(const std::string& id) {
    for (const auto& p : registered_problems()) {
        if (p.id == id) return p;
    }
    throw ConfigError("unknown problem id '" + id + "'");
}

ProblemSpec instantiate(const NamedProblem& named, const TimeGrid& grid) {
    ensure_product_terminal();
    ProblemSpec pb;
    pb.dim = named.dim;
    pb.grid = grid;
    pb.generator = make_generator(named.generator, named.generator_params, named.dim);
    pb.terminal = make_terminal(named.terminal, named.terminal_params, named.dim);
    validate_problem(pb);
    return pb;
}

ReferenceValue closed_form(const std::string& problem_id, const ProblemSpec& problem, int i,
                           const DiscretePath& omega) {
    const NamedProblem& named = find_problem(problem_id);
    if (!named.exact) {
        throw ConfigError("problem '" + problem_id + "' has no registered closed form");
    }
    if (i < 0 || i > omega.upto()) throw std::out_of_range("closed_form: index out of range");
    ReferenceValue ref;
    ref.value = named.exact(problem, i, omega);
    ref.kind = ReferenceValue::Kind::ClosedForm;
    ref.note = "closed form for '" + problem_id + "'";
    return ref;
}

namespace {

struct McAccum {
    double sum = 0.0;
    double sumsq = 0.0;
};

// Fixed substream layout: substream k handles samples k, k + K, k + 2K, ...
// so results do not depend on the worker count; per-substream sums use
// compensated accumulation and are combined in substream order.
constexpr int kSubstreams = 64;

template <typename PathValue>
std::pair<double, double> mc_mean_stderr(long long samples, std::uint64_t seed,
                                         PathValue&& value_of) {
    std::vector<McAccum> acc(kSubstreams);
    auto worker = [&](int k) {
        NormalStream rng = NormalStream::substream(seed, static_cast<std::uint64_t>(k));
        NeumaierSum s, s2;
        for (long long idx = k; idx < samples; idx += kSubstreams) {
            const double v = value_of(rng);
            s.add(v);
            s2.add(v * v);
        }
        acc[k].sum = s.value();
        acc[k].sumsq = s2.value();
    };
    const int workers = std::min(max_threads(), kSubstreams);
    if (workers <= 1) {
        for (int k = 0; k < kSubstreams; ++k) worker(k);
    } else {
        std::vector<std::future<void>> fs;
        for (int g = 0; g < workers; ++g) {
            fs.push_back(std::async(std::launch::async, [&, g] {
                for (int k = g; k < kSubstreams; k += workers) worker(k);
            }));
        }
        for (auto& f : fs) f.get();
    }
    NeumaierSum total, totalsq;
    for (const auto& a : acc) {
        total.add(a.sum);
        totalsq.add(a.sumsq);
    }
    const double mean = total.value() / double(samples);
    double var = 0.0;
    if (samples > 1) {
        var = (totalsq.value() - double(samples) * mean * mean) / double(samples - 1);
        var = std::max(var, 0.0);
    }
    return {mean, std::sqrt(var / double(samples))};
}

double simulate_terminal(const ProblemSpec& pb, const DiscretePath& start, int i, double sigma,
                         NormalStream& rng) {
    DiscretePath p = start;
    const double sqrt_h = std::sqrt(pb.grid.step());
    Vec inc(pb.dim);
    for (int j = i; j < pb.grid.steps(); ++j) {
        for (int c = 0; c < pb.dim; ++c) inc[c] = sigma * sqrt_h * rng.normal();
        p = concat(p, inc);
    }
    return pb.terminal.fn(p);
}

}  // namespace

ReferenceValue mc_reference(const ProblemSpec& problem, int i, const DiscretePath& omega,
                            long long samples, std::uint64_t seed) {
    double lambda = 0.0;
    if (problem.generator.name == "heat") {
        lambda = 0.0;
    } else if (problem.generator.name == "semilinear-linear-y") {
        // recover lambda from G(y=1) - G(y=0) at zero arguments
        Vec z(problem.dim, 0.0);
        const Matrix zero(problem.dim);
        const DiscretePath origin = DiscretePath::zero(problem.grid, problem.dim);
        lambda = problem.generator.fn(0.0, origin, 0, 1.0, z, zero) -
                 problem.generator.fn(0.0, origin, 0, 0.0, z, zero);
    } else {
        throw ConfigError("mc_reference supports only heat and semilinear-linear-y generators");
    }
    if (samples < 2) throw ConfigError("mc_reference: samples must be >= 2");
    if (i != omega.upto()) {
        throw std::invalid_argument("mc_reference: omega must be defined exactly up to i");
    }
    const auto [mean, se] = mc_mean_stderr(samples, seed, [&](NormalStream& rng) {
        return simulate_terminal(problem, omega, i, 1.0, rng);
    });
    const double scale = std::exp(lambda * (problem.grid.horizon() - problem.grid.node(i)));
    ReferenceValue ref;
    ref.value = scale * mean;
    ref.kind = ReferenceValue::Kind::MonteCarlo;
    ref.stderr_ = scale * se;
    ref.note = "Feynman-Kac sampling, N=" + std::to_string(samples);
    return ref;
}

ReferenceValue mc_sup_reference(const ProblemSpec& problem,
                                const std::vector<double>& sigma_grid, long long samples,
                                std::uint64_t seed) {
    if (problem.dim != 1) throw ConfigError("mc_sup_reference requires a one-dimensional problem");
    if (problem.generator.name != "g-heat") {
        throw ConfigError("mc_sup_reference requires the g-heat generator");
    }
    if (sigma_grid.empty()) throw ConfigError("mc_sup_reference: sigma grid is empty");
    if (samples < 2) throw ConfigError("mc_sup_reference: samples must be >= 2");

    const DiscretePath origin = DiscretePath::zero(problem.grid, 1);
    double best = -std::numeric_limits<double>::infinity();
    double best_se = 0.0;
    for (double sigma : sigma_grid) {
        if (!(sigma > 0.0)) throw ConfigError("mc_sup_reference: sigma grid entries must be > 0");
        // per-volatility stream, independent of the grid composition
        std::uint64_t bits;
        std::memcpy(&bits, &sigma, 8);
        const std::uint64_t sub_seed = splitmix64(seed ^ bits);
        const auto [mean, se] = mc_mean_stderr(samples, sub_seed, [&](NormalStream& rng) {
            return simulate_terminal(problem, origin, 0, sigma, rng);
        });
        if (mean > best) {
            best = mean;
            best_se = se;
        }
    }
    ReferenceValue ref;
    ref.value = best;
    ref.kind = ReferenceValue::Kind::MonteCarlo;
    ref.stderr_ = best_se;
    ref.note = "sup over constant volatilities; lower bound, exact for convex/concave terminals";
    return ref;
}

namespace {

class BruteForce {
public:
    BruteForce(const ProblemSpec& pb, const SchemeParams& params, long long budget)
        : pb_(pb), params_(params), budget_(budget), d_(pb.dim), h_(pb.grid.step()) {
        validate_problem(pb_);
        validate_params(params_, d_);
        for (const auto& id : all_measures(d_)) {
            stencils_.push_back(step_children(id, params_, h_, d_));
        }
    }

    double eval(int i, const DiscretePath& path) {
        if (i == pb_.grid.steps()) return eval_terminal(pb_.terminal, path);
        std::vector<double> ex(stencils_.size(), 0.0);
        for (size_t m = 0; m < stencils_.size(); ++m) {
            double e = 0.0;
            for (const auto& child : stencils_[m].children) {
                if (++evals_ > budget_) {
                    throw BudgetError("brute_force_solve: child-evaluation budget exceeded");
                }
                e += child.weight * eval(i + 1, concat(path, child.increment));
            }
            ex[m] = e;
        }
        // difference quotients written out on purpose, independent of the
        // scheme module's implementation
        const double d0 = ex[0];
        Vec d1(d_);
        Matrix d2(d_);
        for (int c = 0; c < d_; ++c) {
            d1[c] = (ex[1 + c] - d0) / (params_.mu[c] * h_);
            d2(c, c) = (ex[1 + d_ + c] - d0) / (0.5 * params_.sigma[c] * params_.sigma[c] * h_);
        }
        int cross = 1 + 2 * d_;
        for (int a = 0; a < d_; ++a) {
            for (int b = 0; b < d_; ++b) {
                if (a == b) continue;
                d2(a, b) = (ex[cross] - ex[1 + d_ + a] - ex[1 + d_ + b] + d0) /
                           (params_.sigma[a] * params_.sigma[b] * h_);
                ++cross;
            }
        }
        for (int a = 0; a < d_; ++a) {
            for (int b = a + 1; b < d_; ++b) {
                const double v = 0.5 * (d2(a, b) + d2(b, a));
                d2(a, b) = v;
                d2(b, a) = v;
            }
        }
        const double g = eval_generator(pb_.generator, i, path, d0, d1, d2);
        return d0 + h_ * g;
    }

private:
    const ProblemSpec& pb_;
    SchemeParams params_;
    long long budget_;
    int d_;
    double h_;
    std::vector<Stencil> stencils_;
    long long evals_ = 0;
};

}  // namespace

double brute_force_eval(const ProblemSpec& problem, const SchemeParams& params, int i,
                        const DiscretePath& omega, long long budget) {
    if (i != omega.upto()) {
        throw std::invalid_argument("brute_force_eval: omega must be defined exactly up to i");
    }
    BruteForce bf(problem, params, budget);
    return bf.eval(i, omega);
}

ReferenceValue brute_force_solve(const ProblemSpec& problem, const SchemeParams& params,
                                 long long budget) {
    ReferenceValue ref;
    ref.value =
        brute_force_eval(problem, params, 0, DiscretePath::zero(problem.grid, problem.dim), budget);
    ref.kind = ReferenceValue::Kind::BruteForce;
    ref.note = "full-tree evaluation, no memoization";
    return ref;
}

}  // namespace ppde
