#include "ppde/functionals.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

#include "ppde/errors.hpp"

namespace ppde {

double eval_terminal(const TerminalSpec& g, const DiscretePath& omega) {
    if (omega.dim() != g.dim) throw std::invalid_argument("eval_terminal: dimension mismatch");
    if (omega.upto() != omega.grid().steps()) {
        throw std::invalid_argument("eval_terminal: path not terminal");
    }
    return g.fn(omega);
}

namespace {

void require_symmetric(const Matrix& gamma) {
    const double tol = 1e-12 * std::max(1.0, gamma.max_abs());
    if (!gamma.is_symmetric(tol)) {
        throw std::invalid_argument("eval_generator: gamma must be symmetric");
    }
}

}  // namespace

double eval_generator(const GeneratorSpec& g, int i, const DiscretePath& omega, double y,
                      const Vec& z, const Matrix& gamma) {
    if (omega.dim() != g.dim || static_cast<int>(z.size()) != g.dim || gamma.dim() != g.dim) {
        throw std::invalid_argument("eval_generator: dimension mismatch");
    }
    if (i < 0 || i > omega.upto()) throw std::out_of_range("eval_generator: index out of range");
    require_symmetric(gamma);
    const double v = g.fn(omega.grid().node(i), omega, i, y, z, gamma);
    if (!std::isfinite(v)) throw std::runtime_error("eval_generator: non-finite value");
    return v;
}

DerivativeBundle generator_derivs_central(const GeneratorSpec& g, int i,
                                          const DiscretePath& omega, double y, const Vec& z,
                                          const Matrix& gamma, double delta) {
    const int d = g.dim;
    const double t = omega.grid().node(i);
    DerivativeBundle b;
    b.method = DerivativeBundle::Method::CentralDifference;
    b.t = t;
    b.y = y;
    b.z = z;
    b.gamma = gamma;
    b.dz.assign(d, 0.0);
    b.dgamma = Matrix(d);

    const double base = std::cbrt(std::numeric_limits<double>::epsilon());
    auto G = [&](double yy, const Vec& zz, const Matrix& gg) {
        return g.fn(t, omega, i, yy, zz, gg);
    };

    {
        const double dy = delta > 0.0 ? delta : base * std::max(1.0, std::abs(y));
        b.delta = dy;
        b.dy = (G(y + dy, z, gamma) - G(y - dy, z, gamma)) / (2.0 * dy);
    }
    {
        double zmax = 0.0;
        for (double v : z) zmax = std::max(zmax, std::abs(v));
        const double dz = delta > 0.0 ? delta : base * std::max(1.0, zmax);
        Vec zp = z, zm = z;
        for (int c = 0; c < d; ++c) {
            zp[c] = z[c] + dz;
            zm[c] = z[c] - dz;
            b.dz[c] = (G(y, zp, gamma) - G(y, zm, gamma)) / (2.0 * dz);
            zp[c] = z[c];
            zm[c] = z[c];
        }
    }
    {
        const double dg = delta > 0.0 ? delta : base * std::max(1.0, gamma.max_abs());
        Matrix gp = gamma, gm = gamma;
        for (int r = 0; r < d; ++r) {
            gp(r, r) = gamma(r, r) + dg;
            gm(r, r) = gamma(r, r) - dg;
            b.dgamma(r, r) = (G(y, z, gp) - G(y, z, gm)) / (2.0 * dg);
            gp(r, r) = gamma(r, r);
            gm(r, r) = gamma(r, r);
        }
        // Off-diagonal: bump e_rc + e_cr, halve to get the per-entry value.
        for (int r = 0; r < d; ++r) {
            for (int c = r + 1; c < d; ++c) {
                gp(r, c) = gamma(r, c) + dg;
                gp(c, r) = gamma(c, r) + dg;
                gm(r, c) = gamma(r, c) - dg;
                gm(c, r) = gamma(c, r) - dg;
                const double v = 0.5 * (G(y, z, gp) - G(y, z, gm)) / (2.0 * dg);
                b.dgamma(r, c) = v;
                b.dgamma(c, r) = v;
                gp(r, c) = gamma(r, c);
                gp(c, r) = gamma(c, r);
                gm(r, c) = gamma(r, c);
                gm(c, r) = gamma(c, r);
            }
        }
    }
    return b;
}

DerivativeBundle generator_derivs(const GeneratorSpec& g, int i, const DiscretePath& omega,
                                  double y, const Vec& z, const Matrix& gamma) {
    if (omega.dim() != g.dim || static_cast<int>(z.size()) != g.dim || gamma.dim() != g.dim) {
        throw std::invalid_argument("generator_derivs: dimension mismatch");
    }
    require_symmetric(gamma);
    if (!g.analytic) return generator_derivs_central(g, i, omega, y, z, gamma);
    DerivativeBundle b;
    b.method = DerivativeBundle::Method::Analytic;
    b.t = omega.grid().node(i);
    b.y = y;
    b.z = z;
    b.gamma = gamma;
    b.dz.assign(g.dim, 0.0);
    b.dgamma = Matrix(g.dim);
    g.analytic(b.t, omega, i, y, z, gamma, b.dy, b.dz, b.dgamma);
    return b;
}

// --- test functionals -------------------------------------------------------

namespace {

double pow_int(double x, int k) {
    double r = 1.0;
    for (int j = 0; j < k; ++j) r *= x;
    return r;
}

int term_xpow(const PolyTerm& term, int c) {
    return c < static_cast<int>(term.xpow.size()) ? term.xpow[c] : 0;
}
int term_ipow(const PolyTerm& term, int c) {
    return c < static_cast<int>(term.ipow.size()) ? term.ipow[c] : 0;
}

}  // namespace

Vec running_integral(const DiscretePath& omega, int i) {
    Vec I(omega.dim(), 0.0);
    const double h = omega.grid().step();
    for (int j = 1; j <= i; ++j) {
        const auto row = omega.row(j);
        for (int c = 0; c < omega.dim(); ++c) I[c] += row[c] * h;
    }
    return I;
}

FunctionalJet eval_functional_state(const TestFunctionalSpec& phi, double t, const Vec& x,
                                    const Vec& integral) {
    const int d = phi.dim;
    FunctionalJet jet;
    jet.dw.assign(d, 0.0);
    jet.dww = Matrix(d);
    double ft = 0.0;
    Vec fI(d, 0.0);

    for (const auto& term : phi.terms) {
        double tx = 1.0;  // product over x-powers
        for (int c = 0; c < d; ++c) tx *= pow_int(x[c], term_xpow(term, c));
        double ti = 1.0;
        for (int c = 0; c < d; ++c) ti *= pow_int(integral[c], term_ipow(term, c));
        const double tt = pow_int(t, term.tpow);

        jet.value += term.coef * tt * tx * ti;
        if (term.tpow >= 1) {
            ft += term.coef * term.tpow * pow_int(t, term.tpow - 1) * tx * ti;
        }
        for (int c = 0; c < d; ++c) {
            const int p = term_xpow(term, c);
            if (p >= 1) {
                double rest = 1.0;
                for (int cc = 0; cc < d; ++cc)
                    if (cc != c) rest *= pow_int(x[cc], term_xpow(term, cc));
                jet.dw[c] += term.coef * tt * ti * p * pow_int(x[c], p - 1) * rest;
            }
            const int q = term_ipow(term, c);
            if (q >= 1) {
                double rest = 1.0;
                for (int cc = 0; cc < d; ++cc)
                    if (cc != c) rest *= pow_int(integral[cc], term_ipow(term, cc));
                fI[c] += term.coef * tt * tx * q * pow_int(integral[c], q - 1) * rest;
            }
        }
        for (int c1 = 0; c1 < d; ++c1) {
            for (int c2 = 0; c2 < d; ++c2) {
                const int p1 = term_xpow(term, c1);
                const int p2 = term_xpow(term, c2);
                double deriv;
                if (c1 == c2) {
                    if (p1 < 2) continue;
                    deriv = p1 * (p1 - 1) * pow_int(x[c1], p1 - 2);
                } else {
                    if (p1 < 1 || p2 < 1) continue;
                    deriv = p1 * pow_int(x[c1], p1 - 1) * p2 * pow_int(x[c2], p2 - 1);
                }
                double rest = 1.0;
                for (int cc = 0; cc < d; ++cc)
                    if (cc != c1 && cc != c2) rest *= pow_int(x[cc], term_xpow(term, cc));
                jet.dww(c1, c2) += term.coef * tt * ti * deriv * rest;
            }
        }
    }
    // Running integral advances at rate omega_t: fold f_I * x into d/dt.
    jet.dt = ft;
    if (phi.kind == TestFunctionalSpec::Kind::Integral) {
        for (int c = 0; c < d; ++c) jet.dt += fI[c] * x[c];
    }
    return jet;
}

double eval_functional_value(const TestFunctionalSpec& phi, double t, const Vec& x,
                             const Vec& integral) {
    const int d = phi.dim;
    double v = 0.0;
    for (const auto& term : phi.terms) {
        double prod = term.coef * pow_int(t, term.tpow);
        for (int c = 0; c < d; ++c) prod *= pow_int(x[c], term_xpow(term, c));
        for (int c = 0; c < d; ++c) prod *= pow_int(integral[c], term_ipow(term, c));
        v += prod;
    }
    return v;
}

FunctionalJet eval_test_functional(const TestFunctionalSpec& phi, int i,
                                   const DiscretePath& omega) {
    if (omega.dim() != phi.dim) {
        throw std::invalid_argument("eval_test_functional: dimension mismatch");
    }
    if (i < 0 || i > omega.upto()) {
        throw std::out_of_range("eval_test_functional: index out of range");
    }
    const auto row = omega.row(i);
    Vec x(row.begin(), row.end());
    Vec I(phi.dim, 0.0);
    if (phi.kind == TestFunctionalSpec::Kind::Integral) I = running_integral(omega, i);
    return eval_functional_state(phi, omega.grid().node(i), x, I);
}

// --- registries -------------------------------------------------------------

namespace {

std::mutex g_registry_mutex;
std::map<std::string, TerminalFactory>& terminal_registry() {
    static std::map<std::string, TerminalFactory> r;
    return r;
}
std::map<std::string, GeneratorFactory>& generator_registry() {
    static std::map<std::string, GeneratorFactory> r;
    return r;
}

double param_or(const nlohmann::json& p, const std::string& key, double fallback) {
    if (!p.is_object() || !p.contains(key)) return fallback;
    if (!p[key].is_number()) throw ConfigError("parameter '" + key + "' must be a number");
    return p[key].get<double>();
}

int index_param(const nlohmann::json& p, int dim) {
    const int c = static_cast<int>(param_or(p, "index", 0.0));
    if (c < 0 || c >= dim) throw ConfigError("parameter 'index' out of range for dimension");
    return c;
}

void install_builtin_terminals() {
    auto& reg = terminal_registry();

    reg["coordinate"] = [](const nlohmann::json& p, int dim) {
        const int c = index_param(p, dim);
        TerminalSpec g{"coordinate", dim, 1.0, c, {}};
        g.fn = [c](const DiscretePath& w) { return w.value(w.upto(), c); };
        return g;
    };
    reg["square"] = [](const nlohmann::json&, int dim) {
        TerminalSpec g{"square", dim, 2.0 * std::sqrt(double(dim)), -1, {}};
        g.fn = [dim](const DiscretePath& w) {
            const auto e = w.endpoint();
            double s = 0.0;
            for (int c = 0; c < dim; ++c) s += e[c] * e[c];
            return s;
        };
        return g;
    };
    reg["average"] = [](const nlohmann::json& p, int dim) {
        const int c = index_param(p, dim);
        TerminalSpec g{"average", dim, 1.0, c, {}};
        g.fn = [c](const DiscretePath& w) {
            const int n = w.grid().steps();
            double s = 0.0;
            for (int j = 1; j <= n; ++j) s += w.value(j, c);
            return s / n;
        };
        return g;
    };
    reg["max"] = [](const nlohmann::json& p, int dim) {
        const int c = index_param(p, dim);
        TerminalSpec g{"max", dim, 1.0, c, {}};
        g.fn = [c](const DiscretePath& w) {
            double m = 0.0;
            for (int j = 0; j <= w.upto(); ++j) m = std::max(m, std::abs(w.value(j, c)));
            return m;
        };
        return g;
    };
    reg["call"] = [](const nlohmann::json& p, int dim) {
        const int c = index_param(p, dim);
        const double strike = param_or(p, "strike", 0.0);
        TerminalSpec g{"call", dim, 1.0, c, {}};
        g.fn = [c, strike](const DiscretePath& w) {
            return std::max(w.value(w.upto(), c) - strike, 0.0);
        };
        return g;
    };
    reg["const"] = [](const nlohmann::json& p, int dim) {
        const double v = param_or(p, "value", 1.0);
        TerminalSpec g{"const", dim, 0.0, -1, {}};
        g.fn = [v](const DiscretePath&) { return v; };
        return g;
    };
}

void install_builtin_generators() {
    auto& reg = generator_registry();

    reg["heat"] = [](const nlohmann::json&, int dim) {
        GeneratorSpec g{"heat", dim, 0.5 * std::sqrt(double(dim)), {}, {}};
        g.fn = [](double, const DiscretePath&, int, double, const Vec&, const Matrix& gamma) {
            return 0.5 * gamma.trace();
        };
        g.analytic = [dim](double, const DiscretePath&, int, double, const Vec&, const Matrix&,
                           double& dy, Vec& dz, Matrix& dg) {
            dy = 0.0;
            std::fill(dz.begin(), dz.end(), 0.0);
            dg = Matrix::identity(dim, 0.5);
        };
        return g;
    };

    reg["semilinear-linear-y"] = [](const nlohmann::json& p, int dim) {
        const double lambda = param_or(p, "lambda", 1.0);
        GeneratorSpec g{"semilinear-linear-y", dim, 0.5 * std::sqrt(double(dim)), {}, {}};
        g.fn = [lambda](double, const DiscretePath&, int, double y, const Vec&,
                        const Matrix& gamma) { return 0.5 * gamma.trace() + lambda * y; };
        g.analytic = [dim, lambda](double, const DiscretePath&, int, double, const Vec&,
                                   const Matrix&, double& dy, Vec& dz, Matrix& dg) {
            dy = lambda;
            std::fill(dz.begin(), dz.end(), 0.0);
            dg = Matrix::identity(dim, 0.5);
        };
        return g;
    };

    // G(gamma) = (sigma_high^2 gamma+ - sigma_low^2 gamma-)/2, d = 1.
    // At the kink gamma = 0 the reported derivative is the upper envelope
    // value sigma_high^2/2.
    reg["g-heat"] = [](const nlohmann::json& p, int dim) {
        if (dim != 1) throw ConfigError("generator 'g-heat' requires dimension 1");
        const double lo = param_or(p, "sigma_low", 0.5);
        const double hi = param_or(p, "sigma_high", 1.0);
        if (!(lo > 0.0) || !(hi >= lo)) {
            throw ConfigError("generator 'g-heat' requires 0 < sigma_low <= sigma_high");
        }
        GeneratorSpec g{"g-heat", 1, 0.5 * hi * hi, {}, {}};
        g.fn = [lo, hi](double, const DiscretePath&, int, double, const Vec&,
                        const Matrix& gamma) {
            const double v = gamma(0, 0);
            return 0.5 * (hi * hi * std::max(v, 0.0) - lo * lo * std::max(-v, 0.0));
        };
        g.analytic = [lo, hi](double, const DiscretePath&, int, double, const Vec&,
                              const Matrix& gamma, double& dy, Vec& dz, Matrix& dg) {
            dy = 0.0;
            std::fill(dz.begin(), dz.end(), 0.0);
            dg = Matrix(1);
            dg(0, 0) = gamma(0, 0) >= 0.0 ? 0.5 * hi * hi : 0.5 * lo * lo;
        };
        return g;
    };

    // Two coordinates driven with instantaneous correlation rho in the
    // second-order term: G = tr(gamma)/2 + rho * gamma_{01}.
    reg["corr-heat"] = [](const nlohmann::json& p, int dim) {
        if (dim != 2) throw ConfigError("generator 'corr-heat' requires dimension 2");
        const double rho = param_or(p, "rho", 0.5);
        if (!(rho >= 0.0 && rho < 1.0)) {
            throw ConfigError("generator 'corr-heat' requires rho in [0, 1)");
        }
        GeneratorSpec g{"corr-heat", 2, 0.5 * std::sqrt(2.0) + rho, {}, {}};
        g.fn = [rho](double, const DiscretePath&, int, double, const Vec&, const Matrix& gamma) {
            return 0.5 * gamma.trace() + rho * gamma(0, 1);
        };
        g.analytic = [rho](double, const DiscretePath&, int, double, const Vec&, const Matrix&,
                           double& dy, Vec& dz, Matrix& dg) {
            dy = 0.0;
            std::fill(dz.begin(), dz.end(), 0.0);
            dg = Matrix::identity(2, 0.5);
            dg(0, 1) = 0.5 * rho;
            dg(1, 0) = 0.5 * rho;
        };
        return g;
    };

    // Nonlinear in (y, z) with derivatives that keep the monotone-weight
    // conditions: softplus keeps dz positive.
    reg["smooth-test"] = [](const nlohmann::json& p, int dim) {
        const double a = param_or(p, "a", 0.5);
        const double b = param_or(p, "b", 0.5);
        if (!(b >= 0.0)) throw ConfigError("generator 'smooth-test' requires b >= 0");
        GeneratorSpec g{"smooth-test", dim,
                        (0.5 + b) * std::sqrt(double(dim)), {}, {}};
        g.fn = [a, b](double, const DiscretePath&, int, double y, const Vec& z,
                      const Matrix& gamma) {
            double s = 0.5 * gamma.trace() + a * std::sin(y);
            for (double v : z) s += b * std::log1p(std::exp(v));
            return s;
        };
        g.analytic = [dim, a, b](double, const DiscretePath&, int, double y, const Vec& z,
                                 const Matrix&, double& dy, Vec& dz, Matrix& dg) {
            dy = a * std::cos(y);
            for (int c = 0; c < dim; ++c) dz[c] = b / (1.0 + std::exp(-z[c]));
            dg = Matrix::identity(dim, 0.5);
        };
        return g;
    };
}

void ensure_builtins() {
    static std::once_flag once;
    std::call_once(once, [] {
        install_builtin_terminals();
        install_builtin_generators();
    });
}

}  // namespace

void register_terminal_factory(const std::string& name, TerminalFactory f) {
    ensure_builtins();
    std::lock_guard<std::mutex> lock(g_registry_mutex);
    terminal_registry()[name] = std::move(f);
}

void register_generator_factory(const std::string& name, GeneratorFactory f) {
    ensure_builtins();
    std::lock_guard<std::mutex> lock(g_registry_mutex);
    generator_registry()[name] = std::move(f);
}

TerminalSpec make_terminal(const std::string& name, const nlohmann::json& params, int dim) {
    ensure_builtins();
    std::lock_guard<std::mutex> lock(g_registry_mutex);
    auto it = terminal_registry().find(name);
    if (it == terminal_registry().end()) throw ConfigError("unknown terminal '" + name + "'");
    return it->second(params, dim);
}

GeneratorSpec make_generator(const std::string& name, const nlohmann::json& params, int dim) {
    ensure_builtins();
    std::lock_guard<std::mutex> lock(g_registry_mutex);
    auto it = generator_registry().find(name);
    if (it == generator_registry().end()) throw ConfigError("unknown generator '" + name + "'");
    return it->second(params, dim);
}

std::vector<std::string> registered_terminals() {
    ensure_builtins();
    std::lock_guard<std::mutex> lock(g_registry_mutex);
    std::vector<std::string> names;
    for (const auto& [k, v] : terminal_registry()) names.push_back(k);
    return names;
}

std::vector<std::string> registered_generators() {
    ensure_builtins();
    std::lock_guard<std::mutex> lock(g_registry_mutex);
    std::vector<std::string> names;
    for (const auto& [k, v] : generator_registry()) names.push_back(k);
    return names;
}

std::vector<GeneratorInstance> registered_generator_instances() {
    ensure_builtins();
    return {
        {"heat", nlohmann::json::object(), 1},
        {"semilinear-linear-y", {{"lambda", 1.0}}, 1},
        {"g-heat", {{"sigma_low", 0.5}, {"sigma_high", 1.0}}, 1},
        {"corr-heat", {{"rho", 0.5}}, 2},
        {"smooth-test", {{"a", 0.5}, {"b", 0.5}}, 1},
    };
}

}  // namespace ppde
