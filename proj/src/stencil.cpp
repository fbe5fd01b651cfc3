#include "ppde/stencil.hpp"

#include <cmath>
#include <stdexcept>

#include "ppde/errors.hpp"

namespace ppde {

void validate_params(const SchemeParams& params, int dim) {
    if (static_cast<int>(params.mu.size()) != dim) {
        throw ConfigError("scheme.mu must have one entry per coordinate");
    }
    if (static_cast<int>(params.sigma.size()) != dim) {
        throw ConfigError("scheme.sigma must have one entry per coordinate");
    }
    for (double v : params.mu) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("scheme.mu entries must be > 0");
    }
    for (double v : params.sigma) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("scheme.sigma entries must be > 0");
    }
    if (params.quad_order < 1 || params.quad_order > kMaxQuadOrder) {
        throw ConfigError("scheme.quad_order must lie in [1, 64]");
    }
    if (!(params.epsilon0 > 0.0 && params.epsilon0 < 1.0)) {
        throw ConfigError("scheme.epsilon0 must lie in (0, 1)");
    }
}

std::vector<MeasureId> all_measures(int dim) {
    std::vector<MeasureId> ids;
    ids.push_back({MeasureFamily::Center, -1, -1});
    for (int i = 0; i < dim; ++i) ids.push_back({MeasureFamily::Drift, i, -1});
    for (int i = 0; i < dim; ++i) ids.push_back({MeasureFamily::Diag, i, -1});
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            if (i != j) ids.push_back({MeasureFamily::Cross, i, j});
    return ids;
}

int measure_count(int dim) { return 1 + 2 * dim + dim * (dim - 1); }

int measure_index(const MeasureId& id, int dim) {
    switch (id.family) {
        case MeasureFamily::Center:
            return 0;
        case MeasureFamily::Drift:
            if (id.i < 0 || id.i >= dim) throw std::invalid_argument("measure index out of range");
            return 1 + id.i;
        case MeasureFamily::Diag:
            if (id.i < 0 || id.i >= dim) throw std::invalid_argument("measure index out of range");
            return 1 + dim + id.i;
        case MeasureFamily::Cross: {
            if (id.i < 0 || id.i >= dim || id.j < 0 || id.j >= dim) {
                throw std::invalid_argument("measure index out of range");
            }
            if (id.i == id.j) throw std::invalid_argument("cross measure requires i != j");
            const int off = id.j < id.i ? id.j : id.j - 1;
            return 1 + 2 * dim + id.i * (dim - 1) + off;
        }
    }
    throw std::logic_error("unreachable");
}

namespace {

// Physicists' Gauss-Hermite rule by Newton iteration on the recurrence
// (weight exp(-x^2)), then rescaled to the N(0,1) weight: x -> sqrt(2) x,
// w -> w / sqrt(pi).
void gauss_hermite_physicists(int n, std::vector<double>& x, std::vector<double>& w) {
    constexpr double eps = 1.0e-14;
    constexpr int max_iter = 200;
    const double pim4 = 0.7511255444649425;  // pi^{-1/4}
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(double(2 * n + 1)) - 1.85575 * std::pow(double(2 * n + 1), -0.16667);
        } else if (i == 1) {
            z -= 1.14 * std::pow(double(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * x[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * x[1];
        } else {
            z = 2.0 * z - x[i - 2];
        }
        double pp = 0.0;
        int it = 0;
        for (; it < max_iter; ++it) {
            double p1 = pim4;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(double(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(double(2 * n)) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= eps) break;
        }
        if (it >= max_iter) throw std::runtime_error("hermite_rule: Newton iteration stalled");
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if (n % 2 == 1) x[m - 1] = 0.0;
}

}  // namespace

HermiteRule hermite_rule(int q) {
    if (q < 1) throw std::invalid_argument("hermite_rule: order must be >= 1");
    if (q > kMaxQuadOrder) throw std::invalid_argument("hermite_rule: order above cap 64");
    HermiteRule rule;
    if (q == 1) {
        rule.nodes = {0.0};
        rule.weights = {1.0};
        return rule;
    }
    gauss_hermite_physicists(q, rule.nodes, rule.weights);
    const double sqrt2 = std::sqrt(2.0);
    double wsum = 0.0;
    for (int k = 0; k < q; ++k) {
        rule.nodes[k] *= sqrt2;
        wsum += rule.weights[k];
    }
    for (int k = 0; k < q; ++k) rule.weights[k] /= wsum;
    // ascending nodes (the physicists' loop fills ends-first, descending)
    if (rule.nodes.front() > rule.nodes.back()) {
        std::reverse(rule.nodes.begin(), rule.nodes.end());
        std::reverse(rule.weights.begin(), rule.weights.end());
    }
    return rule;
}

Stencil step_children(const MeasureId& id, const SchemeParams& params, double h, int dim) {
    validate_params(params, dim);
    if (!(h > 0.0)) throw std::invalid_argument("step_children: h must be > 0");
    Stencil st;
    st.id = id;
    switch (id.family) {
        case MeasureFamily::Center: {
            st.children.push_back({1.0, Vec(dim, 0.0)});
            break;
        }
        case MeasureFamily::Drift: {
            if (id.i < 0 || id.i >= dim) throw std::invalid_argument("step_children: bad index");
            Vec inc(dim, 0.0);
            inc[id.i] = params.mu[id.i] * h;
            st.children.push_back({1.0, std::move(inc)});
            break;
        }
        case MeasureFamily::Diag: {
            if (id.i < 0 || id.i >= dim) throw std::invalid_argument("step_children: bad index");
            const auto rule = hermite_rule(params.quad_order);
            const double scale = params.sigma[id.i] * std::sqrt(h);
            for (int k = 0; k < params.quad_order; ++k) {
                Vec inc(dim, 0.0);
                inc[id.i] = scale * rule.nodes[k];
                st.children.push_back({rule.weights[k], std::move(inc)});
            }
            break;
        }
        case MeasureFamily::Cross: {
            if (id.i < 0 || id.i >= dim || id.j < 0 || id.j >= dim) {
                throw std::invalid_argument("step_children: bad index");
            }
            if (id.i == id.j) {
                throw std::invalid_argument("step_children: cross measure requires i != j");
            }
            const auto rule = hermite_rule(params.quad_order);
            const double si = params.sigma[id.i] * std::sqrt(h);
            const double sj = params.sigma[id.j] * std::sqrt(h);
            for (int k = 0; k < params.quad_order; ++k) {
                Vec inc(dim, 0.0);
                inc[id.i] = si * rule.nodes[k];
                inc[id.j] = sj * rule.nodes[k];
                st.children.push_back({rule.weights[k], std::move(inc)});
            }
            break;
        }
    }
    return st;
}

double step_expectation(const MeasureId& id, const SchemeParams& params, double h, int i,
                        const DiscretePath& omega, const PathFunctional& phi) {
    if (i != omega.upto()) {
        throw std::invalid_argument("step_expectation: omega must be defined exactly up to i");
    }
    if (i >= omega.grid().steps()) {
        throw std::invalid_argument("step_expectation: path already terminal");
    }
    const auto st = step_children(id, params, h, omega.dim());
    double e = 0.0;
    for (const auto& child : st.children) {
        e += child.weight * phi(concat(omega, child.increment));
    }
    return e;
}

}  // namespace ppde
