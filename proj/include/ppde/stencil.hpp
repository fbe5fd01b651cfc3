#pragma once

#include <functional>
#include <vector>

#include "ppde/grid.hpp"
#include "ppde/linalg.hpp"

namespace ppde {

// Scheme constants: drift scale mu_i > 0 and volatility scale sigma_i > 0
// per coordinate, quadrature order q, and monotonicity margin epsilon0.
struct SchemeParams {
    Vec mu;
    Vec sigma;
    int quad_order = 5;
    double epsilon0 = 0.25;
};

void validate_params(const SchemeParams& params, int dim);

// One-step measure families: the degenerate center and drift measures plus
// the diagonal and cross Gaussian measures.
enum class MeasureFamily { Center, Drift, Diag, Cross };

struct MeasureId {
    MeasureFamily family = MeasureFamily::Center;
    int i = -1;
    int j = -1;
};

// Canonical enumeration: Center, Drift(0..d-1), Diag(0..d-1), Cross(i,j) for
// all ordered pairs i != j.
std::vector<MeasureId> all_measures(int dim);
int measure_count(int dim);           // 1 + 2d + d(d-1)
int measure_index(const MeasureId& id, int dim);

// Gauss-Hermite rule for N(0,1): sum w_k p(x_k) integrates polynomials of
// degree <= 2q-1 exactly. Nodes are symmetric about 0, weights positive and
// normalized to sum to 1.
struct HermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
HermiteRule hermite_rule(int q);
inline constexpr int kMaxQuadOrder = 64;

struct StencilChild {
    double weight;
    Vec increment;
};

struct Stencil {
    MeasureId id;
    std::vector<StencilChild> children;
};

// Children of one step of length h under the given measure:
//   Center      -> {(1, 0)}
//   Drift(i)    -> {(1, mu_i h e_i)}
//   Diag(i)     -> {(w_k, sigma_i sqrt(h) x_k e_i)}
//   Cross(i,j)  -> {(w_k, sigma_i sqrt(h) x_k e_i + sigma_j sqrt(h) x_k e_j)}
// The cross measure drives both coordinates with one shared Gaussian factor,
// so Cross(i,j) and Cross(j,i) have identical children.
Stencil step_children(const MeasureId& id, const SchemeParams& params, double h, int dim);

// sum_k w_k phi(concat(omega, Delta_k)); phi must be pure.
using PathFunctional = std::function<double(const DiscretePath&)>;
double step_expectation(const MeasureId& id, const SchemeParams& params, double h, int i,
                        const DiscretePath& omega, const PathFunctional& phi);

}  // namespace ppde
