#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppde/grid.hpp"
#include "ppde/linalg.hpp"

namespace ppde {

// Terminal condition g(omega), evaluated on a fully defined skeleton.
// `lipschitz` is the constant valid on skeletons with coordinate entries in
// [-1, 1] (the box used by the property checks).
struct TerminalSpec {
    std::string name;
    int dim = 1;
    double lipschitz = 0.0;
    int coordinate = -1;  // monitored coordinate, where meaningful
    std::function<double(const DiscretePath&)> fn;
};

double eval_terminal(const TerminalSpec& g, const DiscretePath& omega);

// Generator G(t, omega, y, z, gamma), nondecreasing in gamma.
struct GeneratorSpec {
    using Eval = std::function<double(double t, const DiscretePath& omega, int i, double y,
                                      const Vec& z, const Matrix& gamma)>;
    using Derivs = std::function<void(double t, const DiscretePath& omega, int i, double y,
                                      const Vec& z, const Matrix& gamma, double& dy, Vec& dz,
                                      Matrix& dgamma)>;
    std::string name;
    int dim = 1;
    double lipschitz_zg = 0.0;  // L0: Lipschitz constant in (z, gamma)
    Eval fn;
    Derivs analytic;  // empty -> central differences
};

double eval_generator(const GeneratorSpec& g, int i, const DiscretePath& omega, double y,
                      const Vec& z, const Matrix& gamma);

struct DerivativeBundle {
    enum class Method { Analytic, CentralDifference };
    double dy = 0.0;
    Vec dz;
    Matrix dgamma;  // symmetric convention: d/(2 de) along e_ij + e_ji for i != j
    Method method = Method::Analytic;
    double delta = 0.0;
    // evaluation point echo
    double t = 0.0;
    double y = 0.0;
    Vec z;
    Matrix gamma;
};

DerivativeBundle generator_derivs(const GeneratorSpec& g, int i, const DiscretePath& omega,
                                  double y, const Vec& z, const Matrix& gamma);
// Central differences regardless of registered analytic derivatives;
// delta <= 0 selects the default cbrt(eps) * max(1, |point|) step.
DerivativeBundle generator_derivs_central(const GeneratorSpec& g, int i,
                                          const DiscretePath& omega, double y, const Vec& z,
                                          const Matrix& gamma, double delta = 0.0);

// Smooth test functionals with analytic path derivatives: polynomials in
// (t, omega_t) for the cylinder kind, and in (t, omega_t, I_t) for the
// integral kind, where I_t[c] = sum_{1<=j<=i} omega_{t_j}[c] * h.
struct PolyTerm {
    double coef = 1.0;
    int tpow = 0;
    std::vector<int> xpow;  // per-coordinate powers; empty = all zero
    std::vector<int> ipow;  // integral kind only
};

struct TestFunctionalSpec {
    enum class Kind { Cylinder, Integral };
    Kind kind = Kind::Cylinder;
    int dim = 1;
    std::vector<PolyTerm> terms;
};

struct FunctionalJet {
    double value = 0.0;
    double dt = 0.0;  // time derivative (includes the running-integral term)
    Vec dw;
    Matrix dww;
};

FunctionalJet eval_test_functional(const TestFunctionalSpec& phi, int i, const DiscretePath& omega);
// State-level evaluation for one-step sweeps.
FunctionalJet eval_functional_state(const TestFunctionalSpec& phi, double t, const Vec& x,
                                    const Vec& integral);
double eval_functional_value(const TestFunctionalSpec& phi, double t, const Vec& x,
                             const Vec& integral);
Vec running_integral(const DiscretePath& omega, int i);

// --- registries -----------------------------------------------------------
// Built-in names are installed on first use; custom entries are added in
// code via the register_* hooks and can then be referenced from configs.

using TerminalFactory = std::function<TerminalSpec(const nlohmann::json& params, int dim)>;
using GeneratorFactory = std::function<GeneratorSpec(const nlohmann::json& params, int dim)>;

void register_terminal_factory(const std::string& name, TerminalFactory f);
void register_generator_factory(const std::string& name, GeneratorFactory f);

TerminalSpec make_terminal(const std::string& name, const nlohmann::json& params, int dim);
GeneratorSpec make_generator(const std::string& name, const nlohmann::json& params, int dim);

std::vector<std::string> registered_terminals();
std::vector<std::string> registered_generators();

// Canonical instance of each registered generator (default parameters and
// dimension), used by audit sweeps that quantify over the registry.
struct GeneratorInstance {
    std::string name;
    nlohmann::json params;
    int dim;
};
std::vector<GeneratorInstance> registered_generator_instances();

}  // namespace ppde
