#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ionkit/lattice.hpp"
#include "ionkit/types.hpp"

namespace ionkit {

// Smooth field X on the half line with X(0) = 0 and sampled sup norms.
struct VectorField {
    std::string name;
    std::function<double(double)> X, dX;
    double sup = 0.0;           // ‖X‖∞
    double sup_d = 0.0;         // ‖X'‖∞
    double sup_weighted = 0.0;  // ‖(1+e) X'‖∞
};

VectorField zero_field();
VectorField linear_field(double c);
// ξ_a(e) = ξ(e/a) with ξ(e) = e/(1+e).
VectorField xi_field(double a = 1.0);

// Positive weight μ and its derivative.
struct Weight {
    std::function<double(double)> mu, dmu;
};
Weight unit_weight();

struct FlowResult {
    double phi = 0.0;       // Φ_t(x)
    double dphi = 0.0;      // ∂_x Φ_t(x)
    double jacobian = 0.0;  // det ∂_x Φ_t(x); equals dphi in one dimension
    double error_estimate = 0.0;
};

// Joint adaptive solve of ẏ = X(y), ż = X'(y) z from (x, 1).
FlowResult integrate_flow(const VectorField& X, double x, double t, double tol = 1e-10);

struct UnitaryApplyResult {
    RVec values;
    int nodes_outside = 0;  // nodes whose image left the grid hull (contribution set to 0)
    double mass_loss = 0.0; // 1 - ‖U ψ‖² / ‖ψ‖²
    bool mass_flag = false; // an outside image sits next to an edge sample above 1e-6 max|ψ|
};

// Cubic Lagrange interpolation of grid samples at y; requires y inside the node hull.
double cubic_interpolate(const std::vector<double>& nodes, const RVec& values, double y);

// (U_t ψ)(x) = sqrt(J_t(x) μ(Φ_t(x)) / μ(x)) ψ(Φ_t(x)) on grid samples ψ.
UnitaryApplyResult induced_unitary_apply(const VectorField& X, const Weight& w, double t, const RVec& psi,
                                         const EnergyGrid& grid, double tol = 1e-10);

// A ψ = i (X'/2 + μ'X/(2μ) + X ∂) ψ with a fourth-order difference for ∂.
Eigen::VectorXcd generator_apply(const VectorField& X, const Weight& w, const RVec& psi, const EnergyGrid& grid);

struct GeneratorCheck {
    std::vector<double> times;
    std::vector<double> errors;  // ‖(U_t ψ - ψ)/(it) + Aψ‖ / ‖Aψ‖
    double order = 0.0;
    BoundReport report;
};
GeneratorCheck generator_check(const VectorField& X, const Weight& w, const RVec& psi, const EnergyGrid& grid,
                               const std::vector<double>& times = {1e-3, 1e-4});

struct GronwallSample {
    double x, t;
};
// Worst relative slack of |Φ_t| ≤ |x| + |t|‖X‖, Φ' ≤ e^{‖X'‖|t|}, J_t ≤ e^{n‖X'‖|t|}, and
// for ξ_a the rate e^{‖ξ'‖|t|/a} (pass a <= 0 to skip the last family).
BoundReport verify_gronwall(const VectorField& X, const std::vector<GronwallSample>& samples, double a = 0.0,
                            int dim = 1, double tol = 1e-10);

struct FlowLawReport {
    double group_law = 0.0;   // max |Φ_{s+t}(x) - Φ_s(Φ_t(x))|
    double inverse_law = 0.0; // max |Φ_{-t}(Φ_t(x)) - x|
    double cocycle = 0.0;     // max relative |J_{t+s}(x) - J_t(Φ_s(x)) J_s(x)|
    double min_jacobian = 0.0;
};
FlowLawReport check_flow_laws(const VectorField& X, const std::vector<double>& xs, const std::vector<double>& ts,
                              double tol = 1e-10);

// n deterministic (x, t) points with x in [0.05, x_max] and t in [-t_max, t_max] \ {0}.
std::vector<GronwallSample> gronwall_sample(int n, double x_max = 8.0, double t_max = 2.0);

struct FlowCheckOptions {
    double a = 0.25;                    // X = ξ_a
    double e_max = 10.0;
    int n_e = 4000;
    double centre = 3.0, width = 0.5;   // interior Gaussian test state
    std::vector<double> times{-1.0, -0.5, 0.25, 1.0};
    int samples = 50;
    double tol = 1e-10;                 // ODE tolerance
    double unitary_tol = 1e-6;
};

struct FlowCheck {
    FlowLawReport laws;
    double unitarity = 0.0;      // max |‖U_t ψ‖/‖ψ‖ - 1|
    double unitary_group = 0.0;  // max ‖U_s U_t ψ - U_{s+t} ψ‖ / ‖ψ‖
    GeneratorCheck generator;
    BoundReport flow_laws, unitarity_report, group_report, gronwall;
    bool pass = false;
};

FlowCheck flow_check(const FlowCheckOptions& opt = {});

}  // namespace ionkit
