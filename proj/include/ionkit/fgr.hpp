#pragma once

#include <vector>

#include "ionkit/model.hpp"
#include "ionkit/operators.hpp"
#include "ionkit/types.hpp"

namespace ionkit {

// Angular measure of the collapsed sphere.
inline constexpr double kSphereArea = 12.566370614359172;

// Thermal weight ω²/(e^{βω} - 1) times |g(ω)|² times the sphere area.
double thermal_spectral_density(const ModelParams& p, double omega);

struct QuadratureValue {
    double value = 0.0;
    double error = 0.0;
};

// Upper integration limits: the integrand falls below 1e-16 of its sampled peak beyond them.
struct FgrCutoffs {
    double omega_cut = 0.0;
    double e_cut = 0.0;
};
FgrCutoffs fgr_cutoffs(const ModelParams& p);

// ε-regularized golden-rule integral, nested midpoint sums with Richardson in ω.
QuadratureValue gamma_regularized_midpoint(const ModelParams& p, double eps);
// Same integral by nested adaptive Gauss-Kronrod with breakpoints at the resonance e = E + ω.
QuadratureValue gamma_regularized_adaptive(const ModelParams& p, double eps);
// Adaptive route; throws when the error estimate exceeds 1e-8 relative.
double gamma_regularized(const ModelParams& p, double eps);

// ε → 0 limit: π ∫_{-E}^∞ dω ρ(ω) |Γ(E+ω)|².
QuadratureValue gamma_limit_adaptive(const ModelParams& p);
QuadratureValue gamma_limit_midpoint(const ModelParams& p);
double gamma_limit(const ModelParams& p);

struct FgrResult {
    std::vector<double> eps;
    std::vector<double> gamma_eps;           // adaptive route
    std::vector<double> gamma_eps_midpoint;
    std::vector<double> gamma_eps_error;     // adaptive error estimate
    double gamma_limit = 0.0;
    double gamma_limit_midpoint = 0.0;
    double gamma_limit_error = 0.0;
    double gamma_extrapolated = 0.0;         // linear Richardson from the two smallest ε
    double omega_cut = 0.0;
    double e_cut = 0.0;
    double rate_constant = 0.0;              // max_ε |γ_ε - γ| / ε
    double rate_order = 0.0;                 // log-log slope of |γ_ε - γ| on the two smallest ε
    BoundReport positivity;                  // γ > 0
    BoundReport agreement;                   // routes agree to 1e-6 relative, for every ε and the limit
    BoundReport rate;                        // |γ_ε - γ| ≤ C ε with C read off the largest ε
};

FgrResult fgr_analysis(const ModelParams& p, const std::vector<double>& eps = {0.2, 0.1, 0.05, 0.025});

// Exponential decay of γ in β: the measured rate -Δ ln γ / Δβ must be at least |E|.
BoundReport beta_decay_check(const ModelParams& p, const std::vector<double>& betas = {1.0, 2.0, 4.0});

struct HypothesisReport {
    std::vector<BoundReport> checks;
    BoundReport overall;
    double measured_ir_exponent = 0.0;  // log-slope of |g| at the smallest sampled ω
};

// Samples the infrared/ultraviolet envelopes of g (derivatives 0..4) and the weighted
// square integrals of Γ and K (derivatives and inverse powers with total order ≤ 3, plus ∫∫|e K|²).
HypothesisReport check_hypotheses(const ModelParams& p);

// j-th derivative (j ≤ 4) of f at x by Richardson-extrapolated central differences with step h.
cplx finite_difference(const std::function<cplx(double)>& f, double x, int j, double h);

struct OperatorGoldenRule {
    double restricted = 0.0;    // ε ⟨Π|I R̄² I|Π⟩ over components with absorbed frequency ω > -E
    double unrestricted = 0.0;  // same without the frequency restriction
};

// Operator-side golden-rule element on the assembled model (I applied matrix-free).
OperatorGoldenRule operator_golden_rule(const Model& m, double eps);

}  // namespace ionkit
