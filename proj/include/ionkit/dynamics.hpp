#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ionkit/krylov.hpp"
#include "ionkit/operators.hpp"
#include "ionkit/types.hpp"

namespace ionkit {

struct TimeSeries {
    std::string observable;
    std::vector<double> times;   // strictly increasing
    std::vector<double> values;
    std::vector<double> ergodic_mean;  // (1/T)∫₀ᵀ by the trapezoid rule; equals values[0] at T = 0
    double t_rec = 0.0;          // 2π/Δu
    double norm_drift = 0.0;     // max |‖ψ_t‖ - ‖ψ‖|
    std::map<std::string, double> params;
};

struct EvolveOptions {
    double tol = 1e-10;
    int krylov_dim = 30;
};

// e^{-itL}ψ by restarted Krylov steps; the step is halved on loss of accuracy.
Vec evolve(const ApplyFn& L, const Vec& psi, double t, const EvolveOptions& opt = {}, ExpmStats* stats = nullptr);

// Uniform grid 0, dt, ..., t_max.
std::vector<double> uniform_times(double t_max, int n_steps);

// ⟨ψ_t, K ψ_t⟩ along the grid; ψ defaults to φ0 ⊗ φ0 ⊗ Ω and K to Π.
TimeSeries survival(const Model& m, const std::vector<double>& times, const EvolveOptions& opt = {},
                    const std::optional<Vec>& psi = std::nullopt, const ApplyFn& K = nullptr,
                    const std::string& observable = "Pi");

struct DecayFit {
    double rate = 0.0;       // -d ln P / dt
    double intercept = 0.0;  // ln P at t = 0 from the fit
    double residual = 0.0;   // RMS of ln P about the line
    double t_start = 0.0, t_end = 0.0;
    int n_points = 0;
    bool widened = false;    // window grown because the samples were not monotone
};

// Least-squares line through ln P on [t_start, t_end]. A window whose samples are not monotone is
// widened to the end of the series and flagged.
DecayFit decay_rate(const TimeSeries& s, double t_start, double t_end);

struct IonizationOptions {
    std::vector<double> lambdas{0.05, 0.1};
    int n_steps = 120;
    double fit_start = 0.25;  // fractions of T_rec
    double fit_end = 0.9;
    EvolveOptions evolve;
};

struct IonizationRun {
    std::vector<double> lambdas;
    std::vector<TimeSeries> series;
    std::vector<DecayFit> fits;
    double t_rec = 0.0;
    double free_deviation = 0.0;     // max |P - 1| at λ = 0
    double half_time = -1.0;         // first t with P < 1/2 for the largest λ, -1 if none
    double rate_ratio = 0.0;         // rate(λ_max) / rate(λ_min)
    double expected_ratio = 0.0;     // (λ_max/λ_min)²
    BoundReport free_exact, half_before_recurrence, lambda_squared;
    bool pass = false;
};

// λ = 0 run plus one run per λ (trajectories in parallel), decay fits and the λ² scaling check.
IonizationRun ionization_signature(const ModelParams& p, const IonizationOptions& opt = {}, int jobs = 1);

}  // namespace ionkit
