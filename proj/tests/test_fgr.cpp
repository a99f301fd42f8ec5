#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ionkit/fgr.hpp"

using namespace ionkit;

namespace {

constexpr double kPi = 3.14159265358979323846;

double factorial(int n) { return std::tgamma(n + 1.0); }

// Default model at β = 1, E = -1: ρ(ω)|Γ(ω-1)|² = 4π ω^7 (ω-1)^6 e^{-4ω+2} / (e^ω - 1).
// Expanding 1/(e^ω - 1) = Σ_k e^{-kω} and shifting ω = 1 + t gives gamma-function integrals.
double default_gamma_limit_series() {
    double s = 0.0;
    for (int k = 1; k <= 60; ++k) {
        const double c = 4.0 + k;
        double inner = 0.0;
        for (int j = 0; j <= 7; ++j) {
            const double binom = factorial(7) / (factorial(j) * factorial(7 - j));
            inner += binom * factorial(6 + j) / std::pow(c, 7 + j);
        }
        s += std::exp(2.0 - c) * inner;
    }
    return kPi * 4.0 * kPi * s;
}

ModelParams operator_params(int n) {
    ModelParams p;
    p.grid.n_e = n;
    p.grid.n_u = n;
    p.grid.e_max = 12.0;
    p.grid.u_max = 12.0;
    p.grid.n_max = 1;
    return p;
}

}  // namespace

TEST_CASE("vanishing couplings give zero") {
    ModelParams p;
    p.form_factor = zero_form_factor();
    CHECK(gamma_regularized(p, 0.1) == 0.0);
    CHECK(gamma_limit(p) == 0.0);
    ModelParams q;
    q.kernel = zero_kernel();
    CHECK(gamma_regularized(q, 0.1) == 0.0);
    CHECK(gamma_limit(q) == 0.0);
    ModelParams r;
    r.form_factor.g = [](double w) -> cplx { return (w > 0.0 && w < 0.9) ? w * w * w : 0.0; };
    CHECK(gamma_limit(r) == 0.0);
    CHECK(gamma_regularized(r, 0.1) == 0.0);
    CHECK_THROWS_AS(gamma_regularized(p, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(gamma_regularized_midpoint(p, -1.0), std::invalid_argument);
}

TEST_CASE("closed-form limit against the series oracle") {
    ModelParams p;
    const double oracle = default_gamma_limit_series();
    CHECK(gamma_limit(p) == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(gamma_limit_midpoint(p).value == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("regularized integral: routes, positivity and the eps rate") {
    ModelParams p;
    auto r = fgr_analysis(p);
    CHECK(r.positivity.pass);
    CHECK(r.agreement.pass);
    CHECK(r.agreement.quantity < 1e-6);
    CHECK(r.rate.pass);
    CHECK(r.rate_order == doctest::Approx(1.0).epsilon(0.15));
    for (std::size_t k = 0; k < r.eps.size(); ++k) {
        CHECK(r.gamma_eps[k] >= 0.0);
        CHECK(r.gamma_eps_midpoint[k] >= 0.0);
        if (k > 0) CHECK(r.gamma_eps[k] > r.gamma_eps[k - 1]);  // the defaults approach the limit from below
    }
    // Linear extrapolation removes the O(ε) term.
    CHECK(std::abs(r.gamma_extrapolated - r.gamma_limit) < std::abs(r.gamma_eps.back() - r.gamma_limit));
    CHECK(r.omega_cut > 1.0);
    CHECK(r.e_cut > 0.0);
}

TEST_CASE("gamma decays exponentially in beta") {
    ModelParams p;
    auto b = beta_decay_check(p);
    MESSAGE("measured rate " << b.quantity);
    CHECK(b.pass);
    CHECK(b.quantity >= 1.0);
}

TEST_CASE("finite differences") {
    auto f = [](double x) -> cplx { return {std::sin(x), std::exp(0.3 * x)}; };
    const double x = 0.7;
    const cplx expect[5] = {{std::sin(x), std::exp(0.3 * x)},
                            {std::cos(x), 0.3 * std::exp(0.3 * x)},
                            {-std::sin(x), 0.09 * std::exp(0.3 * x)},
                            {-std::cos(x), 0.027 * std::exp(0.3 * x)},
                            {std::sin(x), 0.0081 * std::exp(0.3 * x)}};
    for (int j = 0; j <= 4; ++j) CHECK(std::abs(finite_difference(f, x, j, 0.05) - expect[j]) < 1e-6);
    CHECK_THROWS_AS(finite_difference(f, x, 5, 0.05), std::invalid_argument);
}

TEST_CASE("hypothesis checks") {
    ModelParams p;
    auto h = check_hypotheses(p);
    CHECK(h.overall.pass);
    CHECK(h.measured_ir_exponent == doctest::Approx(2.5).epsilon(1e-6));

    ModelParams lin;
    lin.form_factor = linear_form_factor();
    auto hl = check_hypotheses(lin);
    CHECK_FALSE(hl.overall.pass);
    bool ir_failed = false;
    for (const auto& c : hl.checks)
        if (c.name == "A1.ir_exponent") ir_failed = !c.pass;
    CHECK(ir_failed);

    // Γ(e) = e e^{-e}: e^{-2}|Γ|² ~ e^{-2} is not integrable at 0, e^{-1}|Γ|² is.
    ModelParams weak;
    weak.kernel.gamma = [](double e) -> cplx { return e > 0.0 ? e * std::exp(-e) : 0.0; };
    weak.kernel.K = nullptr;
    auto hw = check_hypotheses(weak);
    for (const auto& c : hw.checks) {
        if (c.name == "A2.gamma_m1_1_m2_0") CHECK(c.pass);
        if (c.name == "A2.gamma_m1_2_m2_0") CHECK_FALSE(c.pass);
    }
    CHECK_FALSE(hw.overall.pass);
}

TEST_CASE("operator-side golden rule matches the hand-assembled sum") {
    auto p = operator_params(6);
    p.kernel.K = nullptr;
    auto m = assemble_model(p);
    const double eps = 0.3;
    const auto& eg = m.basis.particle.grid;
    const auto& fg = m.basis.field;
    // I Π = 2^{-1/2} (Γ ⊗ |E⟩ ⊗ a*(f1) - |E⟩ ⊗ Γ̄ ⊗ a*(f2)) Ω; |f1(u)|² for u < 0 and |f2(u)|² for u > 0 both
    // equal 4π u² |g(|u|)|² / (e^{β|u|} - 1) Δu.
    double oracle = 0.0;
    for (double e : eg.nodes)
        for (double u : fg.nodes) {
            const double w = std::abs(u);
            if (w <= 1.0) continue;
            const double rho = thermal_spectral_density(p, w) * fg.du;
            const double g2 = std::norm(p.kernel.gamma(e)) * eg.weight;
            const double l = u < 0.0 ? e + 1.0 + u : -1.0 - e + u;
            oracle += 0.5 * g2 * rho * eps / (l * l + eps * eps);
        }
    auto og = operator_golden_rule(m, eps);
    CHECK(og.restricted == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(og.unrestricted > og.restricted);
    CHECK_THROWS_AS(operator_golden_rule(m, 0.0), std::invalid_argument);
}

TEST_CASE("operator-side golden rule converges to the regularized integral") {
    const double eps = 0.2;
    const double g = gamma_regularized(operator_params(64), eps);
    double err32 = 0.0, err64 = 0.0;
    for (int n : {32, 64}) {
        auto m = assemble_model(operator_params(n));
        const double rel = std::abs(operator_golden_rule(m, eps).restricted / g - 1.0);
        MESSAGE("n = " << n << " relative error " << rel);
        (n == 32 ? err32 : err64) = rel;
    }
    CHECK(err64 < 0.05);
    CHECK(err64 < err32);
}
