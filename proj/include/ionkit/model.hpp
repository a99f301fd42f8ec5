#pragma once

#include <functional>
#include <string>

#include "ionkit/lattice.hpp"
#include "ionkit/types.hpp"

namespace ionkit {

// Coupling profile g(omega) on omega > 0 (angular dependence collapsed to one node).
struct FormFactor {
    std::string name = "default";
    std::function<cplx(double)> g;
    double ir_exponent = 2.5;   // p in |d^j g| <= k2 w^(p-j) near 0
    double uv_exponent = 4.0;   // q in |d^j g| <= K2 w^(-q-j) at large w
    double k1 = 0.5, k2 = 10.0; // IR window and envelope constant
    double K1 = 40.0, K2 = 1e3; // UV window and envelope constant
};

// Particle coupling: Gamma(e) couples bound state to continuum, K(e,e') continuum to continuum.
struct Kernel {
    std::string name = "default";
    std::function<cplx(double)> gamma;
    std::function<cplx(double, double)> K;  // may be empty (no continuum block)
    double G_EE = 0.0;
};

FormFactor default_form_factor();   // w^(5/2) e^(-w)
FormFactor zero_form_factor();
FormFactor linear_form_factor();    // g(w) = w, IR exponent 1
Kernel default_kernel();            // Gamma(e) = e^3 e^(-e), K = Gamma x Gamma
Kernel zero_kernel();

FormFactor form_factor_by_name(const std::string& name);
Kernel kernel_by_name(const std::string& name);

struct ModelParams {
    double beta = 1.0;
    double lambda = 0.0;
    double theta = 0.2;
    double epsilon = 0.3;
    double a = 0.5;
    GridSpec grid;
    FormFactor form_factor = default_form_factor();
    Kernel kernel = default_kernel();

    void validate() const;
};

// Canonical vector field xi(e) = e/(1+e) and derivatives.
inline double xi(double e) { return e / (1.0 + e); }
inline double xi_d1(double e) { return 1.0 / ((1.0 + e) * (1.0 + e)); }
inline double xi_d2(double e) { return -2.0 / ((1.0 + e) * (1.0 + e) * (1.0 + e)); }

}  // namespace ionkit
