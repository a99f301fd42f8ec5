#include "ionkit/model.hpp"

#include <cmath>
#include <stdexcept>

namespace ionkit {

FormFactor default_form_factor() {
    FormFactor f;
    f.name = "default";
    f.g = [](double w) -> cplx { return w > 0.0 ? std::pow(w, 2.5) * std::exp(-w) : 0.0; };
    f.ir_exponent = 2.5;
    f.uv_exponent = 4.0;
    return f;
}

FormFactor zero_form_factor() {
    FormFactor f;
    f.name = "zero";
    f.g = [](double) -> cplx { return 0.0; };
    return f;
}

FormFactor linear_form_factor() {
    FormFactor f;
    f.name = "linear";
    f.g = [](double w) -> cplx { return w > 0.0 ? w : 0.0; };
    f.ir_exponent = 1.0;
    return f;
}

Kernel default_kernel() {
    Kernel k;
    k.name = "default";
    k.gamma = [](double e) -> cplx { return e > 0.0 ? e * e * e * std::exp(-e) : 0.0; };
    auto gam = k.gamma;
    k.K = [gam](double e, double ep) -> cplx { return gam(e) * std::conj(gam(ep)); };
    k.G_EE = 0.0;
    return k;
}

Kernel zero_kernel() {
    Kernel k;
    k.name = "zero";
    k.gamma = [](double) -> cplx { return 0.0; };
    k.K = nullptr;
    return k;
}

FormFactor form_factor_by_name(const std::string& name) {
    if (name == "default") return default_form_factor();
    if (name == "zero") return zero_form_factor();
    if (name == "linear") return linear_form_factor();
    throw std::invalid_argument("unknown form factor '" + name + "'");
}

Kernel kernel_by_name(const std::string& name) {
    if (name == "default") return default_kernel();
    if (name == "zero") return zero_kernel();
    if (name == "no_continuum") {
        Kernel k = default_kernel();
        k.name = "no_continuum";
        k.K = nullptr;
        return k;
    }
    throw std::invalid_argument("unknown kernel '" + name + "'");
}

void ModelParams::validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("model.beta must be > 0");
    if (!(epsilon > 0.0)) throw std::invalid_argument("model.epsilon must be > 0");
    if (!(theta > 0.0)) throw std::invalid_argument("model.theta must be > 0");
    if (!(a > 0.0)) throw std::invalid_argument("model.a must be > 0");
    if (!(grid.E < 0.0)) throw std::invalid_argument("model.E must be < 0");
    if (!std::isfinite(lambda)) throw std::invalid_argument("model.lambda must be finite");
}

}  // namespace ionkit
