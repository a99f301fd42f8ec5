#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ionkit/lattice.hpp"
#include "ionkit/linear_operator.hpp"
#include "ionkit/model.hpp"
#include "ionkit/types.hpp"

namespace ionkit {

struct ParticleOps {
    SpMat H;        // diag(E, e_1, ..., e_n)
    SpMat p0;       // projection on the bound index
    SpMat p0bar;
    SpMat Pplus;    // spectral projection of H on (0, ∞)
    SpMat Lambda;   // H P_+ + 1
    SpMat xi_a;     // diag(0, ξ(e_j / a))
    SpMat D;        // central difference on the continuum block, zero ghost values
    SpMat A;        // (i/2)(ξ_a D + D ξ_a)
};

ParticleOps assemble_particle_ops(const ModelParams& params, const CompositeBasis& basis);

// Central-difference matrix (f_{k+1} - f_{k-1}) / (2h) with zero ghost values; antisymmetric.
SpMat central_difference(int n, double h);

// Gluing map on samples of f at the positive field nodes (ascending), result embedded with sqrt(weight).
Vec glue_tau_beta(const Vec& f_positive, double beta, const FieldGrid& grid);
Vec glue_tau_beta(const std::function<cplx(double)>& f, double beta, const FieldGrid& grid);
// Samples at the positive nodes in ascending order.
Vec positive_samples(const std::function<cplx(double)>& f, const FieldGrid& grid);
// Inner product with the u^2 du dΣ measure matching the gluing map's symplectic form.
cplx weighted_inner(const Vec& f_positive, const Vec& g_positive, const FieldGrid& grid);

// Second-quantized operators on the truncated Fock space.
SpMat creation(const FockBasis& fock, const Vec& f);                   // a*(f)
SpMat annihilation(const FockBasis& fock, const Vec& f);               // a(f)
SpMat field_operator(const FockBasis& fock, const Vec& f);             // (a*(f) + a(f)) / sqrt 2
SpMat field_linear(const FockBasis& fock, const Vec& f_cr, const Vec& f_an);  // a*(f_cr) + a(f_an)
SpMat second_quantize(const FockBasis& fock, const SpMat& h);          // dΓ(h)
SpMat number_operator(const FockBasis& fock);
SpMat vacuum_projection(const FockBasis& fock);

struct FieldOps {
    SpMat N;
    SpMat dGamma_u;
    SpMat Du;        // one-mode central difference on the field grid
    SpMat A;         // dΓ(i Du)
    SpMat Lambda;    // dΓ(u^2 + 1) + 1
    SpMat P_omega;
    SpMat P_omega_bar;
};

FieldOps assemble_field_ops(const CompositeBasis& basis);

// Everything the checks need, built once per parameter set.
struct Model {
    ModelParams params;
    CompositeBasis basis;
    ParticleOps particle;
    FieldOps field;
    SpMat G, G_conj;       // particle coupling and its entrywise conjugate
    Vec f1, f2;            // τ_β g and e^{-βu/2} τ_β g on the field grid
    SpMat phi1, phi2;      // φ(f1), φ(f2)
    RVec L0_diag;
    LinearOperator L0, I, L, D;
    LinearOperator A;      // A^a = A_p ⊗ 1 - 1 ⊗ A_p + A_f

    std::int64_t dim() const { return basis.dim(); }
    // Flat index of φ0 ⊗ φ0 ⊗ Ω.
    static constexpr std::int64_t pi_index = 0;
    Vec pi_vector() const;
};

Model assemble_model(const ModelParams& params);

// Multiplication by R_ε^2 = (L0^2 + ε^2)^{-1} on the diagonal of L0.
Vec apply_resolvent_squared(const Model& m, const Vec& x, double epsilon);
// w = Π̄ R_ε^2 I Π-vector.
Vec a0_profile(const Model& m, double epsilon);
// A0 = iθλ(|Π><w| - |w><Π|); zero operator when λ = 0.
LinearOperator assemble_A0(const Model& m, double theta, double lambda, double epsilon);

// J = (particle swap + conjugation) ⊗ (mode reflection + conjugation + (-1)^N).
struct AntiunitaryAction {
    std::vector<std::int64_t> source;  // (Jx)[k] = sign[k] * conj(x[source[k]])
    std::vector<double> sign;
    Vec apply(const Vec& x) const;
};

AntiunitaryAction build_J(const CompositeBasis& basis);
// Worst relative ‖(J L J + L) ψ‖ / (‖L‖ ‖ψ‖) over seeded random ψ.
BoundReport check_J(const LinearOperator& L, const AntiunitaryAction& J, int n_vectors, std::uint64_t seed,
                    double tol = 1e-10);

// Largest |<x, (T - T^*) y>| style probe: ‖(T - T^*) ψ‖ / ‖ψ‖ on random vectors.
double hermiticity_defect(const LinearOperator& T, int n_vectors, std::uint64_t seed);
// Operator norm estimate by Lanczos on T^*T.
double operator_norm(const LinearOperator& T, std::uint64_t seed = 7);

}  // namespace ionkit
