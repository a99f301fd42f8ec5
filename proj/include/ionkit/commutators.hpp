#pragma once

#include <string>
#include <vector>

#include "ionkit/linear_operator.hpp"
#include "ionkit/operators.hpp"

namespace ionkit {

// ad^n(X) = [...[X, A], A] for a one-slot matrix A.
SpMat iterated_ad(const SpMat& X, const SpMat& A, int n);

// λ-independent interaction commutator I_n with i^n ad^n_{A^a}(I) = I_n, built slot by slot.
LinearOperator interaction_commutator(const Model& m, int n);

// Analytic C_n (n = 1, 2, 3): one-body continuum limits plus λ I_n.
LinearOperator analytic_commutator(const Model& m, int n);

// Direct C_n: n-fold i[·, A^a] of the materialized Liouvillian.
SpMat direct_commutator(const Model& m, int n);

struct CommutatorSet {
    LinearOperator C1, C2, C3;
    SpMat C1_direct, C2_direct, C3_direct;
    // ‖(C_n - C_n_direct) ψ‖ / ‖ψ‖ on the smooth probe state.
    double discrepancy[3] = {0.0, 0.0, 0.0};
};

// Probe state: interior bumps in both particle slots times a smooth vacuum + one-boson profile.
Vec smooth_probe_state(const Model& m);

CommutatorSet assemble_commutator_set(const Model& m, bool with_direct = true);

// ‖(i[L0, A_f] - N) ψ‖ / ‖ψ‖ on a smooth two-boson state (Gaussian in both frequencies).
double field_commutator_discrepancy(const Model& m);

struct GjnReport {
    std::string name;
    double k_norm = 0.0;
    double k_form = 0.0;
    bool pass = false;
};

// Λ = Λ_p ⊗ 1 + 1 ⊗ Λ_p + Λ_f, diagonal in the product basis.
RVec comparison_operator_diag(const Model& m);

// k_norm = ‖X Λ^{-1}‖, k_form = ‖Λ^{-1/2} i[X, Λ] Λ^{-1/2}‖ for diagonal Λ ≥ 1.
GjnReport gjn_check(const std::string& name, const LinearOperator& X, const RVec& Lambda);

// Largest singular value of X (N + P_Ω)^{-1/2}.
double kato_bound(const Model& m, const LinearOperator& X);

// Smallest k with ±λ I_1 ≤ (1/10) N P̄_Ω + k λ² on the truncated space.
double small_coupling_constant(const Model& m, const LinearOperator& I1, double lambda);

}  // namespace ionkit
