#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ionkit/krylov.hpp"
#include "ionkit/linear_operator.hpp"
#include "ionkit/operators.hpp"
#include "ionkit/types.hpp"

namespace ionkit {

struct VirialResidual {
    double value = 0.0;           // ⟨ψ, i[L, A] ψ⟩ for normalized ψ
    double eigenvalue = 0.0;      // Rayleigh quotient
    double eigen_residual = 0.0;  // ‖Lψ - eψ‖
    double A_psi_norm = 0.0;
    double bound = 0.0;           // 2 r ‖Aψ‖
    double roundoff = 0.0;        // allowance for the two inner products
    bool pass = false;
};

// ⟨ψ, i[L, A]ψ⟩ = -2 Im⟨Lψ, Aψ⟩ with the eigenresidual bound; ψ is normalized internally.
VirialResidual virial_residual(const ApplyFn& L, const ApplyFn& A, const Vec& psi);

struct VirialEigenReport {
    EigenPairs pairs;
    std::vector<VirialResidual> plain;      // A = A^a
    std::vector<VirialResidual> augmented;  // A = A^a + A0
    BoundReport report;
};

// Lowest n_pairs Lanczos eigenpairs of L_λ, each checked with A^a and A^a + A0.
VirialEigenReport virial_eigenpairs(const Model& m, int n_pairs, const LanczosOptions& opt = {});

// f(x) = ∫ b(k) cos(kx) dk / ∫ b(k) dk with b(k) = exp(-1/(1-k²)) on (-1, 1); f(0) = 1, |f| ≤ 1.
class BandlimitedBump {
public:
    BandlimitedBump();
    double operator()(double x) const;

private:
    std::vector<double> nodes_, weights_;  // composite rule on [0, 1], weights include b/∫b
};

// g1(x) = exp(1 - 1/(1-x²)) on (-1, 1), zero outside; g1(0) = 1.
double bump_g1(double x);

// A^a = S_left ⊗ 1 + 1 ⊗ S_right + S_fock, diagonalized slot by slot; the Fock slot per N-sector.
struct SlotSpectrum {
    RVec left_values, right_values, fock_values;
    Mat left_vectors, right_vectors, fock_vectors;
    RVec fock_number;     // N of each Fock eigenvector
    double residual = 0.0;  // max ‖S U - U Λ‖ / max(1, ‖S‖)
};

// Throws std::runtime_error if an eigensolve fails or its residual exceeds 1e-10.
SlotSpectrum slot_spectrum(const LinearOperator& A, const FockBasis& fock);

// F(A^a, N)ψ for a function F(a, n) of the joint spectrum.
Vec apply_joint_function(const SlotSpectrum& s, int dp, int nf, const std::function<double(double, double)>& F,
                         const Vec& psi);

struct RegularizedFamily {
    Vec psi;
    std::vector<double> alphas, nus;
    std::vector<Vec> members;     // f(α A^a) g1²(ν N) ψ with ν = α³
    std::vector<double> distance; // ‖ψ_{α,ν} - ψ‖
    std::vector<double> norm;     // ‖ψ_{α,ν}‖
};

RegularizedFamily build_regularized_family(const Vec& psi, const SlotSpectrum& s, int dp, int nf,
                                           const std::vector<double>& alphas, int jobs = 1);

struct RegularityReport {
    double hypothesis_min = 0.0;        // min over members of ⟨v, (C - P + B) v⟩ / ‖v‖²
    std::vector<double> C_expectation;  // ⟨v, C v⟩ per member
    bool limit_reached = false;         // |⟨C⟩| of the last member below limit_tol
    double P_expectation = 0.0;         // ‖P^{1/2} ψ‖²
    double B_expectation = 0.0;
    BoundReport hypothesis, B_nonnegative, conclusion;
    bool pass = false;
};

// C ≥ P - B on the family and ⟨C⟩ → 0 imply ⟨ψ, Bψ⟩ ≥ 0 and ‖P^{1/2}ψ‖² ≤ ⟨ψ, Bψ⟩ + tol.
// Hypothesis failures are reported, not thrown.
RegularityReport regularity_check(const ApplyFn& C, const ApplyFn& P, const ApplyFn& B, const RegularizedFamily& family,
                                  double tol, double limit_tol = 1e-6);

struct VirialScan {
    double eigenvalue = 0.0, eigen_residual = 0.0;
    RegularizedFamily family;
    std::vector<double> C1_expectation;  // ⟨ψ_{α,α³}, i[L, A^a] ψ_{α,α³}⟩
    bool decreasing = false;
    double spectral_residual = 0.0;
    RegularityReport regularity;         // C = i[L, A^a + A0], P = N
    BoundReport report;
};

// Lowest Lanczos eigenvector of L_λ, regularized family over α, and the regularity check.
VirialScan virial_scan(const Model& m, const std::vector<double>& alphas, const LanczosOptions& opt = {},
                       int jobs = 1);

}  // namespace ionkit
