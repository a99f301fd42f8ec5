#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ionkit/linear_operator.hpp"
#include "ionkit/operators.hpp"
#include "ionkit/types.hpp"

namespace ionkit {

struct FeshbachResult {
    double m = 0.0;
    Mat F;                      // on Ran Π in the basis of the given columns
    double Mbar_min_eig = 0.0;  // min spec of M restricted to Ran Π̄
    double distance = 0.0;      // m to spec(M̄)
};

// F_{Π,m}(M) = Π(M - M Π̄ (M̄ - m)^{-1} Π̄ M)Π with Π the projection on the span of the orthonormal columns Q.
// Throws std::domain_error when m lies within 1e-12 (1 + ‖M‖) of spec(M̄).
FeshbachResult feshbach_map(const Mat& M, const Mat& Q, double m);

// Projection on the first r coordinates as orthonormal columns.
Mat coordinate_columns(int dim, int r);

struct IsospectralityCase {
    int dim = 0;
    int rank = 0;
    std::vector<double> eigs_below;   // eigenvalues of M below min spec(M̄)
    std::vector<double> roots;        // roots of det(F_{Π,m}(M) - m) below min spec(M̄)
    double max_mismatch = 0.0;
    bool pass = false;
};

// Roots of every eigen-branch of F_{Π,m}(M) - m on (-∞, min spec M̄); each branch is strictly decreasing.
std::vector<double> feshbach_roots(const Mat& M, const Mat& Q);

// Random Hermitian instance (dim ≤ 20, rank 1 or 2 of Π in a random unitary frame) checked both ways.
IsospectralityCase isospectrality_case(std::uint64_t seed, double tol = 1e-10);

struct FuzzReport {
    std::vector<IsospectralityCase> cases;
    double max_mismatch = 0.0;
    int failures = 0;
    BoundReport report;
};
FuzzReport isospectrality_fuzz(int n_cases, std::uint64_t seed, double tol = 1e-10, int jobs = 1);

// diag(0, ξ(e_j / a)) on the particle space.
SpMat xi_diag(const Model& m, double a);

struct MOperators {
    LinearOperator Ma, M;
    LinearOperator comm_A0;  // i[L, A0]
    double k = 0.0;
};

// M_a = ξ_a ⊗ 1 + 1 ⊗ ξ_a + (9/10) P̄_Ω - kλ² + i[L, A0]; M replaces ξ_a by P_+.
MOperators assemble_M(const Model& m, double k, double a);

struct ChainOptions {
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    std::vector<double> m_grid{0.0, 0.05, 0.1, 0.15, 0.2, 0.24};
    double form_tol = 1e-8;  // relative to the operator norm
    std::uint64_t seed = 12345;
};

struct ChainReport {
    double lambda = 0.0, theta = 0.0, epsilon = 0.0, a = 0.0, beta = 0.0;
    double k = 0.0;
    double gamma = 0.0;          // ε ⟨Π|I R̄² I|Π⟩ restricted to ω > -E on the truncated grid
    double gamma_limit = 0.0;
    double target = 0.0;         // (θλ²/ε) γ
    double min_eig_M = 0.0;
    double min_eig_Mbar = 0.0;
    std::vector<double> F_values;  // F_{Π,m}(M) on the m grid
    double F_variation = 0.0;
    bool uniform_in_m = false;
    BoundReport a49, a60, a65, a70, a75;
    bool cond_a66 = false;       // |λ| < λ1 and θλ²/ε² < λ1
    bool cond_a74 = false;       // θ(1 + |λ|/ε)² + ε/(γθ) < λ2
    double a66_lhs = 0.0, a74_lhs = 0.0;
    double lambda0_recipe = 0.0; // min{λ1, ε√λ1/√θ, ε}
    std::int64_t dim = 0;
    bool pass = false;
};

// Full lower-bound chain on the assembled model at its own λ, θ, ε, a.
ChainReport verify_bound_chain(const Model& m, const ChainOptions& opt = {});
ChainReport verify_bound_chain(const ModelParams& p, const ChainOptions& opt = {});

// max over 20 seeded vectors of ‖(M_a - M)ψ‖ for each a (k and A0 fixed).
std::vector<double> ma_to_m_distances(const Model& m, double k, const std::vector<double>& as, int n_vectors,
                                      std::uint64_t seed);

struct Lambda0Row {
    double beta = 0.0, lambda = 0.0;
    double min_eig = 0.0, min_eig_Mbar = 0.0, F_min = 0.0, target = 0.0, k = 0.0, gamma = 0.0;
    bool pass = false;
};
struct Lambda0Scan {
    std::vector<Lambda0Row> rows;
    std::vector<double> betas, lambda0, gamma_limit;
    bool decreasing = false;
    double ratio_spread = 0.0;  // max(λ0/γ) / min(λ0/γ)
    BoundReport report;
};
Lambda0Scan scan_lambda0(const ModelParams& p, const std::vector<double>& lambdas, const std::vector<double>& betas,
                         const ChainOptions& opt = {}, int jobs = 1);

}  // namespace ionkit
