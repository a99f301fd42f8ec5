#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ionkit/types.hpp"

namespace ionkit {

using ApplyFn = std::function<Vec(const Vec&)>;

struct LanczosOptions {
    int n_eig = 1;
    int max_iter = 600;
    double tol = 1e-10;         // residual target relative to the Ritz spread
    int check_every = 10;
    std::uint64_t seed = 12345;
};

struct EigenPairs {
    RVec values;
    std::vector<Vec> vectors;
    RVec residuals;  // ‖A v - θ v‖ computed explicitly
    int iterations = 0;
    bool converged = false;
};

// Lowest eigenpairs of a Hermitian operator by Lanczos with full reorthogonalization.
// A start vector, when given, fixes the Krylov space (use it to restrict to an invariant subspace).
EigenPairs lanczos_lowest(const ApplyFn& A, std::int64_t dim, const LanczosOptions& opt,
                          const Vec* start = nullptr);

// Largest singular value of B via Lanczos on B^* B.
double largest_singular_value(const ApplyFn& B, const ApplyFn& B_adj, std::int64_t dim,
                              const LanczosOptions& opt);

struct CgResult {
    Vec x;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

// Conjugate gradients for Hermitian positive definite A.
CgResult conjugate_gradient(const ApplyFn& A, const Vec& b, double rel_tol = 1e-12, int max_iter = 5000);

struct ExpmStats {
    int substeps = 0;
    int matvecs = 0;
    double error_estimate = 0.0;
};

// exp(-i t H) psi for Hermitian H by restarted Lanczos with an a posteriori error control.
Vec krylov_expm(const ApplyFn& H, const Vec& psi, double t, double tol, int krylov_dim = 30,
                ExpmStats* stats = nullptr);

// Deterministic per-index stream: splitmix64 of (seed, index).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);
Vec random_vector(std::int64_t dim, std::uint64_t seed);

}  // namespace ionkit
