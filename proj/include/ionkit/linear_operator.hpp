#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ionkit/types.hpp"

namespace ionkit {

using SpPtr = std::shared_ptr<const SpMat>;

// c * (fock ⊗ right ⊗ left) acting on the flat index i + dp*j + dp^2*n.
// A null factor is the identity on that slot.
struct KronTerm {
    cplx c{1.0, 0.0};
    SpPtr left, right, fock;
};

// c * |u><v|
struct RankOneTerm {
    cplx c{1.0, 0.0};
    Vec u, v;
};

// Operator on ℋ_p ⊗ ℋ_p ⊗ ℱ stored as a sum of Kronecker products plus a finite-rank part.
class LinearOperator {
public:
    LinearOperator() = default;
    LinearOperator(int dp, int nf, std::string provenance = {});

    int dp() const { return dp_; }
    int nf() const { return nf_; }
    std::int64_t dim() const { return std::int64_t(dp_) * dp_ * nf_; }
    bool hermitian() const { return hermitian_; }
    const std::string& provenance() const { return provenance_; }
    const std::vector<KronTerm>& terms() const { return terms_; }
    const std::vector<RankOneTerm>& rank_one_terms() const { return rank_one_; }

    LinearOperator& set_hermitian(bool h) { hermitian_ = h; return *this; }
    LinearOperator& set_provenance(std::string p) { provenance_ = std::move(p); return *this; }

    LinearOperator& add_left(const SpMat& m, cplx c = 1.0);
    LinearOperator& add_right(const SpMat& m, cplx c = 1.0);
    LinearOperator& add_fock(const SpMat& m, cplx c = 1.0);
    LinearOperator& add_term(KronTerm t);
    LinearOperator& add_rank_one(cplx c, Vec u, Vec v);
    LinearOperator& add(const LinearOperator& other, cplx c = 1.0);
    LinearOperator& add_identity(cplx c);

    Vec apply(const Vec& x) const;
    Vec apply_adjoint(const Vec& x) const;
    LinearOperator adjoint() const;
    LinearOperator scaled(cplx c) const;

    // Full sparse matrix. Hermitian-flagged operators are returned as (M + M^*)/2,
    // which is Hermitian bit for bit.
    SpMat materialize() const;
    Mat dense() const { return Mat(materialize()); }

private:
    int dp_ = 0, nf_ = 0;
    bool hermitian_ = false;
    std::string provenance_;
    std::vector<KronTerm> terms_;
    std::vector<RankOneTerm> rank_one_;

    void apply_term(const KronTerm& t, const Vec& x, Vec& y, bool adjoint) const;
    void check_dims(const SpMat* m, int n, const char* slot) const;
};

// i (X Y - Y X) for Y of finite rank; X applied matrix-free.
LinearOperator commutator_with_finite_rank(const LinearOperator& X, const LinearOperator& Y);

// i (X Y - Y X) on materialized matrices, symmetrized when both inputs are Hermitian.
SpMat commutator(const SpMat& X, const SpMat& Y, bool symmetrize = true);

SpMat sparse_diag(const RVec& d);
SpMat sparse_identity(int n);
SpMat hermitian_part(const SpMat& m);

}  // namespace ionkit
