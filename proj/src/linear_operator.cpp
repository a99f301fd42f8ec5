#include "ionkit/linear_operator.hpp"

#include <stdexcept>

#include <unsupported/Eigen/KroneckerProduct>

namespace ionkit {

LinearOperator::LinearOperator(int dp, int nf, std::string provenance)
    : dp_(dp), nf_(nf), provenance_(std::move(provenance)) {
    if (dp < 1 || nf < 1) throw std::invalid_argument("LinearOperator: empty slot dimension");
}

void LinearOperator::check_dims(const SpMat* m, int n, const char* slot) const {
    if (m && (m->rows() != n || m->cols() != n))
        throw std::invalid_argument(std::string("LinearOperator: ") + slot + " factor has wrong size");
}

LinearOperator& LinearOperator::add_term(KronTerm t) {
    check_dims(t.left.get(), dp_, "left");
    check_dims(t.right.get(), dp_, "right");
    check_dims(t.fock.get(), nf_, "fock");
    if (t.c != cplx(0.0)) terms_.push_back(std::move(t));
    return *this;
}

LinearOperator& LinearOperator::add_left(const SpMat& m, cplx c) {
    return add_term({c, std::make_shared<const SpMat>(m), nullptr, nullptr});
}
LinearOperator& LinearOperator::add_right(const SpMat& m, cplx c) {
    return add_term({c, nullptr, std::make_shared<const SpMat>(m), nullptr});
}
LinearOperator& LinearOperator::add_fock(const SpMat& m, cplx c) {
    return add_term({c, nullptr, nullptr, std::make_shared<const SpMat>(m)});
}
LinearOperator& LinearOperator::add_identity(cplx c) { return add_term({c, nullptr, nullptr, nullptr}); }

LinearOperator& LinearOperator::add_rank_one(cplx c, Vec u, Vec v) {
    if (u.size() != dim() || v.size() != dim())
        throw std::invalid_argument("LinearOperator: rank-one vectors have wrong length");
    if (c != cplx(0.0)) rank_one_.push_back({c, std::move(u), std::move(v)});
    return *this;
}

LinearOperator& LinearOperator::add(const LinearOperator& o, cplx c) {
    if (o.dp_ != dp_ || o.nf_ != nf_) throw std::invalid_argument("LinearOperator::add: basis mismatch");
    for (auto t : o.terms_) {
        t.c *= c;
        add_term(std::move(t));
    }
    for (const auto& r : o.rank_one_) add_rank_one(r.c * c, r.u, r.v);
    return *this;
}

void LinearOperator::apply_term(const KronTerm& t, const Vec& x, Vec& y, bool adj) const {
    const Eigen::Index p = dp_, f = nf_;
    Vec cur = x;
    if (t.left) {
        Eigen::Map<const Mat> X(cur.data(), p, p * f);
        Mat Y = adj ? Mat(t.left->adjoint() * X) : Mat(*t.left * X);
        cur = Eigen::Map<Vec>(Y.data(), Y.size());
    }
    if (t.right) {
        Vec out(cur.size());
        for (Eigen::Index n = 0; n < f; ++n) {
            Eigen::Map<const Mat> Xn(cur.data() + n * p * p, p, p);
            Eigen::Map<Mat> Yn(out.data() + n * p * p, p, p);
            if (adj)
                Yn = Xn * t.right->conjugate();
            else
                Yn = Xn * t.right->transpose();
        }
        cur.swap(out);
    }
    if (t.fock) {
        Eigen::Map<const Mat> X(cur.data(), p * p, f);
        Mat Y = adj ? Mat(X * t.fock->conjugate()) : Mat(X * t.fock->transpose());
        cur = Eigen::Map<Vec>(Y.data(), Y.size());
    }
    y += (adj ? std::conj(t.c) : t.c) * cur;
}

Vec LinearOperator::apply(const Vec& x) const {
    if (x.size() != dim()) throw std::invalid_argument("LinearOperator::apply: vector length mismatch");
    Vec y = Vec::Zero(x.size());
    for (const auto& t : terms_) apply_term(t, x, y, false);
    for (const auto& r : rank_one_) y += (r.c * r.v.dot(x)) * r.u;
    return y;
}

Vec LinearOperator::apply_adjoint(const Vec& x) const {
    if (x.size() != dim()) throw std::invalid_argument("LinearOperator::apply_adjoint: vector length mismatch");
    Vec y = Vec::Zero(x.size());
    for (const auto& t : terms_) apply_term(t, x, y, true);
    for (const auto& r : rank_one_) y += (std::conj(r.c) * r.u.dot(x)) * r.v;
    return y;
}

LinearOperator LinearOperator::adjoint() const {
    LinearOperator out(dp_, nf_, provenance_ + "^*");
    out.hermitian_ = hermitian_;
    auto adj = [](const SpPtr& m) -> SpPtr {
        return m ? std::make_shared<const SpMat>(SpMat(m->adjoint())) : nullptr;
    };
    for (const auto& t : terms_) out.add_term({std::conj(t.c), adj(t.left), adj(t.right), adj(t.fock)});
    for (const auto& r : rank_one_) out.add_rank_one(std::conj(r.c), r.v, r.u);
    return out;
}

LinearOperator LinearOperator::scaled(cplx c) const {
    LinearOperator out(dp_, nf_, provenance_);
    out.add(*this, c);
    out.hermitian_ = hermitian_ && c.imag() == 0.0;
    return out;
}

SpMat sparse_identity(int n) {
    SpMat m(n, n);
    m.setIdentity();
    return m;
}

SpMat sparse_diag(const RVec& d) {
    SpMat m(d.size(), d.size());
    std::vector<Triplet> t;
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (d[i] != 0.0) t.emplace_back(i, i, d[i]);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

SpMat hermitian_part(const SpMat& m) {
    SpMat adj = m.adjoint();
    SpMat h = (m + adj) * cplx(0.5);
    h.prune(cplx(0.0));
    return h;
}

SpMat LinearOperator::materialize() const {
    const Eigen::Index n = dim();
    SpMat total(n, n);
    const SpMat Ip = sparse_identity(dp_), If = sparse_identity(nf_);
    for (const auto& t : terms_) {
        const SpMat& L = t.left ? *t.left : Ip;
        const SpMat& R = t.right ? *t.right : Ip;
        const SpMat& F = t.fock ? *t.fock : If;
        SpMat RL = Eigen::kroneckerProduct(R, L);
        SpMat full = Eigen::kroneckerProduct(F, RL);
        total += full * t.c;
    }
    if (!rank_one_.empty()) {
        std::vector<Triplet> trips;
        for (const auto& r : rank_one_) {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (r.u[i] == cplx(0.0)) continue;
                for (Eigen::Index j = 0; j < n; ++j)
                    if (r.v[j] != cplx(0.0)) trips.emplace_back(i, j, r.c * r.u[i] * std::conj(r.v[j]));
            }
        }
        SpMat lr(n, n);
        lr.setFromTriplets(trips.begin(), trips.end());
        total += lr;
    }
    total.prune(cplx(0.0));
    return hermitian_ ? hermitian_part(total) : total;
}

LinearOperator commutator_with_finite_rank(const LinearOperator& X, const LinearOperator& Y) {
    if (!Y.terms().empty()) throw std::invalid_argument("commutator_with_finite_rank: Y has Kronecker terms");
    LinearOperator out(X.dp(), X.nf(), "i[" + X.provenance() + "," + Y.provenance() + "]");
    // X c|u><v| = c|Xu><v|,  c|u><v| X = c|u><X^* v|
    for (const auto& r : Y.rank_one_terms()) {
        out.add_rank_one(I_UNIT * r.c, X.apply(r.u), r.v);
        out.add_rank_one(-I_UNIT * r.c, r.u, X.apply_adjoint(r.v));
    }
    out.set_hermitian(X.hermitian() && Y.hermitian());
    return out;
}

SpMat commutator(const SpMat& X, const SpMat& Y, bool symmetrize) {
    if (X.rows() != Y.rows() || X.cols() != Y.cols()) throw std::invalid_argument("commutator: basis mismatch");
    SpMat XY = X * Y, YX = Y * X;
    SpMat c = (XY - YX) * I_UNIT;
    c.prune(cplx(0.0));
    return symmetrize ? hermitian_part(c) : c;
}

}  // namespace ionkit
