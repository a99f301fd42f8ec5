#include "ionkit/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace ionkit {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Vec random_vector(std::int64_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Vec v(dim);
    for (std::int64_t i = 0; i < dim; ++i) {
        const double re = nd(rng);
        const double im = nd(rng);
        v[i] = cplx(re, im);
    }
    return v;
}

namespace {

// Two passes of classical Gram-Schmidt against the stored basis.
void reorthogonalize(Vec& w, const std::vector<Vec>& Q) {
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& q : Q) w -= q.dot(w) * q;
}

}  // namespace

EigenPairs lanczos_lowest(const ApplyFn& A, std::int64_t dim, const LanczosOptions& opt, const Vec* start) {
    if (dim < 1) throw std::invalid_argument("lanczos: empty operator");
    const int want = std::max(1, opt.n_eig);
    const int max_iter = static_cast<int>(std::min<std::int64_t>(opt.max_iter, dim));

    Vec q = start ? *start : random_vector(dim, opt.seed);
    double nq = q.norm();
    if (!(nq > 0.0)) throw std::invalid_argument("lanczos: zero start vector");
    q /= nq;

    std::vector<Vec> Q;
    std::vector<double> alpha, beta;
    RVec prev_vals;
    EigenPairs out;
    bool breakdown = false;

    auto ritz = [&](bool vectors) {
        const int m = static_cast<int>(alpha.size());
        RVec d(m), e(std::max(0, m - 1));
        for (int i = 0; i < m; ++i) d[i] = alpha[i];
        for (int i = 0; i + 1 < m; ++i) e[i] = beta[i];
        Eigen::SelfAdjointEigenSolver<RMat> es;
        es.computeFromTridiagonal(d, e, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
        return es;
    };

    for (int it = 0; it < max_iter; ++it) {
        Q.push_back(q);
        Vec w = A(q);
        const double a = q.dot(w).real();
        alpha.push_back(a);
        reorthogonalize(w, Q);
        const double b = w.norm();
        const int m = static_cast<int>(alpha.size());
        const bool last = (m == max_iter);
        double scale = 0.0;
        for (double x : alpha) scale = std::max(scale, std::abs(x));
        scale = std::max({scale, b, 1e-300});
        breakdown = b <= 1e-13 * scale;

        if (breakdown || last || (m >= want && m % opt.check_every == 0)) {
            auto es = ritz(false);
            RVec vals = es.eigenvalues().head(std::min(want, m));
            const bool stalled = prev_vals.size() == vals.size() &&
                                 (vals - prev_vals).cwiseAbs().maxCoeff() <= opt.tol * scale;
            prev_vals = vals;
            if (breakdown || last || stalled) {
                auto esv = ritz(true);
                bool ok = true;
                const int k = std::min(want, m);
                for (int i = 0; i < k; ++i)
                    if (std::abs(b * esv.eigenvectors()(m - 1, i)) > opt.tol * scale) ok = false;
                if (ok || breakdown || last) {
                    out.values = esv.eigenvalues().head(k);
                    out.residuals.resize(k);
                    out.vectors.clear();
                    for (int i = 0; i < k; ++i) {
                        Vec v = Vec::Zero(dim);
                        for (int j = 0; j < m; ++j) v += esv.eigenvectors()(j, i) * Q[j];
                        v /= v.norm();
                        out.residuals[i] = (A(v) - out.values[i] * v).norm();
                        out.vectors.push_back(std::move(v));
                    }
                    out.iterations = m;
                    out.converged = ok || breakdown;
                    return out;
                }
            }
        }
        beta.push_back(b);
        q = w / b;
    }
    return out;
}

double largest_singular_value(const ApplyFn& B, const ApplyFn& B_adj, std::int64_t dim, const LanczosOptions& opt) {
    ApplyFn neg = [&](const Vec& x) -> Vec { return -B_adj(B(x)); };
    auto ep = lanczos_lowest(neg, dim, opt);
    return std::sqrt(std::max(0.0, -ep.values[0]));
}

CgResult conjugate_gradient(const ApplyFn& A, const Vec& b, double rel_tol, int max_iter) {
    CgResult r;
    r.x = Vec::Zero(b.size());
    const double bn = b.norm();
    if (bn == 0.0) {
        r.converged = true;
        return r;
    }
    Vec res = b, p = b;
    double rr = res.squaredNorm();
    for (int it = 0; it < max_iter; ++it) {
        Vec Ap = A(p);
        const cplx pAp = p.dot(Ap);
        if (!(pAp.real() > 0.0)) throw std::runtime_error("conjugate_gradient: operator not positive definite");
        const double alpha = rr / pAp.real();
        r.x += alpha * p;
        res -= alpha * Ap;
        const double rr_new = res.squaredNorm();
        r.iterations = it + 1;
        if (std::sqrt(rr_new) <= rel_tol * bn) {
            r.converged = true;
            rr = rr_new;
            break;
        }
        p = res + (rr_new / rr) * p;
        rr = rr_new;
    }
    r.residual = (A(r.x) - b).norm() / bn;
    return r;
}

Vec krylov_expm(const ApplyFn& H, const Vec& psi, double t, double tol, int krylov_dim, ExpmStats* stats) {
    if (!(tol > 0.0)) throw std::invalid_argument("krylov_expm: tol must be > 0");
    Vec v = psi;
    if (t == 0.0 || psi.norm() == 0.0) return v;
    const double sign = t > 0 ? 1.0 : -1.0;
    const double total = std::abs(t);
    double done = 0.0;
    double step = total;
    ExpmStats st;

    while (done < total) {
        const double vn = v.norm();
        std::vector<Vec> Q{v / vn};
        std::vector<double> alpha, beta;
        double beta_last = 0.0;
        const int m_max = static_cast<int>(std::min<std::int64_t>(krylov_dim, v.size()));
        for (int j = 0; j < m_max; ++j) {
            Vec w = H(Q[j]);
            ++st.matvecs;
            alpha.push_back(Q[j].dot(w).real());
            reorthogonalize(w, Q);
            const double b = w.norm();
            beta_last = b;
            double scale = 1e-300;
            for (double x : alpha) scale = std::max(scale, std::abs(x));
            if (b <= 1e-13 * std::max(scale, b) || j + 1 == m_max) break;
            beta.push_back(b);
            Q.push_back(w / b);
        }
        const int m = static_cast<int>(alpha.size());
        RVec d(m), e(std::max(0, m - 1));
        for (int i = 0; i < m; ++i) d[i] = alpha[i];
        for (int i = 0; i + 1 < m; ++i) e[i] = beta[i];
        Eigen::SelfAdjointEigenSolver<RMat> es;
        es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
        const bool invariant = m < m_max || m == static_cast<int>(v.size());

        double tau = std::min(step, total - done);
        Eigen::VectorXcd c;
        double err = 0.0;
        for (;;) {
            Eigen::VectorXcd ph(m);
            for (int i = 0; i < m; ++i)
                ph[i] = std::exp(cplx(0.0, -sign * tau * es.eigenvalues()[i])) * es.eigenvectors()(0, i);
            c = es.eigenvectors().cast<cplx>() * ph;
            err = invariant ? 0.0 : vn * beta_last * std::abs(c[m - 1]);
            if (err <= tol * tau / total || tau < 1e-12 * total) break;
            tau *= 0.5;
        }
        if (tau < 1e-12 * total && err > tol * tau / total)
            throw std::runtime_error("krylov_expm: step size underflow");
        Vec nv = Vec::Zero(v.size());
        for (int j = 0; j < m; ++j) nv += c[j] * Q[j];
        v = vn * nv;
        done += tau;
        st.error_estimate += err;
        ++st.substeps;
        step = (err < 0.1 * tol * tau / total) ? tau * 1.5 : tau;
    }
    if (stats) *stats = st;
    return v;
}

}  // namespace ionkit
