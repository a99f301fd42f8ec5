#include "ionkit/commutators.hpp"

#include <cmath>
#include <stdexcept>

#include "ionkit/krylov.hpp"

namespace ionkit {

SpMat iterated_ad(const SpMat& X, const SpMat& A, int n) {
    SpMat out = X;
    for (int k = 0; k < n; ++k) {
        SpMat next = out * A - A * out;
        next.prune(cplx(0.0));
        out = std::move(next);
    }
    return out;
}

namespace {

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

cplx ipow(int n) {
    static const cplx p[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return p[((n % 4) + 4) % 4];
}

// Diagonal particle matrix with f(e/a) on the continuum and 0 on the bound index.
SpMat continuum_diag(const Model& m, double (*f)(double, double)) {
    const auto& pb = m.basis.particle;
    RVec d = RVec::Zero(pb.dim());
    for (int i = 1; i < pb.dim(); ++i) d[i] = f(pb.energy(i), m.params.a);
    return sparse_diag(d);
}

double c1_profile(double e, double a) { return xi(e / a); }
double c2_profile(double e, double a) { return xi(e / a) * xi_d1(e / a) / a; }
double c3_profile(double e, double a) {
    const double x = e / a, s = xi(x), d1 = xi_d1(x), d2 = xi_d2(x);
    return (s * d1 * d1 + s * s * d2) / (a * a);
}

}  // namespace

LinearOperator interaction_commutator(const Model& m, int n) {
    if (n < 0) throw std::invalid_argument("interaction_commutator: n must be >= 0");
    const int dp = m.basis.dp(), nf = m.basis.nf();
    LinearOperator out(dp, nf, "I_" + std::to_string(n));
    const SpMat& Ap = m.particle.A;
    Vec g1 = m.f1, g2 = m.f2;
    std::vector<Vec> d1{g1}, d2{g2};
    for (int k = 1; k <= n; ++k) {
        d1.push_back(m.field.Du * d1.back());
        d2.push_back(m.field.Du * d2.back());
    }
    for (int j = 0; j <= n; ++j) {
        const double c = binom(n, j);
        auto Gj = std::make_shared<const SpMat>(SpMat(iterated_ad(m.G, Ap, j) * ipow(j)));
        auto Gcj = std::make_shared<const SpMat>(SpMat(iterated_ad(m.G_conj, Ap, j) * ipow(j)));
        // i ad_{A_f}(φ(f)) = φ(Du f) exactly on the truncated Fock space.
        auto F1 = std::make_shared<const SpMat>(field_operator(m.basis.fock, d1[n - j]));
        auto F2 = std::make_shared<const SpMat>(field_operator(m.basis.fock, d2[n - j]));
        out.add_term({c, Gj, nullptr, F1});
        out.add_term({-c * ((j % 2 == 0) ? 1.0 : -1.0), nullptr, Gcj, F2});
    }
    out.set_hermitian(true);
    return out;
}

LinearOperator analytic_commutator(const Model& m, int n) {
    const int dp = m.basis.dp(), nf = m.basis.nf();
    LinearOperator C(dp, nf, "C" + std::to_string(n));
    switch (n) {
        case 1: {
            SpMat x = continuum_diag(m, c1_profile);
            C.add_left(x).add_right(x).add_fock(m.field.N);
            break;
        }
        case 2: {
            SpMat q = continuum_diag(m, c2_profile);
            C.add_left(q).add_right(q, -1.0);
            break;
        }
        case 3: {
            SpMat h = continuum_diag(m, c3_profile);
            C.add_left(h).add_right(h);
            break;
        }
        default:
            throw std::invalid_argument("analytic_commutator: n must be 1, 2 or 3");
    }
    if (m.params.lambda != 0.0) C.add(interaction_commutator(m, n), m.params.lambda);
    C.set_hermitian(true);
    return C;
}

SpMat direct_commutator(const Model& m, int n) {
    SpMat C = m.L.materialize();
    const SpMat A = m.A.materialize();
    for (int k = 0; k < n; ++k) C = commutator(C, A, true);
    return C;
}

Vec smooth_probe_state(const Model& m) {
    const auto& b = m.basis;
    const auto& eg = b.particle.grid;
    const double ec = 0.5 * eg.e_max, ew = 0.1 * eg.e_max;
    RVec f = RVec::Zero(b.dp());
    for (int i = 1; i < b.dp(); ++i) {
        const double z = (b.particle.energy(i) - ec) / ew;
        f[i] = std::exp(-0.5 * z * z);
    }
    const auto& fg = b.field;
    const double uc = 0.25 * fg.u_max, uw = fg.u_max / 8.0;
    RVec h = RVec::Zero(b.nf());
    h[0] = 0.5;
    for (int s = 1; s < b.nf(); ++s) {
        if (b.fock.particle_number(s) != 1) continue;
        const double z = (fg.nodes[b.fock.state(s)[0]] - uc) / uw;
        h[s] = std::exp(-0.5 * z * z) * std::sqrt(fg.du);
    }
    Vec psi(b.dim());
    for (int n = 0; n < b.nf(); ++n)
        for (int j = 0; j < b.dp(); ++j)
            for (int i = 0; i < b.dp(); ++i) psi[b.flatten(i, j, n)] = f[i] * f[j] * h[n];
    return psi / psi.norm();
}

CommutatorSet assemble_commutator_set(const Model& m, bool with_direct) {
    CommutatorSet s;
    s.C1 = analytic_commutator(m, 1);
    s.C2 = analytic_commutator(m, 2);
    s.C3 = analytic_commutator(m, 3);
    if (!with_direct) return s;
    s.C1_direct = direct_commutator(m, 1);
    s.C2_direct = commutator(s.C1_direct, m.A.materialize(), true);
    s.C3_direct = commutator(s.C2_direct, m.A.materialize(), true);
    const Vec psi = smooth_probe_state(m);
    const LinearOperator* an[3] = {&s.C1, &s.C2, &s.C3};
    const SpMat* di[3] = {&s.C1_direct, &s.C2_direct, &s.C3_direct};
    for (int k = 0; k < 3; ++k) s.discrepancy[k] = (an[k]->apply(psi) - (*di[k]) * psi).norm();
    return s;
}

double field_commutator_discrepancy(const Model& m) {
    const auto& b = m.basis;
    if (b.fock.n_max() < 2) throw std::invalid_argument("field_commutator_discrepancy: needs n_max >= 2");
    const auto& fg = b.field;
    const double c = 1.0, sig = fg.u_max / 6.0;
    auto F = [&](double u1, double u2) {
        auto g = [&](double x, double y) {
            return std::exp(-((x - c) * (x - c) + (y + c) * (y + c)) / (2.0 * sig * sig));
        };
        return g(u1, u2) + g(u2, u1);
    };
    Vec psi = Vec::Zero(b.dim());
    for (int s = 0; s < b.nf(); ++s) {
        if (b.fock.particle_number(s) != 2) continue;
        const int k = b.fock.state(s)[0], l = b.fock.state(s)[1];
        const double amp = F(fg.nodes[k], fg.nodes[l]) * fg.du * (k == l ? 1.0 : std::sqrt(2.0));
        psi[b.flatten(0, 0, s)] = amp;
    }
    LinearOperator Af(b.dp(), b.nf(), "A_f");
    Af.add_fock(m.field.A);
    LinearOperator N(b.dp(), b.nf(), "N");
    N.add_fock(m.field.N);
    const Vec lhs = I_UNIT * (m.L0.apply(Af.apply(psi)) - Af.apply(m.L0.apply(psi)));
    return (lhs - N.apply(psi)).norm() / psi.norm();
}

RVec comparison_operator_diag(const Model& m) {
    const auto& b = m.basis;
    RVec lp = m.particle.Lambda.diagonal().real();
    RVec lf = m.field.Lambda.diagonal().real();
    RVec d(b.dim());
    for (int n = 0; n < b.nf(); ++n)
        for (int j = 0; j < b.dp(); ++j)
            for (int i = 0; i < b.dp(); ++i) d[b.flatten(i, j, n)] = lp[i] + lp[j] + lf[n];
    return d;
}

namespace {

LanczosOptions norm_options() {
    LanczosOptions o;
    o.tol = 1e-8;
    o.max_iter = 400;
    return o;
}

// max |eig| of a Hermitian operator.
double hermitian_norm(const ApplyFn& K, std::int64_t dim) {
    auto lo = lanczos_lowest(K, dim, norm_options());
    ApplyFn negK = [&](const Vec& x) -> Vec { return -K(x); };
    auto hi = lanczos_lowest(negK, dim, norm_options());
    return std::max(std::abs(lo.values[0]), std::abs(hi.values[0]));
}

}  // namespace

GjnReport gjn_check(const std::string& name, const LinearOperator& X, const RVec& Lambda) {
    if (Lambda.size() != X.dim()) throw std::invalid_argument("gjn_check: comparison operator has wrong size");
    if (Lambda.minCoeff() < 1.0 - 1e-12) throw std::invalid_argument("gjn_check: comparison operator must be >= 1");
    const RVec inv = Lambda.cwiseInverse();
    const RVec isq = Lambda.cwiseSqrt().cwiseInverse();
    GjnReport r;
    r.name = name;
    r.k_norm = largest_singular_value([&](const Vec& x) -> Vec { return X.apply(inv.cwiseProduct(x).cast<cplx>().eval()); },
                                      [&](const Vec& y) -> Vec { return inv.cast<cplx>().cwiseProduct(X.apply_adjoint(y)); },
                                      X.dim(), norm_options());
    ApplyFn K = [&](const Vec& x) -> Vec {
        const Vec z = isq.cast<cplx>().cwiseProduct(x);
        const Vec c = I_UNIT * (X.apply(Lambda.cast<cplx>().cwiseProduct(z)) - Lambda.cast<cplx>().cwiseProduct(X.apply(z)));
        return isq.cast<cplx>().cwiseProduct(c);
    };
    r.k_form = hermitian_norm(K, X.dim());
    r.pass = std::isfinite(r.k_norm) && std::isfinite(r.k_form);
    return r;
}

double kato_bound(const Model& m, const LinearOperator& X) {
    const auto& b = m.basis;
    RVec w(b.dim());
    for (int n = 0; n < b.nf(); ++n) {
        const int N = b.fock.particle_number(n);
        const double v = 1.0 / std::sqrt(N == 0 ? 1.0 : static_cast<double>(N));
        for (std::int64_t k = std::int64_t(n) * b.dp() * b.dp(); k < std::int64_t(n + 1) * b.dp() * b.dp(); ++k) w[k] = v;
    }
    const Eigen::VectorXcd wc = w.cast<cplx>();
    return largest_singular_value([&](const Vec& x) -> Vec { return X.apply(wc.cwiseProduct(x)); },
                                  [&](const Vec& y) -> Vec { return wc.cwiseProduct(X.apply_adjoint(y)); }, X.dim(),
                                  norm_options());
}

double small_coupling_constant(const Model& m, const LinearOperator& I1, double lambda) {
    if (lambda == 0.0) return 0.0;
    LinearOperator N(m.basis.dp(), m.basis.nf(), "N");
    N.add_fock(m.field.N);
    double k = 0.0;
    LanczosOptions o;
    o.tol = 1e-11;
    o.max_iter = 1500;
    for (double s : {1.0, -1.0}) {
        ApplyFn B = [&](const Vec& x) -> Vec { return 0.1 * N.apply(x) + (s * lambda) * I1.apply(x); };
        auto ep = lanczos_lowest(B, m.dim(), o);
        k = std::max(k, -ep.values[0] / (lambda * lambda));
    }
    return k;
}

}  // namespace ionkit
