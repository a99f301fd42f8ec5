#include "ionkit/operators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ionkit/krylov.hpp"

namespace ionkit {

SpMat central_difference(int n, double h) {
    std::vector<Triplet> t;
    for (int k = 0; k < n; ++k) {
        if (k + 1 < n) t.emplace_back(k, k + 1, 1.0 / (2.0 * h));
        if (k - 1 >= 0) t.emplace_back(k, k - 1, -1.0 / (2.0 * h));
    }
    SpMat D(n, n);
    D.setFromTriplets(t.begin(), t.end());
    return D;
}

ParticleOps assemble_particle_ops(const ModelParams& params, const CompositeBasis& basis) {
    const auto& pb = basis.particle;
    const int dp = pb.dim();
    const int ne = pb.grid.n_e;
    RVec h(dp), p0(dp), pplus(dp), lam(dp), xa(dp);
    for (int i = 0; i < dp; ++i) {
        const double e = pb.energy(i);
        h[i] = e;
        p0[i] = i == 0 ? 1.0 : 0.0;
        pplus[i] = e > 0.0 ? 1.0 : 0.0;
        lam[i] = e * pplus[i] + 1.0;
        xa[i] = i == 0 ? 0.0 : xi(e / params.a);
    }
    ParticleOps ops;
    ops.H = sparse_diag(h);
    ops.p0 = sparse_diag(p0);
    ops.p0bar = sparse_diag(RVec::Ones(dp) - p0);
    ops.Pplus = sparse_diag(pplus);
    ops.Lambda = sparse_diag(lam);
    ops.xi_a = sparse_diag(xa);

    SpMat Dc = central_difference(ne, pb.grid.weight);
    std::vector<Triplet> t;
    for (int r = 0; r < Dc.outerSize(); ++r)
        for (SpMat::InnerIterator it(Dc, r); it; ++it) t.emplace_back(it.row() + 1, it.col() + 1, it.value());
    ops.D = SpMat(dp, dp);
    ops.D.setFromTriplets(t.begin(), t.end());
    SpMat sym = ops.xi_a * ops.D + ops.D * ops.xi_a;
    ops.A = hermitian_part(SpMat(sym * cplx(0.0, 0.5)));
    return ops;
}

Vec positive_samples(const std::function<cplx(double)>& f, const FieldGrid& grid) {
    const int half = grid.n_u / 2;
    Vec out(half);
    for (int k = 0; k < half; ++k) out[k] = f(grid.nodes[half + k]);
    return out;
}

Vec glue_tau_beta(const Vec& fpos, double beta, const FieldGrid& grid) {
    if (!(beta > 0.0)) throw std::invalid_argument("glue_tau_beta: beta must be > 0");
    const int half = grid.n_u / 2;
    if (fpos.size() != half) throw std::invalid_argument("glue_tau_beta: sample vector does not match the field grid");
    const double sw = std::sqrt(grid.mode_weight());
    Vec out(grid.n_u);
    for (int k = 0; k < grid.n_u; ++k) {
        const double u = grid.nodes[k];
        const double occ = u / (-std::expm1(-beta * u));  // u / (1 - e^{-βu}) > 0 for u ≠ 0
        const double s = std::sqrt(occ);
        if (u > 0.0) {
            out[k] = sw * s * std::sqrt(u) * fpos[k - half];
        } else {
            out[k] = -sw * s * std::sqrt(-u) * std::conj(fpos[grid.negated(k) - half]);
        }
    }
    return out;
}

Vec glue_tau_beta(const std::function<cplx(double)>& f, double beta, const FieldGrid& grid) {
    return glue_tau_beta(positive_samples(f, grid), beta, grid);
}

cplx weighted_inner(const Vec& f, const Vec& g, const FieldGrid& grid) {
    const int half = grid.n_u / 2;
    cplx s = 0.0;
    for (int k = 0; k < half; ++k) {
        const double u = grid.nodes[half + k];
        s += u * u * std::conj(f[k]) * g[k];
    }
    return s * grid.mode_weight();
}

namespace {

std::vector<int> with_added(const std::vector<int>& s, int m) {
    auto t = s;
    t.insert(std::upper_bound(t.begin(), t.end(), m), m);
    return t;
}

std::vector<int> with_removed(const std::vector<int>& s, int m) {
    auto t = s;
    t.erase(std::lower_bound(t.begin(), t.end(), m));
    return t;
}

}  // namespace

SpMat creation(const FockBasis& fock, const Vec& f) {
    if (f.size() != fock.n_modes()) throw std::invalid_argument("creation: vector is not on the field grid");
    std::vector<Triplet> t;
    for (int s = 0; s < fock.dim(); ++s) {
        if (fock.particle_number(s) >= fock.n_max()) continue;  // hard cutoff
        const auto& st = fock.state(s);
        for (int k = 0; k < fock.n_modes(); ++k) {
            if (f[k] == cplx(0.0)) continue;
            const int target = fock.index_of(with_added(st, k));
            const double occ = static_cast<double>(std::count(st.begin(), st.end(), k));
            t.emplace_back(target, s, f[k] * std::sqrt(occ + 1.0));
        }
    }
    SpMat m(fock.dim(), fock.dim());
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

SpMat annihilation(const FockBasis& fock, const Vec& f) { return SpMat(creation(fock, f).adjoint()); }

SpMat field_linear(const FockBasis& fock, const Vec& f_cr, const Vec& f_an) {
    SpMat m = creation(fock, f_cr) + annihilation(fock, f_an);
    m.prune(cplx(0.0));
    return m;
}

SpMat field_operator(const FockBasis& fock, const Vec& f) {
    SpMat c = creation(fock, f);
    SpMat adj = c.adjoint();
    SpMat phi = (c + adj) * cplx(1.0 / std::sqrt(2.0));
    phi.prune(cplx(0.0));
    return phi;
}

SpMat second_quantize(const FockBasis& fock, const SpMat& h) {
    if (h.rows() != fock.n_modes() || h.cols() != fock.n_modes())
        throw std::invalid_argument("second_quantize: one-mode operator has wrong size");
    Eigen::SparseMatrix<cplx, Eigen::ColMajor> hc = h;
    std::vector<Triplet> t;
    for (int s = 0; s < fock.dim(); ++s) {
        const auto& st = fock.state(s);
        for (std::size_t pos = 0; pos < st.size(); ++pos) {
            if (pos > 0 && st[pos] == st[pos - 1]) continue;  // distinct occupied modes only
            const int l = st[pos];
            const double nl = static_cast<double>(std::count(st.begin(), st.end(), l));
            const auto removed = with_removed(st, l);
            for (decltype(hc)::InnerIterator it(hc, l); it; ++it) {
                const int k = static_cast<int>(it.row());
                const double nk = static_cast<double>(std::count(removed.begin(), removed.end(), k));
                const int target = fock.index_of(with_added(removed, k));
                t.emplace_back(target, s, it.value() * std::sqrt(nl) * std::sqrt(nk + 1.0));
            }
        }
    }
    SpMat m(fock.dim(), fock.dim());
    m.setFromTriplets(t.begin(), t.end());
    m.prune(cplx(0.0));
    return m;
}

SpMat number_operator(const FockBasis& fock) {
    RVec d(fock.dim());
    for (int s = 0; s < fock.dim(); ++s) d[s] = fock.particle_number(s);
    return sparse_diag(d);
}

SpMat vacuum_projection(const FockBasis& fock) {
    RVec d = RVec::Zero(fock.dim());
    d[0] = 1.0;
    return sparse_diag(d);
}

FieldOps assemble_field_ops(const CompositeBasis& basis) {
    const auto& fg = basis.field;
    const auto& fock = basis.fock;
    FieldOps ops;
    ops.N = number_operator(fock);
    RVec u(fg.n_u), u2p1(fg.n_u);
    for (int k = 0; k < fg.n_u; ++k) {
        u[k] = fg.nodes[k];
        u2p1[k] = fg.nodes[k] * fg.nodes[k] + 1.0;
    }
    ops.dGamma_u = second_quantize(fock, sparse_diag(u));
    ops.Du = central_difference(fg.n_u, fg.du);
    ops.A = hermitian_part(second_quantize(fock, SpMat(ops.Du * I_UNIT)));
    ops.Lambda = second_quantize(fock, sparse_diag(u2p1)) + sparse_identity(fock.dim());
    ops.P_omega = vacuum_projection(fock);
    ops.P_omega_bar = sparse_identity(fock.dim()) - ops.P_omega;
    return ops;
}

Vec Model::pi_vector() const {
    Vec v = Vec::Zero(dim());
    v[pi_index] = 1.0;
    return v;
}

Model assemble_model(const ModelParams& params) {
    params.validate();
    Model m;
    m.params = params;
    m.basis = build_bases(params.grid);
    m.particle = assemble_particle_ops(params, m.basis);
    m.field = assemble_field_ops(m.basis);
    const auto& pb = m.basis.particle;
    const int dp = pb.dim(), nf = m.basis.nf();

    // Particle coupling with sqrt-weight embedding of the continuum.
    const auto& kern = params.kernel;
    const double de = pb.grid.weight;
    std::vector<Triplet> gt;
    if (kern.G_EE != 0.0) gt.emplace_back(0, 0, kern.G_EE);
    for (int j = 1; j < dp; ++j) {
        const cplx g = kern.gamma ? kern.gamma(pb.energy(j)) * std::sqrt(de) : cplx(0.0);
        if (g != cplx(0.0)) {
            gt.emplace_back(j, 0, g);
            gt.emplace_back(0, j, std::conj(g));
        }
        if (kern.K)
            for (int k = 1; k < dp; ++k) {
                const cplx v = kern.K(pb.energy(j), pb.energy(k)) * de;
                if (v != cplx(0.0)) gt.emplace_back(j, k, v);
            }
    }
    m.G = SpMat(dp, dp);
    m.G.setFromTriplets(gt.begin(), gt.end());
    SpMat Gadj = m.G.adjoint();
    if ((m.G - Gadj).norm() > 1e-14 * std::max(1.0, m.G.norm()))
        throw std::runtime_error("assemble_model: coupling kernel is not Hermitian");
    m.G = hermitian_part(m.G);
    m.G_conj = m.G.conjugate();

    const auto& fg = m.basis.field;
    m.f1 = glue_tau_beta(params.form_factor.g, params.beta, fg);
    m.f2 = m.f1;
    for (int k = 0; k < fg.n_u; ++k) m.f2[k] *= std::exp(-0.5 * params.beta * fg.nodes[k]);
    m.phi1 = field_operator(m.basis.fock, m.f1);
    m.phi2 = field_operator(m.basis.fock, m.f2);

    m.L0 = LinearOperator(dp, nf, "L0");
    m.L0.add_left(m.particle.H).add_right(m.particle.H, -1.0).add_fock(m.field.dGamma_u).set_hermitian(true);

    m.I = LinearOperator(dp, nf, "I");
    auto Gp = std::make_shared<const SpMat>(m.G);
    auto Gc = std::make_shared<const SpMat>(m.G_conj);
    m.I.add_term({1.0, Gp, nullptr, std::make_shared<const SpMat>(m.phi1)});
    m.I.add_term({-1.0, nullptr, Gc, std::make_shared<const SpMat>(m.phi2)});
    m.I.set_hermitian(true);

    m.L = LinearOperator(dp, nf, "L");
    m.L.add(m.L0).add(m.I, params.lambda).set_hermitian(true);

    // D = (iλ/√2) { G ⊗ 1 ⊗ (-a*(f1) + a(f1)) - 1 ⊗ Ḡ ⊗ (-a*(f2) + a(f2)) }
    m.D = LinearOperator(dp, nf, "D");
    const cplx pref = I_UNIT * params.lambda / std::sqrt(2.0);
    SpMat d1 = field_linear(m.basis.fock, -m.f1, m.f1);
    SpMat d2 = field_linear(m.basis.fock, -m.f2, m.f2);
    m.D.add_term({pref, Gp, nullptr, std::make_shared<const SpMat>(d1)});
    m.D.add_term({-pref, nullptr, Gc, std::make_shared<const SpMat>(d2)});
    m.D.set_hermitian(true);

    m.A = LinearOperator(dp, nf, "A^a");
    m.A.add_left(m.particle.A).add_right(m.particle.A, -1.0).add_fock(m.field.A).set_hermitian(true);

    m.L0_diag.resize(m.dim());
    for (std::int64_t n = 0; n < nf; ++n) {
        const double fe = m.field.dGamma_u.coeff(n, n).real();
        for (int j = 0; j < dp; ++j)
            for (int i = 0; i < dp; ++i) m.L0_diag[i + dp * (j + dp * n)] = pb.energy(i) - pb.energy(j) + fe;
    }
    return m;
}

Vec apply_resolvent_squared(const Model& m, const Vec& x, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("resolvent: epsilon must be > 0");
    Vec y(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double l = m.L0_diag[k];
        y[k] = x[k] / (l * l + epsilon * epsilon);
    }
    return y;
}

Vec a0_profile(const Model& m, double epsilon) {
    Vec w = apply_resolvent_squared(m, m.I.apply(m.pi_vector()), epsilon);
    w[Model::pi_index] = 0.0;
    return w;
}

LinearOperator assemble_A0(const Model& m, double theta, double lambda, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("A0: epsilon must be > 0");
    LinearOperator A0(m.basis.dp(), m.basis.nf(), "A0");
    A0.set_hermitian(true);
    if (lambda == 0.0) return A0;
    const Vec w = a0_profile(m, epsilon);
    const Vec pi = m.pi_vector();
    const cplx c = I_UNIT * theta * lambda;
    A0.add_rank_one(c, pi, w);
    A0.add_rank_one(-c, w, pi);
    return A0;
}

Vec AntiunitaryAction::apply(const Vec& x) const {
    Vec y(x.size());
    for (std::size_t k = 0; k < source.size(); ++k) y[k] = sign[k] * std::conj(x[source[k]]);
    return y;
}

AntiunitaryAction build_J(const CompositeBasis& b) {
    const auto& fg = b.field;
    for (int k = 0; k < fg.n_u; ++k)
        if (fg.nodes[fg.negated(k)] != -fg.nodes[k]) throw std::invalid_argument("build_J: field grid is not symmetric");
    const int dp = b.dp(), nf = b.nf();
    std::vector<int> fock_perm(nf);
    std::vector<double> parity(nf);
    for (int s = 0; s < nf; ++s) {
        auto st = b.fock.state(s);
        for (auto& mode : st) mode = fg.negated(mode);
        std::sort(st.begin(), st.end());
        fock_perm[s] = b.fock.index_of(st);
        parity[s] = (b.fock.particle_number(s) % 2 == 0) ? 1.0 : -1.0;
    }
    AntiunitaryAction J;
    J.source.resize(b.dim());
    J.sign.resize(b.dim());
    for (int n = 0; n < nf; ++n)
        for (int j = 0; j < dp; ++j)
            for (int i = 0; i < dp; ++i) {
                const auto k = b.flatten(i, j, n);
                J.source[k] = b.flatten(j, i, fock_perm[n]);
                J.sign[k] = parity[n];
            }
    return J;
}

double operator_norm(const LinearOperator& T, std::uint64_t seed) {
    LanczosOptions opt;
    opt.seed = seed;
    opt.tol = 1e-6;
    opt.max_iter = 200;
    return largest_singular_value([&](const Vec& x) { return T.apply(x); },
                                  [&](const Vec& x) { return T.apply_adjoint(x); }, T.dim(), opt);
}

BoundReport check_J(const LinearOperator& L, const AntiunitaryAction& J, int n_vectors, std::uint64_t seed,
                    double tol) {
    const double norm = std::max(operator_norm(L), 1e-300);
    double worst = 0.0;
    for (int r = 0; r < n_vectors; ++r) {
        const Vec psi = random_vector(L.dim(), stream_seed(seed, r));
        const Vec lhs = J.apply(L.apply(J.apply(psi)));
        const Vec rhs = L.apply(psi);
        worst = std::max(worst, (lhs + rhs).norm() / (norm * psi.norm()));
    }
    auto rep = BoundReport::make("J L J = -L", worst, tol, tol - worst, 0.0);
    rep.params["operator_norm"] = norm;
    return rep;
}

double hermiticity_defect(const LinearOperator& T, int n_vectors, std::uint64_t seed) {
    double worst = 0.0;
    for (int r = 0; r < n_vectors; ++r) {
        const Vec psi = random_vector(T.dim(), stream_seed(seed, r));
        worst = std::max(worst, (T.apply(psi) - T.apply_adjoint(psi)).norm() / psi.norm());
    }
    return worst;
}

}  // namespace ionkit
