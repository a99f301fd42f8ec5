#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ionkit/krylov.hpp"
#include "ionkit/operators.hpp"

using namespace ionkit;

namespace {

ModelParams small_params(int ne = 2, int nu = 4, int nmax = 2) {
    ModelParams p;
    p.grid.e_max = 2.0;
    p.grid.n_e = ne;
    p.grid.u_max = 2.0;
    p.grid.n_u = nu;
    p.grid.n_max = nmax;
    return p;
}

double max_abs_diff(const SpMat& a, const SpMat& b) {
    Mat d = Mat(a) - Mat(b);
    return d.cwiseAbs().maxCoeff();
}

bool bitwise_hermitian(const SpMat& m) {
    Mat d(m);
    for (Eigen::Index i = 0; i < d.rows(); ++i)
        for (Eigen::Index j = 0; j < d.cols(); ++j)
            if (d(i, j) != std::conj(d(j, i))) return false;
    return true;
}

}  // namespace

TEST_CASE("particle operators") {
    auto p = small_params();
    p.a = 0.5;
    auto b = build_bases(p.grid);
    auto ops = assemble_particle_ops(p, b);
    Mat H(ops.H);
    CHECK(H(0, 0).real() == doctest::Approx(-1.0));
    CHECK(H(1, 1).real() == doctest::Approx(0.5));
    CHECK(H(2, 2).real() == doctest::Approx(1.5));
    CHECK(max_abs_diff(SpMat(ops.p0 + ops.p0bar), sparse_identity(3)) == 0.0);
    // ξ(0.5 / 0.5) = 1/2 evaluated by hand.
    CHECK(ops.xi_a.coeff(1, 1).real() == doctest::Approx(0.5));
    CHECK(ops.xi_a.coeff(0, 0).real() == 0.0);
    CHECK(bitwise_hermitian(ops.A));
    CHECK(Mat(ops.Lambda)(2, 2).real() == doctest::Approx(2.5));
    CHECK(Mat(ops.Lambda)(0, 0).real() == doctest::Approx(1.0));

    auto huge = p;
    huge.a = 1e300;
    CHECK(Mat(assemble_particle_ops(huge, b).A).cwiseAbs().maxCoeff() < 1e-290);
}

TEST_CASE("gluing map") {
    FieldGrid g(2.0, 2);  // nodes ±1
    Vec fpos(1);
    fpos[0] = 1.0;
    Vec t = glue_tau_beta(fpos, 1.0, g);
    const double sw = std::sqrt(g.mode_weight());
    CHECK(t[1].real() / sw == doctest::Approx(1.25777).epsilon(1e-5));

    FieldGrid h(6.0, 12);
    auto gfun = [](double w) { return cplx(std::pow(w, 2.5) * std::exp(-w), 0.0); };
    Vec cold = glue_tau_beta(gfun, 1e3, h);
    for (int k = 0; k < 6; ++k) CHECK(std::abs(cold[k]) < 1e-100);

    // Symplectic form preserved on random samples.
    for (int r = 0; r < 5; ++r) {
        Vec f = random_vector(6, stream_seed(11, r)), q = random_vector(6, stream_seed(12, r));
        for (double beta : {0.3, 1.0, 4.0}) {
            const cplx lhs = glue_tau_beta(f, beta, h).dot(glue_tau_beta(q, beta, h));
            const cplx rhs = weighted_inner(f, q, h);
            CHECK(std::abs(lhs.imag() - rhs.imag()) <= 1e-12 * std::abs(rhs));
        }
    }
    CHECK_THROWS_AS(glue_tau_beta(Vec::Ones(2), 1.0, h), std::invalid_argument);
}

TEST_CASE("field operators on small sectors") {
    auto b = build_bases(small_params().grid);
    const auto& fock = b.fock;
    auto ops = assemble_field_ops(b);
    Vec f = random_vector(4, 3), g = random_vector(4, 4);

    Vec vac = Vec::Zero(fock.dim());
    vac[0] = 1.0;
    Vec phivac = field_operator(fock, f) * vac;
    for (int k = 0; k < 4; ++k) CHECK(std::abs(phivac[1 + k] - f[k] / std::sqrt(2.0)) < 1e-15);
    CHECK((ops.N * vac).norm() == 0.0);
    for (int k = 0; k < 4; ++k) {
        Vec one = Vec::Zero(fock.dim());
        one[fock.index_of({k})] = 1.0;
        CHECK((ops.dGamma_u * one - b.field.nodes[k] * one).norm() < 1e-15);
    }

    // Dense oracle: two-boson sector as symmetric tensors e_k ⊗ e_l.
    SpMat ad = creation(fock, g);
    for (int s1 = 0; s1 < 4; ++s1) {
        // a*(g) e_s1 = (g ⊗ e_s1 + e_s1 ⊗ g) / sqrt 2 as a tensor T(k,l).
        Mat T = Mat::Zero(4, 4);
        for (int k = 0; k < 4; ++k) {
            T(k, s1) += g[k] / std::sqrt(2.0);
            T(s1, k) += g[k] / std::sqrt(2.0);
        }
        for (int k = 0; k < 4; ++k)
            for (int l = k; l < 4; ++l) {
                // occupation state |k,l> as a normalized symmetric tensor
                const cplx overlap = (k == l) ? T(k, k) : (T(k, l) + T(l, k)) / std::sqrt(2.0);
                const int row = fock.index_of({k, l});
                const int col = fock.index_of({s1});
                CHECK(std::abs(ad.coeff(row, col) - overlap) < 1e-14);
            }
    }

    // Canonical commutation on the sectors below the cutoff.
    SpMat comm = annihilation(fock, f) * creation(fock, g) - creation(fock, g) * annihilation(fock, f);
    const cplx fg = f.dot(g);
    for (int s = 0; s < fock.dim(); ++s) {
        if (fock.particle_number(s) >= fock.n_max()) continue;
        Vec e = Vec::Zero(fock.dim());
        e[s] = 1.0;
        CHECK(((comm * e) - fg * e).norm() < 1e-13);
    }

    // dΓ(u) commutes with N; [N, φ] only couples adjacent sectors.
    CHECK(Mat(SpMat(ops.N * ops.dGamma_u - ops.dGamma_u * ops.N)).cwiseAbs().maxCoeff() == 0.0);
    SpMat phi = field_operator(fock, f);
    SpMat nphi = ops.N * phi - phi * ops.N;
    for (int r = 0; r < nphi.outerSize(); ++r)
        for (SpMat::InnerIterator it(nphi, r); it; ++it)
            CHECK(std::abs(fock.particle_number(it.row()) - fock.particle_number(it.col())) == 1);
    CHECK(bitwise_hermitian(ops.A));
    CHECK_THROWS_AS(field_operator(fock, Vec::Ones(3)), std::invalid_argument);
}

TEST_CASE("Liouvillian assembly") {
    auto p = small_params(2, 4, 1);
    p.lambda = 0.0;
    auto m0 = assemble_model(p);
    Vec pi = m0.pi_vector();
    CHECK(m0.L0.apply(pi).norm() == 0.0);
    CHECK(max_abs_diff(m0.L.materialize(), m0.L0.materialize()) == 0.0);

    p.lambda = 0.3;
    auto m = assemble_model(p);
    SpMat I = m.I.materialize();
    CHECK(bitwise_hermitian(I));
    CHECK(bitwise_hermitian(m.L.materialize()));
    CHECK(bitwise_hermitian(m.D.materialize()));
    CHECK(std::abs(pi.dot(m.I.apply(pi))) == 0.0);

    // Hand-evaluated coupling of Π to one-boson states.
    const auto& b = m.basis;
    const double de = b.particle.grid.weight, sw = std::sqrt(b.field.mode_weight());
    Vec col = m.I.apply(pi);
    for (int j = 1; j < b.dp(); ++j)
        for (int k = 0; k < b.field.n_u; ++k) {
            const double e = b.particle.energy(j), u = b.field.nodes[k];
            const double gam = e * e * e * std::exp(-e);
            const double w = std::abs(u);
            const double gw = std::pow(w, 2.5) * std::exp(-w);
            const double occ = u > 0 ? u / (1.0 - std::exp(-u)) : -u / (std::exp(-u) - 1.0);
            const double tau = (u > 0 ? 1.0 : -1.0) * std::sqrt(occ) * std::sqrt(w) * gw * sw;
            const int n = b.fock.index_of({k});
            CHECK(std::abs(col[b.flatten(j, 0, n)] - gam * std::sqrt(de) * tau / std::sqrt(2.0)) < 1e-14);
            CHECK(std::abs(col[b.flatten(0, j, n)] + gam * std::sqrt(de) * std::exp(-0.5 * u) * tau / std::sqrt(2.0)) <
                  1e-14);
        }

    // Non-Hermitian kernel is refused.
    auto bad = p;
    bad.kernel.K = [](double e, double ep) { return cplx(e, 2.0 * ep); };
    CHECK_THROWS_AS(assemble_model(bad), std::runtime_error);
}

TEST_CASE("A0 structure and commutator norm scaling") {
    auto p = small_params(4, 6, 2);
    p.lambda = 0.2;
    auto m = assemble_model(p);
    CHECK(assemble_A0(m, 1.0, 0.0, 0.3).materialize().nonZeros() == 0);
    CHECK_THROWS_AS(assemble_A0(m, 1.0, 0.2, 0.0), std::invalid_argument);

    auto A0 = assemble_A0(m, 1.0, 0.2, 0.3);
    SpMat a0 = A0.materialize();
    CHECK(bitwise_hermitian(a0));
    for (int r = 0; r < a0.outerSize(); ++r)
        for (SpMat::InnerIterator it(a0, r); it; ++it) {
            CHECK(m.basis.fock.particle_number(m.basis.unflatten(it.row()).n) <= 1);
            CHECK(m.basis.fock.particle_number(m.basis.unflatten(it.col()).n) <= 1);
        }

    // ‖[L, A0]‖ / (θλ/ε + θλ²/ε²) stays bounded across a sweep.
    double kmin = 1e300, kmax = 0.0;
    for (double lam : {0.05, 0.2})
        for (double eps : {0.1, 0.3, 1.0})
            for (double th : {0.5, 2.0}) {
                auto q = p;
                q.lambda = lam;
                auto mq = assemble_model(q);
                auto c = commutator_with_finite_rank(mq.L, assemble_A0(mq, th, lam, eps));
                const double k = operator_norm(c) / (th * lam / eps + th * lam * lam / (eps * eps));
                kmin = std::min(kmin, k);
                kmax = std::max(kmax, k);
            }
    MESSAGE("fitted k range [" << kmin << ", " << kmax << "]");
    CHECK(kmax < 50.0 * kmin);
}

TEST_CASE("modular conjugation") {
    for (double lam : {0.0, 0.1, 0.7}) {
        auto p = small_params(3, 6, 2);
        p.lambda = lam;
        auto m = assemble_model(p);
        auto J = build_J(m.basis);
        Vec pi = m.pi_vector();
        CHECK((J.apply(pi) - pi).norm() == 0.0);
        for (int r = 0; r < 100; ++r) {
            Vec x = random_vector(m.dim(), stream_seed(5, r));
            CHECK((J.apply(J.apply(x)) - x).norm() <= 1e-14 * x.norm());
        }
        auto rep = check_J(m.L, J, 10, 99);
        CHECK(rep.pass);
        CHECK(rep.quantity < 1e-14);
    }
}
