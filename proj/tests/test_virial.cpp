#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ionkit/krylov.hpp"
#include "ionkit/virial.hpp"

using namespace ionkit;

namespace {

ModelParams reduced(double lambda, int n_e, int n_u, int n_max) {
    ModelParams p;
    p.lambda = lambda;
    p.grid.n_e = n_e;
    p.grid.n_u = n_u;
    p.grid.n_max = n_max;
    return p;
}

ApplyFn dense_fn(const Mat& X) {
    return [X](const Vec& v) -> Vec { return X * v; };
}

Mat random_hermitian(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Mat X(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) X(i, j) = cplx(nd(rng), nd(rng));
    return 0.5 * (X + X.adjoint());
}

}  // namespace

TEST_CASE("virial residual of an exact basis eigenvector of a diagonal L") {
    RVec d(6);
    d << -2.0, -1.0, 0.5, 0.5, 3.0, 7.0;
    const Mat L = d.cast<cplx>().asDiagonal();
    const Mat A = random_hermitian(6, 5);
    for (int k = 0; k < 6; ++k) {
        const Vec e = Vec::Unit(6, k);
        auto r = virial_residual(dense_fn(L), dense_fn(A), e);
        CHECK(std::abs(r.value) < 1e-15);
        CHECK(r.eigen_residual == 0.0);
        CHECK(r.pass);
    }
}

TEST_CASE("exact finite-dimensional virial for A^a, A0 and a random Hermitian X") {
    auto m = assemble_model(reduced(0.1, 4, 6, 1));
    const Mat L = m.L.dense();
    Eigen::SelfAdjointEigenSolver<Mat> es(L);
    const Mat A = m.A.dense();
    const Mat A0 = assemble_A0(m, m.params.theta, m.params.lambda, m.params.epsilon).dense();
    const Mat X = random_hermitian(int(m.dim()), 17);
    const double Lnorm = es.eigenvalues().cwiseAbs().maxCoeff();
    for (const Mat* Y : {&A, &A0, &X}) {
        const Mat C = I_UNIT * (L * *Y - *Y * L);
        const double scale = Lnorm * Y->operatorNorm();
        double worst = 0.0;
        for (int k = 0; k < es.eigenvalues().size(); ++k) {
            const Vec psi = es.eigenvectors().col(k);
            worst = std::max(worst, std::abs(psi.dot(C * psi)));
        }
        CHECK(worst < 1e-11 * scale);
    }
}

TEST_CASE("Lanczos eigenpairs satisfy the residual bound with A^a and A^a + A0") {
    auto m = assemble_model(reduced(0.1, 12, 24, 1));
    auto rep = virial_eigenpairs(m, 10);
    REQUIRE(rep.plain.size() == 10);
    CHECK(rep.report.pass);

    // oracle: the materialized commutator
    const SpMat L = m.L.materialize();
    const SpMat A = m.A.materialize();
    const SpMat C = commutator(L, A);
    for (int k = 0; k < 10; ++k) {
        const Vec psi = rep.pairs.vectors[k] / rep.pairs.vectors[k].norm();
        const double expect = psi.dot(C * psi).real();
        CHECK(std::abs(rep.plain[k].value - expect) < 1e-10);
        CHECK(std::abs(rep.plain[k].value) <= rep.plain[k].bound + rep.plain[k].roundoff);
        CHECK(std::abs(rep.augmented[k].value) <= rep.augmented[k].bound + rep.augmented[k].roundoff);
        CHECK(rep.plain[k].eigen_residual == doctest::Approx(rep.pairs.residuals[k]).epsilon(1e-6));
    }
    MESSAGE("worst residual " << rep.pairs.residuals.maxCoeff() << " worst value " << rep.plain[0].value);
}

TEST_CASE("bandlimited bump transform") {
    const BandlimitedBump f;
    CHECK(f(0.0) == doctest::Approx(1.0).epsilon(1e-15));
    auto b = [](double k) { return std::exp(-1.0 / (1.0 - k * k)); };
    const double norm = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(b, -1.0, 1.0, 15, 1e-14);
    for (double x : {0.3, 1.0, 4.0, 17.0, 60.0}) {
        auto integrand = [&](double k) { return b(k) * std::cos(k * x); };
        const double ref =
            boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -1.0, 1.0, 20, 1e-14) / norm;
        CHECK(std::abs(f(x) - ref) < 1e-12);
        CHECK(f(-x) == f(x));
    }
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-200.0, 200.0);
    for (int k = 0; k < 500; ++k) CHECK(std::abs(f(u(rng))) <= 1.0 + 1e-15);

    CHECK(bump_g1(0.0) == 1.0);
    CHECK(bump_g1(1.0) == 0.0);
    CHECK(bump_g1(-1.5) == 0.0);
    CHECK(bump_g1(0.5) < 1.0);
}

TEST_CASE("joint functional calculus of A^a and N") {
    auto m = assemble_model(reduced(0.1, 5, 6, 2));
    const auto s = slot_spectrum(m.A, m.basis.fock);
    CHECK(s.residual < 1e-12);
    const int dp = m.basis.dp(), nf = m.basis.nf();
    const Vec psi = random_vector(m.dim(), 11);
    auto ident = apply_joint_function(s, dp, nf, [](double, double) { return 1.0; }, psi);
    CHECK((ident - psi).norm() < 1e-13);
    auto Apsi = apply_joint_function(s, dp, nf, [](double a, double) { return a; }, psi);
    CHECK((Apsi - m.A.apply(psi)).norm() < 1e-12 * m.A.apply(psi).norm());
    auto Npsi = apply_joint_function(s, dp, nf, [](double, double n) { return n; }, psi);
    LinearOperator N(dp, nf);
    N.add_fock(m.field.N);
    CHECK((Npsi - N.apply(psi)).norm() < 1e-12 * psi.norm());

    // [A^a, N] = 0, so f(αA) and g(νN) commute
    CHECK((m.A.apply(N.apply(psi)) - N.apply(m.A.apply(psi))).norm() < 1e-12);
    const BandlimitedBump f;
    auto fa = [&](double a, double) { return f(0.3 * a); };
    auto gn = [&](double, double n) { return bump_g1(0.3 * n); };
    const Vec x1 = apply_joint_function(s, dp, nf, gn, apply_joint_function(s, dp, nf, fa, psi));
    const Vec x2 = apply_joint_function(s, dp, nf, fa, apply_joint_function(s, dp, nf, gn, psi));
    CHECK((x1 - x2).norm() < 1e-13);
}

TEST_CASE("regularized family converges and is norm bounded") {
    auto m = assemble_model(reduced(0.1, 5, 6, 2));
    const auto s = slot_spectrum(m.A, m.basis.fock);
    const int dp = m.basis.dp(), nf = m.basis.nf();
    Vec psi = random_vector(m.dim(), 23);
    psi /= psi.norm();
    auto fam = build_regularized_family(psi, s, dp, nf, {0.4, 0.2, 0.1});
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(fam.nus[k] == doctest::Approx(std::pow(fam.alphas[k], 3)));
        CHECK(fam.norm[k] <= 1.0 + 1e-12);
    }
    CHECK(fam.distance[1] < fam.distance[0]);
    CHECK(fam.distance[2] < fam.distance[1]);

    // vacuum sector: g(νN) acts as the identity
    Vec vac = Vec::Zero(m.dim());
    for (int i = 0; i < dp * dp; ++i) vac[i] = psi[i];
    for (double nu : {0.1, 0.5, 0.99}) {
        auto g = apply_joint_function(s, dp, nf, [&](double, double n) { return std::pow(bump_g1(nu * n), 2); }, vac);
        CHECK((g - vac).norm() < 1e-14);
    }

    // jobs do not change the family
    auto fam4 = build_regularized_family(psi, s, dp, nf, {0.4, 0.2, 0.1}, 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(fam4.members[k] == fam.members[k]);
}

TEST_CASE("regularity check reductions") {
    const int n = 6;
    Vec psi = Vec::Zero(n);
    psi[0] = 0.6;
    psi[1] = cplx(0.0, 0.8);
    RegularizedFamily fam;
    fam.psi = psi;
    for (double a : {0.1, 0.01, 0.001}) fam.members.push_back(psi * (1.0 - a));
    const Mat zero = Mat::Zero(n, n);

    // P = 0: only ⟨ψ, Bψ⟩ ≥ 0 remains
    Mat B = Mat::Zero(n, n);
    B(0, 0) = 0.2;
    B(1, 1) = -0.1;
    auto r = regularity_check(dense_fn(zero), dense_fn(zero), dense_fn(B), fam, 1e-12);
    CHECK(r.pass);
    CHECK(r.B_expectation == doctest::Approx(0.2 * 0.36 - 0.1 * 0.64));
    B(1, 1) = -0.2;
    r = regularity_check(dense_fn(zero), dense_fn(zero), dense_fn(B), fam, 1e-12);
    CHECK_FALSE(r.B_nonnegative.pass);
    CHECK_FALSE(r.pass);

    // C = P, B = 0, ⟨C⟩ → 0 forces P^{1/2}ψ = 0
    Mat P = Mat::Zero(n, n);
    P(4, 4) = 1.0;
    P(5, 5) = 2.0;
    r = regularity_check(dense_fn(P), dense_fn(P), dense_fn(zero), fam, 1e-12);
    CHECK(r.pass);
    CHECK(r.P_expectation == 0.0);
    P(0, 0) = 1.0;
    r = regularity_check(dense_fn(P), dense_fn(P), dense_fn(zero), fam, 1e-12);
    CHECK_FALSE(r.limit_reached);
    CHECK_FALSE(r.pass);
}

TEST_CASE("regularized virial scan on the truncated Liouvillian") {
    auto m = assemble_model(reduced(0.1, 12, 24, 1));
    const std::vector<double> alphas{0.4, 0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125, 0.0015625};
    auto sc = virial_scan(m, alphas);
    for (std::size_t k = 0; k < alphas.size(); ++k)
        MESSAGE("alpha " << alphas[k] << " <C1> " << sc.C1_expectation[k] << " dist " << sc.family.distance[k]);
    MESSAGE("eigen residual " << sc.eigen_residual << " hyp " << sc.regularity.hypothesis_min << " <N> "
                              << sc.regularity.P_expectation << " <B> " << sc.regularity.B_expectation);
    CHECK(sc.decreasing);
    // f is even with f''(0) ≠ 0 and g1²(α³N) - 1 = O(α⁶), so ⟨C1⟩ is O(α²)
    const std::size_t n = alphas.size();
    CHECK(std::log2(sc.C1_expectation[n - 2] / sc.C1_expectation[n - 1]) > 1.9);
    CHECK(std::abs(sc.C1_expectation.back()) < 1e-6);
    CHECK(sc.report.pass);
    CHECK(sc.regularity.hypothesis.pass);
    CHECK(sc.regularity.limit_reached);
    CHECK(sc.regularity.conclusion.pass);
    CHECK(sc.regularity.pass);
}
