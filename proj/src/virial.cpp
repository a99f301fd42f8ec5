#include "ionkit/virial.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>

#include "ionkit/commutators.hpp"
#include "ionkit/parallel.hpp"

namespace ionkit {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

ApplyFn as_fn(const LinearOperator& X) {
    return [&X](const Vec& v) { return X.apply(v); };
}

// i(XY - YX) applied to v.
ApplyFn commutator_fn(ApplyFn X, ApplyFn Y) {
    return [X = std::move(X), Y = std::move(Y)](const Vec& v) -> Vec { return I_UNIT * (X(Y(v)) - Y(X(v))); };
}

SpMat slot_sum(const LinearOperator& A, int which, int n) {
    SpMat S(n, n);
    for (const auto& t : A.terms()) {
        const SpPtr& p = which == 0 ? t.left : which == 1 ? t.right : t.fock;
        const SpPtr& o1 = which == 0 ? t.right : t.left;
        const SpPtr& o2 = which == 2 ? t.right : t.fock;
        if (!p) continue;
        if (o1 || o2) throw std::invalid_argument("slot_spectrum: term acts on more than one slot");
        S += t.c * *p;
    }
    return S;
}

struct Eig {
    RVec values;
    Mat vectors;
    double residual = 0.0;
};

Eig hermitian_eig(const Mat& S) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.adjoint()));
    if (es.info() != Eigen::Success) throw std::runtime_error("slot_spectrum: eigensolver did not converge");
    Eig e{es.eigenvalues(), es.eigenvectors(), 0.0};
    const double scale = std::max(1.0, S.norm());
    e.residual = (S * e.vectors - e.vectors * e.values.asDiagonal()).norm() / scale;
    return e;
}

double real_expectation(const Vec& v, const Vec& Xv) { return v.dot(Xv).real(); }

}  // namespace

VirialResidual virial_residual(const ApplyFn& L, const ApplyFn& A, const Vec& psi) {
    VirialResidual r;
    const Vec v = psi / psi.norm();
    const Vec Lv = L(v), Av = A(v);
    r.eigenvalue = v.dot(Lv).real();
    r.eigen_residual = (Lv - r.eigenvalue * v).norm();
    r.A_psi_norm = Av.norm();
    r.value = -2.0 * Lv.dot(Av).imag();
    r.bound = 2.0 * r.eigen_residual * r.A_psi_norm;
    r.roundoff = 4.0 * kEps * std::sqrt(double(v.size())) * Lv.norm() * r.A_psi_norm;
    r.pass = std::abs(r.value) <= r.bound + r.roundoff;
    return r;
}

VirialEigenReport virial_eigenpairs(const Model& m, int n_pairs, const LanczosOptions& opt) {
    VirialEigenReport out;
    LanczosOptions o = opt;
    o.n_eig = n_pairs;
    out.pairs = lanczos_lowest(as_fn(m.L), m.dim(), o);
    const LinearOperator A0 = assemble_A0(m, m.params.theta, m.params.lambda, m.params.epsilon);
    LinearOperator Aaug = m.A;
    Aaug.add(A0).set_hermitian(true);
    double worst = -std::numeric_limits<double>::infinity();
    for (const Vec& psi : out.pairs.vectors) {
        out.plain.push_back(virial_residual(as_fn(m.L), as_fn(m.A), psi));
        out.augmented.push_back(virial_residual(as_fn(m.L), as_fn(Aaug), psi));
        for (const auto* r : {&out.plain.back(), &out.augmented.back()})
            worst = std::max(worst, std::abs(r->value) - r->bound - r->roundoff);
    }
    bool all = out.pairs.vectors.size() == std::size_t(n_pairs);
    for (std::size_t i = 0; i < out.plain.size(); ++i) all = all && out.plain[i].pass && out.augmented[i].pass;
    out.report = BoundReport::make("virial_eigenpairs", worst, 0.0, -worst, 0.0);
    out.report.pass = all;
    out.report.params = {{"n_pairs", double(n_pairs)}, {"lambda", m.params.lambda}};
    return out;
}

BandlimitedBump::BandlimitedBump() {
    using Rule = boost::math::quadrature::gauss<double, 20>;
    constexpr int panels = 64;
    const auto& x = Rule::abscissa();
    const auto& w = Rule::weights();
    auto b = [](double k) { return k >= 1.0 ? 0.0 : std::exp(-1.0 / (1.0 - k * k)); };
    auto push = [&](double k, double wk) {
        nodes_.push_back(k);
        weights_.push_back(wk * b(k));
    };
    for (int p = 0; p < panels; ++p) {
        const double c = (p + 0.5) / panels, h = 0.5 / panels;
        for (std::size_t q = 0; q < x.size(); ++q) {
            if (x[q] == 0.0) {
                push(c, h * w[q]);
            } else {
                push(c - h * x[q], h * w[q]);
                push(c + h * x[q], h * w[q]);
            }
        }
    }
    double total = 0.0;
    for (double wk : weights_) total += wk;
    for (double& wk : weights_) wk /= total;
}

double BandlimitedBump::operator()(double x) const {
    double s = 0.0;
    for (std::size_t q = 0; q < nodes_.size(); ++q) s += weights_[q] * std::cos(nodes_[q] * x);
    return s;
}

double bump_g1(double x) { return std::abs(x) >= 1.0 ? 0.0 : std::exp(1.0 - 1.0 / (1.0 - x * x)); }

SlotSpectrum slot_spectrum(const LinearOperator& A, const FockBasis& fock) {
    const int dp = A.dp(), nf = A.nf();
    if (fock.dim() != nf) throw std::invalid_argument("slot_spectrum: Fock basis does not match");
    SlotSpectrum s;
    const Eig l = hermitian_eig(Mat(slot_sum(A, 0, dp)));
    const Eig r = hermitian_eig(Mat(slot_sum(A, 1, dp)));
    s.left_values = l.values;
    s.left_vectors = l.vectors;
    s.right_values = r.values;
    s.right_vectors = r.vectors;
    s.residual = std::max(l.residual, r.residual);

    const Mat F = Mat(slot_sum(A, 2, nf));
    s.fock_values = RVec::Zero(nf);
    s.fock_vectors = Mat::Zero(nf, nf);
    s.fock_number = RVec::Zero(nf);
    const auto& off = fock.sector_offsets();
    for (std::size_t n = 0; n + 1 < off.size(); ++n) {
        const int a = off[n], len = off[n + 1] - off[n];
        if (len == 0) continue;
        if ((F.block(a, 0, len, nf).norm() - F.block(a, a, len, len).norm()) > 1e-12 * std::max(1.0, F.norm()))
            throw std::runtime_error("slot_spectrum: Fock part does not conserve N");
        const Eig e = hermitian_eig(F.block(a, a, len, len));
        s.fock_values.segment(a, len) = e.values;
        s.fock_vectors.block(a, a, len, len) = e.vectors;
        s.fock_number.segment(a, len).setConstant(double(n));
        s.residual = std::max(s.residual, e.residual);
    }
    if (s.residual > 1e-10) throw std::runtime_error("slot_spectrum: residual " + std::to_string(s.residual));
    return s;
}

Vec apply_joint_function(const SlotSpectrum& s, int dp, int nf, const std::function<double(double, double)>& F,
                         const Vec& psi) {
    using CMap = Eigen::Map<const Mat>;
    // Column-major view: rows i, columns j + dp n.
    Mat X = s.left_vectors.adjoint() * CMap(psi.data(), dp, std::int64_t(dp) * nf);
    for (int n = 0; n < nf; ++n) X.middleCols(std::int64_t(dp) * n, dp) *= s.right_vectors.conjugate();
    Mat Z = Eigen::Map<Mat>(X.data(), std::int64_t(dp) * dp, nf) * s.fock_vectors.conjugate();
    for (int n = 0; n < nf; ++n)
        for (int j = 0; j < dp; ++j)
            for (int i = 0; i < dp; ++i) {
                const double a = s.left_values[i] + s.right_values[j] + s.fock_values[n];
                Z(i + std::int64_t(dp) * j, n) *= F(a, s.fock_number[n]);
            }
    Z = Z * s.fock_vectors.transpose();
    Mat Y = Eigen::Map<Mat>(Z.data(), dp, std::int64_t(dp) * nf);
    for (int n = 0; n < nf; ++n) Y.middleCols(std::int64_t(dp) * n, dp) *= s.right_vectors.transpose();
    Y = s.left_vectors * Y;
    return Eigen::Map<Vec>(Y.data(), Y.size());
}

RegularizedFamily build_regularized_family(const Vec& psi, const SlotSpectrum& s, int dp, int nf,
                                           const std::vector<double>& alphas, int jobs) {
    RegularizedFamily fam;
    fam.psi = psi;
    fam.alphas = alphas;
    const std::size_t n = alphas.size();
    fam.nus.resize(n);
    fam.members.resize(n);
    fam.distance.resize(n);
    fam.norm.resize(n);
    const BandlimitedBump f;
    parallel_for(int(n), jobs, [&](int k) {
        const double alpha = alphas[k], nu = alpha * alpha * alpha;
        fam.nus[k] = nu;
        auto F = [&](double a, double N) {
            const double g = bump_g1(nu * N);
            return f(alpha * a) * g * g;
        };
        fam.members[k] = apply_joint_function(s, dp, nf, F, psi);
        fam.distance[k] = (fam.members[k] - psi).norm();
        fam.norm[k] = fam.members[k].norm();
    });
    return fam;
}

RegularityReport regularity_check(const ApplyFn& C, const ApplyFn& P, const ApplyFn& B, const RegularizedFamily& family,
                                  double tol, double limit_tol) {
    RegularityReport r;
    r.hypothesis_min = std::numeric_limits<double>::infinity();
    for (const Vec& v : family.members) {
        const Vec Cv = C(v);
        r.C_expectation.push_back(real_expectation(v, Cv));
        const double h = real_expectation(v, Cv - P(v) + B(v)) / std::max(v.squaredNorm(), 1e-300);
        r.hypothesis_min = std::min(r.hypothesis_min, h);
    }
    if (family.members.empty()) r.hypothesis_min = 0.0;
    r.limit_reached = !r.C_expectation.empty() && std::abs(r.C_expectation.back()) < limit_tol;
    r.P_expectation = real_expectation(family.psi, P(family.psi));
    r.B_expectation = real_expectation(family.psi, B(family.psi));

    r.hypothesis = BoundReport::make("C >= P - B on family", r.hypothesis_min, 0.0, r.hypothesis_min, tol);
    r.B_nonnegative = BoundReport::make("<psi, B psi> >= 0", r.B_expectation, 0.0, r.B_expectation, tol);
    r.conclusion = BoundReport::make("|P^1/2 psi|^2 <= <psi, B psi>", r.P_expectation, r.B_expectation,
                                     r.B_expectation - r.P_expectation, tol);
    r.pass = r.hypothesis.pass && r.limit_reached && r.B_nonnegative.pass && r.conclusion.pass;
    return r;
}

VirialScan virial_scan(const Model& m, const std::vector<double>& alphas, const LanczosOptions& opt, int jobs) {
    VirialScan out;
    LanczosOptions o = opt;
    o.n_eig = 1;
    const EigenPairs ep = lanczos_lowest(as_fn(m.L), m.dim(), o);
    if (ep.vectors.empty()) throw std::runtime_error("virial_scan: Lanczos returned no eigenvector");
    const Vec psi = ep.vectors[0] / ep.vectors[0].norm();
    out.eigenvalue = ep.values[0];
    out.eigen_residual = ep.residuals[0];

    const int dp = m.basis.dp(), nf = m.basis.nf();
    const SlotSpectrum s = slot_spectrum(m.A, m.basis.fock);
    out.spectral_residual = s.residual;
    out.family = build_regularized_family(psi, s, dp, nf, alphas, jobs);

    const ApplyFn C1 = commutator_fn(as_fn(m.L), as_fn(m.A));
    out.C1_expectation.resize(alphas.size());
    parallel_for(int(alphas.size()), jobs, [&](int k) {
        const Vec& v = out.family.members[k];
        out.C1_expectation[k] = real_expectation(v, C1(v));
    });
    out.decreasing = true;
    for (std::size_t k = 1; k < alphas.size(); ++k)
        out.decreasing = out.decreasing && std::abs(out.C1_expectation[k]) < std::abs(out.C1_expectation[k - 1]);

    // C = i[L, A^a + A0]; the slot-wise one-body commutators and N_h - N are the discretization of
    // ξ_a ⊗ 1 + 1 ⊗ ξ_a and dΓ(1) - N, so B = N - i[L0, A^a] - λ I_1 - i[L, A0].
    const LinearOperator A0 = assemble_A0(m, m.params.theta, m.params.lambda, m.params.epsilon);
    const LinearOperator commA0 = commutator_with_finite_rank(m.L, A0);
    LinearOperator oneBody(dp, nf, "i[L0, A^a] slot by slot");
    oneBody.add_left(commutator(slot_sum(m.L0, 0, dp), slot_sum(m.A, 0, dp)));
    oneBody.add_right(commutator(slot_sum(m.L0, 1, dp), slot_sum(m.A, 1, dp)));
    oneBody.add_fock(commutator(slot_sum(m.L0, 2, nf), slot_sum(m.A, 2, nf)));
    LinearOperator Bop(dp, nf, "regularity B");
    Bop.add_fock(m.field.N).add(oneBody, -1.0).add(commA0, -1.0);
    if (m.params.lambda != 0.0) Bop.add(interaction_commutator(m, 1), -m.params.lambda);
    Bop.set_hermitian(true);

    LinearOperator Aaug = m.A;
    Aaug.add(A0);
    const ApplyFn C = commutator_fn(as_fn(m.L), as_fn(Aaug));
    LinearOperator Pop(dp, nf, "N");
    Pop.add_fock(m.field.N).set_hermitian(true);
    const double scale = operator_norm(m.L) * operator_norm(Aaug);
    const double tol = std::max(1e-8, 2.0 * out.eigen_residual * operator_norm(Aaug)) + 1e-12 * scale;
    out.regularity = regularity_check(C, as_fn(Pop), as_fn(Bop), out.family, tol);

    const double last = out.C1_expectation.empty() ? 0.0 : std::abs(out.C1_expectation.back());
    out.report = BoundReport::make("regularized virial limit", last, 1e-6, 1e-6 - last, 0.0);
    out.report.pass = out.decreasing && last < 1e-6;
    out.report.params = {{"lambda", m.params.lambda}, {"eigen_residual", out.eigen_residual}};
    return out;
}

}  // namespace ionkit
