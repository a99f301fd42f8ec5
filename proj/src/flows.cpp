#include "ionkit/flows.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/numeric/odeint.hpp>

#include "ionkit/model.hpp"

namespace ionkit {

namespace {

// Sampled sup norms on a log-spaced set of points in (0, 1e6], merged with the analytic value.
void certify(VectorField& f) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (int k = 0; k <= 3000; ++k) {
        const double e = std::pow(10.0, -8.0 + 14.0 * k / 3000.0);
        s0 = std::max(s0, std::abs(f.X(e)));
        s1 = std::max(s1, std::abs(f.dX(e)));
        s2 = std::max(s2, std::abs((1.0 + e) * f.dX(e)));
    }
    s1 = std::max(s1, std::abs(f.dX(0.0)));
    s2 = std::max(s2, std::abs(f.dX(0.0)));
    f.sup = std::max(f.sup, s0);
    f.sup_d = std::max(f.sup_d, s1);
    f.sup_weighted = std::max(f.sup_weighted, s2);
}

}  // namespace

VectorField zero_field() {
    VectorField f;
    f.name = "zero";
    f.X = [](double) { return 0.0; };
    f.dX = [](double) { return 0.0; };
    return f;
}

VectorField linear_field(double c) {
    // Unbounded field: sup norms are left at their defining values on the sample range.
    VectorField f;
    f.name = "linear";
    f.X = [c](double x) { return c * x; };
    f.dX = [c](double) { return c; };
    f.sup_d = std::abs(c);
    f.sup = std::numeric_limits<double>::infinity();
    f.sup_weighted = std::numeric_limits<double>::infinity();
    return f;
}

VectorField xi_field(double a) {
    if (!(a > 0.0)) throw std::invalid_argument("xi_field: a must be > 0");
    VectorField f;
    f.name = "xi";
    f.X = [a](double e) { return xi(e / a); };
    f.dX = [a](double e) { return xi_d1(e / a) / a; };
    f.sup = 1.0;
    f.sup_d = 1.0 / a;
    certify(f);
    return f;
}

Weight unit_weight() {
    return {[](double) { return 1.0; }, [](double) { return 0.0; }};
}

namespace {

using State = std::array<double, 2>;

State solve(const VectorField& X, double x, double t, double tol) {
    namespace ode = boost::numeric::odeint;
    State s{x, 1.0};
    if (t == 0.0) return s;
    auto sys = [&X](const State& y, State& dy, double) {
        dy[0] = X.X(y[0]);
        dy[1] = X.dX(y[0]) * y[1];
    };
    auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<State>());
    try {
        ode::integrate_adaptive(stepper, sys, s, 0.0, t, t / 64.0);
    } catch (const std::exception& ex) {
        std::ostringstream os;
        os << "integrate_flow: step size underflow at x=" << x << ", t=" << t << " (" << ex.what() << ")";
        throw std::runtime_error(os.str());
    }
    if (!std::isfinite(s[0]) || !std::isfinite(s[1])) {
        std::ostringstream os;
        os << "integrate_flow: non-finite state at x=" << x << ", t=" << t;
        throw std::runtime_error(os.str());
    }
    return s;
}

}  // namespace

FlowResult integrate_flow(const VectorField& X, double x, double t, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("integrate_flow: tol must be > 0");
    const State a = solve(X, x, t, tol);
    const State b = solve(X, x, t, tol * 1e-2);
    FlowResult r;
    r.phi = a[0];
    r.dphi = a[1];
    r.jacobian = a[1];
    r.error_estimate = std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1]));
    return r;
}

double cubic_interpolate(const std::vector<double>& nodes, const RVec& v, double y) {
    const int n = static_cast<int>(nodes.size());
    if (n < 4) throw std::invalid_argument("cubic_interpolate: need at least four nodes");
    if (y < nodes.front() || y > nodes.back()) throw std::out_of_range("cubic_interpolate: point outside node hull");
    int j = static_cast<int>(std::upper_bound(nodes.begin(), nodes.end(), y) - nodes.begin()) - 1;
    const int s = std::clamp(j - 1, 0, n - 4);
    double out = 0.0;
    for (int a = s; a < s + 4; ++a) {
        double l = 1.0;
        for (int b = s; b < s + 4; ++b)
            if (b != a) l *= (y - nodes[b]) / (nodes[a] - nodes[b]);
        out += l * v[a];
    }
    return out;
}

UnitaryApplyResult induced_unitary_apply(const VectorField& X, const Weight& w, double t, const RVec& psi,
                                         const EnergyGrid& grid, double tol) {
    if (psi.size() != grid.n_e) throw std::invalid_argument("induced_unitary_apply: vector is not on the grid");
    UnitaryApplyResult r;
    r.values = RVec::Zero(grid.n_e);
    for (int k = 0; k < grid.n_e; ++k) {
        const double x = grid.nodes[k];
        const double mx = w.mu(x);
        if (!(mx > 0.0)) throw std::invalid_argument("induced_unitary_apply: weight must be positive on nodes");
        if (t == 0.0) {
            r.values[k] = psi[k];
            continue;
        }
        const auto f = integrate_flow(X, x, t, tol);
        if (f.phi < grid.nodes.front() || f.phi > grid.nodes.back()) {
            ++r.nodes_outside;
            const double edge = f.phi < grid.nodes.front() ? psi[0] : psi[grid.n_e - 1];
            if (std::abs(edge) > 1e-6 * psi.cwiseAbs().maxCoeff()) r.mass_flag = true;
            continue;
        }
        r.values[k] = std::sqrt(f.jacobian * w.mu(f.phi) / mx) * cubic_interpolate(grid.nodes, psi, f.phi);
    }
    const double n0 = psi.squaredNorm();
    r.mass_loss = n0 > 0.0 ? 1.0 - r.values.squaredNorm() / n0 : 0.0;
    return r;
}

Eigen::VectorXcd generator_apply(const VectorField& X, const Weight& w, const RVec& psi, const EnergyGrid& grid) {
    const int n = grid.n_e;
    if (psi.size() != n) throw std::invalid_argument("generator_apply: vector is not on the grid");
    const double h = grid.weight;
    auto at = [&](int k) { return (k < 0 || k >= n) ? 0.0 : psi[k]; };
    Eigen::VectorXcd out(n);
    for (int k = 0; k < n; ++k) {
        const double x = grid.nodes[k];
        const double d = (-at(k + 2) + 8.0 * at(k + 1) - 8.0 * at(k - 1) + at(k - 2)) / (12.0 * h);
        const double real = 0.5 * X.dX(x) * psi[k] + 0.5 * w.dmu(x) * X.X(x) / w.mu(x) * psi[k] + X.X(x) * d;
        out[k] = cplx(0.0, real);
    }
    return out;
}

GeneratorCheck generator_check(const VectorField& X, const Weight& w, const RVec& psi, const EnergyGrid& grid,
                               const std::vector<double>& times) {
    GeneratorCheck g;
    const Eigen::VectorXcd Apsi = generator_apply(X, w, psi, grid);
    const double an = std::max(Apsi.norm(), 1e-300);
    for (double t : times) {
        const auto u = induced_unitary_apply(X, w, t, psi, grid);
        Eigen::VectorXcd q = (u.values - psi).cast<cplx>() / cplx(0.0, t);
        g.times.push_back(t);
        g.errors.push_back((q + Apsi).norm() / an);
    }
    if (g.errors.size() >= 2 && g.errors.back() > 0.0 && g.errors.front() > 0.0)
        g.order = std::log(g.errors.front() / g.errors.back()) / std::log(g.times.front() / g.times.back());
    // First-order convergence: order within 0.2 of 1.
    g.report = BoundReport::make("generator first-order convergence", g.order, 1.0, 0.2 - std::abs(g.order - 1.0), 0.0);
    g.report.pass = g.report.slack > 0.0;
    return g;
}

BoundReport verify_gronwall(const VectorField& X, const std::vector<GronwallSample>& samples, double a, int dim,
                            double tol) {
    double worst = std::numeric_limits<double>::infinity();
    double worst_q = 0.0, worst_b = 0.0;
    auto consider = [&](double q, double b) {
        if (!std::isfinite(b)) return;
        const double slack = (b - q) / std::max(std::abs(b), 1e-300);
        if (slack < worst) {
            worst = slack;
            worst_q = q;
            worst_b = b;
        }
    };
    const double xi_sup_d = 1.0;  // ‖ξ'‖∞ for ξ(e) = e/(1+e)
    for (const auto& s : samples) {
        const auto f = integrate_flow(X, s.x, s.t, tol);
        consider(std::abs(f.phi), std::abs(s.x) + std::abs(s.t) * X.sup);
        consider(std::abs(f.dphi), std::exp(X.sup_d * std::abs(s.t)));
        consider(std::abs(f.jacobian), std::exp(dim * X.sup_d * std::abs(s.t)));
        if (a > 0.0) consider(std::abs(f.dphi), std::exp(xi_sup_d * std::abs(s.t) / a));
    }
    auto r = BoundReport::make("gronwall", worst_q, worst_b, worst, 0.0);
    r.pass = worst > 0.0;
    r.params["samples"] = static_cast<double>(samples.size());
    return r;
}

FlowLawReport check_flow_laws(const VectorField& X, const std::vector<double>& xs, const std::vector<double>& ts,
                              double tol) {
    FlowLawReport r;
    r.min_jacobian = std::numeric_limits<double>::infinity();
    for (double x : xs)
        for (double t : ts) {
            const auto ft = integrate_flow(X, x, t, tol);
            r.min_jacobian = std::min(r.min_jacobian, ft.jacobian);
            r.inverse_law = std::max(r.inverse_law, std::abs(integrate_flow(X, ft.phi, -t, tol).phi - x));
            for (double s : ts) {
                const auto fst = integrate_flow(X, x, s + t, tol);
                const auto fs_of_t = integrate_flow(X, ft.phi, s, tol);
                r.group_law = std::max(r.group_law, std::abs(fst.phi - fs_of_t.phi));
                r.cocycle = std::max(r.cocycle, std::abs(fst.jacobian - fs_of_t.jacobian * ft.jacobian) / fst.jacobian);
            }
        }
    return r;
}

std::vector<GronwallSample> gronwall_sample(int n, double x_max, double t_max) {
    if (n < 2) throw std::invalid_argument("gronwall_sample: need n >= 2");
    std::vector<GronwallSample> s;
    for (int k = 0; k < n; ++k) {
        const double x = 0.05 + (x_max - 0.05) * k / (n - 1);
        double t = -t_max + 2.0 * t_max * ((k * 37) % n) / (n - 1);
        if (t == 0.0) t = 0.01;
        s.push_back({x, t});
    }
    return s;
}

FlowCheck flow_check(const FlowCheckOptions& opt) {
    FlowCheck c;
    const VectorField X = xi_field(opt.a);
    const EnergyGrid grid(opt.e_max, opt.n_e);
    RVec psi(grid.n_e);
    for (int k = 0; k < grid.n_e; ++k) {
        const double z = (grid.nodes[k] - opt.centre) / opt.width;
        psi[k] = std::exp(-0.5 * z * z);
    }
    const double pn = psi.norm();

    c.laws = check_flow_laws(X, {0.1, 1.0, 4.0}, opt.times, opt.tol);
    const double law_tol = 100.0 * opt.tol * (1.0 + opt.e_max);
    const double law = std::max(c.laws.group_law, c.laws.inverse_law);
    c.flow_laws = BoundReport::make("flow group and inverse laws", law, law_tol, law_tol - law, 0.0);
    c.flow_laws.pass = c.flow_laws.pass && c.laws.min_jacobian > 0.0;

    auto U = [&](double t, const RVec& v) { return induced_unitary_apply(X, unit_weight(), t, v, grid, opt.tol); };
    bool flagged = false;
    for (double t : opt.times) {
        const auto u = U(t, psi);
        flagged = flagged || u.mass_flag;
        c.unitarity = std::max(c.unitarity, std::abs(u.values.norm() / pn - 1.0));
    }
    for (std::size_t i = 0; i + 1 < opt.times.size(); ++i) {
        const double s = opt.times[i], t = opt.times[i + 1];
        const RVec two = U(s, U(t, psi).values).values;
        c.unitary_group = std::max(c.unitary_group, (two - U(s + t, psi).values).norm() / pn);
    }
    c.unitarity_report = BoundReport::make("induced unitary preserves the norm", c.unitarity, opt.unitary_tol,
                                           opt.unitary_tol - c.unitarity, 0.0);
    c.unitarity_report.pass = c.unitarity_report.pass && !flagged;
    c.group_report = BoundReport::make("induced unitary group law", c.unitary_group, opt.unitary_tol,
                                       opt.unitary_tol - c.unitary_group, 0.0);

    c.generator = generator_check(X, unit_weight(), psi, grid);
    c.gronwall = verify_gronwall(X, gronwall_sample(opt.samples), opt.a, 1, opt.tol);
    c.gronwall.pass = c.gronwall.slack > 0.0;
    c.pass = c.flow_laws.pass && c.unitarity_report.pass && c.group_report.pass && c.generator.report.pass &&
             c.gronwall.pass;
    return c;
}

}  // namespace ionkit
