#include "ionkit/fgr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace ionkit {

namespace {

constexpr double kPi = boost::math::constants::pi<double>();
constexpr double kCutRatio = 1e-16;
constexpr double kScanEnd = 500.0;
constexpr double kScanStep = 0.05;

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

void require_eps(double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("golden rule: eps must be > 0");
}

double gamma_sq(const ModelParams& p, double e) { return std::norm(p.kernel.gamma(e)); }

// Last scan point where f exceeds kCutRatio times its sampled peak, plus one step.
double scan_cutoff(const std::function<double(double)>& f, double start) {
    double peak = 0.0;
    for (double x = start + 0.5 * kScanStep; x < kScanEnd; x += kScanStep) peak = std::max(peak, f(x));
    if (peak == 0.0) return start;
    double last = start;
    for (double x = start + 0.5 * kScanStep; x < kScanEnd; x += kScanStep)
        if (f(x) >= kCutRatio * peak) last = x;
    if (last + kScanStep >= kScanEnd)
        throw std::runtime_error("golden rule: integrand does not decay below 1e-16 of its peak before " +
                                 std::to_string(kScanEnd));
    return last + kScanStep;
}

// Sum of GK integrals over [a, b] split at the given interior points.
QuadratureValue piecewise_gk(const std::function<double(double)>& f, std::vector<double> pts, double a, double b,
                             double tol) {
    pts.push_back(a);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    QuadratureValue q;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double lo = std::clamp(pts[k], a, b), hi = std::clamp(pts[k + 1], a, b);
        if (hi <= lo) continue;
        double err = 0.0;
        q.value += GK::integrate(f, lo, hi, 15, tol, &err);
        q.error += err;
    }
    return q;
}

std::vector<double> unit_panels(double a, double b) {
    std::vector<double> pts;
    for (double x = std::floor(a) + 1.0; x < b; x += 1.0) pts.push_back(x);
    return pts;
}

void check_error(const QuadratureValue& q, const char* what) {
    if (!std::isfinite(q.value) || q.error > 1e-8 * std::abs(q.value) + 1e-14)
        throw std::runtime_error(std::string(what) + ": quadrature error estimate " + std::to_string(q.error) +
                                 " above threshold for value " + std::to_string(q.value));
}

// Composite midpoint sum of f on [a, b] with n and 2n cells, Richardson-combined.
QuadratureValue midpoint_richardson(const std::function<double(double)>& f, double a, double b, int n) {
    auto sum = [&](int cells) {
        const double h = (b - a) / cells;
        double s = 0.0;
        for (int i = 0; i < cells; ++i) s += f(a + (i + 0.5) * h);
        return s * h;
    };
    const double s1 = sum(n), s2 = sum(2 * n);
    QuadratureValue q;
    q.value = (4.0 * s2 - s1) / 3.0;
    q.error = std::abs(q.value - s2);
    return q;
}

}  // namespace

double thermal_spectral_density(const ModelParams& p, double omega) {
    if (!(omega > 0.0)) return 0.0;
    return kSphereArea * omega * omega * std::norm(p.form_factor.g(omega)) / std::expm1(p.beta * omega);
}

FgrCutoffs fgr_cutoffs(const ModelParams& p) {
    const double w0 = -p.grid.E;
    FgrCutoffs c;
    c.omega_cut = scan_cutoff([&](double w) { return thermal_spectral_density(p, w); }, w0);
    c.e_cut = scan_cutoff([&](double e) { return gamma_sq(p, e); }, 0.0);
    return c;
}

QuadratureValue gamma_regularized_midpoint(const ModelParams& p, double eps) {
    require_eps(eps);
    const auto cut = fgr_cutoffs(p);
    const double a = -p.grid.E, b = cut.omega_cut;
    if (b <= a || cut.e_cut <= 0.0) return {};
    // The Lorentzian has poles at distance ε from the real axis; h = ε/8 puts the aliasing error near e^{-50}.
    const int ne = static_cast<int>(std::ceil(cut.e_cut / std::min(eps / 8.0, 0.02)));
    const double he = cut.e_cut / ne;
    std::vector<double> en(ne), gw(ne);
    for (int k = 0; k < ne; ++k) {
        en[k] = (k + 0.5) * he;
        gw[k] = gamma_sq(p, en[k]) * he;
    }
    auto inner = [&](double w) {
        const double x0 = p.grid.E + w;
        double s = 0.0;
        for (int k = 0; k < ne; ++k) {
            const double d = en[k] - x0;
            s += gw[k] * eps / (d * d + eps * eps);
        }
        return s;
    };
    const int nw = static_cast<int>(std::ceil((b - a) / 0.01));
    return midpoint_richardson([&](double w) { return thermal_spectral_density(p, w) * inner(w); }, a, b, nw);
}

QuadratureValue gamma_regularized_adaptive(const ModelParams& p, double eps) {
    require_eps(eps);
    const auto cut = fgr_cutoffs(p);
    const double a = -p.grid.E, b = cut.omega_cut;
    if (b <= a || cut.e_cut <= 0.0) return {};
    double inner_err = 0.0;
    auto inner = [&](double w) {
        const double x0 = p.grid.E + w;
        auto f = [&](double e) {
            const double d = e - x0;
            return gamma_sq(p, e) * eps / (d * d + eps * eps);
        };
        std::vector<double> pts{x0 - 50 * eps, x0 - 5 * eps, x0, x0 + 5 * eps, x0 + 50 * eps};
        auto q = piecewise_gk(f, pts, 0.0, cut.e_cut, 1e-13);
        inner_err = std::max(inner_err, q.error / std::max(std::abs(q.value), 1e-300));
        return q.value;
    };
    auto q = piecewise_gk([&](double w) { return thermal_spectral_density(p, w) * inner(w); }, unit_panels(a, b), a,
                          b, 1e-12);
    q.error += inner_err * std::abs(q.value);
    return q;
}

double gamma_regularized(const ModelParams& p, double eps) {
    auto q = gamma_regularized_adaptive(p, eps);
    check_error(q, "gamma_regularized");
    return q.value;
}

QuadratureValue gamma_limit_adaptive(const ModelParams& p) {
    const auto cut = fgr_cutoffs(p);
    const double a = -p.grid.E, b = cut.omega_cut;
    if (b <= a) return {};
    auto f = [&](double w) { return kPi * thermal_spectral_density(p, w) * gamma_sq(p, p.grid.E + w); };
    return piecewise_gk(f, unit_panels(a, b), a, b, 1e-13);
}

QuadratureValue gamma_limit_midpoint(const ModelParams& p) {
    const auto cut = fgr_cutoffs(p);
    const double a = -p.grid.E, b = cut.omega_cut;
    if (b <= a) return {};
    auto f = [&](double w) { return kPi * thermal_spectral_density(p, w) * gamma_sq(p, p.grid.E + w); };
    return midpoint_richardson(f, a, b, static_cast<int>(std::ceil((b - a) / 0.002)));
}

double gamma_limit(const ModelParams& p) {
    auto q = gamma_limit_adaptive(p);
    check_error(q, "gamma_limit");
    return q.value;
}

FgrResult fgr_analysis(const ModelParams& p, const std::vector<double>& eps) {
    if (eps.size() < 2) throw std::invalid_argument("fgr_analysis: needs at least two eps values");
    FgrResult r;
    r.eps = eps;
    std::sort(r.eps.begin(), r.eps.end(), std::greater<>());
    const auto cut = fgr_cutoffs(p);
    r.omega_cut = cut.omega_cut;
    r.e_cut = cut.e_cut;

    auto rel = [](double x, double y) {
        const double s = std::max(std::abs(x), std::abs(y));
        return s == 0.0 ? 0.0 : std::abs(x - y) / s;
    };
    double worst = 0.0;
    for (double e : r.eps) {
        auto qa = gamma_regularized_adaptive(p, e);
        check_error(qa, "gamma_regularized");
        auto qm = gamma_regularized_midpoint(p, e);
        r.gamma_eps.push_back(qa.value);
        r.gamma_eps_error.push_back(qa.error);
        r.gamma_eps_midpoint.push_back(qm.value);
        worst = std::max(worst, rel(qa.value, qm.value));
    }
    auto la = gamma_limit_adaptive(p);
    check_error(la, "gamma_limit");
    r.gamma_limit = la.value;
    r.gamma_limit_error = la.error;
    r.gamma_limit_midpoint = gamma_limit_midpoint(p).value;
    worst = std::max(worst, rel(r.gamma_limit, r.gamma_limit_midpoint));
    r.agreement = BoundReport::make("fgr.route_agreement", worst, 1e-6, 1e-6 - worst, 0.0);

    const std::size_t n = r.eps.size();
    const double e1 = r.eps[n - 2], e2 = r.eps[n - 1];
    r.gamma_extrapolated = (e1 * r.gamma_eps[n - 1] - e2 * r.gamma_eps[n - 2]) / (e1 - e2);

    r.positivity = BoundReport::make("fgr.gamma_positive", r.gamma_limit, 0.0, r.gamma_limit, 0.0);
    r.positivity.pass = r.gamma_limit > 0.0;

    // C is read off the largest ε; every smaller ε must respect |γ_ε - γ| ≤ C ε.
    const double C = std::abs(r.gamma_eps[0] - r.gamma_limit) / r.eps[0];
    double slack = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        const double d = std::abs(r.gamma_eps[k] - r.gamma_limit);
        r.rate_constant = std::max(r.rate_constant, d / r.eps[k]);
        slack = std::min(slack, C * r.eps[k] - d);
    }
    const double d1 = std::abs(r.gamma_eps[n - 2] - r.gamma_limit), d2 = std::abs(r.gamma_eps[n - 1] - r.gamma_limit);
    r.rate_order = (d1 > 0.0 && d2 > 0.0) ? std::log(d1 / d2) / std::log(e1 / e2) : 0.0;
    const double scale = std::max(std::abs(r.gamma_limit), 1e-300);
    r.rate = BoundReport::make("fgr.eps_rate", r.rate_constant, C, slack / scale, 1e-9);
    r.rate.params["C"] = C;
    r.rate.params["order"] = r.rate_order;
    return r;
}

BoundReport beta_decay_check(const ModelParams& p, const std::vector<double>& betas) {
    if (betas.size() < 2) throw std::invalid_argument("beta_decay_check: needs at least two beta values");
    std::vector<double> g;
    for (double b : betas) {
        ModelParams q = p;
        q.beta = b;
        g.push_back(gamma_limit(q));
    }
    const double target = -p.grid.E;
    double worst = std::numeric_limits<double>::infinity();
    BoundReport r;
    for (std::size_t k = 0; k + 1 < betas.size(); ++k) {
        const double rate = (g[k] > 0.0 && g[k + 1] > 0.0) ? -std::log(g[k + 1] / g[k]) / (betas[k + 1] - betas[k])
                                                           : std::numeric_limits<double>::infinity();
        worst = std::min(worst, rate);
    }
    r = BoundReport::make("fgr.beta_decay", worst, target, worst - target, 0.0);
    for (std::size_t k = 0; k < betas.size(); ++k) r.params["gamma_beta_" + std::to_string(betas[k])] = g[k];
    return r;
}

namespace {

// Offsets {-2h, -h, -h/2, 0, h/2, h, 2h} for Richardson-combined central differences.
constexpr std::array<double, 7> kOffsets{-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0};

// Derivatives 0..4 from samples at x + kOffsets * h.
std::array<cplx, 5> derivatives_from_samples(const std::array<cplx, 7>& s, double h) {
    const cplx m2 = s[0], m1 = s[1], mh = s[2], z = s[3], ph = s[4], p1 = s[5], p2 = s[6];
    auto d = [&](double hh, cplx a2, cplx a1, cplx b1, cplx b2) -> std::array<cplx, 4> {
        // a1, b1 at ∓hh; a2, b2 at ∓2hh
        return {(b1 - a1) / (2.0 * hh), (b1 - 2.0 * z + a1) / (hh * hh),
                (b2 - 2.0 * b1 + 2.0 * a1 - a2) / (2.0 * hh * hh * hh),
                (b2 - 4.0 * b1 + 6.0 * z - 4.0 * a1 + a2) / (hh * hh * hh * hh)};
    };
    const auto coarse = d(h, m2, m1, p1, p2);
    const auto fine = d(0.5 * h, m1, mh, ph, p1);
    std::array<cplx, 5> out{z, {}, {}, {}, {}};
    for (int j = 0; j < 4; ++j) out[j + 1] = (4.0 * fine[j] - coarse[j]) / 3.0;
    return out;
}

// Step proportional to x near 0 so the stencil stays on the positive axis.
double relative_step(double x) { return 0.05 * std::min(x, 1.0); }

// Tensor-product Gauss-Legendre nodes on geometric panels over [1e-6, 1] and unit panels beyond.
struct Rule {
    std::vector<double> x, w;
    std::vector<int> decade;  // panel index below 1 (0 = [1e-6, 1e-5]), -1 above
};

Rule positive_axis_rule(double upper) {
    using GL = boost::math::quadrature::gauss<double, 10>;
    Rule r;
    auto add_panel = [&](double a, double b, int dec) {
        const auto& ab = GL::abscissa();
        const auto& wt = GL::weights();
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        for (std::size_t k = 0; k < ab.size(); ++k) {
            for (int s : {-1, 1}) {
                if (k == 0 && s == -1 && ab[0] == 0.0) continue;
                r.x.push_back(c + s * h * ab[k]);
                r.w.push_back(h * wt[k]);
                r.decade.push_back(dec);
            }
        }
    };
    for (int d = 0; d < 6; ++d) add_panel(std::pow(10.0, d - 6), std::pow(10.0, d - 5), d);
    for (double a = 1.0; a < upper; a += 1.0) add_panel(a, std::min(a + 1.0, upper), -1);
    return r;
}

BoundReport integrability_report(const std::string& name, double total, double dec0, double dec1) {
    // Integrable at 0 iff decade contributions decay; a power e^s gives the ratio 10^{-(s+1)}.
    double ratio = 0.0;
    if (dec0 > 1e-14 * std::max(total, 1e-300)) ratio = dec1 > 0.0 ? dec0 / dec1 : std::numeric_limits<double>::infinity();
    auto r = BoundReport::make(name, ratio, 0.5, 0.5 - ratio, 0.0);
    r.params["integral"] = total;
    r.pass = r.pass && std::isfinite(total);
    return r;
}

}  // namespace

cplx finite_difference(const std::function<cplx(double)>& f, double x, int j, double h) {
    if (j < 0 || j > 4) throw std::invalid_argument("finite_difference: order must be 0..4");
    std::array<cplx, 7> s;
    for (int k = 0; k < 7; ++k) s[k] = f(x + kOffsets[k] * h);
    for (const auto& v : s)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::runtime_error("finite_difference: non-finite sample near x = " + std::to_string(x));
    return derivatives_from_samples(s, h)[j];
}

HypothesisReport check_hypotheses(const ModelParams& p) {
    HypothesisReport out;
    const auto& ff = p.form_factor;
    const auto g = ff.g;

    // Infrared envelope |∂^j g| < k2 ω^{p-j} on (0, k1).
    {
        std::array<double, 5> worst{};
        for (int s = 0; s < 80; ++s) {
            const double w = ff.k1 * std::pow(10.0, -6.0 + 6.0 * (s + 0.5) / 80.0);
            for (int j = 0; j <= 4; ++j)
                worst[j] = std::max(worst[j], std::abs(finite_difference(g, w, j, relative_step(w))) /
                                                  std::pow(w, ff.ir_exponent - j));
        }
        for (int j = 0; j <= 4; ++j) {
            auto r = BoundReport::make("A1.ir_envelope_d" + std::to_string(j), worst[j], ff.k2,
                                       (ff.k2 - worst[j]) / ff.k2, 0.0);
            r.pass = worst[j] < ff.k2;
            out.checks.push_back(r);
        }
        auto r = BoundReport::make("A1.ir_exponent", ff.ir_exponent, 2.0, ff.ir_exponent - 2.0, 0.0);
        r.pass = ff.ir_exponent > 2.0;
        out.checks.push_back(r);
        const double wa = ff.k1 * 1e-6, wb = ff.k1 * 1e-5;
        const double ga = std::abs(g(wa)), gb = std::abs(g(wb));
        out.measured_ir_exponent = (ga > 0.0 && gb > 0.0) ? std::log(gb / ga) / std::log(wb / wa)
                                                          : std::numeric_limits<double>::quiet_NaN();
    }
    // Ultraviolet envelope |∂^j g| < K2 ω^{-q-j} on (K1, 100 K1).
    {
        std::array<double, 5> worst{};
        for (int s = 0; s < 80; ++s) {
            const double w = ff.K1 * std::pow(10.0, 2.0 * (s + 0.5) / 80.0);
            for (int j = 0; j <= 4; ++j)
                worst[j] = std::max(worst[j], std::abs(finite_difference(g, w, j, 0.05)) *
                                                  std::pow(w, ff.uv_exponent + j));
        }
        for (int j = 0; j <= 4; ++j) {
            auto r = BoundReport::make("A1.uv_envelope_d" + std::to_string(j), worst[j], ff.K2,
                                       (ff.K2 - worst[j]) / ff.K2, 0.0);
            r.pass = worst[j] < ff.K2;
            out.checks.push_back(r);
        }
        auto r = BoundReport::make("A1.uv_exponent", ff.uv_exponent, 3.5, ff.uv_exponent - 3.5, 0.0);
        r.pass = ff.uv_exponent > 3.5;
        out.checks.push_back(r);
    }

    // Weighted square integrals of Γ = G(·, E) and of the continuum block K.
    const double upper = scan_cutoff([&](double e) { return std::norm(p.kernel.gamma(e)); }, 0.0);
    const Rule rule = positive_axis_rule(std::max(upper, 1.0));
    const std::size_t nq = rule.x.size();
    std::vector<std::array<cplx, 5>> dgam(nq);
    for (std::size_t k = 0; k < nq; ++k) {
        std::array<cplx, 7> s;
        const double h = relative_step(rule.x[k]);
        for (int o = 0; o < 7; ++o) s[o] = p.kernel.gamma(rule.x[k] + kOffsets[o] * h);
        dgam[k] = derivatives_from_samples(s, h);
    }
    for (int m1 = 0; m1 <= 3; ++m1)
        for (int m2 = 0; m1 + m2 <= 3; ++m2) {
            double total = 0.0, dec[2] = {0.0, 0.0};
            for (std::size_t k = 0; k < nq; ++k) {
                const double v = rule.w[k] * std::norm(dgam[k][m2]) * std::pow(rule.x[k], -2.0 * m1);
                total += v;
                if (rule.decade[k] == 0 || rule.decade[k] == 1) dec[rule.decade[k]] += v;
            }
            out.checks.push_back(integrability_report(
                "A2.gamma_m1_" + std::to_string(m1) + "_m2_" + std::to_string(m2), total, dec[0], dec[1]));
        }

    if (p.kernel.K) {
        // d[k][l][a][b] = ∂_1^a ∂_2^b K(x_k, x_l)
        std::vector<std::array<std::array<cplx, 4>, 4>> dk(nq * nq);
        for (std::size_t k = 0; k < nq; ++k) {
            const double hk = relative_step(rule.x[k]);
            for (std::size_t l = 0; l < nq; ++l) {
                const double hl = relative_step(rule.x[l]);
                std::array<std::array<cplx, 5>, 7> rows;
                for (int a = 0; a < 7; ++a) {
                    std::array<cplx, 7> s;
                    for (int b = 0; b < 7; ++b) s[b] = p.kernel.K(rule.x[k] + kOffsets[a] * hk, rule.x[l] + kOffsets[b] * hl);
                    rows[a] = derivatives_from_samples(s, hl);
                }
                for (int b = 0; b < 4; ++b) {
                    std::array<cplx, 7> col;
                    for (int a = 0; a < 7; ++a) col[a] = rows[a][b];
                    const auto da = derivatives_from_samples(col, hk);
                    for (int a = 0; a < 4; ++a) dk[k * nq + l][a][b] = da[a];
                }
            }
        }
        auto accumulate = [&](auto weight, const std::string& name) {
            double total = 0.0, dec[2] = {0.0, 0.0}, decp[2] = {0.0, 0.0};
            for (std::size_t k = 0; k < nq; ++k)
                for (std::size_t l = 0; l < nq; ++l) {
                    const double v = rule.w[k] * rule.w[l] * weight(k, l);
                    total += v;
                    if (rule.decade[k] == 0 || rule.decade[k] == 1) dec[rule.decade[k]] += v;
                    if (rule.decade[l] == 0 || rule.decade[l] == 1) decp[rule.decade[l]] += v;
                }
            auto r1 = integrability_report(name, total, dec[0], dec[1]);
            auto r2 = integrability_report(name, total, decp[0], decp[1]);
            return r1.quantity >= r2.quantity ? r1 : r2;
        };
        for (int m1 = 0; m1 <= 3; ++m1)
            for (int m1p = 0; m1 + m1p <= 3; ++m1p)
                for (int m2 = 0; m1 + m1p + m2 <= 3; ++m2)
                    for (int m2p = 0; m1 + m1p + m2 + m2p <= 3; ++m2p) {
                        const std::string name = "A2.kernel_m1_" + std::to_string(m1) + "_m1p_" + std::to_string(m1p) +
                                                 "_m2_" + std::to_string(m2) + "_m2p_" + std::to_string(m2p);
                        out.checks.push_back(accumulate(
                            [&](std::size_t k, std::size_t l) {
                                return std::norm(dk[k * nq + l][m2][m2p]) * std::pow(rule.x[k], -2.0 * m1) *
                                       std::pow(rule.x[l], -2.0 * m1p);
                            },
                            name));
                    }
        out.checks.push_back(accumulate(
            [&](std::size_t k, std::size_t l) { return std::norm(dk[k * nq + l][0][0]) * rule.x[k] * rule.x[k]; },
            "A2.kernel_energy_weighted"));
    }

    bool all = true;
    double worst = std::numeric_limits<double>::infinity();
    std::string worst_name;
    for (const auto& c : out.checks) {
        all = all && c.pass;
        if (c.slack < worst) {
            worst = c.slack;
            worst_name = c.name;
        }
    }
    out.overall = BoundReport::make("hypotheses", static_cast<double>(out.checks.size()), 0.0, worst, 0.0);
    out.overall.pass = all;
    return out;
}

OperatorGoldenRule operator_golden_rule(const Model& m, double eps) {
    require_eps(eps);
    const auto& b = m.basis;
    const Vec v = m.I.apply(m.pi_vector());
    const double omega_min = -b.particle.E;
    OperatorGoldenRule r;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (k == Model::pi_index) continue;
        const double a2 = std::norm(v[k]);
        if (a2 == 0.0) continue;
        const double l = m.L0_diag[k];
        const double c = eps * a2 / (l * l + eps * eps);
        r.unrestricted += c;
        const auto t = b.unflatten(k);
        if (b.fock.particle_number(t.n) != 1) continue;
        const double u = b.field.nodes[b.fock.state(t.n)[0]];
        const double dh = b.particle.energy(t.i) - b.particle.energy(t.j);
        // absorbed frequency |u| beyond the ionization threshold, with u compensating the particle step
        if (std::abs(u) > omega_min && u * dh < 0.0) r.restricted += c;
    }
    return r;
}

}  // namespace ionkit
