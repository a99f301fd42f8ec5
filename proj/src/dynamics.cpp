#include "ionkit/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ionkit/parallel.hpp"

namespace ionkit {

namespace {

constexpr double kTwoPi = 6.283185307179586476925;

bool monotone(const std::vector<double>& v, std::size_t a, std::size_t b) {
    bool down = true, up = true;
    for (std::size_t k = a + 1; k < b; ++k) {
        down = down && v[k] <= v[k - 1];
        up = up && v[k] >= v[k - 1];
    }
    return down || up;
}

}  // namespace

Vec evolve(const ApplyFn& L, const Vec& psi, double t, const EvolveOptions& opt, ExpmStats* stats) {
    return krylov_expm(L, psi, t, opt.tol, opt.krylov_dim, stats);
}

std::vector<double> uniform_times(double t_max, int n_steps) {
    if (!(t_max > 0.0) || n_steps < 1) throw std::invalid_argument("uniform_times: need t_max > 0 and n_steps >= 1");
    std::vector<double> t(n_steps + 1);
    for (int k = 0; k <= n_steps; ++k) t[k] = t_max * k / n_steps;
    return t;
}

TimeSeries survival(const Model& m, const std::vector<double>& times, const EvolveOptions& opt,
                    const std::optional<Vec>& psi, const ApplyFn& K, const std::string& observable) {
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1])) throw std::invalid_argument("survival: times must be strictly increasing");
    TimeSeries s;
    s.observable = observable;
    s.times = times;
    s.t_rec = kTwoPi / m.basis.field.du;
    s.params = {{"lambda", m.params.lambda}, {"beta", m.params.beta}, {"dim", double(m.dim())}};

    const ApplyFn L = [&m](const Vec& v) { return m.L.apply(v); };
    Vec v = psi ? *psi : m.pi_vector();
    const double n0 = v.norm();
    auto measure = [&](const Vec& x) {
        if (!K) return std::norm(x[Model::pi_index]);
        return x.dot(K(x)).real();
    };
    double t_prev = 0.0;
    for (double t : times) {
        if (t != t_prev) v = evolve(L, v, t - t_prev, opt);
        t_prev = t;
        s.values.push_back(measure(v));
        s.norm_drift = std::max(s.norm_drift, std::abs(v.norm() - n0));
    }
    s.ergodic_mean.resize(s.values.size());
    double integral = 0.0;
    for (std::size_t k = 0; k < s.values.size(); ++k) {
        if (k > 0) integral += 0.5 * (s.values[k] + s.values[k - 1]) * (times[k] - times[k - 1]);
        const double T = times[k] - times.front();
        s.ergodic_mean[k] = T > 0.0 ? integral / T : s.values[k];
    }
    return s;
}

DecayFit decay_rate(const TimeSeries& s, double t_start, double t_end) {
    DecayFit f;
    std::size_t a = 0, b = 0;
    while (a < s.times.size() && s.times[a] < t_start) ++a;
    b = a;
    while (b < s.times.size() && s.times[b] <= t_end) ++b;
    if (b < a + 2) throw std::invalid_argument("decay_rate: fewer than two samples in the window");
    if (!monotone(s.values, a, b)) {
        b = s.times.size();
        f.widened = true;
    }
    double st = 0, sy = 0, stt = 0, sty = 0;
    const double n = double(b - a);
    for (std::size_t k = a; k < b; ++k) {
        if (!(s.values[k] > 0.0)) throw std::domain_error("decay_rate: nonpositive sample in the window");
        const double t = s.times[k], y = std::log(s.values[k]);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    const double slope = (n * sty - st * sy) / (n * stt - st * st);
    f.intercept = (sy - slope * st) / n;
    f.rate = -slope;
    double r2 = 0.0;
    for (std::size_t k = a; k < b; ++k) {
        const double e = std::log(s.values[k]) - (f.intercept + slope * s.times[k]);
        r2 += e * e;
    }
    f.residual = std::sqrt(r2 / n);
    f.t_start = s.times[a];
    f.t_end = s.times[b - 1];
    f.n_points = int(b - a);
    return f;
}

IonizationRun ionization_signature(const ModelParams& p, const IonizationOptions& opt, int jobs) {
    if (opt.lambdas.size() < 2) throw std::invalid_argument("ionization_signature: need at least two couplings");
    IonizationRun out;
    out.lambdas = opt.lambdas;
    std::vector<double> all{0.0};
    all.insert(all.end(), opt.lambdas.begin(), opt.lambdas.end());
    std::vector<TimeSeries> series(all.size());
    parallel_for(int(all.size()), jobs, [&](int k) {
        ModelParams q = p;
        q.lambda = all[k];
        const Model m = assemble_model(q);
        const double t_rec = kTwoPi / m.basis.field.du;
        series[k] = survival(m, uniform_times(t_rec, opt.n_steps), opt.evolve);
    });
    out.t_rec = series[0].t_rec;
    for (double v : series[0].values) out.free_deviation = std::max(out.free_deviation, std::abs(v - 1.0));
    out.series.assign(series.begin() + 1, series.end());
    for (const auto& s : out.series) out.fits.push_back(decay_rate(s, opt.fit_start * s.t_rec, opt.fit_end * s.t_rec));

    const auto lo = std::min_element(out.lambdas.begin(), out.lambdas.end()) - out.lambdas.begin();
    const auto hi = std::max_element(out.lambdas.begin(), out.lambdas.end()) - out.lambdas.begin();
    const TimeSeries& strong = out.series[hi];
    for (std::size_t k = 0; k < strong.values.size(); ++k)
        if (strong.values[k] < 0.5) {
            out.half_time = strong.times[k];
            break;
        }
    out.rate_ratio = out.fits[hi].rate / out.fits[lo].rate;
    const double r = out.lambdas[hi] / out.lambdas[lo];
    out.expected_ratio = r * r;

    out.free_exact = BoundReport::make("survival at zero coupling", out.free_deviation, 0.0, -out.free_deviation, 0.0);
    const double ht = out.half_time < 0 ? out.t_rec : out.half_time;
    out.half_before_recurrence = BoundReport::make("half-life before recurrence", ht, out.t_rec, out.t_rec - ht, 0.0);
    out.half_before_recurrence.pass = out.half_time >= 0.0 && out.half_time < out.t_rec;
    const double dev = std::abs(out.rate_ratio / out.expected_ratio - 1.0);
    out.lambda_squared = BoundReport::make("decay rate ratio vs lambda^2", out.rate_ratio, out.expected_ratio,
                                           0.25 - dev, 0.0);
    out.pass = out.free_exact.pass && out.half_before_recurrence.pass && out.lambda_squared.pass;
    return out;
}

}  // namespace ionkit
