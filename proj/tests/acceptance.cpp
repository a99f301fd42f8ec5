#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "ionkit/commutators.hpp"
#include "ionkit/experiment.hpp"
#include "ionkit/feshbach.hpp"
#include "ionkit/fgr.hpp"
#include "ionkit/virial.hpp"

using namespace ionkit;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double time_limit, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (time_limit > 0.0 && secs > time_limit) {
        o.pass = false;
        o.detail += " [over time limit " + std::to_string(time_limit) + " s]";
    }
    if (!o.pass) ++failures;
    std::printf("criterion %2d %s: %s (%.1f s) %s\n", id, o.pass ? "PASS" : "FAIL", title.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
}

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

ModelParams grid(int n_e, int n_u, int n_max, double e_max, double u_max, double lambda = 0.0) {
    ModelParams p;
    p.lambda = lambda;
    p.grid.n_e = n_e;
    p.grid.n_u = n_u;
    p.grid.n_max = n_max;
    p.grid.e_max = e_max;
    p.grid.u_max = u_max;
    return p;
}

std::string failed_names(const nlohmann::ordered_json& checks) {
    std::string s;
    for (const auto& c : checks)
        if (!c.at("pass").get<bool>()) s += (s.empty() ? "" : ", ") + c.at("name").get<std::string>();
    return s.empty() ? "none" : s;
}

}  // namespace

int main() {
    criterion(1, "field commutator converges at second order", 60.0, [] {
        std::vector<double> err;
        for (int nu : {16, 32, 64, 128}) err.push_back(field_commutator_discrepancy(assemble_model(grid(1, nu, 2, 8.0, 8.0))));
        double worst = INFINITY;
        std::string d = "orders";
        for (std::size_t k = 1; k < err.size(); ++k) {
            const double order = std::log2(err[k - 1] / err[k]);
            worst = std::min(worst, order);
            d += " " + num(order);
        }
        return Outcome{worst >= 1.9, d + " (need >= 1.9)"};
    });

    criterion(2, "golden-rule constant positive, routes agree, O(eps) rate", 60.0, [] {
        const ModelParams p;
        const FgrResult r = fgr_analysis(p, {0.2, 0.1, 0.05, 0.025});
        const bool ok = r.gamma_limit > 0.0 && r.positivity.pass && r.agreement.pass && r.rate.pass;
        return Outcome{ok, "gamma " + num(r.gamma_limit) + " route gap " + num(r.agreement.quantity) + " rate C " +
                               num(r.rate_constant)};
    });

    criterion(3, "operator golden rule matches the regularized integral", 0.0, [] {
        const double eps = 0.2;
        const double g = gamma_regularized(grid(64, 64, 1, 12.0, 12.0), eps);
        double e32 = 0.0, e64 = 0.0;
        for (int n : {32, 64}) {
            const double rel = std::abs(operator_golden_rule(assemble_model(grid(n, n, 1, 12.0, 12.0)), eps).restricted / g - 1.0);
            (n == 32 ? e32 : e64) = rel;
        }
        return Outcome{e64 < 0.05 && e64 < e32, "rel err n=32 " + num(e32) + " n=64 " + num(e64) + " (need < 0.05, improving)"};
    });

    criterion(4, "Feshbach isospectrality fuzz", 30.0, [] {
        const FuzzReport f = isospectrality_fuzz(200, 12345, 1e-10, 1);
        return Outcome{f.report.pass && f.cases.size() == 200,
                       "cases " + std::to_string(f.cases.size()) + " max mismatch " + num(f.max_mismatch) +
                           " failures " + std::to_string(f.failures)};
    });

    criterion(5, "bound chain at n_max = 1", 600.0, [] {
        const ExperimentConfig c = resolve_config(ExperimentKind::BoundChain, {}, {});
        const ChainReport r = verify_bound_chain(c.model, c.chain);
        std::string d = "lambda " + num(r.lambda) + " k " + num(r.k) + " dim " + std::to_string(r.dim) +
                        " min eig M " + num(r.min_eig_M) + " target " + num(r.target) + " min eig Mbar " +
                        num(r.min_eig_Mbar) + " failing:";
        for (const auto* b : {&r.a49, &r.a60, &r.a65, &r.a70, &r.a75})
            if (!b->pass) d += " " + b->name;
        return Outcome{r.pass && r.dim <= 50000, d};
    });

    criterion(6, "M_a converges monotonically to M", 0.0, [] {
        const Model m = assemble_model(grid(5, 6, 1, 10.0, 10.0, 0.05));
        const auto d = ma_to_m_distances(m, 10.0, {0.5, 0.25, 0.125, 0.0625}, 20, 99);
        bool ok = d.size() == 4;
        std::string s = "distances";
        for (std::size_t i = 0; i < d.size(); ++i) {
            s += " " + num(d[i]);
            if (i > 0) ok = ok && d[i] < d[i - 1];
        }
        return Outcome{ok, s};
    });

    criterion(7, "virial residuals and regularized-family limit", 0.0, [] {
        const ExperimentConfig c = resolve_config(ExperimentKind::VirialScan, {}, {});
        const Report r = run(c, 1);
        const auto& s = r.doc["results"]["scan"]["C1_expectation"];
        return Outcome{r.pass, "last <C1> " + num(s.back().get<double>()) + " failing: " + failed_names(r.doc["checks"])};
    });

    criterion(8, "flow laws, unitary group, generator order, Gronwall slack", 0.0, [] {
        const FlowCheck f = flow_check();
        return Outcome{f.pass, "unitarity " + num(f.unitarity) + " group " + num(f.unitary_group) + " order " +
                                   num(f.generator.order) + " gronwall slack " + num(f.gronwall.slack)};
    });

    criterion(9, "ionization signature at n_max = 2", 900.0, [] {
        const ExperimentConfig c = resolve_config(ExperimentKind::Dynamics, {}, {});
        const IonizationRun r = ionization_signature(c.model, c.dynamics, 4);
        std::string d = "free deviation " + num(r.free_deviation) + " half time " + num(r.half_time) + " t_rec " +
                        num(r.t_rec) + " rate ratio " + num(r.rate_ratio) + " (need within 25% of " +
                        num(r.expected_ratio) + ")";
        return Outcome{r.pass, d};
    });

    criterion(10, "lambda0 decreasing in beta with bounded lambda0/gamma", 0.0, [] {
        const ExperimentConfig c = resolve_config(ExperimentKind::Lambda0Scan, {}, {});
        const Lambda0Scan s = scan_lambda0(c.model, c.scan_lambdas, c.scan_betas, c.chain, 4);
        std::string d = "lambda0";
        for (double l : s.lambda0) d += " " + num(l);
        d += " spread " + num(s.ratio_spread);
        return Outcome{s.report.pass && s.decreasing, d};
    });

    criterion(11, "J is an involution and reverses L", 0.0, [] {
        double worst_sq = 0.0, worst_rev = 0.0;
        bool ok = true;
        for (double lam : {0.0, 0.1}) {
            const Model m = assemble_model(grid(6, 8, 2, 10.0, 10.0, lam));
            const auto J = build_J(m.basis);
            for (int r = 0; r < 20; ++r) {
                const Vec x = random_vector(m.dim(), stream_seed(5, r));
                worst_sq = std::max(worst_sq, (J.apply(J.apply(x)) - x).norm() / x.norm());
            }
            const BoundReport rep = check_J(m.L, J, 20, 99, 1e-10);
            worst_rev = std::max(worst_rev, rep.quantity);
            ok = ok && rep.pass;
        }
        ok = ok && worst_sq <= 1e-10;
        return Outcome{ok, "J^2 - 1 " + num(worst_sq) + " JLJ + L " + num(worst_rev) + " (need <= 1e-10)"};
    });

    criterion(12, "reports byte-identical across job counts", 0.0, [] {
        std::string d;
        bool ok = true;
        for (ExperimentKind k : {ExperimentKind::FeshbachFuzz, ExperimentKind::VirialScan, ExperimentKind::Lambda0Scan}) {
            const ExperimentConfig c = resolve_config(k, {}, {});
            const std::string a = report_json_text(run(c, 1));
            const std::string b = report_json_text(run(c, 4));
            const bool same = a == b;
            ok = ok && same;
            d += kind_name(k) + (same ? " identical " : " differs ");
        }
        return Outcome{ok, d};
    });

    std::printf("%d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
