#include "ionkit/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "ionkit/commutators.hpp"
#include "ionkit/feshbach.hpp"
#include "ionkit/fgr.hpp"
#include "ionkit/flows.hpp"
#include "ionkit/virial.hpp"

namespace ionkit {

using json = nlohmann::ordered_json;

void to_json(json& j, const BoundReport& b) {
    j = json{{"name", b.name}, {"quantity", b.quantity}, {"bound", b.bound}, {"slack", b.slack},
             {"tol", b.tol},   {"pass", b.pass}};
    json p = json::object();
    for (const auto& [k, v] : b.params) p[k] = v;
    j["params"] = p;
}

namespace {

double number(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

std::vector<double> numbers(const json& j) {
    std::vector<double> v;
    for (const auto& x : j) v.push_back(number(x));
    return v;
}

}  // namespace

void from_json(const json& j, BoundReport& b) {
    b.name = j.at("name").get<std::string>();
    b.quantity = number(j.at("quantity"));
    b.bound = number(j.at("bound"));
    b.slack = number(j.at("slack"));
    b.tol = number(j.at("tol"));
    b.pass = j.at("pass").get<bool>();
    b.params.clear();
    for (const auto& [k, v] : j.at("params").items()) b.params[k] = number(v);
}

void to_json(json& j, const TimeSeries& s) {
    j = json{{"observable", s.observable}, {"t_rec", s.t_rec},           {"norm_drift", s.norm_drift},
             {"times", s.times},           {"values", s.values},         {"ergodic_mean", s.ergodic_mean}};
    json p = json::object();
    for (const auto& [k, v] : s.params) p[k] = v;
    j["params"] = p;
}

void from_json(const json& j, TimeSeries& s) {
    s.observable = j.at("observable").get<std::string>();
    s.t_rec = number(j.at("t_rec"));
    s.norm_drift = number(j.at("norm_drift"));
    s.times = numbers(j.at("times"));
    s.values = numbers(j.at("values"));
    s.ergodic_mean = numbers(j.at("ergodic_mean"));
    s.params.clear();
    for (const auto& [k, v] : j.at("params").items()) s.params[k] = number(v);
}

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string short_fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

struct Builder {
    json results = json::object();
    json checks = json::array();
    std::vector<CsvTable> tables;
    bool pass = true;

    void check(const BoundReport& b) {
        checks.push_back(b);
        pass = pass && b.pass;
    }
};

json chain_json(const ChainReport& c) {
    return json{{"lambda", c.lambda},
                {"theta", c.theta},
                {"epsilon", c.epsilon},
                {"a", c.a},
                {"beta", c.beta},
                {"k", c.k},
                {"gamma", c.gamma},
                {"gamma_limit", c.gamma_limit},
                {"target", c.target},
                {"min_eig_M", c.min_eig_M},
                {"min_eig_Mbar", c.min_eig_Mbar},
                {"F_values", c.F_values},
                {"F_variation", c.F_variation},
                {"uniform_in_m", c.uniform_in_m},
                {"cond_a66", c.cond_a66},
                {"cond_a74", c.cond_a74},
                {"a66_lhs", c.a66_lhs},
                {"a74_lhs", c.a74_lhs},
                {"lambda0_recipe", c.lambda0_recipe},
                {"dim", c.dim},
                {"pass", c.pass}};
}

void chain_checks(Builder& b, const ChainReport& c) {
    for (const auto* r : {&c.a49, &c.a60, &c.a65, &c.a70, &c.a75}) b.check(*r);
}

void run_fgr(const ExperimentConfig& c, Builder& b) {
    const ModelParams& p = c.model;
    const FgrResult r = fgr_analysis(p, c.fgr_eps);
    b.results["gamma_limit"] = r.gamma_limit;
    b.results["gamma_limit_midpoint"] = r.gamma_limit_midpoint;
    b.results["gamma_limit_error"] = r.gamma_limit_error;
    b.results["gamma_extrapolated"] = r.gamma_extrapolated;
    b.results["eps"] = r.eps;
    b.results["gamma_eps"] = r.gamma_eps;
    b.results["gamma_eps_midpoint"] = r.gamma_eps_midpoint;
    b.results["gamma_eps_error"] = r.gamma_eps_error;
    b.results["omega_cut"] = r.omega_cut;
    b.results["e_cut"] = r.e_cut;
    b.results["rate_constant"] = r.rate_constant;
    b.results["rate_order"] = r.rate_order;
    b.check(r.agreement);
    b.check(r.rate);

    // Model hypotheses are verdicts about the inputs, reported without gating the numerical checks.
    json verdicts = json::object();
    verdicts["positivity"] = r.positivity;
    if (r.gamma_limit > 0.0) {
        verdicts["beta_decay"] = beta_decay_check(p, c.fgr_betas);
    }
    const HypothesisReport h = check_hypotheses(p);
    verdicts["hypotheses"] = h.overall;
    verdicts["hypothesis_checks"] = h.checks;
    verdicts["measured_ir_exponent"] = h.measured_ir_exponent;
    b.results["verdicts"] = verdicts;

    CsvTable t{"gamma_eps", {"eps", "gamma_eps", "gamma_eps_midpoint", "gamma_eps_error"}, {}};
    for (std::size_t k = 0; k < r.eps.size(); ++k)
        t.rows.push_back({r.eps[k], r.gamma_eps[k], r.gamma_eps_midpoint[k], r.gamma_eps_error[k]});
    b.tables.push_back(t);
}

void run_chain(const ExperimentConfig& c, Builder& b) {
    const ChainReport r = verify_bound_chain(c.model, c.chain);
    b.results["chain"] = chain_json(r);
    const double lam = std::abs(r.lambda);
    b.results["lambda0_verdict"] = json{{"lambda", r.lambda},
                                        {"lambda0_recipe", r.lambda0_recipe},
                                        {"below_recipe", lam < r.lambda0_recipe},
                                        {"chain_holds", r.pass}};
    chain_checks(b, r);
    CsvTable t{"F_values", {"m", "F"}, {}};
    for (std::size_t k = 0; k < r.F_values.size() && k < c.chain.m_grid.size(); ++k)
        t.rows.push_back({c.chain.m_grid[k], r.F_values[k]});
    b.tables.push_back(t);
}

void run_fuzz(const ExperimentConfig& c, Builder& b, int jobs) {
    const FuzzReport f = isospectrality_fuzz(c.fuzz_cases, c.seed, c.fuzz_tol, jobs);
    json cases = json::array();
    CsvTable t{"cases", {"index", "dim", "rank", "n_eigs_below", "max_mismatch", "pass"}, {}};
    for (std::size_t i = 0; i < f.cases.size(); ++i) {
        const auto& k = f.cases[i];
        cases.push_back(json{{"dim", k.dim},
                             {"rank", k.rank},
                             {"eigs_below", k.eigs_below},
                             {"roots", k.roots},
                             {"max_mismatch", k.max_mismatch},
                             {"pass", k.pass}});
        t.rows.push_back({double(i), double(k.dim), double(k.rank), double(k.eigs_below.size()), k.max_mismatch,
                          k.pass ? 1.0 : 0.0});
    }
    b.results["max_mismatch"] = f.max_mismatch;
    b.results["failures"] = f.failures;
    b.results["cases"] = cases;
    b.check(f.report);
    b.tables.push_back(t);
}

void run_flow(const ExperimentConfig& c, Builder& b) {
    const FlowCheck f = flow_check(c.flow);
    b.results["group_law"] = f.laws.group_law;
    b.results["inverse_law"] = f.laws.inverse_law;
    b.results["cocycle"] = f.laws.cocycle;
    b.results["min_jacobian"] = f.laws.min_jacobian;
    b.results["unitarity"] = f.unitarity;
    b.results["unitary_group"] = f.unitary_group;
    b.results["generator_times"] = f.generator.times;
    b.results["generator_errors"] = f.generator.errors;
    b.results["generator_order"] = f.generator.order;
    for (const auto* r : {&f.flow_laws, &f.unitarity_report, &f.group_report, &f.generator.report, &f.gronwall})
        b.check(*r);
    CsvTable t{"generator", {"t", "error"}, {}};
    for (std::size_t k = 0; k < f.generator.times.size(); ++k) t.rows.push_back({f.generator.times[k], f.generator.errors[k]});
    b.tables.push_back(t);
}

void run_virial(const ExperimentConfig& c, Builder& b, int jobs) {
    const Model m = assemble_model(c.model);
    b.results["dim"] = m.dim();
    LanczosOptions opt;
    opt.tol = c.virial_lanczos_tol;
    opt.seed = c.seed;
    const VirialEigenReport e = virial_eigenpairs(m, c.virial_pairs, opt);
    json pairs = json::array();
    CsvTable tp{"eigenpairs", {"index", "eigenvalue", "eigen_residual", "value", "bound", "value_A0", "bound_A0"}, {}};
    for (std::size_t k = 0; k < e.plain.size(); ++k) {
        const auto& r = e.plain[k];
        const auto& s = e.augmented[k];
        pairs.push_back(json{{"eigenvalue", r.eigenvalue},
                             {"eigen_residual", r.eigen_residual},
                             {"value", r.value},
                             {"bound", r.bound},
                             {"roundoff", r.roundoff},
                             {"value_A0", s.value},
                             {"bound_A0", s.bound}});
        tp.rows.push_back({double(k), r.eigenvalue, r.eigen_residual, r.value, r.bound, s.value, s.bound});
    }
    b.results["eigenpairs"] = pairs;
    b.check(e.report);

    const VirialScan s = virial_scan(m, c.virial_alphas, opt, jobs);
    b.results["scan"] = json{{"eigenvalue", s.eigenvalue},
                             {"eigen_residual", s.eigen_residual},
                             {"spectral_residual", s.spectral_residual},
                             {"alphas", s.family.alphas},
                             {"nus", s.family.nus},
                             {"C1_expectation", s.C1_expectation},
                             {"distance", s.family.distance},
                             {"norm", s.family.norm},
                             {"decreasing", s.decreasing}};
    b.results["regularity"] = json{{"hypothesis_min", s.regularity.hypothesis_min},
                                   {"C_expectation", s.regularity.C_expectation},
                                   {"limit_reached", s.regularity.limit_reached},
                                   {"P_expectation", s.regularity.P_expectation},
                                   {"B_expectation", s.regularity.B_expectation}};
    b.check(s.report);
    b.check(s.regularity.hypothesis);
    b.check(s.regularity.B_nonnegative);
    b.check(s.regularity.conclusion);
    CsvTable ta{"scan", {"alpha", "residual"}, {}};
    for (std::size_t k = 0; k < s.C1_expectation.size(); ++k) ta.rows.push_back({s.family.alphas[k], s.C1_expectation[k]});
    b.tables.push_back(ta);
    b.tables.push_back(tp);
}

void run_dynamics(const ExperimentConfig& c, Builder& b, int jobs) {
    const IonizationRun r = ionization_signature(c.model, c.dynamics, jobs);
    b.results["t_rec"] = r.t_rec;
    b.results["free_deviation"] = r.free_deviation;
    b.results["half_time"] = r.half_time;
    b.results["rate_ratio"] = r.rate_ratio;
    b.results["expected_ratio"] = r.expected_ratio;
    json runs = json::array();
    for (std::size_t k = 0; k < r.lambdas.size(); ++k) {
        const auto& f = r.fits[k];
        runs.push_back(json{{"lambda", r.lambdas[k]},
                            {"fit", json{{"rate", f.rate},
                                         {"intercept", f.intercept},
                                         {"residual", f.residual},
                                         {"t_start", f.t_start},
                                         {"t_end", f.t_end},
                                         {"n_points", f.n_points},
                                         {"widened", f.widened}}},
                            {"series", r.series[k]}});
        const std::string tag = "lambda_" + short_fmt(r.lambdas[k]);
        b.tables.push_back(series_table("survival_" + tag, r.series[k]));
        b.tables.push_back(series_table("ergodic_" + tag, r.series[k], true));
    }
    b.results["runs"] = runs;
    b.check(r.free_exact);
    b.check(r.half_before_recurrence);
    b.check(r.lambda_squared);
}

void run_gjn(const ExperimentConfig& c, Builder& b) {
    // Constants on the configured grid and on the grid refined twice in every direction.
    ModelParams fine = c.model;
    fine.grid.n_e *= 2;
    fine.grid.n_u *= 2;
    json rows = json::array();
    std::vector<std::map<std::string, double>> vals;
    for (const ModelParams* p : {&c.model, static_cast<const ModelParams*>(&fine)}) {
        const Model m = assemble_model(*p);
        const RVec Lam = comparison_operator_diag(m);
        LinearOperator N(m.basis.dp(), m.basis.nf(), "N");
        N.add_fock(m.field.N).set_hermitian(true);
        std::map<std::string, double> v;
        json row = json{{"n_e", p->grid.n_e}, {"n_u", p->grid.n_u}, {"dim", m.dim()}};
        for (const auto& [name, X] : std::vector<std::pair<std::string, const LinearOperator*>>{
                 {"L", &m.L}, {"L0", &m.L0}, {"I", &m.I}, {"N", &N}}) {
            const GjnReport g = gjn_check(name, *X, Lam);
            row["gjn_" + name] = json{{"k_norm", g.k_norm}, {"k_form", g.k_form}, {"pass", g.pass}};
            v["gjn_" + name + ".k_norm"] = g.k_norm;
            v["gjn_" + name + ".k_form"] = g.k_form;
        }
        v["kato_I"] = kato_bound(m, m.I);
        v["kato_D"] = kato_bound(m, m.D);
        v["kato_C3"] = kato_bound(m, analytic_commutator(m, 3));
        for (const char* k : {"kato_I", "kato_D", "kato_C3"}) row[k] = v[k];
        rows.push_back(row);
        vals.push_back(v);
    }
    b.results["grids"] = rows;
    // A constant is stable when the refined value stays within 1.5 times the coarse one; the absolute floor
    // absorbs constants that vanish up to roundoff.
    for (const auto& [key, coarse] : vals[0]) {
        const double fine_value = vals[1].at(key);
        const double cap = 1.5 * coarse + 1e-12;
        auto r = BoundReport::make(key + " stable under refinement", fine_value, cap, cap - fine_value, 0.0);
        r.pass = std::isfinite(fine_value) && r.pass;
        r.params = {{"coarse", coarse}, {"fine", fine_value}};
        b.check(r);
    }
}

void run_scan(const ExperimentConfig& c, Builder& b, int jobs) {
    const Lambda0Scan s = scan_lambda0(c.model, c.scan_lambdas, c.scan_betas, c.chain, jobs);
    json rows = json::array();
    CsvTable t{"scan", {"lambda", "min_eig", "beta", "min_eig_Mbar", "F_min", "target", "k", "gamma", "pass"}, {}};
    for (const auto& r : s.rows) {
        rows.push_back(json{{"beta", r.beta},
                            {"lambda", r.lambda},
                            {"min_eig", r.min_eig},
                            {"min_eig_Mbar", r.min_eig_Mbar},
                            {"F_min", r.F_min},
                            {"target", r.target},
                            {"k", r.k},
                            {"gamma", r.gamma},
                            {"pass", r.pass}});
        t.rows.push_back(
            {r.lambda, r.min_eig, r.beta, r.min_eig_Mbar, r.F_min, r.target, r.k, r.gamma, r.pass ? 1.0 : 0.0});
    }
    b.results["rows"] = rows;
    b.results["betas"] = s.betas;
    b.results["lambda0"] = s.lambda0;
    b.results["gamma_limit"] = s.gamma_limit;
    b.results["decreasing"] = s.decreasing;
    b.results["ratio_spread"] = s.ratio_spread;
    b.check(s.report);
    b.tables.push_back(t);
}

}  // namespace

Report run(const ExperimentConfig& c, int jobs) {
    const auto t0 = std::chrono::steady_clock::now();
    Report rep;
    Builder b;
    json failure = nullptr;
    try {
        switch (c.kind) {
            case ExperimentKind::Fgr: run_fgr(c, b); break;
            case ExperimentKind::BoundChain: run_chain(c, b); break;
            case ExperimentKind::FeshbachFuzz: run_fuzz(c, b, jobs); break;
            case ExperimentKind::FlowCheck: run_flow(c, b); break;
            case ExperimentKind::VirialScan: run_virial(c, b, jobs); break;
            case ExperimentKind::Dynamics: run_dynamics(c, b, jobs); break;
            case ExperimentKind::Gjn: run_gjn(c, b); break;
            case ExperimentKind::Lambda0Scan: run_scan(c, b, jobs); break;
        }
    } catch (const std::exception& e) {
        failure = json{{"stage", kind_name(c.kind)}, {"what", e.what()}};
        rep.failed = true;
    }
    rep.pass = b.pass && !rep.failed && !b.checks.empty();
    const auto& g = c.model.grid;
    rep.doc["schema"] = kReportSchema;
    rep.doc["kind"] = kind_name(c.kind);
    rep.doc["config"] = config_echo(c);
    rep.doc["stats"] = json{{"composite_dim", CompositeBasis(build_bases(g)).dim()}};
    rep.doc["results"] = b.results;
    rep.doc["checks"] = b.checks;
    rep.doc["failure"] = failure;
    rep.doc["pass"] = rep.pass;
    CsvTable checks{"checks", {"index", "quantity", "bound", "slack", "tol", "pass"}, {}};
    for (std::size_t k = 0; k < b.checks.size(); ++k) {
        BoundReport r = b.checks[k].get<BoundReport>();
        checks.rows.push_back({double(k), r.quantity, r.bound, r.slack, r.tol, r.pass ? 1.0 : 0.0});
    }
    rep.tables = std::move(b.tables);
    rep.tables.push_back(checks);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

Format parse_format(const std::string& s) {
    if (s == "json") return Format::Json;
    if (s == "csv") return Format::Csv;
    throw ConfigError("--format", "expected json or csv, got '" + s + "'");
}

std::string report_json_text(const Report& r) { return r.doc.dump(2) + "\n"; }

std::string csv_text(const CsvTable& t) {
    std::string s;
    for (std::size_t k = 0; k < t.header.size(); ++k) s += (k ? "," : "") + t.header[k];
    s += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) s += (k ? "," : "") + fmt(row[k]);
        s += "\n";
    }
    return s;
}

CsvTable series_table(const std::string& name, const TimeSeries& s, bool ergodic) {
    CsvTable t{name, {"time", "value"}, {}};
    const auto& v = ergodic ? s.ergodic_mean : s.values;
    for (std::size_t k = 0; k < s.times.size() && k < v.size(); ++k) t.rows.push_back({s.times[k], v[k]});
    return t;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text, std::vector<std::string>& written) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    out.close();
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
    written.push_back(path.string());
}

}  // namespace

std::vector<std::string> emit(const Report& r, const std::string& out_dir, Format f) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create '" + out_dir + "': " + ec.message());
    const std::string kind = r.doc.at("kind").get<std::string>();
    std::vector<std::string> written;
    if (f == Format::Json) {
        write_file(fs::path(out_dir) / (kind + ".json"), report_json_text(r), written);
    } else {
        for (const auto& t : r.tables) write_file(fs::path(out_dir) / (kind + "_" + t.name + ".csv"), csv_text(t), written);
    }
    const json timing{{"kind", kind}, {"wall_seconds", r.wall_seconds}};
    write_file(fs::path(out_dir) / (kind + ".timing.json"), timing.dump(2) + "\n", written);
    return written;
}

}  // namespace ionkit
