#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ionkit/experiment.hpp"

using namespace ionkit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ionkit_test_cli_" + name);
    fs::remove_all(p);
    return p;
}

int run_cli(const std::string& args) {
    const int status = std::system((std::string(IONKIT_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("kind names round trip") {
    for (auto k : all_kinds()) CHECK(parse_kind(kind_name(k)) == k);
    CHECK_THROWS_AS(parse_kind("nope"), ConfigError);
    CHECK(all_kinds().size() == 8);
}

TEST_CASE("config text parsing") {
    auto m = parse_config_text("# comment\n model.beta = 2  # trailing\n\ngrid.n_e=7\n");
    CHECK(m.size() == 2);
    CHECK(m.at("model.beta") == "2");
    CHECK(m.at("grid.n_e") == "7");
    try {
        parse_config_text("a = 1\nbad line\n", "cfg");
        FAIL("no throw");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "cfg:2");
    }
    CHECK_THROWS_AS(parse_config_text("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(read_config_file("/nonexistent/ionkit.cfg"), std::runtime_error);
}

TEST_CASE("precedence: flags over file over kind defaults") {
    const auto d = resolve_config(ExperimentKind::Dynamics, {}, {});
    CHECK(d.model.grid.n_max == 2);
    CHECK(d.model.grid.n_e == 12);
    const auto f = resolve_config(ExperimentKind::Dynamics, {{"grid.n_e", "8"}, {"model.beta", "2"}}, {});
    CHECK(f.model.grid.n_e == 8);
    CHECK(f.model.beta == 2.0);
    const auto g = resolve_config(ExperimentKind::Dynamics, {{"grid.n_e", "8"}, {"model.beta", "2"}}, {{"grid.n_e", "6"}});
    CHECK(g.model.grid.n_e == 6);
    CHECK(g.model.beta == 2.0);
    CHECK(g.model.grid.n_max == 2);
    const auto s = resolve_config(ExperimentKind::BoundChain, {}, {{"run.seed", "77"}});
    CHECK(s.seed == 77);
    CHECK(s.chain.seed == 77);
    const auto l = resolve_config(ExperimentKind::Fgr, {}, {{"fgr.eps", "0.3, 0.1"}});
    CHECK(l.fgr_eps == std::vector<double>{0.3, 0.1});
}

TEST_CASE("errors name the offending field") {
    auto field_of = [](const ConfigMap& flags) {
        try {
            resolve_config(ExperimentKind::Fgr, {}, flags);
        } catch (const ConfigError& e) {
            return e.field();
        }
        return std::string("no error");
    };
    CHECK(field_of({{"model.bogus", "1"}}) == "model.bogus");
    CHECK(field_of({{"model.beta", "abc"}}) == "model.beta");
    CHECK(field_of({{"model.beta", "-1"}}) == "model.beta");
    CHECK(field_of({{"model.beta", "inf"}}) == "model.beta");
    CHECK(field_of({{"grid.n_u", "7"}}) == "grid.n_u");
    CHECK(field_of({{"grid.n_e", "2.5"}}) == "grid.n_e");
    CHECK(field_of({{"run.seed", "-3"}}) == "run.seed");
    CHECK(field_of({{"model.form_factor", "nope"}}) == "model.form_factor");
    CHECK(field_of({{"fgr.eps", ""}}) == "fgr.eps");
    CHECK(field_of({{"dynamics.lambdas", "0.1"}}) == "dynamics.lambdas");
    CHECK_THROWS_AS(parse_format("xml"), ConfigError);
}

TEST_CASE("config echo lists every key once") {
    const auto c = resolve_config(ExperimentKind::Gjn, {}, {});
    const auto j = config_echo(c);
    CHECK(j.at("kind") == "gjn");
    for (const auto& k : config_keys()) CHECK(j.contains(k));
    CHECK(j.size() == config_keys().size() + 1);
    CHECK_FALSE(j.contains("jobs"));
}

TEST_CASE("zero coupling golden rule reports zero and passes") {
    const auto c = resolve_config(ExperimentKind::Fgr, {}, {{"model.form_factor", "zero"}});
    const Report r = run(c, 1);
    CHECK(r.pass);
    CHECK_FALSE(r.failed);
    CHECK(r.doc["results"]["gamma_limit"].get<double>() == 0.0);
    CHECK(r.doc["failure"].is_null());
    CHECK_FALSE(r.doc["results"]["verdicts"]["positivity"]["pass"].get<bool>());
}

TEST_CASE("series CSV shapes") {
    TimeSeries empty;
    CHECK(csv_text(series_table("s", empty)) == "time,value\n");
    TimeSeries s;
    s.times = {0.0, 0.5, 1.0};
    s.values = {1.0, 0.75, 0.1};
    s.ergodic_mean = {1.0, 0.9, 0.7};
    const std::string t = csv_text(series_table("s", s));
    CHECK(count_lines(t) == 4);
    CHECK(t == "time,value\n0,1\n0.5,0.75\n1,0.10000000000000001\n");
    CHECK(csv_text(series_table("e", s, true)).find("0.90000000000000002") != std::string::npos);
}

TEST_CASE("JSON round trip") {
    BoundReport b = BoundReport::make("x", 1.5, 2.0, 0.5, 1e-9);
    b.params = {{"alpha", 0.25}, {"n", 3.0}};
    const nlohmann::ordered_json jb = b;
    const BoundReport b2 = jb.get<BoundReport>();
    CHECK(b2.name == b.name);
    CHECK(b2.quantity == b.quantity);
    CHECK(b2.slack == b.slack);
    CHECK(b2.tol == b.tol);
    CHECK(b2.pass == b.pass);
    CHECK(b2.params == b.params);
    // non-finite values serialize as null and read back as NaN
    BoundReport inf = BoundReport::make("inf", INFINITY, 3.0, -INFINITY, 0.0);
    const auto ji = nlohmann::ordered_json::parse(nlohmann::ordered_json(inf).dump());
    CHECK(ji["quantity"].is_null());
    CHECK(std::isnan(ji.get<BoundReport>().quantity));

    TimeSeries s;
    s.observable = "survival";
    s.times = {0.0, 0.1};
    s.values = {1.0, 0.9999999999999999};
    s.ergodic_mean = {1.0, 0.99999};
    s.t_rec = 7.5;
    s.norm_drift = 1e-13;
    s.params = {{"lambda", 0.1}};
    const auto js = nlohmann::ordered_json::parse(nlohmann::ordered_json(s).dump());
    const TimeSeries s2 = js.get<TimeSeries>();
    CHECK(s2.values == s.values);
    CHECK(s2.times == s.times);
    CHECK(s2.ergodic_mean == s.ergodic_mean);
    CHECK(s2.t_rec == s.t_rec);
    CHECK(s2.params == s.params);
}

TEST_CASE("reports are deterministic across job counts") {
    for (auto kind : {ExperimentKind::FeshbachFuzz, ExperimentKind::VirialScan}) {
        auto c = resolve_config(kind, {}, {{"fuzz.cases", "40"}});
        const std::string a = report_json_text(run(c, 1));
        const std::string b = report_json_text(run(c, 3));
        CHECK(a == b);
        const auto j = nlohmann::ordered_json::parse(a);
        CHECK(j.at("schema") == kReportSchema);
        CHECK_FALSE(j.contains("wall_seconds"));
    }
}

TEST_CASE("emit writes JSON or CSV plus timing") {
    const auto c = resolve_config(ExperimentKind::FlowCheck, {}, {});
    const Report r = run(c, 1);
    const fs::path dj = scratch("json");
    auto w = emit(r, dj.string(), Format::Json);
    CHECK(w.size() == 2);
    CHECK(slurp(dj / "flow-check.json") == report_json_text(r));
    CHECK(nlohmann::json::parse(slurp(dj / "flow-check.timing.json")).contains("wall_seconds"));
    const fs::path dc = scratch("csv");
    w = emit(r, dc.string(), Format::Csv);
    CHECK(w.size() == r.tables.size() + 1);
    CHECK(fs::exists(dc / "flow-check_checks.csv"));
    CHECK(count_lines(slurp(dc / "flow-check_checks.csv")) == int(r.doc["checks"].size()) + 1);
}

TEST_CASE("a throwing stage becomes a failure record") {
    const auto c = resolve_config(ExperimentKind::Fgr, {}, {{"fgr.eps", "0.1"}});
    const Report r = run(c, 1);
    CHECK(r.failed);
    CHECK_FALSE(r.pass);
    CHECK(r.doc["failure"]["stage"] == "fgr");
    CHECK(r.doc["failure"]["what"].get<std::string>().find("two eps") != std::string::npos);
    CHECK(r.doc["checks"].empty());
}

TEST_CASE("command line exit codes") {
    const fs::path d = scratch("exe");
    const std::string out = " --out " + d.string();
    CHECK(run_cli("fgr --set model.form_factor=zero" + out) == 0);
    CHECK(fs::exists(d / "fgr.json"));
    CHECK(run_cli("fgr --set model.bogus=1" + out) == 1);
    CHECK(run_cli("fgr --format xml" + out) == 1);
    CHECK(run_cli("nonsense") == 1);
    CHECK(run_cli("") == 1);
    CHECK(run_cli("fgr --config /nonexistent/x.cfg" + out) == 1);
    // a failing check exits with 2
    CHECK(run_cli("bound-chain --set grid.n_e=4 --set grid.n_u=6" + out) == 2);
    CHECK(run_cli("feshbach-fuzz --format csv --set fuzz.cases=5 --seed 3 --jobs 2" + out) == 0);
    CHECK(fs::exists(d / "feshbach-fuzz_cases.csv"));
}
