#include "ionkit/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace ionkit {

namespace {

using json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(x))
        throw ConfigError(key, "expected a finite number, got '" + v + "'");
    return x;
}

long long to_integer(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    char* end = nullptr;
    errno = 0;
    const long long x = std::strtoll(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
        throw ConfigError(key, "expected an integer, got '" + v + "'");
    return x;
}

int to_int(const std::string& key, const std::string& v, int lo) {
    const long long x = to_integer(key, v);
    if (x < lo || x > std::numeric_limits<int>::max())
        throw ConfigError(key, "must be an integer >= " + std::to_string(lo));
    return int(x);
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    if (t.empty() || t[0] == '-') throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
    char* end = nullptr;
    errno = 0;
    const unsigned long long x = std::strtoull(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size() || errno == ERANGE)
        throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
    return x;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
    if (out.empty()) throw ConfigError(key, "expected a comma-separated list of numbers");
    return out;
}

struct Key {
    std::string name;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<json(const ExperimentConfig&)> get;
};

#define NUM_KEY(NAME, FIELD)                                                              \
    Key {                                                                                 \
        NAME, [](ExperimentConfig& c, const std::string& v) { c.FIELD = to_double(NAME, v); }, \
            [](const ExperimentConfig& c) { return json(c.FIELD); }                       \
    }
#define INT_KEY(NAME, FIELD, LO)                                                              \
    Key {                                                                                     \
        NAME, [](ExperimentConfig& c, const std::string& v) { c.FIELD = to_int(NAME, v, LO); }, \
            [](const ExperimentConfig& c) { return json(c.FIELD); }                           \
    }
#define LIST_KEY(NAME, FIELD)                                                            \
    Key {                                                                                \
        NAME, [](ExperimentConfig& c, const std::string& v) { c.FIELD = to_list(NAME, v); }, \
            [](const ExperimentConfig& c) { return json(c.FIELD); }                      \
    }

const std::vector<Key>& registry() {
    static const std::vector<Key> keys{
        NUM_KEY("model.beta", model.beta),
        NUM_KEY("model.lambda", model.lambda),
        NUM_KEY("model.theta", model.theta),
        NUM_KEY("model.epsilon", model.epsilon),
        NUM_KEY("model.a", model.a),
        NUM_KEY("model.E", model.grid.E),
        Key{"model.form_factor", [](ExperimentConfig& c, const std::string& v) { c.form_factor = trim(v); },
            [](const ExperimentConfig& c) { return json(c.form_factor); }},
        Key{"model.kernel", [](ExperimentConfig& c, const std::string& v) { c.kernel = trim(v); },
            [](const ExperimentConfig& c) { return json(c.kernel); }},
        NUM_KEY("grid.e_max", model.grid.e_max),
        INT_KEY("grid.n_e", model.grid.n_e, 1),
        NUM_KEY("grid.u_max", model.grid.u_max),
        INT_KEY("grid.n_u", model.grid.n_u, 2),
        INT_KEY("grid.n_max", model.grid.n_max, 0),
        INT_KEY("grid.fiber_dim", model.grid.fiber_dim, 1),
        INT_KEY("grid.n_sigma", model.grid.n_sigma, 1),
        Key{"run.seed", [](ExperimentConfig& c, const std::string& v) { c.seed = to_seed("run.seed", v); },
            [](const ExperimentConfig& c) { return json(c.seed); }},
        LIST_KEY("fgr.eps", fgr_eps),
        LIST_KEY("fgr.betas", fgr_betas),
        NUM_KEY("chain.lambda1", chain.lambda1),
        NUM_KEY("chain.lambda2", chain.lambda2),
        LIST_KEY("chain.m_grid", chain.m_grid),
        NUM_KEY("chain.form_tol", chain.form_tol),
        LIST_KEY("scan.lambdas", scan_lambdas),
        LIST_KEY("scan.betas", scan_betas),
        INT_KEY("fuzz.cases", fuzz_cases, 1),
        NUM_KEY("fuzz.tol", fuzz_tol),
        NUM_KEY("flow.a", flow.a),
        NUM_KEY("flow.e_max", flow.e_max),
        INT_KEY("flow.n_e", flow.n_e, 8),
        NUM_KEY("flow.centre", flow.centre),
        NUM_KEY("flow.width", flow.width),
        LIST_KEY("flow.times", flow.times),
        INT_KEY("flow.samples", flow.samples, 2),
        NUM_KEY("flow.tol", flow.tol),
        NUM_KEY("flow.unitary_tol", flow.unitary_tol),
        INT_KEY("virial.n_pairs", virial_pairs, 1),
        LIST_KEY("virial.alphas", virial_alphas),
        NUM_KEY("virial.lanczos_tol", virial_lanczos_tol),
        LIST_KEY("dynamics.lambdas", dynamics.lambdas),
        INT_KEY("dynamics.n_steps", dynamics.n_steps, 2),
        NUM_KEY("dynamics.fit_start", dynamics.fit_start),
        NUM_KEY("dynamics.fit_end", dynamics.fit_end),
        NUM_KEY("dynamics.tol", dynamics.evolve.tol),
        INT_KEY("dynamics.krylov_dim", dynamics.evolve.krylov_dim, 2),
    };
    return keys;
}

#undef NUM_KEY
#undef INT_KEY
#undef LIST_KEY

const Key& find_key(const std::string& name) {
    for (const auto& k : registry())
        if (k.name == name) return k;
    throw ConfigError(name, "unknown configuration key");
}

void require(bool ok, const std::string& key, const std::string& msg) {
    if (!ok) throw ConfigError(key, msg);
}

void validate(const ExperimentConfig& c) {
    const auto& g = c.model.grid;
    require(c.model.beta > 0.0, "model.beta", "must be > 0");
    require(c.model.theta > 0.0, "model.theta", "must be > 0");
    require(c.model.epsilon > 0.0, "model.epsilon", "must be > 0");
    require(c.model.a > 0.0, "model.a", "must be > 0");
    require(g.E < 0.0, "model.E", "must be < 0");
    require(g.e_max > 0.0, "grid.e_max", "must be > 0");
    require(g.u_max > 0.0, "grid.u_max", "must be > 0");
    require(g.n_u % 2 == 0, "grid.n_u", "must be even");
    for (double e : c.fgr_eps) require(e > 0.0, "fgr.eps", "entries must be > 0");
    for (double b : c.fgr_betas) require(b > 0.0, "fgr.betas", "entries must be > 0");
    for (double b : c.scan_betas) require(b > 0.0, "scan.betas", "entries must be > 0");
    require(c.fuzz_tol > 0.0, "fuzz.tol", "must be > 0");
    require(c.flow.a > 0.0, "flow.a", "must be > 0");
    require(c.flow.width > 0.0, "flow.width", "must be > 0");
    require(c.flow.tol > 0.0, "flow.tol", "must be > 0");
    for (double a : c.virial_alphas) require(a > 0.0 && a < 1.0, "virial.alphas", "entries must lie in (0, 1)");
    require(c.dynamics.lambdas.size() >= 2, "dynamics.lambdas", "needs at least two couplings");
    require(c.dynamics.evolve.tol > 0.0, "dynamics.tol", "must be > 0");
    require(0.0 <= c.dynamics.fit_start && c.dynamics.fit_start < c.dynamics.fit_end && c.dynamics.fit_end <= 1.0,
            "dynamics.fit_start", "need 0 <= fit_start < fit_end <= 1");
}

}  // namespace

const std::vector<ExperimentKind>& all_kinds() {
    static const std::vector<ExperimentKind> k{ExperimentKind::Fgr,        ExperimentKind::BoundChain,
                                               ExperimentKind::FeshbachFuzz, ExperimentKind::FlowCheck,
                                               ExperimentKind::VirialScan, ExperimentKind::Dynamics,
                                               ExperimentKind::Gjn,        ExperimentKind::Lambda0Scan};
    return k;
}

std::string kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Fgr: return "fgr";
        case ExperimentKind::BoundChain: return "bound-chain";
        case ExperimentKind::FeshbachFuzz: return "feshbach-fuzz";
        case ExperimentKind::FlowCheck: return "flow-check";
        case ExperimentKind::VirialScan: return "virial-scan";
        case ExperimentKind::Dynamics: return "dynamics";
        case ExperimentKind::Gjn: return "gjn";
        case ExperimentKind::Lambda0Scan: return "lambda0-scan";
    }
    return "unknown";
}

ExperimentKind parse_kind(const std::string& name) {
    for (auto k : all_kinds())
        if (kind_name(k) == name) return k;
    throw ConfigError("kind", "unknown experiment '" + name + "'");
}

ConfigMap parse_config_text(const std::string& text, const std::string& origin) {
    ConfigMap out;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw ConfigError(where, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(where, "empty key");
        if (out.count(key)) throw ConfigError(key, "given twice in " + origin);
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

ConfigMap read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    auto& g = c.model.grid;
    switch (kind) {
        case ExperimentKind::Fgr:
        case ExperimentKind::FeshbachFuzz:
        case ExperimentKind::FlowCheck:
            break;
        case ExperimentKind::BoundChain:
        case ExperimentKind::Lambda0Scan:
            c.model.lambda = 0.05;
            g.n_e = 12;
            g.n_u = 32;
            g.n_max = 1;
            break;
        case ExperimentKind::VirialScan:
        case ExperimentKind::Gjn:
            c.model.lambda = 0.1;
            g.n_e = 12;
            g.n_u = 24;
            g.n_max = 1;
            break;
        case ExperimentKind::Dynamics:
            g.n_e = 12;
            g.n_u = 24;
            g.n_max = 2;
            break;
    }
    return c;
}

ExperimentConfig resolve_config(ExperimentKind kind, const ConfigMap& file, const ConfigMap& flags) {
    ExperimentConfig c = default_config(kind);
    for (const auto* layer : {&file, &flags})
        for (const auto& [k, v] : *layer) find_key(k).set(c, v);
    try {
        c.model.form_factor = form_factor_by_name(c.form_factor);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("model.form_factor", e.what());
    }
    try {
        c.model.kernel = kernel_by_name(c.kernel);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("model.kernel", e.what());
    }
    c.chain.seed = c.seed;
    validate(c);
    return c;
}

nlohmann::ordered_json config_echo(const ExperimentConfig& c) {
    json j = json::object();
    j["kind"] = kind_name(c.kind);
    for (const auto& k : registry()) j[k.name] = k.get(c);
    return j;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& k : registry()) out.push_back(k.name);
    return out;
}

}  // namespace ionkit
