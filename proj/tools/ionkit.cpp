#include <CLI11.hpp>

#include <iostream>

#include "ionkit/experiment.hpp"

// Exit codes: 0 every check passed, 2 a check failed or a stage threw, 1 usage, config or I/O error.
int main(int argc, char** argv) {
    using namespace ionkit;
    CLI::App app{"ionkit: numerical checks for an open-system ionization model"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", format = "json";
    std::vector<std::string> sets;
    std::int64_t seed = -1;
    int jobs = 1;

    for (ExperimentKind k : all_kinds()) {
        auto* sub = app.add_subcommand(kind_name(k), "run the " + kind_name(k) + " experiment");
        sub->add_option("--config", config_path, "key = value file");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--format", format, "json or csv");
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--set", sets, "override a dotted key, key=value");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        const ExperimentKind kind = parse_kind(app.get_subcommands().front()->get_name());
        const Format fmt = parse_format(format);
        const ConfigMap file = config_path.empty() ? ConfigMap{} : read_config_file(config_path);
        ConfigMap flags;
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError("--set", "expected key=value, got '" + s + "'");
            flags[s.substr(0, eq)] = s.substr(eq + 1);
        }
        if (seed >= 0) flags["run.seed"] = std::to_string(seed);
        const ExperimentConfig cfg = resolve_config(kind, file, flags);
        const Report r = run(cfg, jobs);
        for (const auto& path : emit(r, out_dir, fmt)) std::cout << path << "\n";
        if (r.failed) std::cerr << "stage failed: " << r.doc["failure"]["what"].get<std::string>() << "\n";
        std::cout << (r.pass ? "PASS" : "FAIL") << "\n";
        return r.pass ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
