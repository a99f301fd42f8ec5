#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ionkit/dynamics.hpp"
#include "ionkit/feshbach.hpp"
#include "ionkit/flows.hpp"
#include "ionkit/model.hpp"

namespace ionkit {

enum class ExperimentKind { Fgr, BoundChain, FeshbachFuzz, FlowCheck, VirialScan, Dynamics, Gjn, Lambda0Scan };

const std::vector<ExperimentKind>& all_kinds();
std::string kind_name(ExperimentKind k);
// Throws ConfigError on an unknown name.
ExperimentKind parse_kind(const std::string& name);

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

// Flat dotted keys. Lines are `key = value`; `#` starts a comment; blank lines are ignored.
using ConfigMap = std::map<std::string, std::string>;
ConfigMap parse_config_text(const std::string& text, const std::string& origin = "<text>");
ConfigMap read_config_file(const std::string& path);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Fgr;
    ModelParams model;
    std::string form_factor = "default";
    std::string kernel = "default";
    std::uint64_t seed = 12345;

    std::vector<double> fgr_eps{0.2, 0.1, 0.05, 0.025};
    std::vector<double> fgr_betas{1.0, 2.0, 4.0};

    ChainOptions chain;
    std::vector<double> scan_lambdas{0.001, 0.002, 0.005, 0.01, 0.02, 0.05};
    std::vector<double> scan_betas{0.5, 1.0, 2.0};

    int fuzz_cases = 200;
    double fuzz_tol = 1e-10;

    FlowCheckOptions flow;

    int virial_pairs = 10;
    std::vector<double> virial_alphas{0.4, 0.2, 0.1, 0.05, 0.025, 0.0125};
    double virial_lanczos_tol = 1e-10;

    IonizationOptions dynamics;
};

// Defaults for a kind before any file or flag is applied.
ExperimentConfig default_config(ExperimentKind kind);

// Precedence: flags > file > kind defaults. Unknown keys and unparsable values throw ConfigError naming the key.
ExperimentConfig resolve_config(ExperimentKind kind, const ConfigMap& file, const ConfigMap& flags);

// Every key with its resolved value, in a fixed order.
nlohmann::ordered_json config_echo(const ExperimentConfig& c);

// Names of all recognised keys.
std::vector<std::string> config_keys();

}  // namespace ionkit
