#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ionkit/config.hpp"
#include "ionkit/dynamics.hpp"
#include "ionkit/types.hpp"

namespace ionkit {

inline constexpr const char* kReportSchema = "ionkit.report/1";

struct CsvTable {
    std::string name;                          // file stem
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

struct Report {
    nlohmann::ordered_json doc;   // schema, kind, config, results, checks, pass, failure
    std::vector<CsvTable> tables;
    bool pass = false;
    bool failed = false;          // a pipeline stage threw; doc["failure"] names it
    double wall_seconds = 0.0;    // kept out of doc
};

// Dispatches to the pipeline named by c.kind. Exceptions inside the pipeline become a failure record.
Report run(const ExperimentConfig& c, int jobs = 1);

enum class Format { Json, Csv };
Format parse_format(const std::string& s);

// Writes <out>/<kind>.json or one <out>/<kind>_<table>.csv per table (plus <kind>_checks.csv), and
// always <out>/<kind>.timing.json. Returns the written paths; throws std::runtime_error naming the path.
std::vector<std::string> emit(const Report& r, const std::string& out_dir, Format f);

// Deterministic text forms.
std::string report_json_text(const Report& r);
std::string csv_text(const CsvTable& t);
CsvTable series_table(const std::string& name, const TimeSeries& s, bool ergodic = false);

void to_json(nlohmann::ordered_json& j, const BoundReport& b);
void from_json(const nlohmann::ordered_json& j, BoundReport& b);
void to_json(nlohmann::ordered_json& j, const TimeSeries& s);
void from_json(const nlohmann::ordered_json& j, TimeSeries& s);

}  // namespace ionkit
