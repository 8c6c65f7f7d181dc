#pragma once

#include <string>
#include <vector>

#include "fclearn/evolver.hpp"
#include "fclearn/recovery.hpp"

namespace fclearn {

// Final archive with config and data fingerprint. Keys are sorted and numbers
// rendered shortest-round-trip, so equal results serialize to equal bytes.
void write_front_json(const RunResult& result, const std::string& path);

struct FrontFile {
    std::string config_json;
    std::string data_fingerprint;
    std::vector<std::vector<std::string>> entry_keys;  // per entry, per tree
    std::vector<ObjectivePair> objectives;
};

FrontFile load_front_json(const std::string& path);

void write_hv_csv(const RunResult& result, const std::string& path);
void write_log_jsonl(const RunResult& result, const std::string& path);
void write_expressions_txt(const RunResult& result, const std::string& path);

struct HvReportRow {
    std::string run;
    double hypervolume = 0.0;
    std::size_t front_size = 0;
    std::size_t feasible = 0;
};

// Hypervolume of each stored front under one shared normalization (extremes
// of the pooled non-dominated union). Mixing fronts from runs with different
// search settings or data is an error.
std::vector<HvReportRow> hv_report(const std::vector<std::string>& front_paths);

void write_hv_report_csv(const std::vector<HvReportRow>& rows, const std::string& path);

void write_recovery_json(const std::vector<std::string>& run_names,
                         const std::vector<RunRecovery>& runs, const std::string& path);

}  // namespace fclearn
