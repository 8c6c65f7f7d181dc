#include "fclearn/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fclearn/errors.hpp"

namespace fclearn {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    return out;
}

nlohmann::json entry_to_json(const ArchiveEntry& entry) {
    nlohmann::json j;
    j["violations"] = entry.objectives.violations;
    j["mse_global"] = entry.objectives.mse_global;
    j["dmse_global"] = entry.objectives.dmse_global;
    j["trees"] = entry.keys();
    j["per_set_mse"] = entry.per_set_mse;
    return j;
}

}  // namespace

void write_front_json(const RunResult& result, const std::string& path) {
    nlohmann::json j;
    j["config"] = nlohmann::json::parse(result.config.to_json());
    j["data_fingerprint"] = result.data_fingerprint;
    j["front"] = nlohmann::json::array();
    for (const auto& entry : result.front) j["front"].push_back(entry_to_json(entry));
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

FrontFile load_front_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    FrontFile f;
    try {
        f.config_json = j.at("config").dump(2);
        f.data_fingerprint = j.at("data_fingerprint").get<std::string>();
        for (const auto& entry : j.at("front")) {
            f.entry_keys.push_back(entry.at("trees").get<std::vector<std::string>>());
            ObjectivePair obj;
            obj.mse_global = entry.at("mse_global").get<double>();
            obj.dmse_global = entry.at("dmse_global").get<double>();
            obj.violations = entry.at("violations").get<int>();
            f.objectives.push_back(obj);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    return f;
}

void write_hv_csv(const RunResult& result, const std::string& path) {
    auto out = open_out(path);
    out << "generation,hypervolume\n";
    for (std::size_t g = 0; g < result.hv_series.size(); ++g)
        out << g << ',' << fmt_double(result.hv_series[g]) << '\n';
}

void write_log_jsonl(const RunResult& result, const std::string& path) {
    auto out = open_out(path);
    for (const auto& log : result.logs) {
        nlohmann::json j;
        j["generation"] = log.generation;
        j["batch"] = log.batch;
        j["rv_evals"] = log.rv_evals;
        j["tree_set_evals"] = log.tree_set_evals;
        j["cache_hits"] = log.cache_hits;
        j["cache_misses"] = log.cache_misses;
        j["generation_archive"] = log.generation_archive;
        j["persistent_archive"] = log.persistent_archive;
        j["hypervolume"] = log.hypervolume;
        j["elapsed_seconds"] = log.elapsed_seconds;
        out << j.dump() << '\n';
    }
}

void write_expressions_txt(const RunResult& result, const std::string& path) {
    auto out = open_out(path);
    for (std::size_t i = 0; i < result.front.size(); ++i) {
        const auto& entry = result.front[i];
        out << '[' << i << "] violations=" << entry.objectives.violations
            << " mse=" << fmt_double(entry.objectives.mse_global)
            << " dmse=" << fmt_double(entry.objectives.dmse_global) << '\n';
        auto keys = entry.keys();
        for (std::size_t t = 0; t < keys.size(); ++t)
            out << "  tree " << t << ": " << keys[t] << '\n';
    }
}

std::vector<HvReportRow> hv_report(const std::vector<std::string>& front_paths) {
    if (front_paths.empty()) throw UsageError("hv-report: no fronts given");
    std::vector<FrontFile> files;
    files.reserve(front_paths.size());
    for (const auto& path : front_paths) files.push_back(load_front_json(path));
    for (const auto& f : files)
        if (f.data_fingerprint != files.front().data_fingerprint)
            throw UsageError("hv-report: fronts come from different configurations");

    std::vector<std::vector<ObjectivePair>> feasible_fronts;
    for (const auto& f : files) {
        std::vector<ObjectivePair> feasible;
        for (const auto& obj : f.objectives)
            if (obj.violations == 0) feasible.push_back(obj);
        feasible_fronts.push_back(std::move(feasible));
    }
    NormBounds bounds = normalization_bounds(feasible_fronts);

    std::vector<HvReportRow> rows;
    for (std::size_t i = 0; i < files.size(); ++i) {
        HvReportRow row;
        row.run = front_paths[i];
        row.front_size = files[i].objectives.size();
        row.feasible = feasible_fronts[i].size();
        row.hypervolume = hypervolume(feasible_fronts[i], bounds);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_hv_report_csv(const std::vector<HvReportRow>& rows, const std::string& path) {
    auto out = open_out(path);
    out << "run,hypervolume,front_size,feasible\n";
    for (const auto& row : rows)
        out << row.run << ',' << fmt_double(row.hypervolume) << ',' << row.front_size << ','
            << row.feasible << '\n';
}

void write_recovery_json(const std::vector<std::string>& run_names,
                         const std::vector<RunRecovery>& runs, const std::string& path) {
    if (run_names.size() != runs.size())
        throw std::invalid_argument("write_recovery_json: names do not match runs");
    nlohmann::json j;
    j["runs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        nlohmann::json r;
        r["run"] = run_names[i];
        r["found_logistic"] = runs[i].found_logistic;
        r["found_gompertz"] = runs[i].found_gompertz;
        r["logistic_keys"] = runs[i].logistic_keys;
        r["gompertz_keys"] = runs[i].gompertz_keys;
        j["runs"].push_back(r);
    }
    RecoveryHistogram h = count_recoveries(runs);
    j["histogram"] = {{"runs", h.runs},
                      {"logistic", h.logistic},
                      {"gompertz", h.gompertz},
                      {"both", h.both}};
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

}  // namespace fclearn
