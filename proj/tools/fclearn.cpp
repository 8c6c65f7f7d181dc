#include <charconv>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fclearn/dataset.hpp"
#include "fclearn/errors.hpp"
#include "fclearn/evolver.hpp"
#include "fclearn/log.hpp"
#include "fclearn/recovery.hpp"
#include "fclearn/report.hpp"
#include "fclearn/rvopt.hpp"

namespace fs = std::filesystem;
using namespace fclearn;

namespace {

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        std::string field = text.substr(pos, comma - pos);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc{} || ptr != field.data() + field.size())
            throw UsageError(std::string(what) + ": bad number '" + field + "'");
        out.push_back(v);
        pos = comma + 1;
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw DataError("cannot read '" + path + "'");
    std::string text;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) text.append(buf, n);
    std::fclose(f);
    return text;
}

int cmd_generate(int sets, int points, double noise, std::uint64_t seed, int n_rv,
                 const std::string& out_dir) {
    if (sets < 1) throw UsageError("--sets must be positive");
    if (points < n_rv + 1)
        throw UsageError("--points must be at least n_rv + 1 so every set is usable");
    if (noise < 0.0) throw UsageError("--noise must be non-negative");
    auto specs = sample_truth_specs(sets, points, seed);
    GlobalDataSet data = generate_synthetic(specs, noise, seed, n_rv);
    fs::create_directories(out_dir);
    std::string csv = out_dir + "/data.csv";
    std::string truth = out_dir + "/truth.json";
    save_global_csv(data, csv);
    save_truth_json(specs, truth);
    std::printf("wrote %d sets (%d points each, noise %g) to %s and %s\n", data.size(), points,
                noise, csv.c_str(), truth.c_str());
    return 0;
}

int cmd_run(RunConfig config, const std::string& data_path, const std::string& out_dir) {
    std::vector<std::string> notes;
    GlobalDataSet data = load_global(data_path, config.n_rv, &notes);
    for (const auto& note : notes) log_info("%s", note.c_str());

    RunResult result = run_evolution(data, config);

    fs::create_directories(out_dir);
    write_front_json(result, out_dir + "/front.json");
    write_hv_csv(result, out_dir + "/hv.csv");
    write_log_jsonl(result, out_dir + "/log.jsonl");
    write_expressions_txt(result, out_dir + "/expressions.txt");

    double final_hv = result.hv_series.empty() ? 0.0 : result.hv_series.back();
    double elapsed = result.logs.empty() ? 0.0 : result.logs.back().elapsed_seconds;
    std::printf("%zu generations, front size %zu, hypervolume %.6f, %.1fs\n",
                result.logs.size(), result.front.size(), final_hv, elapsed);
    std::printf("outputs in %s: front.json hv.csv log.jsonl expressions.txt\n", out_dir.c_str());
    return 0;
}

int cmd_fit(const std::string& expr, const std::string& data_path, int n_rv, long budget,
            std::uint64_t seed, const std::string& json_out) {
    SemanticTree tree = parse_expression(expr);
    std::vector<std::string> notes;
    GlobalDataSet data = load_global(data_path, n_rv, &notes);
    for (const auto& note : notes) log_info("%s", note.c_str());

    nlohmann::json report = nlohmann::json::array();
    for (int m = 0; m < data.size(); ++m) {
        auto train_ts = data.train_ts(m);
        auto train_ys = data.train_ys(m);
        auto val_ts = data.validation_ts(m);
        auto val_ys = data.validation_ys(m);

        std::vector<double> constants;
        double train_mse = 0.0;
        int violations = 0;
        if (tree.cfc_count() == 0) {
            auto preds = evaluate(tree, {}, train_ts);
            for (std::size_t i = 0; i < preds.size(); ++i) {
                double d = preds[i] - train_ys[i];
                train_mse += d * d;
            }
            train_mse /= static_cast<double>(preds.size());
            violations = check_constraints(tree, {});
        } else {
            RvFitOptions options;
            options.budget = budget;
            options.seed = derive_seed(seed, fnv1a64(data.sets[m].id));
            RVSolution fit = fit_constants(tree, train_ts, train_ys, options);
            constants = fit.constants;
            train_mse = fit.train_mse;
            violations = fit.violations;
        }
        auto val_preds = evaluate(tree, constants, val_ts);
        double val_mse = 0.0;
        for (std::size_t i = 0; i < val_preds.size(); ++i) {
            double d = val_preds[i] - val_ys[i];
            val_mse += d * d;
        }
        val_mse /= static_cast<double>(val_preds.size());

        std::printf("%s: train_mse=%.6g val_mse=%.6g violations=%d constants=[",
                    data.sets[m].id.c_str(), train_mse, val_mse, violations);
        for (std::size_t k = 0; k < constants.size(); ++k)
            std::printf("%s%.6g", k ? ", " : "", constants[k]);
        std::printf("]\n");

        nlohmann::json row;
        row["set_id"] = data.sets[m].id;
        row["constants"] = constants;
        row["train_mse"] = train_mse;
        row["val_mse"] = val_mse;
        row["violations"] = violations;
        report.push_back(row);
    }
    if (!json_out.empty()) {
        std::FILE* f = std::fopen(json_out.c_str(), "wb");
        if (!f) throw DataError("cannot write '" + json_out + "'");
        std::string text = report.dump(2);
        std::fwrite(text.data(), 1, text.size(), f);
        std::fputc('\n', f);
        std::fclose(f);
    }
    return 0;
}

int cmd_predict(const std::string& expr, const std::string& constants_text,
                const std::string& ages_text) {
    SemanticTree tree = parse_expression(expr);
    std::vector<double> constants;
    if (!constants_text.empty()) constants = parse_double_list(constants_text, "--constants");
    if (static_cast<int>(constants.size()) != tree.cfc_count())
        throw UsageError("expression has " + std::to_string(tree.cfc_count()) +
                         " constants, got " + std::to_string(constants.size()));
    std::vector<double> ages = parse_double_list(ages_text, "--ages");
    auto preds = evaluate(tree, constants, ages);
    std::printf("t,y\n");
    for (std::size_t i = 0; i < ages.size(); ++i) std::printf("%g,%.10g\n", ages[i], preds[i]);
    return 0;
}

int cmd_recovery(const std::vector<std::string>& fronts, bool behavioral, std::uint64_t seed,
                 const std::string& out) {
    std::vector<RunRecovery> runs;
    for (const auto& path : fronts) {
        FrontFile f = load_front_json(path);
        RunRecovery rec = scan_front(f.entry_keys);
        if (behavioral && (!rec.found_logistic || !rec.found_gompertz)) {
            for (const auto& entry : f.entry_keys) {
                for (const auto& key : entry) {
                    SemanticTree tree = parse_expression(key);
                    if (!rec.found_logistic &&
                        behavioral_match(tree, ClassTag::Logistic, seed)) {
                        rec.found_logistic = true;
                        rec.logistic_keys.push_back(key);
                    }
                    if (!rec.found_gompertz &&
                        behavioral_match(tree, ClassTag::Gompertz, seed)) {
                        rec.found_gompertz = true;
                        rec.gompertz_keys.push_back(key);
                    }
                }
            }
        }
        std::printf("%s: logistic=%s gompertz=%s\n", path.c_str(),
                    rec.found_logistic ? "yes" : "no", rec.found_gompertz ? "yes" : "no");
        runs.push_back(std::move(rec));
    }
    RecoveryHistogram h = count_recoveries(runs);
    std::printf("recovered over %d runs: logistic %d, gompertz %d, both %d\n", h.runs,
                h.logistic, h.gompertz, h.both);
    if (!out.empty()) write_recovery_json(fronts, runs, out);
    return 0;
}

int cmd_hv_report(const std::vector<std::string>& fronts, const std::string& out) {
    auto rows = hv_report(fronts);
    std::printf("run,hypervolume,front_size,feasible\n");
    for (const auto& row : rows)
        std::printf("%s,%.6f,%zu,%zu\n", row.run.c_str(), row.hypervolume, row.front_size,
                    row.feasible);
    if (!out.empty()) write_hv_report_csv(rows, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learns parameterized function classes over collections of growth curves"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Sample synthetic growth data with ground truth");
    int gen_sets = 16, gen_points = 6, gen_nrv = 4;
    double gen_noise = 0.0;
    std::uint64_t gen_seed = 1;
    std::string gen_out = ".";
    gen->add_option("--sets", gen_sets, "number of local sets");
    gen->add_option("--points", gen_points, "points per set");
    gen->add_option("--noise", gen_noise, "multiplicative noise sigma");
    gen->add_option("--seed", gen_seed, "random seed");
    gen->add_option("--nrv", gen_nrv, "points reserved for constant fitting");
    gen->add_option("--out", gen_out, "output directory");

    // run
    auto* run = app.add_subcommand("run", "Evolve function classes on a data set");
    std::string run_config, run_data, run_out = ".";
    RunConfig flags;
    run->add_option("--config", run_config, "JSON config file");
    run->add_option("--data", run_data, "data CSV")->required();
    run->add_option("--out", run_out, "output directory");
    auto* f_seed = run->add_option("--seed", flags.seed, "random seed");
    auto* f_threads = run->add_option("--threads", flags.threads, "worker threads (0 = all)");
    auto* f_pop = run->add_option("--pop", flags.population_size, "population size");
    auto* f_trees = run->add_option("--trees", flags.num_trees, "trees per individual");
    auto* f_height = run->add_option("--height", flags.tree_height, "template height");
    auto* f_batch = run->add_option("--batch", flags.batch_size, "sets per generation");
    auto* f_nrv = run->add_option("--nrv", flags.n_rv, "points reserved for constant fitting");
    auto* f_budget = run->add_option("--rv-budget", flags.rv_budget, "evaluations per constant fit");
    auto* f_gens = run->add_option("--generations", flags.max_generations, "generation cap");
    auto* f_hours = run->add_option("--hours", flags.max_hours, "wall clock cap");
    auto* f_dump = run->add_flag("--dump-linkage", flags.dump_linkage, "record linkage merges");

    // fit
    auto* fit = app.add_subcommand("fit", "Refit an expression's constants to local sets");
    std::string fit_expr, fit_data, fit_json;
    int fit_nrv = 3;
    long fit_budget = 50000;
    std::uint64_t fit_seed = 1;
    fit->add_option("--expr", fit_expr, "expression (infix)")->required();
    fit->add_option("--data", fit_data, "data CSV")->required();
    fit->add_option("--nrv", fit_nrv, "points reserved for constant fitting");
    fit->add_option("--rv-budget", fit_budget, "evaluations per constant fit");
    fit->add_option("--seed", fit_seed, "random seed");
    fit->add_option("--json", fit_json, "also write results as JSON");

    // predict
    auto* pred = app.add_subcommand("predict", "Evaluate an expression at given ages");
    std::string pred_expr, pred_constants, pred_ages;
    pred->add_option("--expr", pred_expr, "expression (infix)")->required();
    pred->add_option("--constants", pred_constants, "comma-separated constant values");
    pred->add_option("--ages", pred_ages, "comma-separated ages")->required();

    // recovery
    auto* rec = app.add_subcommand("recovery", "Check fronts for known growth classes");
    std::vector<std::string> rec_fronts;
    std::string rec_out;
    bool rec_behavioral = false;
    std::uint64_t rec_seed = 1;
    rec->add_option("--front", rec_fronts, "front.json paths")->required();
    rec->add_option("--out", rec_out, "write recovery.json here");
    rec->add_flag("--behavioral", rec_behavioral, "also refit unmatched expressions to probes");
    rec->add_option("--seed", rec_seed, "seed for behavioral probes");

    // hv-report
    auto* hvr = app.add_subcommand("hv-report", "Hypervolume table over comparable fronts");
    std::vector<std::string> hvr_fronts;
    std::string hvr_out;
    hvr->add_option("--front", hvr_fronts, "front.json paths")->required();
    hvr->add_option("--out", hvr_out, "write CSV here");

    try {
        app.parse(argc, argv);

        if (gen->parsed())
            return cmd_generate(gen_sets, gen_points, gen_noise, gen_seed, gen_nrv, gen_out);
        if (run->parsed()) {
            RunConfig config;
            if (!run_config.empty()) config = RunConfig::from_json(read_file(run_config));
            if (f_seed->count()) config.seed = flags.seed;
            if (f_threads->count()) config.threads = flags.threads;
            if (f_pop->count()) config.population_size = flags.population_size;
            if (f_trees->count()) config.num_trees = flags.num_trees;
            if (f_height->count()) config.tree_height = flags.tree_height;
            if (f_batch->count()) config.batch_size = flags.batch_size;
            if (f_nrv->count()) config.n_rv = flags.n_rv;
            if (f_budget->count()) config.rv_budget = flags.rv_budget;
            if (f_gens->count()) config.max_generations = flags.max_generations;
            if (f_hours->count()) config.max_hours = flags.max_hours;
            if (f_dump->count()) config.dump_linkage = flags.dump_linkage;
            config.validate();
            return cmd_run(config, run_data, run_out);
        }
        if (fit->parsed())
            return cmd_fit(fit_expr, fit_data, fit_nrv, fit_budget, fit_seed, fit_json);
        if (pred->parsed()) return cmd_predict(pred_expr, pred_constants, pred_ages);
        if (rec->parsed()) return cmd_recovery(rec_fronts, rec_behavioral, rec_seed, rec_out);
        if (hvr->parsed()) return cmd_hv_report(hvr_fronts, hvr_out);
        return 1;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime error: %s\n", e.what());
        return 3;
    }
}
