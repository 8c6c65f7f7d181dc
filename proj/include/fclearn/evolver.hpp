#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fclearn/dataset.hpp"
#include "fclearn/expr.hpp"
#include "fclearn/linkage.hpp"
#include "fclearn/moo.hpp"
#include "fclearn/rvopt.hpp"

namespace fclearn {

struct RunConfig {
    int population_size = 1000;
    int tree_height = 4;
    TemplateKind template_kind = TemplateKind::LeftDeep;
    int num_trees = 2;
    int n_rv = 4;
    int batch_size = 16;
    long rv_budget = 500000;
    double cfc_min = -10000.0;
    double cfc_max = 10000.0;
    std::vector<Sym> operators = all_operators();
    std::uint64_t seed = 1;
    int max_generations = 1000000;
    double max_hours = 120.0;
    int threads = 0;  // 0 = all hardware threads
    Fos::Kind fos_kind = Fos::Kind::LinkageTree;
    bool use_solution_cache = true;
    bool use_subtree_cache = true;
    bool record_population_objectives = false;  // diagnostic hook
    bool dump_linkage = false;

    void validate() const;  // throws UsageError
    std::string to_json() const;
    static RunConfig from_json(const std::string& text);

    // Identifies comparable runs (everything influencing the search except
    // seed, thread count, and termination caps).
    std::string fingerprint(const GlobalDataSet& data) const;
};

// One fitted tree on one local set.
struct TreeSetResult {
    double val_mse = 0.0;
    int violations = 0;
    std::vector<double> constants;
    long rv_evals = 0;
};

// Run-scoped store of per-set results keyed by expression. Safe for
// concurrent use; racing writers compute identical values (fits are seeded by
// expression and set), so lost updates cost time, not accuracy.
class SolutionCache {
  public:
    std::optional<TreeSetResult> lookup(const std::string& key, int set);
    void store(const std::string& key, int set, TreeSetResult result);
    void clear();
    long hits() const { return hits_.load(); }
    long misses() const { return misses_.load(); }

  private:
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::unordered_map<int, TreeSetResult>> entries_;
    std::atomic<long> hits_{0};
    std::atomic<long> misses_{0};
};

struct MultiTreeIndividual {
    std::vector<ExpressionTree> trees;
    // Per tree, per local set; NaN / empty where the set was not evaluated.
    std::vector<std::vector<double>> per_set_mse;
    std::vector<std::vector<std::vector<double>>> per_set_constants;
    ObjectivePair objectives;

    long total_cfc() const;
};

// MSE_global = sum over trees of the mean per-set MSE; DMSE_global = mean
// over sets of the best tree's MSE.
ObjectivePair objectives_from_mse(const std::vector<std::vector<double>>& mse_by_tree,
                                  int violations);

// Cycles through shuffled passes over the set indices so every set is used
// equally often; batches never repeat a set.
class BatchScheduler {
  public:
    BatchScheduler(int n_sets, int batch_size, std::uint64_t seed);
    std::vector<int> next();

  private:
    int batch_size_;
    std::vector<int> perm_;
    std::size_t cursor_;
    Rng rng_;
};

// Descending priority, ties by index: the dispatch order of the parallel
// evaluation queue (constant-heavy expressions first).
std::vector<int> dispatch_order(std::span<const long> priorities);

// Runs tasks over a shared queue in dispatch order. threads <= 1 executes
// exactly in that order on the calling thread.
void run_prioritized(const std::vector<std::function<void()>>& tasks,
                     std::span<const long> priorities, int threads);

struct GenerationLog {
    int generation = 0;
    std::vector<int> batch;
    long rv_evals = 0;
    long tree_set_evals = 0;
    long cache_hits = 0;
    long cache_misses = 0;
    std::size_t generation_archive = 0;
    std::size_t persistent_archive = 0;
    double hypervolume = 0.0;  // filled once final bounds are known
    double elapsed_seconds = 0.0;
};

struct RunResult {
    RunConfig config;
    std::vector<ArchiveEntry> front;             // persistent archive at the end
    std::vector<std::vector<ObjectivePair>> hv_fronts;  // persistent front per generation
    std::vector<double> hv_series;               // normalized against the final front
    std::vector<GenerationLog> logs;
    std::vector<std::vector<ObjectivePair>> population_objectives;  // per gen, if recorded
    std::vector<std::vector<MergeRecord>> linkage_dumps;            // per gen, if recorded
    std::string data_fingerprint;
};

// Evaluates every tree of the individual on the given sets (constants refit
// per set), filling per-set state and batch objectives.
class FitnessEvaluator {
  public:
    FitnessEvaluator(const GlobalDataSet& data, const RunConfig& config);

    TreeSetResult evaluate_tree_on_set(const ExpressionTree& tree, int set);
    void evaluate_individual(MultiTreeIndividual& ind, std::span<const int> batch);
    ArchiveEntry entry_from(const MultiTreeIndividual& ind, std::span<const int> batch,
                            bool full_data) const;

    void next_generation();  // empties the generation-scoped subtree cache
    SolutionCache& solution_cache() { return solution_cache_; }
    std::atomic<long>& rv_evals() { return rv_evals_; }
    std::atomic<long>& tree_set_evals() { return tree_set_evals_; }

  private:
    const GlobalDataSet& data_;
    const RunConfig& config_;
    SolutionCache solution_cache_;
    SubtreeOutputCache subtree_cache_;
    std::atomic<long> rv_evals_{0};
    std::atomic<long> tree_set_evals_{0};
};

struct GomStep {
    ObjectivePair before;
    ObjectivePair after;
    bool accepted = false;
    bool evaluated = false;
};

// One gene-pool optimal mixing pass: for each FOS subset (fresh random
// order), overwrite the subset with a random donor's genes and keep the
// change iff the offspring constrained-dominates the backup, ties it exactly,
// or is mutually non-dominating with it while not constrained-dominated by
// the generation front frozen at the start of the pass.
MultiTreeIndividual gom_pass(const MultiTreeIndividual& individual,
                             const std::vector<MultiTreeIndividual>& population, const Fos& fos,
                             const std::vector<ObjectivePair>& frozen_front,
                             std::span<const int> batch, Rng& rng, FitnessEvaluator& evaluator,
                             std::vector<ArchiveEntry>* candidates = nullptr,
                             std::vector<GomStep>* trace = nullptr);

RunResult run_evolution(const GlobalDataSet& data, const RunConfig& config);

}  // namespace fclearn
