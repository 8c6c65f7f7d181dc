#include "fclearn/evolver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include <nlohmann/json.hpp>

#include "fclearn/errors.hpp"
#include "fclearn/log.hpp"

namespace fclearn {

void RunConfig::validate() const {
    if (population_size < 2) throw UsageError("population size must be at least 2");
    if (num_trees < 1) throw UsageError("need at least one tree per individual");
    if (tree_height < 1 || tree_height > 10) throw UsageError("tree height must be in [1, 10]");
    if (n_rv < 3) throw UsageError("n_rv must be at least 3");
    if (batch_size < 1) throw UsageError("batch size must be positive");
    if (rv_budget < 1) throw UsageError("rv budget must be positive");
    if (!(cfc_min < cfc_max)) throw UsageError("constant bounds must satisfy min < max");
    if (operators.empty()) throw UsageError("operator set is empty");
    for (Sym op : operators)
        if (is_terminal(op)) throw UsageError("terminals are not allowed in the operator set");
    if (max_generations < 1) throw UsageError("generation cap must be positive");
    if (max_hours <= 0.0) throw UsageError("hour cap must be positive");
    if (threads < 0) throw UsageError("threads must be non-negative");
}

namespace {

std::string template_name(TemplateKind k) {
    return k == TemplateKind::LeftDeep ? "left_deep" : "full";
}

TemplateKind template_from_name(const std::string& name) {
    if (name == "left_deep") return TemplateKind::LeftDeep;
    if (name == "full") return TemplateKind::Full;
    throw UsageError("unknown template '" + name + "'");
}

}  // namespace

std::string RunConfig::to_json() const {
    nlohmann::json j;
    j["population"] = population_size;
    j["height"] = tree_height;
    j["template"] = template_name(template_kind);
    j["trees"] = num_trees;
    j["n_rv"] = n_rv;
    j["batch"] = batch_size;
    j["rv_budget"] = rv_budget;
    j["cfc_min"] = cfc_min;
    j["cfc_max"] = cfc_max;
    std::vector<std::string> ops;
    for (Sym op : operators) ops.emplace_back(sym_token(op));
    j["operators"] = ops;
    j["seed"] = seed;
    j["generations"] = max_generations;
    j["hours"] = max_hours;
    j["threads"] = threads;
    j["fos"] = fos_kind == Fos::Kind::LinkageTree ? "linkage_tree" : "univariate";
    j["use_solution_cache"] = use_solution_cache;
    j["use_subtree_cache"] = use_subtree_cache;
    j["dump_linkage"] = dump_linkage;
    return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw UsageError("config: expected a JSON object");
    RunConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "population") c.population_size = value.get<int>();
            else if (key == "height") c.tree_height = value.get<int>();
            else if (key == "template") c.template_kind = template_from_name(value.get<std::string>());
            else if (key == "trees") c.num_trees = value.get<int>();
            else if (key == "n_rv") c.n_rv = value.get<int>();
            else if (key == "batch") c.batch_size = value.get<int>();
            else if (key == "rv_budget") c.rv_budget = value.get<long>();
            else if (key == "cfc_min") c.cfc_min = value.get<double>();
            else if (key == "cfc_max") c.cfc_max = value.get<double>();
            else if (key == "operators") {
                c.operators.clear();
                for (const auto& tok : value) {
                    auto sym = sym_from_token(tok.get<std::string>());
                    if (!sym || is_terminal(*sym))
                        throw UsageError("config: unknown operator '" + tok.get<std::string>() + "'");
                    c.operators.push_back(*sym);
                }
            } else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "generations") c.max_generations = value.get<int>();
            else if (key == "hours") c.max_hours = value.get<double>();
            else if (key == "threads") c.threads = value.get<int>();
            else if (key == "fos") {
                std::string name = value.get<std::string>();
                if (name == "linkage_tree") c.fos_kind = Fos::Kind::LinkageTree;
                else if (name == "univariate") c.fos_kind = Fos::Kind::Univariate;
                else throw UsageError("config: unknown fos '" + name + "'");
            } else if (key == "use_solution_cache") c.use_solution_cache = value.get<bool>();
            else if (key == "use_subtree_cache") c.use_subtree_cache = value.get<bool>();
            else if (key == "dump_linkage") c.dump_linkage = value.get<bool>();
            else throw UsageError("config: unknown key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    return c;
}

std::string RunConfig::fingerprint(const GlobalDataSet& data) const {
    std::string ids;
    for (const auto& set : data.sets) {
        ids += set.id;
        ids.push_back('\n');
    }
    std::string ops;
    for (Sym op : operators) {
        ops += sym_token(op);
        ops.push_back(' ');
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf), "pop=%d h=%d tpl=%s T=%d nrv=%d B=%d rv=%ld cfc=[%g,%g] fos=%d sets=%d ids=%016llx ops=%016llx",
                  population_size, tree_height, template_name(template_kind).c_str(), num_trees,
                  n_rv, batch_size, rv_budget, cfc_min, cfc_max, static_cast<int>(fos_kind),
                  data.size(), static_cast<unsigned long long>(fnv1a64(ids)),
                  static_cast<unsigned long long>(fnv1a64(ops)));
    return buf;
}

std::optional<TreeSetResult> SolutionCache::lookup(const std::string& key, int set) {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it != entries_.end()) {
        auto jt = it->second.find(set);
        if (jt != it->second.end()) {
            hits_.fetch_add(1, std::memory_order_relaxed);
            return jt->second;
        }
    }
    misses_.fetch_add(1, std::memory_order_relaxed);
    return std::nullopt;
}

void SolutionCache::store(const std::string& key, int set, TreeSetResult result) {
    std::lock_guard lock(mutex_);
    entries_[key].emplace(set, std::move(result));
}

void SolutionCache::clear() {
    std::lock_guard lock(mutex_);
    entries_.clear();
}

long MultiTreeIndividual::total_cfc() const {
    long total = 0;
    for (const auto& tree : trees) total += tree.cfc_count();
    return total;
}

ObjectivePair objectives_from_mse(const std::vector<std::vector<double>>& mse_by_tree,
                                  int violations) {
    if (mse_by_tree.empty() || mse_by_tree.front().empty())
        throw std::invalid_argument("objectives_from_mse: empty matrix");
    const std::size_t n_sets = mse_by_tree.front().size();
    ObjectivePair obj;
    obj.violations = violations;
    for (const auto& row : mse_by_tree) {
        if (row.size() != n_sets) throw std::invalid_argument("objectives_from_mse: ragged matrix");
        double mean = 0.0;
        for (double v : row) mean += v;
        obj.mse_global += mean / static_cast<double>(n_sets);
    }
    for (std::size_t m = 0; m < n_sets; ++m) {
        double best = mse_by_tree[0][m];
        for (const auto& row : mse_by_tree) best = std::min(best, row[m]);
        obj.dmse_global += best;
    }
    obj.dmse_global /= static_cast<double>(n_sets);
    return obj;
}

BatchScheduler::BatchScheduler(int n_sets, int batch_size, std::uint64_t seed)
    : batch_size_(std::min(batch_size, n_sets)), perm_(n_sets), cursor_(n_sets), rng_(seed) {
    if (n_sets < 1) throw std::invalid_argument("BatchScheduler: no sets");
    std::iota(perm_.begin(), perm_.end(), 0);
}

std::vector<int> BatchScheduler::next() {
    std::vector<int> batch;
    batch.reserve(batch_size_);
    while (static_cast<int>(batch.size()) < batch_size_) {
        if (cursor_ == perm_.size()) {
            rng_.shuffle(perm_);
            // Keep this batch free of repeats: anything already chosen sinks
            // to the back of the new pass.
            std::stable_partition(perm_.begin(), perm_.end(), [&](int s) {
                return std::find(batch.begin(), batch.end(), s) == batch.end();
            });
            cursor_ = 0;
        }
        batch.push_back(perm_[cursor_++]);
    }
    std::sort(batch.begin(), batch.end());
    return batch;
}

std::vector<int> dispatch_order(std::span<const long> priorities) {
    std::vector<int> order(priorities.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return priorities[a] > priorities[b]; });
    return order;
}

void run_prioritized(const std::vector<std::function<void()>>& tasks,
                     std::span<const long> priorities, int threads) {
    if (tasks.size() != priorities.size())
        throw std::invalid_argument("run_prioritized: priorities do not match tasks");
    std::vector<int> order = dispatch_order(priorities);
    if (threads <= 1) {
        for (int idx : order) tasks[idx]();
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= order.size()) return;
            try {
                tasks[order[i]]();
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::size_t n_workers = std::min<std::size_t>(threads, tasks.size());
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

FitnessEvaluator::FitnessEvaluator(const GlobalDataSet& data, const RunConfig& config)
    : data_(data), config_(config) {}

TreeSetResult FitnessEvaluator::evaluate_tree_on_set(const ExpressionTree& tree, int set) {
    const std::string& key = tree.key();
    if (config_.use_solution_cache) {
        if (auto cached = solution_cache_.lookup(key, set)) return *cached;
    }

    SubtreeOutputCache* subtree_cache = config_.use_subtree_cache ? &subtree_cache_ : nullptr;
    const SemanticTree& semantic = tree.semantic();
    auto val_ts = data_.validation_ts(set);
    auto val_ys = data_.validation_ys(set);

    TreeSetResult result;
    std::vector<double> val_preds;
    if (tree.cfc_count() == 0) {
        EvalPlan val_plan = make_eval_plan(semantic, val_ts, subtree_cache,
                                           "val:" + data_.sets[set].id);
        val_preds = evaluate(semantic, {}, val_ts, &val_plan);
        EvalPlan grid_plan = make_eval_plan(semantic, constraint_age_grid(), subtree_cache,
                                            "age_grid");
        auto grid_preds = evaluate(semantic, {}, constraint_age_grid(), &grid_plan);
        result.violations = count_violations(grid_preds);
    } else {
        auto train_ts = data_.train_ts(set);
        auto train_ys = data_.train_ys(set);
        RvFitOptions options;
        options.lo = config_.cfc_min;
        options.hi = config_.cfc_max;
        options.budget = config_.rv_budget;
        options.seed = derive_seed(config_.seed, fnv1a64("fit"), fnv1a64(key), set);
        options.subtree_cache = subtree_cache;
        options.data_key = "train:" + data_.sets[set].id;
        RVSolution fit = fit_constants(semantic, train_ts, train_ys, options);
        result.constants = fit.constants;
        result.violations = fit.violations;
        result.rv_evals = fit.evaluations_used;
        val_preds = evaluate(semantic, fit.constants, val_ts);
    }
    double mse = 0.0;
    for (std::size_t i = 0; i < val_preds.size(); ++i) {
        double d = val_preds[i] - val_ys[i];
        mse += d * d;
    }
    result.val_mse = mse / static_cast<double>(val_preds.size());

    rv_evals_.fetch_add(result.rv_evals, std::memory_order_relaxed);
    tree_set_evals_.fetch_add(1, std::memory_order_relaxed);
    if (config_.use_solution_cache) solution_cache_.store(key, set, result);
    return result;
}

void FitnessEvaluator::evaluate_individual(MultiTreeIndividual& ind, std::span<const int> batch) {
    const std::size_t n_trees = ind.trees.size();
    const int n_sets = data_.size();
    if (ind.per_set_mse.size() != n_trees) {
        ind.per_set_mse.assign(n_trees,
                               std::vector<double>(n_sets, std::numeric_limits<double>::quiet_NaN()));
        ind.per_set_constants.assign(n_trees, std::vector<std::vector<double>>(n_sets));
    }
    std::vector<std::vector<double>> batch_mse(n_trees, std::vector<double>(batch.size()));
    int violations = 0;
    for (std::size_t t = 0; t < n_trees; ++t) {
        for (std::size_t b = 0; b < batch.size(); ++b) {
            TreeSetResult res = evaluate_tree_on_set(ind.trees[t], batch[b]);
            batch_mse[t][b] = res.val_mse;
            violations = std::max(violations, res.violations);
            ind.per_set_mse[t][batch[b]] = res.val_mse;
            ind.per_set_constants[t][batch[b]] = std::move(res.constants);
        }
    }
    ind.objectives = objectives_from_mse(batch_mse, violations);
}

ArchiveEntry FitnessEvaluator::entry_from(const MultiTreeIndividual& ind,
                                          std::span<const int> sets, bool full_data) const {
    ArchiveEntry entry;
    entry.trees = ind.trees;
    entry.objectives = ind.objectives;
    entry.full_data = full_data;
    entry.per_set_mse.reserve(ind.trees.size());
    for (std::size_t t = 0; t < ind.trees.size(); ++t) {
        std::vector<double> row;
        row.reserve(sets.size());
        for (int m : sets) row.push_back(ind.per_set_mse[t][m]);
        entry.per_set_mse.push_back(std::move(row));
    }
    return entry;
}

void FitnessEvaluator::next_generation() {
    // Fit results are pure functions of (expression, set) because the fit
    // seed ignores the generation, so the solution cache survives the whole
    // run. The subtree cache holds point vectors and is dropped to bound
    // memory.
    subtree_cache_.clear();
}

namespace {

bool same_objectives(const ObjectivePair& a, const ObjectivePair& b) {
    return a.violations == b.violations && a.mse_global == b.mse_global &&
           a.dmse_global == b.dmse_global;
}

}  // namespace

MultiTreeIndividual gom_pass(const MultiTreeIndividual& individual,
                             const std::vector<MultiTreeIndividual>& population, const Fos& fos,
                             const std::vector<ObjectivePair>& frozen_front,
                             std::span<const int> batch, Rng& rng, FitnessEvaluator& evaluator,
                             std::vector<ArchiveEntry>* candidates,
                             std::vector<GomStep>* trace) {
    const int tree_len = individual.trees.front().tpl().node_count();
    MultiTreeIndividual current = individual;

    std::vector<int> order(fos.subsets.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    for (int j : order) {
        const MultiTreeIndividual& donor = population[rng.index(population.size())];

        // Overwrite the subset's slots with the donor's symbols.
        std::vector<char> tree_changed(current.trees.size(), 0);
        std::vector<std::vector<Sym>> genotypes;
        genotypes.reserve(current.trees.size());
        for (const auto& tree : current.trees) genotypes.push_back(tree.genotype());
        bool changed = false;
        for (int pos : fos.subsets[j]) {
            int t = pos / tree_len;
            int slot = pos % tree_len;
            Sym gene = donor.trees[t].genotype()[slot];
            if (genotypes[t][slot] != gene) {
                genotypes[t][slot] = gene;
                tree_changed[t] = 1;
                changed = true;
            }
        }
        if (!changed) {
            if (trace) trace->push_back({current.objectives, current.objectives, true, false});
            continue;
        }

        MultiTreeIndividual offspring = current;
        bool semantics_changed = false;
        for (std::size_t t = 0; t < offspring.trees.size(); ++t) {
            if (!tree_changed[t]) continue;
            ExpressionTree rebuilt(offspring.trees[t].tpl(), std::move(genotypes[t]));
            if (rebuilt.key() != offspring.trees[t].key()) semantics_changed = true;
            offspring.trees[t] = std::move(rebuilt);
        }
        if (!semantics_changed) {
            // Only introns changed; the expressed function is identical.
            if (trace) trace->push_back({current.objectives, current.objectives, true, false});
            current = std::move(offspring);
            continue;
        }

        evaluator.evaluate_individual(offspring, batch);
        if (candidates) candidates->push_back(evaluator.entry_from(offspring, batch, false));

        bool accept;
        if (constrained_dominates(offspring.objectives, current.objectives)) {
            accept = true;
        } else if (same_objectives(offspring.objectives, current.objectives)) {
            accept = true;
        } else if (constrained_dominates(current.objectives, offspring.objectives)) {
            accept = false;
        } else {
            accept = true;
            for (const auto& member : frozen_front) {
                if (constrained_dominates(member, offspring.objectives)) {
                    accept = false;
                    break;
                }
            }
        }
        if (trace) trace->push_back({current.objectives, offspring.objectives, accept, true});
        if (accept) current = std::move(offspring);
    }
    return current;
}

RunResult run_evolution(const GlobalDataSet& data, const RunConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const int n_sets = data.size();
    const int batch_size = std::min(config.batch_size, n_sets);
    const bool full_batch = batch_size == n_sets;
    const int threads = config.threads > 0
                            ? config.threads
                            : static_cast<int>(std::thread::hardware_concurrency());
    const TreeTemplate tpl(config.template_kind, config.tree_height);
    const int tree_len = tpl.node_count();
    const int genome_len = tree_len * config.num_trees;

    FitnessEvaluator evaluator(data, config);
    std::vector<int> all_sets(n_sets);
    std::iota(all_sets.begin(), all_sets.end(), 0);

    std::vector<MultiTreeIndividual> population(config.population_size);
    for (int i = 0; i < config.population_size; ++i) {
        Rng rng(derive_seed(config.seed, fnv1a64("init"), i));
        for (int t = 0; t < config.num_trees; ++t)
            population[i].trees.push_back(random_tree(rng, tpl, config.operators));
    }

    ParetoArchive persistent(ParetoArchive::Scope::Persistent);
    BatchScheduler batcher(n_sets, batch_size, derive_seed(config.seed, fnv1a64("batch")));

    RunResult result;
    result.config = config;
    result.data_fingerprint = config.fingerprint(data);

    long prev_rv = 0, prev_evals = 0, prev_hits = 0, prev_misses = 0;

    for (int gen = 0; gen < config.max_generations; ++gen) {
        const std::vector<int> batch = batcher.next();

        // Evaluate the parents under this generation's batch.
        {
            std::vector<std::function<void()>> tasks;
            std::vector<long> priorities;
            tasks.reserve(population.size());
            for (auto& ind : population) {
                priorities.push_back(ind.total_cfc());
                tasks.push_back([&ind, &evaluator, &batch] {
                    evaluator.evaluate_individual(ind, batch);
                });
            }
            run_prioritized(tasks, priorities, threads);
        }
        if (config.record_population_objectives) {
            std::vector<ObjectivePair> objs;
            for (const auto& ind : population) objs.push_back(ind.objectives);
            result.population_objectives.push_back(std::move(objs));
        }

        ParetoArchive gen_archive(ParetoArchive::Scope::Generation);
        if (full_batch)
            for (auto& entry : persistent.entries()) gen_archive.insert(std::move(entry));
        for (const auto& ind : population)
            gen_archive.insert(evaluator.entry_from(ind, batch, full_batch));
        const std::vector<ObjectivePair> frozen_front = gen_archive.front();

        // Linkage model over the concatenated genotypes.
        Fos fos;
        if (config.fos_kind == Fos::Kind::Univariate) {
            fos = univariate_fos(genome_len);
        } else {
            std::vector<std::vector<std::uint8_t>> genotypes;
            genotypes.reserve(population.size());
            for (const auto& ind : population) {
                std::vector<std::uint8_t> g;
                g.reserve(genome_len);
                for (const auto& tree : ind.trees)
                    for (Sym s : tree.genotype()) g.push_back(static_cast<std::uint8_t>(s));
                genotypes.push_back(std::move(g));
            }
            std::vector<MergeRecord> merges;
            fos = learn_linkage_tree(genotypes, config.dump_linkage ? &merges : nullptr);
            if (config.dump_linkage) result.linkage_dumps.push_back(std::move(merges));
        }

        // Mixing: parents stay frozen as the donor pool.
        const std::vector<MultiTreeIndividual> donors = population;
        std::vector<MultiTreeIndividual> offspring(population.size());
        std::vector<std::vector<ArchiveEntry>> candidates(population.size());
        {
            std::vector<std::function<void()>> tasks;
            std::vector<long> priorities;
            for (std::size_t i = 0; i < donors.size(); ++i) {
                priorities.push_back(donors[i].total_cfc());
                tasks.push_back([&, i] {
                    Rng rng(derive_seed(config.seed, fnv1a64("gom"), gen, i));
                    offspring[i] = gom_pass(donors[i], donors, fos, frozen_front, batch, rng,
                                            evaluator, &candidates[i]);
                });
            }
            run_prioritized(tasks, priorities, threads);
        }
        population = std::move(offspring);
        for (auto& per_individual : candidates)
            for (auto& entry : per_individual) gen_archive.insert(std::move(entry));

        // Re-evaluate the generation's survivors on every local set and fold
        // them into the never-emptied archive.
        std::vector<ArchiveEntry> gen_entries = gen_archive.entries();
        std::vector<ArchiveEntry> full_entries(gen_entries.size());
        {
            std::vector<std::function<void()>> tasks;
            std::vector<long> priorities;
            for (std::size_t e = 0; e < gen_entries.size(); ++e) {
                long cfc = 0;
                for (const auto& tree : gen_entries[e].trees) cfc += tree.cfc_count();
                priorities.push_back(cfc);
                tasks.push_back([&, e] {
                    MultiTreeIndividual ind;
                    ind.trees = gen_entries[e].trees;
                    evaluator.evaluate_individual(ind, all_sets);
                    full_entries[e] = evaluator.entry_from(ind, all_sets, true);
                });
            }
            run_prioritized(tasks, priorities, threads);
        }
        for (auto& entry : full_entries) persistent.insert(std::move(entry));

        result.hv_fronts.push_back(persistent.front());

        GenerationLog log;
        log.generation = gen;
        log.batch = batch;
        log.rv_evals = evaluator.rv_evals().load() - prev_rv;
        log.tree_set_evals = evaluator.tree_set_evals().load() - prev_evals;
        log.cache_hits = evaluator.solution_cache().hits() - prev_hits;
        log.cache_misses = evaluator.solution_cache().misses() - prev_misses;
        prev_rv += log.rv_evals;
        prev_evals += log.tree_set_evals;
        prev_hits += log.cache_hits;
        prev_misses += log.cache_misses;
        log.generation_archive = gen_entries.size();
        log.persistent_archive = persistent.size();
        log.elapsed_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.logs.push_back(log);
        log_info("generation %d: batch %zu sets, archive %zu, %ld rv evals, %.1fs", gen,
                 batch.size(), persistent.size(), log.rv_evals, log.elapsed_seconds);

        evaluator.next_generation();
        if (log.elapsed_seconds > config.max_hours * 3600.0) break;
    }

    result.front = persistent.entries();
    std::sort(result.front.begin(), result.front.end(),
              [](const ArchiveEntry& a, const ArchiveEntry& b) {
                  auto ka = std::tuple(a.objectives.violations, a.objectives.mse_global,
                                       a.objectives.dmse_global, a.keys());
                  auto kb = std::tuple(b.objectives.violations, b.objectives.mse_global,
                                       b.objectives.dmse_global, b.keys());
                  return ka < kb;
              });

    // Hypervolume trajectory, normalized once against the final front so the
    // series is comparable across generations.
    std::vector<ObjectivePair> final_feasible;
    for (const auto& p : persistent.front())
        if (p.violations == 0) final_feasible.push_back(p);
    result.hv_series.reserve(result.hv_fronts.size());
    if (final_feasible.empty()) {
        result.hv_series.assign(result.hv_fronts.size(), 0.0);
    } else {
        NormBounds bounds = normalization_bounds({final_feasible});
        for (const auto& front : result.hv_fronts) {
            std::vector<ObjectivePair> feasible;
            for (const auto& p : front)
                if (p.violations == 0) feasible.push_back(p);
            result.hv_series.push_back(hypervolume(feasible, bounds));
        }
    }
    for (std::size_t g = 0; g < result.hv_series.size(); ++g)
        result.logs[g].hypervolume = result.hv_series[g];
    return result;
}

}  // namespace fclearn
