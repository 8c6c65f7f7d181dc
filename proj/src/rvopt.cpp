#include "fclearn/rvopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fclearn {

namespace {

constexpr double kSelectionFraction = 0.35;
constexpr double kMultiplierDecrease = 0.9;
constexpr double kMultiplierFloor = 1e-6;
constexpr double kSdrThreshold = 1.0;
constexpr double kAmsScale = 2.0;
constexpr double kAmsFraction = 0.5;
constexpr double kMseFloor = 1e-12;
constexpr int kUnivariateLimit = 5;

}  // namespace

bool rv_better(const RvIndividual& a, const RvIndividual& b) {
    if (a.violations != b.violations) return a.violations < b.violations;
    return a.mse < b.mse;
}

GaussianModel estimate_model(const std::vector<RvIndividual>& population,
                             double selection_fraction, const Fos& fos) {
    if (population.size() < 3)
        throw std::invalid_argument("estimate_model: population too small");
    std::vector<int> order(population.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return rv_better(population[a], population[b]);
    });
    const int n_sel = std::max(
        1, static_cast<int>(selection_fraction * static_cast<double>(population.size())));
    const int dims = static_cast<int>(population.front().x.size());

    GaussianModel model;
    model.selection_mean.assign(dims, 0.0);
    for (int s = 0; s < n_sel; ++s)
        for (int d = 0; d < dims; ++d) model.selection_mean[d] += population[order[s]].x[d];
    for (double& v : model.selection_mean) v /= n_sel;
    model.ams_shift.assign(dims, 0.0);

    Eigen::VectorXd diff;
    for (const auto& subset : fos.subsets) {
        ElementModel elem;
        elem.indices = subset;
        const int k = static_cast<int>(subset.size());
        elem.mean = Eigen::VectorXd::Zero(k);
        for (int s = 0; s < n_sel; ++s)
            for (int d = 0; d < k; ++d) elem.mean(d) += population[order[s]].x[subset[d]];
        elem.mean /= n_sel;

        elem.cov = Eigen::MatrixXd::Zero(k, k);
        diff.resize(k);
        for (int s = 0; s < n_sel; ++s) {
            for (int d = 0; d < k; ++d) diff(d) = population[order[s]].x[subset[d]] - elem.mean(d);
            elem.cov += diff * diff.transpose();
        }
        elem.cov /= n_sel;

        Eigen::LLT<Eigen::MatrixXd> llt(elem.cov);
        if (llt.info() != Eigen::Success) {
            Eigen::MatrixXd reg = elem.cov + 1e-10 * Eigen::MatrixXd::Identity(k, k);
            llt.compute(reg);
        }
        if (llt.info() == Eigen::Success) {
            elem.chol = llt.matrixL();
        } else {
            elem.chol = Eigen::MatrixXd::Zero(k, k);
            for (int d = 0; d < k; ++d) elem.chol(d, d) = std::sqrt(elem.cov(d, d) + 1e-10);
        }
        model.elements.push_back(std::move(elem));
    }
    return model;
}

RvIndividual sample_and_improve(RvIndividual individual, const GaussianModel& model, double lo,
                                double hi, const RvIndividual& elitist, const RvEvalFn& eval,
                                Rng& rng, AvsFeedback* feedback) {
    const std::size_t n_elements = model.elements.size();
    if (feedback && feedback->improved.size() != n_elements) {
        feedback->improved.assign(n_elements, 0);
        feedback->sdr.assign(n_elements, 0.0);
    }

    // Proposals mutate the individual in place and roll back on rejection;
    // these per-thread buffers keep the inner loop allocation-free.
    thread_local std::vector<int> order;
    thread_local std::vector<double> draw;
    thread_local std::vector<double> saved;
    order.resize(n_elements);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    bool any_strict = false;
    for (int j : order) {
        const ElementModel& elem = model.elements[j];
        const int k = static_cast<int>(elem.indices.size());

        draw.resize(k);
        for (int d = 0; d < k; ++d) draw[d] = rng.normal();
        const double scale = std::sqrt(elem.multiplier);
        bool with_ams = rng.uniform01() < kAmsFraction;

        saved.resize(k);
        for (int d = 0; d < k; ++d) {
            double step = 0.0;
            for (int e = 0; e <= d; ++e) step += elem.chol(d, e) * draw[e];
            double v = elem.mean(d) + scale * step;
            if (with_ams) v += kAmsScale * model.ams_shift[elem.indices[d]];
            saved[d] = individual.x[elem.indices[d]];
            individual.x[elem.indices[d]] = std::clamp(v, lo, hi);
        }
        // individual.mse / .violations still hold the pre-proposal fitness,
        // so the individual itself serves as the incumbent for the hook.
        auto result = eval(individual.x, &individual);
        if (!result) {  // budget spent mid-pass
            for (int d = 0; d < k; ++d) individual.x[elem.indices[d]] = saved[d];
            return individual;
        }
        const double mse = result->first;
        const int violations = result->second;

        const bool strict = violations < individual.violations ||
                            (violations == individual.violations && mse < individual.mse);
        const bool acceptable = strict || (violations == individual.violations &&
                                           mse == individual.mse);
        if (acceptable) {
            if (strict) {
                any_strict = true;
                if (feedback) {
                    feedback->improved[j] = 1;
                    double dist = 0.0;
                    for (int d = 0; d < k; ++d) {
                        double sigma = std::sqrt(elem.multiplier * elem.cov(d, d));
                        if (sigma > 0.0)
                            dist = std::max(
                                dist,
                                std::abs(individual.x[elem.indices[d]] - elem.mean(d)) / sigma);
                    }
                    feedback->sdr[j] = std::max(feedback->sdr[j], dist);
                }
            }
            individual.mse = mse;
            individual.violations = violations;
        } else {
            for (int d = 0; d < k; ++d) individual.x[elem.indices[d]] = saved[d];
        }
    }

    if (!any_strict) {
        // Forced improvement: borrow the elitist's genes per element, then
        // fall back to the elitist outright.
        thread_local std::vector<int> fi_order;
        fi_order.resize(n_elements);
        std::iota(fi_order.begin(), fi_order.end(), 0);
        rng.shuffle(fi_order);
        bool improved = false;
        for (int j : fi_order) {
            const ElementModel& elem = model.elements[j];
            const int k = static_cast<int>(elem.indices.size());
            saved.resize(k);
            bool changed = false;
            for (int d = 0; d < k; ++d) {
                saved[d] = individual.x[elem.indices[d]];
                if (saved[d] != elitist.x[elem.indices[d]]) changed = true;
                individual.x[elem.indices[d]] = elitist.x[elem.indices[d]];
            }
            if (!changed) continue;
            auto result = eval(individual.x, &individual);
            if (!result) {
                for (int d = 0; d < k; ++d) individual.x[elem.indices[d]] = saved[d];
                return individual;
            }
            const double mse = result->first;
            const int violations = result->second;
            if (violations < individual.violations ||
                (violations == individual.violations && mse < individual.mse)) {
                individual.mse = mse;
                individual.violations = violations;
                improved = true;
                break;
            }
            for (int d = 0; d < k; ++d) individual.x[elem.indices[d]] = saved[d];
        }
        if (!improved) individual = elitist;
    }
    return individual;
}

bool rv_termination_triggered(std::span<const double> best_history) {
    const std::size_t n = best_history.size();
    if (n < 5) return false;
    const double before = best_history[n - 5];
    const double now = best_history[n - 1];
    if (before == 0.0) return true;
    return (before - now) / std::abs(before) < 0.01;
}

int check_constraints(const SemanticTree& tree, std::span<const double> constants,
                      const GrowthConstraints& c) {
    auto preds = evaluate(tree, constants, constraint_age_grid());
    return count_violations(preds, c);
}

namespace {

// Decade subsample of the constraint grid (same endpoints). Proposals are
// ranked against this during the search; only the returned solution is
// recounted on the full grid.
const std::vector<double>& coarse_age_grid() {
    static const std::vector<double> grid = [] {
        std::vector<double> g;
        for (int a = 0; a <= 100; a += 10) g.push_back(static_cast<double>(a));
        return g;
    }();
    return grid;
}

}  // namespace

RVSolution fit_constants(const SemanticTree& tree, std::span<const double> train_ts,
                         std::span<const double> train_ys, const RvFitOptions& options) {
    const int dims = tree.cfc_count();
    if (dims < 1) throw std::invalid_argument("fit_constants: tree has no constants");
    if (train_ts.size() != train_ys.size() || train_ts.empty())
        throw std::invalid_argument("fit_constants: bad training data");

    EvalPlan train_plan =
        make_eval_plan(tree, train_ts, options.subtree_cache, options.data_key);
    EvalPlan grid_plan =
        make_eval_plan(tree, coarse_age_grid(), options.subtree_cache, "age_grid_coarse");

    // The search runs in u = asinh(c) coordinates, so Gaussian proposals cover
    // every scale of the bounds; in plain coordinates almost all mass sits
    // where exponential arguments are clamped flat and selection sees nothing.
    const double u_lo = std::asinh(options.lo);
    const double u_hi = std::asinh(options.hi);
    // Proposals perturb one linkage element at a time, so most coordinates are
    // unchanged between evaluations; sinh is only recomputed for the ones that
    // moved.
    std::vector<double> constants(dims);
    std::vector<double> last_u(dims, std::numeric_limits<double>::quiet_NaN());
    auto to_constants = [&](const std::vector<double>& u) -> const std::vector<double>& {
        for (int d = 0; d < dims; ++d) {
            if (u[d] != last_u[d]) {
                constants[d] = std::clamp(std::sinh(u[d]), options.lo, options.hi);
                last_u[d] = u[d];
            }
        }
        return constants;
    };

    long used = 0;
    const long budget = options.budget;
    const std::size_t n_train = train_ts.size();
    std::vector<double> preds;
    std::vector<double> grid_preds;
    RvEvalFn eval = [&](const std::vector<double>& u, const RvIndividual* incumbent)
        -> std::optional<std::pair<double, int>> {
        if (used >= budget) return std::nullopt;
        ++used;
        const auto& x = to_constants(u);
        evaluate_into(tree, x, train_ts, &train_plan, preds);
        double mse = 0.0;
        for (std::size_t i = 0; i < n_train; ++i) {
            double d = preds[i] - train_ys[i];
            mse += d * d;
        }
        mse /= static_cast<double>(n_train);
        // A proposal that already loses on MSE to a feasible incumbent is
        // rejected whatever its violation count, so the grid pass is skipped.
        if (incumbent && incumbent->violations == 0 && mse > incumbent->mse)
            return std::pair(mse, std::numeric_limits<int>::max());
        evaluate_into(tree, x, coarse_age_grid(), &grid_plan, grid_preds);
        return std::pair(mse, count_violations(grid_preds, options.constraints));
    };

    Rng rng(derive_seed(options.seed, fnv1a64("rv_fit")));
    const int pop_size = 2 * dims + 10;

    // One converged run of the optimizer from a fresh population. Every
    // fourth individual starts in the near-origin cube, where no operator is
    // saturated and each coordinate carries a selection signal.
    auto run_start = [&]() -> RvIndividual {
        std::vector<RvIndividual> population(pop_size);
        RvIndividual elitist;
        elitist.mse = std::numeric_limits<double>::infinity();
        elitist.violations = std::numeric_limits<int>::max();
        int seeded = 0;
        for (auto& ind : population) {
            ind.x.resize(dims);
            bool near_origin = seeded++ % 4 == 3;
            for (double& v : ind.x)
                v = near_origin ? rng.uniform(std::max(u_lo, -2.0), std::min(u_hi, 2.0))
                                : rng.uniform(u_lo, u_hi);
            auto result = eval(ind.x, nullptr);
            if (result) {
                ind.mse = result->first;
                ind.violations = result->second;
            } else {
                ind.mse = std::numeric_limits<double>::infinity();
                ind.violations = std::numeric_limits<int>::max();
            }
            if (rv_better(ind, elitist)) elitist = ind;
        }
        if (elitist.x.empty()) elitist = population.front();

        // Singleton elements alone zigzag hopelessly on curved ridges (the
        // exponent constants trade off along a diagonal valley), so small
        // problems also get one full-covariance element for joint moves.
        Fos fos = univariate_fos(dims);
        if (dims >= 2 && dims <= kUnivariateLimit) {
            std::vector<int> all(dims);
            std::iota(all.begin(), all.end(), 0);
            fos.subsets.push_back(std::move(all));
        }
        std::vector<double> multipliers;
        std::vector<double> prev_selection_mean;
        std::vector<int> viol_history{elitist.violations};
        std::vector<double> mse_history{elitist.mse};

        const int max_generations = 100000;
        for (int gen = 0; gen < max_generations && used < budget; ++gen) {
            if (dims > kUnivariateLimit) {
                // Correlation-driven linkage over the current selection.
                auto sorted = population;
                std::stable_sort(sorted.begin(), sorted.end(), rv_better);
                int n_sel =
                    std::max(1, static_cast<int>(kSelectionFraction * sorted.size()));
                std::vector<std::vector<double>> corr(dims,
                                                      std::vector<double>(dims, 0.0));
                std::vector<double> mean(dims, 0.0), var(dims, 0.0);
                for (int s = 0; s < n_sel; ++s)
                    for (int d = 0; d < dims; ++d) mean[d] += sorted[s].x[d];
                for (double& v : mean) v /= n_sel;
                for (int s = 0; s < n_sel; ++s)
                    for (int d = 0; d < dims; ++d) {
                        double diff = sorted[s].x[d] - mean[d];
                        var[d] += diff * diff;
                    }
                for (int i = 0; i < dims; ++i) {
                    for (int j = i + 1; j < dims; ++j) {
                        double cov = 0.0;
                        for (int s = 0; s < n_sel; ++s)
                            cov += (sorted[s].x[i] - mean[i]) * (sorted[s].x[j] - mean[j]);
                        double denom = std::sqrt(var[i] * var[j]);
                        corr[i][j] = corr[j][i] = denom > 0.0 ? std::abs(cov) / denom : 0.0;
                    }
                }
                fos = upgma_tree(std::move(corr));
            }

            GaussianModel model = estimate_model(population, kSelectionFraction, fos);
            if (multipliers.size() != model.elements.size())
                multipliers.assign(model.elements.size(), 1.0);
            for (std::size_t j = 0; j < model.elements.size(); ++j)
                model.elements[j].multiplier = multipliers[j];
            if (!prev_selection_mean.empty())
                for (int d = 0; d < dims; ++d)
                    model.ams_shift[d] = model.selection_mean[d] - prev_selection_mean[d];
            prev_selection_mean = model.selection_mean;

            AvsFeedback feedback;
            for (auto& ind : population) {
                ind = sample_and_improve(ind, model, u_lo, u_hi, elitist, eval, rng,
                                         &feedback);
                if (rv_better(ind, elitist)) elitist = ind;
                if (used >= budget) break;
            }

            for (std::size_t j = 0; j < multipliers.size(); ++j) {
                if (j < feedback.improved.size() && feedback.improved[j]) {
                    if (feedback.sdr[j] > kSdrThreshold)
                        multipliers[j] /= kMultiplierDecrease;
                } else {
                    multipliers[j] *= kMultiplierDecrease;
                }
                multipliers[j] = std::max(multipliers[j], kMultiplierFloor);
            }

            viol_history.push_back(elitist.violations);
            mse_history.push_back(elitist.mse);
            if (elitist.violations == 0 && elitist.mse <= kMseFloor) break;
            if (mse_history.size() >= 5) {
                bool stable = true;
                for (std::size_t i = viol_history.size() - 5; i < viol_history.size(); ++i)
                    if (viol_history[i] != viol_history.back()) stable = false;
                if (stable &&
                    rv_termination_triggered(
                        std::span(mse_history).subspan(mse_history.size() - 5)))
                    break;
            }
        }
        return elitist;
    };

    // The population search lands in the right basin but its axis-aligned
    // steps crawl on the ill-conditioned valley floor; an adaptive simplex
    // descends the rest of the way in a few hundred evaluations.
    auto score = [](const RvIndividual& a) {
        return a.mse + 1e9 * static_cast<double>(a.violations);
    };
    auto at = [&](std::vector<double> x) -> std::optional<RvIndividual> {
        for (double& v : x) v = std::clamp(v, u_lo, u_hi);
        auto r = eval(x, nullptr);
        if (!r) return std::nullopt;
        RvIndividual ind;
        ind.mse = r->first;
        ind.violations = r->second;
        ind.x = std::move(x);
        return ind;
    };
    auto simplex_polish = [&](const RvIndividual& seed) -> RvIndividual {
        std::vector<RvIndividual> simplex{seed};
        for (int d = 0; d < dims; ++d) {
            auto x = seed.x;
            x[d] += 0.02 * (1.0 + std::abs(x[d]));
            auto v = at(std::move(x));
            if (!v) return seed;
            simplex.push_back(std::move(*v));
        }
        auto by_score = [&](const RvIndividual& a, const RvIndividual& b) {
            return score(a) < score(b);
        };
        std::sort(simplex.begin(), simplex.end(), by_score);
        for (int iter = 0; iter < 400 * dims; ++iter) {
            const double f_best = score(simplex.front());
            const double f_worst = score(simplex.back());
            if (f_best <= kMseFloor || f_worst - f_best <= 1e-16 * (f_best + 1e-300))
                break;
            std::vector<double> centroid(dims, 0.0);
            for (std::size_t i = 0; i + 1 < simplex.size(); ++i)
                for (int d = 0; d < dims; ++d) centroid[d] += simplex[i].x[d];
            for (double& v : centroid) v /= static_cast<double>(dims);
            auto blend = [&](double coef) {
                std::vector<double> x(dims);
                for (int d = 0; d < dims; ++d)
                    x[d] = centroid[d] + coef * (centroid[d] - simplex.back().x[d]);
                return at(std::move(x));
            };
            auto reflect = blend(1.0);
            if (!reflect) break;
            double f_reflect = score(*reflect);
            if (f_reflect < f_best) {
                auto expand = blend(2.0);
                if (expand && score(*expand) < f_reflect)
                    simplex.back() = std::move(*expand);
                else
                    simplex.back() = std::move(*reflect);
            } else if (f_reflect < score(simplex[simplex.size() - 2])) {
                simplex.back() = std::move(*reflect);
            } else {
                auto contract =
                    blend(f_reflect < f_worst ? 0.5 : -0.5);
                if (contract && score(*contract) < std::min(f_reflect, f_worst)) {
                    simplex.back() = std::move(*contract);
                } else {
                    // Shrink toward the best vertex.
                    bool out = false;
                    for (std::size_t i = 1; i < simplex.size(); ++i) {
                        std::vector<double> x(dims);
                        for (int d = 0; d < dims; ++d)
                            x[d] = 0.5 * (simplex.front().x[d] + simplex[i].x[d]);
                        auto v = at(std::move(x));
                        if (!v) {
                            out = true;
                            break;
                        }
                        simplex[i] = std::move(*v);
                    }
                    if (out) break;
                }
            }
            std::sort(simplex.begin(), simplex.end(), by_score);
        }
        return rv_better(simplex.front(), seed) ? simplex.front() : seed;
    };

    // A start converges in a small slice of the budget, so the fit keeps
    // restarting from fresh populations, refining every newly found best,
    // and stops only at the budget or the MSE floor.
    RvIndividual best;
    best.mse = std::numeric_limits<double>::infinity();
    best.violations = std::numeric_limits<int>::max();
    while (used < budget) {
        RvIndividual result = run_start();
        if (rv_better(result, best) || best.x.empty()) {
            best = std::move(result);
            if (!(best.violations == 0 && best.mse <= kMseFloor)) {
                RvIndividual refined = simplex_polish(best);
                if (rv_better(refined, best)) best = std::move(refined);
            }
        }
        if (best.violations == 0 && best.mse <= kMseFloor) break;
    }

    RVSolution out;
    out.constants = to_constants(best.x);
    out.train_mse = best.mse;
    out.violations = check_constraints(tree, out.constants, options.constraints);
    out.evaluations_used = used;
    return out;
}

}  // namespace fclearn
