#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fclearn/constraints.hpp"
#include "fclearn/expr.hpp"
#include "fclearn/linkage.hpp"
#include "fclearn/rng.hpp"

namespace fclearn {

struct RvIndividual {
    std::vector<double> x;
    double mse = 0.0;
    int violations = 0;
};

// Feasibility-first ordering: fewer violations beat any MSE difference.
bool rv_better(const RvIndividual& a, const RvIndividual& b);

struct ElementModel {
    std::vector<int> indices;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;      // maximum-likelihood (1/n) estimate
    Eigen::MatrixXd chol;     // lower-triangular factor of cov, regularized
    double multiplier = 1.0;  // adaptive variance scale
};

struct GaussianModel {
    std::vector<ElementModel> elements;
    std::vector<double> selection_mean;  // over all dimensions
    std::vector<double> ams_shift;       // selection-mean drift, zero on gen 0
};

// Normal model of the best selection_fraction of the population under the
// feasibility-first order. Covariances use the biased 1/n convention; a
// failed Cholesky gets +1e-10 I, then a diagonal fallback.
GaussianModel estimate_model(const std::vector<RvIndividual>& population,
                             double selection_fraction, const Fos& fos);

// Evaluation hook: returns (train MSE, violations), or nullopt once the
// evaluation budget is spent. `incumbent`, when given, is the solution the
// caller will compare against; a hook may then skip the constraint check for
// proposals whose MSE already loses to a feasible incumbent and report a
// worst-case violation count, since such proposals are rejected either way.
using RvEvalFn = std::function<std::optional<std::pair<double, int>>(
    const std::vector<double>&, const RvIndividual* incumbent)>;

struct AvsFeedback {
    std::vector<char> improved;  // per FOS element
    std::vector<double> sdr;     // largest normalized improvement distance
};

// One optimal-mixing pass over the FOS for one individual: per element sample
// from the scaled element Gaussian (half the draws also get the 2x
// anticipated mean shift), keep the change iff not worse. If the whole pass
// brought no strict improvement, retry with the elitist's genes per element
// and finally fall back to the elitist itself.
RvIndividual sample_and_improve(RvIndividual individual, const GaussianModel& model, double lo,
                                double hi, const RvIndividual& elitist, const RvEvalFn& eval,
                                Rng& rng, AvsFeedback* feedback = nullptr);

// No-improvement stop rule: true once the best fitness failed to improve by
// at least 1% over the last four generations.
bool rv_termination_triggered(std::span<const double> best_history);

struct RvFitOptions {
    double lo = -10000.0;
    double hi = 10000.0;
    long budget = 500000;
    std::uint64_t seed = 0;
    SubtreeOutputCache* subtree_cache = nullptr;
    std::string data_key = "train";  // identifies the train t-vector in the cache
    GrowthConstraints constraints{};
};

struct RVSolution {
    std::vector<double> constants;
    double train_mse = 0.0;
    int violations = 0;
    long evaluations_used = 0;
};

// Fits the tree's constants to the training points, minimizing train MSE
// under the growth constraints. Deterministic given options.seed.
RVSolution fit_constants(const SemanticTree& tree, std::span<const double> train_ts,
                         std::span<const double> train_ys, const RvFitOptions& options);

// Constraint count for a candidate function: evaluates the tree over the age
// grid and applies the growth checks.
int check_constraints(const SemanticTree& tree, std::span<const double> constants,
                      const GrowthConstraints& c = GrowthConstraints{});

}  // namespace fclearn
