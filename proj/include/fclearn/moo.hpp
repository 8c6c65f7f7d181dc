#pragma once

#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "fclearn/expr.hpp"

namespace fclearn {

struct ObjectivePair {
    double mse_global = 0.0;
    double dmse_global = 0.0;
    int violations = 0;
};

// Feasibility first: fewer constraint violations win outright; at equal
// violation count, standard Pareto domination on (MSE, DMSE), minimized.
bool constrained_dominates(const ObjectivePair& a, const ObjectivePair& b);

struct ArchiveEntry {
    std::vector<ExpressionTree> trees;
    ObjectivePair objectives;
    std::vector<std::vector<double>> per_set_mse;  // trees x evaluated sets
    bool full_data = false;  // objectives computed over every local set

    std::vector<std::string> keys() const;
};

// Mutually non-dominated store. Inserting a dominated or exactly duplicated
// entry (same objectives and same expression keys) is a no-op; an accepted
// entry evicts the members it dominates. The final contents do not depend on
// insertion order. Thread-safe.
class ParetoArchive {
  public:
    enum class Scope { Generation, Persistent };

    explicit ParetoArchive(Scope scope) : scope_(scope) {}
    ParetoArchive(const ParetoArchive& other);

    Scope scope() const { return scope_; }
    bool insert(ArchiveEntry entry);
    std::vector<ArchiveEntry> entries() const;
    std::vector<ObjectivePair> front() const;  // objectives of all members
    std::size_t size() const;
    void clear();

  private:
    Scope scope_;
    mutable std::mutex mutex_;
    std::vector<ArchiveEntry> entries_;
};

struct NormBounds {
    double min_mse = 0.0, max_mse = 1.0;
    double min_dmse = 0.0, max_dmse = 1.0;
};

// Per-objective extremes over the non-dominated union of the given fronts
// (feasible entries only). Throws DataError when the union is empty.
NormBounds normalization_bounds(const std::vector<std::vector<ObjectivePair>>& fronts);

// Exact 2-D hypervolume against reference point (1, 1) after normalizing each
// objective to [0, 1] (values outside are clipped; a degenerate objective with
// max == min maps to 0). All points must be feasible (violations == 0).
double hypervolume(std::span<const ObjectivePair> front, const NormBounds& bounds);

}  // namespace fclearn
