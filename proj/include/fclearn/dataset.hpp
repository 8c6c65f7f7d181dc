#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fclearn {

// One measured growth curve: strictly increasing ages with a volume each.
struct LocalDataSet {
    std::string id;
    std::vector<double> ts;  // ages, strictly ascending, finite
    std::vector<double> ys;  // volumes, finite

    int n() const { return static_cast<int>(ts.size()); }
    void validate() const;  // throws DataError on a broken invariant
};

// Index split of one local set. Train is always the first n_rv points; the
// last point is held out as test whenever enough points remain.
struct SplitView {
    int n_rv = 0;
    std::vector<int> train;
    std::vector<int> validation;
    std::vector<int> test;
};

// Returns nullopt when the set is too small to be used (n < n_rv + 1).
std::optional<SplitView> split(const LocalDataSet& set, int n_rv);

struct GlobalDataSet {
    int n_rv = 0;
    std::vector<LocalDataSet> sets;
    std::vector<SplitView> splits;  // parallel to sets

    int size() const { return static_cast<int>(sets.size()); }

    std::vector<double> train_ts(int m) const;
    std::vector<double> train_ys(int m) const;
    std::vector<double> validation_ts(int m) const;
    std::vector<double> validation_ys(int m) const;
};

// Builds a usable global set: drops sets with fewer than n_rv + 1 points
// (recording a note per dropped set when `notes` is given) and throws
// DataError when nothing usable remains.
GlobalDataSet make_global(std::vector<LocalDataSet> sets, int n_rv,
                          std::vector<std::string>* notes = nullptr);

enum class CurveClass { Logistic, Gompertz };

struct GroundTruthSpec {
    std::string set_id;
    CurveClass curve = CurveClass::Logistic;
    double c1 = 0.0, c2 = 0.0, c3 = 0.0;
    std::vector<double> ages;  // strictly ascending sampling ages
};

// V(t) = c1 / (1 + e^(-c2 (t - c3))); exponent clamped to [-700, 700].
double eval_logistic(double t, double c1, double c2, double c3);

// V(t) = c1 e^(-c2 e^(-c3 t)); exponents clamped to [-700, 700].
double eval_gompertz(double t, double c1, double c2, double c3);

double eval_truth(const GroundTruthSpec& spec, double t);

// Rejection-samples ground truths that satisfy the growth constraints,
// alternating logistic and Gompertz curves. Ages: points_per_set draws from
// [30, 80], sorted.
std::vector<GroundTruthSpec> sample_truth_specs(int count, int points_per_set,
                                                std::uint64_t seed);

// y = V(t) * (1 + eps), eps ~ N(0, noise_sigma); negative draws clamp to 0.
// Throws DataError if a spec violates the growth constraints.
GlobalDataSet generate_synthetic(const std::vector<GroundTruthSpec>& specs,
                                 double noise_sigma, std::uint64_t seed, int n_rv);

// CSV with header "set_id,t,y". Rows may appear in any order; points are
// grouped by set id and sorted by age. Duplicate (set_id, t) rows and
// malformed fields raise DataError with the offending line number.
GlobalDataSet load_global(const std::string& path, int n_rv,
                          std::vector<std::string>* notes = nullptr);

void save_global_csv(const GlobalDataSet& data, const std::string& path);

void save_truth_json(const std::vector<GroundTruthSpec>& specs, const std::string& path);
std::vector<GroundTruthSpec> load_truth_json(const std::string& path);

}  // namespace fclearn
