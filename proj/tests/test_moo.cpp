#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fclearn/errors.hpp"
#include "fclearn/moo.hpp"
#include "fclearn/rng.hpp"

using namespace fclearn;

namespace {

ObjectivePair op(double mse, double dmse, int violations = 0) {
    return ObjectivePair{mse, dmse, violations};
}

ArchiveEntry entry_of(ObjectivePair objectives, bool full_data = false) {
    ArchiveEntry e;
    e.objectives = objectives;
    e.full_data = full_data;
    return e;
}

std::vector<ObjectivePair> sorted_front(const ParetoArchive& archive) {
    auto front = archive.front();
    std::sort(front.begin(), front.end(), [](const ObjectivePair& a, const ObjectivePair& b) {
        return std::tuple(a.violations, a.mse_global, a.dmse_global) <
               std::tuple(b.violations, b.mse_global, b.dmse_global);
    });
    return front;
}

double mc_hypervolume(const std::vector<ObjectivePair>& front, int samples,
                      std::uint64_t seed) {
    Rng rng(seed);
    int hits = 0;
    for (int s = 0; s < samples; ++s) {
        double x = rng.uniform01();
        double y = rng.uniform01();
        for (const auto& p : front)
            if (p.mse_global <= x && p.dmse_global <= y) {
                ++hits;
                break;
            }
    }
    return static_cast<double>(hits) / samples;
}

}  // namespace

TEST_CASE("feasibility decides domination before the objectives") {
    CHECK(constrained_dominates(op(100.0, 100.0, 0), op(0.1, 0.1, 1)));
    CHECK_FALSE(constrained_dominates(op(0.1, 0.1, 1), op(100.0, 100.0, 0)));
    CHECK(constrained_dominates(op(5.0, 5.0, 1), op(1.0, 1.0, 2)));
}

TEST_CASE("equal-violation domination is standard Pareto order") {
    CHECK(constrained_dominates(op(1.0, 2.0), op(2.0, 3.0)));
    CHECK(constrained_dominates(op(1.0, 2.0), op(1.0, 3.0)));
    CHECK(constrained_dominates(op(1.0, 2.0), op(2.0, 2.0)));
    CHECK_FALSE(constrained_dominates(op(1.0, 3.0), op(2.0, 2.0)));
    CHECK_FALSE(constrained_dominates(op(2.0, 2.0), op(1.0, 3.0)));
    CHECK_FALSE(constrained_dominates(op(1.0, 2.0), op(1.0, 2.0)));
}

TEST_CASE("archive keeps only mutually non-dominated entries") {
    ParetoArchive archive(ParetoArchive::Scope::Generation);
    CHECK(archive.insert(entry_of(op(2.0, 2.0))));
    CHECK(archive.insert(entry_of(op(1.0, 3.0))));
    CHECK(archive.size() == 2);

    // Dominated by (2, 2): rejected outright.
    CHECK_FALSE(archive.insert(entry_of(op(3.0, 3.0))));
    CHECK(archive.size() == 2);

    // Dominates both members: evicts them.
    CHECK(archive.insert(entry_of(op(0.5, 0.5))));
    auto front = archive.front();
    REQUIRE(front.size() == 1);
    CHECK(front[0].mse_global == 0.5);
    CHECK(front[0].dmse_global == 0.5);
}

TEST_CASE("a feasible entry evicts every infeasible one") {
    ParetoArchive archive(ParetoArchive::Scope::Generation);
    CHECK(archive.insert(entry_of(op(0.1, 0.1, 2))));
    CHECK(archive.insert(entry_of(op(0.2, 0.05, 2))));
    CHECK(archive.size() == 2);
    CHECK(archive.insert(entry_of(op(50.0, 50.0, 0))));
    auto front = archive.front();
    REQUIRE(front.size() == 1);
    CHECK(front[0].violations == 0);
}

TEST_CASE("exact duplicates are ignored, equal objectives with new keys are kept") {
    ParetoArchive archive(ParetoArchive::Scope::Generation);
    CHECK(archive.insert(entry_of(op(1.0, 1.0))));
    CHECK_FALSE(archive.insert(entry_of(op(1.0, 1.0))));  // same objectives, same (empty) keys
    CHECK(archive.size() == 1);
}

TEST_CASE("insertion order does not change the final front") {
    Rng rng(11);
    for (int round = 0; round < 10; ++round) {
        std::vector<ObjectivePair> points;
        for (int i = 0; i < 30; ++i) {
            // Coarse grid values force ties and duplicates.
            double mse = static_cast<double>(rng.index(5));
            double dmse = static_cast<double>(rng.index(5));
            int violations = static_cast<int>(rng.index(3));
            points.push_back(op(mse, dmse, violations));
        }
        ParetoArchive forward(ParetoArchive::Scope::Generation);
        for (const auto& p : points) forward.insert(entry_of(p));

        auto shuffled = points;
        rng.shuffle(shuffled);
        ParetoArchive backward(ParetoArchive::Scope::Generation);
        for (const auto& p : shuffled) backward.insert(entry_of(p));

        auto a = sorted_front(forward);
        auto b = sorted_front(backward);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].mse_global == b[i].mse_global);
            CHECK(a[i].dmse_global == b[i].dmse_global);
            CHECK(a[i].violations == b[i].violations);
        }
    }
}

TEST_CASE("archive members are pairwise non-dominated after random inserts") {
    Rng rng(12);
    ParetoArchive archive(ParetoArchive::Scope::Generation);
    for (int i = 0; i < 200; ++i)
        archive.insert(entry_of(op(rng.uniform01(), rng.uniform01(),
                                   static_cast<int>(rng.index(2)))));
    auto front = archive.front();
    REQUIRE(!front.empty());
    for (std::size_t i = 0; i < front.size(); ++i)
        for (std::size_t j = 0; j < front.size(); ++j)
            if (i != j) CHECK_FALSE(constrained_dominates(front[i], front[j]));
}

TEST_CASE("persistent archives accept only full-data entries") {
    ParetoArchive archive(ParetoArchive::Scope::Persistent);
    CHECK_THROWS_AS(archive.insert(entry_of(op(1.0, 1.0), false)), std::invalid_argument);
    CHECK(archive.insert(entry_of(op(1.0, 1.0), true)));
    ParetoArchive generation(ParetoArchive::Scope::Generation);
    CHECK(generation.insert(entry_of(op(1.0, 1.0), false)));
}

TEST_CASE("archive copies and clears") {
    ParetoArchive archive(ParetoArchive::Scope::Generation);
    archive.insert(entry_of(op(1.0, 2.0)));
    archive.insert(entry_of(op(2.0, 1.0)));

    ParetoArchive copy(archive);
    CHECK(copy.size() == 2);
    CHECK(copy.scope() == ParetoArchive::Scope::Generation);

    archive.clear();
    CHECK(archive.size() == 0);
    CHECK(copy.size() == 2);  // deep copy unaffected

    auto front = copy.front();
    auto entries = copy.entries();
    REQUIRE(front.size() == entries.size());
    for (std::size_t i = 0; i < front.size(); ++i) {
        CHECK(front[i].mse_global == entries[i].objectives.mse_global);
        CHECK(front[i].dmse_global == entries[i].objectives.dmse_global);
    }
}

TEST_CASE("normalization bounds span the non-dominated feasible union") {
    std::vector<std::vector<ObjectivePair>> fronts{
        {op(1.0, 5.0), op(3.0, 2.0)},
        {op(2.0, 4.0)},
    };
    NormBounds b = normalization_bounds(fronts);
    CHECK(b.min_mse == 1.0);
    CHECK(b.max_mse == 3.0);
    CHECK(b.min_dmse == 2.0);
    CHECK(b.max_dmse == 5.0);

    // A dominated feasible point widens nothing.
    fronts.push_back({op(4.0, 6.0)});
    NormBounds b2 = normalization_bounds(fronts);
    CHECK(b2.max_mse == 3.0);
    CHECK(b2.max_dmse == 5.0);

    // Infeasible extremes are invisible.
    fronts.push_back({op(0.001, 0.001, 1)});
    NormBounds b3 = normalization_bounds(fronts);
    CHECK(b3.min_mse == 1.0);
    CHECK(b3.min_dmse == 2.0);
}

TEST_CASE("normalization without feasible points raises DataError") {
    CHECK_THROWS_AS(normalization_bounds({}), DataError);
    CHECK_THROWS_AS(normalization_bounds({{op(1.0, 1.0, 1)}}), DataError);
    CHECK_THROWS_AS(normalization_bounds({{}, {}}), DataError);
}

TEST_CASE("hypervolume matches the hand-computed squares") {
    NormBounds unit;  // identity normalization on [0, 1]
    std::vector<ObjectivePair> origin{op(0.0, 0.0)};
    CHECK(hypervolume(origin, unit) == 1.0);

    std::vector<ObjectivePair> center{op(0.5, 0.5)};
    CHECK(hypervolume(center, unit) == 0.25);

    std::vector<ObjectivePair> two{op(0.0, 0.5), op(0.5, 0.0)};
    CHECK(hypervolume(two, unit) == 0.75);

    std::vector<ObjectivePair> none;
    CHECK(hypervolume(none, unit) == 0.0);

    std::vector<ObjectivePair> reference{op(1.0, 1.0)};
    CHECK(hypervolume(reference, unit) == 0.0);
}

TEST_CASE("hypervolume clips points to the unit box") {
    NormBounds unit;
    std::vector<ObjectivePair> outside{op(2.0, 3.0)};
    CHECK(hypervolume(outside, unit) == 0.0);
    std::vector<ObjectivePair> below{op(-1.0, -1.0)};
    CHECK(hypervolume(below, unit) == 1.0);
}

TEST_CASE("hypervolume ignores dominated and duplicate points") {
    NormBounds unit;
    std::vector<ObjectivePair> base{op(0.5, 0.5)};
    std::vector<ObjectivePair> padded{op(0.5, 0.5), op(0.7, 0.7), op(0.5, 0.5)};
    CHECK(hypervolume(padded, unit) == hypervolume(base, unit));
}

TEST_CASE("hypervolume applies the given normalization") {
    NormBounds b{2.0, 4.0, 10.0, 20.0};
    // (3, 15) normalizes to (0.5, 0.5).
    std::vector<ObjectivePair> front{op(3.0, 15.0)};
    CHECK(hypervolume(front, b) == 0.25);

    // Degenerate axis maps to zero.
    NormBounds flat{5.0, 5.0, 0.0, 1.0};
    std::vector<ObjectivePair> single{op(5.0, 0.5)};
    CHECK(hypervolume(single, flat) == 0.5);
}

TEST_CASE("hypervolume rejects infeasible points") {
    NormBounds unit;
    std::vector<ObjectivePair> bad{op(0.5, 0.5, 1)};
    CHECK_THROWS_AS(hypervolume(bad, unit), std::invalid_argument);
}

TEST_CASE("hypervolume agrees with Monte Carlo sampling") {
    NormBounds unit;
    Rng rng(21);
    for (int round = 0; round < 5; ++round) {
        std::vector<ObjectivePair> front;
        for (int i = 0; i < 10; ++i) front.push_back(op(rng.uniform01(), rng.uniform01()));
        double exact = hypervolume(front, unit);
        double approx = mc_hypervolume(front, 200000, 100 + round);
        CHECK(std::abs(exact - approx) < 0.005);
    }
}
