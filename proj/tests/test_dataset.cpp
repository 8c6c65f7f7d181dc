#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "fclearn/dataset.hpp"
#include "fclearn/errors.hpp"

using namespace fclearn;

namespace {

LocalDataSet make_set(const std::string& id, std::initializer_list<double> ts) {
    LocalDataSet s;
    s.id = id;
    s.ts.assign(ts);
    s.ys.assign(s.ts.size(), 1.0);
    return s;
}

std::string write_temp(const std::string& text) {
    std::string path = std::string("/tmp/fclearn_test_") +
                       std::to_string(reinterpret_cast<std::uintptr_t>(&text)) + ".csv";
    std::ofstream out(path);
    out << text;
    return path;
}

}  // namespace

TEST_CASE("split: five points keep the fifth for validation") {
    auto view = split(make_set("a", {1, 2, 3, 4, 5}), 4);
    REQUIRE(view.has_value());
    CHECK(view->train == std::vector<int>{0, 1, 2, 3});
    CHECK(view->validation == std::vector<int>{4});
    CHECK(view->test.empty());
}

TEST_CASE("split: six points add the sixth as test") {
    auto view = split(make_set("a", {1, 2, 3, 4, 5, 6}), 4);
    REQUIRE(view.has_value());
    CHECK(view->train == std::vector<int>{0, 1, 2, 3});
    CHECK(view->validation == std::vector<int>{4});
    CHECK(view->test == std::vector<int>{5});
}

TEST_CASE("split: four points are too few") {
    CHECK_FALSE(split(make_set("a", {1, 2, 3, 4}), 4).has_value());
}

TEST_CASE("split: long sets validate on everything between train and test") {
    auto view = split(make_set("a", {1, 2, 3, 4, 5, 6, 7, 8}), 4);
    REQUIRE(view.has_value());
    CHECK(view->validation == std::vector<int>{4, 5, 6});
    CHECK(view->test == std::vector<int>{7});
}

TEST_CASE("split indices partition a prefix of the set") {
    for (int n = 5; n <= 12; ++n) {
        std::vector<double> ts(n);
        std::iota(ts.begin(), ts.end(), 0.0);
        LocalDataSet s{"a", ts, std::vector<double>(n, 1.0)};
        auto view = split(s, 4);
        REQUIRE(view.has_value());
        std::vector<int> all = view->train;
        all.insert(all.end(), view->validation.begin(), view->validation.end());
        all.insert(all.end(), view->test.begin(), view->test.end());
        std::vector<int> expected(n);
        std::iota(expected.begin(), expected.end(), 0);
        CHECK(all == expected);
    }
}

TEST_CASE("validate rejects unsorted and non-finite points") {
    auto bad_order = make_set("a", {1, 3, 2});
    CHECK_THROWS_AS(bad_order.validate(), DataError);
    auto dup = make_set("a", {1, 1, 2});
    CHECK_THROWS_AS(dup.validate(), DataError);
    auto inf = make_set("a", {1, 2, 3});
    inf.ys[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(inf.validate(), DataError);
    CHECK_THROWS_AS(LocalDataSet{}.validate(), DataError);
}

TEST_CASE("logistic evaluation goldens") {
    CHECK(eval_logistic(7.0, 3.0, 0.4, 7.0) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(eval_logistic(0.0, 1.0, 1.0, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(eval_logistic(123.0, 2.0, 0.0, -5.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gompertz evaluation goldens") {
    CHECK(eval_gompertz(0.0, 1.0, 1.0, 0.7) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(eval_gompertz(55.0, 9.0, 0.0, 0.1) == doctest::Approx(9.0).epsilon(1e-12));
    // Inflection sits at t* = ln(c2)/c3 with value c1/e.
    double c1 = 12.0, c2 = 5.0, c3 = 0.25;
    double t_star = std::log(c2) / c3;
    CHECK(eval_gompertz(t_star, c1, c2, c3) == doctest::Approx(c1 / std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("evaluators never overflow on extreme arguments") {
    CHECK(std::isfinite(eval_logistic(-1e8, 1.0, 10.0, 0.0)));
    CHECK(std::isfinite(eval_logistic(1e8, 1.0, -10.0, 0.0)));
    CHECK(std::isfinite(eval_gompertz(-1e8, 1.0, 1e6, 10.0)));
    CHECK(std::isfinite(eval_gompertz(1e8, 1.0, 1.0, -10.0)));
}

TEST_CASE("growth curves are monotone when rates are positive") {
    for (int i = 0; i < 1000; ++i) {
        double t0 = -20.0 + 0.14 * i;
        double t1 = t0 + 0.14;
        CHECK(eval_logistic(t1, 7.0, 0.3, 40.0) >= eval_logistic(t0, 7.0, 0.3, 40.0));
        CHECK(eval_gompertz(t1, 7.0, 3.0, 0.1) >= eval_gompertz(t0, 7.0, 3.0, 0.1));
    }
}

TEST_CASE("sampled truths alternate classes and satisfy constraints") {
    auto specs = sample_truth_specs(16, 6, 42);
    REQUIRE(specs.size() == 16);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& spec = specs[i];
        CHECK(spec.curve == (i % 2 == 0 ? CurveClass::Logistic : CurveClass::Gompertz));
        REQUIRE(spec.ages.size() == 6);
        for (std::size_t k = 1; k < spec.ages.size(); ++k)
            CHECK(spec.ages[k] > spec.ages[k - 1]);
        CHECK(spec.ages.front() >= 30.0);
        CHECK(spec.ages.back() <= 80.0);
        // Birth size, adult size, and positivity along the lifespan.
        CHECK(eval_truth(spec, 0.0) <= 0.01);
        for (int a = 0; a <= 100; ++a) {
            double v = eval_truth(spec, a);
            CHECK(v >= 0.0);
            CHECK(v <= 1500.0);
        }
    }
}

TEST_CASE("zero-noise generation reproduces the curve exactly") {
    auto specs = sample_truth_specs(4, 6, 7);
    auto data = generate_synthetic(specs, 0.0, 99, 4);
    REQUIRE(data.size() == 4);
    for (int m = 0; m < data.size(); ++m) {
        const auto& set = data.sets[m];
        for (int i = 0; i < set.n(); ++i)
            CHECK(std::abs(set.ys[i] - eval_truth(specs[m], set.ts[i])) < 1e-12);
    }
}

TEST_CASE("noise is multiplicative with the requested sigma") {
    auto specs = sample_truth_specs(2, 6, 5);
    // Widen to many points for a stable sample estimate.
    specs.resize(1);
    specs[0].ages.clear();
    for (int i = 0; i < 20000; ++i) specs[0].ages.push_back(30.0 + i * 0.002);
    auto data = generate_synthetic(specs, 0.05, 123, 4);
    const auto& set = data.sets[0];
    std::vector<double> rel;
    for (int i = 0; i < set.n(); ++i) {
        double f = eval_truth(specs[0], set.ts[i]);
        rel.push_back(set.ys[i] / f - 1.0);
    }
    double mean = std::accumulate(rel.begin(), rel.end(), 0.0) / rel.size();
    double var = 0.0;
    for (double r : rel) var += (r - mean) * (r - mean);
    double std_dev = std::sqrt(var / (rel.size() - 1));
    CHECK(std::abs(mean) < 0.005);
    CHECK(std_dev == doctest::Approx(0.05).epsilon(0.10));
}

TEST_CASE("generation rejects constraint-violating truths") {
    GroundTruthSpec oversized;
    oversized.set_id = "big";
    oversized.curve = CurveClass::Logistic;
    oversized.c1 = 3000.0;  // adult size past the 1500 cc cap
    oversized.c2 = 0.3;
    oversized.c3 = 50.0;
    oversized.ages = {30, 40, 50, 60, 70, 80};
    CHECK_THROWS_AS(generate_synthetic({oversized}, 0.0, 1, 4), DataError);
}

TEST_CASE("make_global drops short sets and reports them") {
    std::vector<LocalDataSet> sets{make_set("keep", {1, 2, 3, 4, 5}),
                                   make_set("drop", {1, 2, 3})};
    std::vector<std::string> notes;
    auto data = make_global(sets, 4, &notes);
    REQUIRE(data.size() == 1);
    CHECK(data.sets[0].id == "keep");
    REQUIRE(notes.size() == 1);
    CHECK(notes[0].find("drop") != std::string::npos);
    CHECK_THROWS_AS(make_global({make_set("tiny", {1, 2})}, 4), DataError);
}

TEST_CASE("train and validation views select the split points") {
    auto specs = sample_truth_specs(2, 6, 3);
    auto data = generate_synthetic(specs, 0.0, 17, 4);
    for (int m = 0; m < data.size(); ++m) {
        auto ts = data.train_ts(m);
        REQUIRE(ts.size() == 4);
        CHECK(ts == std::vector<double>(data.sets[m].ts.begin(), data.sets[m].ts.begin() + 4));
        auto vts = data.validation_ts(m);
        REQUIRE(vts.size() == 1);
        CHECK(vts[0] == data.sets[m].ts[4]);
        CHECK(data.validation_ys(m)[0] == data.sets[m].ys[4]);
    }
}

TEST_CASE("csv loader groups, sorts, and splits") {
    auto path = write_temp(
        "set_id,t,y\n"
        "b,4,1.4\n"
        "a,1,0.1\n"
        "a,3,0.3\n"
        "b,1,1.1\n"
        "a,2,0.2\n"
        "b,2,1.2\n"
        "a,4,0.4\n"
        "b,3,1.3\n"
        "a,5,0.5\n"
        "b,5,1.5\n");
    auto data = load_global(path, 4);
    std::remove(path.c_str());
    REQUIRE(data.size() == 2);
    // Sets keep their first-appearance order; rows sort by age within a set.
    CHECK(data.sets[0].id == "b");
    CHECK(data.sets[1].id == "a");
    CHECK(data.sets[1].ts == std::vector<double>{1, 2, 3, 4, 5});
    CHECK(data.sets[1].ys == std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5});
    CHECK(data.splits[0].train.size() == 4);
    CHECK(data.splits[0].validation.size() == 1);
}

TEST_CASE("csv loader errors carry the line number") {
    auto dup = write_temp("set_id,t,y\na,1,0.1\na,1,0.2\n");
    CHECK_THROWS_AS(load_global(dup, 4), DataError);
    std::remove(dup.c_str());

    auto bad = write_temp("set_id,t,y\na,1,0.1\na,two,0.2\n");
    try {
        load_global(bad, 4);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
    std::remove(bad.c_str());

    auto empty = write_temp("set_id,t,y\n");
    CHECK_THROWS_AS(load_global(empty, 4), DataError);
    std::remove(empty.c_str());
}

TEST_CASE("csv round trip preserves the data") {
    auto specs = sample_truth_specs(3, 6, 21);
    auto data = generate_synthetic(specs, 0.05, 4, 4);
    std::string path = "/tmp/fclearn_test_roundtrip.csv";
    save_global_csv(data, path);
    auto loaded = load_global(path, 4);
    std::remove(path.c_str());
    REQUIRE(loaded.size() == data.size());
    for (int m = 0; m < data.size(); ++m) {
        CHECK(loaded.sets[m].id == data.sets[m].id);
        REQUIRE(loaded.sets[m].n() == data.sets[m].n());
        for (int i = 0; i < data.sets[m].n(); ++i) {
            CHECK(loaded.sets[m].ts[i] == doctest::Approx(data.sets[m].ts[i]).epsilon(1e-15));
            CHECK(loaded.sets[m].ys[i] == doctest::Approx(data.sets[m].ys[i]).epsilon(1e-15));
        }
    }
}

TEST_CASE("truth specs survive a json round trip") {
    auto specs = sample_truth_specs(4, 6, 9);
    std::string path = "/tmp/fclearn_test_truth.json";
    save_truth_json(specs, path);
    auto loaded = load_truth_json(path);
    std::remove(path.c_str());
    REQUIRE(loaded.size() == specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        CHECK(loaded[i].set_id == specs[i].set_id);
        CHECK(loaded[i].curve == specs[i].curve);
        CHECK(loaded[i].c1 == specs[i].c1);
        CHECK(loaded[i].c2 == specs[i].c2);
        CHECK(loaded[i].c3 == specs[i].c3);
        CHECK(loaded[i].ages == specs[i].ages);
    }
}
