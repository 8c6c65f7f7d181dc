#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "fclearn/dataset.hpp"
#include "fclearn/expr.hpp"
#include "fclearn/rng.hpp"
#include "fclearn/rvopt.hpp"

using namespace fclearn;

namespace {

RvIndividual make_ind(std::vector<double> x, double mse, int violations) {
    RvIndividual ind;
    ind.x = std::move(x);
    ind.mse = mse;
    ind.violations = violations;
    return ind;
}

// Ignores the incumbent, so every proposal pays the full evaluation.
RvEvalFn plain(std::function<std::pair<double, int>(const std::vector<double>&)> f) {
    return [f = std::move(f)](const std::vector<double>& x, const RvIndividual*)
               -> std::optional<std::pair<double, int>> { return f(x); };
}

}  // namespace

TEST_CASE("feasibility dominates mse in the individual order") {
    CHECK(rv_better(make_ind({}, 100.0, 0), make_ind({}, 0.001, 1)));
    CHECK_FALSE(rv_better(make_ind({}, 0.001, 1), make_ind({}, 100.0, 0)));
    CHECK(rv_better(make_ind({}, 1.0, 2), make_ind({}, 2.0, 2)));
    CHECK_FALSE(rv_better(make_ind({}, 1.0, 2), make_ind({}, 1.0, 2)));
}

TEST_CASE("model mean and covariance are the selection's ML estimates") {
    // All ranks selected: fraction 1.0 of four individuals.
    std::vector<RvIndividual> pop{make_ind({1.0}, 1.0, 0), make_ind({2.0}, 2.0, 0),
                                  make_ind({3.0}, 3.0, 0), make_ind({4.0}, 4.0, 0)};
    GaussianModel model = estimate_model(pop, 1.0, univariate_fos(1));
    REQUIRE(model.elements.size() == 1);
    CHECK(model.elements[0].mean(0) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(model.elements[0].cov(0, 0) == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(model.elements[0].chol(0, 0) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-6));
    CHECK(model.selection_mean[0] == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(model.ams_shift[0] == 0.0);
}

TEST_CASE("selection keeps the best fraction under the feasibility-first order") {
    // Ten individuals; fraction 0.35 selects the best three.
    std::vector<RvIndividual> pop;
    for (int i = 0; i < 10; ++i)
        pop.push_back(make_ind({static_cast<double>(i)}, static_cast<double>(i), 0));
    // Feasible tail: worst mse but zero violations already; make the three
    // best x = 7, 8, 9 by violation count instead.
    for (int i = 0; i < 7; ++i) pop[i].violations = 1;
    GaussianModel model = estimate_model(pop, 0.35, univariate_fos(1));
    CHECK(model.elements[0].mean(0) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("a point-mass population yields its location and a tiny regularized factor") {
    std::vector<RvIndividual> pop(5, make_ind({3.0, -2.0}, 1.0, 0));
    GaussianModel model = estimate_model(pop, 0.35, univariate_fos(2));
    REQUIRE(model.elements.size() == 2);
    CHECK(model.elements[0].mean(0) == 3.0);
    CHECK(model.elements[1].mean(0) == -2.0);
    CHECK(model.elements[0].cov(0, 0) == 0.0);
    CHECK(model.elements[0].chol(0, 0) <= 1e-4);
}

TEST_CASE("a full element factors the joint covariance") {
    Rng rng(9);
    std::vector<RvIndividual> pop;
    for (int i = 0; i < 50; ++i) {
        double a = rng.normal();
        double b = 0.8 * a + 0.6 * rng.normal();
        pop.push_back(make_ind({a, b}, rng.uniform01(), 0));
    }
    Fos fos;
    fos.subsets = {{0, 1}};
    GaussianModel model = estimate_model(pop, 1.0, fos);
    REQUIRE(model.elements.size() == 1);
    const auto& e = model.elements[0];
    Eigen::MatrixXd reconstructed = e.chol * e.chol.transpose();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(reconstructed(i, j) == doctest::Approx(e.cov(i, j)).epsilon(1e-6));
    CHECK(e.cov(0, 1) == doctest::Approx(e.cov(1, 0)).epsilon(1e-12));
    CHECK(e.cov(0, 1) > 0.2);  // correlated by construction
}

TEST_CASE("estimate_model rejects tiny populations") {
    std::vector<RvIndividual> pop{make_ind({1.0}, 1.0, 0), make_ind({2.0}, 2.0, 0)};
    CHECK_THROWS_AS(estimate_model(pop, 0.35, univariate_fos(1)), std::invalid_argument);
}

TEST_CASE("mixing accepts strict improvements and reports feedback") {
    GaussianModel model;
    ElementModel elem;
    elem.indices = {0};
    elem.mean = Eigen::VectorXd::Constant(1, 0.0);
    elem.cov = Eigen::MatrixXd::Constant(1, 1, 1.0);
    elem.chol = Eigen::MatrixXd::Constant(1, 1, 1.0);
    model.elements.push_back(elem);
    model.selection_mean = {0.0};
    model.ams_shift = {0.0};

    // Fitness improves with every call, so each proposal is accepted.
    long calls = 0;
    RvEvalFn eval = plain([&](const std::vector<double>&) {
        return std::pair(1000.0 - static_cast<double>(++calls), 0);
    });

    Rng rng(1);
    RvIndividual start = make_ind({0.0}, 1e9, 0);
    RvIndividual elitist = start;
    AvsFeedback feedback;
    RvIndividual out = sample_and_improve(start, model, -10.0, 10.0, elitist, eval, rng,
                                          &feedback);
    CHECK(out.mse < start.mse);
    REQUIRE(feedback.improved.size() == 1);
    CHECK(feedback.improved[0] == 1);
    CHECK(feedback.sdr[0] >= 0.0);
    CHECK(std::abs(out.x[0]) <= 10.0);
}

TEST_CASE("mixing with no strict improvement falls back to the elitist") {
    GaussianModel model;
    ElementModel elem;
    elem.indices = {0};
    elem.mean = Eigen::VectorXd::Constant(1, 5.0);
    elem.cov = Eigen::MatrixXd::Constant(1, 1, 1e-12);
    elem.chol = Eigen::MatrixXd::Constant(1, 1, 1e-6);
    model.elements.push_back(elem);
    model.selection_mean = {5.0};
    model.ams_shift = {0.0};

    // Flat fitness: ties are never strict, so the pass must end at the
    // elitist verbatim.
    RvEvalFn eval = plain([](const std::vector<double>&) { return std::pair(25.0, 0); });

    Rng rng(2);
    RvIndividual start = make_ind({5.0}, 25.0, 0);
    RvIndividual elitist = make_ind({1.0}, 25.0, 0);
    RvIndividual out =
        sample_and_improve(start, model, -10.0, 10.0, elitist, eval, rng, nullptr);
    CHECK(out.x == elitist.x);
    CHECK(out.mse == elitist.mse);
    CHECK(out.violations == elitist.violations);
}

TEST_CASE("mixing never trades violations for mse") {
    GaussianModel model;
    ElementModel elem;
    elem.indices = {0};
    elem.mean = Eigen::VectorXd::Constant(1, 0.0);
    elem.cov = Eigen::MatrixXd::Constant(1, 1, 1.0);
    elem.chol = Eigen::MatrixXd::Constant(1, 1, 1.0);
    model.elements.push_back(elem);
    model.selection_mean = {0.0};
    model.ams_shift = {0.0};

    // Every proposal offers a perfect mse but one violation.
    RvEvalFn eval = plain([](const std::vector<double>&) { return std::pair(0.0, 1); });

    Rng rng(3);
    RvIndividual start = make_ind({0.5}, 4.0, 0);
    RvIndividual elitist = start;
    RvIndividual out =
        sample_and_improve(start, model, -10.0, 10.0, elitist, eval, rng, nullptr);
    CHECK(out.violations == 0);
    CHECK(out.x == start.x);
}

TEST_CASE("mixing stops cleanly when the budget runs out") {
    GaussianModel model;
    ElementModel elem;
    elem.indices = {0};
    elem.mean = Eigen::VectorXd::Constant(1, 0.0);
    elem.cov = Eigen::MatrixXd::Constant(1, 1, 1.0);
    elem.chol = Eigen::MatrixXd::Constant(1, 1, 1.0);
    model.elements.push_back(elem);
    model.selection_mean = {0.0};
    model.ams_shift = {0.0};

    RvEvalFn eval = [](const std::vector<double>&,
                       const RvIndividual*) -> std::optional<std::pair<double, int>> {
        return std::nullopt;
    };

    Rng rng(4);
    RvIndividual start = make_ind({0.5}, 4.0, 0);
    RvIndividual out =
        sample_and_improve(start, model, -10.0, 10.0, start, eval, rng, nullptr);
    CHECK(out.x == std::vector<double>{0.5});
    CHECK(out.mse == 4.0);
}

TEST_CASE("proposals stay inside the search bounds") {
    GaussianModel model;
    ElementModel elem;
    elem.indices = {0};
    elem.mean = Eigen::VectorXd::Constant(1, 100.0);  // far outside [-1, 1]
    elem.cov = Eigen::MatrixXd::Constant(1, 1, 4.0);
    elem.chol = Eigen::MatrixXd::Constant(1, 1, 2.0);
    model.elements.push_back(elem);
    model.selection_mean = {100.0};
    model.ams_shift = {0.0};

    long calls = 0;
    RvEvalFn eval = plain([&](const std::vector<double>&) {
        return std::pair(1000.0 - static_cast<double>(++calls), 0);
    });

    Rng rng(5);
    RvIndividual start = make_ind({0.0}, 1e9, 0);
    for (int i = 0; i < 50; ++i) {
        RvIndividual out =
            sample_and_improve(start, model, -1.0, 1.0, start, eval, rng, nullptr);
        CHECK(out.x[0] <= 1.0);
        CHECK(out.x[0] >= -1.0);
    }
}

TEST_CASE("termination rule distinguishes stalls from steady progress") {
    std::vector<double> stalled{10.0, 9.99, 9.98, 9.98, 9.98};
    CHECK(rv_termination_triggered(stalled));
    std::vector<double> progressing{10.0, 8.0, 6.0, 4.0, 2.0};
    CHECK_FALSE(rv_termination_triggered(progressing));
    std::vector<double> short_history{10.0, 9.99, 9.98};
    CHECK_FALSE(rv_termination_triggered(short_history));
    std::vector<double> at_zero{0.0, 0.0, 0.0, 0.0, 0.0};
    CHECK(rv_termination_triggered(at_zero));
    // Exactly 1% over four generations is still progress.
    std::vector<double> exact{100.0, 99.75, 99.5, 99.25, 99.0};
    CHECK_FALSE(rv_termination_triggered(exact));
    // Only the last five entries matter.
    std::vector<double> long_stall{50.0, 20.0, 10.0, 9.99, 9.98, 9.98, 9.98};
    CHECK(rv_termination_triggered(long_stall));
}

TEST_CASE("check_constraints counts the three growth checks") {
    // A plausible sigmoid: starts near zero, saturates at 10.
    auto logistic = parse_expression("(c0 / (expp((t - c1), c2) + c3))");
    CHECK(check_constraints(logistic, std::vector<double>{10.0, 50.0, -0.2, 1.0}) ==
          0);

    auto line = parse_expression("(c0 + (c1 * t))");
    // Flat at 5: birth size violated, nothing else.
    CHECK(check_constraints(line, std::vector<double>{5.0, 0.0}) == 1);
    // V = -t: negative volumes and decreasing.
    CHECK(check_constraints(line, std::vector<double>{0.0, -1.0}) == 2);
    // V = 20t: fine at birth, monotone, but oversized at age 100.
    CHECK(check_constraints(line, std::vector<double>{0.0, 20.0}) == 1);
    // V = -0.02 + 20t: negative at birth, oversized adult.
    CHECK(check_constraints(line, std::vector<double>{-0.02, 20.0}) == 2);
}

TEST_CASE("fitting a line recovers an exact feasible target") {
    auto tree = parse_expression("(c0 + (c1 * t))");
    std::vector<double> ts{0.0, 50.0, 100.0};
    std::vector<double> ys{0.0, 1.0, 2.0};
    RvFitOptions options;
    options.budget = 20000;
    options.seed = 7;
    RVSolution sol = fit_constants(tree, ts, ys, options);
    CHECK(sol.train_mse <= 1e-12);
    CHECK(sol.violations == 0);
    CHECK(sol.constants.size() == 2);
    CHECK(sol.evaluations_used <= options.budget);
    double pred = sol.constants[0] + sol.constants[1] * 50.0;
    CHECK(pred == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("an infeasible exact fit loses to a feasible compromise") {
    // A flat line through y = 2 would be exact but breaks the birth-size
    // check, so the fitter must return a worse-mse feasible line instead.
    auto tree = parse_expression("(c0 + (c1 * t))");
    std::vector<double> ts{1.0, 2.0, 3.0};
    std::vector<double> ys{2.0, 2.0, 2.0};
    RvFitOptions options;
    options.budget = 20000;
    options.seed = 7;
    RVSolution sol = fit_constants(tree, ts, ys, options);
    CHECK(sol.violations == 0);
    CHECK(sol.train_mse > 1e-6);
    double at_birth = sol.constants[0];
    CHECK(at_birth <= 0.01 + 1e-9);
}

TEST_CASE("fitting the logistic skeleton reaches the noiseless optimum") {
    auto tree = parse_expression("(c0 / (expp((t - c1), c2) + c3))");
    std::vector<double> ts{20.0, 40.0, 60.0, 80.0};
    std::vector<double> ys;
    for (double t : ts) ys.push_back(eval_logistic(t, 10.0, 0.2, 50.0));
    RvFitOptions options;
    options.budget = 50000;
    options.seed = 1;
    RVSolution sol = fit_constants(tree, ts, ys, options);
    CHECK(sol.train_mse <= 1e-6);
    CHECK(sol.violations == 0);
    CHECK(sol.evaluations_used <= options.budget);
}

TEST_CASE("constant fits are deterministic in the seed") {
    auto tree = parse_expression("(c0 / (expp((t - c1), c2) + c3))");
    std::vector<double> ts{10.0, 35.0, 60.0, 85.0};
    std::vector<double> ys{0.5, 2.0, 7.5, 9.8};
    RvFitOptions options;
    options.budget = 5000;
    options.seed = 42;
    RVSolution a = fit_constants(tree, ts, ys, options);
    RVSolution b = fit_constants(tree, ts, ys, options);
    CHECK(a.constants == b.constants);
    CHECK(a.train_mse == b.train_mse);
    CHECK(a.violations == b.violations);
    CHECK(a.evaluations_used == b.evaluations_used);
}

TEST_CASE("fitted constants respect the option bounds") {
    auto tree = parse_expression("(c0 + (c1 * t))");
    std::vector<double> ts{0.0, 50.0, 100.0};
    std::vector<double> ys{0.0, 500.0, 1000.0};  // wants c1 = 10, c0 = 0
    RvFitOptions options;
    options.lo = -3.0;
    options.hi = 3.0;
    options.budget = 5000;
    options.seed = 3;
    RVSolution sol = fit_constants(tree, ts, ys, options);
    for (double c : sol.constants) {
        CHECK(c <= 3.0 + 1e-9);
        CHECK(c >= -3.0 - 1e-9);
    }
}

TEST_CASE("fit_constants rejects trees without constants and empty data") {
    auto no_constants = parse_expression("(t + (t * t))");
    std::vector<double> ts{1.0, 2.0};
    std::vector<double> ys{1.0, 2.0};
    CHECK_THROWS_AS(fit_constants(no_constants, ts, ys, {}), std::invalid_argument);

    auto tree = parse_expression("(c0 + (c1 * t))");
    CHECK_THROWS_AS(fit_constants(tree, {}, {}, {}), std::invalid_argument);
    std::vector<double> one{1.0};
    CHECK_THROWS_AS(fit_constants(tree, one, ts, {}), std::invalid_argument);
}

TEST_CASE("violation counts come from the full age grid") {
    // Constants whose curve dips only between decade marks would slip through
    // a coarse check; the reported count must come from the dense grid.
    auto tree = parse_expression("(c0 * (t - c1))");
    std::vector<double> ts{0.0, 100.0};
    std::vector<double> ys{0.0, 100.0};
    RvFitOptions options;
    options.budget = 2000;
    options.seed = 5;
    RVSolution sol = fit_constants(tree, ts, ys, options);
    CHECK(sol.violations == check_constraints(tree, sol.constants, options.constraints));
}
