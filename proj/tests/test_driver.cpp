#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>

#include "ecosmpc/driver.hpp"

using namespace ecosmpc;

namespace {

DriverErrorModel scenario1_model(double jitter = 0.0) {
    return default_transition_model({-0.3, -0.15, 0.0, 0.15, 0.3}, jitter);
}

DriverErrorModel three_state_model() {
    DriverErrorModel m;
    m.support = {-0.2, 0.0, 0.2};
    m.transition = {{0.5, 0.3, 0.2}, {0.1, 0.8, 0.1}, {0.25, 0.25, 0.5}};
    m.validate();
    return m;
}

}  // namespace

TEST_CASE("model validation catches bad inputs") {
    DriverErrorModel m = three_state_model();
    m.transition[1][1] = 0.9;  // row no longer sums to 1
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);

    DriverErrorModel unsorted = three_state_model();
    std::swap(unsorted.support[0], unsorted.support[2]);
    CHECK_THROWS_AS(unsorted.validate(), std::invalid_argument);

    DriverErrorModel negative = three_state_model();
    negative.transition[0] = {-0.1, 0.9, 0.2};
    CHECK_THROWS_AS(negative.validate(), std::invalid_argument);
}

TEST_CASE("quantize maps to the nearest support point") {
    const DriverErrorModel m = scenario1_model();
    CHECK(m.quantize(0.0) == 2);
    CHECK(m.quantize(0.09) == 3);
    CHECK(m.quantize(-0.4) == 0);
    CHECK(m.quantize(0.21) == 3);
    CHECK(m.quantize(0.24) == 4);
}

TEST_CASE("absorbing state always transitions to itself") {
    DriverErrorModel m;
    m.support = {-0.1, 0.0, 0.1};
    m.transition = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
    m.validate();
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) CHECK(sample_next_error(m, 1, rng).state == 1);
}

TEST_CASE("no jitter reproduces the support point exactly") {
    const DriverErrorModel m = scenario1_model(0.0);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        const SampledError e = sample_next_error(m, 2, rng);
        CHECK(e.value == m.support[e.state]);
    }
}

TEST_CASE("jittered samples stay within the support bounds") {
    const DriverErrorModel m = scenario1_model(0.075);
    std::mt19937_64 rng(5);
    std::size_t state = 2;
    for (int i = 0; i < 10000; ++i) {
        const SampledError e = sample_next_error(m, state, rng);
        state = e.state;
        CHECK(e.value >= -0.3);
        CHECK(e.value <= 0.3);
        CHECK(std::abs(e.value - m.support[e.state]) <= 0.075 + 1e-12);
    }
}

TEST_CASE("empirical frequencies match the central row within 0.01") {
    const DriverErrorModel m = scenario1_model();
    std::mt19937_64 rng(42);
    const int n = 100000;
    std::vector<int> counts(5, 0);
    for (int i = 0; i < n; ++i) ++counts[sample_next_error(m, 2, rng).state];
    const std::vector<double> expected = {0.01, 0.10, 0.78, 0.10, 0.01};
    for (std::size_t b = 0; b < 5; ++b)
        CHECK(std::abs(static_cast<double>(counts[b]) / n - expected[b]) < 0.01);
}

TEST_CASE("degenerate chain yields one scenario with probability 1") {
    DriverErrorModel m;
    m.support = {0.0};
    m.transition = {{1.0}};
    m.validate();
    std::mt19937_64 rng(1);
    const ScenarioSet set = build_scenario_set(m, 0, 7, 50, 0.0, rng);
    REQUIRE(set.scenarios.size() == 1);
    CHECK(set.scenarios[0].probability == 1.0);
    CHECK(set.scenarios[0].path.size() == 8);
}

TEST_CASE("exhaustive sampling at |W|=3, M=2 recovers the full enumeration") {
    const DriverErrorModel m = three_state_model();
    std::mt19937_64 rng(9);
    const ScenarioSet sampled = build_scenario_set(m, 1, 2, 200000, 0.0, rng);
    const ScenarioSet full = enumerate_scenarios(m, 1, 2);

    REQUIRE(full.scenarios.size() == 9);
    std::map<std::vector<std::size_t>, double> expected;
    for (const auto& sc : full.scenarios) expected[sc.path] = sc.probability;
    REQUIRE(sampled.scenarios.size() == expected.size());
    for (const auto& sc : sampled.scenarios) {
        REQUIRE(expected.count(sc.path) == 1);
        CHECK(sc.probability == doctest::Approx(expected[sc.path]).epsilon(1e-15));
    }
}

TEST_CASE("full tree probability sums to one; pruned sums are below") {
    const DriverErrorModel m = three_state_model();
    for (std::size_t horizon : {1u, 2u, 3u, 5u}) {
        const ScenarioSet full = enumerate_scenarios(m, 0, horizon);
        CHECK(full.total_probability() == doctest::Approx(1.0).epsilon(1e-12));
    }
    std::mt19937_64 rng(13);
    const ScenarioSet pruned = build_scenario_set(m, 0, 5, 500, 1e-3, rng);
    CHECK(pruned.total_probability() <= 1.0 + 1e-12);
    for (const auto& sc : pruned.scenarios) CHECK(sc.probability >= 1e-3);
}

TEST_CASE("the dominant diagonal path survives pruning at M=10") {
    const DriverErrorModel m = scenario1_model();
    std::mt19937_64 rng(21);
    const ScenarioSet set = build_scenario_set(m, 2, 10, 2000, 1e-4, rng);
    const std::vector<std::size_t> stay_centered(11, 2);
    bool found = false;
    for (const auto& sc : set.scenarios)
        if (sc.path == stay_centered) {
            found = true;
            CHECK(sc.probability == doctest::Approx(std::pow(0.78, 10)).epsilon(1e-12));
        }
    CHECK(found);
}

TEST_CASE("retained paths respect the threshold and structure invariants") {
    const DriverErrorModel m = scenario1_model();
    std::mt19937_64 rng(77);
    const ScenarioSet set = build_scenario_set(m, 2, 10, 500, 1e-4, rng);
    for (const auto& sc : set.scenarios) {
        CHECK(sc.probability >= 1e-4);
        CHECK(sc.probability <= 1.0);
        REQUIRE(sc.path.size() == 11);
        CHECK(sc.path.front() == 2);
        for (std::size_t t = 0; t + 1 < sc.path.size(); ++t)
            CHECK(m.transition[sc.path[t]][sc.path[t + 1]] > 0.0);
    }
    CHECK(set.scenarios.size() <= 500);
}

TEST_CASE("all paths below threshold falls back to the best sample") {
    DriverErrorModel m = three_state_model();
    std::mt19937_64 rng(3);
    // Threshold above the most likely path probability at M=20.
    const ScenarioSet set = build_scenario_set(m, 0, 20, 50, 0.9, rng);
    REQUIRE(set.scenarios.size() == 1);
    CHECK(set.fallback);
    CHECK(set.scenarios[0].probability > 0.0);
}

TEST_CASE("model loads from JSON") {
    const nlohmann::json j = {
        {"support", {-0.3, -0.15, 0.0, 0.15, 0.3}},
        {"transition",
         {{0.10, 0.30, 0.45, 0.10, 0.05},
          {0.05, 0.25, 0.45, 0.20, 0.05},
          {0.01, 0.10, 0.78, 0.10, 0.01},
          {0.05, 0.15, 0.45, 0.25, 0.10},
          {0.05, 0.15, 0.45, 0.30, 0.05}}},
        {"jitter_halfwidth", 0.075}};
    const DriverErrorModel m = driver_model_from_json(j);
    CHECK(m.size() == 5);
    CHECK(m.jitter_halfwidth == 0.075);
    CHECK(m.transition[2][2] == 0.78);
}
