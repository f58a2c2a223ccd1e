#ifndef ECOSMPC_DRIVER_HPP
#define ECOSMPC_DRIVER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace ecosmpc {

// Markov chain over a discrete driver-error support W (m/s^2). The
// realized plant error adds a continuous uniform jitter around the
// sampled support point, truncated at the support's outer bounds.
struct DriverErrorModel {
    std::vector<double> support;                  // strictly increasing
    std::vector<std::vector<double>> transition;  // row-stochastic |W| x |W|
    double jitter_halfwidth{0.0};

    std::size_t size() const { return support.size(); }

    void validate() const {
        const std::size_t n = support.size();
        if (n == 0) throw std::invalid_argument("driver model: empty support");
        for (std::size_t i = 1; i < n; ++i)
            if (!(support[i] > support[i - 1]))
                throw std::invalid_argument("driver model: support not strictly increasing");
        if (transition.size() != n)
            throw std::invalid_argument("driver model: transition row count mismatch");
        for (const auto& row : transition) {
            if (row.size() != n)
                throw std::invalid_argument("driver model: transition column count mismatch");
            double sum = 0.0;
            for (double p : row) {
                if (p < 0.0 || p > 1.0)
                    throw std::invalid_argument("driver model: probability outside [0,1]");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::invalid_argument("driver model: row does not sum to 1");
        }
        if (jitter_halfwidth < 0.0)
            throw std::invalid_argument("driver model: negative jitter");
    }

    // Nearest support index to a realized (continuous) error.
    std::size_t quantize(double error) const {
        std::size_t best = 0;
        double best_d = std::abs(error - support[0]);
        for (std::size_t i = 1; i < support.size(); ++i) {
            const double d = std::abs(error - support[i]);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }
};

struct SampledError {
    std::size_t state;
    double value;  // support point plus jitter, truncated to the support range
};

inline SampledError sample_next_error(const DriverErrorModel& model,
                                      std::size_t current_state, std::mt19937_64& rng) {
    if (current_state >= model.size())
        throw std::invalid_argument("sample_next_error: state out of range");
    const auto& row = model.transition[current_state];
    double total = 0.0;
    for (double p : row) total += p;
    if (total <= 0.0) throw std::invalid_argument("sample_next_error: degenerate row");

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double x = unit(rng) * total;
    double cum = 0.0;
    std::size_t next = row.size() - 1;
    for (std::size_t b = 0; b < row.size(); ++b) {
        cum += row[b];
        if (x < cum) {
            next = b;
            break;
        }
    }

    double value = model.support[next];
    if (model.jitter_halfwidth > 0.0) {
        std::uniform_real_distribution<double> jitter(-model.jitter_halfwidth,
                                                      model.jitter_halfwidth);
        value = std::clamp(value + jitter(rng), model.support.front(), model.support.back());
    }
    return {next, value};
}

// One error-realization path over the planning horizon: M+1 node
// indices (root first) and the product of traversed edge probabilities.
struct Scenario {
    std::vector<std::size_t> path;
    double probability{1.0};
};

struct ScenarioSet {
    std::vector<Scenario> scenarios;
    double threshold{0.0};       // p_th
    std::size_t max_samples{0};  // N_max
    bool fallback{false};        // true when every sampled path fell below p_th

    double total_probability() const {
        double sum = 0.0;
        for (const auto& sc : scenarios) sum += sc.probability;
        return sum;
    }
};

// Sampling-based scenario tree generation: draw max_samples random
// paths from the chain, keep those with path probability >= threshold.
// Duplicate paths are kept once with their single-path probability;
// the expectation later renormalizes over the retained set.
inline ScenarioSet build_scenario_set(const DriverErrorModel& model, std::size_t root_state,
                                      std::size_t horizon, std::size_t max_samples,
                                      double threshold, std::mt19937_64& rng) {
    if (horizon < 1) throw std::invalid_argument("build_scenario_set: horizon must be >= 1");
    if (max_samples < 1) throw std::invalid_argument("build_scenario_set: need max_samples >= 1");
    if (threshold < 0.0 || threshold >= 1.0)
        throw std::invalid_argument("build_scenario_set: threshold outside [0,1)");
    if (root_state >= model.size())
        throw std::invalid_argument("build_scenario_set: root state out of range");

    std::map<std::vector<std::size_t>, double> retained;
    Scenario best;  // highest-probability sample, fallback when all pruned
    best.probability = -1.0;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t l = 0; l < max_samples; ++l) {
        Scenario sc;
        sc.path.reserve(horizon + 1);
        sc.path.push_back(root_state);
        sc.probability = 1.0;
        std::size_t a = root_state;
        for (std::size_t t = 0; t < horizon; ++t) {
            const auto& row = model.transition[a];
            const double x = unit(rng);
            double cum = 0.0;
            std::size_t b = row.size() - 1;
            for (std::size_t j = 0; j < row.size(); ++j) {
                cum += row[j];
                if (x < cum) {
                    b = j;
                    break;
                }
            }
            sc.probability *= row[b];
            sc.path.push_back(b);
            a = b;
        }
        if (sc.probability > best.probability) best = sc;
        if (sc.probability >= threshold) retained.emplace(sc.path, sc.probability);
    }

    ScenarioSet set;
    set.threshold = threshold;
    set.max_samples = max_samples;
    if (retained.empty()) {
        set.scenarios.push_back(best);
        set.fallback = true;
    } else {
        for (const auto& [path, prob] : retained) set.scenarios.push_back({path, prob});
    }
    return set;
}

// Full tree enumeration; exact reference for small |W| and horizons.
inline ScenarioSet enumerate_scenarios(const DriverErrorModel& model, std::size_t root_state,
                                       std::size_t horizon) {
    ScenarioSet set;
    set.threshold = 0.0;
    Scenario cur;
    cur.path.push_back(root_state);
    auto recurse = [&](auto&& self, std::size_t depth) -> void {
        if (depth == horizon) {
            set.scenarios.push_back(cur);
            return;
        }
        const std::size_t a = cur.path.back();
        for (std::size_t b = 0; b < model.size(); ++b) {
            const double p = model.transition[a][b];
            if (p <= 0.0) continue;
            cur.path.push_back(b);
            cur.probability *= p;
            self(self, depth + 1);
            cur.probability /= p;
            cur.path.pop_back();
        }
    };
    recurse(recurse, 0);
    set.max_samples = set.scenarios.size();
    return set;
}

inline DriverErrorModel driver_model_from_json(const nlohmann::json& j) {
    DriverErrorModel model;
    model.support = j.at("support").get<std::vector<double>>();
    model.transition = j.at("transition").get<std::vector<std::vector<double>>>();
    model.jitter_halfwidth = j.value("jitter_halfwidth", 0.0);
    model.validate();
    return model;
}

// Driver chain used throughout the experiments in this repo.
inline DriverErrorModel default_transition_model(std::vector<double> support,
                                                 double jitter_halfwidth) {
    DriverErrorModel model;
    model.support = std::move(support);
    model.transition = {
        {0.10, 0.30, 0.45, 0.10, 0.05},
        {0.05, 0.25, 0.45, 0.20, 0.05},
        {0.01, 0.10, 0.78, 0.10, 0.01},
        {0.05, 0.15, 0.45, 0.25, 0.10},
        {0.05, 0.15, 0.45, 0.30, 0.05},
    };
    model.jitter_halfwidth = jitter_halfwidth;
    model.validate();
    return model;
}

}  // namespace ecosmpc

#endif  // ECOSMPC_DRIVER_HPP
