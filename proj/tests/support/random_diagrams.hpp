#pragma once

// Seeded generator of small valid influence diagrams for property tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "dw/diagram.hpp"

namespace dw::test {

struct RandomShape {
    int max_chance = 4;
    int min_chance = 2;
    int max_decisions = 2;
    int outcomes = 2;
    double arc_probability = 0.6;       // into chance nodes
    double info_arc_probability = 0.2;  // into decisions
    double value_arc_probability = 0.9;
    double max_log_policies = std::log(1e5);
};

inline std::vector<double> random_row(std::mt19937_64& rng, int width) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<double> row(static_cast<std::size_t>(width));
    double sum = 0.0;
    for (double& p : row) sum += (p = u(rng));
    for (double& p : row) p /= sum;
    return row;
}

inline std::vector<std::string> labels(const std::string& stem, int n) {
    std::vector<std::string> out;
    for (int k = 0; k < n; ++k) out.push_back(stem + std::to_string(k));
    return out;
}

/// Fills every table of `d` with random numbers (rows normalized,
/// utilities in [0,100]).
inline void randomize_tables(std::mt19937_64& rng, InfluenceDiagram& d) {
    std::uniform_real_distribution<double> util(0.0, 100.0);
    for (Node& n : d.nodes) {
        const std::size_t rows = predecessor_frame(d, n).size();
        if (n.is_chance()) {
            n.cpt.clear();
            for (std::size_t r = 0; r < rows; ++r) n.cpt.push_back(random_row(rng, static_cast<int>(n.outcomes.size())));
        } else if (n.is_value()) {
            n.utilities.assign(rows, 0.0);
            for (double& u : n.utilities) u = util(rng);
        }
    }
}

inline double log_policy_count(const InfluenceDiagram& d) {
    InfluenceDiagram c = canonicalize(d);
    double total = 0.0;
    for (const Node& n : c.nodes)
        if (n.is_decision())
            total += static_cast<double>(predecessor_frame(c, n).size()) * std::log(static_cast<double>(n.outcomes.size()));
    return total;
}

/// Acyclic, regular, single value node; tables random. Regenerates until
/// the canonical policy space stays within `shape.max_log_policies`.
inline InfluenceDiagram random_diagram(std::mt19937_64& rng, const RandomShape& shape = {}) {
    for (;;) {
        std::uniform_int_distribution<int> nchance(shape.min_chance, shape.max_chance);
        // More decisions are likelier: 0, 1, 2, ... weighted 1, 2, 5, ...
        std::vector<double> weights;
        for (int k = 0; k <= shape.max_decisions; ++k) weights.push_back(k * k + 1.0);
        std::discrete_distribution<int> ndec(weights.begin(), weights.end());
        std::bernoulli_distribution arc(shape.arc_probability);
        std::bernoulli_distribution info_arc(shape.info_arc_probability);
        std::bernoulli_distribution value_arc(shape.value_arc_probability);
        const int nc = nchance(rng);
        const int nd = ndec(rng);

        // Random interleaving; decisions are named in the order they appear.
        std::vector<bool> is_decision(static_cast<std::size_t>(nc), false);
        is_decision.resize(static_cast<std::size_t>(nc + nd), true);
        std::shuffle(is_decision.begin(), is_decision.end(), rng);

        InfluenceDiagram d;
        d.name = "random";
        int ci = 0;
        int di = 0;
        std::string last_decision;
        for (bool dec : is_decision) {
            Node n;
            if (dec) {
                n = decision_node("d" + std::to_string(di++), labels("a", shape.outcomes));
            } else {
                n = chance_node("c" + std::to_string(ci++), labels("o", shape.outcomes), {}, {});
            }
            int info = 0;
            for (const Node& earlier : d.nodes) {
                if (!(dec ? info_arc(rng) : arc(rng))) continue;
                if (dec && earlier.is_decision()) continue;
                if (dec && ++info > 2) continue;
                n.predecessors.push_back(earlier.name);
            }
            if (dec && info == 0) {
                // Observe the most recent chance node, often a child of others.
                for (auto it = d.nodes.rbegin(); it != d.nodes.rend(); ++it)
                    if (it->is_chance()) {
                        n.predecessors.push_back(it->name);
                        break;
                    }
            }
            if (dec && !last_decision.empty()) {
                d.nodes.push_back(n);
                if (!has_path(d, last_decision, n.name)) d.nodes.back().predecessors.push_back(last_decision);
                n = d.nodes.back();
                d.nodes.pop_back();
            }
            if (dec) last_decision = n.name;
            d.nodes.push_back(std::move(n));
        }
        Node v = value_node("v", {}, {});
        for (const Node& n : d.nodes)
            if (value_arc(rng)) v.predecessors.push_back(n.name);
        if (v.predecessors.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, d.nodes.size() - 1);
            v.predecessors.push_back(d.nodes[pick(rng)].name);
        }
        d.nodes.push_back(std::move(v));
        randomize_tables(rng, d);
        if (log_policy_count(d) <= shape.max_log_policies) return d;
    }
}

}  // namespace dw::test
