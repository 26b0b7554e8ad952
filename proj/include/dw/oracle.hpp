#pragma once

// Brute-force evaluation: enumerate every deterministic policy and every
// joint chance state. Independent of the elimination code in solver.hpp and
// only meant for small diagrams.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dw/diagram.hpp"
#include "dw/error.hpp"
#include "dw/solver.hpp"

namespace dw {

inline constexpr double kOracleMaxPolicies = 1e6;
inline constexpr double kOracleMaxJointStates = 1e5;

namespace detail {

struct FlatNode {
    const Node* node = nullptr;
    std::size_t card = 0;
    std::vector<std::size_t> preds;  // positions in FlatDiagram::nodes
    std::vector<std::size_t> pred_cards;

    std::size_t row(const std::vector<std::size_t>& values) const {
        std::size_t r = 0;
        for (std::size_t k = 0; k < preds.size(); ++k) r = r * pred_cards[k] + values[preds[k]];
        return r;
    }

    std::size_t rows() const {
        std::size_t r = 1;
        for (auto c : pred_cards) r *= c;
        return r;
    }
};

/// Index-based copy of a diagram, nodes in topological order.
struct FlatDiagram {
    std::vector<FlatNode> nodes;
    std::vector<std::size_t> chance;
    std::vector<std::size_t> decisions;  // temporal order
    std::size_t value = 0;

    explicit FlatDiagram(const InfluenceDiagram& d) {
        auto order = topological_order(d);
        std::map<std::string, std::size_t> pos;
        for (std::size_t k = 0; k < order.size(); ++k) pos[order[k]] = k;
        for (const auto& name : order) {
            const Node& n = d.at(name);
            FlatNode f;
            f.node = &n;
            f.card = n.outcomes.size();
            for (const auto& p : n.predecessors) {
                f.preds.push_back(pos.at(p));
                f.pred_cards.push_back(d.at(p).outcomes.size());
            }
            const std::size_t idx = nodes.size();
            if (n.is_chance()) chance.push_back(idx);
            if (n.is_decision()) decisions.push_back(idx);
            if (n.is_value()) value = idx;
            nodes.push_back(std::move(f));
        }
    }

    /// Expected utility of a policy given as one choice vector per decision
    /// (temporal order), each indexed by information row.
    double expected_utility(const std::vector<std::vector<std::size_t>>& choices) const {
        std::vector<std::size_t> values(nodes.size(), 0);
        std::vector<std::size_t> decision_slot(nodes.size(), 0);
        for (std::size_t k = 0; k < decisions.size(); ++k) decision_slot[decisions[k]] = k;

        double total = 0.0;
        std::vector<std::size_t> state(chance.size(), 0);
        for (;;) {
            for (std::size_t k = 0; k < chance.size(); ++k) values[chance[k]] = state[k];
            double p = 1.0;
            double u = 0.0;
            for (std::size_t idx = 0; idx < nodes.size() && p != 0.0; ++idx) {
                const FlatNode& f = nodes[idx];
                switch (f.node->kind) {
                    case NodeKind::chance: p *= f.node->cpt[f.row(values)][values[idx]]; break;
                    case NodeKind::decision: values[idx] = choices[decision_slot[idx]][f.row(values)]; break;
                    case NodeKind::value: u = f.node->utilities[f.row(values)]; break;
                }
            }
            if (p != 0.0) total += p * u;

            std::size_t k = chance.size();
            while (k > 0) {
                --k;
                if (++state[k] < nodes[chance[k]].card) break;
                state[k] = 0;
                if (k == 0) return total;
            }
            if (chance.empty()) return total;
        }
    }
};

}  // namespace detail

/// Expected utility induced by `policy`. Rules are matched by decision name
/// and must range over the canonical information sets.
inline double expected_utility(const InfluenceDiagram& input, const Policy& policy) {
    require_valid(input);
    InfluenceDiagram d = canonicalize(input);
    detail::FlatDiagram flat(d);
    std::vector<std::vector<std::size_t>> choices;
    for (std::size_t idx : flat.decisions) {
        const detail::FlatNode& f = flat.nodes[idx];
        const DecisionRule* rule = policy.find(f.node->name);
        if (!rule || rule->choice.size() != f.rows() || rule->information != f.node->predecessors)
            throw Error("BAD_POLICY", "policy does not cover decision '" + f.node->name + "'", f.node->name);
        for (auto c : rule->choice)
            if (c >= f.card) throw Error("BAD_POLICY", "alternative out of range", f.node->name);
        choices.push_back(rule->choice);
    }
    return flat.expected_utility(choices);
}

/// Exhaustive policy search. Returns the lexicographically first policy
/// among those with maximal expected utility; the trace is empty.
inline SolveResult solve_oracle(const InfluenceDiagram& input) {
    require_valid(input);
    InfluenceDiagram d = canonicalize(input);
    detail::FlatDiagram flat(d);

    double joint_states = 1.0;
    for (std::size_t idx : flat.chance) joint_states *= static_cast<double>(flat.nodes[idx].card);
    double log_policies = 0.0;
    for (std::size_t idx : flat.decisions)
        log_policies += static_cast<double>(flat.nodes[idx].rows()) * std::log(flat.nodes[idx].card);
    if (joint_states > kOracleMaxJointStates || log_policies > std::log(kOracleMaxPolicies) + 1e-9)
        throw Error("TOO_LARGE", "diagram too large for exhaustive enumeration");

    std::vector<std::vector<std::size_t>> choices;
    for (std::size_t idx : flat.decisions) choices.emplace_back(flat.nodes[idx].rows(), 0);

    SolveResult best;
    bool have = false;
    std::vector<std::vector<std::size_t>> best_choices;
    for (;;) {
        const double eu = flat.expected_utility(choices);
        if (!have || eu > best.expected_utility) {
            best.expected_utility = eu;
            best_choices = choices;
            have = true;
        }
        // Odometer over (decision, row) slots; the last slot turns fastest.
        bool carry = true;
        for (std::size_t k = choices.size(); carry && k-- > 0;) {
            for (std::size_t r = choices[k].size(); carry && r-- > 0;) {
                if (++choices[k][r] < flat.nodes[flat.decisions[k]].card)
                    carry = false;
                else
                    choices[k][r] = 0;
            }
        }
        if (carry) break;
    }

    for (std::size_t k = 0; k < flat.decisions.size(); ++k) {
        const Node& n = *flat.nodes[flat.decisions[k]].node;
        best.policy.rules.push_back({n.name, n.predecessors, best_choices[k]});
    }
    return best;
}

}  // namespace dw
