#pragma once

// Exact influence-diagram evaluation by node elimination: barren-node
// removal, chance-node expectation into the value node, decision-node
// maximization, and Bayes-rule arc reversal between chance nodes.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dw/diagram.hpp"
#include "dw/error.hpp"

namespace dw {

/// Optimal choice of one decision for each of its information states.
struct DecisionRule {
    std::string decision;
    std::vector<std::string> information;  // informational predecessors, row order
    std::vector<std::size_t> choice;       // alternative index per information row

    bool operator==(const DecisionRule&) const = default;
};

/// One rule per decision, in temporal order.
struct Policy {
    std::vector<DecisionRule> rules;

    const DecisionRule* find(const std::string& decision) const {
        for (const auto& r : rules)
            if (r.decision == decision) return &r;
        return nullptr;
    }

    bool operator==(const Policy&) const = default;
};

enum class StepKind { barren_removal, arc_reversal, chance_removal, decision_removal };

inline const char* to_string(StepKind k) {
    switch (k) {
        case StepKind::barren_removal: return "barren_removal";
        case StepKind::arc_reversal: return "arc_reversal";
        case StepKind::chance_removal: return "chance_removal";
        case StepKind::decision_removal: return "decision_removal";
    }
    return "?";
}

struct Step {
    StepKind kind;
    std::string node;    // removed node, or arc tail for reversals
    std::string target;  // arc head for reversals
    std::string note;

    bool operator==(const Step&) const = default;
};

using EliminationTrace = std::vector<Step>;

struct SolveResult {
    double expected_utility = 0.0;
    Policy policy;
    EliminationTrace trace;

    bool operator==(const SolveResult&) const = default;
};

/// Pins one decision's choice at one information state; the rest of the
/// policy stays optimal.
struct ForcedChoice {
    std::string decision;
    std::size_t info_row = 0;
    std::size_t alternative = 0;
};

// ---------------------------------------------------------------------------
// Primitives
// ---------------------------------------------------------------------------

namespace detail {

inline void erase_node(InfluenceDiagram& d, const std::string& name) {
    std::erase_if(d.nodes, [&](const Node& n) { return n.name == name; });
}

inline std::vector<std::string> without(const std::vector<std::string>& xs, const std::string& drop) {
    std::vector<std::string> out;
    for (const auto& x : xs)
        if (x != drop) out.push_back(x);
    return out;
}

inline void append_missing(std::vector<std::string>& xs, const std::vector<std::string>& more,
                           const std::set<std::string>& skip = {}) {
    for (const auto& m : more)
        if (!skip.contains(m) && std::find(xs.begin(), xs.end(), m) == xs.end()) xs.push_back(m);
}

inline std::vector<std::string> successors_of(const InfluenceDiagram& d, const std::string& name) {
    std::vector<std::string> out;
    for (const Node& n : d.nodes)
        if (std::find(n.predecessors.begin(), n.predecessors.end(), name) != n.predecessors.end())
            out.push_back(n.name);
    std::sort(out.begin(), out.end());
    return out;
}

inline DecisionRule default_rule(const InfluenceDiagram& d, const Node& decision,
                                 const std::optional<ForcedChoice>& forced) {
    DecisionRule rule{decision.name, decision.predecessors,
                      std::vector<std::size_t>(predecessor_frame(d, decision).size(), 0)};
    if (forced && forced->decision == decision.name && forced->info_row < rule.choice.size())
        rule.choice[forced->info_row] = forced->alternative;
    return rule;
}

}  // namespace detail

/// Reverses the arc `from -> to` between two chance nodes by Bayes' rule.
///
/// Both nodes end up conditioned on the union of their old predecessors;
/// `from` additionally on `to`. Where the new marginal of `to` is zero the
/// posterior row of `from` is uniform. The joint distribution over all chance
/// nodes is unchanged.
inline InfluenceDiagram reverse_arc(const InfluenceDiagram& d, const std::string& from, const std::string& to) {
    const Node& ni = d.at(from);
    const Node& nj = d.at(to);
    if (!ni.is_chance() || !nj.is_chance())
        throw Error("NOT_CHANCE", "arc reversal needs two chance nodes: '" + from + "' -> '" + to + "'", from);
    if (!d.has_arc(from, to)) throw Error("NO_ARC", "no arc '" + from + "' -> '" + to + "'", from);
    for (const auto& s : detail::successors_of(d, from))
        if (s != to && has_path(d, s, to))
            throw Error("REVERSAL_PATH", "reversing '" + from + "' -> '" + to + "' would create a cycle", from);

    std::vector<std::string> pred_j = detail::without(nj.predecessors, from);
    detail::append_missing(pred_j, ni.predecessors);
    std::vector<std::string> pred_i = ni.predecessors;
    detail::append_missing(pred_i, detail::without(nj.predecessors, from));
    pred_i.push_back(to);

    const Frame old_i = predecessor_frame(d, ni);
    const Frame old_j = predecessor_frame(d, nj);
    const Frame new_j(d, pred_j);
    const Frame new_i(d, pred_i);
    const std::size_t ci = ni.outcomes.size();
    const std::size_t cj = nj.outcomes.size();

    std::vector<std::vector<double>> cpt_j(new_j.size(), std::vector<double>(cj, 0.0));
    std::vector<std::vector<double>> cpt_i(new_i.size(), std::vector<double>(ci, 0.0));
    std::vector<double> joint(ci * cj);

    new_j.for_each([&](std::size_t row, const Assignment& context) {
        Assignment a = context;
        for (std::size_t x = 0; x < ci; ++x) {
            a[from] = x;
            const double px = ni.cpt[old_i.index(a)][x];
            const auto& rj = nj.cpt[old_j.index(a)];
            for (std::size_t y = 0; y < cj; ++y) joint[x * cj + y] = px * rj[y];
        }
        for (std::size_t y = 0; y < cj; ++y) {
            double marginal = 0.0;
            for (std::size_t x = 0; x < ci; ++x) marginal += joint[x * cj + y];
            cpt_j[row][y] = marginal;
            a[to] = y;
            auto& ri = cpt_i[new_i.index(a)];
            for (std::size_t x = 0; x < ci; ++x)
                ri[x] = marginal > 0.0 ? joint[x * cj + y] / marginal : 1.0 / static_cast<double>(ci);
        }
    });

    InfluenceDiagram out = d;
    Node& oi = out.at(from);
    Node& oj = out.at(to);
    oi.predecessors = std::move(pred_i);
    oi.cpt = std::move(cpt_i);
    oj.predecessors = std::move(pred_j);
    oj.cpt = std::move(cpt_j);
    return out;
}

namespace detail {

inline InfluenceDiagram eliminate_barren(const InfluenceDiagram& d, EliminationTrace* trace, Policy* policy,
                                         const std::optional<ForcedChoice>& forced) {
    InfluenceDiagram out = d;
    for (;;) {
        std::vector<std::string> barren;
        auto succ = successors(out);
        for (const Node& n : out.nodes)
            if (!n.is_value() && succ[n.name].empty()) barren.push_back(n.name);
        if (barren.empty()) return out;
        std::sort(barren.begin(), barren.end());
        const std::string& victim = barren.front();
        const Node& node = out.at(victim);
        std::string note;
        if (node.is_decision()) {
            note = "decision has no effect on value; policy defaults to alternative 0";
            if (policy) policy->rules.push_back(default_rule(out, node, forced));
        }
        if (trace) trace->push_back({StepKind::barren_removal, victim, {}, std::move(note)});
        erase_node(out, victim);
    }
}

inline InfluenceDiagram eliminate_decision_impl(const InfluenceDiagram& d, const std::string& decision,
                                                const std::optional<ForcedChoice>& forced, DecisionRule& rule_out) {
    const Node& dn = d.at(decision);
    if (!dn.is_decision()) throw Error("NOT_REMOVABLE", "'" + decision + "' is not a decision node", decision);
    const Node& v = d.value();
    auto succ = successors_of(d, decision);
    if (succ != std::vector<std::string>{v.name})
        throw Error("NOT_REMOVABLE", "decision '" + decision + "' has successors other than the value node", decision);
    for (const auto& p : v.predecessors)
        if (p != decision && std::find(dn.predecessors.begin(), dn.predecessors.end(), p) == dn.predecessors.end())
            throw Error("NOT_REMOVABLE",
                        "value predecessor '" + p + "' is not observed before decision '" + decision + "'", decision);

    const bool constrained = forced && forced->decision == decision;
    const Frame info = predecessor_frame(d, dn);
    const Frame old_v = predecessor_frame(d, v);
    const std::size_t alts = dn.outcomes.size();
    if (constrained && (forced->info_row >= info.size() || forced->alternative >= alts))
        throw Error("BAD_CONSTRAINT", "forced choice out of range for decision '" + decision + "'", decision);

    DecisionRule rule{decision, dn.predecessors, std::vector<std::size_t>(info.size(), 0)};
    std::vector<double> best_value(info.size());
    info.for_each([&](std::size_t row, const Assignment& context) {
        Assignment a = context;
        std::size_t best = 0;
        double best_u = 0.0;
        for (std::size_t k = 0; k < alts; ++k) {
            a[decision] = k;
            const double u = v.utilities[old_v.index(a)];
            if (k == 0 || u > best_u) {
                best = k;
                best_u = u;
            }
        }
        if (constrained && row == forced->info_row) {
            best = forced->alternative;
            a[decision] = best;
            best_u = v.utilities[old_v.index(a)];
        }
        rule.choice[row] = best;
        best_value[row] = best_u;
    });

    // Unconstrained, the maximum depends only on the value node's own
    // context; with a pinned information state it depends on all of it.
    std::vector<std::string> new_preds =
        constrained ? dn.predecessors : detail::without(v.predecessors, decision);
    InfluenceDiagram out = d;
    Node& nv = out.value();
    const Frame fresh(d, new_preds);
    std::vector<double> utilities(fresh.size());
    fresh.for_each([&](std::size_t row, const Assignment& context) {
        Assignment a = context;
        for (const auto& p : dn.predecessors)
            if (!a.contains(p)) a[p] = 0;
        utilities[row] = best_value[info.index(a)];
    });
    nv.predecessors = std::move(new_preds);
    nv.utilities = std::move(utilities);
    erase_node(out, decision);
    rule_out = std::move(rule);
    return out;
}

}  // namespace detail

/// Repeatedly deletes non-value nodes without successors.
inline InfluenceDiagram eliminate_barren(const InfluenceDiagram& d) {
    return detail::eliminate_barren(d, nullptr, nullptr, std::nullopt);
}

/// Removes a chance node whose only successor is the value node, folding
/// its expectation into the utility table.
inline InfluenceDiagram eliminate_chance(const InfluenceDiagram& d, const std::string& chance) {
    const Node& c = d.at(chance);
    if (!c.is_chance()) throw Error("NOT_REMOVABLE", "'" + chance + "' is not a chance node", chance);
    const Node& v = d.value();
    if (detail::successors_of(d, chance) != std::vector<std::string>{v.name})
        throw Error("NOT_REMOVABLE", "chance node '" + chance + "' has successors other than the value node", chance);

    std::vector<std::string> new_preds = detail::without(v.predecessors, chance);
    detail::append_missing(new_preds, c.predecessors);
    const Frame old_v = predecessor_frame(d, v);
    const Frame old_c = predecessor_frame(d, c);
    const Frame fresh(d, new_preds);

    std::vector<double> utilities(fresh.size(), 0.0);
    fresh.for_each([&](std::size_t row, const Assignment& context) {
        Assignment a = context;
        const auto& probs = c.cpt[old_c.index(a)];
        double expectation = 0.0;
        for (std::size_t x = 0; x < c.outcomes.size(); ++x) {
            if (probs[x] == 0.0) continue;
            a[chance] = x;
            expectation += probs[x] * v.utilities[old_v.index(a)];
        }
        utilities[row] = expectation;
    });

    InfluenceDiagram out = d;
    Node& nv = out.value();
    nv.predecessors = std::move(new_preds);
    nv.utilities = std::move(utilities);
    detail::erase_node(out, chance);
    return out;
}

/// Removes a decision whose only successor is the value node and which
/// observes every other value predecessor. Returns the reduced diagram and
/// the maximizing rule (ties to the lowest alternative index).
inline std::pair<InfluenceDiagram, DecisionRule> eliminate_decision(
    const InfluenceDiagram& d, const std::string& decision, const std::optional<ForcedChoice>& forced = std::nullopt) {
    DecisionRule rule;
    InfluenceDiagram out = detail::eliminate_decision_impl(d, decision, forced, rule);
    return {std::move(out), std::move(rule)};
}

// ---------------------------------------------------------------------------
// Full evaluation
// ---------------------------------------------------------------------------

namespace detail {

inline bool decision_removable(const InfluenceDiagram& d, const std::string& decision) {
    const Node& v = d.value();
    if (successors_of(d, decision) != std::vector<std::string>{v.name}) return false;
    const Node& dn = d.at(decision);
    return std::all_of(v.predecessors.begin(), v.predecessors.end(), [&](const std::string& p) {
        return p == decision || std::find(dn.predecessors.begin(), dn.predecessors.end(), p) != dn.predecessors.end();
    });
}

inline void order_policy(Policy& policy, const std::vector<std::string>& decisions) {
    std::vector<DecisionRule> ordered;
    for (const auto& name : decisions)
        for (auto& r : policy.rules)
            if (r.decision == name) ordered.push_back(std::move(r));
    policy.rules = std::move(ordered);
}

}  // namespace detail

/// Optimal policy and expected utility.
///
/// Each round: drop barren nodes; else remove a chance node feeding only
/// the value node (lexicographically first); else remove the last decision
/// if it observes every value predecessor; else take the value predecessor
/// with no decision successors and the fewest successors, and reverse its
/// arcs into chance successors in topological order. The diagram is
/// validated and canonicalized first.
inline SolveResult solve(const InfluenceDiagram& input, const std::optional<ForcedChoice>& forced = std::nullopt) {
    require_valid(input);
    InfluenceDiagram d = canonicalize(input);
    const auto decisions = decision_order(d);
    const std::size_t budget = 4 * d.nodes.size() * d.nodes.size();

    SolveResult result;
    auto& trace = result.trace;
    const std::string value_name = d.value().name;

    for (;;) {
        if (trace.size() > budget)
            throw Error("INTERNAL_NONTERMINATION", "elimination exceeded its step budget");
        d = detail::eliminate_barren(d, &trace, &result.policy, forced);
        if (d.nodes.size() == 1) break;

        std::vector<std::string> removable;
        for (const Node& n : d.nodes)
            if (n.is_chance() && detail::successors_of(d, n.name) == std::vector<std::string>{value_name})
                removable.push_back(n.name);
        if (!removable.empty()) {
            const auto& c = *std::min_element(removable.begin(), removable.end());
            d = eliminate_chance(d, c);
            trace.push_back({StepKind::chance_removal, c, {}, {}});
            continue;
        }

        std::optional<std::string> last;
        for (const auto& name : decisions)
            if (d.find(name)) last = name;
        if (last && detail::decision_removable(d, *last)) {
            DecisionRule rule;
            d = detail::eliminate_decision_impl(d, *last, forced, rule);
            result.policy.rules.push_back(std::move(rule));
            trace.push_back({StepKind::decision_removal, *last, {}, {}});
            continue;
        }

        auto succ = successors(d);
        std::optional<std::string> pick;
        for (const auto& p : d.value().predecessors) {
            const Node& n = d.at(p);
            if (!n.is_chance()) continue;
            const auto& s = succ[p];
            if (std::any_of(s.begin(), s.end(), [&](const std::string& x) { return d.at(x).is_decision(); }))
                continue;
            if (!pick || s.size() < succ[*pick].size() || (s.size() == succ[*pick].size() && p < *pick)) pick = p;
        }
        if (!pick) throw Error("INTERNAL_NONTERMINATION", "no eliminable node found");

        for (;;) {
            auto order = topological_order(d);
            auto mine = detail::successors_of(d, *pick);
            std::optional<std::string> next;
            for (const auto& name : order)
                if (std::find(mine.begin(), mine.end(), name) != mine.end() && d.at(name).is_chance()) {
                    next = name;
                    break;
                }
            if (!next) break;
            d = reverse_arc(d, *pick, *next);
            trace.push_back({StepKind::arc_reversal, *pick, *next, {}});
            if (trace.size() > budget)
                throw Error("INTERNAL_NONTERMINATION", "elimination exceeded its step budget");
        }
    }

    result.expected_utility = d.value().utilities.at(0);
    detail::order_policy(result.policy, decisions);
    return result;
}

/// Re-applies a recorded trace to a diagram, reproducing the solve result.
inline SolveResult replay_trace(const InfluenceDiagram& input, const EliminationTrace& trace,
                          const std::optional<ForcedChoice>& forced = std::nullopt) {
    InfluenceDiagram d = canonicalize(input);
    const auto decisions = decision_order(d);
    SolveResult result;
    result.trace = trace;
    for (const Step& step : trace) {
        switch (step.kind) {
            case StepKind::barren_removal: {
                const Node& n = d.at(step.node);
                if (!detail::successors_of(d, step.node).empty() || n.is_value())
                    throw Error("BAD_TRACE", "'" + step.node + "' is not barren", step.node);
                if (n.is_decision()) result.policy.rules.push_back(detail::default_rule(d, n, forced));
                detail::erase_node(d, step.node);
                break;
            }
            case StepKind::arc_reversal: d = reverse_arc(d, step.node, step.target); break;
            case StepKind::chance_removal: d = eliminate_chance(d, step.node); break;
            case StepKind::decision_removal: {
                DecisionRule rule;
                d = detail::eliminate_decision_impl(d, step.node, forced, rule);
                result.policy.rules.push_back(std::move(rule));
                break;
            }
        }
    }
    if (d.nodes.size() != 1) throw Error("BAD_TRACE", "trace does not reduce the diagram to its value node");
    result.expected_utility = d.value().utilities.at(0);
    detail::order_policy(result.policy, decisions);
    return result;
}

/// Choice of the temporally first decision at its first information state.
inline std::optional<std::size_t> first_stage_choice(const SolveResult& r) {
    if (r.policy.rules.empty() || r.policy.rules.front().choice.empty()) return std::nullopt;
    return r.policy.rules.front().choice.front();
}

}  // namespace dw
