#pragma once

// Influence diagram data model: chance, decision and value nodes over
// discrete variables, plus validation, topological ordering and the
// no-forgetting canonical form.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "dw/error.hpp"

namespace dw {

inline constexpr double kRowSumTolerance = 1e-9;
inline constexpr double kEntryTolerance = 1e-12;

/// Marks a utility entry that has not been assessed yet (schema skeletons).
inline constexpr double kUnassessed = std::numeric_limits<double>::quiet_NaN();

inline bool is_unassessed(double u) { return std::isnan(u); }

enum class NodeKind { chance, decision, value };

inline const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::chance: return "chance";
        case NodeKind::decision: return "decision";
        case NodeKind::value: return "value";
    }
    return "?";
}

/// A named discrete variable with ordered outcome labels.
struct Variable {
    std::string name;
    std::vector<std::string> outcomes;

    bool operator==(const Variable&) const = default;
};

/// One node of an influence diagram.
///
/// Tables are laid out in Cartesian-product order of the predecessors'
/// outcomes, in declared predecessor order, with the last predecessor
/// varying fastest. A chance node has one probability row per combination;
/// an empty row means "not assessed". A value node has one utility per
/// combination; NaN means "not assessed". Decision nodes carry no table.
struct Node {
    NodeKind kind = NodeKind::chance;
    std::string name;
    std::vector<std::string> outcomes;
    std::vector<std::string> predecessors;
    std::vector<std::vector<double>> cpt;
    std::vector<double> utilities;

    bool is_chance() const { return kind == NodeKind::chance; }
    bool is_decision() const { return kind == NodeKind::decision; }
    bool is_value() const { return kind == NodeKind::value; }

    Variable variable() const { return {name, outcomes}; }

    bool operator==(const Node&) const = default;
};

inline Node chance_node(std::string name, std::vector<std::string> outcomes,
                        std::vector<std::string> predecessors, std::vector<std::vector<double>> rows) {
    return Node{NodeKind::chance, std::move(name), std::move(outcomes), std::move(predecessors), std::move(rows), {}};
}

inline Node decision_node(std::string name, std::vector<std::string> alternatives,
                          std::vector<std::string> predecessors = {}) {
    return Node{NodeKind::decision, std::move(name), std::move(alternatives), std::move(predecessors), {}, {}};
}

inline Node value_node(std::string name, std::vector<std::string> predecessors, std::vector<double> utilities) {
    return Node{NodeKind::value, std::move(name), {}, std::move(predecessors), {}, std::move(utilities)};
}

struct InfluenceDiagram {
    std::string name;
    std::vector<Node> nodes;

    const Node* find(const std::string& node_name) const {
        auto it = std::find_if(nodes.begin(), nodes.end(), [&](const Node& n) { return n.name == node_name; });
        return it == nodes.end() ? nullptr : &*it;
    }

    Node* find(const std::string& node_name) {
        auto it = std::find_if(nodes.begin(), nodes.end(), [&](const Node& n) { return n.name == node_name; });
        return it == nodes.end() ? nullptr : &*it;
    }

    const Node& at(const std::string& node_name) const {
        if (const Node* n = find(node_name)) return *n;
        throw Error("UNKNOWN_NODE", "no node named '" + node_name + "'", node_name);
    }

    Node& at(const std::string& node_name) {
        if (Node* n = find(node_name)) return *n;
        throw Error("UNKNOWN_NODE", "no node named '" + node_name + "'", node_name);
    }

    const Node& value() const {
        for (const Node& n : nodes)
            if (n.is_value()) return n;
        throw Error("NO_VALUE_NODE", "diagram has no value node");
    }

    Node& value() {
        for (Node& n : nodes)
            if (n.is_value()) return n;
        throw Error("NO_VALUE_NODE", "diagram has no value node");
    }

    bool has_arc(const std::string& from, const std::string& to) const {
        const Node* n = find(to);
        return n && std::find(n->predecessors.begin(), n->predecessors.end(), from) != n->predecessors.end();
    }

    bool operator==(const InfluenceDiagram&) const = default;
};

// ---------------------------------------------------------------------------
// Table indexing
// ---------------------------------------------------------------------------

/// Full or partial assignment of outcome indices to node names.
using Assignment = std::map<std::string, std::size_t>;

/// Mixed-radix frame over a list of variables, used to index table rows.
class Frame {
public:
    Frame() = default;

    Frame(const InfluenceDiagram& d, std::vector<std::string> names) : names_(std::move(names)) {
        cards_.reserve(names_.size());
        for (const auto& n : names_) cards_.push_back(d.at(n).outcomes.size());
    }

    const std::vector<std::string>& names() const { return names_; }
    const std::vector<std::size_t>& cards() const { return cards_; }

    std::size_t size() const {
        return std::accumulate(cards_.begin(), cards_.end(), std::size_t{1}, std::multiplies<>());
    }

    std::size_t index(const Assignment& a) const {
        std::size_t idx = 0;
        for (std::size_t k = 0; k < names_.size(); ++k) idx = idx * cards_[k] + a.at(names_[k]);
        return idx;
    }

    /// Writes the outcome indices of row `idx` into `a`.
    void decode(std::size_t idx, Assignment& a) const {
        for (std::size_t k = names_.size(); k-- > 0;) {
            a[names_[k]] = idx % cards_[k];
            idx /= cards_[k];
        }
    }

    template <class Fn>
    void for_each(Fn&& fn) const {
        Assignment a;
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i) {
            decode(i, a);
            fn(i, static_cast<const Assignment&>(a));
        }
    }

private:
    std::vector<std::string> names_;
    std::vector<std::size_t> cards_;
};

inline Frame predecessor_frame(const InfluenceDiagram& d, const Node& n) { return Frame(d, n.predecessors); }

/// Row key "o1|o2|..." of row `idx` of node `n`; empty for a node without predecessors.
inline std::string row_key(const InfluenceDiagram& d, const Node& n, std::size_t idx) {
    Frame f = predecessor_frame(d, n);
    Assignment a;
    f.decode(idx, a);
    std::string key;
    for (std::size_t k = 0; k < n.predecessors.size(); ++k) {
        if (k) key += '|';
        key += d.at(n.predecessors[k]).outcomes[a.at(n.predecessors[k])];
    }
    return key;
}

inline std::optional<std::size_t> row_index(const InfluenceDiagram& d, const Node& n, const std::string& key) {
    std::vector<std::string> parts;
    if (!n.predecessors.empty()) {
        std::size_t start = 0;
        for (;;) {
            auto bar = key.find('|', start);
            parts.push_back(key.substr(start, bar == std::string::npos ? std::string::npos : bar - start));
            if (bar == std::string::npos) break;
            start = bar + 1;
        }
    } else if (!key.empty()) {
        return std::nullopt;
    }
    if (parts.size() != n.predecessors.size()) return std::nullopt;
    Frame f = predecessor_frame(d, n);
    std::size_t idx = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto& outs = d.at(n.predecessors[k]).outcomes;
        auto it = std::find(outs.begin(), outs.end(), parts[k]);
        if (it == outs.end()) return std::nullopt;
        idx = idx * f.cards()[k] + static_cast<std::size_t>(it - outs.begin());
    }
    return idx;
}

// ---------------------------------------------------------------------------
// Graph queries
// ---------------------------------------------------------------------------

/// Successor lists keyed by node name, each sorted by name. Unresolved
/// predecessor references are ignored.
inline std::map<std::string, std::vector<std::string>> successors(const InfluenceDiagram& d) {
    std::map<std::string, std::vector<std::string>> out;
    for (const Node& n : d.nodes) out[n.name];
    for (const Node& n : d.nodes)
        for (const auto& p : n.predecessors)
            if (d.find(p)) out[p].push_back(n.name);
    for (auto& [_, v] : out) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return out;
}

/// True if a directed path of length >= 1 leads from `from` to `to`.
inline bool has_path(const InfluenceDiagram& d, const std::string& from, const std::string& to) {
    auto succ = successors(d);
    std::set<std::string> seen;
    std::vector<std::string> stack{from};
    while (!stack.empty()) {
        std::string u = stack.back();
        stack.pop_back();
        for (const auto& v : succ[u]) {
            if (v == to) return true;
            if (seen.insert(v).second) stack.push_back(v);
        }
    }
    return false;
}

/// Kahn's algorithm; among ready nodes the lexicographically smallest name
/// goes first. Throws CYCLE if the graph is not acyclic.
inline std::vector<std::string> topological_order(const InfluenceDiagram& d) {
    std::map<std::string, std::size_t> in_degree;
    for (const Node& n : d.nodes) {
        std::set<std::string> preds(n.predecessors.begin(), n.predecessors.end());
        for (const auto& p : preds)
            if (!d.find(p))
                throw Error("DANGLING_PREDECESSOR", "node '" + n.name + "' references unknown node '" + p + "'",
                            n.name);
        in_degree[n.name] = preds.size();
    }
    auto succ = successors(d);
    std::set<std::string> ready;
    for (const auto& [name, deg] : in_degree)
        if (deg == 0) ready.insert(name);

    std::vector<std::string> order;
    order.reserve(d.nodes.size());
    while (!ready.empty()) {
        std::string u = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(u);
        for (const auto& v : succ[u])
            if (--in_degree[v] == 0) ready.insert(v);
    }
    if (order.size() != in_degree.size()) throw Error("CYCLE", "diagram '" + d.name + "' contains a directed cycle");
    return order;
}

/// Decision nodes in topological order.
inline std::vector<std::string> decision_order(const InfluenceDiagram& d) {
    std::vector<std::string> out;
    for (const auto& name : topological_order(d))
        if (d.at(name).is_decision()) out.push_back(name);
    return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    std::string code;
    std::string where;  // node name, arc "a->b", or empty
    std::string message;

    bool operator==(const Violation&) const = default;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }

    bool has(const std::string& code) const {
        return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.code == code; });
    }

    bool operator==(const ValidationReport&) const = default;
};

namespace detail {

inline void check_tables(const InfluenceDiagram& d, const Node& n, std::vector<Violation>& out) {
    Frame f = predecessor_frame(d, n);
    const std::size_t rows = f.size();
    if (n.is_chance()) {
        for (std::size_t r = 0; r < rows; ++r) {
            if (r >= n.cpt.size() || n.cpt[r].empty()) {
                out.push_back({"MISSING_ROW", n.name, "missing probability row [" + row_key(d, n, r) + "]"});
                continue;
            }
            const auto& row = n.cpt[r];
            if (row.size() != n.outcomes.size()) {
                out.push_back({"BAD_PROBABILITY", n.name,
                               "row [" + row_key(d, n, r) + "] has " + std::to_string(row.size()) +
                                   " entries, expected " + std::to_string(n.outcomes.size())});
                continue;
            }
            bool bad = false;
            for (double p : row)
                if (!(p >= -kEntryTolerance && p <= 1.0 + kEntryTolerance)) bad = true;
            if (bad) {
                out.push_back({"BAD_PROBABILITY", n.name, "row [" + row_key(d, n, r) + "] has an entry outside [0,1]"});
                continue;
            }
            double sum = std::accumulate(row.begin(), row.end(), 0.0);
            if (std::abs(sum - 1.0) > kRowSumTolerance) {
                std::ostringstream msg;
                msg.precision(17);
                msg << "row [" << row_key(d, n, r) << "] sums to " << sum;
                out.push_back({"ROW_NOT_NORMALIZED", n.name, msg.str()});
            }
        }
        if (n.cpt.size() > rows)
            out.push_back({"BAD_PROBABILITY", n.name, "table has more rows than predecessor combinations"});
    } else if (n.is_value()) {
        for (std::size_t r = 0; r < rows; ++r) {
            if (r >= n.utilities.size() || is_unassessed(n.utilities[r]))
                out.push_back({"MISSING_ROW", n.name, "missing utility [" + row_key(d, n, r) + "]"});
            else if (!std::isfinite(n.utilities[r]))
                out.push_back({"BAD_PROBABILITY", n.name, "utility [" + row_key(d, n, r) + "] is not finite"});
        }
        if (n.utilities.size() > rows)
            out.push_back({"BAD_PROBABILITY", n.name, "utility table has more entries than predecessor combinations"});
    }
}

}  // namespace detail

/// Reports every violated invariant; never throws for malformed content.
/// Violations are sorted by code, then location, then message.
inline ValidationReport validate(const InfluenceDiagram& d) {
    std::vector<Violation> out;

    std::map<std::string, std::size_t> name_count;
    for (const Node& n : d.nodes) ++name_count[n.name];
    for (const auto& [name, count] : name_count) {
        if (name.empty()) out.push_back({"DUPLICATE_NAME", name, "node name is empty"});
        if (count > 1) out.push_back({"DUPLICATE_NAME", name, "node name used " + std::to_string(count) + " times"});
    }

    std::vector<std::string> value_names;
    for (const Node& n : d.nodes)
        if (n.is_value()) value_names.push_back(n.name);
    std::sort(value_names.begin(), value_names.end());
    if (value_names.empty()) out.push_back({"NO_VALUE_NODE", "", "diagram has no value node"});
    for (std::size_t k = 1; k < value_names.size(); ++k)
        out.push_back({"MULTIPLE_VALUE_NODES", value_names[k], "more than one value node"});

    bool structure_ok = true;
    for (const Node& n : d.nodes) {
        if (!n.is_value()) {
            if (n.outcomes.empty()) {
                out.push_back({"BAD_PROBABILITY", n.name, "variable has no outcomes"});
                structure_ok = false;
            }
            std::set<std::string> labels;
            for (const auto& o : n.outcomes) {
                if (o.empty()) out.push_back({"DUPLICATE_NAME", n.name, "empty outcome label"});
                if (!labels.insert(o).second)
                    out.push_back({"DUPLICATE_NAME", n.name, "outcome label '" + o + "' repeated"});
            }
        }
        std::set<std::string> seen;
        for (const auto& p : n.predecessors) {
            if (!seen.insert(p).second)
                out.push_back({"DUPLICATE_NAME", n.name, "predecessor '" + p + "' listed twice"});
            if (p == n.name) {
                out.push_back({"CYCLE", n.name, "node precedes itself"});
                structure_ok = false;
                continue;
            }
            const Node* pn = d.find(p);
            if (!pn) {
                out.push_back({"DANGLING_PREDECESSOR", n.name, "unknown predecessor '" + p + "'"});
                structure_ok = false;
            } else if (pn->is_value()) {
                out.push_back({"VALUE_HAS_SUCCESSOR", p, "value node precedes '" + n.name + "'"});
            }
        }
    }
    for (const auto& [name, count] : name_count)
        if (count > 1) structure_ok = false;

    // Nodes on a cycle: those that can reach themselves.
    bool acyclic = true;
    if (structure_ok) {
        for (const Node& n : d.nodes) {
            if (has_path(d, n.name, n.name)) {
                out.push_back({"CYCLE", n.name, "node lies on a directed cycle"});
                acyclic = false;
            }
        }
    }

    if (structure_ok)
        for (const Node& n : d.nodes) detail::check_tables(d, n, out);

    if (structure_ok && acyclic) {
        auto decisions = decision_order(d);
        for (std::size_t k = 1; k < decisions.size(); ++k) {
            if (!has_path(d, decisions[k - 1], decisions[k]))
                out.push_back({"DECISIONS_UNORDERED", decisions[k - 1] + "->" + decisions[k],
                               "no directed path from decision '" + decisions[k - 1] + "' to '" + decisions[k] + "'"});
        }
    }

    std::sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
        return std::tie(a.code, a.where, a.message) < std::tie(b.code, b.where, b.message);
    });
    return {std::move(out)};
}

/// Thrown when a diagram that must be valid is not; carries the full report.
class ValidationError : public Error {
public:
    explicit ValidationError(ValidationReport report)
        : Error(report.violations.front().code, report.violations.front().message, report.violations.front().where)
        , report_(std::move(report)) {}

    const ValidationReport& report() const noexcept { return report_; }

private:
    ValidationReport report_;
};

inline void require_valid(const InfluenceDiagram& d) {
    auto report = validate(d);
    if (!report.ok()) throw ValidationError(std::move(report));
}

/// Clamps probabilities that lie within round-off of [0,1] back into the
/// interval. Entries further out are left for validate() to reject.
inline void clamp_probabilities(InfluenceDiagram& d) {
    for (Node& n : d.nodes)
        for (auto& row : n.cpt)
            for (double& p : row)
                if (p >= -kEntryTolerance && p <= 1.0 + kEntryTolerance) p = std::clamp(p, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// No-forgetting canonical form
// ---------------------------------------------------------------------------

/// Adds no-forgetting arcs: every decision learns all earlier decisions and
/// whatever they observed. New predecessors are appended after the existing
/// ones, in decision order. Idempotent.
inline InfluenceDiagram canonicalize(const InfluenceDiagram& d) {
    auto decisions = decision_order(d);
    for (std::size_t k = 1; k < decisions.size(); ++k)
        if (!has_path(d, decisions[k - 1], decisions[k]))
            throw Error("DECISIONS_UNORDERED",
                        "no directed path from decision '" + decisions[k - 1] + "' to '" + decisions[k] + "'",
                        decisions[k]);

    InfluenceDiagram out = d;
    for (std::size_t j = 1; j < decisions.size(); ++j) {
        Node& later = out.at(decisions[j]);
        auto add = [&](const std::string& p) {
            if (std::find(later.predecessors.begin(), later.predecessors.end(), p) == later.predecessors.end())
                later.predecessors.push_back(p);
        };
        for (std::size_t i = 0; i < j; ++i) {
            for (const auto& p : d.at(decisions[i]).predecessors) add(p);
            add(decisions[i]);
        }
    }
    return out;
}

}  // namespace dw
