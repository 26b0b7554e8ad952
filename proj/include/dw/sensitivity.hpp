#pragma once

// One-way sensitivity analysis: parameter sweeps, decision thresholds,
// tornado ranking and expected value of perfect information.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dw/diagram.hpp"
#include "dw/error.hpp"
#include "dw/solver.hpp"

namespace dw {

/// Names a single numeric entry: a CPT probability (node, row, outcome) or
/// a utility (value node, row).
struct ParamRef {
    enum class Kind { probability, utility };

    Kind kind = Kind::probability;
    std::string node;
    std::string row;
    std::string outcome;

    static ParamRef probability(std::string node, std::string row, std::string outcome) {
        return {Kind::probability, std::move(node), std::move(row), std::move(outcome)};
    }
    static ParamRef utility(std::string node, std::string row) {
        return {Kind::utility, std::move(node), std::move(row), {}};
    }

    /// "NODE/ROW/OUTCOME" or "NODE/ROW".
    std::string to_string() const {
        return kind == Kind::probability ? node + "/" + row + "/" + outcome : node + "/" + row;
    }

    static ParamRef parse(std::string_view text) {
        std::vector<std::string> parts;
        std::size_t start = 0;
        for (;;) {
            auto slash = text.find('/', start);
            parts.emplace_back(text.substr(start, slash == std::string_view::npos ? text.npos : slash - start));
            if (slash == std::string_view::npos) break;
            start = slash + 1;
        }
        if (parts.size() == 3) return probability(parts[0], parts[1], parts[2]);
        if (parts.size() == 2) return utility(parts[0], parts[1]);
        throw Error("PARAM_NOT_FOUND", "parameter must look like NODE/ROW/OUTCOME or NODE/ROW: '" +
                                           std::string(text) + "'");
    }

    bool operator==(const ParamRef&) const = default;
};

namespace detail {

struct ResolvedParam {
    std::size_t row = 0;
    std::size_t outcome = 0;
};

inline ResolvedParam resolve(const InfluenceDiagram& d, const ParamRef& p) {
    const Node* n = d.find(p.node);
    auto missing = [&] { return Error("PARAM_NOT_FOUND", "no entry " + p.to_string(), p.node, p.row); };
    if (!n) throw missing();
    if (p.kind == ParamRef::Kind::probability ? !n->is_chance() : !n->is_value()) throw missing();
    auto row = row_index(d, *n, p.row);
    if (!row) throw missing();
    ResolvedParam r{*row, 0};
    if (p.kind == ParamRef::Kind::probability) {
        auto it = std::find(n->outcomes.begin(), n->outcomes.end(), p.outcome);
        if (it == n->outcomes.end()) throw missing();
        r.outcome = static_cast<std::size_t>(it - n->outcomes.begin());
    }
    return r;
}

}  // namespace detail

inline double param_value(const InfluenceDiagram& d, const ParamRef& p) {
    auto r = detail::resolve(d, p);
    const Node& n = d.at(p.node);
    return p.kind == ParamRef::Kind::probability ? n.cpt.at(r.row).at(r.outcome) : n.utilities.at(r.row);
}

/// Throws BAD_GRID unless `v` is admissible for the entry kind.
inline void check_param_value(const InfluenceDiagram& d, const ParamRef& p, double v) {
    detail::resolve(d, p);
    if (!std::isfinite(v)) throw Error("BAD_GRID", "parameter value must be finite", p.node, p.row);
    if (p.kind == ParamRef::Kind::probability) {
        if (v < 0.0 || v > 1.0) throw Error("BAD_GRID", "probability outside [0,1]", p.node, p.row);
        if (d.at(p.node).outcomes.size() == 1 && v != 1.0)
            throw Error("BAD_GRID", "single-outcome variable must keep probability 1", p.node, p.row);
    }
}

/// Copy of `d` with the entry set to `v`. The other entries of a probability
/// row are rescaled in proportion to their current values, or share 1 - v
/// equally when they are all zero.
inline InfluenceDiagram with_param(const InfluenceDiagram& d, const ParamRef& p, double v) {
    check_param_value(d, p, v);
    auto r = detail::resolve(d, p);
    InfluenceDiagram out = d;
    Node& n = out.at(p.node);
    if (p.kind == ParamRef::Kind::utility) {
        n.utilities[r.row] = v;
        return out;
    }
    auto& row = n.cpt[r.row];
    double others = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k)
        if (k != r.outcome) others += row[k];
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (k == r.outcome)
            row[k] = v;
        else if (others > 0.0)
            row[k] = row[k] / others * (1.0 - v);
        else
            row[k] = (1.0 - v) / static_cast<double>(row.size() - 1);
    }
    return out;
}

/// Expected utility with the first decision's choice at its first
/// information state pinned to each alternative in turn (rest optimal).
/// Empty when the diagram has no decision.
inline std::vector<double> first_stage_values(const InfluenceDiagram& d) {
    auto decisions = decision_order(d);
    if (decisions.empty()) return {};
    const Node& first = d.at(decisions.front());
    std::vector<double> out;
    for (std::size_t k = 0; k < first.outcomes.size(); ++k)
        out.push_back(solve(d, ForcedChoice{first.name, 0, k}).expected_utility);
    return out;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

struct SweepPoint {
    double value = 0.0;
    std::vector<double> forced;  // per first-stage alternative
    double optimal = 0.0;
    std::optional<std::size_t> choice;

    bool operator==(const SweepPoint&) const = default;
};

struct SweepResult {
    ParamRef param;
    std::string decision;  // first decision, empty if none
    std::vector<std::string> alternatives;
    std::vector<SweepPoint> points;

    bool operator==(const SweepResult&) const = default;
};

inline SweepResult sweep(const InfluenceDiagram& d, const ParamRef& p, const std::vector<double>& grid) {
    require_valid(d);
    for (double v : grid) check_param_value(d, p, v);
    SweepResult out;
    out.param = p;
    auto decisions = decision_order(d);
    if (!decisions.empty()) {
        out.decision = decisions.front();
        out.alternatives = d.at(out.decision).outcomes;
    }
    for (double v : grid) {
        InfluenceDiagram trial = with_param(d, p, v);
        SolveResult r = solve(trial);
        out.points.push_back({v, first_stage_values(trial), r.expected_utility, first_stage_choice(r)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Thresholds
// ---------------------------------------------------------------------------

struct ThresholdOptions {
    std::size_t scan_points = 101;
    double tolerance = 1e-6;
};

/// Probability values in (0,1) at which the optimal first-stage choice
/// changes: a uniform scan followed by bisection of each change.
inline std::vector<double> thresholds(const InfluenceDiagram& d, const ParamRef& p, ThresholdOptions opts = {}) {
    require_valid(d);
    if (p.kind != ParamRef::Kind::probability)
        throw Error("BAD_GRID", "thresholds apply to probability entries only", p.node, p.row);
    detail::resolve(d, p);
    if (opts.scan_points < 2) opts.scan_points = 2;

    auto choice_at = [&](double v) { return first_stage_choice(solve(with_param(d, p, v))); };
    const double steps = static_cast<double>(opts.scan_points - 1);
    std::vector<double> out;
    double prev_v = 0.0;
    auto prev = choice_at(prev_v);
    for (std::size_t i = 1; i < opts.scan_points; ++i) {
        const double v = static_cast<double>(i) / steps;
        auto cur = choice_at(v);
        if (cur != prev) {
            double lo = prev_v;
            double hi = v;
            while (hi - lo > opts.tolerance) {
                const double mid = 0.5 * (lo + hi);
                if (choice_at(mid) == prev)
                    lo = mid;
                else
                    hi = mid;
            }
            const double t = 0.5 * (lo + hi);
            if (t > 0.0 && t < 1.0) out.push_back(t);
        }
        prev = cur;
        prev_v = v;
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Tornado
// ---------------------------------------------------------------------------

struct TornadoInput {
    ParamRef param;
    double low = 0.0;
    double high = 0.0;
};

struct TornadoEntry {
    ParamRef param;
    double low = 0.0;
    double high = 0.0;
    double eu_low = 0.0;
    double eu_high = 0.0;
    double swing = 0.0;

    bool operator==(const TornadoEntry&) const = default;
};

/// Optimal EU at each parameter's low and high value (others at baseline),
/// ranked by swing, largest first; equal swings ordered by node name.
inline std::vector<TornadoEntry> tornado(const InfluenceDiagram& d, const std::vector<TornadoInput>& params) {
    require_valid(d);
    for (const auto& in : params) {
        check_param_value(d, in.param, in.low);
        check_param_value(d, in.param, in.high);
    }
    std::vector<TornadoEntry> out;
    for (const auto& in : params) {
        const double lo = solve(with_param(d, in.param, in.low)).expected_utility;
        const double hi = solve(with_param(d, in.param, in.high)).expected_utility;
        out.push_back({in.param, in.low, in.high, lo, hi, std::abs(hi - lo)});
    }
    std::stable_sort(out.begin(), out.end(), [](const TornadoEntry& a, const TornadoEntry& b) {
        if (a.swing != b.swing) return a.swing > b.swing;
        return a.param.node < b.param.node;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Value of information
// ---------------------------------------------------------------------------

/// Gain in optimal EU from observing `chance` before `decision`.
inline double evpi(const InfluenceDiagram& input, const std::string& chance, const std::string& decision) {
    require_valid(input);
    InfluenceDiagram d = canonicalize(input);
    if (!d.at(chance).is_chance()) throw Error("NOT_CHANCE", "'" + chance + "' is not a chance node", chance);
    if (!d.at(decision).is_decision())
        throw Error("NOT_DECISION", "'" + decision + "' is not a decision node", decision);
    if (has_path(d, decision, chance))
        throw Error("WOULD_CYCLE", "'" + chance + "' is downstream of decision '" + decision + "'", chance);

    const double base = solve(d).expected_utility;
    if (d.has_arc(chance, decision)) return 0.0;
    InfluenceDiagram informed = d;
    informed.at(decision).predecessors.push_back(chance);
    return solve(canonicalize(informed)).expected_utility - base;
}

}  // namespace dw
