#pragma once

// Decision knowledge as diagram fragments with unassessed slots. A schema
// is picked by boolean decision features and instantiated into a fully
// assessed diagram by binding its slots.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "dw/diagram.hpp"
#include "dw/error.hpp"

namespace dw {

/// Presence or absence of major decision features.
using FeatureVector = std::map<std::string, bool>;

struct FeatureLiteral {
    std::string feature;
    bool required = true;

    bool operator==(const FeatureLiteral&) const = default;
};

enum class SlotTarget {
    cpt_row,        // one probability row of a chance node
    cpt,            // every row of a chance node, flattened in row order
    utilities,      // the whole value table, in row order
    utility_entry,  // a single utility
};

inline const char* to_string(SlotTarget t) {
    switch (t) {
        case SlotTarget::cpt_row: return "cpt_row";
        case SlotTarget::cpt: return "cpt";
        case SlotTarget::utilities: return "utilities";
        case SlotTarget::utility_entry: return "utility_entry";
    }
    return "?";
}

struct Slot {
    std::string id;
    SlotTarget target = SlotTarget::cpt_row;
    std::string node;
    std::string row;  // row key for cpt_row / utility_entry
    std::string prompt;

    bool is_probability() const { return target == SlotTarget::cpt_row || target == SlotTarget::cpt; }

    bool operator==(const Slot&) const = default;
};

struct SchemaFragment {
    std::string id;
    std::string title;
    int priority = 0;  // lower is tried first
    std::vector<FeatureLiteral> applicability;
    InfluenceDiagram skeleton;
    std::vector<Slot> slots;

    bool operator==(const SchemaFragment&) const = default;
};

struct SchemaLibrary {
    std::vector<std::string> features;
    std::vector<SchemaFragment> schemas;

    const SchemaFragment& at(const std::string& id) const {
        for (const auto& s : schemas)
            if (s.id == id) return s;
        throw Error("UNKNOWN_SCHEMA", "no schema '" + id + "'");
    }

    bool operator==(const SchemaLibrary&) const = default;
};

/// Slot id -> numbers. Whole-CPT slots take their rows concatenated.
using Bindings = std::map<std::string, std::vector<double>>;

/// A feature missing from the vector counts as absent (false).
inline bool applicable(const SchemaFragment& s, const FeatureVector& features) {
    return std::all_of(s.applicability.begin(), s.applicability.end(), [&](const FeatureLiteral& lit) {
        auto it = features.find(lit.feature);
        const bool present = it != features.end() && it->second;
        return present == lit.required;
    });
}

/// Lowest priority number whose applicability holds; earlier entries win
/// equal priorities.
inline const SchemaFragment& select_schema(const FeatureVector& features, const std::vector<SchemaFragment>& library) {
    const SchemaFragment* best = nullptr;
    for (const auto& s : library)
        if (applicable(s, features) && (!best || s.priority < best->priority)) best = &s;
    if (!best) throw Error("NO_APPLICABLE_SCHEMA", "no schema matches the given decision features");
    return *best;
}

inline void check_features(const FeatureVector& features, const SchemaLibrary& library) {
    for (const auto& [name, _] : features)
        if (std::find(library.features.begin(), library.features.end(), name) == library.features.end())
            throw Error("UNKNOWN_FEATURE", "feature '" + name + "' is not declared by the schema library");
}

namespace detail {

struct SlotRegion {
    std::size_t first_row = 0;
    std::size_t rows = 0;
};

inline SlotRegion slot_region(const InfluenceDiagram& d, const Slot& slot) {
    const Node* n = d.find(slot.node);
    auto bad = [&](const std::string& why) {
        return Error("BAD_SCHEMA", "slot '" + slot.id + "': " + why, slot.node, slot.row);
    };
    if (!n) throw bad("unknown node");
    if (slot.is_probability() != n->is_chance()) throw bad("target kind does not match node kind");
    if (!slot.is_probability() && !n->is_value()) throw bad("utility slot must target the value node");
    const std::size_t rows = predecessor_frame(d, *n).size();
    if (slot.target == SlotTarget::cpt || slot.target == SlotTarget::utilities) return {0, rows};
    auto idx = row_index(d, *n, slot.row);
    if (!idx) throw bad("unknown row key");
    return {*idx, 1};
}

inline bool row_is_valid(const std::vector<double>& row) {
    for (double p : row)
        if (!(p >= -kEntryTolerance && p <= 1.0 + kEntryTolerance)) return false;
    return std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) <= kRowSumTolerance;
}

}  // namespace detail

/// Structural checks on a fragment: the skeleton may only be missing table
/// entries, each missing region must be covered by exactly one slot, and
/// slots must target unassessed regions. Throws BAD_SCHEMA.
inline void check_schema(const SchemaFragment& s) {
    for (const auto& v : validate(s.skeleton).violations)
        if (v.code != "MISSING_ROW")
            throw Error("BAD_SCHEMA", "schema '" + s.id + "' skeleton: " + v.code + " " + v.message, v.where);

    std::set<std::string> ids;
    std::map<std::string, std::vector<int>> coverage;
    for (const Node& n : s.skeleton.nodes)
        if (!n.is_decision()) coverage[n.name].assign(predecessor_frame(s.skeleton, n).size(), 0);
    for (const auto& slot : s.slots) {
        if (!ids.insert(slot.id).second) throw Error("BAD_SCHEMA", "duplicate slot id '" + slot.id + "'");
        auto region = detail::slot_region(s.skeleton, slot);
        for (std::size_t r = region.first_row; r < region.first_row + region.rows; ++r) ++coverage[slot.node][r];
    }
    for (const Node& n : s.skeleton.nodes) {
        if (n.is_decision()) continue;
        const auto& cov = coverage[n.name];
        for (std::size_t r = 0; r < cov.size(); ++r) {
            const bool missing = n.is_chance() ? (r >= n.cpt.size() || n.cpt[r].empty())
                                               : (r >= n.utilities.size() || is_unassessed(n.utilities[r]));
            if (cov[r] > 1 || (cov[r] == 1) != missing)
                throw Error("BAD_SCHEMA",
                            "schema '" + s.id + "': row [" + row_key(s.skeleton, n, r) + "] of '" + n.name +
                                "' must be unassessed iff exactly one slot covers it",
                            n.name);
        }
    }
}

/// Fills every slot of the skeleton. The graph structure is untouched.
inline InfluenceDiagram instantiate(const SchemaFragment& schema, const Bindings& bindings) {
    for (const auto& slot : schema.slots)
        if (!bindings.contains(slot.id))
            throw Error("MISSING_SLOT", "no binding for slot '" + slot.id + "'", slot.node, slot.row);
    for (const auto& [id, _] : bindings)
        if (std::none_of(schema.slots.begin(), schema.slots.end(), [&](const Slot& s) { return s.id == id; }))
            throw Error("UNKNOWN_SLOT", "schema '" + schema.id + "' has no slot '" + id + "'");

    InfluenceDiagram out = schema.skeleton;
    for (const auto& slot : schema.slots) {
        const auto& values = bindings.at(slot.id);
        auto region = detail::slot_region(out, slot);
        Node& n = out.at(slot.node);
        if (slot.is_probability()) {
            const std::size_t width = n.outcomes.size();
            if (values.size() != region.rows * width)
                throw Error("INVALID_ROW",
                            "slot '" + slot.id + "' needs " + std::to_string(region.rows * width) + " probabilities",
                            slot.node, slot.row);
            if (n.cpt.size() < region.first_row + region.rows) n.cpt.resize(region.first_row + region.rows);
            for (std::size_t r = 0; r < region.rows; ++r) {
                std::vector<double> row(values.begin() + static_cast<std::ptrdiff_t>(r * width),
                                        values.begin() + static_cast<std::ptrdiff_t>((r + 1) * width));
                if (!detail::row_is_valid(row))
                    throw Error("INVALID_ROW",
                                "slot '" + slot.id + "': probabilities for row [" +
                                    row_key(out, n, region.first_row + r) + "] do not form a distribution",
                                slot.node, row_key(out, n, region.first_row + r));
                n.cpt[region.first_row + r] = std::move(row);
            }
        } else {
            if (values.size() != region.rows)
                throw Error("INVALID_ROW", "slot '" + slot.id + "' needs " + std::to_string(region.rows) + " utilities",
                            slot.node, slot.row);
            for (double u : values)
                if (!std::isfinite(u))
                    throw Error("INVALID_ROW", "slot '" + slot.id + "': utilities must be finite", slot.node, slot.row);
            if (n.utilities.size() < region.first_row + region.rows)
                n.utilities.resize(region.first_row + region.rows, kUnassessed);
            std::copy(values.begin(), values.end(), n.utilities.begin() + static_cast<std::ptrdiff_t>(region.first_row));
        }
    }
    clamp_probabilities(out);
    require_valid(out);
    return out;
}

}  // namespace dw
