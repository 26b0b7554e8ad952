#pragma once

// JSON interchange format (version 1) for diagrams, schema libraries,
// sessions and analysis results.
//
// A diagram document looks like
//
//   {"version": 1, "name": "D1",
//    "variables": [{"name": "D", "outcomes": ["treat", "wait"]}, ...],
//    "nodes": [{"name": "O", "kind": "chance", "predecessors": ["D"],
//               "cpt": {"treat": [0.6, 0.4], "wait": [0.2, 0.8]}},
//              {"name": "V", "kind": "value", "predecessors": ["O"],
//               "utilities": {"success": 100, "failure": 0}}, ...]}
//
// Row keys join predecessor outcome labels with '|'. encode() sorts
// variables by name and nodes topologically.

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dw/consult.hpp"
#include "dw/diagram.hpp"
#include "dw/error.hpp"
#include "dw/schema.hpp"
#include "dw/sensitivity.hpp"
#include "dw/solver.hpp"

namespace dw {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

namespace detail {

[[noreturn]] inline void parse_error(const std::string& context, const std::string& what) {
    throw Error("PARSE_ERROR", context.empty() ? what : context + ": " + what);
}

inline void check_fields(const Json& obj, std::initializer_list<std::string_view> allowed, const std::string& ctx) {
    if (!obj.is_object()) parse_error(ctx, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            parse_error(ctx, "unknown field '" + it.key() + "' (format version " + std::to_string(kFormatVersion) + ")");
}

inline const Json& field(const Json& obj, const char* key, const std::string& ctx) {
    auto it = obj.find(key);
    if (it == obj.end()) parse_error(ctx, std::string("missing field '") + key + "'");
    return *it;
}

inline std::string get_string(const Json& j, const std::string& ctx) {
    if (!j.is_string()) parse_error(ctx, "expected a string");
    return j.get<std::string>();
}

inline double get_number(const Json& j, const std::string& ctx) {
    if (!j.is_number()) parse_error(ctx, "expected a number");
    return j.get<double>();
}

inline std::vector<std::string> get_strings(const Json& j, const std::string& ctx) {
    if (!j.is_array()) parse_error(ctx, "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(get_string(j[k], ctx + "[" + std::to_string(k) + "]"));
    return out;
}

inline std::vector<double> get_numbers(const Json& j, const std::string& ctx) {
    if (!j.is_array()) parse_error(ctx, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(get_number(j[k], ctx + "[" + std::to_string(k) + "]"));
    return out;
}

inline void check_version(const Json& j, const std::string& ctx) {
    if (!j.is_object()) parse_error(ctx, "expected an object");
    const Json& v = field(j, "version", ctx);
    if (!v.is_number_integer()) parse_error(ctx, "'version' must be an integer");
    if (v.get<long long>() != kFormatVersion)
        throw Error("UNSUPPORTED_VERSION", "format version " + std::to_string(v.get<long long>()) +
                                               " is not supported (expected " + std::to_string(kFormatVersion) + ")");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Diagrams
// ---------------------------------------------------------------------------

/// Diagram content without the version field, nodes in their stored order.
/// Unassessed entries are omitted.
inline Json diagram_body(const InfluenceDiagram& d) {
    Json j = Json::object();
    j["name"] = d.name;
    std::vector<const Node*> vars;
    for (const Node& n : d.nodes)
        if (!n.is_value()) vars.push_back(&n);
    std::sort(vars.begin(), vars.end(), [](const Node* a, const Node* b) { return a->name < b->name; });
    j["variables"] = Json::array();
    for (const Node* n : vars) j["variables"].push_back(Json{{"name", n->name}, {"outcomes", n->outcomes}});

    j["nodes"] = Json::array();
    for (const Node& n : d.nodes) {
        Json jn = Json::object();
        jn["name"] = n.name;
        jn["kind"] = to_string(n.kind);
        jn["predecessors"] = n.predecessors;
        const bool resolved = std::all_of(n.predecessors.begin(), n.predecessors.end(),
                                          [&](const std::string& p) { return d.find(p) != nullptr; });
        if (n.is_chance()) {
            Json cpt = Json::object();
            for (std::size_t r = 0; resolved && r < n.cpt.size(); ++r)
                if (!n.cpt[r].empty()) cpt[row_key(d, n, r)] = n.cpt[r];
            jn["cpt"] = std::move(cpt);
        } else if (n.is_value()) {
            Json utils = Json::object();
            for (std::size_t r = 0; resolved && r < n.utilities.size(); ++r)
                if (!is_unassessed(n.utilities[r])) utils[row_key(d, n, r)] = n.utilities[r];
            jn["utilities"] = std::move(utils);
        }
        j["nodes"].push_back(std::move(jn));
    }
    return j;
}

/// Parses diagram content without validating it. Row keys that do not name
/// a predecessor combination are parse errors; missing rows are left empty.
inline InfluenceDiagram diagram_from_body(const Json& j, const std::string& ctx = "diagram") {
    detail::check_fields(j, {"version", "name", "variables", "nodes"}, ctx);
    InfluenceDiagram d;
    d.name = detail::get_string(detail::field(j, "name", ctx), ctx + ".name");

    std::map<std::string, std::vector<std::string>> variables;
    const Json& jv = detail::field(j, "variables", ctx);
    if (!jv.is_array()) detail::parse_error(ctx + ".variables", "expected an array");
    for (std::size_t k = 0; k < jv.size(); ++k) {
        const std::string vctx = ctx + ".variables[" + std::to_string(k) + "]";
        detail::check_fields(jv[k], {"name", "outcomes"}, vctx);
        auto name = detail::get_string(detail::field(jv[k], "name", vctx), vctx + ".name");
        auto outcomes = detail::get_strings(detail::field(jv[k], "outcomes", vctx), vctx + ".outcomes");
        for (const auto& o : outcomes)
            if (o.find('|') != std::string::npos)
                detail::parse_error(vctx, "outcome label '" + o + "' contains the row-key separator '|'");
        if (!variables.emplace(name, std::move(outcomes)).second)
            detail::parse_error(vctx, "variable '" + name + "' declared twice");
    }

    const Json& jn = detail::field(j, "nodes", ctx);
    if (!jn.is_array()) detail::parse_error(ctx + ".nodes", "expected an array");
    std::vector<const Json*> tables(jn.size(), nullptr);
    for (std::size_t k = 0; k < jn.size(); ++k) {
        const std::string nctx = ctx + ".nodes[" + std::to_string(k) + "]";
        detail::check_fields(jn[k], {"name", "kind", "predecessors", "cpt", "utilities"}, nctx);
        Node n;
        n.name = detail::get_string(detail::field(jn[k], "name", nctx), nctx + ".name");
        const auto kind = detail::get_string(detail::field(jn[k], "kind", nctx), nctx + ".kind");
        if (kind == "chance")
            n.kind = NodeKind::chance;
        else if (kind == "decision")
            n.kind = NodeKind::decision;
        else if (kind == "value")
            n.kind = NodeKind::value;
        else
            detail::parse_error(nctx + ".kind", "unknown node kind '" + kind + "'");
        n.predecessors = detail::get_strings(detail::field(jn[k], "predecessors", nctx), nctx + ".predecessors");

        const char* table_key = n.is_chance() ? "cpt" : n.is_value() ? "utilities" : nullptr;
        for (const char* key : {"cpt", "utilities"})
            if (jn[k].contains(key) && (!table_key || std::string_view(key) != table_key))
                detail::parse_error(nctx, std::string("field '") + key + "' not allowed on a " + kind + " node");
        if (table_key) {
            tables[k] = &detail::field(jn[k], table_key, nctx);
            if (!tables[k]->is_object()) detail::parse_error(nctx + "." + table_key, "expected an object");
        }

        auto var = variables.find(n.name);
        if (n.is_value()) {
            if (var != variables.end()) detail::parse_error(nctx, "value node '" + n.name + "' must not be a variable");
        } else {
            if (var == variables.end()) detail::parse_error(nctx, "node '" + n.name + "' has no variable entry");
            n.outcomes = var->second;
        }
        d.nodes.push_back(std::move(n));
    }
    for (const auto& [name, _] : variables)
        if (!d.find(name)) detail::parse_error(ctx + ".variables", "variable '" + name + "' has no node");

    for (std::size_t k = 0; k < d.nodes.size(); ++k) {
        if (!tables[k]) continue;
        Node& n = d.nodes[k];
        const bool resolved = std::all_of(n.predecessors.begin(), n.predecessors.end(),
                                          [&](const std::string& p) { return d.find(p) != nullptr; });
        if (!resolved) continue;  // validate() reports the dangling reference
        const std::size_t rows = predecessor_frame(d, n).size();
        const std::string tctx = ctx + ".nodes[" + std::to_string(k) + "]." + (n.is_chance() ? "cpt" : "utilities");
        if (tables[k]->empty()) continue;  // wholly unassessed: keep the table empty
        if (n.is_chance())
            n.cpt.assign(rows, {});
        else
            n.utilities.assign(rows, kUnassessed);
        for (auto it = tables[k]->begin(); it != tables[k]->end(); ++it) {
            auto idx = row_index(d, n, it.key());
            if (!idx) detail::parse_error(tctx, "row key '" + it.key() + "' does not match the predecessors of '" + n.name + "'");
            const std::string rctx = tctx + "['" + it.key() + "']";
            if (n.is_chance())
                n.cpt[*idx] = detail::get_numbers(it.value(), rctx);
            else
                n.utilities[*idx] = detail::get_number(it.value(), rctx);
        }
    }
    clamp_probabilities(d);
    return d;
}

/// Same diagram with nodes listed in topological order.
inline InfluenceDiagram in_topological_order(const InfluenceDiagram& d) {
    InfluenceDiagram out;
    out.name = d.name;
    for (const auto& name : topological_order(d)) out.nodes.push_back(d.at(name));
    return out;
}

/// Canonical document text. Throws ValidationError for invalid diagrams.
inline std::string encode(const InfluenceDiagram& d) {
    require_valid(d);
    Json j = Json::object();
    j["version"] = kFormatVersion;
    Json body = diagram_body(in_topological_order(d));
    for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
    return j.dump(2) + "\n";
}

inline Json parse_json(std::string_view text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("PARSE_ERROR", e.what());
    }
}

/// Parses and validates a diagram document.
inline InfluenceDiagram decode(std::string_view text) {
    Json j = parse_json(text);
    detail::check_version(j, "document");
    InfluenceDiagram d = diagram_from_body(j, "document");
    require_valid(d);
    return d;
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

inline Json to_json(const ParamRef& p) {
    Json j{{"kind", p.kind == ParamRef::Kind::probability ? "probability" : "utility"}, {"node", p.node}, {"row", p.row}};
    if (p.kind == ParamRef::Kind::probability) j["outcome"] = p.outcome;
    return j;
}

/// Accepts "NODE/ROW/OUTCOME", "NODE/ROW", or an object with node, row
/// and (for probabilities) outcome.
inline ParamRef param_from_json(const Json& j) {
    if (j.is_string()) return ParamRef::parse(j.get<std::string>());
    detail::check_fields(j, {"kind", "node", "row", "outcome"}, "param");
    auto node = detail::get_string(detail::field(j, "node", "param"), "param.node");
    auto row = j.contains("row") ? detail::get_string(j["row"], "param.row") : std::string{};
    std::string kind = j.contains("kind") ? detail::get_string(j["kind"], "param.kind")
                                          : (j.contains("outcome") ? "probability" : "utility");
    if (kind == "probability")
        return ParamRef::probability(node, row, detail::get_string(detail::field(j, "outcome", "param"), "param.outcome"));
    if (kind == "utility") return ParamRef::utility(node, row);
    detail::parse_error("param.kind", "unknown parameter kind '" + kind + "'");
}

inline Json to_json(const DecisionRule& r) {
    return Json{{"decision", r.decision}, {"information", r.information}, {"choice", r.choice}};
}

inline Json to_json(const Step& s) {
    Json j{{"kind", to_string(s.kind)}, {"node", s.node}};
    if (!s.target.empty()) j["target"] = s.target;
    if (!s.note.empty()) j["note"] = s.note;
    return j;
}

inline Json to_json(const SolveResult& r) {
    Json j = Json::object();
    j["expected_utility"] = r.expected_utility;
    j["policy"] = Json::array();
    for (const auto& rule : r.policy.rules) j["policy"].push_back(to_json(rule));
    j["trace"] = Json::array();
    for (const auto& s : r.trace) j["trace"].push_back(to_json(s));
    return j;
}

inline SolveResult solve_result_from_json(const Json& j) {
    detail::check_fields(j, {"expected_utility", "policy", "trace"}, "result");
    SolveResult r;
    r.expected_utility = detail::get_number(detail::field(j, "expected_utility", "result"), "result.expected_utility");
    for (const auto& jr : detail::field(j, "policy", "result")) {
        detail::check_fields(jr, {"decision", "information", "choice"}, "result.policy");
        DecisionRule rule;
        rule.decision = detail::get_string(detail::field(jr, "decision", "result.policy"), "result.policy.decision");
        rule.information = detail::get_strings(detail::field(jr, "information", "result.policy"), "result.policy");
        rule.choice = detail::field(jr, "choice", "result.policy").get<std::vector<std::size_t>>();
        r.policy.rules.push_back(std::move(rule));
    }
    for (const auto& js : detail::field(j, "trace", "result")) {
        detail::check_fields(js, {"kind", "node", "target", "note"}, "result.trace");
        Step s{};
        const auto kind = detail::get_string(detail::field(js, "kind", "result.trace"), "result.trace.kind");
        if (kind == "barren_removal")
            s.kind = StepKind::barren_removal;
        else if (kind == "arc_reversal")
            s.kind = StepKind::arc_reversal;
        else if (kind == "chance_removal")
            s.kind = StepKind::chance_removal;
        else if (kind == "decision_removal")
            s.kind = StepKind::decision_removal;
        else
            detail::parse_error("result.trace.kind", "unknown step '" + kind + "'");
        s.node = detail::get_string(detail::field(js, "node", "result.trace"), "result.trace.node");
        if (js.contains("target")) s.target = detail::get_string(js["target"], "result.trace.target");
        if (js.contains("note")) s.note = detail::get_string(js["note"], "result.trace.note");
        r.trace.push_back(std::move(s));
    }
    return r;
}

/// Policy with information states and choices spelled out as labels.
inline Json policy_table(const Policy& policy, const InfluenceDiagram& d) {
    Json out = Json::array();
    for (const auto& rule : policy.rules) {
        const Node* dn = d.find(rule.decision);
        Json jr{{"decision", rule.decision}, {"information", rule.information}, {"rows", Json::array()}};
        Frame f(d, rule.information);
        Assignment a;
        for (std::size_t r = 0; r < rule.choice.size(); ++r) {
            f.decode(r, a);
            std::string key;
            for (std::size_t k = 0; k < rule.information.size(); ++k) {
                if (k) key += '|';
                key += d.at(rule.information[k]).outcomes[a.at(rule.information[k])];
            }
            jr["rows"].push_back(Json{{"state", key},
                                      {"choice", dn ? Json(dn->outcomes.at(rule.choice[r])) : Json(rule.choice[r])}});
        }
        out.push_back(std::move(jr));
    }
    return out;
}

inline Json to_json(const SweepResult& s) {
    Json j{{"param", to_json(s.param)}, {"decision", s.decision}, {"alternatives", s.alternatives}};
    j["points"] = Json::array();
    for (const auto& p : s.points) {
        Json jp{{"value", p.value}, {"forced", p.forced}, {"optimal", p.optimal}};
        jp["choice"] = p.choice && *p.choice < s.alternatives.size() ? Json(s.alternatives[*p.choice]) : Json(nullptr);
        j["points"].push_back(std::move(jp));
    }
    return j;
}

inline Json to_json(const TornadoEntry& e) {
    return Json{{"param", to_json(e.param)}, {"low", e.low},         {"high", e.high},
                {"eu_low", e.eu_low},        {"eu_high", e.eu_high}, {"swing", e.swing}};
}

inline Json to_json(const WhatIfResult& w) {
    return Json{{"param", to_json(w.param)},
                {"value", w.value},
                {"trial", to_json(w.trial)},
                {"baseline", to_json(w.baseline)},
                {"changed_decision", w.changed_decision}};
}

inline Json to_json(const RecommendationReport& r, const InfluenceDiagram& d) {
    Json j = Json::object();
    j["decision"] = r.decision;
    j["recommended"] = r.recommended ? Json(*r.recommended) : Json(nullptr);
    j["expected_utility"] = r.expected_utility;
    j["alternatives"] = Json::array();
    for (const auto& a : r.alternatives)
        j["alternatives"].push_back(Json{{"alternative", a.alternative}, {"expected_utility", a.expected_utility}});
    j["policy"] = policy_table(r.policy, d);
    j["tornado"] = Json::array();
    for (const auto& e : r.tornado) j["tornado"].push_back(to_json(e));
    j["trace"] = Json{{"barren_removals", r.trace.barren_removals},
                      {"arc_reversals", r.trace.arc_reversals},
                      {"chance_removals", r.trace.chance_removals},
                      {"decision_removals", r.trace.decision_removals},
                      {"steps", r.trace.steps}};
    return j;
}

// ---------------------------------------------------------------------------
// Features, bindings, sessions
// ---------------------------------------------------------------------------

inline FeatureVector features_from_json(const Json& j) {
    if (!j.is_object()) detail::parse_error("features", "expected an object of booleans");
    FeatureVector out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_boolean()) detail::parse_error("features." + it.key(), "expected a boolean");
        out[it.key()] = it.value().get<bool>();
    }
    return out;
}

/// Slot values are arrays of numbers; whole-table slots may nest one array
/// per row.
inline Bindings bindings_from_json(const Json& j) {
    if (!j.is_object()) detail::parse_error("bindings", "expected an object");
    Bindings out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string ctx = "bindings." + it.key();
        std::vector<double> values;
        if (it.value().is_number()) {
            values.push_back(it.value().get<double>());
        } else if (it.value().is_array()) {
            for (const auto& e : it.value()) {
                if (e.is_array())
                    for (double x : detail::get_numbers(e, ctx)) values.push_back(x);
                else
                    values.push_back(detail::get_number(e, ctx));
            }
        } else {
            detail::parse_error(ctx, "expected a number or an array");
        }
        out[it.key()] = std::move(values);
    }
    return out;
}

inline Json to_json(const Bindings& b) {
    Json j = Json::object();
    for (const auto& [k, v] : b) j[k] = v;
    return j;
}

inline Json to_json(const Event& e) {
    Json j{{"seq", e.seq}, {"time", e.time}};
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, events::Started>) {
                j["type"] = "started";
                j["session_id"] = p.session_id;
                j["features"] = p.features;
                j["schema_id"] = p.schema_id;
            } else if constexpr (std::is_same_v<T, events::BindingsAccepted>) {
                j["type"] = "bindings_accepted";
                j["bindings"] = to_json(p.bindings);
            } else if constexpr (std::is_same_v<T, events::Solved>) {
                j["type"] = "solved";
                j["expected_utility"] = p.expected_utility;
            } else if constexpr (std::is_same_v<T, events::BindingsRejected>) {
                j["type"] = "bindings_rejected";
                j["bindings"] = to_json(p.bindings);
                j["code"] = p.code;
                j["message"] = p.message;
            } else if constexpr (std::is_same_v<T, events::Committed>) {
                j["type"] = "committed";
                j["param"] = to_json(p.param);
                j["value"] = p.value;
                j["previous_value"] = p.previous_value;
                j["previous_expected_utility"] = p.previous_expected_utility;
                j["expected_utility"] = p.expected_utility;
            }
        },
        e.payload);
    return j;
}

inline Event event_from_json(const Json& j) {
    const std::string ctx = "event";
    Event e;
    e.seq = detail::field(j, "seq", ctx).get<std::uint64_t>();
    e.time = detail::get_string(detail::field(j, "time", ctx), ctx + ".time");
    const auto type = detail::get_string(detail::field(j, "type", ctx), ctx + ".type");
    auto num = [&](const char* k) { return detail::get_number(detail::field(j, k, ctx), ctx + "." + k); };
    auto str = [&](const char* k) { return detail::get_string(detail::field(j, k, ctx), ctx + "." + k); };
    if (type == "started") {
        detail::check_fields(j, {"seq", "time", "type", "session_id", "features", "schema_id"}, ctx);
        e.payload = events::Started{str("session_id"), features_from_json(detail::field(j, "features", ctx)),
                                    str("schema_id")};
    } else if (type == "bindings_accepted") {
        detail::check_fields(j, {"seq", "time", "type", "bindings"}, ctx);
        e.payload = events::BindingsAccepted{bindings_from_json(detail::field(j, "bindings", ctx))};
    } else if (type == "solved") {
        detail::check_fields(j, {"seq", "time", "type", "expected_utility"}, ctx);
        e.payload = events::Solved{num("expected_utility")};
    } else if (type == "bindings_rejected") {
        detail::check_fields(j, {"seq", "time", "type", "bindings", "code", "message"}, ctx);
        e.payload = events::BindingsRejected{bindings_from_json(detail::field(j, "bindings", ctx)), str("code"),
                                             str("message")};
    } else if (type == "committed") {
        detail::check_fields(j, {"seq", "time", "type", "param", "value", "previous_value",
                                 "previous_expected_utility", "expected_utility"},
                             ctx);
        e.payload = events::Committed{param_from_json(detail::field(j, "param", ctx)), num("value"),
                                      num("previous_value"), num("previous_expected_utility"),
                                      num("expected_utility")};
    } else {
        detail::parse_error(ctx + ".type", "unknown event type '" + type + "'");
    }
    return e;
}

inline Json to_json(const Session& s) {
    Json j = Json::object();
    j["version"] = kFormatVersion;
    j["id"] = s.id;
    j["phase"] = to_string(s.phase);
    j["features"] = s.features;
    j["schema_id"] = s.schema_id;
    if (s.diagram) j["diagram"] = diagram_body(*s.diagram);
    if (s.baseline) j["baseline"] = to_json(*s.baseline);
    j["events"] = Json::array();
    for (const auto& e : s.events) j["events"].push_back(to_json(e));
    return j;
}

inline Session session_from_json(const Json& j) {
    const std::string ctx = "session";
    detail::check_version(j, ctx);
    detail::check_fields(j, {"version", "id", "phase", "features", "schema_id", "diagram", "baseline", "events"}, ctx);
    Session s;
    s.id = detail::get_string(detail::field(j, "id", ctx), ctx + ".id");
    const auto phase = detail::get_string(detail::field(j, "phase", ctx), ctx + ".phase");
    if (phase == "FORMULATE")
        s.phase = Phase::formulate;
    else if (phase == "ASSESS")
        s.phase = Phase::assess;
    else if (phase == "REFINE")
        s.phase = Phase::refine;
    else
        detail::parse_error(ctx + ".phase", "unknown phase '" + phase + "'");
    s.features = features_from_json(detail::field(j, "features", ctx));
    s.schema_id = detail::get_string(detail::field(j, "schema_id", ctx), ctx + ".schema_id");
    if (j.contains("diagram")) s.diagram = diagram_from_body(j["diagram"], ctx + ".diagram");
    if (j.contains("baseline")) s.baseline = solve_result_from_json(j["baseline"]);
    for (const auto& e : detail::field(j, "events", ctx)) s.events.push_back(event_from_json(e));
    return s;
}

/// Short view used in listings and API responses.
inline Json session_summary(const Session& s) {
    Json j{{"id", s.id}, {"phase", to_string(s.phase)}, {"features", s.features}, {"schema_id", s.schema_id}};
    j["expected_utility"] = s.baseline ? Json(s.baseline->expected_utility) : Json(nullptr);
    std::optional<std::string> rec;
    if (s.baseline && s.diagram)
        if (auto c = first_stage_choice(*s.baseline))
            rec = s.diagram->at(s.baseline->policy.rules.front().decision).outcomes.at(*c);
    j["recommended"] = rec ? Json(*rec) : Json(nullptr);
    j["events"] = s.events.size();
    return j;
}

// ---------------------------------------------------------------------------
// Schema library
// ---------------------------------------------------------------------------

inline Json to_json(const SchemaFragment& s) {
    Json j = Json::object();
    j["id"] = s.id;
    j["title"] = s.title;
    j["priority"] = s.priority;
    j["applicability"] = Json::array();
    for (const auto& lit : s.applicability)
        j["applicability"].push_back(Json{{"feature", lit.feature}, {"required", lit.required}});
    j["diagram"] = diagram_body(s.skeleton);
    j["slots"] = Json::array();
    for (const auto& slot : s.slots) {
        Json js{{"id", slot.id}, {"target", to_string(slot.target)}, {"node", slot.node}};
        if (slot.target == SlotTarget::cpt_row || slot.target == SlotTarget::utility_entry) js["row"] = slot.row;
        js["prompt"] = slot.prompt;
        j["slots"].push_back(std::move(js));
    }
    return j;
}

inline Json to_json(const SchemaLibrary& lib) {
    Json j{{"version", kFormatVersion}, {"features", lib.features}, {"schemas", Json::array()}};
    for (const auto& s : lib.schemas) j["schemas"].push_back(to_json(s));
    return j;
}

inline SchemaLibrary library_from_json(const Json& j) {
    const std::string ctx = "library";
    detail::check_version(j, ctx);
    detail::check_fields(j, {"version", "features", "schemas"}, ctx);
    SchemaLibrary lib;
    lib.features = detail::get_strings(detail::field(j, "features", ctx), ctx + ".features");
    const Json& js = detail::field(j, "schemas", ctx);
    for (std::size_t k = 0; k < js.size(); ++k) {
        const std::string sctx = ctx + ".schemas[" + std::to_string(k) + "]";
        detail::check_fields(js[k], {"id", "title", "priority", "applicability", "diagram", "slots"}, sctx);
        SchemaFragment s;
        s.id = detail::get_string(detail::field(js[k], "id", sctx), sctx + ".id");
        s.title = js[k].contains("title") ? detail::get_string(js[k]["title"], sctx + ".title") : std::string{};
        const Json& prio = detail::field(js[k], "priority", sctx);
        if (!prio.is_number_integer()) detail::parse_error(sctx + ".priority", "expected an integer");
        s.priority = prio.get<int>();
        for (const auto& lit : detail::field(js[k], "applicability", sctx)) {
            detail::check_fields(lit, {"feature", "required"}, sctx + ".applicability");
            const Json& req = detail::field(lit, "required", sctx);
            if (!req.is_boolean()) detail::parse_error(sctx + ".applicability", "'required' must be a boolean");
            s.applicability.push_back(
                {detail::get_string(detail::field(lit, "feature", sctx), sctx + ".applicability"), req.get<bool>()});
        }
        s.skeleton = diagram_from_body(detail::field(js[k], "diagram", sctx), sctx + ".diagram");
        for (const auto& jslot : detail::field(js[k], "slots", sctx)) {
            const std::string lctx = sctx + ".slots";
            detail::check_fields(jslot, {"id", "target", "node", "row", "prompt"}, lctx);
            Slot slot;
            slot.id = detail::get_string(detail::field(jslot, "id", lctx), lctx + ".id");
            const auto target = detail::get_string(detail::field(jslot, "target", lctx), lctx + ".target");
            if (target == "cpt_row")
                slot.target = SlotTarget::cpt_row;
            else if (target == "cpt")
                slot.target = SlotTarget::cpt;
            else if (target == "utilities")
                slot.target = SlotTarget::utilities;
            else if (target == "utility_entry")
                slot.target = SlotTarget::utility_entry;
            else
                detail::parse_error(lctx + ".target", "unknown slot target '" + target + "'");
            slot.node = detail::get_string(detail::field(jslot, "node", lctx), lctx + ".node");
            if (jslot.contains("row")) slot.row = detail::get_string(jslot["row"], lctx + ".row");
            if (jslot.contains("prompt")) slot.prompt = detail::get_string(jslot["prompt"], lctx + ".prompt");
            s.slots.push_back(std::move(slot));
        }
        for (const auto& lit : s.applicability)
            if (std::find(lib.features.begin(), lib.features.end(), lit.feature) == lib.features.end())
                detail::parse_error(sctx, "feature '" + lit.feature + "' is not declared");
        check_schema(s);
        lib.schemas.push_back(std::move(s));
    }
    return lib;
}

}  // namespace dw
