#pragma once

// Consultation sessions: formulate (pick a schema), assess (bind and
// solve), refine (what-if, commit, report). Sessions are event-sourced;
// replay_session() rebuilds a session from its log.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <functional>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "dw/diagram.hpp"
#include "dw/error.hpp"
#include "dw/schema.hpp"
#include "dw/sensitivity.hpp"
#include "dw/solver.hpp"

namespace dw {

enum class Phase { formulate, assess, refine };

inline const char* to_string(Phase p) {
    switch (p) {
        case Phase::formulate: return "FORMULATE";
        case Phase::assess: return "ASSESS";
        case Phase::refine: return "REFINE";
    }
    return "?";
}

namespace events {

struct Started {
    std::string session_id;
    FeatureVector features;
    std::string schema_id;
    bool operator==(const Started&) const = default;
};

struct BindingsAccepted {
    Bindings bindings;
    bool operator==(const BindingsAccepted&) const = default;
};

struct Solved {
    double expected_utility = 0.0;
    bool operator==(const Solved&) const = default;
};

struct BindingsRejected {
    Bindings bindings;
    std::string code;
    std::string message;
    bool operator==(const BindingsRejected&) const = default;
};

struct Committed {
    ParamRef param;
    double value = 0.0;
    double previous_value = 0.0;
    double previous_expected_utility = 0.0;
    double expected_utility = 0.0;
    bool operator==(const Committed&) const = default;
};

}  // namespace events

using EventPayload =
    std::variant<events::Started, events::BindingsAccepted, events::Solved, events::BindingsRejected, events::Committed>;

struct Event {
    std::uint64_t seq = 0;
    std::string time;  // UTC, ISO-8601
    EventPayload payload;

    bool operator==(const Event&) const = default;
};

struct Session {
    std::string id;
    Phase phase = Phase::formulate;
    FeatureVector features;
    std::string schema_id;
    std::optional<InfluenceDiagram> diagram;
    std::optional<SolveResult> baseline;
    std::vector<Event> events;

    bool operator==(const Session&) const = default;
};

struct WhatIfResult {
    ParamRef param;
    double value = 0.0;
    SolveResult trial;
    SolveResult baseline;
    bool changed_decision = false;
};

struct AlternativeValue {
    std::string alternative;
    double expected_utility = 0.0;
    bool operator==(const AlternativeValue&) const = default;
};

struct TraceSummary {
    std::size_t barren_removals = 0;
    std::size_t arc_reversals = 0;
    std::size_t chance_removals = 0;
    std::size_t decision_removals = 0;
    std::vector<std::string> steps;
    bool operator==(const TraceSummary&) const = default;
};

struct RecommendationReport {
    std::string decision;                    // first decision; empty if none
    std::optional<std::string> recommended;  // its recommended alternative
    std::vector<AlternativeValue> alternatives;
    double expected_utility = 0.0;
    Policy policy;
    std::vector<TornadoEntry> tornado;
    TraceSummary trace;
    bool operator==(const RecommendationReport&) const = default;
};

using Clock = std::function<std::string()>;

inline std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
    return os.str();
}

inline std::string new_session_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << rng();
    return os.str();
}

namespace detail {

inline void require_phase(const Session& s, Phase expected) {
    if (s.phase != expected)
        throw Error("WRONG_PHASE", std::string("session is in ") + to_string(s.phase) + ", operation needs " +
                                       to_string(expected));
}

inline void append(Session& s, EventPayload payload, const Clock& clock) {
    s.events.push_back({s.events.size() + 1, clock(), std::move(payload)});
}

inline void apply(Session& s, const Event& e, const SchemaLibrary& library) {
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, events::Started>) {
                s.id = p.session_id;
                s.features = p.features;
                s.schema_id = p.schema_id;
                s.phase = Phase::formulate;
            } else if constexpr (std::is_same_v<T, events::BindingsAccepted>) {
                s.diagram = canonicalize(instantiate(library.at(s.schema_id), p.bindings));
                s.phase = Phase::assess;
            } else if constexpr (std::is_same_v<T, events::Solved>) {
                s.baseline = solve(*s.diagram);
                s.phase = Phase::refine;
            } else if constexpr (std::is_same_v<T, events::Committed>) {
                s.diagram = with_param(*s.diagram, p.param, p.value);
                s.baseline = solve(*s.diagram);
            }
        },
        e.payload);
    s.events.push_back(e);
}

}  // namespace detail

/// Picks the schema for the given features and opens a session in
/// FORMULATE.
inline Session start_session(const FeatureVector& features, const SchemaLibrary& library,
                             std::string id = new_session_id(), const Clock& clock = utc_now) {
    check_features(features, library);
    const SchemaFragment& schema = select_schema(features, library.schemas);
    Session s;
    detail::append(s, events::Started{id, features, schema.id}, clock);
    s.id = std::move(id);
    s.features = features;
    s.schema_id = schema.id;
    return s;
}

/// Instantiates, canonicalizes and solves the session's schema, moving the
/// session to REFINE. On failure the session stays in FORMULATE and only
/// gains a rejection event.
inline void provide_bindings(Session& s, const Bindings& bindings, const SchemaLibrary& library,
                             const Clock& clock = utc_now) {
    detail::require_phase(s, Phase::formulate);
    InfluenceDiagram d;
    SolveResult r;
    try {
        d = canonicalize(instantiate(library.at(s.schema_id), bindings));
        r = solve(d);
    } catch (const Error& e) {
        detail::append(s, events::BindingsRejected{bindings, e.code(), e.what()}, clock);
        throw;
    }
    detail::append(s, events::BindingsAccepted{bindings}, clock);
    s.diagram = std::move(d);
    s.phase = Phase::assess;
    detail::append(s, events::Solved{r.expected_utility}, clock);
    s.baseline = std::move(r);
    s.phase = Phase::refine;
}

/// Evaluates a modified copy of the session diagram; the session is not
/// touched.
inline WhatIfResult whatif(const Session& s, const ParamRef& p, double v) {
    detail::require_phase(s, Phase::refine);
    WhatIfResult out;
    out.param = p;
    out.value = v;
    out.trial = solve(with_param(*s.diagram, p, v));
    out.baseline = *s.baseline;
    out.changed_decision = first_stage_choice(out.trial) != first_stage_choice(out.baseline);
    return out;
}

inline void commit(Session& s, const ParamRef& p, double v, const Clock& clock = utc_now) {
    detail::require_phase(s, Phase::refine);
    InfluenceDiagram d = with_param(*s.diagram, p, v);
    SolveResult r = solve(d);
    events::Committed e{p, v, param_value(*s.diagram, p), s.baseline->expected_utility, r.expected_utility};
    detail::append(s, std::move(e), clock);
    s.diagram = std::move(d);
    s.baseline = std::move(r);
}

inline TraceSummary summarize(const EliminationTrace& trace) {
    TraceSummary out;
    for (const Step& step : trace) {
        std::string line;
        switch (step.kind) {
            case StepKind::barren_removal:
                ++out.barren_removals;
                line = "remove barren node " + step.node;
                break;
            case StepKind::arc_reversal:
                ++out.arc_reversals;
                line = "reverse arc " + step.node + " -> " + step.target;
                break;
            case StepKind::chance_removal:
                ++out.chance_removals;
                line = "take expectation over " + step.node;
                break;
            case StepKind::decision_removal:
                ++out.decision_removals;
                line = "maximize over " + step.node;
                break;
        }
        if (!step.note.empty()) line += " (" + step.note + ")";
        out.steps.push_back(std::move(line));
    }
    return out;
}

/// Every CPT entry swept by +/- `delta`, clamped to [0,1]. Variables with a
/// single outcome have no free entry and are skipped.
inline std::vector<TornadoInput> default_tornado_inputs(const InfluenceDiagram& d, double delta = 0.1) {
    std::vector<TornadoInput> out;
    for (const auto& name : topological_order(d)) {
        const Node& n = d.at(name);
        if (!n.is_chance() || n.outcomes.size() < 2) continue;
        for (std::size_t r = 0; r < n.cpt.size(); ++r)
            for (std::size_t k = 0; k < n.outcomes.size(); ++k) {
                const double v = n.cpt[r][k];
                out.push_back({ParamRef::probability(n.name, row_key(d, n, r), n.outcomes[k]),
                               std::max(0.0, v - delta), std::min(1.0, v + delta)});
            }
    }
    return out;
}

inline RecommendationReport report(const Session& s, std::size_t top_k = 3) {
    detail::require_phase(s, Phase::refine);
    const InfluenceDiagram& d = *s.diagram;
    RecommendationReport out;
    out.expected_utility = s.baseline->expected_utility;
    out.policy = s.baseline->policy;
    out.trace = summarize(s.baseline->trace);

    auto decisions = decision_order(d);
    if (!decisions.empty()) {
        out.decision = decisions.front();
        const auto& alts = d.at(out.decision).outcomes;
        auto values = first_stage_values(d);
        std::size_t best = 0;
        for (std::size_t k = 0; k < alts.size(); ++k) {
            out.alternatives.push_back({alts[k], values[k]});
            if (values[k] > values[best]) best = k;
        }
        out.recommended = alts[best];
    }

    for (auto& e : tornado(d, default_tornado_inputs(d)))
        if (e.swing > 1e-12 && out.tornado.size() < top_k) out.tornado.push_back(std::move(e));
    return out;
}

/// Rebuilds a session from its event log.
inline Session replay_session(const std::vector<Event>& log, const SchemaLibrary& library) {
    Session s;
    for (const Event& e : log) detail::apply(s, e, library);
    return s;
}

}  // namespace dw
