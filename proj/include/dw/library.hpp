#pragma once

// Illustrative schema library for a fictional treatment-choice domain.
// These are teaching stand-ins, not medical knowledge.

#include <string>

#include "dw/diagram.hpp"
#include "dw/schema.hpp"

namespace dw {

inline constexpr const char* kFeaturePrognosisUncertain = "prognosis_uncertain";
inline constexpr const char* kFeaturePrognosticTest = "prognostic_test";

inline SchemaLibrary shipped_library() {
    SchemaLibrary lib;
    lib.features = {kFeaturePrognosisUncertain, kFeaturePrognosticTest};

    // Prognosis is uncertain and a test result is seen before choosing.
    {
        SchemaFragment s;
        s.id = "screened-prognosis";
        s.title = "Treat or wait after a prognostic test";
        s.priority = 1;
        s.applicability = {{kFeaturePrognosisUncertain, true}, {kFeaturePrognosticTest, true}};
        s.skeleton.name = s.id;
        s.skeleton.nodes = {
            chance_node("Prognosis", {"good", "bad"}, {}, {}),
            chance_node("Test", {"positive", "negative"}, {"Prognosis"}, {}),
            decision_node("Treatment", {"treat", "wait"}, {"Test"}),
            value_node("Value", {"Prognosis", "Treatment"}, {}),
        };
        s.slots = {
            {"prior", SlotTarget::cpt_row, "Prognosis", "", "How likely is a good prognosis (good, bad)?"},
            {"test", SlotTarget::cpt, "Test", "",
             "Test result given prognosis: (positive, negative) for good, then for bad"},
            {"utility", SlotTarget::utilities, "Value", "",
             "Desirability of good|treat, good|wait, bad|treat, bad|wait on a 0-100 scale"},
        };
        lib.schemas.push_back(std::move(s));
    }

    // Prognosis is uncertain and cannot be observed before choosing.
    {
        SchemaFragment s;
        s.id = "prognosis";
        s.title = "Treat or wait under an uncertain prognosis";
        s.priority = 2;
        s.applicability = {{kFeaturePrognosisUncertain, true}};
        s.skeleton.name = s.id;
        s.skeleton.nodes = {
            chance_node("S", {"good", "bad"}, {}, {}),
            decision_node("D", {"treat", "wait"}),
            value_node("V", {"S", "D"}, {}),
        };
        s.slots = {
            {"prior", SlotTarget::cpt_row, "S", "", "How likely is a good prognosis (good, bad)?"},
            {"utility", SlotTarget::utilities, "V", "",
             "Desirability of good|treat, good|wait, bad|treat, bad|wait on a 0-100 scale"},
        };
        lib.schemas.push_back(std::move(s));
    }

    // Fallback: the treatment choice changes the chance of success.
    {
        SchemaFragment s;
        s.id = "treatment-response";
        s.title = "Treat or wait given response rates";
        s.priority = 3;
        s.skeleton.name = s.id;
        s.skeleton.nodes = {
            decision_node("D", {"treat", "wait"}),
            chance_node("O", {"success", "failure"}, {"D"}, {}),
            value_node("V", {"O"}, {}),
        };
        s.slots = {
            {"response_treat", SlotTarget::cpt_row, "O", "treat", "Chance of (success, failure) if treated"},
            {"response_wait", SlotTarget::cpt_row, "O", "wait", "Chance of (success, failure) if waiting"},
            {"utility", SlotTarget::utilities, "V", "", "Desirability of success, failure on a 0-100 scale"},
        };
        lib.schemas.push_back(std::move(s));
    }
    return lib;
}

/// A binding set per shipped schema that instantiates and solves cleanly.
inline Bindings shipped_fixture_bindings(const std::string& schema_id) {
    if (schema_id == "screened-prognosis")
        return {{"prior", {0.5, 0.5}}, {"test", {0.9, 0.1, 0.2, 0.8}}, {"utility", {100, 40, 0, 40}}};
    if (schema_id == "prognosis") return {{"prior", {0.5, 0.5}}, {"utility", {100, 40, 0, 40}}};
    if (schema_id == "treatment-response")
        return {{"response_treat", {0.6, 0.4}}, {"response_wait", {0.2, 0.8}}, {"utility", {100, 0}}};
    throw Error("UNKNOWN_SCHEMA", "no fixture bindings for '" + schema_id + "'");
}

}  // namespace dw
