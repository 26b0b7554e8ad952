#pragma once

#include "dw/diagram.hpp"

namespace dw::test {

// D1: treat/wait changes the chance of success.
inline InfluenceDiagram d1() {
    return {"D1",
            {
                decision_node("D", {"treat", "wait"}),
                chance_node("O", {"success", "failure"}, {"D"}, {{0.6, 0.4}, {0.2, 0.8}}),
                value_node("V", {"O"}, {100, 0}),
            }};
}

// D2: treating pays off only under a good prognosis; waiting is a sure 40.
inline InfluenceDiagram d2() {
    return {"D2",
            {
                chance_node("S", {"good", "bad"}, {}, {{0.5, 0.5}}),
                decision_node("D", {"treat", "wait"}),
                value_node("V", {"S", "D"}, {100, 40, 0, 40}),
            }};
}

// D2 with the prognosis observed before deciding.
inline InfluenceDiagram d2_informed() {
    InfluenceDiagram d = d2();
    d.name = "D2-informed";
    d.at("D").predecessors = {"S"};
    return d;
}

// D3: X -> Y, value on Y.
inline InfluenceDiagram d3() {
    return {"D3",
            {
                chance_node("X", {"x1", "x0"}, {}, {{0.5, 0.5}}),
                chance_node("Y", {"y1", "y0"}, {"X"}, {{0.8, 0.2}, {0.4, 0.6}}),
                value_node("V", {"Y"}, {100, 20}),
            }};
}

// C observed by the first of two decisions.
inline InfluenceDiagram two_decisions() {
    return {"two-decisions",
            {
                chance_node("C", {"c0", "c1"}, {}, {{0.3, 0.7}}),
                decision_node("D1", {"a", "b"}, {"C"}),
                decision_node("D2", {"x", "y"}, {"D1"}),
                value_node("V", {"C", "D1", "D2"}, {1, 2, 3, 4, 5, 6, 7, 8}),
            }};
}

}  // namespace dw::test
