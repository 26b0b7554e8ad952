// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>

#include "dw/dw.hpp"
#include "dw/store/http_api.hpp"
#include "support/enumeration.hpp"
#include "support/fixtures.hpp"
#include "support/random_diagrams.hpp"

using namespace dw;
using namespace dw::test;

namespace {

struct Check {
    std::ostringstream failures;
    int count = 0;

    void expect(bool ok, const std::string& what) {
        if (ok) return;
        if (++count <= 5) failures << "\n    " << what;
    }
    void near(double a, double b, double tol, const std::string& what) {
        std::ostringstream os;
        os.precision(17);
        os << what << ": " << a << " vs " << b << " (tol " << tol << ")";
        expect(std::abs(a - b) <= tol, os.str());
    }
};

int failed = 0;

void criterion(const std::string& name, const std::function<void(Check&)>& body) {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.count) ++failed;
    std::printf("%s %s (%.2f s)%s\n", c.count ? "FAIL" : "PASS", name.c_str(), secs,
                c.count ? (" " + std::to_string(c.count) + " failure(s):" + c.failures.str()).c_str() : "");
    std::fflush(stdout);
}

std::vector<InfluenceDiagram> random_corpus(std::uint64_t seed, int n) {
    std::mt19937_64 rng(seed);
    std::vector<InfluenceDiagram> out;
    for (int i = 0; i < n; ++i) out.push_back(random_diagram(rng));
    return out;
}

std::vector<State> chance_states(const InfluenceDiagram& d) {
    std::vector<State> out{State{}};
    for (const Node& n : d.nodes) {
        if (!n.is_chance()) continue;
        std::vector<State> next;
        for (const auto& s : out)
            for (std::size_t k = 0; k < n.outcomes.size(); ++k) {
                State t = s;
                t[n.name] = k;
                next.push_back(t);
            }
        out = std::move(next);
    }
    return out;
}

InfluenceDiagram random_three_chance(std::mt19937_64& rng) {
    std::bernoulli_distribution coin(0.6);
    InfluenceDiagram d{"three",
                       {chance_node("a", {"0", "1"}, {}, {}), chance_node("b", {"0", "1"}, {}, {}),
                        chance_node("c", {"0", "1"}, {}, {}), value_node("v", {"c"}, {})}};
    if (coin(rng)) d.at("b").predecessors.push_back("a");
    if (coin(rng)) d.at("c").predecessors.push_back("a");
    if (coin(rng)) d.at("c").predecessors.push_back("b");
    if (d.at("b").predecessors.empty() && d.at("c").predecessors.empty()) d.at("b").predecessors.push_back("a");
    randomize_tables(rng, d);
    return d;
}

double oracle_eu(const InfluenceDiagram& d) { return solve_oracle(d).expected_utility; }

// EU of D2-shaped diagrams with D pinned, by the oracle's policy evaluation.
double oracle_forced(const InfluenceDiagram& d, std::size_t alt) {
    Policy p;
    p.rules.push_back({"D", {}, {alt}});
    return expected_utility(d, p);
}

std::string oracle_choice(const InfluenceDiagram& d) {
    auto r = solve_oracle(d);
    return d.at(r.policy.rules.front().decision).outcomes.at(r.policy.rules.front().choice.front());
}

std::string solver_choice(const InfluenceDiagram& d) {
    auto r = solve(d);
    return d.at(r.policy.rules.front().decision).outcomes.at(*first_stage_choice(r));
}

}  // namespace

int main() {
    const auto corpus = random_corpus(20260101, 200);

    criterion("oracle equivalence on 200 random diagrams", [&](Check& c) {
        const auto start = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            const auto& d = corpus[i];
            auto s = solve(d);
            auto o = solve_oracle(d);
            const std::string tag = "diagram " + std::to_string(i);
            c.near(s.expected_utility, o.expected_utility, 1e-9, tag + " EU");
            c.near(expected_utility(d, s.policy), o.expected_utility, 1e-9, tag + " policy EU");
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        c.expect(secs <= 10.0, "runtime " + std::to_string(secs) + " s exceeds 10 s");
    });

    criterion("arc reversal preserves the joint and double reversal restores tables", [&](Check& c) {
        std::mt19937_64 rng(777);
        int reversals = 0;
        for (int i = 0; i < 100; ++i) {
            auto d = random_three_chance(rng);
            const auto before = joint(d);
            for (const Node& n : d.nodes) {
                if (!n.is_chance()) continue;
                for (const auto& p : n.predecessors) {
                    InfluenceDiagram r;
                    try {
                        r = reverse_arc(d, p, n.name);
                    } catch (const Error& e) {
                        c.expect(e.code() == "REVERSAL_PATH", "unexpected " + e.code());
                        continue;
                    }
                    ++reversals;
                    const std::string tag = "diagram " + std::to_string(i) + " " + p + "->" + n.name;
                    c.expect(validate(r).ok(), tag + " invalid after reversal");
                    const auto after = joint(r);
                    for (const auto& [k, v] : before) c.near(after.at(k), v, 1e-12, tag + " joint");
                    auto back = reverse_arc(r, n.name, p);
                    for (const auto& s : chance_states(d))
                        for (const Node& m : d.nodes)
                            if (m.is_chance())
                                c.near(conditional(back, m.name, s), conditional(d, m.name, s), 1e-12,
                                       tag + " double reversal " + m.name);
                }
            }
        }
        c.expect(reversals >= 100, "only " + std::to_string(reversals) + " legal reversals exercised");
    });

    criterion("fixture values agree with the oracle", [&](Check& c) {
        // D1: EU 60, treat.
        c.near(solve(d1()).expected_utility, oracle_eu(d1()), 1e-9, "D1 EU vs oracle");
        c.near(oracle_eu(d1()), 60.0, 1e-9, "D1 EU");
        c.expect(solver_choice(d1()) == oracle_choice(d1()) && oracle_choice(d1()) == "treat", "D1 choice");

        // D2: EU 50, treat.
        c.near(solve(d2()).expected_utility, oracle_eu(d2()), 1e-9, "D2 EU vs oracle");
        c.near(oracle_eu(d2()), 50.0, 1e-9, "D2 EU");
        c.expect(solver_choice(d2()) == oracle_choice(d2()) && oracle_choice(d2()) == "treat", "D2 choice");

        // D2 with the prognosis observed: EU 70.
        c.near(solve(d2_informed()).expected_utility, oracle_eu(d2_informed()), 1e-9, "D2-informed EU vs oracle");
        c.near(oracle_eu(d2_informed()), 70.0, 1e-9, "D2-informed EU");

        // EVPI of S for D on D2: 20.
        const double oracle_evpi = oracle_eu(d2_informed()) - oracle_eu(d2());
        c.near(evpi(d2(), "S", "D"), oracle_evpi, 1e-9, "evpi vs oracle");
        c.near(oracle_evpi, 20.0, 1e-9, "evpi");

        // Threshold on P(S=good): where forced EUs cross, bisected on the oracle.
        const auto prior = ParamRef::probability("S", "", "good");
        double lo = 0.0, hi = 1.0;
        for (int i = 0; i < 80; ++i) {
            const double mid = 0.5 * (lo + hi);
            auto d = with_param(d2(), prior, mid);
            (oracle_forced(d, 0) > oracle_forced(d, 1) ? hi : lo) = mid;
        }
        auto t = thresholds(d2(), prior);
        c.expect(t.size() == 1, "expected one threshold, got " + std::to_string(t.size()));
        if (t.size() == 1) {
            c.near(t[0], lo, 1e-6, "threshold vs oracle");
            c.near(lo, 0.4, 1e-6, "threshold");
        }
    });

    criterion("invariance under affine utilities, barren nodes and added information", [&](Check& c) {
        std::mt19937_64 rng(4242);
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            const auto& d = corpus[i];
            const std::string tag = "diagram " + std::to_string(i);
            const auto base = solve(d);
            for (double a : {0.5, 2.0, 10.0})
                for (double b : {-5.0, 0.0, 7.0}) {
                    auto t = d;
                    for (double& u : t.value().utilities) u = a * u + b;
                    auto r = solve(t);
                    c.expect(r.policy == base.policy, tag + " policy changed under affine transform");
                    c.near(r.expected_utility, a * base.expected_utility + b, 1e-9, tag + " affine EU");
                }

            // A chance node and a decision hanging off existing nodes, feeding nothing.
            auto barren = d;
            std::uniform_int_distribution<std::size_t> pick(0, d.nodes.size() - 2);
            const std::string parent = d.nodes[pick(rng)].name;
            barren.nodes.push_back(chance_node("zz_barren", {"0", "1", "2"}, {parent}, {}));
            std::vector<std::string> idle_info{"zz_barren"};
            const auto decisions = decision_order(d);
            if (!decisions.empty()) idle_info.push_back(decisions.back());  // keeps decisions ordered
            barren.nodes.push_back(decision_node("zz_idle", {"x", "y"}, idle_info));
            randomize_tables(rng, barren);
            for (const Node& n : d.nodes) barren.at(n.name) = n;
            c.expect(validate(barren).ok(), tag + " barren injection produced an invalid diagram");
            c.near(solve(barren).expected_utility, base.expected_utility, 1e-9, tag + " barren injection");

            for (const Node& dec : d.nodes) {
                if (!dec.is_decision()) continue;
                for (const Node& ch : d.nodes) {
                    if (!ch.is_chance() || d.has_arc(ch.name, dec.name) || has_path(d, dec.name, ch.name)) continue;
                    auto more = d;
                    more.at(dec.name).predecessors.push_back(ch.name);
                    const double eu = solve(more).expected_utility;
                    c.expect(eu >= base.expected_utility - 1e-9, tag + " information arc " + ch.name + "->" +
                                                                     dec.name + " lowered EU");
                }
            }
        }
    });

    criterion("encode/decode round trip on 200 random diagrams", [&](Check& c) {
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            const auto& d = corpus[i];
            const std::string tag = "diagram " + std::to_string(i);
            const std::string text = encode(d);
            const auto back = decode(text);
            c.expect(back == in_topological_order(d), tag + " decode(encode(d)) differs");
            c.expect(encode(back) == text, tag + " re-encoding differs");
            const auto s0 = solve(d);
            const auto s1 = solve(back);
            c.near(s1.expected_utility, s0.expected_utility, 1e-12, tag + " re-solve EU");
            c.expect(s1.policy == s0.policy, tag + " re-solve policy");
        }
    });

    criterion("consultation flow through the HTTP API with event-log replay", [&](Check& c) {
        auto dir = std::filesystem::temp_directory_path() / ("dw-acceptance-" + std::to_string(::getpid()));
        std::filesystem::remove_all(dir);
        Service service{SessionStore(dir)};
        httplib::Server server;
        service.mount(server);
        const int port = server.bind_to_any_port("127.0.0.1");
        std::thread th([&] { server.listen_after_bind(); });
        server.wait_until_ready();
        httplib::Client client("127.0.0.1", port);

        auto call = [&](const std::string& method, const std::string& path, const Json& body = nullptr) {
            auto res = method == "GET" ? client.Get(path) : client.Post(path, body.dump(), "application/json");
            if (!res) throw std::runtime_error("no response for " + method + " " + path);
            return std::pair<int, Json>{res->status, Json::parse(res->body)};
        };
        auto eu = [](const Json& j) { return j.at("expected_utility").get<double>(); };

        try {
            const auto prior = ParamRef::probability("S", "", "good");
            const auto oracle_d2 = solve_oracle(d2());
            const auto at_03 = with_param(d2(), prior, 0.3);

            auto [s0, started] = call("POST", "/sessions", Json{{"features", {{"prognosis_uncertain", true}}}});
            c.expect(s0 == 201 && started["schema_id"] == "prognosis", "start: " + started.dump());
            const std::string id = started["id"];
            const std::string base = "/sessions/" + id;

            auto [s1, bound] =
                call("POST", base + "/bindings", Json{{"bindings", to_json(shipped_fixture_bindings("prognosis"))}});
            c.expect(s1 == 200, "bindings: " + bound.dump());
            c.near(eu(bound["report"]), oracle_d2.expected_utility, 1e-9, "EU after bindings");

            auto [s2, rep] = call("GET", base + "/report");
            c.expect(s2 == 200, "report status");
            c.near(eu(rep), 50.0, 1e-9, "report EU");
            c.expect(rep["recommended"] == oracle_choice(d2()), "report recommends " + rep["recommended"].dump());
            c.near(rep["alternatives"][0]["expected_utility"].get<double>(), oracle_forced(d2(), 0), 1e-9,
                   "forced treat EU");
            c.near(rep["alternatives"][1]["expected_utility"].get<double>(), oracle_forced(d2(), 1), 1e-9,
                   "forced wait EU");

            auto [s3, w] = call("POST", base + "/whatif", Json{{"param", "S//good"}, {"value", 0.3}});
            c.expect(s3 == 200, "whatif status");
            c.near(eu(w["trial"]), oracle_eu(at_03), 1e-9, "whatif trial EU");
            c.expect(w["changed_decision"] == true, "whatif should flip the decision");

            auto [s4, committed] = call("POST", base + "/commit", Json{{"param", "S//good"}, {"value", 0.3}});
            c.expect(s4 == 200, "commit status");
            c.near(eu(committed["report"]), 40.0, 1e-9, "EU after commit");
            c.expect(committed["report"]["recommended"] == oracle_choice(at_03), "recommendation after commit");

            auto [s5, rep2] = call("GET", base + "/report");
            c.expect(s5 == 200, "second report status");
            c.near(eu(rep2), oracle_eu(at_03), 1e-9, "final report EU");

            auto [s6, full] = call("GET", base);
            c.expect(s6 == 200, "get session status");
            const Session stored = session_from_json(full);
            const Session replayed = replay_session(stored.events, service.library());
            c.expect(replayed == stored, "replayed session differs from stored session");
            c.expect(to_json(replayed).dump() == full.dump(), "replayed session serializes differently");
            c.expect(stored.events.size() == 4, "expected 4 events, got " + std::to_string(stored.events.size()));

            // Fallback schema reproduces D1.
            auto [t0, other] = call("POST", "/sessions", Json{{"features", Json::object()}});
            const std::string id2 = other["id"];
            auto [t1, b2] = call("POST", "/sessions/" + id2 + "/bindings",
                                 Json{{"bindings", to_json(shipped_fixture_bindings("treatment-response"))}});
            c.expect(t1 == 200, "D1 bindings");
            c.near(eu(b2["report"]), oracle_eu(d1()), 1e-9, "D1 EU through the API");
            c.expect(b2["report"]["recommended"] == oracle_choice(d1()), "D1 recommendation through the API");
        } catch (const std::exception& e) {
            c.expect(false, e.what());
        }
        server.stop();
        th.join();
        std::filesystem::remove_all(dir);
    });

    std::printf("%s\n", failed ? "acceptance: FAILED" : "acceptance: all criteria passed");
    return failed ? 1 : 0;
}
