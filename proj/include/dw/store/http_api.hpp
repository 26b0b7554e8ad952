#pragma once

// HTTP/JSON service over the consultation engine.
//
// Every handler is also callable directly (Service::handle_*), returning a
// status and JSON body; mount() wires them to a cpp-httplib server.
// Mutations of one session are serialized; reads share the session lock.

#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <utility>

#include <httplib.h>

#include "dw/consult.hpp"
#include "dw/error.hpp"
#include "dw/sensitivity.hpp"
#include "dw/store/codec.hpp"
#include "dw/store/session_store.hpp"

namespace dw {

struct Response {
    int status = 200;
    Json body;
};

inline int http_status(const std::string& code) {
    if (code == "UNKNOWN_SESSION") return 404;
    if (code == "WRONG_PHASE") return 409;
    if (code == "IO_ERROR" || code.rfind("INTERNAL", 0) == 0) return 500;
    return 400;
}

inline Json error_body(const Error& e) {
    Json err{{"code", e.code()}, {"message", e.what()}};
    if (!e.node().empty()) err["node"] = e.node();
    if (!e.row().empty()) err["row"] = e.row();
    return Json{{"error", std::move(err)}};
}

class Service {
public:
    explicit Service(SessionStore store) : store_(std::move(store)), library_(store_.load_library()) {}

    const SchemaLibrary& library() const { return library_; }
    const SessionStore& store() const { return store_; }

    Response handle_create_session(const std::string& body) {
        return guarded([&] {
            Json j = parse_json(body);
            detail::check_fields(j, {"features"}, "request");
            FeatureVector features = j.contains("features") ? features_from_json(j["features"]) : FeatureVector{};
            std::string id;
            do id = new_session_id();
            while (store_.exists(id));
            std::unique_lock lock(*lock_for(id));
            Session s = start_session(features, library_, id);
            store_.save(s);
            return Response{201, session_summary(s)};
        });
    }

    Response handle_list_sessions() {
        return guarded([&] {
            Json out = Json::array();
            for (const auto& id : store_.list()) {
                std::shared_lock lock(*lock_for(id));
                if (auto s = store_.load(id)) out.push_back(session_summary(*s));
            }
            return Response{200, std::move(out)};
        });
    }

    Response handle_get_session(const std::string& id) {
        return guarded([&] {
            std::shared_lock lock(*lock_for(id));
            return Response{200, to_json(load(id))};
        });
    }

    Response handle_bindings(const std::string& id, const std::string& body) {
        return guarded([&] {
            Json j = parse_json(body);
            detail::check_fields(j, {"bindings"}, "request");
            Bindings bindings = bindings_from_json(detail::field(j, "bindings", "request"));
            std::unique_lock lock(*lock_for(id));
            Session s = load(id);
            try {
                provide_bindings(s, bindings, library_);
            } catch (const Error&) {
                if (s.phase == Phase::formulate) store_.save(s);  // keep the rejection event
                throw;
            }
            store_.save(s);
            return Response{200, Json{{"session", session_summary(s)}, {"report", to_json(report(s), *s.diagram)}}};
        });
    }

    Response handle_whatif(const std::string& id, const std::string& body) {
        return guarded([&] {
            auto [param, value] = param_request(body);
            std::shared_lock lock(*lock_for(id));
            Session s = load(id);
            WhatIfResult r = whatif(s, param, value);
            {
                std::lock_guard audit_lock(audit_mutex_);
                store_.append_audit(id, Json{{"time", utc_now()},
                                             {"type", "whatif"},
                                             {"param", to_json(param)},
                                             {"value", value},
                                             {"trial_expected_utility", r.trial.expected_utility},
                                             {"changed_decision", r.changed_decision}});
            }
            return Response{200, to_json(r)};
        });
    }

    Response handle_commit(const std::string& id, const std::string& body) {
        return guarded([&] {
            auto [param, value] = param_request(body);
            std::unique_lock lock(*lock_for(id));
            Session s = load(id);
            commit(s, param, value);
            store_.save(s);
            return Response{200, Json{{"session", session_summary(s)}, {"report", to_json(report(s), *s.diagram)}}};
        });
    }

    Response handle_report(const std::string& id) {
        return guarded([&] {
            std::shared_lock lock(*lock_for(id));
            Session s = load(id);
            return Response{200, to_json(report(s), s.diagram ? *s.diagram : InfluenceDiagram{})};
        });
    }

    Response handle_sweep(const std::string& id, const std::string& body) {
        return guarded([&] {
            Json j = parse_json(body);
            detail::check_fields(j, {"param", "grid"}, "request");
            ParamRef param = param_from_json(detail::field(j, "param", "request"));
            auto grid = detail::get_numbers(detail::field(j, "grid", "request"), "request.grid");
            std::shared_lock lock(*lock_for(id));
            Session s = load(id);
            detail::require_phase(s, Phase::refine);
            return Response{200, to_json(sweep(*s.diagram, param, grid))};
        });
    }

    Response handle_evpi(const std::string& id, const std::string& body) {
        return guarded([&] {
            Json j = parse_json(body);
            detail::check_fields(j, {"chance", "decision"}, "request");
            auto chance = detail::get_string(detail::field(j, "chance", "request"), "request.chance");
            auto decision = detail::get_string(detail::field(j, "decision", "request"), "request.decision");
            std::shared_lock lock(*lock_for(id));
            Session s = load(id);
            detail::require_phase(s, Phase::refine);
            return Response{200, Json{{"chance", chance}, {"decision", decision}, {"evpi", evpi(*s.diagram, chance, decision)}}};
        });
    }

    Response handle_schemas() const {
        Json out = Json::array();
        for (const auto& s : library_.schemas) {
            Json js = to_json(s);
            // Slot sizes so clients can build assessment forms.
            for (auto& slot : js["slots"]) {
                const Node& n = s.skeleton.at(slot["node"].get<std::string>());
                const std::string target = slot["target"].get<std::string>();
                const std::size_t rows = predecessor_frame(s.skeleton, n).size();
                slot["kind"] = n.is_chance() ? "probability" : "utility";
                slot["labels"] = n.is_chance() ? Json(n.outcomes) : Json::array();
                slot["rows"] = (target == "cpt" || target == "utilities") ? rows : 1;
            }
            out.push_back(std::move(js));
        }
        return {200, std::move(out)};
    }

    Response handle_diagram(const std::string& id) {
        return guarded([&] {
            std::shared_lock lock(*lock_for(id));
            Session s = load(id);
            if (!s.diagram) throw Error("WRONG_PHASE", "session has no assessed diagram yet");
            return Response{200, parse_json(encode(*s.diagram))};
        });
    }

    void mount(httplib::Server& server) {
        auto reply = [](httplib::Response& res, const Response& r) {
            res.status = r.status;
            res.set_content(r.body.dump(), "application/json");
        };
        const std::string id = "([A-Za-z0-9_-]+)";
        server.Post("/sessions", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, handle_create_session(req.body));
        });
        server.Get("/sessions", [this, reply](const httplib::Request&, httplib::Response& res) {
            reply(res, handle_list_sessions());
        });
        server.Get("/sessions/" + id, [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, handle_get_session(req.matches[1]));
        });
        server.Post("/sessions/" + id + "/bindings", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, handle_bindings(req.matches[1], req.body));
        });
        server.Post("/sessions/" + id + "/whatif", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, handle_whatif(req.matches[1], req.body));
        });
        server.Post("/sessions/" + id + "/commit", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, handle_commit(req.matches[1], req.body));
        });
        server.Get("/sessions/" + id + "/report", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, handle_report(req.matches[1]));
        });
        server.Post("/sessions/" + id + "/sweep", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, handle_sweep(req.matches[1], req.body));
        });
        server.Post("/sessions/" + id + "/evpi", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, handle_evpi(req.matches[1], req.body));
        });
        server.Get("/schemas", [this, reply](const httplib::Request&, httplib::Response& res) {
            reply(res, handle_schemas());
        });
        server.Get("/diagrams/" + id, [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, handle_diagram(req.matches[1]));
        });
    }

private:
    template <class Fn>
    Response guarded(Fn&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            return {http_status(e.code()), error_body(e)};
        } catch (const nlohmann::json::exception& e) {
            return {400, error_body(Error("PARSE_ERROR", e.what()))};
        } catch (const std::exception& e) {
            return {500, error_body(Error("INTERNAL_ERROR", e.what()))};
        }
    }

    std::pair<ParamRef, double> param_request(const std::string& body) const {
        Json j = parse_json(body);
        detail::check_fields(j, {"param", "value"}, "request");
        return {param_from_json(detail::field(j, "param", "request")),
                detail::get_number(detail::field(j, "value", "request"), "request.value")};
    }

    Session load(const std::string& id) const {
        auto s = store_.load(id);
        if (!s) throw Error("UNKNOWN_SESSION", "no session '" + id + "'");
        return std::move(*s);
    }

    std::shared_ptr<std::shared_mutex> lock_for(const std::string& id) {
        std::lock_guard guard(locks_mutex_);
        auto& slot = locks_[id];
        if (!slot) slot = std::make_shared<std::shared_mutex>();
        return slot;
    }

    SessionStore store_;
    SchemaLibrary library_;
    std::mutex locks_mutex_;
    std::map<std::string, std::shared_ptr<std::shared_mutex>> locks_;
    std::mutex audit_mutex_;
};

}  // namespace dw
