#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "dw/library.hpp"
#include "dw/store/http_api.hpp"
#include "support/fixtures.hpp"

using namespace dw;
using namespace dw::test;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("dw-test-" + name + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    return dir;
}

class Api : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fresh_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
        service_ = std::make_unique<Service>(SessionStore(dir_));
        service_->mount(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        ASSERT_GT(port_, 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    }

    void TearDown() override {
        server_.stop();
        thread_.join();
        std::filesystem::remove_all(dir_);
    }

    std::pair<int, Json> post(const std::string& path, const Json& body) {
        auto res = client_->Post(path, body.dump(), "application/json");
        return {res->status, Json::parse(res->body)};
    }

    std::pair<int, Json> get(const std::string& path) {
        auto res = client_->Get(path);
        return {res->status, Json::parse(res->body)};
    }

    std::filesystem::path dir_;
    std::unique_ptr<Service> service_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::unique_ptr<httplib::Client> client_;
};

}  // namespace

TEST(Store, SaveLoadList) {
    auto dir = fresh_dir("store");
    SessionStore store(dir);
    auto lib = store.load_library();
    EXPECT_EQ(lib, shipped_library());
    EXPECT_TRUE(std::filesystem::exists(dir / "schemas.json"));

    Session b = start_session({}, lib, "b");
    Session a = start_session({{"prognosis_uncertain", true}}, lib, "a");
    provide_bindings(a, shipped_fixture_bindings("prognosis"), lib);
    store.save(b);
    store.save(a);
    EXPECT_EQ(store.list(), (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(*store.load("a"), a);
    EXPECT_FALSE(store.load("zzz"));
    EXPECT_FALSE(store.load("../etc"));
    store.append_audit("a", Json{{"n", 1}});
    store.append_audit("a", Json{{"n", 2}});
    EXPECT_EQ(store.audit("a").size(), 2u);
    EXPECT_EQ(store.list(), (std::vector<std::string>{"a", "b"}));
    std::filesystem::remove_all(dir);
}

TEST_F(Api, ConsultationFlow) {
    auto [status, created] = post("/sessions", Json{{"features", {{"prognosis_uncertain", true}}}});
    ASSERT_EQ(status, 201);
    EXPECT_EQ(created["schema_id"], "prognosis");
    EXPECT_EQ(created["phase"], "FORMULATE");
    const std::string id = created["id"];
    const std::string base = "/sessions/" + id;

    auto [s1, early] = get(base + "/report");
    EXPECT_EQ(s1, 409);
    EXPECT_EQ(early["error"]["code"], "WRONG_PHASE");

    auto [s2, bound] = post(base + "/bindings", Json{{"bindings", to_json(shipped_fixture_bindings("prognosis"))}});
    ASSERT_EQ(s2, 200) << bound.dump();
    EXPECT_EQ(bound["session"]["phase"], "REFINE");
    EXPECT_NEAR(bound["report"]["expected_utility"].get<double>(), 50.0, 1e-9);
    EXPECT_EQ(bound["report"]["recommended"], "treat");

    const Json param = "S//good";
    auto [s3, w] = post(base + "/whatif", Json{{"param", param}, {"value", 0.3}});
    ASSERT_EQ(s3, 200) << w.dump();
    EXPECT_TRUE(w["changed_decision"].get<bool>());
    EXPECT_NEAR(w["trial"]["expected_utility"].get<double>(), 40.0, 1e-9);
    EXPECT_EQ(get(base).second["events"].size(), 3u);  // what-if is not an event
    EXPECT_EQ(service_->store().audit(id).size(), 1u);

    auto [s4, committed] = post(base + "/commit", Json{{"param", param}, {"value", 0.3}});
    ASSERT_EQ(s4, 200);
    EXPECT_NEAR(committed["report"]["expected_utility"].get<double>(), 40.0, 1e-9);
    EXPECT_EQ(committed["report"]["recommended"], "wait");

    auto [s5, sw] = post(base + "/sweep", Json{{"param", param}, {"grid", {0.0, 1.0}}});
    ASSERT_EQ(s5, 200);
    EXPECT_EQ(sw["points"].size(), 2u);
    auto [s6, ev] = post(base + "/evpi", Json{{"chance", "S"}, {"decision", "D"}});
    ASSERT_EQ(s6, 200);
    EXPECT_NEAR(ev["evpi"].get<double>(), 0.3 * 60, 1e-9);

    auto [s7, doc] = get("/diagrams/" + id);
    ASSERT_EQ(s7, 200);
    EXPECT_EQ(doc["version"], 1);

    auto stored = service_->store().load(id);
    ASSERT_TRUE(stored);
    EXPECT_EQ(replay_session(stored->events, service_->library()), *stored);
}

TEST_F(Api, ErrorMapping) {
    EXPECT_EQ(get("/sessions/nosuch").first, 404);
    EXPECT_EQ(get("/sessions/nosuch").second["error"]["code"], "UNKNOWN_SESSION");
    EXPECT_EQ(post("/sessions", Json{{"features", {{"bogus", true}}}}).first, 400);
    EXPECT_EQ(post("/sessions", Json{{"colour", 1}}).second["error"]["code"], "PARSE_ERROR");

    const std::string id = post("/sessions", Json::object()).second["id"];
    auto [status, body] = post("/sessions/" + id + "/bindings",
                               Json{{"bindings", {{"response_treat", {0.6, 0.6}}}}});
    EXPECT_EQ(status, 400);
    EXPECT_EQ(body["error"]["code"], "MISSING_SLOT");
    auto [s2, body2] = post("/sessions/" + id + "/bindings", Json{{"bindings",
                                                                     {{"response_treat", {0.6, 0.6}},
                                                                      {"response_wait", {0.2, 0.8}},
                                                                      {"utility", {100, 0}}}}});
    EXPECT_EQ(s2, 400);
    EXPECT_EQ(body2["error"]["code"], "INVALID_ROW");
    EXPECT_EQ(body2["error"]["node"], "O");
    EXPECT_EQ(get("/sessions/" + id).second["events"].size(), 3u);
    EXPECT_EQ(post("/sessions/" + id + "/whatif", Json{{"param", "O/treat/success"}, {"value", 0.5}}).first, 409);
    EXPECT_EQ(get("/diagrams/" + id).first, 409);
}

TEST_F(Api, SchemasAndListing) {
    auto [status, schemas] = get("/schemas");
    ASSERT_EQ(status, 200);
    ASSERT_EQ(schemas.size(), 3u);
    EXPECT_EQ(schemas[0]["slots"][1]["rows"], 2);
    EXPECT_EQ(schemas[0]["slots"][1]["kind"], "probability");

    post("/sessions", Json::object());
    post("/sessions", Json::object());
    auto [s2, list] = get("/sessions");
    ASSERT_EQ(s2, 200);
    ASSERT_EQ(list.size(), 2u);
    EXPECT_LT(list[0]["id"].get<std::string>(), list[1]["id"].get<std::string>());
}
