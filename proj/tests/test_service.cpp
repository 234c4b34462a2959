#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <set>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "stepcredit/fixtures.hpp"
#include "stepcredit/service.hpp"
#include "test_support.hpp"

using namespace stepcredit;
using test_support::TempDir;

namespace {

struct ServiceFixture {
  TempDir dir{"service"};
  ToolService service;

  ServiceFixture() : service(make_config(dir)) { REQUIRE(service.start()); }
  ~ServiceFixture() { service.stop(); }

  static ServiceConfig make_config(const TempDir& dir) {
    stepcredit::fixtures::write_registry(dir.path());
    ServiceConfig config;
    config.port = 0;
    config.registry_path = dir.path();
    config.feedback_cap = 512;
    return config;
  }

  httplib::Client client() const { return httplib::Client("127.0.0.1", service.port()); }

  static nlohmann::json request_body(const std::string& sql, const std::string& database_id) {
    return {{"name", "sql_executor"}, {"arguments", {{"sql", sql}}}, {"database_id", database_id}};
  }
};

}  // namespace

TEST_CASE("health lists the registered databases") {
  ServiceFixture fx;
  auto client = fx.client();
  auto res = client.Get("/health");
  REQUIRE(res);
  CHECK(res->status == 200);
  auto body = nlohmann::json::parse(res->body);
  CHECK(body.at("status") == "ok");
  auto dbs = body.at("registered_databases").get<std::vector<std::string>>();
  CHECK(dbs == std::vector<std::string>{"people", "school_scores"});
}

TEST_CASE("execute round trips a valid select") {
  ServiceFixture fx;
  auto client = fx.client();
  auto res = client.Post("/execute",
                         ServiceFixture::request_body("SELECT name FROM people ORDER BY id",
                                                      "people").dump(),
                         "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  auto body = nlohmann::json::parse(res->body);
  CHECK(body.at("ok") == true);
  CHECK(body.at("elapsed_ms").get<long long>() >= 0);
  const std::string feedback = body.at("feedback").get<std::string>();
  CHECK(feedback.find("Alice") != std::string::npos);
  CHECK(feedback.find("(3 rows)") != std::string::npos);
  CHECK(feedback.size() <= 512);
}

TEST_CASE("writes come back as read-only violations, not transport errors") {
  ServiceFixture fx;
  auto client = fx.client();
  auto res = client.Post("/execute", ServiceFixture::request_body("DROP TABLE people", "people").dump(),
                         "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  auto body = nlohmann::json::parse(res->body);
  CHECK(body.at("ok") == false);
  CHECK(body.at("feedback").get<std::string>().find("Error:") == 0);
  CHECK(body.at("feedback").get<std::string>().find("read-only") != std::string::npos);
}

TEST_CASE("unknown database is a 404") {
  ServiceFixture fx;
  auto client = fx.client();
  auto res = client.Post("/execute", ServiceFixture::request_body("SELECT 1", "absent").dump(),
                         "application/json");
  REQUIRE(res);
  CHECK(res->status == 404);
}

TEST_CASE("schema-invalid bodies are a 400") {
  ServiceFixture fx;
  auto client = fx.client();
  for (const std::string body :
       {std::string("{not json"), nlohmann::json{{"name", "other"}}.dump(),
        nlohmann::json{{"name", "sql_executor"}, {"database_id", "people"}}.dump(),
        nlohmann::json{{"name", "sql_executor"},
                       {"arguments", {{"sql", ""}}},
                       {"database_id", "people"}}
            .dump()}) {
    auto res = client.Post("/execute", body, "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
  }
}

TEST_CASE("identical requests produce identical bodies modulo timing") {
  ServiceFixture fx;
  auto client = fx.client();
  const std::string body =
      ServiceFixture::request_body("SELECT name, age FROM people ORDER BY id", "people").dump();
  auto strip_elapsed = [](const std::string& text) {
    auto j = nlohmann::json::parse(text);
    j.erase("elapsed_ms");
    return j.dump();
  };
  auto first = client.Post("/execute", body, "application/json");
  auto second = client.Post("/execute", body, "application/json");
  REQUIRE(first);
  REQUIRE(second);
  CHECK(strip_elapsed(first->body) == strip_elapsed(second->body));
}

TEST_CASE("concurrent identical requests never interleave feedback") {
  ServiceFixture fx;
  const std::string body =
      ServiceFixture::request_body("SELECT name, age FROM people ORDER BY id", "people").dump();

  std::string expected_feedback;
  {
    auto client = fx.client();
    auto res = client.Post("/execute", body, "application/json");
    REQUIRE(res);
    expected_feedback = nlohmann::json::parse(res->body).at("feedback").get<std::string>();
  }

  constexpr int kThreads = 16;
  std::vector<std::string> feedbacks(kThreads);
  std::vector<std::thread> threads;
  for (int i = 0; i < kThreads; ++i) {
    threads.emplace_back([&, i] {
      httplib::Client client("127.0.0.1", fx.service.port());
      auto res = client.Post("/execute", body, "application/json");
      if (res && res->status == 200) {
        feedbacks[static_cast<std::size_t>(i)] =
            nlohmann::json::parse(res->body).at("feedback").get<std::string>();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& feedback : feedbacks) CHECK(feedback == expected_feedback);
}

TEST_CASE("reload picks up a hot-added database") {
  TempDir dir{"reload"};
  stepcredit::fixtures::write_registry(dir.path());
  ServiceConfig config;
  config.port = 0;
  config.registry_path = dir.path();
  ToolService service(config);
  REQUIRE(service.start());

  httplib::Client client("127.0.0.1", service.port());
  auto before = nlohmann::json::parse(client.Get("/health")->body);
  CHECK(before.at("registered_databases").size() == 2);

  // add a third database and extend the manifest
  stepcredit::fixtures::write_people_db(dir.path() / "extra.sqlite");
  {
    std::ifstream in(dir.path() / "manifest.json");
    nlohmann::json manifest = nlohmann::json::parse(in);
    in.close();
    manifest.push_back({{"database_id", "extra"},
                        {"path", "extra.sqlite"},
                        {"description", "hot-added copy of people"}});
    std::ofstream out(dir.path() / "manifest.json");
    out << manifest.dump(2) << "\n";
  }
  service.reload_registry();

  auto after = nlohmann::json::parse(client.Get("/health")->body);
  CHECK(after.at("registered_databases").size() == 3);
  auto res = client.Post("/execute", ServiceFixture::request_body("SELECT 1", "extra").dump(),
                         "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  service.stop();
}
