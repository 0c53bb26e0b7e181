#include <thread>

#include "corpus.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "mtc/completion.hpp"

using namespace mtc;

TEST_CASE("prompt_key is the SHA-256 of the prompt") {
  CHECK(prompt_key("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(prompt_key("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("replay client") {
  testing::TempDir dir("rc");
  ReplayClient::write_fixture(dir.path(), "hello", "3 times day\n");
  ReplayClient client(dir.path());
  CHECK(client.fixture_path("hello").filename() == prompt_key("hello") + ".txt");
  CHECK(client.complete({"hello", {}}).text == "3 times day\n");
  CHECK(client.complete({"hello", {}}).text == client.complete({"hello", {}}).text);
  try {
    client.complete({"other", {}});
    FAIL("expected ServiceError");
  } catch (const ServiceError& e) {
    CHECK(e.status() == 404);
  }
}

TEST_CASE("http client against a local server") {
  httplib::Server server;
  nlohmann::json last_body;
  std::string last_auth;
  server.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
    last_body = nlohmann::json::parse(req.body);
    last_auth = req.get_header_value("Authorization");
    res.set_content(R"({"choices":[{"text":" 2 times day"}]})", "application/json");
  });
  server.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
    last_body = nlohmann::json::parse(req.body);
    res.set_content(R"({"choices":[{"message":{"content":"before sleep"}}]})", "application/json");
  });
  server.Post("/v1/busy", [](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
    res.set_content("busy", "text/plain");
  });
  server.Post("/v1/odd", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"nothing":1})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string base = "http://127.0.0.1:" + std::to_string(port);

  HttpClientConfig cfg;
  cfg.url = base + "/v1/completions";
  cfg.model = "test-model";
  cfg.api_key = "secret";
  HttpClient client(cfg);
  const auto resp = client.complete({"the prompt", {0.0, 64}});
  CHECK(resp.text == " 2 times day");
  CHECK(last_auth == "Bearer secret");
  CHECK(last_body["model"] == "test-model");
  CHECK(last_body["prompt"] == "the prompt");
  CHECK(last_body["temperature"] == 0.0);
  CHECK(last_body["max_tokens"] == 64);

  cfg.url = base + "/v1/chat";
  cfg.mode = ApiMode::Messages;
  CHECK(HttpClient(cfg).complete({"hi", {}}).text == "before sleep");
  CHECK(last_body["messages"][0]["content"] == "hi");
  CHECK_FALSE(last_body.contains("prompt"));

  cfg.mode = ApiMode::Prompt;
  cfg.url = base + "/v1/busy";
  try {
    HttpClient(cfg).complete({"hi", {}});
    FAIL("expected ServiceError");
  } catch (const ServiceError& e) {
    CHECK(e.status() == 503);
  }
  cfg.url = base + "/v1/odd";
  CHECK_THROWS_AS(HttpClient(cfg).complete({"hi", {}}), ServiceError);

  server.stop();
  th.join();
}
