#include "mtc/completion.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"

namespace mtc {

ServiceError::ServiceError(int status, int attempt, const std::string& what)
    : std::runtime_error(what), status_(status), attempt_(attempt) {}

std::string prompt_key(std::string_view prompt) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_Digest(prompt.data(), prompt.size(), digest.data(), &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

// ---------------------------------------------------------------------------

ReplayClient::ReplayClient(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!std::filesystem::is_directory(dir_))
    throw std::runtime_error("replay fixture directory not found: " + dir_.string());
}

std::filesystem::path ReplayClient::fixture_path(std::string_view prompt) const {
  return dir_ / (prompt_key(prompt) + ".txt");
}

CompletionResponse ReplayClient::complete(const CompletionRequest& request) {
  const auto path = fixture_path(request.prompt);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ServiceError(404, 1, "no replay fixture " + path.filename().string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return {ss.str(), "stop"};
}

void ReplayClient::write_fixture(const std::filesystem::path& dir, std::string_view prompt,
                                 std::string_view response) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / (prompt_key(prompt) + ".txt"), std::ios::binary);
  out.write(response.data(), static_cast<std::streamsize>(response.size()));
  if (!out) throw std::runtime_error("cannot write replay fixture in " + dir.string());
}

// ---------------------------------------------------------------------------

HttpClient::HttpClient(HttpClientConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("completion URL needs a scheme");
  const auto path_start = config_.url.find('/', scheme_end + 3);
  origin_ = config_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.url.substr(path_start);
  if (config_.response_path.empty())
    config_.response_path =
        config_.mode == ApiMode::Prompt ? "/choices/0/text" : "/choices/0/message/content";
  if (!config_.api_key) {
    if (const char* env = std::getenv("MTC_API_KEY")) config_.api_key = env;
  }
}

std::string HttpClient::request_body(const CompletionRequest& request) const {
  nlohmann::ordered_json body;
  body["model"] = config_.model;
  if (config_.mode == ApiMode::Prompt)
    body["prompt"] = request.prompt;
  else
    body["messages"] = nlohmann::ordered_json::array(
        {{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = request.decoding.temperature;
  body["max_tokens"] = request.decoding.max_tokens;
  return body.dump();
}

CompletionResponse HttpClient::complete(const CompletionRequest& request) {
  httplib::Client client(origin_);
  const auto timeout = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count();
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (config_.api_key && !config_.api_key->empty())
    headers.emplace("Authorization", "Bearer " + *config_.api_key);

  auto res = client.Post(path_, headers, request_body(request), "application/json");
  if (!res) throw ServiceError(0, 1, "completion request failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw ServiceError(res->status, 1, "completion service returned HTTP " + std::to_string(res->status));

  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error&) {
    throw ServiceError(res->status, 1, "completion response is not JSON");
  }
  const nlohmann::json::json_pointer text_ptr(config_.response_path);
  if (!body.contains(text_ptr) || !body.at(text_ptr).is_string())
    throw ServiceError(res->status, 1, "completion response has no text at " + config_.response_path);

  CompletionResponse out;
  out.text = body.at(text_ptr).get<std::string>();
  const nlohmann::json::json_pointer finish_ptr("/choices/0/finish_reason");
  if (body.contains(finish_ptr) && body.at(finish_ptr).is_string())
    out.finish_reason = body.at(finish_ptr).get<std::string>();
  return out;
}

}  // namespace mtc
