#pragma once

// Completion service abstraction with a file-backed replay client and an
// HTTP client for OpenAI-style completion endpoints.

#include <chrono>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mtc {

struct DecodingOptions {
  double temperature = 0.0;
  int max_tokens = 256;
};

struct CompletionRequest {
  std::string prompt;
  DecodingOptions decoding;
};

struct CompletionResponse {
  std::string text;
  std::string finish_reason;  // "stop", "length", ... or empty when unknown
};

class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, int attempt, const std::string& what);
  /// HTTP status, 0 for transport failures, 404 for a missing replay fixture.
  int status() const { return status_; }
  int attempt() const { return attempt_; }

 private:
  int status_;
  int attempt_;
};

/// Implementations must be safe to call from several threads at once.
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

/// Stable fixture key: lowercase hex SHA-256 of the prompt bytes.
std::string prompt_key(std::string_view prompt);

/// Serves canned responses from `<dir>/<prompt_key>.txt`; the file content
/// is returned verbatim.
class ReplayClient final : public CompletionClient {
 public:
  explicit ReplayClient(std::filesystem::path dir);
  CompletionResponse complete(const CompletionRequest& request) override;

  std::filesystem::path fixture_path(std::string_view prompt) const;
  static void write_fixture(const std::filesystem::path& dir, std::string_view prompt,
                            std::string_view response);

 private:
  std::filesystem::path dir_;
};

enum class ApiMode { Prompt, Messages };

struct HttpClientConfig {
  /// Full endpoint, e.g. https://api.openai.com/v1/completions
  std::string url;
  std::string model;
  ApiMode mode = ApiMode::Prompt;
  /// JSON pointer to the completion text; empty selects the default for
  /// the mode (/choices/0/text or /choices/0/message/content).
  std::string response_path;
  std::chrono::seconds timeout{60};
  /// Bearer token; when unset the MTC_API_KEY environment variable is used.
  std::optional<std::string> api_key;
};

class HttpClient final : public CompletionClient {
 public:
  explicit HttpClient(HttpClientConfig config);
  CompletionResponse complete(const CompletionRequest& request) override;

  /// The request body that complete() sends.
  std::string request_body(const CompletionRequest& request) const;

 private:
  HttpClientConfig config_;
  std::string origin_;
  std::string path_;
};

}  // namespace mtc
