#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "proverbkit/chat.hpp"
#include "proverbkit/error.hpp"

namespace proverbkit {

using Json = nlohmann::json;

enum class RequestKind { kChat, kComplete, kScore, kEmbed };

std::string_view to_string(RequestKind kind);
RequestKind request_kind_from_string(std::string_view text);

struct ModelClientConfig {
  std::string endpoint;  // http://host[:port]/path
  std::string model_name;
  double temperature = 0.0;
  std::size_t max_in_flight = 4;
  std::filesystem::path cache_dir;  // empty disables caching
  int max_attempts = 3;
  std::chrono::milliseconds backoff_initial{1000};
  std::chrono::seconds timeout{120};

  void validate() const;
};

void to_json(Json& j, const ModelClientConfig& c);
/// Missing keys keep their defaults.
void from_json(const Json& j, ModelClientConfig& c);

/// Serializes JSON with sorted keys and no insignificant whitespace.
std::string canonical_json(const Json& value);

/// SHA-256 digest identifying a logical request.
struct CacheKey {
  std::string hex;

  static CacheKey compute(std::string_view endpoint, std::string_view model, RequestKind kind,
                          const Json& body);
  /// Parses `raw_body` first, so formatting differences do not change the key.
  static CacheKey from_raw(std::string_view endpoint, std::string_view model, RequestKind kind,
                           std::string_view raw_body);

  friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

std::string sha256_hex(std::string_view data);

/// Content-addressed, append-only response store. One file per key; writes go
/// through a temp file and an atomic rename.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  [[nodiscard]] std::optional<std::string> get(const CacheKey& key) const;
  /// Leaves an existing entry untouched.
  void put(const CacheKey& key, std::string_view body) const;
  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

 private:
  [[nodiscard]] std::filesystem::path path_for(const CacheKey& key) const;
  std::filesystem::path dir_;
};

struct TransportResponse {
  int status = 0;
  std::string body;
};

/// Raised by transports when no HTTP response was obtained.
class TransportFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportResponse post(const std::string& endpoint, const std::string& body) = 0;
};

/// Plain-HTTP transport (cpp-httplib).
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(std::chrono::seconds timeout = std::chrono::seconds(120))
      : timeout_(timeout) {}
  TransportResponse post(const std::string& endpoint, const std::string& body) override;

 private:
  std::chrono::seconds timeout_;
};

/// Adapts a callable; used for in-process backends and fault injection.
class CallbackTransport final : public Transport {
 public:
  using Handler = std::function<TransportResponse(const std::string& endpoint, const std::string& body)>;
  explicit CallbackTransport(Handler handler) : handler_(std::move(handler)) {}
  TransportResponse post(const std::string& endpoint, const std::string& body) override {
    return handler_(endpoint, body);
  }

 private:
  Handler handler_;
};

/// Per-call options. A non-zero attempt number is sent with the request and
/// is part of the cache key, so deliberate re-asks are not served from cache.
struct CallOptions {
  int attempt = 0;
  std::string task;  // optional tag passed in the payload
};

struct ClientStats {
  std::size_t requests = 0;
  std::size_t cache_hits = 0;
  std::size_t network_calls = 0;
};

/// Thread-safe client for every external model behind one JSON-over-HTTP
/// contract: request {kind, model, temperature, payload}, response
/// {text | score | vector}.
class ModelClient {
 public:
  explicit ModelClient(ModelClientConfig config, std::shared_ptr<Transport> transport = nullptr);

  /// Throws ValidationError unless the transcript is non-empty and ends with a user turn.
  std::string chat(std::span<const ChatTurn> transcript, const CallOptions& opts = {});
  std::string complete(std::string_view prefix, std::size_t max_tokens = 0,
                       const CallOptions& opts = {});
  /// Direct-assessment quality estimate in [0,1].
  double da_qe(std::string_view source, std::string_view target, const CallOptions& opts = {});
  /// Sentence embedding. The dimension must stay fixed for the client's lifetime.
  std::vector<double> embed(std::string_view text, const CallOptions& opts = {});

  /// Sends (or replays) a raw request and returns the parsed response body.
  Json request(RequestKind kind, Json payload, const CallOptions& opts = {});

  [[nodiscard]] const ModelClientConfig& config() const { return config_; }
  [[nodiscard]] ClientStats stats() const;
  /// Human-readable record of every attempt that failed.
  [[nodiscard]] std::vector<std::string> attempt_log() const;

  [[nodiscard]] Json build_body(RequestKind kind, Json payload, const CallOptions& opts) const;

 private:
  std::string send_with_retries(const std::string& body);

  ModelClientConfig config_;
  std::shared_ptr<Transport> transport_;
  std::optional<ResponseCache> cache_;
  std::counting_semaphore<1024> in_flight_;
  mutable std::mutex mu_;
  std::optional<std::size_t> embed_dim_;
  std::vector<std::string> attempt_log_;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> network_calls_{0};
};

}  // namespace proverbkit
