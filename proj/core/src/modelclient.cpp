#include "proverbkit/modelclient.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "proverbkit/records.hpp"

namespace proverbkit {
namespace {

struct Url {
  std::string scheme_host_port;
  std::string path;
};

Url split_url(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("endpoint must be an http(s) URL: " + endpoint);
  const auto scheme = endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ValidationError("unsupported endpoint scheme '" + scheme + "'");
  }
  const auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

std::string excerpt(const std::string& body, std::size_t limit = 200) {
  if (body.size() <= limit) return body;
  return body.substr(0, limit) + "...";
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

Role role_from_string(std::string_view text) {
  if (text == "system") return Role::kSystem;
  if (text == "user") return Role::kUser;
  if (text == "assistant") return Role::kAssistant;
  throw DataError("unknown chat role '" + std::string(text) + "'");
}

void to_json(nlohmann::json& j, const ChatTurn& turn) {
  j = nlohmann::json{{"role", std::string(to_string(turn.role))}, {"content", turn.content}};
}

void from_json(const nlohmann::json& j, ChatTurn& turn) {
  turn.role = role_from_string(j.at("role").get<std::string>());
  turn.content = j.at("content").get<std::string>();
}

std::string_view to_string(RequestKind kind) {
  switch (kind) {
    case RequestKind::kChat: return "chat";
    case RequestKind::kComplete: return "complete";
    case RequestKind::kScore: return "score";
    case RequestKind::kEmbed: return "embed";
  }
  return "chat";
}

RequestKind request_kind_from_string(std::string_view text) {
  if (text == "chat") return RequestKind::kChat;
  if (text == "complete") return RequestKind::kComplete;
  if (text == "score") return RequestKind::kScore;
  if (text == "embed") return RequestKind::kEmbed;
  throw ProtocolError("unknown request kind '" + std::string(text) + "'");
}

void ModelClientConfig::validate() const {
  if (endpoint.empty()) throw ValidationError("model endpoint is not set");
  split_url(endpoint);
  if (temperature < 0.0) throw ValidationError("temperature must be >= 0");
  if (max_in_flight < 1 || max_in_flight > 1024) {
    throw ValidationError("max_in_flight must lie in [1, 1024]");
  }
  if (max_attempts < 1) throw ValidationError("max_attempts must be >= 1");
}

void to_json(Json& j, const ModelClientConfig& c) {
  j = Json{{"endpoint", c.endpoint},
           {"model", c.model_name},
           {"temperature", c.temperature},
           {"max_in_flight", c.max_in_flight},
           {"cache_dir", c.cache_dir.string()},
           {"max_attempts", c.max_attempts},
           {"backoff_ms", c.backoff_initial.count()},
           {"timeout_s", c.timeout.count()}};
}

void from_json(const Json& j, ModelClientConfig& c) {
  try {
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model_name = j.value("model", c.model_name);
    c.temperature = j.value("temperature", c.temperature);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.cache_dir = j.value("cache_dir", c.cache_dir.string());
    c.max_attempts = j.value("max_attempts", c.max_attempts);
    c.backoff_initial = std::chrono::milliseconds(j.value("backoff_ms", c.backoff_initial.count()));
    c.timeout = std::chrono::seconds(j.value("timeout_s", c.timeout.count()));
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("bad model config: ") + e.what());
  }
}

std::string canonical_json(const Json& value) {
  // nlohmann::json keeps object keys sorted, so a compact dump is canonical.
  return value.dump(-1, ' ', false, Json::error_handler_t::strict);
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0F]);
  }
  return out;
}

CacheKey CacheKey::compute(std::string_view endpoint, std::string_view model, RequestKind kind,
                           const Json& body) {
  const Json keyed{{"endpoint", endpoint},
                   {"model", model},
                   {"kind", std::string(to_string(kind))},
                   {"body", body}};
  return {sha256_hex(canonical_json(keyed))};
}

CacheKey CacheKey::from_raw(std::string_view endpoint, std::string_view model, RequestKind kind,
                            std::string_view raw_body) {
  try {
    return compute(endpoint, model, kind, Json::parse(raw_body));
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("request body is not JSON: ") + e.what());
  }
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::path_for(const CacheKey& key) const {
  return dir_ / key.hex.substr(0, 2) / (key.hex + ".json");
}

std::optional<std::string> ResponseCache::get(const CacheKey& key) const {
  const auto p = path_for(key);
  if (!std::filesystem::exists(p)) return std::nullopt;
  return records::read_file(p);
}

void ResponseCache::put(const CacheKey& key, std::string_view body) const {
  const auto p = path_for(key);
  if (std::filesystem::exists(p)) return;
  records::write_file_atomic(p, std::string(body));
}

TransportResponse HttpTransport::post(const std::string& endpoint, const std::string& body) {
  const Url url = split_url(endpoint);
  httplib::Client client(url.scheme_host_port);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  auto res = client.Post(url.path, body, "application/json");
  if (!res) throw TransportFailure("HTTP request failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

ModelClient::ModelClient(ModelClientConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_in_flight, 1, 1024))) {
  config_.validate();
  if (!transport_) transport_ = std::make_shared<HttpTransport>(config_.timeout);
  if (!config_.cache_dir.empty()) cache_.emplace(config_.cache_dir);
}

ClientStats ModelClient::stats() const {
  return {requests_.load(), cache_hits_.load(), network_calls_.load()};
}

std::vector<std::string> ModelClient::attempt_log() const {
  std::lock_guard lock(mu_);
  return attempt_log_;
}

Json ModelClient::build_body(RequestKind kind, Json payload, const CallOptions& opts) const {
  if (!opts.task.empty()) payload["task"] = opts.task;
  Json body{{"kind", std::string(to_string(kind))},
            {"model", config_.model_name},
            {"temperature", config_.temperature},
            {"payload", std::move(payload)}};
  if (opts.attempt > 0) body["attempt"] = opts.attempt;
  return body;
}

std::string ModelClient::send_with_retries(const std::string& body) {
  struct SlotGuard {
    std::counting_semaphore<1024>& sem;
    explicit SlotGuard(std::counting_semaphore<1024>& s) : sem(s) { sem.acquire(); }
    ~SlotGuard() { sem.release(); }
  };
  std::vector<std::string> failures;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(config_.backoff_initial * (1LL << (attempt - 2)));
    std::string failure;
    try {
      TransportResponse res;
      {
        SlotGuard slot(in_flight_);
        network_calls_++;
        res = transport_->post(config_.endpoint, body);
      }
      if (res.status >= 200 && res.status < 300) return res.body;
      failure = "HTTP " + std::to_string(res.status) + ": " + excerpt(res.body);
      if (res.status >= 400 && res.status < 500) {
        throw ModelError(config_.endpoint + " rejected the request (" + failure + ")");
      }
    } catch (const TransportFailure& e) {
      failure = e.what();
    }
    failures.push_back("attempt " + std::to_string(attempt) + ": " + failure);
    spdlog::warn("model request attempt {}/{} failed: {}", attempt, config_.max_attempts, failure);
  }
  std::string log;
  for (const auto& line : failures) log += "\n  " + line;
  {
    std::lock_guard lock(mu_);
    attempt_log_.insert(attempt_log_.end(), failures.begin(), failures.end());
  }
  throw ModelError(config_.endpoint + " failed after " + std::to_string(config_.max_attempts) +
                   " attempts:" + log);
}

Json ModelClient::request(RequestKind kind, Json payload, const CallOptions& opts) {
  requests_++;
  const Json body = build_body(kind, std::move(payload), opts);
  const CacheKey key = CacheKey::compute(config_.endpoint, config_.model_name, kind, body);
  std::string raw;
  if (cache_) {
    if (auto hit = cache_->get(key)) {
      cache_hits_++;
      raw = std::move(*hit);
    }
  }
  const bool from_cache = !raw.empty();
  if (!from_cache) raw = send_with_retries(canonical_json(body));
  Json parsed;
  try {
    parsed = Json::parse(raw);
  } catch (const Json::parse_error&) {
    throw ProtocolError("model response is not JSON: " + excerpt(raw));
  }
  if (!parsed.is_object()) throw ProtocolError("model response is not a JSON object");
  if (cache_ && !from_cache) cache_->put(key, raw);
  return parsed;
}

std::string ModelClient::chat(std::span<const ChatTurn> transcript, const CallOptions& opts) {
  if (transcript.empty()) throw ValidationError("chat transcript is empty");
  if (transcript.back().role != Role::kUser) {
    throw ValidationError("chat transcript must end with a user turn");
  }
  Json messages = Json::array();
  for (const auto& turn : transcript) messages.push_back(turn);
  const Json res = request(RequestKind::kChat, Json{{"messages", std::move(messages)}}, opts);
  if (!res.contains("text") || !res["text"].is_string()) {
    throw ProtocolError("chat response lacks a 'text' string");
  }
  return res["text"].get<std::string>();
}

std::string ModelClient::complete(std::string_view prefix, std::size_t max_tokens,
                                  const CallOptions& opts) {
  Json payload{{"prompt", prefix}};
  if (max_tokens > 0) payload["max_tokens"] = max_tokens;
  const Json res = request(RequestKind::kComplete, std::move(payload), opts);
  if (!res.contains("text") || !res["text"].is_string()) {
    throw ProtocolError("completion response lacks a 'text' string");
  }
  return res["text"].get<std::string>();
}

double ModelClient::da_qe(std::string_view source, std::string_view target, const CallOptions& opts) {
  const Json res =
      request(RequestKind::kScore, Json{{"source", source}, {"target", target}}, opts);
  if (!res.contains("score") || !res["score"].is_number()) {
    throw ProtocolError("score response lacks a numeric 'score'");
  }
  const double score = res["score"].get<double>();
  if (!(score >= 0.0 && score <= 1.0)) {
    throw ProtocolError("DA-QE score " + std::to_string(score) + " is outside [0,1]");
  }
  return score;
}

std::vector<double> ModelClient::embed(std::string_view text, const CallOptions& opts) {
  const Json res = request(RequestKind::kEmbed, Json{{"text", text}}, opts);
  if (!res.contains("vector") || !res["vector"].is_array()) {
    throw ProtocolError("embed response lacks a 'vector' array");
  }
  std::vector<double> vec;
  try {
    vec = res["vector"].get<std::vector<double>>();
  } catch (const Json::exception&) {
    throw ProtocolError("embed response vector is not numeric");
  }
  if (vec.empty()) throw ProtocolError("embed response vector is empty");
  std::lock_guard lock(mu_);
  if (!embed_dim_) {
    embed_dim_ = vec.size();
  } else if (*embed_dim_ != vec.size()) {
    throw ModelError("embedding dimension changed from " + std::to_string(*embed_dim_) + " to " +
                     std::to_string(vec.size()));
  }
  return vec;
}

}  // namespace proverbkit
