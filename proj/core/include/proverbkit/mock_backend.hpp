#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "proverbkit/modelclient.hpp"

namespace proverbkit {

enum class JudgePolicy { kMetric, kAlwaysA, kAlwaysB, kAlwaysTie };

/// Behaviour of the deterministic stand-in model.
///
/// Chat requests are dispatched on the payload's "task" tag:
///   usage  - "Yes" iff every word of the "Proverb:" line occurs in the "Sentence:" line
///   qe     - 1 + round(4 * length ratio of the "Source text:" and "Translation:" lines)
///   judge  - the translation with higher chrF++ against "Reference:" (or a fixed policy)
///   other  - translation: the remembered target of the last user turn, lightly perturbed
/// Completions continue a remembered sentence; the continuation is full only
/// when the prompt carries context. Scores and embeddings derive from the text.
/// A fixture whose key equals the request's CacheKey (computed with
/// `endpoint_label`) overrides all of the above.
struct MockBackendOptions {
  std::string endpoint_label = "mock";
  std::map<std::string, Json> fixtures;
  std::map<std::string, std::string> memory;  // source sentence -> target sentence
  std::size_t embed_dim = 64;
  JudgePolicy judge_policy = JudgePolicy::kMetric;

  void add_memory(const std::filesystem::path& bitext);
  /// JSONL of {"key": <hex>, "response": {...}}.
  void add_fixtures(const std::filesystem::path& path);
  /// JSON document: {endpoint_label, embed_dim, judge_policy, memory: [paths], fixtures: [paths]}.
  /// Relative paths resolve against the document's directory.
  static MockBackendOptions from_file(const std::filesystem::path& path);
};

class MockBackend {
 public:
  explicit MockBackend(MockBackendOptions options);

  TransportResponse handle(const std::string& body) const;
  /// In-process transport bound to this backend.
  std::shared_ptr<Transport> as_transport() const;

  [[nodiscard]] const MockBackendOptions& options() const { return *options_; }

 private:
  Json dispatch(const Json& request) const;
  Json chat(const Json& payload, const std::string& model) const;
  Json complete(const Json& payload) const;
  Json score(const Json& payload) const;
  Json embed(const Json& payload) const;

  std::shared_ptr<const MockBackendOptions> options_;
  std::vector<std::string> sentences_;  // every remembered sentence, sorted
};

/// Serves a MockBackend over HTTP on 127.0.0.1. Stops on destruction.
class MockHttpServer {
 public:
  explicit MockHttpServer(MockBackend backend, int port = 0);
  ~MockHttpServer();
  MockHttpServer(const MockHttpServer&) = delete;
  MockHttpServer& operator=(const MockHttpServer&) = delete;

  [[nodiscard]] int port() const;
  [[nodiscard]] std::string endpoint() const;
  /// Blocks until stop() is called from another thread.
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// FNV-1a, used for deterministic mock decisions.
std::uint64_t fnv1a(std::string_view text);

}  // namespace proverbkit
