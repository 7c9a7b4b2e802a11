#include "proverbkit/mock_backend.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "proverbkit/error.hpp"
#include "proverbkit/metrics.hpp"
#include "proverbkit/records.hpp"
#include "proverbkit/textnorm.hpp"
#include "proverbkit/utf8.hpp"

namespace proverbkit {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

/// Lowercased whitespace tokens with punctuation removed; empty tokens dropped.
std::vector<std::string> plain_words(std::string_view text) {
  std::vector<std::string> out;
  const auto tokenized = tokenize(text, TokenScheme::kWhitespace);
  for (const auto& tok : tokenized.tokens()) {
    std::u32string kept;
    for (char32_t cp : utf8::decode(utf8::to_lower(tok))) {
      if (!utf8::is_punct(cp) && !utf8::is_symbol(cp)) kept.push_back(cp);
    }
    if (!kept.empty()) out.push_back(utf8::encode(kept));
  }
  return out;
}

bool has_wide_chars(std::string_view word) {
  for (char32_t cp : utf8::decode(word)) {
    if (cp >= 0x2E80) return true;
  }
  return false;
}

/// Value of the first line starting with `label` in any message.
std::string field(const Json& messages, std::string_view label) {
  for (const auto& m : messages) {
    const std::string content = m.value("content", "");
    std::size_t start = 0;
    while (start <= content.size()) {
      std::size_t end = content.find('\n', start);
      if (end == std::string::npos) end = content.size();
      std::string_view line(content.data() + start, end - start);
      if (line.substr(0, label.size()) == label) return utf8::trim(line.substr(label.size()));
      start = end + 1;
    }
  }
  return {};
}

double length_ratio(std::string_view a, std::string_view b) {
  const double la = static_cast<double>(utf8::length(utf8::trim(a)));
  const double lb = static_cast<double>(utf8::length(utf8::trim(b)));
  if (la == 0.0 && lb == 0.0) return 1.0;
  return std::min(la, lb) / std::max(la, lb);
}

std::string join_words(const std::vector<std::string>& words, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to && i < words.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += words[i];
  }
  return out;
}

JudgePolicy judge_policy_from_string(std::string_view text) {
  if (text == "metric") return JudgePolicy::kMetric;
  if (text == "always_a") return JudgePolicy::kAlwaysA;
  if (text == "always_b") return JudgePolicy::kAlwaysB;
  if (text == "always_tie") return JudgePolicy::kAlwaysTie;
  throw ValidationError("unknown judge policy '" + std::string(text) + "'");
}

struct BadRequest : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace

void MockBackendOptions::add_memory(const std::filesystem::path& bitext) {
  for (const auto& pair : load_bitext(bitext).pairs()) memory.emplace(pair.source, pair.target);
}

void MockBackendOptions::add_fixtures(const std::filesystem::path& path) {
  records::for_each_line(path, [&](std::size_t, const Json& row) {
    if (!row.contains("key") || !row["key"].is_string() || !row.contains("response") ||
        !row["response"].is_object()) {
      throw DataError("fixture rows need a 'key' string and a 'response' object");
    }
    fixtures[row["key"].get<std::string>()] = row["response"];
  });
}

MockBackendOptions MockBackendOptions::from_file(const std::filesystem::path& path) {
  const Json doc = records::read_document(path);
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  MockBackendOptions opts;
  try {
    opts.endpoint_label = doc.value("endpoint_label", opts.endpoint_label);
    opts.embed_dim = doc.value("embed_dim", opts.embed_dim);
    opts.judge_policy = judge_policy_from_string(doc.value("judge_policy", std::string("metric")));
    for (const auto& p : doc.value("memory", std::vector<std::string>{})) opts.add_memory(resolve(p));
    for (const auto& p : doc.value("fixtures", std::vector<std::string>{})) {
      opts.add_fixtures(resolve(p));
    }
  } catch (const Json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (opts.embed_dim == 0) throw ValidationError("mock embed_dim must be positive");
  return opts;
}

MockBackend::MockBackend(MockBackendOptions options)
    : options_(std::make_shared<const MockBackendOptions>(std::move(options))) {
  std::set<std::string> all;
  for (const auto& [src, tgt] : options_->memory) {
    all.insert(src);
    all.insert(tgt);
  }
  sentences_.assign(all.begin(), all.end());
}

TransportResponse MockBackend::handle(const std::string& body) const {
  Json request;
  try {
    request = Json::parse(body);
  } catch (const Json::parse_error& e) {
    return {400, Json{{"error", std::string("invalid JSON: ") + e.what()}}.dump()};
  }
  try {
    return {200, canonical_json(dispatch(request))};
  } catch (const BadRequest& e) {
    return {400, Json{{"error", e.what()}}.dump()};
  } catch (const Json::exception& e) {
    return {400, Json{{"error", e.what()}}.dump()};
  } catch (const std::exception& e) {
    return {500, Json{{"error", e.what()}}.dump()};
  }
}

std::shared_ptr<Transport> MockBackend::as_transport() const {
  auto self = *this;
  return std::make_shared<CallbackTransport>(
      [self](const std::string&, const std::string& body) { return self.handle(body); });
}

Json MockBackend::dispatch(const Json& request) const {
  if (!request.is_object() || !request.contains("kind") || !request.contains("payload")) {
    throw BadRequest("request needs 'kind' and 'payload'");
  }
  RequestKind kind;
  try {
    kind = request_kind_from_string(request["kind"].get<std::string>());
  } catch (const Error& e) {
    throw BadRequest(e.what());
  }
  const std::string model = request.value("model", "");
  const CacheKey key = CacheKey::compute(options_->endpoint_label, model, kind, request);
  if (auto it = options_->fixtures.find(key.hex); it != options_->fixtures.end()) {
    return it->second;
  }
  const Json& payload = request["payload"];
  switch (kind) {
    case RequestKind::kChat: return chat(payload, model);
    case RequestKind::kComplete: return complete(payload);
    case RequestKind::kScore: return score(payload);
    case RequestKind::kEmbed: return embed(payload);
  }
  throw BadRequest("unsupported kind");
}

Json MockBackend::chat(const Json& payload, const std::string& model) const {
  const Json& messages = payload.at("messages");
  if (!messages.is_array() || messages.empty()) throw BadRequest("empty messages");
  const std::string task = payload.value("task", "");

  if (task == "usage") {
    const auto proverb = plain_words(field(messages, "Proverb:"));
    const auto sentence_text = field(messages, "Sentence:");
    const auto words = plain_words(sentence_text);
    const std::set<std::string> vocab(words.begin(), words.end());
    std::string squashed;
    for (const auto& w : words) squashed += w;
    const bool used = !proverb.empty() && std::all_of(proverb.begin(), proverb.end(), [&](const auto& w) {
      return vocab.count(w) > 0 || (has_wide_chars(w) && squashed.find(w) != std::string::npos);
    });
    return Json{{"text", used ? "Yes" : "No"}};
  }

  if (task == "qe") {
    const double r = length_ratio(field(messages, "Source text:"), field(messages, "Translation:"));
    return Json{{"text", std::to_string(1 + static_cast<int>(std::lround(4.0 * r)))}};
  }

  if (task == "judge") {
    switch (options_->judge_policy) {
      case JudgePolicy::kAlwaysA: return Json{{"text", "A"}};
      case JudgePolicy::kAlwaysB: return Json{{"text", "B"}};
      case JudgePolicy::kAlwaysTie: return Json{{"text", "tie"}};
      case JudgePolicy::kMetric: break;
    }
    const std::string ref = field(messages, "Reference:");
    const std::string a = field(messages, "Translation A:");
    const std::string b = field(messages, "Translation B:");
    const double sa = ref.empty() || a.empty() ? 0.0 : chrf_pp(a, ref).value;
    const double sb = ref.empty() || b.empty() ? 0.0 : chrf_pp(b, ref).value;
    const char* verdict = std::abs(sa - sb) <= 1.0 ? "tie" : (sa > sb ? "A" : "B");
    return Json{{"text", verdict}};
  }

  // Translation: recall the remembered target and perturb it per prompt.
  const std::string source = messages.back().value("content", "");
  auto it = options_->memory.find(source);
  if (it == options_->memory.end()) return Json{{"text", source}};
  const std::uint64_t h = fnv1a(model + "\n" + canonical_json(messages));
  const auto words = tokenize(it->second, TokenScheme::kWhitespace).tokens();
  if (h % 3 == 0 || words.size() < 2) return Json{{"text", it->second}};
  const std::size_t drop = (h / 3) % words.size();
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i != drop) kept.push_back(words[i]);
  }
  return Json{{"text", join_words(kept, 0, kept.size())}};
}

Json MockBackend::complete(const Json& payload) const {
  const std::string prompt = payload.at("prompt").get<std::string>();
  const std::size_t nl = prompt.rfind('\n');
  const std::string prefix = utf8::trim(nl == std::string::npos ? prompt : prompt.substr(nl + 1));
  const bool has_context = nl != std::string::npos && !utf8::trim(prompt.substr(0, nl)).empty();
  if (prefix.empty()) return Json{{"text", ""}};

  std::string rest;
  for (const auto& s : sentences_) {
    if (s.size() > prefix.size() && s.compare(0, prefix.size(), prefix) == 0) {
      rest = utf8::trim(std::string_view(s).substr(prefix.size()));
      break;
    }
  }
  auto words = tokenize(rest, TokenScheme::kWhitespace).tokens();
  std::size_t take = has_context ? words.size() : words.size() / 2;
  if (payload.contains("max_tokens")) {
    take = std::min<std::size_t>(take, payload["max_tokens"].get<std::size_t>());
  }
  return Json{{"text", join_words(words, 0, take)}};
}

Json MockBackend::score(const Json& payload) const {
  const double r = length_ratio(payload.at("source").get<std::string>(),
                                payload.at("target").get<std::string>());
  return Json{{"score", std::round((0.3 + 0.7 * r) * 1e4) / 1e4}};
}

Json MockBackend::embed(const Json& payload) const {
  const std::size_t dim = options_->embed_dim;
  std::vector<double> v(dim, 0.0);
  for (const auto& w : plain_words(payload.at("text").get<std::string>())) {
    const std::uint64_t h = fnv1a(w);
    v[h % dim] += (h >> 63) ? -1.0 : 1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm == 0.0) {
    v[0] = 1.0;
  } else {
    norm = std::sqrt(norm);
    for (double& x : v) x = std::round(x / norm * 1e6) / 1e6;
  }
  return Json{{"vector", v}};
}

struct MockHttpServer::Impl {
  MockBackend backend;
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit Impl(MockBackend b) : backend(std::move(b)) {}
};

MockHttpServer::MockHttpServer(MockBackend backend, int port)
    : impl_(std::make_unique<Impl>(std::move(backend))) {
  impl_->server.Post(".*", [this](const httplib::Request& req, httplib::Response& res) {
    const TransportResponse out = impl_->backend.handle(req.body);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  });
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
  } else if (impl_->server.bind_to_port("127.0.0.1", port)) {
    impl_->port = port;
  } else {
    impl_->port = -1;
  }
  if (impl_->port <= 0) throw ModelError("mock server could not bind a port");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  spdlog::debug("mock model server listening on {}", endpoint());
}

MockHttpServer::~MockHttpServer() {
  stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int MockHttpServer::port() const { return impl_->port; }

std::string MockHttpServer::endpoint() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port) + "/v1/model";
}

void MockHttpServer::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

void MockHttpServer::stop() { impl_->server.stop(); }

}  // namespace proverbkit
