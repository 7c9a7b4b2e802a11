#include "proverbkit/stages.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "proverbkit/concurrency.hpp"
#include "proverbkit/error.hpp"
#include "proverbkit/judge.hpp"
#include "proverbkit/metrics.hpp"
#include "proverbkit/mock_backend.hpp"
#include "proverbkit/records.hpp"
#include "proverbkit/report.hpp"
#include "proverbkit/utf8.hpp"

namespace proverbkit {

using nlohmann::json;

namespace {

std::string item_key(const SentencePair& p) {
  return p.src_lang + "-" + p.tgt_lang + "/" + records::pair_key(p);
}

std::map<Direction, Corpus> load_corpora(const std::vector<fs::path>& files) {
  std::map<Direction, std::vector<SentencePair>> grouped;
  for (const auto& f : files) {
    for (auto& p : load_bitext(f).pairs()) {
      Direction d{p.src_lang, p.tgt_lang};
      grouped[d].push_back(std::move(p));
    }
  }
  std::map<Direction, Corpus> out;
  for (auto& [d, pairs] : grouped) out.emplace(d, Corpus(std::move(pairs)));
  return out;
}

std::string join_sources(const std::vector<SentencePair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    if (utf8::trim(p.source).empty()) continue;
    if (!out.empty()) out += '\n';
    out += p.source;
  }
  return out;
}

void require_file(const fs::path& p, std::string_view what) {
  if (!fs::is_regular_file(p)) {
    throw ValidationError(std::string(what) + " not found: " + p.string());
  }
}

}  // namespace

fs::path write_stage_manifest(const StageResult& result, const std::string& command,
                              const json& config, const std::string& started_at) {
  if (result.outputs.empty()) throw ValidationError("stage produced no outputs");
  RunManifest m;
  m.command = command;
  m.config_digest = sha256_hex(canonical_json(config));
  m.tool_version = tool_version();
  m.seeds = result.seeds;
  m.parameters = default_parameters();
  m.parameters.merge_patch(result.parameters);
  for (const auto& p : result.inputs) {
    if (fs::is_regular_file(p)) m.inputs.push_back(digest_file(p));
  }
  for (const auto& p : result.outputs) m.outputs.push_back(digest_file(p));
  m.started_at = started_at;
  m.finished_at = utc_timestamp();
  const fs::path path = manifest_path_for(result.outputs.front());
  write_manifest(m, path);
  return path;
}

ModelClientConfig apply_env_overrides(ModelClientConfig config) {
  if (const char* e = std::getenv("PROVERBKIT_ENDPOINT"); e && *e) config.endpoint = e;
  if (const char* c = std::getenv("PROVERBKIT_CACHE_DIR"); c && *c) config.cache_dir = c;
  return config;
}

ModelClientConfig model_config_for(const json& config, std::string_view role) {
  ModelClientConfig c;
  try {
    if (config.contains("model")) from_json(config.at("model"), c);
    const std::string key(role);
    if (config.contains("models") && config["models"].contains(key) && config["models"][key].is_object()) {
      from_json(config["models"][key], c);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad model section: ") + e.what());
  }
  c = apply_env_overrides(c);
  c.validate();
  return c;
}

std::vector<ModelClientConfig> translator_configs(const json& config) {
  std::vector<ModelClientConfig> out;
  if (config.contains("models") && config["models"].contains("translate") &&
      config["models"]["translate"].is_array()) {
    for (const auto& m : config["models"]["translate"]) {
      ModelClientConfig c;
      if (config.contains("model")) from_json(config["model"], c);
      from_json(m, c);
      c = apply_env_overrides(c);
      c.validate();
      out.push_back(c);
    }
  }
  if (out.empty()) out.push_back(model_config_for(config, "translate"));
  return out;
}

std::unique_ptr<ModelClient> make_client(const ModelClientConfig& config,
                                         std::shared_ptr<Transport> transport) {
  return std::make_unique<ModelClient>(config, std::move(transport));
}

// --- mine ------------------------------------------------------------------

StageResult run_mine_stage(const MineArgs& args) {
  MiningConfig config = args.config;
  if (args.lemma_table) {
    config.lemmatizer = std::make_shared<RuleTableLemmatizer>(
        RuleTableLemmatizer::from_file(*args.lemma_table, default_languages()));
  }
  config.validate();
  const auto proverbs = load_proverbs(args.proverbs);
  const auto corpora = load_corpora({args.bitext});

  std::vector<MinedCandidate> all;
  StageResult r;
  r.stage = "mine";
  for (const auto& [dir, corpus] : corpora) {
    std::vector<ProverbEntry> matching;
    std::copy_if(proverbs.begin(), proverbs.end(), std::back_inserter(matching),
                 [&](const ProverbEntry& p) { return p.language == dir.src; });
    if (matching.empty()) spdlog::warn("no '{}' proverbs for direction {}", dir.src, dir.label());
    auto found = mine(corpus, matching, config);
    spdlog::info("mine {}: {} sentence pairs, {} proverbs, {} candidates", dir.label(),
                 corpus.size(), matching.size(), found.size());
    r.stats[dir.label()] = found.size();
    all.insert(all.end(), found.begin(), found.end());
  }
  records::write_as(args.out, all);
  r.parameters = {{"mining_threshold", config.threshold},
                  {"token_scheme", to_string(config.scheme)},
                  {"lemmatizer", config.lemmatizer->name()}};
  r.inputs = {args.bitext, args.proverbs};
  if (args.lemma_table) r.inputs.push_back(*args.lemma_table);
  r.outputs = {args.out};
  return r;
}

// --- filter ----------------------------------------------------------------

StageResult run_filter_stage(const FilterArgs& args) {
  args.config.validate();
  const auto candidates = records::read_as<MinedCandidate>(args.candidates);
  const auto proverbs = load_proverbs(args.proverbs);
  const FilterPrompts prompts = args.prompts ? FilterPrompts::from_file(*args.prompts)
                                             : FilterPrompts::defaults();
  auto llm = make_client(args.llm, args.transport);
  auto qe = make_client(args.qe, args.transport);
  const auto outcome = run_filter(candidates, proverbs, *llm, *qe, args.config, prompts);

  records::write_as(args.out, outcome.kept);
  json directions = json::array();
  for (const auto& rep : outcome.reports) directions.push_back(rep);
  records::write_document(args.report, tagged_document(kFilterReportSchema,
                                                       {{"config", args.config},
                                                        {"directions", directions},
                                                        {"undecided", outcome.undecided}}));
  StageResult r;
  r.stage = "filter";
  r.parameters = args.config;
  r.parameters["llm_model"] = args.llm.model_name;
  r.parameters["qe_model"] = args.qe.model_name;
  r.inputs = {args.candidates, args.proverbs};
  if (args.prompts) r.inputs.push_back(*args.prompts);
  r.outputs = {args.out, args.report};
  r.stats = {{"p1", candidates.size()}, {"p2", outcome.kept.size()},
             {"undecided", outcome.undecided.size()}};
  return r;
}

// --- context ---------------------------------------------------------------

StageResult run_context_stage(const ContextArgs& args) {
  const auto corpora = load_corpora({args.bitext});
  std::vector<json> rows;
  records::for_each_line(args.candidates, [&](std::size_t, const json& j) {
    const MinedCandidate c = j.contains("candidate") ? j.get<ScoredCandidate>().candidate
                                                     : j.get<MinedCandidate>();
    auto it = corpora.find(c.direction());
    if (it == corpora.end()) {
      throw DataError("no bitext for direction " + c.direction().label());
    }
    rows.push_back({{"key", item_key(c.pair)},
                    {"proverb_id", c.proverb_id},
                    {"pair", c.pair},
                    {"context", retrieve_context(it->second, c.pair, args.max_each)}});
  });
  records::write_lines(args.out, rows);
  StageResult r;
  r.stage = "context";
  r.parameters = {{"context_max_each", args.max_each}};
  r.inputs = {args.bitext, args.candidates};
  r.outputs = {args.out};
  r.stats = {{"rows", rows.size()}};
  return r;
}

// --- prompt ----------------------------------------------------------------

StageResult run_prompt_stage(const PromptArgs& args) {
  const auto templates = args.template_file ? PromptTemplates::from_file(*args.template_file)
                                            : PromptTemplates::defaults();
  const auto kinds = args.templates.empty() ? all_templates() : args.templates;
  std::map<std::string, ProverbEntry> proverbs;
  for (auto& p : load_proverbs(args.proverbs)) proverbs.emplace(p.id, std::move(p));

  std::vector<json> rows;
  std::size_t skipped = 0;
  records::for_each_line(args.contexts, [&](std::size_t, const json& j) {
    const auto pair = j.at("pair").get<SentencePair>();
    const auto window = j.at("context").get<ContextWindow>();
    const std::string proverb_id = j.at("proverb_id").get<std::string>();
    auto it = proverbs.find(proverb_id);
    if (it == proverbs.end()) throw DataError("unknown proverb '" + proverb_id + "'");
    for (TemplateKind kind : kinds) {
      PromptRequest req{kind, pair.source, pair.src_lang, pair.tgt_lang, it->second.text,
                        std::nullopt, window};
      if (!utf8::trim(it->second.explanation).empty()) req.proverb_explanation = it->second.explanation;
      if (kind == TemplateKind::kExplanation && !req.proverb_explanation) {
        spdlog::warn("{}: proverb '{}' has no explanation; explanation prompt skipped",
                     j.at("key").get<std::string>(), proverb_id);
        ++skipped;
        continue;
      }
      rows.push_back({{"key", j.at("key")},
                      {"proverb_id", proverb_id},
                      {"template", to_string(kind)},
                      {"src_lang", pair.src_lang},
                      {"tgt_lang", pair.tgt_lang},
                      {"source", pair.source},
                      {"reference", pair.target},
                      {"messages", build_prompt(req, templates)}});
    }
  });
  records::write_lines(args.out, rows);
  StageResult r;
  r.stage = "prompt";
  json names = json::array();
  for (auto k : kinds) names.push_back(to_string(k));
  r.parameters = {{"templates", names}};
  r.inputs = {args.contexts, args.proverbs};
  if (args.template_file) r.inputs.push_back(*args.template_file);
  r.outputs = {args.out};
  r.stats = {{"prompts", rows.size()}, {"skipped", skipped}};
  return r;
}

// --- score -----------------------------------------------------------------

StageResult run_score_stage(const ScoreArgs& args) {
  const auto prompts = records::read_lines(args.prompts);
  const bool needs_model = std::any_of(prompts.begin(), prompts.end(),
                                       [](const json& j) { return !j.contains("hypothesis"); });
  if (needs_model && args.systems.empty()) {
    throw ValidationError("score: prompts need translating but no systems are configured");
  }

  auto score_row = [](const json& prompt, const std::string& system_id, const std::string& model,
                      const std::string& hypothesis) {
    const std::string reference = prompt.at("reference").get<std::string>();
    json row{{"system_id", system_id},
             {"model", model},
             {"template", prompt.value("template", "")},
             {"reference_id", prompt.at("key")},
             {"reference", reference},
             {"hypothesis", hypothesis},
             {"proverb_id", prompt.value("proverb_id", "")},
             {"src_lang", prompt.value("src_lang", "")},
             {"tgt_lang", prompt.value("tgt_lang", "")}};
    row["metric_scores"] = {
        {std::string(to_string(MetricName::kBleu)), sentence_bleu(hypothesis, reference).rounded()},
        {std::string(to_string(MetricName::kChrfPP)), chrf_pp(hypothesis, reference).rounded()}};
    return row;
  };

  std::vector<json> out;
  if (!needs_model) {
    for (const auto& p : prompts) {
      const std::string sys = p.value("system_id", "given/" + p.value("template", std::string("none")));
      out.push_back(score_row(p, sys, p.value("model", "given"), p.at("hypothesis").get<std::string>()));
    }
  } else {
    for (const auto& sys : args.systems) {
      auto client = make_client(sys, args.transport);
      std::vector<json> rows(prompts.size());
      parallel_for(prompts.size(), client->config().max_in_flight, [&](std::size_t i) {
        const auto& p = prompts[i];
        std::string hyp;
        if (p.contains("hypothesis")) {
          hyp = p["hypothesis"].get<std::string>();
        } else {
          const auto transcript = p.at("messages").get<Transcript>();
          hyp = utf8::trim(client->chat(transcript, {0, "translate"}));
        }
        rows[i] = score_row(p, sys.model_name + "/" + p.value("template", std::string("none")),
                            sys.model_name, hyp);
      });
      out.insert(out.end(), rows.begin(), rows.end());
    }
  }
  records::write_lines(args.out, out);

  struct Acc {
    std::size_t n = 0;
    double bleu = 0.0;
    double chrf = 0.0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& row : out) {
    auto& a = acc[row["system_id"].get<std::string>()];
    a.n++;
    a.bleu += row["metric_scores"]["BLEU"].get<double>();
    a.chrf += row["metric_scores"]["CHRFPP"].get<double>();
  }
  json systems = json::object();
  for (const auto& [id, a] : acc) {
    systems[id] = {{"n", a.n},
                   {"BLEU", round_half_even(a.bleu / static_cast<double>(a.n), 2)},
                   {"CHRFPP", round_half_even(a.chrf / static_cast<double>(a.n), 2)}};
  }
  records::write_document(args.summary, tagged_document(kScoreSummarySchema, {{"systems", systems}}));

  StageResult r;
  r.stage = "score";
  json models = json::array();
  for (const auto& s : args.systems) models.push_back(s.model_name);
  r.parameters = {{"systems", models}, {"bleu", "sentence, exp smoothing, intl tokenizer"},
                  {"chrf", "chrF++ char 6, word 2, beta 2"}};
  r.inputs = {args.prompts};
  r.outputs = {args.out, args.summary};
  r.stats = {{"hypotheses", out.size()}};
  return r;
}

// --- contaminate -----------------------------------------------------------

void write_probe_samples(const fs::path& contexts, const fs::path& out) {
  std::vector<json> rows;
  std::set<std::string> seen;
  records::for_each_line(contexts, [&](std::size_t, const json& j) {
    const auto pair = j.at("pair").get<SentencePair>();
    const std::string key = j.at("key").get<std::string>();
    if (!seen.insert(key).second) return;  // one probe per sentence
    if (tokenize(pair.source, TokenScheme::kWhitespace).size() < 2) {
      spdlog::warn("{}: sentence too short to probe; skipped", key);
      return;
    }
    ProbeSample s;
    s.id = key;
    s.language = pair.src_lang;
    s.context = join_sources(j.at("context").get<ContextWindow>().prior);
    s.sentence = pair.source;
    rows.emplace_back(s);
  });
  records::write_lines(out, rows);
}

StageResult run_contaminate_stage(const ContaminateArgs& args) {
  args.config.validate();
  auto samples = records::read_as<ProbeSample>(args.samples);
  auto client = make_client(args.client, args.transport);
  samples = run_probes(std::move(samples), *client, args.config);
  const auto report = contamination_report(samples, args.config.cutoff);
  records::write_as(args.samples_out, samples);
  json langs = json::array();
  for (const auto& l : report) langs.push_back(l);
  records::write_document(args.out, tagged_document(kContaminationSchema,
                                                    {{"tau", args.config.tau},
                                                     {"cutoff", args.config.cutoff},
                                                     {"lcs_unit", to_string(args.config.unit)},
                                                     {"model", args.client.model_name},
                                                     {"languages", langs}}));
  StageResult r;
  r.stage = "contaminate";
  r.parameters = {{"tau", args.config.tau},
                  {"gamma_cutoff", args.config.cutoff},
                  {"lcs_unit", to_string(args.config.unit)},
                  {"completion_model", args.client.model_name}};
  r.inputs = {args.samples};
  r.outputs = {args.out, args.samples_out};
  r.stats = {{"samples", samples.size()}};
  return r;
}

// --- sensitivity -----------------------------------------------------------

StageResult run_sensitivity_stage(const SensitivityArgs& args) {
  args.config.validate();
  auto records_in = records::read_as<HypothesisRecord>(args.hypotheses);
  if (!args.embedder) throw ValidationError("sensitivity needs an embedding model");
  auto client = make_client(*args.embedder, args.transport);
  const auto refs = embed_records(records_in, *client);
  const auto pairs = find_unstable_pairs(records_in, refs, args.config);
  std::vector<json> rows;
  rows.reserve(pairs.size());
  for (const auto& p : pairs) rows.push_back(pair_row(p));
  records::write_lines(args.out, rows);
  records::write_document(args.summary, tagged_document(kSensitivitySchema,
                                                        {{"config", args.config},
                                                         {"hypotheses", records_in.size()},
                                                         {"summary", summarize(pairs)}}));
  StageResult r;
  r.stage = "sensitivity";
  r.parameters = args.config;
  r.parameters["embed_model"] = args.embedder->model_name;
  r.inputs = {args.hypotheses};
  r.outputs = {args.out, args.summary};
  r.stats = {{"flagged", pairs.size()}};
  return r;
}

// --- judge -----------------------------------------------------------------

void write_judge_items(const fs::path& hypotheses, const fs::path& contexts,
                       const std::string& system_x, const std::string& system_y, const fs::path& out) {
  if (system_x == system_y) throw ValidationError("judge systems must differ");
  std::map<std::string, std::map<std::string, std::string>> hyps;  // reference_id -> system -> text
  records::for_each_line(hypotheses, [&](std::size_t, const json& j) {
    const auto sys = j.at("system_id").get<std::string>();
    if (sys == system_x || sys == system_y) {
      hyps[j.at("reference_id").get<std::string>()][sys] = j.at("hypothesis").get<std::string>();
    }
  });
  std::map<std::string, json> ctx;
  records::for_each_line(contexts, [&](std::size_t, const json& j) {
    ctx.emplace(j.at("key").get<std::string>(), j);
  });
  std::vector<json> rows;
  for (const auto& [ref_id, by_sys] : hyps) {
    auto x = by_sys.find(system_x);
    auto y = by_sys.find(system_y);
    if (x == by_sys.end() || y == by_sys.end()) continue;
    auto c = ctx.find(ref_id);
    if (c == ctx.end()) throw DataError("no context for '" + ref_id + "'");
    if (utf8::trim(x->second).empty() || utf8::trim(y->second).empty()) {
      spdlog::warn("{}: empty hypothesis; not judged", ref_id);
      continue;
    }
    const auto pair = c->second.at("pair").get<SentencePair>();
    const auto window = c->second.at("context").get<ContextWindow>();
    JudgeItem item{ref_id, pair.source, pair.target, join_sources(window.prior),
                   join_sources(window.following), x->second, y->second, 0};
    rows.emplace_back(item);
  }
  if (rows.empty()) {
    throw DataError("no references carry hypotheses from both '" + system_x + "' and '" + system_y + "'");
  }
  records::write_lines(out, rows);
}

StageResult run_judge_stage(const JudgeArgs& args) {
  auto items = records::read_as<JudgeItem>(args.pairs);
  if (items.empty()) throw ValidationError("judge: no items");
  for (std::size_t i = 0; i < items.size(); ++i) items[i].seed = derive_item_seed(args.seed, i);
  const JudgePrompt prompt = args.prompt_file ? JudgePrompt::from_file(*args.prompt_file)
                                              : JudgePrompt::defaults();
  auto client = make_client(args.client, args.transport);
  const auto verdicts = judge_all(items, *client, prompt);
  std::vector<json> rows;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    json row = verdicts[i];
    row["seed"] = items[i].seed;
    rows.push_back(std::move(row));
  }
  records::write_lines(args.out, rows);
  const WinRates rates = tally_winrates(verdicts);
  records::write_document(args.summary, tagged_document(kJudgeSummarySchema,
                                                        {{"seed", args.seed},
                                                         {"model", args.client.model_name},
                                                         {"items", items.size()},
                                                         {"winrates", rates}}));
  StageResult r;
  r.stage = "judge";
  r.parameters = {{"judge_model", args.client.model_name}};
  r.seeds = {{"judge", args.seed}};
  r.inputs = {args.pairs};
  if (args.prompt_file) r.inputs.push_back(*args.prompt_file);
  r.outputs = {args.out, args.summary};
  r.stats = {{"valid", rates.valid}, {"invalid", rates.invalid}};
  return r;
}

// --- report ----------------------------------------------------------------

StageResult run_report_stage(const ReportArgs& args) {
  std::vector<json> docs;
  for (const auto& p : args.inputs) docs.push_back(records::read_document(p));
  records::write_file_atomic(args.out, render_report(docs));
  StageResult r;
  r.stage = "report";
  r.inputs = args.inputs;
  r.outputs = {args.out};
  return r;
}

// --- pipeline --------------------------------------------------------------

const std::vector<std::string>& pipeline_stage_order() {
  static const std::vector<std::string> order{"mine",        "filter",      "context",
                                              "prompt",      "score",       "contaminate",
                                              "sensitivity", "judge",       "report"};
  return order;
}

namespace {

struct PipelinePlan {
  json config;
  fs::path base;
  fs::path out_dir;
  std::vector<std::string> stages;
  fs::path bitext;
  fs::path proverbs;
  std::optional<fs::path> lemma_table;
  std::optional<fs::path> mock_server;
  std::uint64_t seed = 0;

  fs::path resolve(const std::string& p) const {
    fs::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  }
  fs::path out(const std::string& name) const { return out_dir / name; }
  json section(const std::string& name) const {
    return config.contains(name) ? config[name] : json::object();
  }
  std::optional<fs::path> optional_path(const json& sec, const std::string& key) const {
    if (!sec.contains(key) || sec[key].is_null()) return std::nullopt;
    return resolve(sec[key].get<std::string>());
  }
  ModelClientConfig model(const std::string& role) const { return model_config_for(config, role); }
  std::vector<ModelClientConfig> translators() const { return translator_configs(config); }
};

// Files each stage reads from and writes to the output directory.
const std::map<std::string, std::pair<std::vector<std::string>, std::vector<std::string>>>& stage_files() {
  static const std::map<std::string, std::pair<std::vector<std::string>, std::vector<std::string>>> f{
      {"mine", {{}, {"candidates.jsonl"}}},
      {"filter", {{"candidates.jsonl"}, {"filtered.jsonl", "filter_report.json"}}},
      {"context", {{"filtered.jsonl"}, {"contexts.jsonl"}}},
      {"prompt", {{"contexts.jsonl"}, {"prompts.jsonl"}}},
      {"score", {{"prompts.jsonl"}, {"hypotheses.jsonl", "score_summary.json"}}},
      {"contaminate", {{"contexts.jsonl"}, {"probe_inputs.jsonl", "probes.jsonl", "contamination.json"}}},
      {"sensitivity", {{"hypotheses.jsonl"}, {"sensitivity_pairs.jsonl", "sensitivity_summary.json"}}},
      {"judge", {{"hypotheses.jsonl", "contexts.jsonl"}, {"judge_items.jsonl", "verdicts.jsonl", "judge_summary.json"}}},
      {"report", {{}, {"report.md"}}},
  };
  return f;
}

PipelinePlan plan_pipeline(const fs::path& config_path) {
  require_file(config_path, "pipeline config");
  PipelinePlan plan;
  plan.config = records::read_document(config_path);
  if (!plan.config.is_object()) throw ValidationError("pipeline config must be a JSON object");
  plan.base = config_path.parent_path();

  static const std::set<std::string> known{
      "out_dir", "bitext",  "proverbs", "lemma_table", "mock_server", "model",       "models", "stages",
      "seed",    "mine",    "filter",   "context",     "prompt",      "score",       "contaminate",
      "sensitivity", "judge"};
  for (const auto& [k, _] : plan.config.items()) {
    if (!known.count(k)) throw ValidationError("unknown pipeline config key '" + k + "'");
  }
  try {
    plan.out_dir = plan.resolve(plan.config.at("out_dir").get<std::string>());
    plan.bitext = plan.resolve(plan.config.at("bitext").get<std::string>());
    plan.proverbs = plan.resolve(plan.config.at("proverbs").get<std::string>());
    plan.lemma_table = plan.optional_path(plan.config, "lemma_table");
    plan.mock_server = plan.optional_path(plan.config, "mock_server");
    plan.stages = plan.config.value("stages", pipeline_stage_order());
    plan.seed = plan.config.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("pipeline config: ") + e.what());
  }

  // Stage list: known names, canonical order, no repeats.
  const auto& order = pipeline_stage_order();
  std::size_t last = 0;
  for (std::size_t i = 0; i < plan.stages.size(); ++i) {
    auto it = std::find(order.begin(), order.end(), plan.stages[i]);
    if (it == order.end()) throw ValidationError("unknown stage '" + plan.stages[i] + "'");
    const auto pos = static_cast<std::size_t>(it - order.begin()) + 1;
    if (pos <= last) throw ValidationError("stages must be listed once, in pipeline order");
    last = pos;
  }

  // Inputs must exist up front, either on disk or from an earlier stage.
  require_file(plan.bitext, "bitext");
  require_file(plan.proverbs, "proverbs");
  if (plan.lemma_table) require_file(*plan.lemma_table, "lemma table");
  if (plan.mock_server) require_file(*plan.mock_server, "mock server config");
  for (const auto& [sec, key] : std::vector<std::pair<std::string, std::string>>{
           {"filter", "prompts"}, {"prompt", "template_file"}, {"contaminate", "samples"},
           {"judge", "prompt_file"}, {"judge", "pairs"}}) {
    if (auto p = plan.optional_path(plan.section(sec), key)) require_file(*p, sec + "." + key);
  }
  std::set<std::string> produced;
  for (const auto& stage : plan.stages) {
    const auto& [needs, makes] = stage_files().at(stage);
    for (const auto& n : needs) {
      if (stage == "contaminate" && plan.section("contaminate").contains("samples")) continue;
      if (stage == "judge" && plan.section("judge").contains("pairs")) continue;
      if (!produced.count(n) && !fs::is_regular_file(plan.out(n))) {
        throw ValidationError("stage '" + stage + "' needs " + n +
                              ", which no earlier stage produces and which is not in " +
                              plan.out_dir.string());
      }
    }
    produced.insert(makes.begin(), makes.end());
  }
  if (std::find(plan.stages.begin(), plan.stages.end(), "judge") != plan.stages.end() &&
      !plan.section("judge").contains("pairs")) {
    const auto j = plan.section("judge");
    if (!j.contains("system_x") || !j.contains("system_y")) {
      throw ValidationError("judge stage needs judge.system_x and judge.system_y (or judge.pairs)");
    }
  }
  return plan;
}

StageResult run_one(const PipelinePlan& plan, const std::string& stage,
                    const std::shared_ptr<Transport>& transport) {
  const auto sec = plan.section(stage);
  try {
    if (stage == "mine") {
      MineArgs a{plan.bitext, plan.proverbs, plan.out("candidates.jsonl"), {}, plan.lemma_table};
      a.config.threshold = sec.value("threshold", a.config.threshold);
      a.config.scheme = token_scheme_from_string(sec.value("scheme", std::string("whitespace")));
      a.config.threads = sec.value("threads", 0u);
      return run_mine_stage(a);
    }
    if (stage == "filter") {
      FilterArgs a;
      a.candidates = plan.out("candidates.jsonl");
      a.proverbs = plan.proverbs;
      a.out = plan.out("filtered.jsonl");
      a.report = plan.out("filter_report.json");
      from_json(sec, a.config);
      a.llm = plan.model("filter");
      a.qe = plan.model("qe");
      a.prompts = plan.optional_path(sec, "prompts");
      a.transport = transport;
      return run_filter_stage(a);
    }
    if (stage == "context") {
      return run_context_stage({plan.bitext, plan.out("filtered.jsonl"), plan.out("contexts.jsonl"),
                                sec.value("max_each", std::size_t{5})});
    }
    if (stage == "prompt") {
      PromptArgs a{plan.out("contexts.jsonl"), plan.proverbs, plan.out("prompts.jsonl"), {},
                   plan.optional_path(sec, "template_file")};
      for (const auto& t : sec.value("templates", std::vector<std::string>{})) {
        a.templates.push_back(template_from_string(t));
      }
      return run_prompt_stage(a);
    }
    if (stage == "score") {
      return run_score_stage({plan.out("prompts.jsonl"), plan.out("hypotheses.jsonl"),
                              plan.out("score_summary.json"), plan.translators(), transport});
    }
    if (stage == "contaminate") {
      ContaminateArgs a;
      if (auto s = plan.optional_path(sec, "samples")) {
        a.samples = *s;
      } else {
        a.samples = plan.out("probe_inputs.jsonl");
        write_probe_samples(plan.out("contexts.jsonl"), a.samples);
      }
      a.out = plan.out("contamination.json");
      a.samples_out = plan.out("probes.jsonl");
      a.config.tau = sec.value("tau", a.config.tau);
      a.config.cutoff = sec.value("cutoff", a.config.cutoff);
      a.config.unit = lcs_unit_from_string(sec.value("unit", std::string("token")));
      a.client = plan.model("complete");
      a.transport = transport;
      auto r = run_contaminate_stage(a);
      if (!sec.contains("samples")) r.outputs.push_back(a.samples);
      return r;
    }
    if (stage == "sensitivity") {
      SensitivityArgs a;
      a.hypotheses = plan.out("hypotheses.jsonl");
      a.out = plan.out("sensitivity_pairs.jsonl");
      a.summary = plan.out("sensitivity_summary.json");
      from_json(sec, a.config);
      a.embedder = plan.model("embed");
      a.transport = transport;
      return run_sensitivity_stage(a);
    }
    if (stage == "judge") {
      JudgeArgs a;
      if (auto p = plan.optional_path(sec, "pairs")) {
        a.pairs = *p;
      } else {
        a.pairs = plan.out("judge_items.jsonl");
        write_judge_items(plan.out("hypotheses.jsonl"), plan.out("contexts.jsonl"),
                          sec.at("system_x").get<std::string>(), sec.at("system_y").get<std::string>(),
                          a.pairs);
      }
      a.out = plan.out("verdicts.jsonl");
      a.summary = plan.out("judge_summary.json");
      a.seed = sec.value("seed", plan.seed);
      a.client = plan.model("judge");
      a.prompt_file = plan.optional_path(sec, "prompt_file");
      a.transport = transport;
      auto r = run_judge_stage(a);
      if (!sec.contains("pairs")) r.outputs.push_back(a.pairs);
      return r;
    }
    if (stage == "report") {
      ReportArgs a;
      for (const auto* name : {"filter_report.json", "score_summary.json", "contamination.json",
                               "sensitivity_summary.json", "judge_summary.json"}) {
        if (fs::is_regular_file(plan.out(name))) a.inputs.push_back(plan.out(name));
      }
      a.out = plan.out("report.md");
      return run_report_stage(a);
    }
  } catch (const json::exception& e) {
    throw ValidationError("stage '" + stage + "' config: " + e.what());
  }
  throw ValidationError("unknown stage '" + stage + "'");
}

/// Routes the default logger to stderr and a per-stage log file while alive.
class StageLog {
 public:
  explicit StageLog(const fs::path& file) : previous_(spdlog::default_logger()) {
    auto file_sink = std::make_shared<spdlog::sinks::basic_file_sink_mt>(file.string(), true);
    std::vector<spdlog::sink_ptr> sinks{file_sink};
    for (const auto& s : previous_->sinks()) sinks.push_back(s);
    auto logger = std::make_shared<spdlog::logger>("proverbkit", sinks.begin(), sinks.end());
    logger->set_level(previous_->level());
    file_sink->set_level(spdlog::level::info);
    logger->set_level(std::min(previous_->level(), spdlog::level::info));
    spdlog::set_default_logger(logger);
  }
  ~StageLog() {
    spdlog::default_logger()->flush();
    spdlog::set_default_logger(previous_);
  }
  StageLog(const StageLog&) = delete;
  StageLog& operator=(const StageLog&) = delete;

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

}  // namespace

PipelineOutcome run_pipeline(const fs::path& config_path, std::shared_ptr<Transport> transport) {
  const std::string started = utc_timestamp();
  PipelinePlan plan = plan_pipeline(config_path);
  fs::create_directories(plan.out_dir / "logs");
  const std::string config_digest = sha256_hex(canonical_json(plan.config));

  std::unique_ptr<MockHttpServer> server;
  const char* env_endpoint = std::getenv("PROVERBKIT_ENDPOINT");
  if (plan.mock_server && !transport && !(env_endpoint && *env_endpoint)) {
    server = std::make_unique<MockHttpServer>(MockBackend(MockBackendOptions::from_file(*plan.mock_server)));
    plan.config["model"]["endpoint"] = server->endpoint();
    if (plan.config.contains("models")) {
      for (auto& [role, m] : plan.config["models"].items()) {
        if (m.is_object()) m.erase("endpoint");
        if (m.is_array()) {
          for (auto& each : m) each.erase("endpoint");
        }
      }
    }
  }

  PipelineOutcome outcome;
  outcome.out_dir = plan.out_dir;
  for (const auto& stage : plan.stages) {
    const fs::path log_file = plan.out_dir / "logs" / (stage + ".log");
    try {
      StageLog log(log_file);
      spdlog::info("stage {} started", stage);
      outcome.stages.push_back(run_one(plan, stage, transport));
      spdlog::info("stage {} finished: {}", stage, outcome.stages.back().stats.dump());
    } catch (const Error& e) {
      {
        StageLog log(log_file);
        spdlog::error("stage {} failed: {}", stage, e.what());
      }
      const std::string msg = "stage '" + stage + "' failed: " + e.what() + " (log: " + log_file.string() + ")";
      switch (e.exit_code()) {
        case ExitCode::kValidation: throw ValidationError(msg);
        case ExitCode::kModel: throw ModelError(msg);
        default: throw DataError(msg);
      }
    }
  }

  RunManifest m;
  m.command = "pipeline";
  m.config_digest = config_digest;
  m.tool_version = tool_version();
  m.seeds = {{"judge", plan.section("judge").value("seed", plan.seed)}};
  m.parameters = default_parameters();
  json per_stage = json::object();
  for (const auto& s : outcome.stages) per_stage[s.stage] = s.parameters;
  m.parameters["stages"] = per_stage;
  m.inputs = {digest_file(plan.bitext), digest_file(plan.proverbs)};
  for (const auto& s : outcome.stages) {
    for (const auto& o : s.outputs) m.outputs.push_back(digest_file(o));
  }
  m.started_at = started;
  m.finished_at = utc_timestamp();
  outcome.manifest = plan.out_dir / "pipeline.manifest.json";
  write_manifest(m, outcome.manifest);
  return outcome;
}

}  // namespace proverbkit
