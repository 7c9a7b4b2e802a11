// proverbkit command-line front-end.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "proverbkit/error.hpp"
#include "proverbkit/manifest.hpp"
#include "proverbkit/records.hpp"
#include "proverbkit/stages.hpp"

namespace fs = std::filesystem;
namespace pk = proverbkit;
using nlohmann::json;

namespace {

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  if (!fs::is_regular_file(path)) throw pk::ValidationError("config not found: " + path);
  json doc = pk::records::read_document(path);
  if (!doc.is_object()) throw pk::ValidationError(path + ": config must be a JSON object");
  return doc;
}

/// Stage parameters live under the stage's name in a pipeline-style config,
/// or at the top level of a single-stage config.
json section(const json& config, const std::string& name) {
  if (config.contains(name) && config[name].is_object()) return config[name];
  return config;
}

fs::path with_suffix(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  p.replace_extension();
  return fs::path(p.string() + suffix);
}

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

struct Command {
  std::string name;
  json effective = json::object();
  std::function<pk::StageResult()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mine, filter and evaluate proverb translations in parallel subtitle corpora.\n"
               "All record files are line-delimited JSON. Every command writes "
               "<primary output>.manifest.json."};
  app.set_version_flag("--version", pk::tool_version());
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->capture_default_str();

  Command cmd;

  // mine --------------------------------------------------------------------
  std::string mine_bitext, mine_proverbs, mine_out, mine_lemmas, mine_scheme = "whitespace";
  double mine_threshold = 0.8;
  unsigned mine_threads = 0;
  auto* mine = app.add_subcommand("mine", "Initial mining: fuzzy proverb containment over a bitext (P1)");
  mine->add_option("--bitext", mine_bitext, "Bitext records {doc_id, line_idx, source, target, src_lang, tgt_lang}")
      ->required()->check(CLI::ExistingFile);
  mine->add_option("--proverbs", mine_proverbs, "Proverb records {id, text, language, ...}")
      ->required()->check(CLI::ExistingFile);
  mine->add_option("--out", mine_out, "Candidate records to write")->required();
  mine->add_option("--threshold", mine_threshold, "Minimum containment score")->capture_default_str();
  mine->add_option("--scheme", mine_scheme, "Tokenization: whitespace or intl")->capture_default_str();
  mine->add_option("--lemma-table", mine_lemmas, "TSV of surface<TAB>lemma (default: lowercase only)")
      ->check(CLI::ExistingFile);
  mine->add_option("--threads", mine_threads, "Worker threads (0 = hardware concurrency)")->capture_default_str();
  mine->callback([&] {
    cmd.name = "mine";
    cmd.effective = {{"threshold", mine_threshold}, {"scheme", mine_scheme}, {"lemma_table", mine_lemmas}};
    cmd.run = [&] {
      pk::MineArgs a{mine_bitext, mine_proverbs, mine_out, {}, opt_path(mine_lemmas)};
      a.config.threshold = mine_threshold;
      a.config.scheme = pk::token_scheme_from_string(mine_scheme);
      a.config.threads = mine_threads;
      return pk::run_mine_stage(a);
    };
  });

  // filter ------------------------------------------------------------------
  std::string f_cands, f_proverbs, f_config, f_out, f_report, f_prompts;
  std::size_t f_cap = 2000;
  double f_min = 4.0, f_weight = 5.0;
  auto* filter = app.add_subcommand("filter", "Fine-grained filtering: usage check, QE fusion, quantile cap (P2)");
  filter->add_option("--candidates", f_cands, "Candidate records from `mine`")->required()->check(CLI::ExistingFile);
  filter->add_option("--proverbs", f_proverbs, "Proverb records")->required()->check(CLI::ExistingFile);
  filter->add_option("--config", f_config,
                     "JSON with filter parameters and model sections (model, models.filter, models.qe)")
      ->required()->check(CLI::ExistingFile);
  filter->add_option("--out", f_out, "Kept candidates")->required();
  filter->add_option("--report", f_report, "Per-direction report (default: <out>.report.json)");
  auto* f_cap_opt = filter->add_option("--max-per-direction", f_cap, "Cap per direction")->capture_default_str();
  auto* f_min_opt = filter->add_option("--min-score", f_min, "Minimum fused score")->capture_default_str();
  auto* f_weight_opt = filter->add_option("--qe-weight", f_weight, "DA-QE weight in the fused score")->capture_default_str();
  filter->add_option("--prompts", f_prompts, "Usage/QE prompt wording overrides (JSON)")->check(CLI::ExistingFile);
  filter->callback([&] {
    cmd.name = "filter";
    cmd.run = [&] {
      const json config = load_config(f_config);
      pk::FilterArgs a;
      a.candidates = f_cands;
      a.proverbs = f_proverbs;
      a.out = f_out;
      a.report = f_report.empty() ? with_suffix(f_out, ".report.json") : fs::path(f_report);
      from_json(section(config, "filter"), a.config);
      if (f_cap_opt->count()) a.config.max_per_direction = f_cap;
      if (f_min_opt->count()) a.config.min_score = f_min;
      if (f_weight_opt->count()) a.config.qe_weight = f_weight;
      a.llm = pk::model_config_for(config, "filter");
      a.qe = pk::model_config_for(config, "qe");
      a.prompts = opt_path(f_prompts);
      cmd.effective = {{"filter", a.config}, {"llm", a.llm.model_name}, {"qe", a.qe.model_name}};
      return pk::run_filter_stage(a);
    };
  });

  // context -----------------------------------------------------------------
  std::string c_bitext, c_cands, c_out;
  std::size_t c_max = 5;
  auto* context = app.add_subcommand("context", "Retrieve surrounding subtitle lines for each candidate");
  context->add_option("--bitext", c_bitext, "Bitext records")->required()->check(CLI::ExistingFile);
  context->add_option("--candidates", c_cands, "Mined or filtered candidates")->required()->check(CLI::ExistingFile);
  context->add_option("--out", c_out, "Context records")->required();
  context->add_option("--max-each", c_max, "Lines kept before and after the focal line")->capture_default_str();
  context->callback([&] {
    cmd.name = "context";
    cmd.effective = {{"max_each", c_max}};
    cmd.run = [&] { return pk::run_context_stage({c_bitext, c_cands, c_out, c_max}); };
  });

  // prompt ------------------------------------------------------------------
  std::string p_contexts, p_proverbs, p_out, p_template_file;
  std::vector<std::string> p_templates;
  auto* prompt = app.add_subcommand("prompt", "Build translation prompts (five templates)");
  prompt->add_option("--contexts", p_contexts, "Context records from `context`")->required()->check(CLI::ExistingFile);
  prompt->add_option("--proverbs", p_proverbs, "Proverb records")->required()->check(CLI::ExistingFile);
  prompt->add_option("--out", p_out, "Prompt records")->required();
  prompt->add_option("--template", p_templates,
                     "zero_shot, one_shot, explanation, dialogue_context, concat_context (default: all)");
  prompt->add_option("--template-file", p_template_file, "Prompt wording overrides (JSON)")->check(CLI::ExistingFile);
  prompt->callback([&] {
    cmd.name = "prompt";
    cmd.effective = {{"templates", p_templates}};
    cmd.run = [&] {
      pk::PromptArgs a{p_contexts, p_proverbs, p_out, {}, opt_path(p_template_file)};
      for (const auto& t : p_templates) a.templates.push_back(pk::template_from_string(t));
      return pk::run_prompt_stage(a);
    };
  });

  // score -------------------------------------------------------------------
  std::string s_prompts, s_out, s_summary, s_config;
  auto* score = app.add_subcommand("score", "Translate prompts and score hypotheses with BLEU and chrF++");
  score->add_option("--prompts", s_prompts, "Prompt records (rows with a hypothesis are scored as is)")
      ->required()->check(CLI::ExistingFile);
  score->add_option("--out", s_out, "Hypothesis records with metric scores")->required();
  score->add_option("--summary", s_summary, "Per-system averages (default: <out>.summary.json)");
  score->add_option("--config", s_config, "JSON with model sections (model, models.translate[])")
      ->check(CLI::ExistingFile);
  score->callback([&] {
    cmd.name = "score";
    cmd.run = [&] {
      const json config = load_config(s_config);
      pk::ScoreArgs a{s_prompts, s_out,
                      s_summary.empty() ? with_suffix(s_out, ".summary.json") : fs::path(s_summary), {}, nullptr};
      if (!s_config.empty()) a.systems = pk::translator_configs(config);
      json names = json::array();
      for (const auto& s : a.systems) names.push_back(s.model_name);
      cmd.effective = {{"systems", names}};
      return pk::run_score_stage(a);
    };
  });

  // contaminate -------------------------------------------------------------
  std::string k_samples, k_out, k_samples_out, k_config, k_unit = "token";
  double k_tau = 0.5, k_cutoff = 0.9;
  auto* contaminate = app.add_subcommand("contaminate", "Prefix-completion contamination probe (gamma)");
  contaminate->add_option("--samples", k_samples, "Probe records {id, language, context, sentence}")
      ->required()->check(CLI::ExistingFile);
  contaminate->add_option("--tau", k_tau, "Prefix proportion of the sentence's words")->capture_default_str();
  contaminate->add_option("--cutoff", k_cutoff, "Report the share of samples with gamma above this")
      ->capture_default_str();
  contaminate->add_option("--unit", k_unit, "LCS unit: token or character")->capture_default_str();
  contaminate->add_option("--out", k_out, "Per-language report")->required();
  contaminate->add_option("--samples-out", k_samples_out, "Completed probes (default: <out>.probes.jsonl)");
  contaminate->add_option("--config", k_config, "JSON with model sections (model, models.complete)")
      ->required()->check(CLI::ExistingFile);
  contaminate->callback([&] {
    cmd.name = "contaminate";
    cmd.effective = {{"tau", k_tau}, {"cutoff", k_cutoff}, {"unit", k_unit}};
    cmd.run = [&] {
      pk::ContaminateArgs a;
      a.samples = k_samples;
      a.out = k_out;
      a.samples_out = k_samples_out.empty() ? with_suffix(k_out, ".probes.jsonl") : fs::path(k_samples_out);
      a.config = {k_tau, k_cutoff, pk::lcs_unit_from_string(k_unit)};
      a.client = pk::model_config_for(load_config(k_config), "complete");
      return pk::run_contaminate_stage(a);
    };
  });

  // sensitivity -------------------------------------------------------------
  std::string v_hyps, v_out, v_summary, v_config;
  double v_cos = 0.05;
  auto* sensitivity = app.add_subcommand("sensitivity", "Find near-equivalent hypotheses that metrics score far apart");
  sensitivity->add_option("--hypotheses", v_hyps, "Hypothesis records with metric_scores")
      ->required()->check(CLI::ExistingFile);
  sensitivity->add_option("--out", v_out, "Flagged pair rows")->required();
  sensitivity->add_option("--summary", v_summary, "Counts per metric and system (default: <out>.summary.json)");
  sensitivity->add_option("--config", v_config,
                          "JSON with model sections (model, models.embed) and optional metric_diff_min")
      ->required()->check(CLI::ExistingFile);
  auto* v_cos_opt = sensitivity->add_option("--cos-diff-max", v_cos,
                                            "Maximum difference of cosine-to-reference")->capture_default_str();
  sensitivity->footer("Metric thresholds default to COMET 10.0, BLEU 5.0, CHRFPP 10.0.");
  sensitivity->callback([&] {
    cmd.name = "sensitivity";
    cmd.run = [&] {
      const json config = load_config(v_config);
      pk::SensitivityArgs a;
      a.hypotheses = v_hyps;
      a.out = v_out;
      a.summary = v_summary.empty() ? with_suffix(v_out, ".summary.json") : fs::path(v_summary);
      from_json(section(config, "sensitivity"), a.config);
      if (v_cos_opt->count()) a.config.cos_diff_max = v_cos;
      a.embedder = pk::model_config_for(config, "embed");
      cmd.effective = a.config;
      return pk::run_sensitivity_stage(a);
    };
  });

  // judge -------------------------------------------------------------------
  std::string j_pairs, j_out, j_summary, j_config, j_prompt;
  std::uint64_t j_seed = 0;
  auto* judge = app.add_subcommand("judge", "Pairwise LLM-as-judge with randomized A/B positions");
  judge->add_option("--pairs", j_pairs, "Judge items {id, source, reference, context_before, context_after, "
                                        "hyp_model_x, hyp_model_y}")
      ->required()->check(CLI::ExistingFile);
  judge->add_option("--seed", j_seed, "Global seed for position assignment")->capture_default_str();
  judge->add_option("--out", j_out, "Per-item verdicts")->required();
  judge->add_option("--summary", j_summary, "Win rates (default: <out>.summary.json)");
  judge->add_option("--config", j_config, "JSON with model sections (model, models.judge)")
      ->required()->check(CLI::ExistingFile);
  judge->add_option("--prompt-file", j_prompt, "Judge prompt wording overrides (JSON)")->check(CLI::ExistingFile);
  judge->callback([&] {
    cmd.name = "judge";
    cmd.effective = {{"seed", j_seed}};
    cmd.run = [&] {
      pk::JudgeArgs a;
      a.pairs = j_pairs;
      a.out = j_out;
      a.summary = j_summary.empty() ? with_suffix(j_out, ".summary.json") : fs::path(j_summary);
      a.seed = j_seed;
      a.client = pk::model_config_for(load_config(j_config), "judge");
      a.prompt_file = opt_path(j_prompt);
      return pk::run_judge_stage(a);
    };
  });

  // report ------------------------------------------------------------------
  std::vector<std::string> r_inputs;
  std::string r_out;
  auto* report = app.add_subcommand("report", "Summarize stage reports (phase counts, gamma, win rates, ...)");
  report->add_option("inputs", r_inputs, "Stage summary documents")->check(CLI::ExistingFile);
  report->add_option("--out", r_out, "Markdown summary")->required();
  report->callback([&] {
    cmd.name = "report";
    cmd.run = [&] {
      pk::ReportArgs a;
      for (const auto& i : r_inputs) a.inputs.emplace_back(i);
      a.out = r_out;
      return pk::run_report_stage(a);
    };
  });

  // pipeline ----------------------------------------------------------------
  std::string pl_config;
  auto* pipeline = app.add_subcommand("pipeline", "Run configured stages end to end");
  pipeline->add_option("--config", pl_config, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  pipeline->footer("Only PROVERBKIT_ENDPOINT and PROVERBKIT_CACHE_DIR override the config.");
  pipeline->callback([&] { cmd.name = "pipeline"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(pk::ExitCode::kValidation);
  }

  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_pattern("[%l] %v");
  try {
    if (cmd.name == "pipeline") {
      const auto outcome = pk::run_pipeline(pl_config);
      std::cout << "pipeline finished; manifest: " << outcome.manifest.string() << "\n";
      return 0;
    }
    const std::string started = pk::utc_timestamp();
    const pk::StageResult result = cmd.run();
    const fs::path manifest = pk::write_stage_manifest(result, "proverbkit " + cmd.name, cmd.effective, started);
    spdlog::info("{} finished: {}; manifest: {}", cmd.name, result.stats.dump(), manifest.string());
    return 0;
  } catch (const pk::Error& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 1;
  }
}
