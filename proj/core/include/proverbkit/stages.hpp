#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proverbkit/contamination.hpp"
#include "proverbkit/filterpipe.hpp"
#include "proverbkit/manifest.hpp"
#include "proverbkit/miner.hpp"
#include "proverbkit/modelclient.hpp"
#include "proverbkit/prompts.hpp"
#include "proverbkit/sensitivity.hpp"

namespace proverbkit {

namespace fs = std::filesystem;

// Schema tags of the stage summary documents read by `report`.
inline constexpr std::string_view kFilterReportSchema = "proverbkit.filter-report/1";
inline constexpr std::string_view kScoreSummarySchema = "proverbkit.score-summary/1";
inline constexpr std::string_view kContaminationSchema = "proverbkit.contamination-report/1";
inline constexpr std::string_view kSensitivitySchema = "proverbkit.sensitivity-summary/1";
inline constexpr std::string_view kJudgeSummarySchema = "proverbkit.judge-summary/1";

/// What a stage did; the front-end turns it into a manifest.
struct StageResult {
  std::string stage;
  nlohmann::json parameters = nlohmann::json::object();
  std::map<std::string, std::uint64_t> seeds;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  nlohmann::json stats = nlohmann::json::object();
};

/// Builds and writes the manifest for a finished stage next to its first output.
fs::path write_stage_manifest(const StageResult& result, const std::string& command,
                              const nlohmann::json& config, const std::string& started_at);

/// Applies PROVERBKIT_ENDPOINT and PROVERBKIT_CACHE_DIR when set.
ModelClientConfig apply_env_overrides(ModelClientConfig config);

/// Client settings for a role ("filter", "qe", "translate", "complete", "embed",
/// "judge"): the config's "model" section overlaid with "models.<role>", then
/// the environment overrides.
ModelClientConfig model_config_for(const nlohmann::json& config, std::string_view role);

/// One client per entry of "models.translate", or the "translate" role alone.
std::vector<ModelClientConfig> translator_configs(const nlohmann::json& config);

/// Null transport means HTTP.
std::unique_ptr<ModelClient> make_client(const ModelClientConfig& config,
                                         std::shared_ptr<Transport> transport);

struct MineArgs {
  fs::path bitext;
  fs::path proverbs;
  fs::path out;
  MiningConfig config;
  std::optional<fs::path> lemma_table;
};
StageResult run_mine_stage(const MineArgs& args);

struct FilterArgs {
  fs::path candidates;
  fs::path proverbs;
  fs::path out;
  fs::path report;
  FilterConfig config;
  ModelClientConfig llm;
  ModelClientConfig qe;
  std::optional<fs::path> prompts;
  std::shared_ptr<Transport> transport;
};
StageResult run_filter_stage(const FilterArgs& args);

/// Context rows: {key, proverb_id, pair, context}.
struct ContextArgs {
  fs::path bitext;
  fs::path candidates;  // mined or filtered candidates
  fs::path out;
  std::size_t max_each = 5;
};
StageResult run_context_stage(const ContextArgs& args);

/// Prompt rows: {key, proverb_id, template, src_lang, tgt_lang, source, reference, messages}.
struct PromptArgs {
  fs::path contexts;
  fs::path proverbs;
  fs::path out;
  std::vector<TemplateKind> templates;  // empty means all five
  std::optional<fs::path> template_file;
};
StageResult run_prompt_stage(const PromptArgs& args);

/// Translates every prompt with every system and scores the output with BLEU
/// and chrF++. Rows already holding a "hypothesis" are scored without a model call.
/// Output rows are hypothesis records whose system_id is "<model>/<template>".
struct ScoreArgs {
  fs::path prompts;
  fs::path out;
  fs::path summary;
  std::vector<ModelClientConfig> systems;
  std::shared_ptr<Transport> transport;
};
StageResult run_score_stage(const ScoreArgs& args);

struct ContaminateArgs {
  fs::path samples;
  fs::path out;          // per-language report
  fs::path samples_out;  // completed probes
  ProbeConfig config;
  ModelClientConfig client;
  std::shared_ptr<Transport> transport;
};
StageResult run_contaminate_stage(const ContaminateArgs& args);

/// Probe samples from context rows: prior sources as context, the focal source as sentence.
void write_probe_samples(const fs::path& contexts, const fs::path& out);

struct SensitivityArgs {
  fs::path hypotheses;
  fs::path out;
  fs::path summary;
  SensitivityConfig config;
  std::optional<ModelClientConfig> embedder;  // needed unless every record carries an embedding
  std::shared_ptr<Transport> transport;
};
StageResult run_sensitivity_stage(const SensitivityArgs& args);

struct JudgeArgs {
  fs::path pairs;
  fs::path out;
  fs::path summary;
  std::uint64_t seed = 0;
  ModelClientConfig client;
  std::optional<fs::path> prompt_file;
  std::shared_ptr<Transport> transport;
};
StageResult run_judge_stage(const JudgeArgs& args);

/// Judge items comparing two systems on shared references, with surrounding context.
void write_judge_items(const fs::path& hypotheses, const fs::path& contexts,
                       const std::string& system_x, const std::string& system_y, const fs::path& out);

struct ReportArgs {
  std::vector<fs::path> inputs;
  fs::path out;
};
StageResult run_report_stage(const ReportArgs& args);

/// Stage names in execution order.
const std::vector<std::string>& pipeline_stage_order();

struct PipelineOutcome {
  std::vector<StageResult> stages;
  fs::path out_dir;
  fs::path manifest;
};

/// Runs the stages listed in a declarative JSON config. Paths in the config
/// resolve against its directory. Every referenced input is checked before any
/// stage runs. On a stage failure the error names the stage and its log file.
PipelineOutcome run_pipeline(const fs::path& config_path,
                             std::shared_ptr<Transport> transport = nullptr);

}  // namespace proverbkit
