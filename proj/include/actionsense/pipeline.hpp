#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "actionsense/assembly.hpp"
#include "actionsense/extraction.hpp"
#include "actionsense/generation.hpp"
#include "actionsense/metrics.hpp"

namespace actionsense::pipeline {

struct ProviderSpec {
  std::string kind;
  std::filesystem::path path;  // resolved against the config directory
  std::string endpoint;
  nlohmann::json options = nlohmann::json::object();
};

struct RunConfig {
  std::filesystem::path annotations;
  std::filesystem::path recipe_index;
  bool strict = true;

  ProviderSpec coref{"identity", {}, {}};
  ProviderSpec parse{"lexicon", {}, {}};
  ProviderSpec rc{"keyword", {}, {}};
  ProviderSpec lm{"context_unigram", {}, {}};
  ProviderSpec vision{"hash", {}, {}};

  int min_count = extraction::kDefaultMinCount;
  extraction::ExtractionOptions extraction;

  std::uint64_t seed = generation::kDefaultSeed;
  double nucleus_p = generation::kNucleusP;
  int n_samples = generation::kDefaultSamples;
  int max_new_tokens = generation::kDefaultMaxNewTokens;
  size_t max_visual_features = generation::kMaxVisualFeatures;
  size_t max_sequence_length = generation::kMaxSequenceLength;
  std::vector<generation::ModalityMask> modalities = generation::enumerate_modality_combos();
  std::vector<int> variants = {1};
  std::vector<generation::InferenceType> types = generation::all_inference_types();

  // Recorded for fine-tuning backends; nothing in-core trains.
  double learning_rate = generation::kLearningRate;
  int batch_size = generation::kBatchSize;

  std::string eval_split = "all";  // all | train | val | test
  std::vector<double> split_ratios = {0.8, 0.1, 0.1};
  metrics::HitRule hit_rule = metrics::HitRule::kTopGtCount;
  std::vector<std::filesystem::path> extra_negatives;  // other datasets feeding candidate pools

  std::filesystem::path out_dir = "run";
  int workers = 4;
  provider::RetryPolicy retry;

  nlohmann::json to_json() const;
  // Hash of every field that affects artifacts (not out_dir or workers).
  std::string hash() const;
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

// Comma- or semicolon-separated mask labels; "all" expands to the ten combos.
std::vector<generation::ModalityMask> parse_modalities(const std::string& list);
std::vector<int> parse_variants(const std::string& list);

// ---------------------------------------------------------------------------
// Manifest

enum class Stage { kIngest, kExtract, kTriplets, kAssemble, kGenerate, kEvaluate };

const std::vector<Stage>& all_stages();
std::string_view stage_name(Stage s);

struct RunManifest {
  std::string config_hash;
  std::map<std::string, bool> stages;
  std::map<std::string, std::string> cache_digests;
  std::map<std::string, std::string> artifacts;  // name -> path relative to the run dir
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  bool complete(Stage s) const;
  // Marks `s` complete; throws ConfigError if an earlier stage is not.
  void mark(Stage s);
  // Throws ConfigError naming the first incomplete predecessor of `s`.
  void require_before(Stage s) const;
  // Clears `s` and every later stage.
  void reset_from(Stage s);

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  static std::optional<RunManifest> load(const std::filesystem::path& run_dir);
  void save(const std::filesystem::path& run_dir) const;
};

// ---------------------------------------------------------------------------
// Utilities

// Seeded by-video split. Ids are sorted, shuffled with mt19937_64(seed) and
// cut at round(n * ratio) boundaries into train, val and test.
std::map<std::string, std::string> split_by_video(std::vector<std::string> video_ids, std::uint64_t seed,
                                                  const std::vector<double>& ratios = {0.8, 0.1, 0.1});

// Split of an instance: that of its first source video.
std::string instance_split(const assembly::CommonsenseInstance& inst,
                           const std::map<std::string, std::string>& splits);

// Runs fn(0..n-1) on up to `workers` threads. The first exception thrown is
// rethrown after all workers stop.
void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn);

// Writes `content` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// ---------------------------------------------------------------------------
// Providers

struct Providers {
  std::shared_ptr<extraction::CorefProvider> coref;
  std::shared_ptr<extraction::ParseProvider> parse;
  std::shared_ptr<assembly::RCProvider> rc;
  std::shared_ptr<generation::VisionProvider> vision;
};

// Remote providers are wrapped with the run's response cache and retries.
Providers make_dataset_providers(const RunConfig& config);
std::shared_ptr<generation::LMProvider> make_lm(const RunConfig& config,
                                                const std::vector<assembly::CommonsenseInstance>& training);

// ---------------------------------------------------------------------------
// Generation records

struct GeneratedText {
  std::string text;
  std::optional<double> nll;  // absent for empty generations
};

struct GenerationRecord {
  std::string instance_id;
  generation::ModalityMask mask;
  int variant = 1;
  std::optional<std::string> skipped;  // reason the group produced nothing
  std::map<generation::InferenceType, std::vector<GeneratedText>> outputs;

  std::string key() const;
};

nlohmann::json record_to_json(const GenerationRecord& r);
GenerationRecord record_from_json(const nlohmann::json& j);
std::vector<GenerationRecord> read_generations(const std::filesystem::path& jsonl);

// ---------------------------------------------------------------------------
// Evaluation

struct CellKey {
  generation::InferenceType type;
  generation::ModalityMask mask;
  int variant;
  auto operator<=>(const CellKey&) const = default;
};

struct EvaluationResult {
  std::map<CellKey, metrics::MetricScores> cells;
  std::vector<std::string> notes;
};

EvaluationResult evaluate_generations(const std::vector<GenerationRecord>& records,
                                      const std::vector<assembly::CommonsenseInstance>& dataset,
                                      const RunConfig& config, generation::LMProvider& lm,
                                      generation::VisionProvider* vision);

// Per-type rows for every cell; condition = mask label, suffixed with the
// prompt id when several variants are present.
metrics::EvalReport full_report(const EvaluationResult& eval, const RunConfig& config,
                                const std::vector<generation::ModalityMask>& masks, const std::vector<int>& variants);
// One row per mask (types averaged) at one variant.
metrics::EvalReport modality_report(const EvaluationResult& eval, const RunConfig& config,
                                    const std::vector<generation::ModalityMask>& masks, int variant);
// One row per (type, variant) at one mask; condition = prompt id.
metrics::EvalReport prompt_report(const EvaluationResult& eval, const RunConfig& config,
                                  const generation::ModalityMask& mask, const std::vector<int>& variants);

// Index of the row maximizing mean(B, M, C, A@50) on the report scale; the
// first row wins ties. A missing A@50 is left out of that row's mean.
size_t best_row(const metrics::EvalReport& report);

// ---------------------------------------------------------------------------
// Commands

struct CommandOptions {
  bool resume = false;
  bool modalities_only = false;
  long max_groups = -1;          // stop after this many new groups (simulated interruption)
  std::ostream* log = nullptr;   // progress messages
};

struct CommandResult {
  int exit_code = 0;
  std::string message;
  std::vector<std::filesystem::path> outputs;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitProvider = 3;

int exit_code_for(const Error& e);

CommandResult run_build_dataset(const RunConfig& config, const CommandOptions& options = {});
CommandResult run_stats(const std::filesystem::path& dataset, std::ostream& out, bool as_json = false);
CommandResult run_generate(const RunConfig& config, const CommandOptions& options = {});
CommandResult run_evaluate(const RunConfig& config, const CommandOptions& options = {});
CommandResult run_ablate(const RunConfig& config, const CommandOptions& options = {});
CommandResult run_report(const std::filesystem::path& report, const std::string& format, std::ostream& out);

}  // namespace actionsense::pipeline
