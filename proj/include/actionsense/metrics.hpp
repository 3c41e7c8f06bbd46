#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "actionsense/assembly.hpp"
#include "actionsense/generation.hpp"

namespace actionsense::metrics {

// "[Object12]" -> "[Object]".
std::string normalize_object_tags(std::string_view text);

// Metric tokenization: tags normalized, then text::tokenize.
std::vector<std::string> tokenize(std::string_view text);

// Dedup key used by uniqueness, novelty and candidate pools.
std::string canonical(std::string_view text);

inline constexpr double kBleuEpsilon = 1e-9;

// Sentence BLEU over unigrams and bigrams with clipped counts and the
// closest-reference brevity penalty. Zero precisions are replaced by
// kBleuEpsilon. A one-token candidate is scored on unigrams alone.
double bleu2(std::string_view candidate, const std::vector<std::string>& references);

struct MeteorParams {
  double alpha = 0.85;
  double beta = 0.20;
  double gamma = 0.60;
  double exact_weight = 1.0;
  double stem_weight = 0.6;
  double synonym_weight = 0.8;
  bool use_stem = true;
  // Optional word -> synonyms table; an empty table disables the stage.
  std::map<std::string, std::set<std::string>> synonyms;
};

struct MeteorAlignment {
  size_t matches = 0;
  size_t chunks = 0;
  double weighted = 0.0;  // sum of stage weights over matched pairs
  std::vector<std::pair<size_t, size_t>> pairs;  // (candidate, reference) positions
};

MeteorAlignment meteor_align(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
                             const MeteorParams& params = {});

// Best score over the references.
double meteor(std::string_view candidate, const std::vector<std::string>& references,
              const MeteorParams& params = {});

struct CiderResult {
  std::vector<double> per_instance;  // in input order
  double mean = 0.0;
};

// Classic CIDEr (n = 1..4, uniform weights) scaled by 10. Each instance may
// have several candidates; its score is their mean. Document frequencies
// come from the references of all instances.
CiderResult cider(const std::vector<std::vector<std::string>>& candidates_by_instance,
                  const std::vector<std::vector<std::string>>& references_by_instance);

// ---------------------------------------------------------------------------
// Retrieval

inline constexpr size_t kPoolSize = 50;

struct PoolCandidate {
  std::string text;
  bool is_ground_truth = false;

  bool operator==(const PoolCandidate&) const = default;
};

struct CandidatePool {
  std::string instance_id;
  generation::InferenceType type = generation::InferenceType::kPrecondition;
  std::vector<PoolCandidate> candidates;  // ground truth first, then sampled negatives
  size_t gt_count = 0;
};

// Key identifying the image an instance was built from.
std::string image_key(const assembly::CommonsenseInstance& inst);

// Per-pool generator seed; negatives are drawn with a partial Fisher-Yates
// over the lexicographically sorted eligible set, j = i + rng() % (n - i).
std::uint64_t pool_seed(std::uint64_t seed, const std::string& instance_id, generation::InferenceType type);

// Eligible negatives: same-type inferences of instances from other images,
// deduplicated on canonical(), excluding anything equal to a ground truth.
std::vector<std::string> eligible_negatives(const assembly::CommonsenseInstance& inst, generation::InferenceType type,
                                            const std::vector<const assembly::CommonsenseInstance*>& pool_sources);

CandidatePool build_candidate_pool(const assembly::CommonsenseInstance& inst, generation::InferenceType type,
                                   const std::vector<assembly::CommonsenseInstance>& dataset, std::uint64_t seed);
CandidatePool build_candidate_pool(const assembly::CommonsenseInstance& inst, generation::InferenceType type,
                                   const std::vector<const assembly::CommonsenseInstance*>& pool_sources,
                                   std::uint64_t seed);

struct ScoredPool {
  std::string instance_id;
  std::vector<generation::ScoredCandidate> candidates;
  size_t gt_count = 0;
};

enum class HitRule {
  kTopGtCount,  // fraction of ground truths ranked within the top gt_count
  kTop1,        // 1 when the best-ranked candidate is a ground truth
};

// Rank order of a pool: ascending perplexity, ties by candidate text.
std::vector<size_t> rank_pool(const ScoredPool& pool);

double pool_accuracy(const ScoredPool& pool, HitRule rule = HitRule::kTopGtCount);
double acc_at_50(const std::vector<ScoredPool>& pools, HitRule rule = HitRule::kTopGtCount);

// ---------------------------------------------------------------------------
// Diversity and agreement

double uniqueness(const std::vector<std::string>& generated);
double novelty(const std::vector<std::string>& generated, const std::set<std::string>& training);
// Canonical forms of training inferences, for novelty().
std::set<std::string> training_set(const std::vector<std::string>& inferences);

double cohen_kappa(const std::vector<std::string>& ratings_a, const std::vector<std::string>& ratings_b,
                   const std::vector<std::string>& categories);

struct KappaReference {
  std::string inference;
  std::string prompt;
  double correctness;
  double creativity;
};

// Published inter-annotator agreement, for documentation only.
const std::vector<KappaReference>& reference_kappas();

// ---------------------------------------------------------------------------
// Reports

// Raw scores: B, M, A50, unique, novel in [0, 1]; C in [0, 10].
struct MetricScores {
  double bleu = 0.0;
  double meteor = 0.0;
  double cider = 0.0;
  std::optional<double> acc50;  // absent when pools could not be filled
  double unique = 0.0;
  double novel = 0.0;
};

struct ReportRow {
  std::string type;
  std::string condition;
  MetricScores scores;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  std::vector<std::string> notes;
};

using ScoreGrid = std::map<std::pair<std::string, std::string>, MetricScores>;  // (type, condition)

// One row per (condition, type), conditions outer, in the given orders.
EvalReport aggregate_report(const ScoreGrid& grid, const std::vector<std::string>& types,
                            const std::vector<std::string>& conditions);

// One row per condition with type "all", each metric the mean over types.
// A50 averages the types that have it and is absent when none do.
EvalReport collapse_types(const EvalReport& report);

// Serialized values are on a 0-100 scale (CIDEr x10), rounded to 4 places.
nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
std::string report_to_text(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);

struct ReferenceRow {
  std::string condition;
  double b, m, c, a50, unique, novel;
};

// Published ablation rows (0-100 scale), for documentation only.
const std::vector<ReferenceRow>& reference_modality_rows();
const std::vector<ReferenceRow>& reference_prompt_rows();

}  // namespace actionsense::metrics
