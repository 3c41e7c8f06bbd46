#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "actionsense/corpus.hpp"
#include "actionsense/extraction.hpp"
#include "actionsense/provider.hpp"
#include "actionsense/triplets.hpp"

namespace actionsense::assembly {

// Sentence with annotated object mentions rewritten as "[ObjectK]".
struct GroundedText {
  std::string text;
  std::map<std::string, corpus::ObjectAnnotation> bindings;  // tag -> object
  std::vector<corpus::ObjectAnnotation> image_only;          // annotated, never mentioned

  // Text with every tag replaced by its object label.
  std::string plain() const;
  // Tags in numeric order ("[Object1]", "[Object2]", ...).
  std::vector<std::string> tags() const;
  bool operator==(const GroundedText&) const = default;
};

struct ActionObject {
  std::string verb;
  std::string ingredient;

  auto operator<=>(const ActionObject&) const = default;
};

// Set of inference strings deduplicated on text::normalize_phrase. For each
// normalized key the lexicographically smallest surface form is kept, so
// unions are order-insensitive.
class InferenceSet {
 public:
  void add(const std::string& value);
  void merge(const InferenceSet& other);
  std::vector<std::string> values() const;  // sorted by surface form
  size_t size() const { return by_key_.size(); }
  bool empty() const { return by_key_.empty(); }
  bool contains(const std::string& value) const;
  bool operator==(const InferenceSet&) const = default;

 private:
  std::map<std::string, std::string> by_key_;
};

class RCProvider {
 public:
  virtual ~RCProvider() = default;
  // Answer span from `context`, or nullopt when the question is unanswerable.
  virtual std::optional<std::string> answer(const std::string& context, const std::string& question) = 0;
};

// Canned answers: question -> answer (null for unanswerable). Questions not in
// the table are unanswerable.
class TableRCProvider final : public RCProvider {
 public:
  explicit TableRCProvider(std::map<std::string, std::optional<std::string>> table)
      : table_(std::move(table)) {}
  static std::unique_ptr<TableRCProvider> from_file(const std::filesystem::path& path);
  std::optional<std::string> answer(const std::string& context, const std::string& question) override;

 private:
  std::map<std::string, std::optional<std::string>> table_;
};

// Extractive stub: for a question about <kind> ("color", "texture", ...)
// returns the earliest whole-word occurrence in the context of any word from
// that kind's vocabulary.
class KeywordRCProvider final : public RCProvider {
 public:
  explicit KeywordRCProvider(std::map<std::string, std::vector<std::string>> vocab)
      : vocab_(std::move(vocab)) {}
  static std::unique_ptr<KeywordRCProvider> from_file(const std::filesystem::path& path);
  std::optional<std::string> answer(const std::string& context, const std::string& question) override;

 private:
  std::map<std::string, std::vector<std::string>> vocab_;
};

class HttpRCProvider final : public RCProvider {
 public:
  explicit HttpRCProvider(provider::JsonHttpClient client) : client_(std::move(client)) {}
  std::optional<std::string> answer(const std::string& context, const std::string& question) override;

 private:
  provider::JsonHttpClient client_;
};

class CachingRCProvider final : public RCProvider {
 public:
  CachingRCProvider(std::shared_ptr<RCProvider> inner, provider::ResponseCache cache,
                    provider::RetryPolicy retry = {});
  std::optional<std::string> answer(const std::string& context, const std::string& question) override;

 private:
  std::shared_ptr<RCProvider> inner_;
  provider::ResponseCache cache_;
  provider::RetryPolicy retry_;
};

// Everything assembly reads: the corpus plus coreference-resolved sentences.
struct AssemblyContext {
  const corpus::Corpus* corpus = nullptr;
  std::map<std::string, extraction::ResolvedVideo> resolved;  // by video id

  const corpus::VideoRecord& video(const std::string& video_id) const;
  const corpus::Segment& segment(const std::string& video_id, int index) const;
  // Resolved sentence when available, else the annotated one.
  std::string sentence(const std::string& video_id, int index) const;
};

GroundedText ground_text(const std::string& sentence, const std::vector<corpus::ObjectAnnotation>& objects,
                         const std::string& verb = {});

GroundedText form_textual_description(const triplets::SegmentTriplet& triplet, const AssemblyContext& ctx);

ActionObject form_action_object_pair(const triplets::SegmentTriplet& triplet);
std::vector<ActionObject> action_object_pairs(const triplets::SegmentTriplet& triplet);

std::vector<std::string> goal_templates(const std::string& recipe_name);
std::vector<std::string> form_goal(const triplets::SegmentTriplet& triplet, const corpus::Corpus& corpus);

struct Preconditions {
  std::vector<std::string> labels;
  bool no_objects = false;
};

Preconditions form_preconditions(const triplets::SegmentTriplet& triplet, const corpus::Corpus& corpus);

struct EffectQuestion {
  std::string kind;  // question word, e.g. "color"
  std::string text;
};

std::vector<EffectQuestion> effect_questions(const std::string& ingredient);

struct Effects {
  std::vector<std::string> phrases;
  corpus::TranscriptWindow window;
  bool no_transcript = false;
};

inline constexpr size_t kMaxEffectTokens = 5;

Effects extract_effects(const triplets::SegmentTriplet& triplet, const corpus::Corpus& corpus, RCProvider& rc);

std::pair<std::string, std::string> form_before_after(const triplets::SegmentTriplet& triplet,
                                                      const AssemblyContext& ctx);

struct Provenance {
  std::string video_id;
  corpus::RecipeId recipe_id;
  triplets::SegmentTriplet triplet;
  std::optional<corpus::FrameRef> image;
  GroundedText text_description;

  bool operator==(const Provenance&) const = default;
};

struct CommonsenseInstance {
  std::string instance_id;
  std::optional<corpus::FrameRef> image;
  GroundedText text_description;
  ActionObject action_object;
  InferenceSet goals;
  InferenceSet preconditions;
  InferenceSet effects;
  InferenceSet before_events;
  InferenceSet after_events;
  std::vector<Provenance> provenance;
  std::set<std::string> flags;  // "text_only", "no_objects", "no_transcript", ...

  bool operator==(const CommonsenseInstance&) const = default;
};

CommonsenseInstance assemble_instance(const triplets::SegmentTriplet& triplet, const AssemblyContext& ctx,
                                      RCProvider& rc);

std::vector<CommonsenseInstance> merge_by_action_object(const std::vector<CommonsenseInstance>& instances);

nlohmann::json instance_to_json(const CommonsenseInstance& inst);
CommonsenseInstance instance_from_json(const nlohmann::json& j);

std::vector<CommonsenseInstance> read_dataset(const std::filesystem::path& jsonl);
void write_dataset(const std::filesystem::path& jsonl, const std::vector<CommonsenseInstance>& instances);

struct StatsReport {
  long videos = 0;
  long images = 0;
  long textual_descriptions = 0;
  long recipe_types = 0;
  long unique_objects = 0;
  long unique_actions = 0;
  long goals = 0;
  long preconditions = 0;
  long effects = 0;
  long before_events = 0;
  long after_events = 0;
  long triplets = 0;
  long instances = 0;
  std::vector<std::string> notes;

  // (label, value) in table order.
  std::vector<std::pair<std::string, long>> rows() const;
  bool operator==(const StatsReport&) const = default;
};

// Row labels, in table order.
const std::vector<std::string>& stats_row_labels();

// Corpus-scale reference counts, for documentation and comparison only.
StatsReport reference_statistics();

StatsReport compute_statistics(const std::vector<CommonsenseInstance>& dataset);
nlohmann::json stats_to_json(const StatsReport& stats);
std::string stats_to_text(const StatsReport& stats);

}  // namespace actionsense::assembly
