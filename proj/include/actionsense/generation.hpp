#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "actionsense/assembly.hpp"
#include "actionsense/provider.hpp"

namespace actionsense::generation {

// Model and decoding defaults.
inline constexpr double kNucleusP = 0.9;
inline constexpr size_t kMaxVisualFeatures = 15;
inline constexpr size_t kMaxSequenceLength = 64;
inline constexpr double kLearningRate = 5e-5;  // for backends that fine-tune
inline constexpr int kBatchSize = 32;
inline constexpr std::uint64_t kDefaultSeed = 13;
inline constexpr int kDefaultSamples = 5;
inline constexpr int kDefaultMaxNewTokens = 16;

enum class InferenceType { kPrecondition, kEffect, kGoal, kBefore, kAfter };

const std::vector<InferenceType>& all_inference_types();
std::string_view inference_type_name(InferenceType type);  // "precondition", ...
InferenceType parse_inference_type(std::string_view name);
char inference_type_letter(InferenceType type);  // p, e, g, b, a
std::string start_token(InferenceType type);     // "<precondition>", ...

// Ground-truth inference strings of one type.
std::vector<std::string> ground_truth(const assembly::CommonsenseInstance& inst, InferenceType type);

struct ModalityMask {
  bool image = false;
  bool text_desc = false;
  bool ao_pair = false;
  bool og = false;

  bool valid() const { return (image || text_desc || ao_pair) && (!og || image); }
  // "Image + TextDesc + AO Pair + OG" style label.
  std::string label() const;
  // Accepts "+"-separated parts in any spacing or case ("image+textdesc+aopair").
  static ModalityMask parse(std::string_view label);
  auto operator<=>(const ModalityMask&) const = default;
};

// The ten input combinations of the visual-modality ablation, in table order.
const std::vector<ModalityMask>& enumerate_modality_combos();

struct PromptSpec {
  InferenceType type = InferenceType::kPrecondition;
  int variant = 1;  // 1..4
  ModalityMask mask{true, true, true, true};

  std::string prompt_id() const;  // "Pp2"
};

std::string build_prompt(const PromptSpec& spec);
std::string build_prompt(InferenceType type, int variant);

// ---------------------------------------------------------------------------
// Vision

using Embedding = std::vector<float>;

struct VisualFeatures {
  Embedding global;
  std::vector<std::pair<std::string, Embedding>> objects;  // ("[ObjectK]", vector)

  size_t size() const { return 1 + objects.size(); }
  // Feature index of an object tag (global is 0), or -1.
  int index_of(const std::string& tag) const;
};

class VisionProvider {
 public:
  virtual ~VisionProvider() = default;
  // One global vector plus at most kMaxVisualFeatures - 1 object vectors.
  virtual VisualFeatures features(const corpus::FrameRef& image,
                                  const std::vector<std::pair<std::string, corpus::ObjectAnnotation>>& objects) = 0;
};

// Deterministic pseudo-features derived from SHA-256 of the frame path, the
// tag and the boxes. Stands in for a region feature extractor.
class HashVisionProvider final : public VisionProvider {
 public:
  explicit HashVisionProvider(size_t dim = 16) : dim_(dim) {}
  VisualFeatures features(const corpus::FrameRef& image,
                          const std::vector<std::pair<std::string, corpus::ObjectAnnotation>>& objects) override;

 private:
  size_t dim_;
};

// ---------------------------------------------------------------------------
// Sequences

inline constexpr const char* kImageStart = "<s_img>";
inline constexpr const char* kImageEnd = "<e_img>";
inline constexpr const char* kEventStart = "<s_evt>";
inline constexpr const char* kEventEnd = "<e_evt>";
inline constexpr const char* kPairStart = "<s_ao>";
inline constexpr const char* kPairEnd = "<e_ao>";
inline constexpr const char* kPromptStart = "<s_prompt>";
inline constexpr const char* kPromptEnd = "<e_prompt>";
inline constexpr const char* kInferenceEnd = "<e_inf>";
inline constexpr const char* kEndOfSequence = "<eos>";

struct SequenceToken {
  std::string text;
  std::string field;                 // "image", "event", "ao", "prompt", "start"
  std::optional<int> feature_index;  // visual slot or grounded object tag

  bool operator==(const SequenceToken&) const = default;
};

struct TokenSequence {
  std::vector<SequenceToken> tokens;
  std::optional<VisualFeatures> visual;
  std::string start;        // last token: inference-type or field start token
  size_t dropped_event = 0;   // event tokens removed by truncation
  size_t dropped_objects = 0; // object slots removed by truncation

  size_t size() const { return tokens.size(); }
  std::vector<std::string> texts() const;
  std::string text() const;  // tokens joined by single spaces
  // Tokens of one field, delimiters included.
  std::vector<std::string> field(const std::string& name) const;
  // Field names in order of appearance.
  std::vector<std::string> fields() const;
};

// Lowercased words with punctuation stripped; "[ObjectK]" tags kept verbatim.
std::vector<std::string> sequence_words(std::string_view text);

struct ComposeOptions {
  size_t max_length = kMaxSequenceLength;
  // Text-only backends: visual slots are serialized as object labels.
  bool visual_as_text = false;
};

TokenSequence compose_input_sequence(const assembly::CommonsenseInstance& inst, const PromptSpec& spec,
                                     VisionProvider* vision, const ComposeOptions& options = {});

// Conditioning for the TP auxiliary terms: the textual description given the
// image, and the action-object pair given the image and the description.
enum class TpTarget { kTextDescription, kActionObject };
TokenSequence compose_tp_sequence(const assembly::CommonsenseInstance& inst, TpTarget target, bool og,
                                  VisionProvider* vision, const ComposeOptions& options = {});
std::string tp_target_text(const assembly::CommonsenseInstance& inst, TpTarget target, bool og);

nlohmann::json sequence_to_json(const TokenSequence& seq);

// ---------------------------------------------------------------------------
// Language models

struct SampleParams {
  double nucleus_p = kNucleusP;
  int max_new = kDefaultMaxNewTokens;
  int n = kDefaultSamples;
  std::uint64_t seed = kDefaultSeed;
};

class LMProvider {
 public:
  virtual ~LMProvider() = default;
  virtual std::vector<std::string> sample(const TokenSequence& seq, const SampleParams& params) = 0;
  // One log-probability (natural log) per continuation token.
  virtual std::vector<double> logprobs(const TokenSequence& seq, const std::vector<std::string>& continuation) = 0;
  // False for backends that accept text only.
  virtual bool accepts_visual_prefix() const { return true; }
};

// Samples one token from `dist` restricted to its nucleus: the smallest
// prefix, by descending probability then token text, whose mass reaches p.
// p <= 0 degenerates to the modal token.
std::string nucleus_sample(const std::vector<std::pair<std::string, double>>& dist, double p, std::mt19937_64& rng);

// Uniform over a vocabulary of `vocab_size` tokens "w0".."w{V-1}".
class UniformLM final : public LMProvider {
 public:
  explicit UniformLM(size_t vocab_size);
  std::vector<std::string> sample(const TokenSequence& seq, const SampleParams& params) override;
  std::vector<double> logprobs(const TokenSequence& seq, const std::vector<std::string>& continuation) override;

 private:
  size_t vocab_size_;
};

// Context-free token probabilities; tokens missing from the table get `floor`.
class TableLM final : public LMProvider {
 public:
  explicit TableLM(std::map<std::string, double> probs, double floor = 1e-6);
  std::vector<std::string> sample(const TokenSequence& seq, const SampleParams& params) override;
  std::vector<double> logprobs(const TokenSequence& seq, const std::vector<std::string>& continuation) override;

 private:
  std::map<std::string, double> probs_;
  double floor_;
};

// Returns canned continuations keyed by inference type name ("*" matches
// any), cycling when n exceeds the list. Scoring is uniform over `vocab_size`.
class CannedLM final : public LMProvider {
 public:
  explicit CannedLM(std::map<std::string, std::vector<std::string>> continuations, size_t vocab_size = 1000);
  static std::unique_ptr<CannedLM> from_file(const std::filesystem::path& path);
  std::vector<std::string> sample(const TokenSequence& seq, const SampleParams& params) override;
  std::vector<double> logprobs(const TokenSequence& seq, const std::vector<std::string>& continuation) override;

 private:
  std::map<std::string, std::vector<std::string>> continuations_;
  size_t vocab_size_;
};

// Offline stand-in for a conditional LM: a per-type smoothed unigram model fit
// on training inferences, interpolated with the words of the input fields.
// The context term makes scores depend on which modalities are present.
class ContextUnigramLM final : public LMProvider {
 public:
  struct Options {
    double smoothing = 0.1;       // additive, per token
    double context_weight = 0.3;  // interpolation weight of the context term
  };

  ContextUnigramLM(const std::vector<assembly::CommonsenseInstance>& training, Options options);
  explicit ContextUnigramLM(const std::vector<assembly::CommonsenseInstance>& training)
      : ContextUnigramLM(training, Options{}) {}

  std::vector<std::string> sample(const TokenSequence& seq, const SampleParams& params) override;
  std::vector<double> logprobs(const TokenSequence& seq, const std::vector<std::string>& continuation) override;

  // Next-token distribution for `seq` over the training vocabulary and the
  // context words, sorted by token. The mass left over (below 1) belongs to
  // unseen tokens, each of which scores as one unknown slot.
  std::vector<std::pair<std::string, double>> distribution(const TokenSequence& seq) const;

 private:
  double probability(const std::string& type, const std::map<std::string, double>& context, double context_total,
                     const std::string& token) const;
  std::map<std::string, double> context_counts(const TokenSequence& seq, double& total) const;

  Options options_;
  std::map<std::string, std::map<std::string, double>> counts_;  // type -> token -> count
  std::map<std::string, double> totals_;
  std::vector<std::string> vocab_;  // sorted, includes kInferenceEnd
};

// {op, sequence:{text_fields, visual_refs}, params} -> {texts} | {logprobs}
class HttpLM final : public LMProvider {
 public:
  HttpLM(provider::JsonHttpClient client, bool visual_prefix) : client_(std::move(client)), visual_prefix_(visual_prefix) {}
  std::vector<std::string> sample(const TokenSequence& seq, const SampleParams& params) override;
  std::vector<double> logprobs(const TokenSequence& seq, const std::vector<std::string>& continuation) override;
  bool accepts_visual_prefix() const override { return visual_prefix_; }

 private:
  provider::JsonHttpClient client_;
  bool visual_prefix_;
};

class CachingLM final : public LMProvider {
 public:
  CachingLM(std::shared_ptr<LMProvider> inner, provider::ResponseCache cache, provider::RetryPolicy retry = {});
  std::vector<std::string> sample(const TokenSequence& seq, const SampleParams& params) override;
  std::vector<double> logprobs(const TokenSequence& seq, const std::vector<std::string>& continuation) override;
  bool accepts_visual_prefix() const override { return inner_->accepts_visual_prefix(); }

 private:
  std::shared_ptr<LMProvider> inner_;
  provider::ResponseCache cache_;
  provider::RetryPolicy retry_;
};

// ---------------------------------------------------------------------------
// Operations

// Text of a continuation up to the first end-of-field marker, trimmed.
std::string strip_continuation(std::string_view text);

std::vector<std::string> generate_inferences(const assembly::CommonsenseInstance& inst, const PromptSpec& spec,
                                             LMProvider& lm, const SampleParams& params,
                                             VisionProvider* vision = nullptr);

struct ScoredCandidate {
  std::string text;
  double nll = std::numeric_limits<double>::quiet_NaN();  // nats per token
  double perplexity = std::numeric_limits<double>::quiet_NaN();
  bool is_ground_truth = false;
  size_t tokens = 0;

  bool scored() const { return !std::isnan(nll); }
};

// Tokens a candidate is scored on.
std::vector<std::string> continuation_tokens(std::string_view candidate);

ScoredCandidate score_candidate(const assembly::CommonsenseInstance& inst, const PromptSpec& spec,
                                const std::string& candidate, LMProvider& lm, VisionProvider* vision = nullptr);

// Scores `candidate` as a continuation of an already composed sequence.
ScoredCandidate score_continuation(const TokenSequence& seq, const std::string& candidate, LMProvider& lm);

struct TrainingExample {
  const assembly::CommonsenseInstance* instance = nullptr;
  PromptSpec spec;
  std::string target;
};

struct LossTerm {
  std::string instance_id;
  std::string kind;  // "inference", "text", "pair"
  double nll = 0.0;
};

struct LossResult {
  double loss = 0.0;
  std::vector<LossTerm> terms;
};

// Mean over the batch of the per-example token-mean NLL. With `tp` each
// example adds the NLL of its textual description (given v) and its
// action-object pair (given t, v).
LossResult seq2seq_loss(const std::vector<TrainingExample>& batch, LMProvider& lm, bool tp = false,
                        VisionProvider* vision = nullptr);

}  // namespace actionsense::generation
