#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "actionsense/corpus.hpp"
#include "actionsense/provider.hpp"

namespace actionsense::extraction {

// ---------------------------------------------------------------------------
// Provider interfaces

class CorefProvider {
 public:
  virtual ~CorefProvider() = default;
  // Returns one sentence per input with referring expressions replaced by
  // their antecedents.
  virtual std::vector<std::string> resolve(const std::vector<std::string>& texts) = 0;
};

struct Token {
  std::string text;
  std::string lemma;
  std::string pos;  // Universal POS tag
};

// head == -1 marks the root. Token indices are 0-based.
struct Arc {
  int head = -1;
  int dependent = 0;
  std::string relation;
};

struct ParseResult {
  std::vector<Token> tokens;
  std::vector<Arc> arcs;

  // Throws ProviderError unless every token has exactly one head, there is
  // exactly one root and the arcs are acyclic.
  void validate() const;
};

nlohmann::json parse_to_json(const ParseResult& parse);
ParseResult parse_from_json(const nlohmann::json& j);

class ParseProvider {
 public:
  virtual ~ParseProvider() = default;
  virtual ParseResult parse(const std::string& sentence) = 0;
};

// ---------------------------------------------------------------------------
// Local providers

class IdentityCorefProvider final : public CorefProvider {
 public:
  std::vector<std::string> resolve(const std::vector<std::string>& texts) override { return texts; }
};

// Canned coreference output: exact sentence -> resolved sentence. Sentences
// missing from the table come back unchanged.
class TableCorefProvider final : public CorefProvider {
 public:
  explicit TableCorefProvider(std::map<std::string, std::string> table) : table_(std::move(table)) {}
  static std::unique_ptr<TableCorefProvider> from_file(const std::filesystem::path& path);

  std::vector<std::string> resolve(const std::vector<std::string>& texts) override;

 private:
  std::map<std::string, std::string> table_;
};

// Canned parses keyed by exact sentence text.
class CannedParseProvider final : public ParseProvider {
 public:
  explicit CannedParseProvider(std::map<std::string, ParseResult> table) : table_(std::move(table)) {}
  static std::unique_ptr<CannedParseProvider> from_file(const std::filesystem::path& path);

  ParseResult parse(const std::string& sentence) override;

 private:
  std::map<std::string, ParseResult> table_;
};

// Deterministic lexicon-driven parser used for fixtures and offline runs.
// The lexicon maps POS tags to word forms:
//   {"VERB": {"fried": "fry", "grill": "grill"}, "NOUN": ["tomatoes", "pan"], ...}
// Array entries take their lemma from the form (nouns are singularized).
// Attachment: nouns hang off the nearest preceding verb (obj, or obl when a
// preposition intervenes), noun-noun runs form compounds, later verbs are
// conj of the first verb, which is the root.
class LexiconParseProvider final : public ParseProvider {
 public:
  explicit LexiconParseProvider(const nlohmann::json& lexicon);
  static std::unique_ptr<LexiconParseProvider> from_file(const std::filesystem::path& path);

  ParseResult parse(const std::string& sentence) override;

 private:
  struct Entry {
    std::string lemma;
  };
  std::map<std::string, std::map<std::string, Entry>> by_pos_;  // pos -> form -> entry
};

// Remote providers speaking {task, inputs} -> {outputs}.
class HttpCorefProvider final : public CorefProvider {
 public:
  explicit HttpCorefProvider(provider::JsonHttpClient client) : client_(std::move(client)) {}
  std::vector<std::string> resolve(const std::vector<std::string>& texts) override;

 private:
  provider::JsonHttpClient client_;
};

class HttpParseProvider final : public ParseProvider {
 public:
  explicit HttpParseProvider(provider::JsonHttpClient client) : client_(std::move(client)) {}
  ParseResult parse(const std::string& sentence) override;

 private:
  provider::JsonHttpClient client_;
};

// Disk-cached wrappers. Keys are the SHA-256 of the input text.
class CachingCorefProvider final : public CorefProvider {
 public:
  CachingCorefProvider(std::shared_ptr<CorefProvider> inner, provider::ResponseCache cache,
                       provider::RetryPolicy retry = {});
  std::vector<std::string> resolve(const std::vector<std::string>& texts) override;

 private:
  std::shared_ptr<CorefProvider> inner_;
  provider::ResponseCache cache_;
  provider::RetryPolicy retry_;
};

class CachingParseProvider final : public ParseProvider {
 public:
  CachingParseProvider(std::shared_ptr<ParseProvider> inner, provider::ResponseCache cache,
                       provider::RetryPolicy retry = {});
  ParseResult parse(const std::string& sentence) override;

 private:
  std::shared_ptr<ParseProvider> inner_;
  provider::ResponseCache cache_;
  provider::RetryPolicy retry_;
};

// ---------------------------------------------------------------------------
// Operations

struct ResolvedVideo {
  std::string video_id;
  std::vector<std::string> original;  // one per segment, in segment order
  std::vector<std::string> resolved;
  bool failed = false;                // provider failed; resolved == original
  std::string error;
};

ResolvedVideo resolve_coreferences(const corpus::VideoRecord& video, CorefProvider& provider);

struct VerbIngredientPair {
  std::string verb;
  std::string ingredient;
  std::string video_id;
  int segment_index = 0;
  int verb_token = 0;  // position of the verb in the parsed sentence

  bool operator==(const VerbIngredientPair&) const = default;
};

struct ExtractionOptions {
  // Relations linking a noun to its verb that count as "undergoing" the action.
  std::set<std::string> relations = {"dobj", "obj", "nsubjpass", "nsubj:pass", "obl"};
  // Nouns conjoined to an accepted noun inherit its verb.
  bool propagate_conj = true;
};

std::vector<VerbIngredientPair> extract_verb_ingredient_pairs(
    const std::string& resolved_sentence, ParseProvider& provider, const std::string& video_id,
    int segment_index, const ExtractionOptions& options = {});

// Same, from an already obtained parse.
std::vector<VerbIngredientPair> pairs_from_parse(const ParseResult& parse,
                                                 const std::string& video_id, int segment_index,
                                                 const ExtractionOptions& options = {});

struct LemmaCounts {
  std::map<std::string, int> verb_counts;
  std::map<std::string, int> noun_counts;

  bool operator==(const LemmaCounts&) const = default;
};

LemmaCounts count_lemma_frequencies(const std::vector<VerbIngredientPair>& pairs);

inline constexpr int kDefaultMinCount = 10;

std::vector<VerbIngredientPair> filter_pairs_by_frequency(const std::vector<VerbIngredientPair>& pairs,
                                                          const LemmaCounts& counts,
                                                          int min_count = kDefaultMinCount);

nlohmann::json pair_to_json(const VerbIngredientPair& p);

}  // namespace actionsense::extraction
