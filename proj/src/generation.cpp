#include "actionsense/generation.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <numeric>

#include "actionsense/error.hpp"
#include "actionsense/text.hpp"

namespace actionsense::generation {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Inference types and prompts

const std::vector<InferenceType>& all_inference_types() {
  static const std::vector<InferenceType> types = {InferenceType::kPrecondition, InferenceType::kEffect,
                                                   InferenceType::kGoal, InferenceType::kBefore,
                                                   InferenceType::kAfter};
  return types;
}

std::string_view inference_type_name(InferenceType type) {
  switch (type) {
    case InferenceType::kPrecondition: return "precondition";
    case InferenceType::kEffect: return "effect";
    case InferenceType::kGoal: return "goal";
    case InferenceType::kBefore: return "before";
    case InferenceType::kAfter: return "after";
  }
  return "unknown";
}

InferenceType parse_inference_type(std::string_view name) {
  std::string n = text::to_lower(text::trim(name));
  for (auto t : all_inference_types()) {
    if (n == inference_type_name(t)) return t;
  }
  if (n == "preconditions") return InferenceType::kPrecondition;
  if (n == "effects") return InferenceType::kEffect;
  if (n == "goals") return InferenceType::kGoal;
  throw Error(ErrorCode::kInvalidArgument, "unknown inference type '" + std::string(name) + "'");
}

char inference_type_letter(InferenceType type) { return inference_type_name(type)[0]; }

std::string start_token(InferenceType type) { return "<" + std::string(inference_type_name(type)) + ">"; }

std::vector<std::string> ground_truth(const assembly::CommonsenseInstance& inst, InferenceType type) {
  switch (type) {
    case InferenceType::kPrecondition: return inst.preconditions.values();
    case InferenceType::kEffect: return inst.effects.values();
    case InferenceType::kGoal: return inst.goals.values();
    case InferenceType::kBefore: return inst.before_events.values();
    case InferenceType::kAfter: return inst.after_events.values();
  }
  return {};
}

std::string ModalityMask::label() const {
  std::vector<std::string> parts;
  if (image) parts.emplace_back("Image");
  if (text_desc) parts.emplace_back("TextDesc");
  if (ao_pair) parts.emplace_back("AO Pair");
  if (og) parts.emplace_back("OG");
  return text::join(parts, " + ");
}

ModalityMask ModalityMask::parse(std::string_view label) {
  ModalityMask m;
  std::string s(label);
  size_t start = 0;
  while (start <= s.size()) {
    size_t plus = s.find('+', start);
    std::string part = s.substr(start, plus == std::string::npos ? std::string::npos : plus - start);
    std::string key;
    for (char c : part) {
      if (!std::isspace(static_cast<unsigned char>(c)) && c != '_' && c != '-') {
        key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
    }
    if (key == "image") {
      m.image = true;
    } else if (key == "textdesc") {
      m.text_desc = true;
    } else if (key == "aopair" || key == "ao") {
      m.ao_pair = true;
    } else if (key == "og") {
      m.og = true;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown modality '" + text::trim(part) + "' in '" + s + "'");
    }
    if (plus == std::string::npos) break;
    start = plus + 1;
  }
  if (!m.valid()) throw Error(ErrorCode::kInvalidArgument, "invalid modality combination '" + s + "'");
  return m;
}

const std::vector<ModalityMask>& enumerate_modality_combos() {
  // {image, text_desc, ao_pair, og}
  static const std::vector<ModalityMask> combos = {
      {true, false, false, false},  // Image
      {true, false, false, true},   // Image + OG
      {false, false, true, false},  // AO Pair
      {false, true, false, false},  // TextDesc
      {false, true, true, false},   // AO Pair + TextDesc
      {true, true, false, false},   // Image + TextDesc
      {true, false, true, false},   // Image + AO Pair
      {true, true, true, false},    // Image + TextDesc + AO Pair
      {true, true, false, true},    // Image + TextDesc + OG
      {true, true, true, true},     // Image + TextDesc + AO Pair + OG
  };
  return combos;
}

std::string PromptSpec::prompt_id() const {
  return std::string("P") + inference_type_letter(type) + std::to_string(variant);
}

std::string build_prompt(InferenceType type, int variant) {
  static const std::map<InferenceType, std::array<const char*, 4>> prompts = {
      {InferenceType::kPrecondition,
       {"A set of concepts that are required to perform this action are",
        "Describe a list of necessary conditions required to execute this action",
        "What are some pre-requisites related to this action?",
        "List down things without which one cannot perform this action"}},
      {InferenceType::kEffect,
       {"Some results of performing this action include",
        "Describe what changes will be caused by performing this action",
        "What effects will be produced as a result of performing this action?",
        "List down the consequences if one performs this action"}},
      {InferenceType::kGoal,
       {"Some objectives related to this action include",
        "Describe intents of people that are performing this action",
        "What are some high-level goals associated with this action?",
        "List down the recipes one can prepare which requires performing this action"}},
      {InferenceType::kBefore,
       {"Some actions that person must have performed before this action are",
        "Describe which actions might have taken place in past",
        "What are some actions that typically take place before this action?",
        "List down some actions that preceded this action"}},
      {InferenceType::kAfter,
       {"Some actions that person will perform after this action are",
        "Describe which actions are likely to take place in future",
        "What are some actions that typically take place after this action?",
        "List down some actions that will follow this action"}},
  };
  if (variant < 1 || variant > 4) {
    throw Error(ErrorCode::kUnknownVariant, "variant " + std::to_string(variant) + " for " +
                                                std::string(inference_type_name(type)) + " (expected 1..4)");
  }
  return prompts.at(type)[static_cast<size_t>(variant - 1)];
}

std::string build_prompt(const PromptSpec& spec) { return build_prompt(spec.type, spec.variant); }

// ---------------------------------------------------------------------------
// Vision

int VisualFeatures::index_of(const std::string& tag) const {
  for (size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].first == tag) return static_cast<int>(i + 1);
  }
  return -1;
}

namespace {

Embedding hashed_embedding(const std::string& seed, size_t dim) {
  Embedding out;
  out.reserve(dim);
  for (int block = 0; out.size() < dim; ++block) {
    std::string hex = text::sha256_hex(seed + "#" + std::to_string(block));
    for (size_t i = 0; i + 1 < hex.size() && out.size() < dim; i += 2) {
      int byte = std::stoi(hex.substr(i, 2), nullptr, 16);
      out.push_back(static_cast<float>(byte) / 127.5f - 1.0f);
    }
  }
  return out;
}

}  // namespace

VisualFeatures HashVisionProvider::features(
    const corpus::FrameRef& image, const std::vector<std::pair<std::string, corpus::ObjectAnnotation>>& objects) {
  VisualFeatures vf;
  const std::string base = image.path + "@" + std::to_string(image.frame_index);
  vf.global = hashed_embedding(base, dim_);
  for (const auto& [tag, obj] : objects) {
    if (vf.size() >= kMaxVisualFeatures) break;
    std::string key = base + "|" + tag + "|" + obj.label;
    for (const auto& b : obj.boxes) {
      key += "|" + std::to_string(b.x1) + "," + std::to_string(b.y1) + "," + std::to_string(b.x2) + "," +
             std::to_string(b.y2);
    }
    vf.objects.emplace_back(tag, hashed_embedding(key, dim_));
  }
  return vf;
}

// ---------------------------------------------------------------------------
// Sequences

std::vector<std::string> TokenSequence::texts() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

std::string TokenSequence::text() const { return text::join(texts(), " "); }

std::vector<std::string> TokenSequence::field(const std::string& name) const {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    if (t.field == name) out.push_back(t.text);
  }
  return out;
}

std::vector<std::string> TokenSequence::fields() const {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    if (out.empty() || out.back() != t.field) out.push_back(t.field);
  }
  return out;
}

namespace {

bool is_object_tag(std::string_view w) {
  if (w.size() < 9 || w.substr(0, 7) != "[Object" || w.back() != ']') return false;
  for (size_t i = 7; i + 1 < w.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(w[i]))) return false;
  }
  return true;
}

bool is_special(const std::string& w) { return w.size() > 2 && w.front() == '<' && w.back() == '>'; }

}  // namespace

std::vector<std::string> sequence_words(std::string_view input) {
  std::vector<std::string> out;
  for (const auto& raw : text::split_whitespace(input)) {
    size_t b = 0;
    size_t e = raw.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(raw[b])) && raw[b] != '[') ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(raw[e - 1])) && raw[e - 1] != ']') --e;
    std::string w = raw.substr(b, e - b);
    if (w.empty()) continue;
    if (is_object_tag(w)) {
      out.push_back(w);
      continue;
    }
    for (const auto& t : text::tokenize(w)) out.push_back(t);
  }
  return out;
}

namespace {

struct Blocks {
  std::vector<SequenceToken> image;
  std::vector<SequenceToken> event;  // without delimiters
  bool has_event = false;
  std::vector<SequenceToken> ao;
  std::vector<SequenceToken> prompt;
  std::string start;
  size_t object_slots = 0;  // trailing object slots inside `image` (before <e_img>)
  std::map<std::string, int> tag_features;
};

std::vector<std::pair<std::string, corpus::ObjectAnnotation>> bound_objects(const assembly::CommonsenseInstance& inst) {
  std::vector<std::pair<std::string, corpus::ObjectAnnotation>> out;
  for (const auto& tag : inst.text_description.tags()) {
    if (out.size() + 1 >= kMaxVisualFeatures) break;
    out.emplace_back(tag, inst.text_description.bindings.at(tag));
  }
  return out;
}

std::string label_token(const std::string& label) {
  std::string out = text::join(text::tokenize(label), "_");
  return out.empty() ? "object" : out;
}

void build_image_block(const assembly::CommonsenseInstance& inst, bool og, VisionProvider* vision,
                       const ComposeOptions& options, Blocks& b, std::optional<VisualFeatures>& visual) {
  if (!inst.image) {
    throw Error(ErrorCode::kMissingModality, "instance " + inst.instance_id + " has no image");
  }
  auto objects = bound_objects(inst);
  if (vision) {
    visual = vision->features(*inst.image, objects);
    if (visual->size() > kMaxVisualFeatures) {
      throw Error(ErrorCode::kProviderError, "vision provider returned more than the feature cap");
    }
  }
  b.image.push_back({kImageStart, "image", std::nullopt});
  b.image.push_back({options.visual_as_text ? "image" : "<v0>", "image", 0});
  if (og) {
    for (size_t k = 0; k < objects.size(); ++k) {
      const auto& [tag, obj] = objects[k];
      int index = static_cast<int>(k + 1);
      if (visual) {
        index = visual->index_of(tag);
        if (index < 0) continue;
      }
      b.image.push_back({options.visual_as_text ? label_token(obj.label) : tag, "image", index});
      b.tag_features[tag] = index;
      ++b.object_slots;
    }
  }
  b.image.push_back({kImageEnd, "image", std::nullopt});
}

void build_event_block(const assembly::CommonsenseInstance& inst, bool og, const Blocks& b, Blocks& out) {
  std::string body = og ? inst.text_description.text : inst.text_description.plain();
  auto words = sequence_words(body);
  if (words.empty()) {
    throw Error(ErrorCode::kMissingModality, "instance " + inst.instance_id + " has no textual description");
  }
  out.has_event = true;
  for (const auto& w : words) {
    std::optional<int> link;
    if (og) {
      if (auto it = b.tag_features.find(w); it != b.tag_features.end()) link = it->second;
    }
    out.event.push_back({w, "event", link});
  }
}

void build_ao_block(const assembly::CommonsenseInstance& inst, Blocks& b) {
  const auto& ao = inst.action_object;
  if (ao.verb.empty() || ao.ingredient.empty()) {
    throw Error(ErrorCode::kMissingModality, "instance " + inst.instance_id + " has no action-object pair");
  }
  b.ao.push_back({kPairStart, "ao", std::nullopt});
  for (const auto& w : sequence_words(ao.verb + " " + ao.ingredient)) b.ao.push_back({w, "ao", std::nullopt});
  b.ao.push_back({kPairEnd, "ao", std::nullopt});
}

size_t block_total(const Blocks& b) {
  return b.image.size() + (b.has_event ? b.event.size() + 2 : 0) + b.ao.size() + b.prompt.size() + 1;
}

TokenSequence finish(Blocks b, std::optional<VisualFeatures> visual, const ComposeOptions& options) {
  TokenSequence seq;
  const size_t fixed_prompt = b.prompt.size() + 1;
  if (fixed_prompt > options.max_length) {
    throw Error(ErrorCode::kSequenceOverflow, "prompt alone needs " + std::to_string(fixed_prompt) +
                                                  " tokens (limit " + std::to_string(options.max_length) + ")");
  }
  // event words go first, from the left, then object slots from the right
  while (block_total(b) > options.max_length && !b.event.empty()) {
    b.event.erase(b.event.begin());
    ++seq.dropped_event;
  }
  while (block_total(b) > options.max_length && b.object_slots > 0) {
    auto slot = b.image.end() - 2;
    std::optional<int> removed = slot->feature_index;
    b.image.erase(slot);
    --b.object_slots;
    ++seq.dropped_objects;
    for (auto& t : b.event) {
      if (t.feature_index == removed) t.feature_index.reset();
    }
    std::erase_if(b.tag_features, [&](const auto& e) { return e.second == removed; });
  }
  if (block_total(b) > options.max_length) {
    throw Error(ErrorCode::kSequenceOverflow, "required fields need " + std::to_string(block_total(b)) +
                                                  " tokens (limit " + std::to_string(options.max_length) + ")");
  }
  auto append = [&](const std::vector<SequenceToken>& ts) { seq.tokens.insert(seq.tokens.end(), ts.begin(), ts.end()); };
  append(b.image);
  if (b.has_event) {
    seq.tokens.push_back({kEventStart, "event", std::nullopt});
    append(b.event);
    seq.tokens.push_back({kEventEnd, "event", std::nullopt});
  }
  append(b.ao);
  append(b.prompt);
  seq.tokens.push_back({b.start, "start", std::nullopt});
  seq.start = b.start;
  seq.visual = std::move(visual);
  return seq;
}

}  // namespace

TokenSequence compose_input_sequence(const assembly::CommonsenseInstance& inst, const PromptSpec& spec,
                                     VisionProvider* vision, const ComposeOptions& options) {
  if (!spec.mask.valid()) {
    throw Error(ErrorCode::kInvalidArgument, "invalid modality mask '" + spec.mask.label() + "'");
  }
  const std::string prompt = build_prompt(spec);
  Blocks b;
  std::optional<VisualFeatures> visual;
  if (spec.mask.image) build_image_block(inst, spec.mask.og, vision, options, b, visual);
  if (spec.mask.text_desc) build_event_block(inst, spec.mask.og && spec.mask.image, b, b);
  if (spec.mask.ao_pair) build_ao_block(inst, b);
  b.prompt.push_back({kPromptStart, "prompt", std::nullopt});
  for (const auto& w : text::split_whitespace(prompt)) b.prompt.push_back({w, "prompt", std::nullopt});
  b.prompt.push_back({kPromptEnd, "prompt", std::nullopt});
  b.start = start_token(spec.type);
  return finish(std::move(b), std::move(visual), options);
}

TokenSequence compose_tp_sequence(const assembly::CommonsenseInstance& inst, TpTarget target, bool og,
                                  VisionProvider* vision, const ComposeOptions& options) {
  Blocks b;
  std::optional<VisualFeatures> visual;
  build_image_block(inst, og, vision, options, b, visual);
  if (target == TpTarget::kActionObject) {
    build_event_block(inst, og, b, b);
    b.start = kPairStart;
  } else {
    b.start = kEventStart;
  }
  return finish(std::move(b), std::move(visual), options);
}

std::string tp_target_text(const assembly::CommonsenseInstance& inst, TpTarget target, bool og) {
  if (target == TpTarget::kActionObject) return inst.action_object.verb + " " + inst.action_object.ingredient;
  return og ? inst.text_description.text : inst.text_description.plain();
}

json sequence_to_json(const TokenSequence& seq) {
  json fields = json::object();
  json refs = json::array();
  for (size_t i = 0; i < seq.tokens.size(); ++i) {
    const auto& t = seq.tokens[i];
    fields[t.field].push_back(t.text);
    if (t.feature_index) refs.push_back({{"token", i}, {"feature", *t.feature_index}});
  }
  json j = {{"tokens", seq.texts()}, {"text_fields", fields}, {"visual_refs", refs}, {"start", seq.start}};
  if (seq.visual) {
    json feats = json::array();
    feats.push_back(seq.visual->global);
    for (const auto& [tag, v] : seq.visual->objects) feats.push_back(v);
    j["features"] = feats;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t request_seed(std::uint64_t seed, const TokenSequence& seq, int index) {
  return seed ^ text::fnv1a64(seq.text()) ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(index + 1));
}

std::string type_key(const TokenSequence& seq) {
  if (seq.start.size() > 2 && seq.start.front() == '<' && seq.start.back() == '>') {
    return seq.start.substr(1, seq.start.size() - 2);
  }
  return seq.start;
}

}  // namespace

std::string nucleus_sample(const std::vector<std::pair<std::string, double>>& dist, double p, std::mt19937_64& rng) {
  std::vector<std::pair<std::string, double>> sorted;
  double total = 0.0;
  for (const auto& [tok, prob] : dist) {
    if (prob > 0.0) {
      sorted.emplace_back(tok, prob);
      total += prob;
    }
  }
  if (sorted.empty()) throw Error(ErrorCode::kInvalidArgument, "empty distribution");
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  size_t keep = 1;
  double mass = sorted[0].second;
  while (keep < sorted.size() && mass < p * total) {
    mass += sorted[keep].second;
    ++keep;
  }
  double u = unit_uniform(rng) * mass;
  for (size_t i = 0; i < keep; ++i) {
    u -= sorted[i].second;
    if (u < 0.0) return sorted[i].first;
  }
  return sorted[keep - 1].first;
}

UniformLM::UniformLM(size_t vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size == 0) throw Error(ErrorCode::kInvalidArgument, "vocabulary size must be positive");
}

std::vector<std::string> UniformLM::sample(const TokenSequence& seq, const SampleParams& params) {
  std::vector<std::string> out;
  for (int i = 0; i < params.n; ++i) {
    std::mt19937_64 rng(request_seed(params.seed, seq, i));
    std::vector<std::string> words;
    for (int k = 0; k < std::max(1, params.max_new); ++k) words.push_back("w" + std::to_string(rng() % vocab_size_));
    out.push_back(text::join(words, " "));
  }
  return out;
}

std::vector<double> UniformLM::logprobs(const TokenSequence&, const std::vector<std::string>& continuation) {
  return std::vector<double>(continuation.size(), -std::log(static_cast<double>(vocab_size_)));
}

TableLM::TableLM(std::map<std::string, double> probs, double floor) : probs_(std::move(probs)), floor_(floor) {
  for (const auto& [tok, p] : probs_) {
    if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "probability of '" + tok + "' not in (0,1]");
  }
}

std::vector<std::string> TableLM::sample(const TokenSequence& seq, const SampleParams& params) {
  std::vector<std::pair<std::string, double>> dist(probs_.begin(), probs_.end());
  std::vector<std::string> out;
  for (int i = 0; i < params.n; ++i) {
    std::mt19937_64 rng(request_seed(params.seed, seq, i));
    std::vector<std::string> words;
    for (int k = 0; k < std::max(1, params.max_new); ++k) {
      std::string tok = nucleus_sample(dist, params.nucleus_p, rng);
      if (tok == kInferenceEnd || tok == kEndOfSequence) break;
      words.push_back(tok);
    }
    out.push_back(text::join(words, " "));
  }
  return out;
}

std::vector<double> TableLM::logprobs(const TokenSequence&, const std::vector<std::string>& continuation) {
  std::vector<double> out;
  for (const auto& tok : continuation) {
    auto it = probs_.find(tok);
    out.push_back(std::log(it == probs_.end() ? floor_ : it->second));
  }
  return out;
}

CannedLM::CannedLM(std::map<std::string, std::vector<std::string>> continuations, size_t vocab_size)
    : continuations_(std::move(continuations)), vocab_size_(vocab_size) {}

std::unique_ptr<CannedLM> CannedLM::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  size_t vocab = doc.value("vocab_size", static_cast<size_t>(1000));
  std::map<std::string, std::vector<std::string>> table;
  for (const auto& [k, v] : doc.at("continuations").items()) table[k] = v.get<std::vector<std::string>>();
  return std::make_unique<CannedLM>(std::move(table), vocab);
}

std::vector<std::string> CannedLM::sample(const TokenSequence& seq, const SampleParams& params) {
  auto it = continuations_.find(type_key(seq));
  if (it == continuations_.end()) it = continuations_.find("*");
  if (it == continuations_.end() || it->second.empty()) {
    throw Error(ErrorCode::kProviderError, "no canned continuation for " + seq.start);
  }
  std::vector<std::string> out;
  for (int i = 0; i < params.n; ++i) out.push_back(it->second[static_cast<size_t>(i) % it->second.size()]);
  return out;
}

std::vector<double> CannedLM::logprobs(const TokenSequence&, const std::vector<std::string>& continuation) {
  return std::vector<double>(continuation.size(), -std::log(static_cast<double>(vocab_size_)));
}

ContextUnigramLM::ContextUnigramLM(const std::vector<assembly::CommonsenseInstance>& training, Options options)
    : options_(options) {
  std::set<std::string> vocab = {kInferenceEnd};
  for (const auto& inst : training) {
    for (auto type : all_inference_types()) {
      const std::string key(inference_type_name(type));
      for (const auto& s : ground_truth(inst, type)) {
        auto toks = continuation_tokens(s);
        toks.emplace_back(kInferenceEnd);
        for (const auto& t : toks) {
          counts_[key][t] += 1.0;
          totals_[key] += 1.0;
          vocab.insert(t);
        }
      }
    }
  }
  vocab_.assign(vocab.begin(), vocab.end());
}

std::map<std::string, double> ContextUnigramLM::context_counts(const TokenSequence& seq, double& total) const {
  std::map<std::string, double> ctx;
  total = 0.0;
  for (const auto& t : seq.tokens) {
    if (t.field != "event" && t.field != "ao" && t.field != "image") continue;
    if (is_special(t.text)) continue;
    ctx[t.text] += 1.0;
    total += 1.0;
  }
  return ctx;
}

double ContextUnigramLM::probability(const std::string& type, const std::map<std::string, double>& context,
                                     double context_total, const std::string& token) const {
  // support: training vocabulary, context words outside it, one unknown slot
  double v = static_cast<double>(vocab_.size() + 1);
  for (const auto& [tok, c] : context) {
    if (!std::binary_search(vocab_.begin(), vocab_.end(), tok)) v += 1.0;
  }
  double count = 0.0;
  double total = 0.0;
  if (auto it = counts_.find(type); it != counts_.end()) {
    total = totals_.at(type);
    if (auto c = it->second.find(token); c != it->second.end()) count = c->second;
  }
  double base = (count + options_.smoothing) / (total + options_.smoothing * v);
  if (context_total <= 0.0) return base;
  double ctx = 0.0;
  if (auto c = context.find(token); c != context.end()) ctx = c->second / context_total;
  return (1.0 - options_.context_weight) * base + options_.context_weight * ctx;
}

std::vector<std::pair<std::string, double>> ContextUnigramLM::distribution(const TokenSequence& seq) const {
  double ctx_total = 0.0;
  auto ctx = context_counts(seq, ctx_total);
  std::set<std::string> support(vocab_.begin(), vocab_.end());
  for (const auto& [tok, c] : ctx) support.insert(tok);
  const std::string type = type_key(seq);
  std::vector<std::pair<std::string, double>> out;
  for (const auto& tok : support) out.emplace_back(tok, probability(type, ctx, ctx_total, tok));
  return out;
}

std::vector<std::string> ContextUnigramLM::sample(const TokenSequence& seq, const SampleParams& params) {
  auto dist = distribution(seq);
  auto first = dist;
  std::erase_if(first, [](const auto& e) { return e.first == kInferenceEnd; });
  std::vector<std::string> out;
  for (int i = 0; i < params.n; ++i) {
    std::mt19937_64 rng(request_seed(params.seed, seq, i));
    std::vector<std::string> words;
    for (int k = 0; k < std::max(1, params.max_new); ++k) {
      std::string tok = nucleus_sample(k == 0 ? first : dist, params.nucleus_p, rng);
      if (tok == kInferenceEnd) break;
      words.push_back(tok);
    }
    out.push_back(text::join(words, " "));
  }
  return out;
}

std::vector<double> ContextUnigramLM::logprobs(const TokenSequence& seq, const std::vector<std::string>& continuation) {
  double ctx_total = 0.0;
  auto ctx = context_counts(seq, ctx_total);
  const std::string type = type_key(seq);
  std::vector<double> out;
  for (const auto& tok : continuation) out.push_back(std::log(probability(type, ctx, ctx_total, tok)));
  return out;
}

std::vector<std::string> HttpLM::sample(const TokenSequence& seq, const SampleParams& params) {
  json body = {{"op", "sample"},
               {"sequence", sequence_to_json(seq)},
               {"params", {{"p", params.nucleus_p}, {"n", params.n}, {"max_new", params.max_new}, {"seed", params.seed}}}};
  json res = client_.post(body);
  try {
    return res.at("texts").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProviderError, std::string("bad sample response: ") + e.what());
  }
}

std::vector<double> HttpLM::logprobs(const TokenSequence& seq, const std::vector<std::string>& continuation) {
  json body = {{"op", "logprobs"}, {"sequence", sequence_to_json(seq)}, {"continuation", continuation}, {"params", json::object()}};
  json res = client_.post(body);
  try {
    return res.at("logprobs").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProviderError, std::string("bad logprobs response: ") + e.what());
  }
}

CachingLM::CachingLM(std::shared_ptr<LMProvider> inner, provider::ResponseCache cache, provider::RetryPolicy retry)
    : inner_(std::move(inner)), cache_(std::move(cache)), retry_(retry) {}

std::vector<std::string> CachingLM::sample(const TokenSequence& seq, const SampleParams& params) {
  const std::string key =
      json{{"op", "sample"},
           {"sequence", sequence_to_json(seq)},
           {"params", {{"p", params.nucleus_p}, {"n", params.n}, {"max_new", params.max_new}, {"seed", params.seed}}}}
          .dump();
  if (auto hit = cache_.get("lm", key)) return hit->get<std::vector<std::string>>();
  auto out = provider::with_retries(retry_, [&] { return inner_->sample(seq, params); });
  cache_.put("lm", key, out);
  return out;
}

std::vector<double> CachingLM::logprobs(const TokenSequence& seq, const std::vector<std::string>& continuation) {
  const std::string key =
      json{{"op", "logprobs"}, {"sequence", sequence_to_json(seq)}, {"continuation", continuation}}.dump();
  if (auto hit = cache_.get("lm", key)) return hit->get<std::vector<double>>();
  auto out = provider::with_retries(retry_, [&] { return inner_->logprobs(seq, continuation); });
  cache_.put("lm", key, out);
  return out;
}

// ---------------------------------------------------------------------------
// Operations

std::string strip_continuation(std::string_view input) {
  size_t cut = input.size();
  for (const char* marker : {kInferenceEnd, kEndOfSequence}) {
    cut = std::min(cut, input.find(marker));
  }
  return text::trim(input.substr(0, cut));
}

std::vector<std::string> generate_inferences(const assembly::CommonsenseInstance& inst, const PromptSpec& spec,
                                             LMProvider& lm, const SampleParams& params, VisionProvider* vision) {
  if (params.n <= 0) return {};
  ComposeOptions options;
  options.visual_as_text = !lm.accepts_visual_prefix();
  TokenSequence seq = compose_input_sequence(inst, spec, vision, options);
  auto raw = lm.sample(seq, params);
  if (raw.size() != static_cast<size_t>(params.n)) {
    throw Error(ErrorCode::kProviderError, "asked for " + std::to_string(params.n) + " samples, got " +
                                               std::to_string(raw.size()));
  }
  std::vector<std::string> out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(strip_continuation(r));
  return out;
}

std::vector<std::string> continuation_tokens(std::string_view candidate) {
  return sequence_words(strip_continuation(candidate));
}

ScoredCandidate score_continuation(const TokenSequence& seq, const std::string& candidate, LMProvider& lm) {
  auto toks = continuation_tokens(candidate);
  if (toks.empty()) throw Error(ErrorCode::kEmptyCandidate, "candidate '" + candidate + "' has no tokens");
  auto lps = lm.logprobs(seq, toks);
  if (lps.size() != toks.size()) {
    throw Error(ErrorCode::kProviderError, "logprobs length " + std::to_string(lps.size()) + " != " +
                                               std::to_string(toks.size()) + " tokens");
  }
  ScoredCandidate sc;
  sc.text = candidate;
  sc.tokens = toks.size();
  double sum = 0.0;
  for (double lp : lps) sum += lp;
  sc.nll = -sum / static_cast<double>(toks.size());
  sc.perplexity = std::exp(sc.nll);
  return sc;
}

ScoredCandidate score_candidate(const assembly::CommonsenseInstance& inst, const PromptSpec& spec,
                                const std::string& candidate, LMProvider& lm, VisionProvider* vision) {
  ComposeOptions options;
  options.visual_as_text = !lm.accepts_visual_prefix();
  return score_continuation(compose_input_sequence(inst, spec, vision, options), candidate, lm);
}

LossResult seq2seq_loss(const std::vector<TrainingExample>& batch, LMProvider& lm, bool tp, VisionProvider* vision) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyBatch, "seq2seq loss over an empty batch");
  ComposeOptions options;
  options.visual_as_text = !lm.accepts_visual_prefix();
  LossResult out;
  double sum = 0.0;
  for (const auto& ex : batch) {
    if (!ex.instance) throw Error(ErrorCode::kInvalidArgument, "training example without an instance");
    const auto& inst = *ex.instance;
    auto inf = score_candidate(inst, ex.spec, ex.target, lm, vision);
    out.terms.push_back({inst.instance_id, "inference", inf.nll});
    sum += inf.nll;
    if (tp) {
      for (auto [target, kind] : {std::pair{TpTarget::kTextDescription, "text"}, std::pair{TpTarget::kActionObject, "pair"}}) {
        auto seq = compose_tp_sequence(inst, target, ex.spec.mask.og, vision, options);
        auto sc = score_continuation(seq, tp_target_text(inst, target, ex.spec.mask.og), lm);
        out.terms.push_back({inst.instance_id, kind, sc.nll});
        sum += sc.nll;
      }
    }
  }
  out.loss = sum / static_cast<double>(batch.size());
  return out;
}

}  // namespace actionsense::generation
