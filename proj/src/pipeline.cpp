#include "actionsense/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "actionsense/error.hpp"
#include "actionsense/text.hpp"
#include "actionsense/triplets.hpp"

namespace actionsense::pipeline {

namespace fs = std::filesystem;
using generation::InferenceType;
using generation::ModalityMask;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("field '") + key + "': " + e.what());
  }
}

ProviderSpec provider_from_json(const json& j, const fs::path& base, const std::string& fallback_kind) {
  ProviderSpec spec;
  spec.kind = fallback_kind;
  if (j.is_null()) return spec;
  if (!j.is_object()) throw Error(ErrorCode::kConfigError, "provider entries must be objects");
  spec.kind = get_or<std::string>(j, "kind", fallback_kind);
  spec.path = resolve(base, get_or<std::string>(j, "path", ""));
  spec.endpoint = get_or<std::string>(j, "endpoint", "");
  spec.options = j;
  spec.options.erase("kind");
  spec.options.erase("path");
  spec.options.erase("endpoint");
  return spec;
}

json provider_to_json(const ProviderSpec& spec) {
  json j = spec.options;
  j["kind"] = spec.kind;
  if (!spec.path.empty()) j["path"] = spec.path.generic_string();
  if (!spec.endpoint.empty()) j["endpoint"] = spec.endpoint;
  return j;
}

std::string hit_rule_name(metrics::HitRule r) { return r == metrics::HitRule::kTop1 ? "top1" : "top_gt_count"; }

}  // namespace

std::vector<ModalityMask> parse_modalities(const std::string& list) {
  std::vector<ModalityMask> out;
  std::string item;
  auto flush = [&] {
    std::string t = text::trim(item);
    item.clear();
    if (t.empty()) return;
    if (text::to_lower(t) == "all") {
      for (const auto& m : generation::enumerate_modality_combos()) out.push_back(m);
      return;
    }
    out.push_back(ModalityMask::parse(t));
  };
  for (char c : list) {
    if (c == ',' || c == ';') {
      flush();
    } else {
      item += c;
    }
  }
  flush();
  if (out.empty()) throw Error(ErrorCode::kConfigError, "empty modality list");
  return out;
}

std::vector<int> parse_variants(const std::string& list) {
  std::vector<int> out;
  for (const auto& part : text::split_whitespace([&] {
         std::string s = list;
         std::replace(s.begin(), s.end(), ',', ' ');
         return s;
       }())) {
    if (text::to_lower(part) == "all") {
      out.insert(out.end(), {1, 2, 3, 4});
      continue;
    }
    try {
      size_t used = 0;
      int v = std::stoi(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      out.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfigError, "bad prompt variant '" + part + "'");
    }
  }
  for (int v : out) generation::build_prompt(InferenceType::kPrecondition, v);  // validates range
  if (out.empty()) throw Error(ErrorCode::kConfigError, "empty variant list");
  return out;
}

RunConfig config_from_json(const json& j, const fs::path& base) {
  if (!j.is_object()) throw Error(ErrorCode::kConfigError, "config must be a JSON object");
  RunConfig c;
  try {
    const json corpus = j.value("corpus", json::object());
    c.annotations = resolve(base, get_or<std::string>(corpus, "annotations", ""));
    c.recipe_index = resolve(base, get_or<std::string>(corpus, "recipe_index", ""));
    c.strict = get_or<bool>(corpus, "strict", true);
    if (c.annotations.empty()) throw Error(ErrorCode::kConfigError, "corpus.annotations is required");
    if (c.recipe_index.empty()) throw Error(ErrorCode::kConfigError, "corpus.recipe_index is required");

    const json providers = j.value("providers", json::object());
    c.coref = provider_from_json(providers.value("coref", json()), base, "identity");
    c.parse = provider_from_json(providers.value("parse", json()), base, "lexicon");
    c.rc = provider_from_json(providers.value("rc", json()), base, "keyword");
    c.lm = provider_from_json(providers.value("lm", json()), base, "context_unigram");
    c.vision = provider_from_json(providers.value("vision", json()), base, "hash");

    const json ex = j.value("extraction", json::object());
    c.min_count = get_or<int>(ex, "min_count", c.min_count);
    if (ex.contains("relations")) {
      c.extraction.relations = ex.at("relations").get<std::set<std::string>>();
    }
    c.extraction.propagate_conj = get_or<bool>(ex, "propagate_conj", true);

    const json gen = j.value("generation", json::object());
    c.seed = get_or<std::uint64_t>(gen, "seed", c.seed);
    c.nucleus_p = get_or<double>(gen, "nucleus_p", c.nucleus_p);
    c.n_samples = get_or<int>(gen, "n_samples", c.n_samples);
    c.max_new_tokens = get_or<int>(gen, "max_new_tokens", c.max_new_tokens);
    c.max_visual_features = get_or<size_t>(gen, "max_visual_features", c.max_visual_features);
    c.max_sequence_length = get_or<size_t>(gen, "max_sequence_length", c.max_sequence_length);
    if (gen.contains("modalities")) {
      std::vector<std::string> labels = gen.at("modalities").get<std::vector<std::string>>();
      c.modalities = parse_modalities(text::join(labels, ";"));
    }
    if (gen.contains("variants")) c.variants = gen.at("variants").get<std::vector<int>>();
    if (gen.contains("types")) {
      c.types.clear();
      for (const auto& t : gen.at("types")) c.types.push_back(generation::parse_inference_type(t.get<std::string>()));
    }

    const json train = j.value("training", json::object());
    c.learning_rate = get_or<double>(train, "learning_rate", c.learning_rate);
    c.batch_size = get_or<int>(train, "batch_size", c.batch_size);

    const json ev = j.value("evaluation", json::object());
    c.eval_split = get_or<std::string>(ev, "split", c.eval_split);
    if (ev.contains("split_ratios")) c.split_ratios = ev.at("split_ratios").get<std::vector<double>>();
    std::string rule = get_or<std::string>(ev, "hit_rule", "top_gt_count");
    if (rule == "top1") {
      c.hit_rule = metrics::HitRule::kTop1;
    } else if (rule != "top_gt_count") {
      throw Error(ErrorCode::kConfigError, "evaluation.hit_rule must be top_gt_count or top1");
    }
    const json negatives = ev.value("extra_negatives", json::array());
    for (const auto& p : negatives) {
      c.extra_negatives.push_back(resolve(base, p.get<std::string>()));
    }

    const json run = j.value("run", json::object());
    c.out_dir = resolve(base, get_or<std::string>(run, "out", "run"));
    c.workers = get_or<int>(run, "workers", c.workers);
    c.retry.attempts = get_or<int>(run, "retries", c.retry.attempts);
    c.retry.base_delay = std::chrono::milliseconds(get_or<long>(run, "backoff_ms", c.retry.base_delay.count()));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }

  for (int v : c.variants) {
    if (v < 1 || v > 4) throw Error(ErrorCode::kConfigError, "prompt variant " + std::to_string(v) + " not in 1..4");
  }
  if (c.eval_split != "all" && c.eval_split != "train" && c.eval_split != "val" && c.eval_split != "test") {
    throw Error(ErrorCode::kConfigError, "evaluation.split must be all, train, val or test");
  }
  if (c.split_ratios.size() != 3) throw Error(ErrorCode::kConfigError, "split_ratios needs three values");
  if (!(c.nucleus_p > 0.0 && c.nucleus_p <= 1.0)) throw Error(ErrorCode::kConfigError, "nucleus_p not in (0, 1]");
  if (c.n_samples < 1) throw Error(ErrorCode::kConfigError, "n_samples must be positive");
  if (c.min_count < 1) throw Error(ErrorCode::kConfigError, "min_count must be positive");
  if (c.workers < 1) c.workers = 1;
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  return config_from_json(j, fs::absolute(path).parent_path());
}

json RunConfig::to_json() const {
  json masks = json::array();
  for (const auto& m : modalities) masks.push_back(m.label());
  json type_names = json::array();
  for (auto t : types) type_names.push_back(generation::inference_type_name(t));
  json negs = json::array();
  for (const auto& p : extra_negatives) negs.push_back(p.generic_string());
  return {
      {"corpus", {{"annotations", annotations.generic_string()}, {"recipe_index", recipe_index.generic_string()}, {"strict", strict}}},
      {"providers",
       {{"coref", provider_to_json(coref)},
        {"parse", provider_to_json(parse)},
        {"rc", provider_to_json(rc)},
        {"lm", provider_to_json(lm)},
        {"vision", provider_to_json(vision)}}},
      {"extraction", {{"min_count", min_count}, {"relations", extraction.relations}, {"propagate_conj", extraction.propagate_conj}}},
      {"generation",
       {{"seed", seed},
        {"nucleus_p", nucleus_p},
        {"n_samples", n_samples},
        {"max_new_tokens", max_new_tokens},
        {"max_visual_features", max_visual_features},
        {"max_sequence_length", max_sequence_length},
        {"modalities", masks},
        {"variants", variants},
        {"types", type_names}}},
      {"training", {{"optimizer", "adam"}, {"learning_rate", learning_rate}, {"batch_size", batch_size}}},
      {"evaluation",
       {{"split", eval_split}, {"split_ratios", split_ratios}, {"hit_rule", hit_rule_name(hit_rule)}, {"extra_negatives", negs}}},
      {"run",
       {{"out", out_dir.generic_string()},
        {"workers", workers},
        {"retries", retry.attempts},
        {"backoff_ms", retry.base_delay.count()}}},
  };
}

std::string RunConfig::hash() const {
  json j = to_json();
  j.erase("run");
  return text::sha256_hex(j.dump());
}

// ---------------------------------------------------------------------------
// Manifest

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages = {Stage::kIngest,   Stage::kExtract,  Stage::kTriplets,
                                            Stage::kAssemble, Stage::kGenerate, Stage::kEvaluate};
  return stages;
}

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::kIngest: return "ingest";
    case Stage::kExtract: return "extract";
    case Stage::kTriplets: return "triplets";
    case Stage::kAssemble: return "assemble";
    case Stage::kGenerate: return "generate";
    case Stage::kEvaluate: return "evaluate";
  }
  return "unknown";
}

bool RunManifest::complete(Stage s) const {
  auto it = stages.find(std::string(stage_name(s)));
  return it != stages.end() && it->second;
}

void RunManifest::require_before(Stage s) const {
  for (Stage p : all_stages()) {
    if (p == s) return;
    if (!complete(p)) {
      throw Error(ErrorCode::kConfigError, "stage '" + std::string(stage_name(s)) + "' needs '" +
                                               std::string(stage_name(p)) + "' to complete first");
    }
  }
}

void RunManifest::mark(Stage s) {
  require_before(s);
  stages[std::string(stage_name(s))] = true;
}

void RunManifest::reset_from(Stage s) {
  bool clear = false;
  for (Stage p : all_stages()) {
    clear = clear || p == s;
    if (clear) stages[std::string(stage_name(p))] = false;
  }
}

json RunManifest::to_json() const {
  json st = json::object();
  for (Stage s : all_stages()) st[std::string(stage_name(s))] = complete(s);
  return {{"config_hash", config_hash}, {"stages", st},          {"cache_digests", cache_digests},
          {"artifacts", artifacts},     {"failures", failures}, {"notes", notes}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.config_hash = j.value("config_hash", "");
    const json stages = j.value("stages", json::object());
    for (const auto& [k, v] : stages.items()) m.stages[k] = v.get<bool>();
    m.cache_digests = j.value("cache_digests", json::object()).get<std::map<std::string, std::string>>();
    m.artifacts = j.value("artifacts", json::object()).get<std::map<std::string, std::string>>();
    m.failures = j.value("failures", json::array()).get<std::vector<std::string>>();
    m.notes = j.value("notes", json::array()).get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("bad manifest: ") + e.what());
  }
  return m;
}

std::optional<RunManifest> RunManifest::load(const fs::path& run_dir) {
  std::ifstream in(run_dir / "manifest.json");
  if (!in) return std::nullopt;
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfigError, "bad manifest in " + run_dir.string() + ": " + e.what());
  }
}

void RunManifest::save(const fs::path& run_dir) const { write_file_atomic(run_dir / "manifest.json", to_json().dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// Utilities

std::map<std::string, std::string> split_by_video(std::vector<std::string> ids, std::uint64_t seed,
                                                  const std::vector<double>& ratios) {
  if (ratios.size() != 3) throw Error(ErrorCode::kInvalidArgument, "split needs three ratios");
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::mt19937_64 rng(seed);
  for (size_t i = ids.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng() % i);
    std::swap(ids[i - 1], ids[j]);
  }
  const double n = static_cast<double>(ids.size());
  const double total = ratios[0] + ratios[1] + ratios[2];
  size_t n_train = static_cast<size_t>(std::llround(n * ratios[0] / total));
  size_t n_val = static_cast<size_t>(std::llround(n * ratios[1] / total));
  n_train = std::min(n_train, ids.size());
  n_val = std::min(n_val, ids.size() - n_train);
  std::map<std::string, std::string> out;
  for (size_t i = 0; i < ids.size(); ++i) {
    out[ids[i]] = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
  }
  return out;
}

std::string instance_split(const assembly::CommonsenseInstance& inst, const std::map<std::string, std::string>& splits) {
  if (inst.provenance.empty()) return "train";
  auto it = splits.find(inst.provenance.front().video_id);
  return it == splits.end() ? "train" : it->second;
}

void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn) {
  if (n == 0) return;
  size_t threads = std::min<size_t>(n, static_cast<size_t>(std::max(1, workers)));
  if (threads == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        {
          std::lock_guard<std::mutex> lock(mu);
          if (first) return;
        }
        size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first) first = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out << content;
    if (!out) throw Error(ErrorCode::kIoError, "short write to " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Providers

namespace {

provider::ResponseCache run_cache(const RunConfig& config) { return provider::ResponseCache(config.out_dir / "cache"); }

void require_path(const ProviderSpec& spec, const char* role) {
  if (spec.path.empty()) {
    throw Error(ErrorCode::kConfigError, std::string(role) + " provider '" + spec.kind + "' needs a path");
  }
}

provider::JsonHttpClient http_client(const ProviderSpec& spec, const char* role) {
  if (spec.endpoint.empty()) throw Error(ErrorCode::kConfigError, std::string(role) + " http provider needs an endpoint");
  long timeout = spec.options.value("timeout_s", 60L);
  return provider::JsonHttpClient(spec.endpoint, std::chrono::seconds(timeout));
}

[[noreturn]] void unknown_kind(const ProviderSpec& spec, const char* role) {
  throw Error(ErrorCode::kConfigError, std::string("unknown ") + role + " provider kind '" + spec.kind + "'");
}

}  // namespace

Providers make_dataset_providers(const RunConfig& config) {
  Providers p;
  const auto& c = config.coref;
  if (c.kind == "identity") {
    p.coref = std::make_shared<extraction::IdentityCorefProvider>();
  } else if (c.kind == "table") {
    require_path(c, "coref");
    p.coref = extraction::TableCorefProvider::from_file(c.path);
  } else if (c.kind == "http") {
    p.coref = std::make_shared<extraction::CachingCorefProvider>(
        std::make_shared<extraction::HttpCorefProvider>(http_client(c, "coref")), run_cache(config), config.retry);
  } else {
    unknown_kind(c, "coref");
  }

  const auto& d = config.parse;
  if (d.kind == "lexicon") {
    require_path(d, "parse");
    p.parse = extraction::LexiconParseProvider::from_file(d.path);
  } else if (d.kind == "canned") {
    require_path(d, "parse");
    p.parse = extraction::CannedParseProvider::from_file(d.path);
  } else if (d.kind == "http") {
    p.parse = std::make_shared<extraction::CachingParseProvider>(
        std::make_shared<extraction::HttpParseProvider>(http_client(d, "parse")), run_cache(config), config.retry);
  } else {
    unknown_kind(d, "parse");
  }

  const auto& r = config.rc;
  if (r.kind == "keyword") {
    require_path(r, "rc");
    p.rc = assembly::KeywordRCProvider::from_file(r.path);
  } else if (r.kind == "table") {
    require_path(r, "rc");
    p.rc = assembly::TableRCProvider::from_file(r.path);
  } else if (r.kind == "http") {
    p.rc = std::make_shared<assembly::CachingRCProvider>(
        std::make_shared<assembly::HttpRCProvider>(http_client(r, "rc")), run_cache(config), config.retry);
  } else {
    unknown_kind(r, "rc");
  }

  const auto& v = config.vision;
  if (v.kind == "hash") {
    p.vision = std::make_shared<generation::HashVisionProvider>(v.options.value("dim", static_cast<size_t>(16)));
  } else if (v.kind != "none") {
    unknown_kind(v, "vision");
  }
  return p;
}

std::shared_ptr<generation::LMProvider> make_lm(const RunConfig& config,
                                                const std::vector<assembly::CommonsenseInstance>& training) {
  const auto& l = config.lm;
  if (l.kind == "context_unigram") {
    generation::ContextUnigramLM::Options o;
    o.smoothing = l.options.value("smoothing", o.smoothing);
    o.context_weight = l.options.value("context_weight", o.context_weight);
    return std::make_shared<generation::ContextUnigramLM>(training, o);
  }
  if (l.kind == "uniform") return std::make_shared<generation::UniformLM>(l.options.value("vocab_size", static_cast<size_t>(1000)));
  if (l.kind == "canned") {
    require_path(l, "lm");
    return generation::CannedLM::from_file(l.path);
  }
  if (l.kind == "table") {
    require_path(l, "lm");
    std::ifstream in(l.path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + l.path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::kConfigError, l.path.string() + ": bad table");
    return std::make_shared<generation::TableLM>(doc.get<std::map<std::string, double>>(), l.options.value("floor", 1e-6));
  }
  if (l.kind == "http") {
    return std::make_shared<generation::CachingLM>(
        std::make_shared<generation::HttpLM>(http_client(l, "lm"), l.options.value("visual_prefix", false)),
        run_cache(config), config.retry);
  }
  unknown_kind(l, "lm");
}

// ---------------------------------------------------------------------------
// Generation records

std::string GenerationRecord::key() const { return instance_id + "|" + mask.label() + "|" + std::to_string(variant); }

json record_to_json(const GenerationRecord& r) {
  json outputs = json::object();
  for (const auto& [type, gens] : r.outputs) {
    json arr = json::array();
    for (const auto& g : gens) arr.push_back({{"text", g.text}, {"nll", g.nll ? json(*g.nll) : json(nullptr)}});
    generation::PromptSpec spec{type, r.variant, r.mask};
    outputs[std::string(generation::inference_type_name(type))] = {{"prompt_id", spec.prompt_id()},
                                                                   {"prompt", generation::build_prompt(spec)},
                                                                   {"generations", arr}};
  }
  return {{"instance_id", r.instance_id},
          {"condition", r.mask.label()},
          {"variant", r.variant},
          {"skipped", r.skipped ? json(*r.skipped) : json(nullptr)},
          {"outputs", outputs}};
}

GenerationRecord record_from_json(const json& j) {
  GenerationRecord r;
  try {
    r.instance_id = j.at("instance_id").get<std::string>();
    r.mask = ModalityMask::parse(j.at("condition").get<std::string>());
    r.variant = j.at("variant").get<int>();
    if (!j.at("skipped").is_null()) r.skipped = j.at("skipped").get<std::string>();
    for (const auto& [type, body] : j.at("outputs").items()) {
      auto& gens = r.outputs[generation::parse_inference_type(type)];
      for (const auto& g : body.at("generations")) {
        GeneratedText t;
        t.text = g.at("text").get<std::string>();
        if (!g.at("nll").is_null()) t.nll = g.at("nll").get<double>();
        gens.push_back(std::move(t));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedAnnotation, std::string("bad generation record: ") + e.what());
  }
  return r;
}

std::vector<GenerationRecord> read_generations(const fs::path& jsonl) {
  std::ifstream in(jsonl);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open generations " + jsonl.string());
  std::vector<GenerationRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;  // torn final line of an interrupted run
    out.push_back(record_from_json(j));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shared run state

namespace {

void log_line(const CommandOptions& options, const std::string& msg) {
  if (options.log) *options.log << msg << std::endl;
}

struct RunData {
  std::vector<assembly::CommonsenseInstance> dataset;
  std::map<std::string, std::string> splits;
  std::vector<const assembly::CommonsenseInstance*> eval_set;
  std::vector<assembly::CommonsenseInstance> training;
};

RunData load_run_data(const RunConfig& config) {
  RunData d;
  d.dataset = assembly::read_dataset(config.out_dir / "dataset.jsonl");
  std::vector<std::string> videos;
  for (const auto& inst : d.dataset) {
    for (const auto& p : inst.provenance) videos.push_back(p.video_id);
  }
  d.splits = split_by_video(videos, config.seed, config.split_ratios);
  for (const auto& inst : d.dataset) {
    std::string s = instance_split(inst, d.splits);
    if (config.eval_split == "all" || s == config.eval_split) d.eval_set.push_back(&inst);
    if (config.eval_split == "all" || s == "train") d.training.push_back(inst);
  }
  return d;
}

RunManifest require_manifest(const RunConfig& config, Stage stage) {
  auto m = RunManifest::load(config.out_dir);
  if (!m) {
    throw Error(ErrorCode::kConfigError, "no manifest in " + config.out_dir.string() + "; run build-dataset first");
  }
  m->require_before(stage);
  return *m;
}

std::string rel(const RunConfig& config, const fs::path& p) {
  return fs::relative(p, config.out_dir).generic_string();
}

struct GridStatus {
  size_t total = 0;
  size_t done = 0;
  bool interrupted = false;
  std::vector<std::string> failures;
};

GenerationRecord generate_group(const assembly::CommonsenseInstance& inst, const ModalityMask& mask, int variant,
                                const RunConfig& config, generation::LMProvider& lm,
                                generation::VisionProvider* vision) {
  GenerationRecord rec;
  rec.instance_id = inst.instance_id;
  rec.mask = mask;
  rec.variant = variant;
  generation::SampleParams params;
  params.nucleus_p = config.nucleus_p;
  params.n = config.n_samples;
  params.max_new = config.max_new_tokens;
  params.seed = config.seed;
  generation::ComposeOptions compose;
  compose.max_length = config.max_sequence_length;
  compose.visual_as_text = !lm.accepts_visual_prefix();
  for (auto type : config.types) {
    generation::PromptSpec spec{type, variant, mask};
    generation::TokenSequence seq;
    try {
      seq = generation::compose_input_sequence(inst, spec, vision, compose);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kMissingModality) throw;
      rec.skipped = e.what();
      rec.outputs.clear();
      return rec;
    }
    auto raw = lm.sample(seq, params);
    if (raw.size() != static_cast<size_t>(params.n)) {
      throw Error(ErrorCode::kProviderError, "sample count mismatch for " + inst.instance_id);
    }
    auto& gens = rec.outputs[type];
    for (const auto& r : raw) {
      GeneratedText g;
      g.text = generation::strip_continuation(r);
      if (!generation::continuation_tokens(g.text).empty()) g.nll = generation::score_continuation(seq, g.text, lm).nll;
      gens.push_back(std::move(g));
    }
  }
  return rec;
}

GridStatus generate_grid(const RunConfig& config, const RunData& data, const std::vector<ModalityMask>& masks,
                         const std::vector<int>& variants, const fs::path& dir, const CommandOptions& options) {
  fs::create_directories(dir);
  const fs::path final_path = dir / "generations.jsonl";
  const fs::path partial_path = dir / "generations.partial.jsonl";

  struct Group {
    const assembly::CommonsenseInstance* inst;
    ModalityMask mask;
    int variant;
    std::string key;
  };
  std::vector<Group> groups;
  for (const auto* inst : data.eval_set) {
    for (const auto& m : masks) {
      for (int v : variants) groups.push_back({inst, m, v, inst->instance_id + "|" + m.label() + "|" + std::to_string(v)});
    }
  }

  std::map<std::string, GenerationRecord> done;
  if (options.resume) {
    for (const auto& p : {final_path, partial_path}) {
      if (!fs::exists(p)) continue;
      for (auto& r : read_generations(p)) done.emplace(r.key(), std::move(r));
    }
  } else {
    fs::remove(final_path);
    fs::remove(partial_path);
  }

  std::vector<size_t> todo;
  for (size_t i = 0; i < groups.size(); ++i) {
    if (!done.count(groups[i].key)) todo.push_back(i);
  }
  GridStatus status;
  status.total = groups.size();
  if (options.max_groups >= 0 && todo.size() > static_cast<size_t>(options.max_groups)) {
    todo.resize(static_cast<size_t>(options.max_groups));
    status.interrupted = true;
  }
  log_line(options, "generate: " + std::to_string(groups.size()) + " groups, " + std::to_string(todo.size()) +
                        " to run in " + dir.generic_string());

  auto lm = make_lm(config, data.training);
  auto providers_vision = config.vision.kind == "hash"
                              ? std::make_shared<generation::HashVisionProvider>(
                                    config.vision.options.value("dim", static_cast<size_t>(16)))
                              : nullptr;

  std::mutex mu;
  std::ofstream partial(partial_path, std::ios::app | std::ios::binary);
  if (!partial) throw Error(ErrorCode::kIoError, "cannot write " + partial_path.string());
  std::vector<std::optional<GenerationRecord>> fresh(groups.size());
  parallel_for(todo.size(), config.workers, [&](size_t k) {
    const Group& g = groups[todo[k]];
    try {
      GenerationRecord rec = generate_group(*g.inst, g.mask, g.variant, config, *lm, providers_vision.get());
      std::lock_guard<std::mutex> lock(mu);
      partial << record_to_json(rec).dump() << "\n" << std::flush;
      fresh[todo[k]] = std::move(rec);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kProviderError) throw;
      std::lock_guard<std::mutex> lock(mu);
      status.failures.push_back(g.key + ": " + e.what());
    }
  });
  partial.close();

  for (size_t i = 0; i < groups.size(); ++i) {
    if (fresh[i]) done.emplace(groups[i].key, std::move(*fresh[i]));
  }
  status.done = done.size();
  std::sort(status.failures.begin(), status.failures.end());
  if (status.interrupted || !status.failures.empty()) return status;

  std::string content;
  for (const auto& g : groups) content += record_to_json(done.at(g.key)).dump() + "\n";
  write_file_atomic(final_path, content);
  fs::remove(partial_path);
  return status;
}

CommandResult grid_failure(const GridStatus& status) {
  if (status.interrupted) {
    return {kExitProvider,
            "interrupted after " + std::to_string(status.done) + "/" + std::to_string(status.total) +
                " groups; rerun with --resume",
            {}};
  }
  std::string msg = std::to_string(status.failures.size()) + " generation groups failed after retries: " +
                    status.failures.front();
  return {kExitProvider, msg, {}};
}

void write_report(const metrics::EvalReport& report, const fs::path& stem, std::vector<fs::path>& outputs) {
  fs::path j = stem, t = stem, c = stem;
  j += ".json";
  t += ".txt";
  c += ".csv";
  write_file_atomic(j, metrics::report_to_json(report).dump(2) + "\n");
  write_file_atomic(t, metrics::report_to_text(report));
  write_file_atomic(c, metrics::report_to_csv(report));
  outputs.insert(outputs.end(), {j, t, c});
}

template <typename Fn>
CommandResult guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return {exit_code_for(e), e.what(), {}};
  } catch (const fs::filesystem_error& e) {
    return {kExitConfig, std::string("IoError: ") + e.what(), {}};
  } catch (const json::exception& e) {
    return {kExitConfig, std::string("ConfigError: ") + e.what(), {}};
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Evaluation

EvaluationResult evaluate_generations(const std::vector<GenerationRecord>& records,
                                      const std::vector<assembly::CommonsenseInstance>& dataset,
                                      const RunConfig& config, generation::LMProvider& lm,
                                      generation::VisionProvider* vision) {
  EvaluationResult result;
  std::map<std::string, const assembly::CommonsenseInstance*> by_id;
  for (const auto& inst : dataset) by_id[inst.instance_id] = &inst;

  std::vector<assembly::CommonsenseInstance> extra;
  for (const auto& p : config.extra_negatives) {
    auto more = assembly::read_dataset(p);
    extra.insert(extra.end(), more.begin(), more.end());
  }
  std::vector<const assembly::CommonsenseInstance*> sources;
  for (const auto& inst : dataset) sources.push_back(&inst);
  for (const auto& inst : extra) sources.push_back(&inst);

  // training inferences per type for novelty
  std::vector<std::string> video_ids;
  for (const auto& inst : dataset) {
    for (const auto& p : inst.provenance) video_ids.push_back(p.video_id);
  }
  auto splits = split_by_video(video_ids, config.seed, config.split_ratios);
  std::map<InferenceType, std::set<std::string>> training;
  for (auto type : config.types) {
    std::vector<std::string> texts;
    for (const auto& inst : dataset) {
      if (config.eval_split != "all" && instance_split(inst, splits) != "train") continue;
      for (const auto& s : generation::ground_truth(inst, type)) texts.push_back(s);
    }
    training[type] = metrics::training_set(texts);
  }

  std::map<std::pair<ModalityMask, int>, std::vector<const GenerationRecord*>> groups;
  for (const auto& r : records) {
    if (!r.skipped) groups[{r.mask, r.variant}].push_back(&r);
  }

  generation::ComposeOptions compose;
  compose.max_length = config.max_sequence_length;
  compose.visual_as_text = !lm.accepts_visual_prefix();

  std::map<std::pair<std::string, InferenceType>, std::optional<metrics::CandidatePool>> pools;
  auto pool_for = [&](const assembly::CommonsenseInstance& inst, InferenceType type) -> const std::optional<metrics::CandidatePool>& {
    auto key = std::make_pair(inst.instance_id, type);
    auto it = pools.find(key);
    if (it != pools.end()) return it->second;
    std::optional<metrics::CandidatePool> pool;
    try {
      pool = metrics::build_candidate_pool(inst, type, sources, config.seed);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientNegatives) throw;
    }
    return pools.emplace(key, std::move(pool)).first->second;
  };

  for (const auto& [cond, recs] : groups) {
    const auto& [mask, variant] = cond;
    for (auto type : config.types) {
      const std::string label = std::string(generation::inference_type_name(type)) + " / " + mask.label() + " / " +
                                generation::PromptSpec{type, variant, mask}.prompt_id();
      std::vector<std::vector<std::string>> cands, refs;
      std::vector<const assembly::CommonsenseInstance*> insts;
      std::vector<std::string> all_gens;
      double bleu_sum = 0.0, meteor_sum = 0.0;
      size_t n_gen = 0;
      for (const auto* r : recs) {
        auto out = r->outputs.find(type);
        auto inst_it = by_id.find(r->instance_id);
        if (out == r->outputs.end() || inst_it == by_id.end()) continue;
        auto gt = generation::ground_truth(*inst_it->second, type);
        if (gt.empty()) continue;
        std::vector<std::string> texts;
        for (const auto& g : out->second) {
          texts.push_back(g.text);
          all_gens.push_back(g.text);
          if (!metrics::tokenize(g.text).empty()) {
            bleu_sum += metrics::bleu2(g.text, gt);
            meteor_sum += metrics::meteor(g.text, gt);
          }
          ++n_gen;
        }
        cands.push_back(std::move(texts));
        refs.push_back(std::move(gt));
        insts.push_back(inst_it->second);
      }
      if (n_gen == 0) {
        result.notes.push_back(label + ": no instance with references");
        continue;
      }
      metrics::MetricScores s;
      s.bleu = bleu_sum / static_cast<double>(n_gen);
      s.meteor = meteor_sum / static_cast<double>(n_gen);
      if (insts.size() >= 2) {
        s.cider = metrics::cider(cands, refs).mean;
      } else {
        result.notes.push_back(label + ": CIDEr needs two instances, reported as 0");
      }
      s.unique = metrics::uniqueness(all_gens);
      s.novel = metrics::novelty(all_gens, training[type]);

      std::vector<metrics::ScoredPool> scored;
      size_t short_pools = 0;
      for (const auto* inst : insts) {
        const auto& pool = pool_for(*inst, type);
        if (!pool) {
          ++short_pools;
          continue;
        }
        generation::PromptSpec spec{type, variant, mask};
        auto seq = generation::compose_input_sequence(*inst, spec, vision, compose);
        metrics::ScoredPool sp;
        sp.instance_id = inst->instance_id;
        sp.gt_count = pool->gt_count;
        for (const auto& c : pool->candidates) {
          auto sc = generation::score_continuation(seq, c.text, lm);
          sc.is_ground_truth = c.is_ground_truth;
          sp.candidates.push_back(std::move(sc));
        }
        scored.push_back(std::move(sp));
      }
      if (!scored.empty()) s.acc50 = metrics::acc_at_50(scored, config.hit_rule);
      if (short_pools > 0) {
        result.notes.push_back(label + ": " + std::to_string(short_pools) + "/" + std::to_string(insts.size()) +
                               " pools lacked " + std::to_string(metrics::kPoolSize - 1) + " negatives" +
                               (scored.empty() ? "; A@50 unavailable" : ""));
      }
      result.cells[{type, mask, variant}] = s;
    }
  }
  return result;
}

namespace {

std::vector<std::string> type_names(const RunConfig& config) {
  std::vector<std::string> out;
  for (auto t : config.types) out.emplace_back(generation::inference_type_name(t));
  return out;
}

}  // namespace

metrics::EvalReport full_report(const EvaluationResult& eval, const RunConfig& config,
                                const std::vector<ModalityMask>& masks, const std::vector<int>& variants) {
  metrics::ScoreGrid grid;
  std::vector<std::string> conditions;
  std::map<std::pair<ModalityMask, int>, std::string> names;
  for (const auto& m : masks) {
    for (int v : variants) {
      std::string name = m.label() + (variants.size() > 1 ? " [V" + std::to_string(v) + "]" : "");
      conditions.push_back(name);
      names[{m, v}] = name;
    }
  }
  for (const auto& [key, scores] : eval.cells) {
    auto it = names.find({key.mask, key.variant});
    if (it != names.end()) grid[{std::string(generation::inference_type_name(key.type)), it->second}] = scores;
  }
  auto report = metrics::aggregate_report(grid, type_names(config), conditions);
  report.notes = eval.notes;
  return report;
}

metrics::EvalReport modality_report(const EvaluationResult& eval, const RunConfig& config,
                                    const std::vector<ModalityMask>& masks, int variant) {
  metrics::ScoreGrid grid;
  std::vector<std::string> conditions;
  for (const auto& m : masks) conditions.push_back(m.label());
  for (const auto& [key, scores] : eval.cells) {
    if (key.variant == variant) grid[{std::string(generation::inference_type_name(key.type)), key.mask.label()}] = scores;
  }
  auto collapsed = metrics::collapse_types(metrics::aggregate_report(grid, type_names(config), conditions));
  collapsed.notes = eval.notes;
  return collapsed;
}

metrics::EvalReport prompt_report(const EvaluationResult& eval, const RunConfig& config, const ModalityMask& mask,
                                  const std::vector<int>& variants) {
  metrics::EvalReport report;
  std::vector<std::string> missing;
  for (auto type : config.types) {
    metrics::ScoreGrid grid;
    std::vector<std::string> conditions;
    const std::string tname(generation::inference_type_name(type));
    for (int v : variants) {
      std::string id = generation::PromptSpec{type, v, mask}.prompt_id();
      conditions.push_back(id);
      auto it = eval.cells.find({type, mask, v});
      if (it != eval.cells.end()) grid[{tname, id}] = it->second;
    }
    try {
      auto part = metrics::aggregate_report(grid, {tname}, conditions);
      report.rows.insert(report.rows.end(), part.rows.begin(), part.rows.end());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kMissingCell) throw;
      std::string what = e.what();
      missing.push_back(what.substr(what.find(':') + 2));
    }
  }
  if (!missing.empty()) throw Error(ErrorCode::kMissingCell, text::join(missing, ", "));
  report.notes = eval.notes;
  return report;
}

size_t best_row(const metrics::EvalReport& report) {
  if (report.rows.empty()) throw Error(ErrorCode::kEmptyList, "report has no rows");
  size_t best = 0;
  double best_score = -1.0;
  for (size_t i = 0; i < report.rows.size(); ++i) {
    const auto& s = report.rows[i].scores;
    double sum = 100.0 * s.bleu + 100.0 * s.meteor + 10.0 * s.cider;
    double k = 3.0;
    if (s.acc50) {
      sum += 100.0 * *s.acc50;
      k += 1.0;
    }
    double mean = sum / k;
    if (mean > best_score) {
      best_score = mean;
      best = i;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Commands

int exit_code_for(const Error& e) { return e.code() == ErrorCode::kProviderError ? kExitProvider : kExitConfig; }

CommandResult run_build_dataset(const RunConfig& config, const CommandOptions& options) {
  return guarded([&]() -> CommandResult {
    const fs::path out = config.out_dir;
    fs::create_directories(out);
    RunManifest manifest;
    if (options.resume) {
      if (auto existing = RunManifest::load(out)) {
        if (existing->config_hash != config.hash()) {
          throw Error(ErrorCode::kConfigError, "config changed since the run in " + out.string() + " started");
        }
        manifest = *existing;
        if (manifest.complete(Stage::kAssemble)) return {kExitOk, "dataset already built", {out / "dataset.jsonl"}};
      }
    }
    manifest.config_hash = config.hash();
    manifest.reset_from(Stage::kIngest);
    manifest.failures.clear();
    manifest.notes.clear();

    log_line(options, "ingest: " + config.annotations.string());
    corpus::LoadOptions load;
    load.strict = config.strict;
    corpus::Corpus corpus = corpus::load_corpus(config.annotations, config.recipe_index, load);
    auto report = corpus::validate_corpus(corpus);
    for (const auto& v : report.violations) {
      manifest.notes.push_back("violation " + v.video_id +
                               (v.segment_index ? " segment " + std::to_string(*v.segment_index) : "") + ": " +
                               v.message);
    }
    for (const auto& id : report.flagged_videos) manifest.notes.push_back("flagged video " + id);
    manifest.mark(Stage::kIngest);

    Providers providers = make_dataset_providers(config);
    const size_t n_videos = corpus.videos.size();
    std::vector<extraction::ResolvedVideo> resolved(n_videos);
    parallel_for(n_videos, config.workers, [&](size_t i) {
      resolved[i] = extraction::resolve_coreferences(corpus.videos[i], *providers.coref);
    });
    std::vector<std::vector<extraction::VerbIngredientPair>> per_video(n_videos);
    parallel_for(n_videos, config.workers, [&](size_t i) {
      const auto& video = corpus.videos[i];
      for (size_t s = 0; s < video.segments.size(); ++s) {
        auto pairs = extraction::extract_verb_ingredient_pairs(resolved[i].resolved[s], *providers.parse,
                                                               video.video_id, video.segments[s].index,
                                                               config.extraction);
        per_video[i].insert(per_video[i].end(), pairs.begin(), pairs.end());
      }
    });
    std::vector<extraction::VerbIngredientPair> pairs;
    for (const auto& v : per_video) pairs.insert(pairs.end(), v.begin(), v.end());
    auto counts = extraction::count_lemma_frequencies(pairs);
    auto kept = extraction::filter_pairs_by_frequency(pairs, counts, config.min_count);

    std::string resolved_lines;
    for (const auto& r : resolved) {
      if (r.failed) manifest.notes.push_back("coreference failed for " + r.video_id + ": " + r.error);
      resolved_lines += json{{"video_id", r.video_id}, {"original", r.original}, {"resolved", r.resolved}, {"failed", r.failed}}.dump() + "\n";
    }
    write_file_atomic(out / "resolved.jsonl", resolved_lines);
    std::string pair_lines;
    for (const auto& p : kept) pair_lines += extraction::pair_to_json(p).dump() + "\n";
    write_file_atomic(out / "pairs.jsonl", pair_lines);
    write_file_atomic(out / "lemma_counts.json",
                      json{{"min_count", config.min_count}, {"verbs", counts.verb_counts}, {"nouns", counts.noun_counts},
                           {"pairs_total", pairs.size()}, {"pairs_kept", kept.size()}}.dump(2) + "\n");
    manifest.mark(Stage::kExtract);
    log_line(options, "extract: " + std::to_string(pairs.size()) + " pairs, " + std::to_string(kept.size()) +
                          " kept at min_count " + std::to_string(config.min_count));

    auto buckets = triplets::group_by_ingredient(triplets::events_from_pairs(kept));
    auto all_triplets = triplets::build_all_triplets(buckets);
    std::string triplet_lines;
    for (const auto& t : all_triplets) triplet_lines += triplets::triplet_to_json(t).dump() + "\n";
    write_file_atomic(out / "triplets.jsonl", triplet_lines);
    manifest.mark(Stage::kTriplets);
    log_line(options, "triplets: " + std::to_string(all_triplets.size()));

    assembly::AssemblyContext ctx;
    ctx.corpus = &corpus;
    for (const auto& r : resolved) ctx.resolved[r.video_id] = r;
    std::vector<assembly::CommonsenseInstance> instances(all_triplets.size());
    parallel_for(all_triplets.size(), config.workers, [&](size_t i) {
      instances[i] = assembly::assemble_instance(all_triplets[i], ctx, *providers.rc);
    });
    auto merged = assembly::merge_by_action_object(instances);
    std::string dataset_lines;
    for (const auto& inst : merged) dataset_lines += assembly::instance_to_json(inst).dump() + "\n";
    write_file_atomic(out / "dataset.jsonl", dataset_lines);
    auto stats = assembly::compute_statistics(merged);
    write_file_atomic(out / "stats.json", assembly::stats_to_json(stats).dump(2) + "\n");

    for (const char* ns : {"coref", "parse", "rc"}) {
      std::string d = run_cache(config).digest(ns);
      if (!d.empty()) manifest.cache_digests[ns] = d;
    }
    for (const char* name : {"resolved.jsonl", "pairs.jsonl", "lemma_counts.json", "triplets.jsonl", "dataset.jsonl", "stats.json"}) {
      manifest.artifacts[fs::path(name).stem().string()] = name;
    }
    manifest.mark(Stage::kAssemble);
    manifest.save(out);
    log_line(options, "assemble: " + std::to_string(instances.size()) + " instances, " + std::to_string(merged.size()) +
                          " after merging");
    return {kExitOk, "built " + std::to_string(merged.size()) + " instances", {out / "dataset.jsonl", out / "stats.json"}};
  });
}

CommandResult run_stats(const fs::path& dataset, std::ostream& out, bool as_json) {
  return guarded([&]() -> CommandResult {
    auto stats = assembly::compute_statistics(assembly::read_dataset(dataset));
    if (as_json) {
      out << assembly::stats_to_json(stats).dump(2) << "\n";
    } else {
      out << assembly::stats_to_text(stats);
    }
    return {kExitOk, "", {}};
  });
}

CommandResult run_generate(const RunConfig& config, const CommandOptions& options) {
  return guarded([&]() -> CommandResult {
    RunManifest manifest = require_manifest(config, Stage::kGenerate);
    if (!options.resume) manifest.reset_from(Stage::kGenerate);
    RunData data = load_run_data(config);
    auto status = generate_grid(config, data, config.modalities, config.variants, config.out_dir, options);
    manifest.failures = status.failures;
    if (status.interrupted || !status.failures.empty()) {
      manifest.save(config.out_dir);
      return grid_failure(status);
    }
    manifest.artifacts["generations"] = "generations.jsonl";
    std::string d = run_cache(config).digest("lm");
    if (!d.empty()) manifest.cache_digests["lm"] = d;
    manifest.mark(Stage::kGenerate);
    manifest.save(config.out_dir);
    return {kExitOk, "generated " + std::to_string(status.total) + " groups", {config.out_dir / "generations.jsonl"}};
  });
}

CommandResult run_evaluate(const RunConfig& config, const CommandOptions& options) {
  return guarded([&]() -> CommandResult {
    RunManifest manifest = require_manifest(config, Stage::kEvaluate);
    RunData data = load_run_data(config);
    auto records = read_generations(config.out_dir / "generations.jsonl");
    auto lm = make_lm(config, data.training);
    generation::HashVisionProvider vision(config.vision.options.value("dim", static_cast<size_t>(16)));
    generation::VisionProvider* vp = config.vision.kind == "hash" ? &vision : nullptr;
    log_line(options, "evaluate: " + std::to_string(records.size()) + " generation groups");
    auto eval = evaluate_generations(records, data.dataset, config, *lm, vp);

    CommandResult result{kExitOk, "", {}};
    write_report(full_report(eval, config, config.modalities, config.variants), config.out_dir / "report", result.outputs);
    if (config.modalities.size() > 1) {
      write_report(modality_report(eval, config, config.modalities, config.variants.front()),
                   config.out_dir / "modality_report", result.outputs);
    }
    if (config.variants.size() > 1) {
      write_report(prompt_report(eval, config, config.modalities.front(), config.variants),
                   config.out_dir / "prompt_report", result.outputs);
    }
    for (const auto& p : result.outputs) manifest.artifacts[p.filename().string()] = rel(config, p);
    manifest.mark(Stage::kEvaluate);
    manifest.save(config.out_dir);
    result.message = "wrote " + std::to_string(result.outputs.size()) + " report files";
    return result;
  });
}

CommandResult run_ablate(const RunConfig& config, const CommandOptions& options) {
  return guarded([&]() -> CommandResult {
    RunManifest manifest = require_manifest(config, Stage::kGenerate);
    if (!options.resume) manifest.reset_from(Stage::kGenerate);
    RunData data = load_run_data(config);
    auto lm = make_lm(config, data.training);
    generation::HashVisionProvider vision(config.vision.options.value("dim", static_cast<size_t>(16)));
    generation::VisionProvider* vp = config.vision.kind == "hash" ? &vision : nullptr;
    CommandResult result{kExitOk, "", {}};

    const int variant = config.variants.front();
    const fs::path modality_dir = config.out_dir / "ablate" / "modality";
    auto status = generate_grid(config, data, config.modalities, {variant}, modality_dir, options);
    if (status.interrupted || !status.failures.empty()) {
      manifest.failures = status.failures;
      manifest.save(config.out_dir);
      return grid_failure(status);
    }
    auto eval = evaluate_generations(read_generations(modality_dir / "generations.jsonl"), data.dataset, config, *lm, vp);
    auto modality = modality_report(eval, config, config.modalities, variant);
    write_report(modality, config.out_dir / "modality_report", result.outputs);
    result.outputs.push_back(modality_dir / "generations.jsonl");

    if (!options.modalities_only) {
      const auto& best = config.modalities[best_row(modality)];
      log_line(options, "ablate: prompt grid on " + best.label());
      const std::vector<int> variants = {1, 2, 3, 4};
      const fs::path prompt_dir = config.out_dir / "ablate" / "prompt";
      CommandOptions sub = options;
      if (sub.max_groups >= 0) sub.max_groups = std::max<long>(0, sub.max_groups - static_cast<long>(status.total));
      auto pstatus = generate_grid(config, data, {best}, variants, prompt_dir, sub);
      if (pstatus.interrupted || !pstatus.failures.empty()) {
        manifest.failures = pstatus.failures;
        manifest.save(config.out_dir);
        return grid_failure(pstatus);
      }
      auto peval = evaluate_generations(read_generations(prompt_dir / "generations.jsonl"), data.dataset, config, *lm, vp);
      auto prompts = prompt_report(peval, config, best, variants);
      prompts.notes.insert(prompts.notes.begin(), "input components: " + best.label());
      write_report(prompts, config.out_dir / "prompt_report", result.outputs);
      result.outputs.push_back(prompt_dir / "generations.jsonl");
    }
    for (const auto& p : result.outputs) manifest.artifacts[rel(config, p)] = rel(config, p);
    manifest.failures.clear();
    manifest.mark(Stage::kGenerate);
    manifest.mark(Stage::kEvaluate);
    manifest.save(config.out_dir);
    result.message = options.modalities_only ? "modality grid done" : "modality and prompt grids done";
    return result;
  });
}

CommandResult run_report(const fs::path& path, const std::string& format, std::ostream& out) {
  return guarded([&]() -> CommandResult {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open report " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::kMalformedAnnotation, path.string() + " is not JSON");
    auto report = metrics::report_from_json(j);
    if (format == "csv") {
      out << metrics::report_to_csv(report);
    } else if (format == "json") {
      out << metrics::report_to_json(report).dump(2) << "\n";
    } else if (format == "text") {
      out << metrics::report_to_text(report);
    } else {
      throw Error(ErrorCode::kConfigError, "unknown report format '" + format + "'");
    }
    return {kExitOk, "", {}};
  });
}

}  // namespace actionsense::pipeline
