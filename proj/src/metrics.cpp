#include "actionsense/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <random>
#include <regex>
#include <sstream>

#include "actionsense/error.hpp"
#include "actionsense/text.hpp"

namespace actionsense::metrics {

using generation::InferenceType;
using nlohmann::json;

std::string normalize_object_tags(std::string_view input) {
  static const std::regex tag(R"(\[Object[0-9]+\])");
  return std::regex_replace(std::string(input), tag, "[Object]");
}

std::vector<std::string> tokenize(std::string_view input) { return text::tokenize(normalize_object_tags(input)); }

std::string canonical(std::string_view input) { return text::join(tokenize(input), " "); }

namespace {

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts ngrams(const std::vector<std::string>& toks, size_t n) {
  NgramCounts out;
  for (size_t i = 0; i + n <= toks.size(); ++i) {
    ++out[std::vector<std::string>(toks.begin() + static_cast<long>(i), toks.begin() + static_cast<long>(i + n))];
  }
  return out;
}

std::vector<std::string> candidate_tokens(std::string_view candidate) {
  auto toks = tokenize(candidate);
  if (toks.empty()) throw Error(ErrorCode::kEmptyCandidate, "candidate '" + std::string(candidate) + "' is empty");
  return toks;
}

std::vector<std::vector<std::string>> reference_tokens(const std::vector<std::string>& references) {
  std::vector<std::vector<std::string>> out;
  for (const auto& r : references) {
    auto toks = tokenize(r);
    if (!toks.empty()) out.push_back(std::move(toks));
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "no non-empty reference");
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// BLEU-2

double bleu2(std::string_view candidate, const std::vector<std::string>& references) {
  const auto cand = candidate_tokens(candidate);
  const auto refs = reference_tokens(references);
  const size_t max_n = std::min<size_t>(2, cand.size());

  double log_sum = 0.0;
  for (size_t n = 1; n <= max_n; ++n) {
    NgramCounts c = ngrams(cand, n);
    NgramCounts max_ref;
    for (const auto& r : refs) {
      for (const auto& [g, k] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], k);
    }
    int clipped = 0;
    int total = 0;
    for (const auto& [g, k] : c) {
      total += k;
      if (auto it = max_ref.find(g); it != max_ref.end()) clipped += std::min(k, it->second);
    }
    double p = clipped > 0 ? static_cast<double>(clipped) / total : kBleuEpsilon;
    log_sum += std::log(p);
  }

  // closest reference length, shorter wins ties
  size_t r_len = refs.front().size();
  for (const auto& r : refs) {
    long d = std::labs(static_cast<long>(r.size()) - static_cast<long>(cand.size()));
    long best = std::labs(static_cast<long>(r_len) - static_cast<long>(cand.size()));
    if (d < best || (d == best && r.size() < r_len)) r_len = r.size();
  }
  const double c_len = static_cast<double>(cand.size());
  double bp = c_len > static_cast<double>(r_len) ? 1.0 : std::exp(1.0 - static_cast<double>(r_len) / c_len);
  return bp * std::exp(log_sum / static_cast<double>(max_n));
}

// ---------------------------------------------------------------------------
// METEOR

MeteorAlignment meteor_align(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
                             const MeteorParams& params) {
  MeteorAlignment out;
  std::vector<int> cand_to_ref(cand.size(), -1);
  std::vector<bool> ref_used(ref.size(), false);

  std::vector<std::string> cand_stem, ref_stem;
  if (params.use_stem) {
    for (const auto& w : cand) cand_stem.push_back(text::porter_stem(w));
    for (const auto& w : ref) ref_stem.push_back(text::porter_stem(w));
  }
  auto synonym = [&](size_t i, size_t j) {
    auto a = params.synonyms.find(cand[i]);
    if (a != params.synonyms.end() && a->second.count(ref[j])) return true;
    auto b = params.synonyms.find(ref[j]);
    return b != params.synonyms.end() && b->second.count(cand[i]) > 0;
  };

  struct Stage {
    bool enabled;
    double weight;
    std::function<bool(size_t, size_t)> match;
  };
  std::vector<Stage> stages = {
      {true, params.exact_weight, [&](size_t i, size_t j) { return cand[i] == ref[j]; }},
      {params.use_stem, params.stem_weight, [&](size_t i, size_t j) { return cand_stem[i] == ref_stem[j]; }},
      {!params.synonyms.empty(), params.synonym_weight, synonym},
  };

  for (const auto& stage : stages) {
    if (!stage.enabled) continue;
    for (size_t i = 0; i < cand.size(); ++i) {
      if (cand_to_ref[i] >= 0) continue;
      // prefer the position extending the previous word's chunk, else the leftmost
      int preferred = (i > 0 && cand_to_ref[i - 1] >= 0) ? cand_to_ref[i - 1] + 1 : -1;
      int chosen = -1;
      for (size_t j = 0; j < ref.size(); ++j) {
        if (ref_used[j] || !stage.match(i, j)) continue;
        if (static_cast<int>(j) == preferred) {
          chosen = static_cast<int>(j);
          break;
        }
        if (chosen < 0) chosen = static_cast<int>(j);
      }
      if (chosen >= 0) {
        cand_to_ref[i] = chosen;
        ref_used[static_cast<size_t>(chosen)] = true;
        out.weighted += stage.weight;
      }
    }
  }

  for (size_t i = 0; i < cand.size(); ++i) {
    if (cand_to_ref[i] >= 0) out.pairs.emplace_back(i, static_cast<size_t>(cand_to_ref[i]));
  }
  out.matches = out.pairs.size();
  for (size_t k = 0; k < out.pairs.size(); ++k) {
    bool continues = k > 0 && out.pairs[k].first == out.pairs[k - 1].first + 1 &&
                     out.pairs[k].second == out.pairs[k - 1].second + 1;
    if (!continues) ++out.chunks;
  }
  return out;
}

double meteor(std::string_view candidate, const std::vector<std::string>& references, const MeteorParams& params) {
  const auto cand = candidate_tokens(candidate);
  const auto refs = reference_tokens(references);
  double best = 0.0;
  for (const auto& ref : refs) {
    MeteorAlignment a = meteor_align(cand, ref, params);
    if (a.matches == 0) continue;
    double p = a.weighted / static_cast<double>(cand.size());
    double r = a.weighted / static_cast<double>(ref.size());
    double fmean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
    double penalty = 0.0;
    bool perfect = a.matches == cand.size() && a.matches == ref.size() && a.chunks == 1;
    if (!perfect) {
      double frag = static_cast<double>(a.chunks) / static_cast<double>(a.matches);
      penalty = params.gamma * std::pow(frag, params.beta);
    }
    best = std::max(best, fmean * (1.0 - penalty));
  }
  return best;
}

// ---------------------------------------------------------------------------
// CIDEr

CiderResult cider(const std::vector<std::vector<std::string>>& candidates_by_instance,
                  const std::vector<std::vector<std::string>>& references_by_instance) {
  if (candidates_by_instance.size() != references_by_instance.size()) {
    throw Error(ErrorCode::kLengthMismatch, "candidates and references differ in instance count");
  }
  const size_t n_inst = references_by_instance.size();
  if (n_inst < 2) {
    throw Error(ErrorCode::kCorpusTooSmall, "CIDEr needs at least 2 instances, got " + std::to_string(n_inst));
  }
  constexpr size_t kMaxN = 4;

  // per instance, per n: reference n-gram counts
  std::vector<std::vector<std::array<NgramCounts, kMaxN>>> ref_counts(n_inst);
  std::array<std::map<std::vector<std::string>, int>, kMaxN> df;
  for (size_t i = 0; i < n_inst; ++i) {
    std::array<std::set<std::vector<std::string>>, kMaxN> seen;
    for (const auto& r : references_by_instance[i]) {
      auto toks = tokenize(r);
      std::array<NgramCounts, kMaxN> counts;
      for (size_t n = 0; n < kMaxN; ++n) {
        counts[n] = ngrams(toks, n + 1);
        for (const auto& [g, k] : counts[n]) seen[n].insert(g);
      }
      ref_counts[i].push_back(std::move(counts));
    }
    for (size_t n = 0; n < kMaxN; ++n) {
      for (const auto& g : seen[n]) ++df[n][g];
    }
  }
  const double log_n = std::log(static_cast<double>(n_inst));

  auto weigh = [&](const NgramCounts& counts, size_t n) {
    std::map<std::vector<std::string>, double> vec;
    for (const auto& [g, k] : counts) {
      auto it = df[n].find(g);
      double d = it == df[n].end() ? 1.0 : std::max(1.0, static_cast<double>(it->second));
      vec[g] = static_cast<double>(k) * (log_n - std::log(d));
    }
    return vec;
  };
  auto cosine = [](const std::map<std::vector<std::string>, double>& a,
                   const std::map<std::vector<std::string>, double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [g, v] : a) {
      na += v * v;
      if (auto it = b.find(g); it != b.end()) dot += v * it->second;
    }
    for (const auto& [g, v] : b) nb += v * v;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
  };

  CiderResult out;
  for (size_t i = 0; i < n_inst; ++i) {
    const auto& cands = candidates_by_instance[i];
    double inst_sum = 0.0;
    for (const auto& c : cands) {
      auto toks = tokenize(c);
      double score = 0.0;
      for (size_t n = 0; n < kMaxN; ++n) {
        auto cv = weigh(ngrams(toks, n + 1), n);
        double s = 0.0;
        for (const auto& rc : ref_counts[i]) s += cosine(cv, weigh(rc[n], n));
        if (!ref_counts[i].empty()) s /= static_cast<double>(ref_counts[i].size());
        score += s / static_cast<double>(kMaxN);
      }
      inst_sum += 10.0 * score;
    }
    out.per_instance.push_back(cands.empty() ? 0.0 : inst_sum / static_cast<double>(cands.size()));
  }
  double total = 0.0;
  for (double s : out.per_instance) total += s;
  out.mean = total / static_cast<double>(n_inst);
  return out;
}

// ---------------------------------------------------------------------------
// Candidate pools

std::string image_key(const assembly::CommonsenseInstance& inst) {
  if (inst.image) return inst.image->video_id + "#" + std::to_string(inst.image->segment_index);
  return "instance:" + inst.instance_id;
}

std::uint64_t pool_seed(std::uint64_t seed, const std::string& instance_id, InferenceType type) {
  return (seed * 0x9E3779B97F4A7C15ULL) ^
         text::fnv1a64(instance_id + "\x1f" + std::string(generation::inference_type_name(type)));
}

namespace {

std::map<std::string, std::string> canonical_set(const std::vector<std::string>& values) {
  std::map<std::string, std::string> out;
  for (const auto& v : values) {
    std::string key = canonical(v);
    if (key.empty()) continue;
    auto it = out.find(key);
    if (it == out.end() || v < it->second) out[key] = v;
  }
  return out;
}

}  // namespace

std::vector<std::string> eligible_negatives(const assembly::CommonsenseInstance& inst, InferenceType type,
                                            const std::vector<const assembly::CommonsenseInstance*>& pool_sources) {
  auto gt = canonical_set(generation::ground_truth(inst, type));
  const std::string own = image_key(inst);
  std::vector<std::string> values;
  for (const auto* other : pool_sources) {
    if (!other || image_key(*other) == own) continue;
    for (const auto& v : generation::ground_truth(*other, type)) values.push_back(v);
  }
  std::vector<std::string> out;
  for (const auto& [key, surface] : canonical_set(values)) {
    if (!gt.count(key)) out.push_back(surface);
  }
  return out;
}

CandidatePool build_candidate_pool(const assembly::CommonsenseInstance& inst, InferenceType type,
                                   const std::vector<const assembly::CommonsenseInstance*>& pool_sources,
                                   std::uint64_t seed) {
  CandidatePool pool;
  pool.instance_id = inst.instance_id;
  pool.type = type;
  for (const auto& [key, surface] : canonical_set(generation::ground_truth(inst, type))) {
    if (pool.candidates.size() + 1 >= kPoolSize) break;
    pool.candidates.push_back({surface, true});
  }
  pool.gt_count = pool.candidates.size();
  if (pool.gt_count == 0) {
    throw Error(ErrorCode::kInvalidArgument, "instance " + inst.instance_id + " has no " +
                                                 std::string(generation::inference_type_name(type)) + " inference");
  }
  auto negatives = eligible_negatives(inst, type, pool_sources);
  const size_t need = kPoolSize - pool.gt_count;
  if (negatives.size() < need) {
    throw Error(ErrorCode::kInsufficientNegatives,
                "instance " + inst.instance_id + " (" + std::string(generation::inference_type_name(type)) + "): " +
                    std::to_string(negatives.size()) + " eligible negatives, need " + std::to_string(need));
  }
  std::mt19937_64 rng(pool_seed(seed, inst.instance_id, type));
  const size_t n = negatives.size();
  for (size_t i = 0; i < need; ++i) {
    size_t j = i + static_cast<size_t>(rng() % (n - i));
    std::swap(negatives[i], negatives[j]);
    pool.candidates.push_back({negatives[i], false});
  }
  return pool;
}

CandidatePool build_candidate_pool(const assembly::CommonsenseInstance& inst, InferenceType type,
                                   const std::vector<assembly::CommonsenseInstance>& dataset, std::uint64_t seed) {
  std::vector<const assembly::CommonsenseInstance*> sources;
  sources.reserve(dataset.size());
  for (const auto& d : dataset) sources.push_back(&d);
  return build_candidate_pool(inst, type, sources, seed);
}

std::vector<size_t> rank_pool(const ScoredPool& pool) {
  for (const auto& c : pool.candidates) {
    if (!c.scored()) {
      throw Error(ErrorCode::kUnscoredCandidate, "pool " + pool.instance_id + ": '" + c.text + "' has no score");
    }
  }
  std::vector<size_t> order(pool.candidates.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const auto& x = pool.candidates[a];
    const auto& y = pool.candidates[b];
    return x.nll != y.nll ? x.nll < y.nll : x.text < y.text;
  });
  return order;
}

double pool_accuracy(const ScoredPool& pool, HitRule rule) {
  if (pool.candidates.size() != kPoolSize) {
    throw Error(ErrorCode::kInvalidArgument, "pool " + pool.instance_id + " has " +
                                                 std::to_string(pool.candidates.size()) + " candidates");
  }
  size_t flagged = 0;
  for (const auto& c : pool.candidates) flagged += c.is_ground_truth ? 1 : 0;
  if (pool.gt_count == 0 || flagged != pool.gt_count) {
    throw Error(ErrorCode::kInvalidArgument, "pool " + pool.instance_id + " ground-truth count mismatch");
  }
  auto order = rank_pool(pool);
  if (rule == HitRule::kTop1) return pool.candidates[order.front()].is_ground_truth ? 1.0 : 0.0;
  size_t hits = 0;
  for (size_t k = 0; k < pool.gt_count; ++k) hits += pool.candidates[order[k]].is_ground_truth ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pool.gt_count);
}

double acc_at_50(const std::vector<ScoredPool>& pools, HitRule rule) {
  if (pools.empty()) throw Error(ErrorCode::kEmptyList, "no candidate pools");
  double sum = 0.0;
  for (const auto& p : pools) sum += pool_accuracy(p, rule);
  return sum / static_cast<double>(pools.size());
}

// ---------------------------------------------------------------------------
// Diversity and agreement

double uniqueness(const std::vector<std::string>& generated) {
  if (generated.empty()) throw Error(ErrorCode::kEmptyList, "uniqueness of an empty list");
  std::set<std::string> distinct;
  for (const auto& g : generated) distinct.insert(canonical(g));
  return static_cast<double>(distinct.size()) / static_cast<double>(generated.size());
}

std::set<std::string> training_set(const std::vector<std::string>& inferences) {
  std::set<std::string> out;
  for (const auto& s : inferences) out.insert(canonical(s));
  return out;
}

double novelty(const std::vector<std::string>& generated, const std::set<std::string>& training) {
  if (generated.empty()) throw Error(ErrorCode::kEmptyList, "novelty of an empty list");
  size_t novel = 0;
  for (const auto& g : generated) novel += training.count(canonical(g)) ? 0 : 1;
  return static_cast<double>(novel) / static_cast<double>(generated.size());
}

double cohen_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b,
                   const std::vector<std::string>& categories) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " ratings");
  }
  if (a.empty()) throw Error(ErrorCode::kEmptyList, "no ratings");
  std::map<std::string, double> ca, cb;
  for (const auto& c : categories) ca[c] = cb[c] = 0.0;
  double agree = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!ca.count(a[i]) || !cb.count(b[i])) {
      throw Error(ErrorCode::kInvalidArgument, "rating outside the category set at position " + std::to_string(i));
    }
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    agree += a[i] == b[i] ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(a.size());
  double po = agree / n;
  double pe = 0.0;
  for (const auto& c : categories) pe += (ca[c] / n) * (cb[c] / n);
  if (std::fabs(1.0 - pe) < 1e-12) throw Error(ErrorCode::kDegenerateAgreement, "expected agreement is 1");
  return (po - pe) / (1.0 - pe);
}

const std::vector<KappaReference>& reference_kappas() {
  static const std::vector<KappaReference> rows = {
      {"precondition", "Pp2", 0.78, 0.76}, {"effect", "Pe4", 0.68, 0.66}, {"goal", "Pg4", 0.74, 0.83},
      {"before", "Pb3", 0.81, 0.81},       {"after", "Pa3", 0.71, 0.77},
  };
  return rows;
}

// ---------------------------------------------------------------------------
// Reports

EvalReport aggregate_report(const ScoreGrid& grid, const std::vector<std::string>& types,
                            const std::vector<std::string>& conditions) {
  EvalReport report;
  std::vector<std::string> missing;
  for (const auto& cond : conditions) {
    for (const auto& type : types) {
      auto it = grid.find({type, cond});
      if (it == grid.end()) {
        missing.push_back("(" + type + ", " + cond + ")");
        continue;
      }
      report.rows.push_back({type, cond, it->second});
    }
  }
  if (!missing.empty()) throw Error(ErrorCode::kMissingCell, text::join(missing, ", "));
  return report;
}

EvalReport collapse_types(const EvalReport& report) {
  EvalReport out;
  out.notes = report.notes;
  std::vector<std::string> order;
  std::map<std::string, std::vector<const MetricScores*>> by_condition;
  for (const auto& row : report.rows) {
    if (!by_condition.count(row.condition)) order.push_back(row.condition);
    by_condition[row.condition].push_back(&row.scores);
  }
  for (const auto& cond : order) {
    const auto& cells = by_condition[cond];
    MetricScores m;
    double a50 = 0.0;
    size_t n_a50 = 0;
    for (const auto* c : cells) {
      m.bleu += c->bleu;
      m.meteor += c->meteor;
      m.cider += c->cider;
      m.unique += c->unique;
      m.novel += c->novel;
      if (c->acc50) {
        a50 += *c->acc50;
        ++n_a50;
      }
    }
    const double k = static_cast<double>(cells.size());
    m.bleu /= k;
    m.meteor /= k;
    m.cider /= k;
    m.unique /= k;
    m.novel /= k;
    if (n_a50 > 0) m.acc50 = a50 / static_cast<double>(n_a50);
    out.rows.push_back({"all", cond, m});
  }
  return out;
}

namespace {

double round4(double v) { return std::round(v * 1e4) / 1e4; }

std::string fixed(double v, int places) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(places) << v;
  return s.str();
}

}  // namespace

json report_to_json(const EvalReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    const auto& s = r.scores;
    rows.push_back({{"type", r.type},
                    {"condition", r.condition},
                    {"B", round4(100.0 * s.bleu)},
                    {"M", round4(100.0 * s.meteor)},
                    {"C", round4(10.0 * s.cider)},
                    {"A50", s.acc50 ? json(round4(100.0 * *s.acc50)) : json(nullptr)},
                    {"unique", round4(100.0 * s.unique)},
                    {"novel", round4(100.0 * s.novel)}});
  }
  return {{"rows", rows}, {"notes", report.notes}};
}

EvalReport report_from_json(const json& j) {
  EvalReport report;
  try {
    for (const auto& r : j.at("rows")) {
      MetricScores s;
      s.bleu = r.at("B").get<double>() / 100.0;
      s.meteor = r.at("M").get<double>() / 100.0;
      s.cider = r.at("C").get<double>() / 10.0;
      if (!r.at("A50").is_null()) s.acc50 = r.at("A50").get<double>() / 100.0;
      s.unique = r.at("unique").get<double>() / 100.0;
      s.novel = r.at("novel").get<double>() / 100.0;
      report.rows.push_back({r.at("type").get<std::string>(), r.at("condition").get<std::string>(), s});
    }
    for (const auto& n : j.value("notes", json::array())) report.notes.push_back(n.get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedAnnotation, std::string("bad report: ") + e.what());
  }
  return report;
}

std::string report_to_text(const EvalReport& report) {
  std::vector<std::array<std::string, 8>> cells;
  cells.push_back({"Type", "Condition", "B", "M", "C", "A@50", "Unique", "Novel"});
  for (const auto& r : report.rows) {
    const auto& s = r.scores;
    cells.push_back({r.type, r.condition, fixed(100.0 * s.bleu, 2), fixed(100.0 * s.meteor, 2),
                     fixed(10.0 * s.cider, 2), s.acc50 ? fixed(100.0 * *s.acc50, 2) : "-",
                     fixed(100.0 * s.unique, 2), fixed(100.0 * s.novel, 2)});
  }
  std::array<size_t, 8> width{};
  for (const auto& row : cells) {
    for (size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : cells) {
    std::string line;
    for (size_t c = 0; c < row.size(); ++c) {
      std::string cell = row[c];
      if (c < 2) {
        cell.resize(width[c], ' ');
      } else {
        cell = std::string(width[c] - cell.size(), ' ') + cell;
      }
      line += (c ? "  " : "") + cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << "\n";
  }
  for (const auto& n : report.notes) out << "note: " << n << "\n";
  return out.str();
}

std::string report_to_csv(const EvalReport& report) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  std::ostringstream out;
  out << "type,condition,B,M,C,A50,unique,novel\n";
  for (const auto& r : report.rows) {
    const auto& s = r.scores;
    out << quote(r.type) << ',' << quote(r.condition) << ',' << fixed(100.0 * s.bleu, 4) << ','
        << fixed(100.0 * s.meteor, 4) << ',' << fixed(10.0 * s.cider, 4) << ','
        << (s.acc50 ? fixed(100.0 * *s.acc50, 4) : "") << ',' << fixed(100.0 * s.unique, 4) << ','
        << fixed(100.0 * s.novel, 4) << "\n";
  }
  return out.str();
}

const std::vector<ReferenceRow>& reference_modality_rows() {
  static const std::vector<ReferenceRow> rows = {
      {"Image", 7.34, 8.12, 6.55, 13.60, 23.14, 45.30},
      {"Image + OG", 9.02, 10.45, 8.67, 16.37, 26.30, 48.26},
      {"AO Pair", 6.77, 9.01, 7.66, 11.35, 32.36, 56.12},
      {"TextDesc", 7.43, 8.74, 6.80, 13.52, 34.00, 53.18},
      {"AO Pair + TextDesc", 7.49, 8.68, 6.91, 13.47, 35.23, 52.84},
      {"Image + TextDesc", 10.32, 11.18, 9.85, 18.55, 37.12, 54.11},
      {"Image + AO Pair", 15.45, 17.10, 16.85, 21.28, 35.33, 50.45},
      {"Image + TextDesc + AO Pair", 15.76, 17.08, 16.77, 22.01, 34.61, 51.06},
      {"Image + TextDesc + OG", 17.44, 18.56, 17.20, 24.08, 36.31, 49.56},
      {"Image + TextDesc + AO Pair + OG", 17.21, 18.67, 17.35, 23.57, 37.31, 51.56},
  };
  return rows;
}

const std::vector<ReferenceRow>& reference_prompt_rows() {
  static const std::vector<ReferenceRow> rows = {
      {"Pp1", 17.09, 18.43, 17.65, 23.31, 37.48, 51.78}, {"Pp2", 18.33, 20.41, 19.19, 24.28, 36.78, 50.55},
      {"Pp3", 18.19, 18.67, 18.48, 23.01, 39.22, 51.99}, {"Pp4", 17.57, 19.42, 19.79, 24.04, 37.44, 50.35},
      {"Pe1", 13.36, 16.22, 15.44, 17.81, 36.18, 42.55}, {"Pe2", 12.69, 15.57, 14.81, 17.55, 37.12, 40.24},
      {"Pe3", 13.25, 16.07, 15.56, 18.11, 36.26, 43.78}, {"Pe4", 15.34, 17.34, 16.66, 18.27, 35.42, 43.35},
      {"Pg1", 15.27, 17.45, 16.89, 20.01, 38.58, 40.66}, {"Pg2", 15.56, 18.35, 17.73, 18.87, 39.47, 41.23},
      {"Pg3", 14.80, 17.54, 15.88, 19.41, 40.20, 42.14}, {"Pg4", 16.23, 18.89, 17.77, 20.24, 37.20, 43.67},
      {"Pb1", 21.05, 23.44, 20.81, 26.67, 30.34, 45.13}, {"Pb2", 20.66, 22.68, 19.72, 24.12, 31.59, 41.47},
      {"Pb3", 21.34, 24.05, 21.67, 25.78, 30.56, 43.25}, {"Pb4", 19.08, 21.82, 22.01, 25.12, 31.22, 42.42},
      {"Pa1", 17.87, 20.11, 17.89, 24.31, 33.01, 46.22}, {"Pa2", 16.46, 19.87, 17.88, 23.16, 30.29, 42.45},
      {"Pa3", 19.03, 22.41, 20.21, 25.37, 34.11, 45.27}, {"Pa4", 17.56, 21.61, 19.33, 24.03, 31.29, 43.65},
  };
  return rows;
}

}  // namespace actionsense::metrics
