#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <regex>
#include <set>

#include "actionsense/error.hpp"
#include "actionsense/metrics.hpp"
#include "actionsense/text.hpp"
#include "helpers.hpp"

using namespace actionsense;
using namespace actionsense::metrics;
using generation::InferenceType;
using generation::ScoredCandidate;

namespace {

using Gram = std::vector<std::string>;

std::vector<std::string> toks(const std::string& s) {
  return text::tokenize(std::regex_replace(s, std::regex(R"(\[Object\d+\])"), "[Object]"));
}

std::map<Gram, int> grams(const std::vector<std::string>& t, size_t n) {
  std::map<Gram, int> out;
  for (size_t i = 0; i + n <= t.size(); ++i) ++out[Gram(t.begin() + i, t.begin() + i + n)];
  return out;
}

// Textbook sentence BLEU-2 with epsilon for zero precisions.
double bleu_oracle(const std::string& cand, const std::vector<std::string>& refs) {
  auto c = toks(cand);
  std::vector<std::vector<std::string>> rs;
  for (const auto& r : refs) rs.push_back(toks(r));
  const size_t max_n = c.size() == 1 ? 1 : 2;
  double log_sum = 0.0;
  for (size_t n = 1; n <= max_n; ++n) {
    auto cg = grams(c, n);
    int clipped = 0, total = 0;
    for (const auto& [g, k] : cg) {
      int best = 0;
      for (const auto& r : rs) {
        auto rg = grams(r, n);
        if (rg.count(g)) best = std::max(best, rg[g]);
      }
      clipped += std::min(k, best);
      total += k;
    }
    double p = total ? double(clipped) / total : 0.0;
    log_sum += std::log(p > 0 ? p : 1e-9) / double(max_n);
  }
  size_t r_len = rs[0].size();
  for (const auto& r : rs) {
    long d = std::labs(long(r.size()) - long(c.size()));
    long bd = std::labs(long(r_len) - long(c.size()));
    if (d < bd || (d == bd && r.size() < r_len)) r_len = r.size();
  }
  double bp = c.size() > r_len ? 1.0 : std::exp(1.0 - double(r_len) / double(c.size()));
  return bp * std::exp(log_sum);
}

// Explicit TF-IDF vectors, n = 1..4, cosine averaged over references and n, times 10.
std::vector<double> cider_oracle(const std::vector<std::string>& cands, const std::vector<std::vector<std::string>>& refs) {
  const double N = double(refs.size());
  std::map<Gram, double> df;
  for (const auto& rs : refs) {
    std::set<Gram> seen;
    for (const auto& r : rs) {
      for (size_t n = 1; n <= 4; ++n) {
        for (const auto& [g, k] : grams(toks(r), n)) seen.insert(g);
      }
    }
    for (const auto& g : seen) df[g] += 1.0;
  }
  auto vec = [&](const std::string& s, size_t n) {
    std::map<Gram, double> v;
    for (const auto& [g, k] : grams(toks(s), n)) v[g] = k * (std::log(N) - std::log(std::max(1.0, df[g])));
    return v;
  };
  std::vector<double> out;
  for (size_t i = 0; i < cands.size(); ++i) {
    double score = 0.0;
    for (size_t n = 1; n <= 4; ++n) {
      auto cv = vec(cands[i], n);
      double s = 0.0;
      for (const auto& r : refs[i]) {
        auto rv = vec(r, n);
        double dot = 0.0, a = 0.0, b = 0.0;
        for (const auto& [g, x] : cv) {
          a += x * x;
          if (rv.count(g)) dot += x * rv[g];
        }
        for (const auto& [g, x] : rv) b += x * x;
        s += (a > 0 && b > 0) ? dot / std::sqrt(a * b) : 0.0;
      }
      score += s / double(refs[i].size()) / 4.0;
    }
    out.push_back(10.0 * score);
  }
  return out;
}

assembly::CommonsenseInstance with_pre(int i, const std::string& pre) {
  auto inst = testutil::make_instance("i" + std::to_string(i), "vid" + std::to_string(i), 1);
  inst.preconditions.add(pre);
  return inst;
}

ScoredPool scored(const std::vector<std::pair<std::string, double>>& nlls, size_t gt_count) {
  ScoredPool p;
  p.instance_id = "pool";
  p.gt_count = gt_count;
  for (size_t i = 0; i < nlls.size(); ++i) {
    ScoredCandidate c;
    c.text = nlls[i].first;
    c.nll = nlls[i].second;
    c.perplexity = std::exp(c.nll);
    c.is_ground_truth = i < gt_count;
    p.candidates.push_back(c);
  }
  return p;
}

void expect_code(ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("object tags") {
  CHECK(normalize_object_tags("[Object1] is golden") == normalize_object_tags("[Object2] is golden"));
  CHECK(normalize_object_tags("no tags here") == "no tags here");
  const std::string mixed = "[Object12] near [Object3]";
  CHECK(normalize_object_tags(mixed) == std::regex_replace(mixed, std::regex(R"(\[Object\d+\])"), "[Object]"));
}

TEST_CASE("BLEU-2") {
  CHECK(bleu2("fry the bacon", {"fry the bacon"}) == doctest::Approx(1.0));
  CHECK(bleu2("fry the bacon", {"cook the bacon"}) == doctest::Approx(std::sqrt(2.0 / 3.0 * 0.5)).epsilon(1e-9));
  CHECK(bleu2("fry the bacon", {"cook the bacon"}) == doctest::Approx(0.5774).epsilon(1e-4));
  CHECK(bleu2("alpha beta", {"gamma delta"}) < 1e-8);
  CHECK(bleu2("bacon", {"bacon"}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(bleu2("", {"x"}), Error);

  std::mt19937_64 rng(8);
  const std::vector<std::string> words = {"fry", "the", "bacon", "egg", "pan", "[Object1]", "[Object2]", "a", "cut"};
  auto sentence = [&](size_t lo, size_t hi) {
    std::string s;
    size_t n = lo + rng() % (hi - lo + 1);
    for (size_t i = 0; i < n; ++i) s += (i ? " " : "") + words[rng() % words.size()];
    return s;
  };
  for (int i = 0; i < 500; ++i) {
    std::string c = sentence(1, 7);
    std::vector<std::string> refs = {sentence(1, 8), sentence(1, 8)};
    double b = bleu2(c, refs);
    CHECK(b == doctest::Approx(bleu_oracle(c, refs)).epsilon(1e-9));
    CHECK(b >= 0.0);
    CHECK(b <= 1.0 + 1e-12);
  }
}

TEST_CASE("METEOR") {
  CHECK(meteor("fry the bacon", {"fry the bacon"}) == doctest::Approx(1.0));
  CHECK(meteor("alpha beta", {"gamma delta"}) == 0.0);

  // two breaks: "fry the bacon" | "in" | "pan"
  auto a = meteor_align(text::tokenize("fry the bacon in a pan"), text::tokenize("fry the bacon until crisp in the pan"));
  CHECK(a.matches == 5);
  CHECK(a.chunks == 3);
  const double p = 5.0 / 6.0, r = 5.0 / 8.0;
  const double fmean = p * r / (0.85 * p + 0.15 * r);
  const double expect = fmean * (1.0 - 0.6 * std::pow(3.0 / 5.0, 0.2));
  CHECK(meteor("fry the bacon in a pan", {"fry the bacon until crisp in the pan"}) == doctest::Approx(expect));
  CHECK(expect == doctest::Approx(0.29758).epsilon(1e-4));

  // stem stage: cooking ~ cooked at weight 0.6
  CHECK(meteor("cooking bacon", {"cooked bacon"}) == doctest::Approx(0.8));
  MeteorParams exact_only;
  exact_only.use_stem = false;
  const double pe = 0.5, fm = pe * pe / (0.85 * pe + 0.15 * pe);
  CHECK(meteor("cooking bacon", {"cooked bacon"}, exact_only) == doctest::Approx(fm * (1.0 - 0.6 * std::pow(1.0, 0.2))));

  MeteorParams syn;
  syn.synonyms["skillet"] = {"pan"};
  CHECK(meteor("heat skillet", {"heat pan"}, syn) > meteor("heat skillet", {"heat pan"}));

  // best reference wins
  CHECK(meteor("fry the bacon", {"boil water", "fry the bacon"}) == doctest::Approx(1.0));
}

TEST_CASE("CIDEr") {
  // the shared "the" has zero idf; 1-, 2- and 3-gram cosines are 1, no 4-grams
  std::vector<std::vector<std::string>> refs = {{"fry the bacon"}, {"boil the water"}};
  auto self = cider({{"fry the bacon"}, {"boil the water"}}, refs);
  CHECK(self.per_instance[0] == doctest::Approx(7.5));
  CHECK(self.per_instance[0] == doctest::Approx(cider_oracle({"fry the bacon", "boil the water"}, refs)[0]));

  auto disjoint = cider({{"xx yy"}, {"zz ww"}}, refs);
  CHECK(disjoint.per_instance == std::vector<double>{0.0, 0.0});
  expect_code(ErrorCode::kCorpusTooSmall, [] { cider({{"a"}}, {{"a"}}); });

  std::mt19937_64 rng(4);
  const std::vector<std::string> words = {"fry", "the", "bacon", "egg", "pan", "boil", "water", "[Object1]", "[Object4]"};
  auto sentence = [&]() {
    std::string s;
    size_t n = 1 + rng() % 7;
    for (size_t i = 0; i < n; ++i) s += (i ? " " : "") + words[rng() % words.size()];
    return s;
  };
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 2 + rng() % 6;
    std::vector<std::string> cands;
    std::vector<std::vector<std::string>> rs;
    for (size_t i = 0; i < n; ++i) {
      cands.push_back(sentence());
      rs.push_back({sentence(), sentence()});
    }
    std::vector<std::vector<std::string>> wrapped;
    for (const auto& c : cands) wrapped.push_back({c});
    auto got = cider(wrapped, rs);
    auto expect = cider_oracle(cands, rs);
    for (size_t i = 0; i < n; ++i) CHECK(got.per_instance[i] == doctest::Approx(expect[i]).epsilon(1e-9));

    // permutation invariance
    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<std::string>> pc, pr;
    for (size_t i : perm) {
      pc.push_back(wrapped[i]);
      pr.push_back(rs[i]);
    }
    auto permuted = cider(pc, pr);
    for (size_t k = 0; k < n; ++k) CHECK(permuted.per_instance[k] == doctest::Approx(got.per_instance[perm[k]]));
    CHECK(permuted.mean == doctest::Approx(got.mean));
  }
}

TEST_CASE("tag renaming leaves every text metric unchanged") {
  const std::string c1 = "put [Object1] on [Object2]", c2 = "put [Object7] on [Object3]";
  const std::vector<std::string> r1 = {"place [Object1] on [Object2]"}, r2 = {"place [Object5] on [Object9]"};
  CHECK(bleu2(c1, r1) == doctest::Approx(bleu2(c2, r2)));
  CHECK(meteor(c1, r1) == doctest::Approx(meteor(c2, r2)));
  auto a = cider({{c1}, {"boil water"}}, {r1, {"boil the water"}});
  auto b = cider({{c2}, {"boil water"}}, {r2, {"boil the water"}});
  CHECK(a.mean == doctest::Approx(b.mean));
  CHECK(uniqueness({c1, c2}) == doctest::Approx(0.5));
}

TEST_CASE("candidate pools") {
  std::vector<assembly::CommonsenseInstance> ds;
  for (int i = 0; i < 50; ++i) ds.push_back(with_pre(i, "item " + std::to_string(i)));
  auto pool = build_candidate_pool(ds[0], InferenceType::kPrecondition, ds, 13);
  REQUIRE(pool.candidates.size() == kPoolSize);
  CHECK(pool.gt_count == 1);
  CHECK(pool.candidates[0] == PoolCandidate{"item 0", true});
  std::set<std::string> texts;
  for (const auto& c : pool.candidates) texts.insert(c.text);
  CHECK(texts.size() == kPoolSize);

  // exactly 49 negatives: every one is used
  ds.pop_back();
  expect_code(ErrorCode::kInsufficientNegatives, [&] { build_candidate_pool(ds[0], InferenceType::kPrecondition, ds, 13); });

  // same image contributes nothing
  for (int i = 49; i < 80; ++i) ds.push_back(with_pre(i, "item " + std::to_string(i)));
  auto twin = with_pre(999, "twin item");
  twin.image = ds[0].image;
  ds.push_back(twin);
  auto p13 = build_candidate_pool(ds[0], InferenceType::kPrecondition, ds, 13);
  for (const auto& c : p13.candidates) CHECK(c.text != "twin item");

  auto again = build_candidate_pool(ds[0], InferenceType::kPrecondition, ds, 13);
  CHECK(again.candidates == p13.candidates);
  auto p14 = build_candidate_pool(ds[0], InferenceType::kPrecondition, ds, 14);
  CHECK(p14.candidates != p13.candidates);

  // independent re-run of the sampler
  std::map<std::string, std::string> eligible;
  for (const auto& d : ds) {
    if (image_key(d) == image_key(ds[0])) continue;
    for (const auto& v : d.preconditions.values()) {
      auto key = canonical(v);
      if (key == canonical("item 0")) continue;
      if (!eligible.count(key) || v < eligible[key]) eligible[key] = v;
    }
  }
  std::vector<std::string> neg;
  for (const auto& [k, v] : eligible) neg.push_back(v);
  std::mt19937_64 rng(pool_seed(13, ds[0].instance_id, InferenceType::kPrecondition));
  std::vector<std::string> expect = {"item 0"};
  for (size_t i = 0; i < 49; ++i) {
    size_t j = i + rng() % (neg.size() - i);
    std::swap(neg[i], neg[j]);
    expect.push_back(neg[i]);
  }
  std::vector<std::string> got;
  for (const auto& c : p13.candidates) got.push_back(c.text);
  CHECK(got == expect);
}

TEST_CASE("ground truth capped at 49") {
  std::vector<assembly::CommonsenseInstance> ds;
  auto big = with_pre(0, "gt 0");
  for (int i = 1; i < 70; ++i) big.preconditions.add("gt " + std::to_string(i));
  ds.push_back(big);
  ds.push_back(with_pre(1, "negative"));
  auto pool = build_candidate_pool(ds[0], InferenceType::kPrecondition, ds, 13);
  CHECK(pool.gt_count == 49);
  CHECK(pool.candidates.size() == 50);
  CHECK_FALSE(pool.candidates.back().is_ground_truth);
}

TEST_CASE("Acc@50") {
  std::vector<std::pair<std::string, double>> sep = {{"gt", 0.0}};
  for (int i = 0; i < 49; ++i) sep.push_back({"n" + std::to_string(i), 1e9});
  CHECK(acc_at_50({scored(sep, 1)}) == 1.0);

  // rank-based: a monotone transform of the scores changes nothing
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  const int n_pools = 10000;
  std::vector<ScoredPool> pools;
  for (int k = 0; k < n_pools; ++k) {
    std::vector<std::pair<std::string, double>> nlls;
    for (int i = 0; i < 50; ++i) nlls.push_back({"c" + std::to_string(i), u(rng)});
    pools.push_back(scored(nlls, 1));
  }
  const double acc = acc_at_50(pools);
  const double sigma = std::sqrt(0.02 * 0.98 / n_pools);
  CHECK(std::fabs(acc - 0.02) < 3 * sigma);
  auto transformed = pools;
  for (auto& p : transformed) {
    for (auto& c : p.candidates) c.nll = std::exp(3.0 * c.nll) + 1.0;
  }
  CHECK(acc_at_50(transformed) == acc);

  // ties fall back to candidate text
  std::vector<std::pair<std::string, double>> ties = {{"aaa", 1.0}};
  for (int i = 0; i < 49; ++i) ties.push_back({"n" + std::to_string(i), 1.0});
  CHECK(pool_accuracy(scored(ties, 1)) == 1.0);
  ties[0].first = "zzz";
  CHECK(pool_accuracy(scored(ties, 1)) == 0.0);

  // two ground truths, one in the top two
  std::vector<std::pair<std::string, double>> two = {{"g1", 0.1}, {"g2", 3.0}, {"n0", 0.2}};
  for (int i = 1; i < 48; ++i) two.push_back({"n" + std::to_string(i), 5.0});
  CHECK(pool_accuracy(scored(two, 2)) == 0.5);
  CHECK(pool_accuracy(scored(two, 2), HitRule::kTop1) == 1.0);

  auto unscored = scored(sep, 1);
  unscored.candidates[3].nll = std::nan("");
  expect_code(ErrorCode::kUnscoredCandidate, [&] { acc_at_50({unscored}); });
  expect_code(ErrorCode::kEmptyList, [] { acc_at_50({}); });
}

TEST_CASE("uniqueness and novelty") {
  CHECK(uniqueness({"a b", "a b", "a b"}) == doctest::Approx(1.0 / 3.0));
  CHECK(uniqueness({"a", "b", "c"}) == 1.0);
  CHECK(uniqueness({"[Object1] is golden", "[Object2] is golden", "cut it", "Cut it.", "fry", "boil"}) ==
        doctest::Approx(0.6667).epsilon(1e-4));
  expect_code(ErrorCode::kEmptyList, [] { uniqueness({}); });

  auto train = training_set({"fry the bacon", "[Object3] is crispy"});
  CHECK(novelty({"Fry the bacon.", "[Object1] is crispy"}, train) == 0.0);
  CHECK(novelty({"anything"}, {}) == 1.0);
  std::vector<std::string> gen = {"fry the bacon", "boil water", "[Object9] is crispy", "mash it"};
  double brute = 0.0;
  for (const auto& g : gen) brute += train.count(text::join(toks(g), " ")) ? 0.0 : 1.0;
  CHECK(novelty(gen, train) == doctest::Approx(brute / gen.size()));
  auto bigger = train;
  bigger.insert("boil water");
  CHECK(novelty(gen, bigger) <= novelty(gen, train));
}

TEST_CASE("Cohen's kappa") {
  std::vector<std::string> a, b;
  auto add = [&](const char* x, const char* y, int n) {
    for (int i = 0; i < n; ++i) {
      a.push_back(x);
      b.push_back(y);
    }
  };
  add("yes", "yes", 20);
  add("yes", "no", 5);
  add("no", "yes", 10);
  add("no", "no", 15);
  // po = 0.7, pe = 0.5*0.6 + 0.5*0.4 = 0.5
  CHECK(cohen_kappa(a, b, {"yes", "no"}) == doctest::Approx(0.4));
  CHECK(cohen_kappa({"yes", "no"}, {"yes", "no"}, {"yes", "no"}) == doctest::Approx(1.0));
  expect_code(ErrorCode::kLengthMismatch, [] { cohen_kappa({"yes"}, {}, {"yes", "no"}); });
  expect_code(ErrorCode::kDegenerateAgreement, [] { cohen_kappa({"yes", "yes"}, {"yes", "yes"}, {"yes", "no"}); });
  CHECK(reference_kappas()[0].prompt == "Pp2");
  CHECK(reference_kappas()[0].correctness == 0.78);
}

TEST_CASE("reports") {
  ScoreGrid grid;
  const std::vector<std::string> types = {"precondition", "effect"};
  const std::vector<std::string> conds = {"Image", "AO Pair", "TextDesc"};
  double x = 0.01;
  for (const auto& c : conds) {
    for (const auto& t : types) {
      grid[{t, c}] = MetricScores{x, x, 10 * x, t == "effect" ? std::nullopt : std::optional<double>(x), x, x};
      x += 0.01;
    }
  }
  auto report = aggregate_report(grid, types, conds);
  REQUIRE(report.rows.size() == 6);
  CHECK(report.rows[0].condition == "Image");
  CHECK(report.rows[0].type == "precondition");
  CHECK(report.rows[1].type == "effect");

  auto j = report_to_json(report);
  for (const auto& row : j["rows"]) {
    std::set<std::string> keys;
    for (const auto& [k, v] : row.items()) keys.insert(k);
    CHECK(keys == std::set<std::string>{"type", "condition", "B", "M", "C", "A50", "unique", "novel"});
  }
  CHECK(j["rows"][0]["B"] == 1.0);
  CHECK(j["rows"][0]["C"] == 1.0);
  CHECK(j["rows"][1]["A50"].is_null());
  CHECK(report_to_json(report_from_json(j)) == j);
  CHECK(report_to_csv(report).find("type,condition,B,M,C,A50,unique,novel") == 0);
  CHECK(report_to_text(report).find("AO Pair") != std::string::npos);

  auto collapsed = collapse_types(report);
  REQUIRE(collapsed.rows.size() == 3);
  CHECK(collapsed.rows[0].type == "all");
  CHECK(collapsed.rows[0].scores.bleu == doctest::Approx(0.015));
  REQUIRE(collapsed.rows[0].scores.acc50);
  CHECK(*collapsed.rows[0].scores.acc50 == doctest::Approx(0.01));

  grid.erase({"effect", "AO Pair"});
  try {
    aggregate_report(grid, types, conds);
    FAIL("expected MissingCell");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingCell);
    CHECK(std::string(e.what()).find("(effect, AO Pair)") != std::string::npos);
  }

  bool found = false;
  for (const auto& r : reference_prompt_rows()) {
    if (r.condition == "Pp2") {
      found = true;
      CHECK(r.b == 18.33);
      CHECK(r.m == 20.41);
      CHECK(r.c == 19.19);
      CHECK(r.a50 == 24.28);
    }
  }
  CHECK(found);
}
