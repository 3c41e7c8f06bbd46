#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "actionsense/corpus.hpp"
#include "actionsense/error.hpp"
#include "actionsense/extraction.hpp"
#include "actionsense/text.hpp"
#include "helpers.hpp"

using namespace actionsense;
using namespace actionsense::extraction;
using testutil::fixture;

namespace {

using PairSet = std::set<std::pair<std::string, std::string>>;

PairSet as_set(const std::vector<VerbIngredientPair>& pairs) {
  PairSet out;
  for (const auto& p : pairs) out.insert({p.verb, p.ingredient});
  return out;
}

ParseResult gold_crack_whisk() {
  ParseResult p;
  p.tokens = {{"crack", "crack", "VERB"}, {"the", "the", "DET"},     {"eggs", "egg", "NOUN"}, {"and", "and", "CCONJ"},
              {"whisk", "whisk", "VERB"}, {"the", "the", "DET"},     {"eggs", "egg", "NOUN"}};
  p.arcs = {{-1, 0, "root"}, {2, 1, "det"}, {0, 2, "obj"}, {4, 3, "cc"}, {0, 4, "conj"}, {6, 5, "det"}, {4, 6, "obj"}};
  return p;
}

class FailingCoref final : public CorefProvider {
 public:
  std::vector<std::string> resolve(const std::vector<std::string>&) override {
    throw Error(ErrorCode::kProviderError, "service down");
  }
};

class ShortCoref final : public CorefProvider {
 public:
  std::vector<std::string> resolve(const std::vector<std::string>& t) override {
    return {t.begin(), t.end() - 1};
  }
};

}  // namespace

TEST_CASE("BLT coreference substitutions") {
  auto c = corpus::load_corpus(fixture("blt/annotations.json"), fixture("blt/recipes.json"));
  auto coref = TableCorefProvider::from_file(fixture("blt/coref.json"));
  auto r = resolve_coreferences(c.videos[0], *coref);
  REQUIRE(r.resolved.size() == 8);
  CHECK_FALSE(r.failed);
  CHECK(r.resolved[0] == "grill the tomatoes in a pan and then put the tomatoes on a plate");
  CHECK(r.resolved[1] == "add oil to a pan and spread the oil well");
  CHECK(r.resolved[3] == "put mayonnaise on the bread and spread the mayonnaise evenly");
  CHECK(r.resolved[4] == "place lettuce on the bread and press the lettuce down");
  CHECK(r.resolved[2] == r.original[2]);
  for (size_t i = 0; i < 8; ++i) CHECK(r.original[i] == c.videos[0].segments[i].sentence);
}

TEST_CASE("identity coreference and provider failures") {
  auto c = corpus::load_corpus(fixture("blt/annotations.json"), fixture("blt/recipes.json"));
  IdentityCorefProvider id;
  auto same = resolve_coreferences(c.videos[0], id);
  CHECK(same.resolved == same.original);

  FailingCoref failing;
  auto failed = resolve_coreferences(c.videos[0], failing);
  CHECK(failed.failed);
  CHECK(failed.resolved == failed.original);
  CHECK(failed.error.find("service down") != std::string::npos);

  ShortCoref short_coref;
  auto s = resolve_coreferences(c.videos[0], short_coref);
  CHECK(s.failed);
  CHECK(s.resolved == s.original);
}

TEST_CASE("BLT first step yields exactly the two tomato pairs") {
  auto parse = CannedParseProvider::from_file(fixture("blt/parse.json"));
  auto pairs = extract_verb_ingredient_pairs("grill the tomatoes in a pan and then put the tomatoes on a plate", *parse,
                                             "blt_fig", 1);
  CHECK(as_set(pairs) == PairSet{{"grill", "tomato"}, {"put", "tomato"}});
  for (const auto& p : pairs) {
    CHECK(p.video_id == "blt_fig");
    CHECK(p.segment_index == 1);
  }
}

TEST_CASE("gold parse oracle: crack and whisk") {
  auto pairs = pairs_from_parse(gold_crack_whisk(), "v", 3);
  CHECK(as_set(pairs) == PairSet{{"crack", "egg"}, {"whisk", "egg"}});
}

TEST_CASE("verbless fragment gives no pairs") {
  LexiconParseProvider lex(nlohmann::json{{"NOUN", {"bowl"}}, {"DET", {"the"}}, {"ADJ", {"red"}}});
  CHECK(extract_verb_ingredient_pairs("the red bowl", lex, "v", 1).empty());
  CHECK_THROWS_AS(extract_verb_ingredient_pairs("   ", lex, "v", 1), Error);
}

TEST_CASE("lexicon parser: conjunctions, prepositions, compounds") {
  auto lex = LexiconParseProvider::from_file(fixture("e2e/lexicon.json"));
  auto pairs = as_set(extract_verb_ingredient_pairs("place the bacon and tomatoes on the lettuce", *lex, "v", 1));
  CHECK(pairs.count({"place", "bacon"}));
  CHECK(pairs.count({"place", "tomato"}));
  CHECK(pairs.count({"place", "lettuce"}));

  ExtractionOptions objects_only;
  objects_only.relations = {"obj", "dobj"};
  auto strict = as_set(extract_verb_ingredient_pairs("place the bacon and tomatoes on the lettuce", *lex, "v", 1,
                                                     objects_only));
  CHECK(strict == PairSet{{"place", "bacon"}, {"place", "tomato"}});

  // gold parse with a conjoined object: eggs hangs off bacon
  ParseResult fry;
  fry.tokens = {{"fry", "fry", "VERB"}, {"the", "the", "DET"}, {"bacon", "bacon", "NOUN"}, {"and", "and", "CCONJ"},
                {"eggs", "egg", "NOUN"}};
  fry.arcs = {{-1, 0, "root"}, {2, 1, "det"}, {0, 2, "obj"}, {4, 3, "cc"}, {2, 4, "conj"}};
  CHECK(as_set(pairs_from_parse(fry, "v", 1)) == PairSet{{"fry", "bacon"}, {"fry", "egg"}});
  ExtractionOptions no_conj;
  no_conj.propagate_conj = false;
  CHECK(as_set(pairs_from_parse(fry, "v", 1, no_conj)) == PairSet{{"fry", "bacon"}});

  LexiconParseProvider oil(nlohmann::json{{"VERB", {"heat"}}, {"NOUN", {"olive", "oil"}}, {"DET", {"the"}}});
  CHECK(as_set(extract_verb_ingredient_pairs("heat the olive oil", oil, "v", 1)) == PairSet{{"heat", "olive oil"}});
}

TEST_CASE("every emitted lemma occurs in the parsed tokens") {
  auto c = corpus::load_corpus(fixture("e2e/annotations.json"), fixture("e2e/recipes.json"));
  auto lex = LexiconParseProvider::from_file(fixture("e2e/lexicon.json"));
  for (const auto& v : c.videos) {
    for (const auto& s : v.segments) {
      auto parse = lex->parse(s.sentence);
      CHECK_NOTHROW(parse.validate());
      std::set<std::string> lemmas;
      for (const auto& t : parse.tokens) lemmas.insert(text::to_lower(t.lemma));
      for (const auto& p : pairs_from_parse(parse, v.video_id, s.index)) {
        CHECK(lemmas.count(p.verb));
        for (const auto& w : text::split_whitespace(p.ingredient)) CHECK(lemmas.count(w));
      }
    }
  }
}

TEST_CASE("parse validation") {
  ParseResult two_roots = gold_crack_whisk();
  two_roots.arcs[4] = {-1, 4, "root"};
  CHECK_THROWS_AS(two_roots.validate(), Error);
  ParseResult cycle = gold_crack_whisk();
  cycle.arcs[0] = {4, 0, "conj"};
  CHECK_THROWS_AS(cycle.validate(), Error);
  CHECK_NOTHROW(gold_crack_whisk().validate());
}

TEST_CASE("lemma counts") {
  CHECK(count_lemma_frequencies({}) == LemmaCounts{});
  std::vector<VerbIngredientPair> pairs = {{"fry", "bacon", "v", 1, 0}, {"fry", "egg", "v", 2, 0}, {"cook", "bacon", "v", 3, 0}};
  auto c = count_lemma_frequencies(pairs);
  CHECK(c.verb_counts == std::map<std::string, int>{{"fry", 2}, {"cook", 1}});
  CHECK(c.noun_counts == std::map<std::string, int>{{"bacon", 2}, {"egg", 1}});
}

TEST_CASE("frequency filter") {
  std::vector<VerbIngredientPair> pairs;
  for (int i = 0; i < 12; ++i) pairs.push_back({"fry", i < 9 ? "bacon" : "egg", "v", i + 1, 0});
  auto counts = count_lemma_frequencies(pairs);
  CHECK(counts.verb_counts["fry"] == 12);
  CHECK(counts.noun_counts["bacon"] == 9);
  CHECK(filter_pairs_by_frequency(pairs, counts, 10).empty());
  CHECK(filter_pairs_by_frequency(pairs, counts, 0) == pairs);
}

TEST_CASE("frequency filter matches a brute-force filter on planted corpora") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<VerbIngredientPair> pairs;
    const int n = static_cast<int>(rng() % 120);
    for (int i = 0; i < n; ++i) {
      pairs.push_back({"v" + std::to_string(rng() % 7), "n" + std::to_string(rng() % 9), "vid", i, 0});
    }
    const int min_count = static_cast<int>(rng() % 15);
    std::vector<VerbIngredientPair> expect;
    for (const auto& p : pairs) {
      int nv = 0, nn = 0;
      for (const auto& q : pairs) {
        nv += q.verb == p.verb;
        nn += q.ingredient == p.ingredient;
      }
      if (nv >= min_count && nn >= min_count) expect.push_back(p);
    }
    auto counts = count_lemma_frequencies(pairs);
    auto got = filter_pairs_by_frequency(pairs, counts, min_count);
    CHECK(got == expect);
    CHECK(filter_pairs_by_frequency(got, counts, min_count) == got);
  }
}

TEST_CASE("caching parse provider replays from disk") {
  testutil::TempDir dir("parse_cache");
  auto inner = std::shared_ptr<ParseProvider>(CannedParseProvider::from_file(fixture("blt/parse.json")));
  const std::string s = "grill the tomatoes in a pan and then put the tomatoes on a plate";
  {
    CachingParseProvider cached(inner, provider::ResponseCache(dir.path()));
    CHECK(as_set(pairs_from_parse(cached.parse(s), "v", 1)).size() == 2);
  }
  class Unreachable final : public ParseProvider {
   public:
    ParseResult parse(const std::string&) override { throw Error(ErrorCode::kProviderError, "offline"); }
  };
  provider::RetryPolicy fast{1, std::chrono::milliseconds(0)};
  CachingParseProvider replay(std::make_shared<Unreachable>(), provider::ResponseCache(dir.path()), fast);
  CHECK(as_set(pairs_from_parse(replay.parse(s), "v", 1)) == PairSet{{"grill", "tomato"}, {"put", "tomato"}});
  CHECK_THROWS_AS(replay.parse("uncached sentence"), Error);
}
