#include <doctest.h>

#include <set>

#include "actionsense/assembly.hpp"
#include "actionsense/error.hpp"
#include "helpers.hpp"

using namespace actionsense;
using namespace actionsense::assembly;
using testutil::fixture;

namespace {

triplets::EventRef ev(const std::string& video, int seg, const std::string& verb, const std::string& ing) {
  return {video, seg, verb, ing, {verb}};
}

struct Potato {
  corpus::Corpus corpus = corpus::load_corpus(fixture("potato/annotations.json"), fixture("potato/recipes.json"));
  triplets::SegmentTriplet triplet{"potato", ev("potato01", 1, "peel", "potato"), ev("potato01", 2, "cut", "potato"),
                                   ev("potato01", 3, "fry", "potato")};
  std::unique_ptr<KeywordRCProvider> rc = KeywordRCProvider::from_file(fixture("e2e/rc_vocab.json"));
  AssemblyContext ctx() const { return {&corpus, {}}; }
};

class LyingRC final : public RCProvider {
 public:
  explicit LyingRC(std::string a) : a_(std::move(a)) {}
  std::optional<std::string> answer(const std::string&, const std::string&) override { return a_; }

 private:
  std::string a_;
};

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("preconditions are the objects of the past and current segments") {
  Potato p;
  auto pre = form_preconditions(p.triplet, p.corpus);
  CHECK(as_set(pre.labels) == std::set<std::string>{"potato", "peeler", "knife", "chopping board"});
  CHECK_FALSE(pre.no_objects);
}

TEST_CASE("goal templates") {
  CHECK(goal_templates("BLT") == std::vector<std::string>{"Make BLT", "Cook BLT", "Prepare BLT"});
  Potato p;
  CHECK(form_goal(p.triplet, p.corpus) ==
        std::vector<std::string>{"Make mashed potato", "Cook mashed potato", "Prepare mashed potato"});
  corpus::Corpus orphan = p.corpus;
  orphan.recipes.entries.clear();
  try {
    form_goal(p.triplet, orphan);
    FAIL("expected UnknownRecipeId");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnknownRecipeId);
  }
}

TEST_CASE("effects come from narration between the current and future events") {
  Potato p;
  auto eff = extract_effects(p.triplet, p.corpus, *p.rc);
  CHECK(as_set(eff.phrases) == std::set<std::string>{"golden", "crisp"});
  CHECK(eff.window.t0 == doctest::Approx(7.0));
  CHECK(eff.window.t1 == doctest::Approx(16.0));
  for (const auto& ph : eff.phrases) CHECK(eff.window.text.find(ph) != std::string::npos);
}

TEST_CASE("rc answers outside the window or too long") {
  Potato p;
  LyingRC outside("burnt");
  try {
    extract_effects(p.triplet, p.corpus, outside);
    FAIL("expected ProviderError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kProviderError);
  }
  LyingRC long_span("cut them evenly so they fry");
  CHECK(extract_effects(p.triplet, p.corpus, long_span).phrases.empty());
  LyingRC question_word("golden and crisp");
  CHECK(extract_effects(p.triplet, p.corpus, question_word).phrases == std::vector<std::string>{"golden and crisp"});
}

TEST_CASE("empty window: no effects, no error") {
  Potato p;
  p.corpus.videos[0].transcript.clear();
  auto eff = extract_effects(p.triplet, p.corpus, *p.rc);
  CHECK(eff.phrases.empty());
  CHECK(eff.no_transcript);
}

TEST_CASE("before and after events are the neighbouring sentences") {
  Potato p;
  auto [before, after] = form_before_after(p.triplet, p.ctx());
  CHECK(before == "peel the potato with a peeler");
  CHECK(after == "fry the potato pieces in oil");
}

TEST_CASE("grounding rewrites mentions as object tags") {
  std::vector<corpus::ObjectAnnotation> objs = {{"potato", {}}, {"knife", {}}, {"chopping board", {}}};
  auto g = ground_text("cut the potato into pieces on a chopping board", objs, "cut");
  CHECK(g.text == "cutting [Object1] into pieces on [Object2]");
  CHECK(g.bindings.at("[Object1]").label == "potato");
  CHECK(g.bindings.at("[Object2]").label == "chopping board");
  REQUIRE(g.image_only.size() == 1);
  CHECK(g.image_only[0].label == "knife");
  CHECK(g.tags() == std::vector<std::string>{"[Object1]", "[Object2]"});
  CHECK(g.plain() == "cutting potato into pieces on chopping board");

  auto plural = ground_text("Add the tomatoes, then the tomato.", {{"tomato", {}}});
  CHECK(plural.text == "Add [Object1], then [Object1].");
}

TEST_CASE("assembled instance carries every component") {
  Potato p;
  auto inst = assemble_instance(p.triplet, p.ctx(), *p.rc);
  CHECK(inst.instance_id == "potato01:2:potato");
  CHECK(inst.action_object == ActionObject{"cut", "potato"});
  REQUIRE(inst.image);
  CHECK(inst.image->segment_index == 2);
  CHECK(inst.image->timestamp == doctest::Approx(11.0));
  CHECK(inst.goals.size() == 3);
  CHECK(inst.preconditions.size() == 4);
  CHECK(inst.effects.values() == std::vector<std::string>{"crisp", "golden"});
  CHECK(inst.before_events.values() == std::vector<std::string>{"peel the potato with a peeler"});
  CHECK(inst.after_events.values() == std::vector<std::string>{"fry the potato pieces in oil"});
  REQUIRE(inst.provenance.size() == 1);
  CHECK(inst.provenance[0].triplet == p.triplet);
  CHECK(instance_from_json(instance_to_json(inst)) == inst);

  corpus::Corpus no_media = p.corpus;
  no_media.videos[0].media.reset();
  AssemblyContext ctx{&no_media, {}};
  auto text_only = assemble_instance(p.triplet, ctx, *p.rc);
  CHECK_FALSE(text_only.image);
  CHECK(text_only.flags.count("text_only"));
}

TEST_CASE("merging by action-object pair unions the inference sets") {
  auto make = [](const std::string& video, const std::string& recipe) {
    auto inst = testutil::make_instance(video + ":2:potato", video, 2);
    inst.action_object = {"mash", "potato"};
    for (const auto& g : goal_templates(recipe)) inst.goals.add(g);
    inst.preconditions.add("potato");
    inst.preconditions.add(recipe == "boxty" ? "grater" : "masher");
    inst.effects.add("smooth");
    inst.provenance.push_back({video, recipe, {"potato", ev(video, 1, "boil", "potato"), ev(video, 2, "mash", "potato"),
                                               ev(video, 3, "add", "potato")}, inst.image, inst.text_description});
    return inst;
  };
  auto other = testutil::make_instance("x:1:egg", "x", 1);
  other.action_object = {"crack", "egg"};
  std::vector<CommonsenseInstance> in = {make("pie", "shepherd's pie"), other, make("mash", "mashed potato"),
                                         make("box", "boxty")};
  auto merged = merge_by_action_object(in);
  REQUIRE(merged.size() == 2);
  const auto& m = merged[1].action_object.verb == "mash" ? merged[1] : merged[0];
  CHECK(m.instance_id == "mash:potato");
  CHECK(m.goals.size() == 9);
  CHECK(m.goals.contains("Make boxty"));
  CHECK(m.goals.contains("Prepare shepherd's pie"));
  CHECK(m.preconditions.values() == std::vector<std::string>{"grater", "masher", "potato"});
  CHECK(m.effects.size() == 1);
  CHECK(m.provenance.size() == 3);
  CHECK(m.image);

  // order of the input does not matter
  std::vector<CommonsenseInstance> rev(in.rbegin(), in.rend());
  CHECK(merge_by_action_object(rev) == merged);
}

TEST_CASE("inference sets deduplicate on normalized phrases") {
  InferenceSet s;
  s.add("Tomatoes");
  s.add("tomato");
  s.add("  ");
  CHECK(s.size() == 1);
  CHECK(s.values() == std::vector<std::string>{"Tomatoes"});
  InferenceSet t;
  t.add("tomato");
  t.add("Tomatoes");
  CHECK(s == t);
}

TEST_CASE("statistics") {
  auto empty = compute_statistics({});
  for (const auto& [label, value] : empty.rows()) CHECK(value == 0);
  CHECK(empty.rows().size() == 11);
  CHECK(stats_row_labels().front() == "Videos");
  CHECK(stats_row_labels().back() == "After Events");

  Potato p;
  auto inst = assemble_instance(p.triplet, p.ctx(), *p.rc);
  auto s = compute_statistics({inst});
  CHECK(s.videos == 1);
  CHECK(s.images == 1);
  CHECK(s.recipe_types == 1);
  CHECK(s.goals == 3);
  CHECK(s.preconditions == 4);
  CHECK(s.effects == 2);
  CHECK(s.before_events == 1);

  auto ref = reference_statistics();
  CHECK(ref.videos == 1601);
  CHECK(ref.images == 8522);
  CHECK(ref.recipe_types == 89);
  CHECK(ref.unique_objects == 176);
  CHECK(ref.unique_actions == 93);
  CHECK(ref.goals == 10341);
  CHECK(ref.preconditions == 17209);
  CHECK(ref.effects == 6428);
  CHECK(ref.before_events == 12665);
  CHECK(ref.after_events == 12665);
}

TEST_CASE("dataset file round trip") {
  testutil::TempDir dir("dataset");
  Potato p;
  std::vector<CommonsenseInstance> ds = {assemble_instance(p.triplet, p.ctx(), *p.rc)};
  write_dataset(dir / "d.jsonl", ds);
  CHECK(read_dataset(dir / "d.jsonl") == ds);
}
