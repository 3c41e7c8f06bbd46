#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "actionsense/error.hpp"
#include "actionsense/generation.hpp"
#include "helpers.hpp"

using namespace actionsense;
using namespace actionsense::generation;

namespace {

assembly::CommonsenseInstance grounded_instance(size_t n_objects = 2) {
  auto inst = testutil::make_instance("v:2:bacon", "v", 2);
  std::string text = "frying [Object1]";
  inst.text_description.bindings["[Object1]"] = {"bacon", {{1.0, 0, 0, 5, 5}}};
  for (size_t k = 2; k <= n_objects; ++k) {
    std::string tag = "[Object" + std::to_string(k) + "]";
    text += " with " + tag;
    inst.text_description.bindings[tag] = {"thing" + std::to_string(k), {{1.0, 0, 0, double(k), double(k)}}};
  }
  inst.text_description.text = text;
  inst.action_object = {"fry", "bacon"};
  inst.preconditions.add("pan");
  inst.preconditions.add("bacon");
  return inst;
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

TEST_CASE("prompt catalogue") {
  std::set<std::string> seen;
  for (auto t : all_inference_types()) {
    for (int v = 1; v <= 4; ++v) {
      auto p = build_prompt(t, v);
      CHECK_FALSE(p.empty());
      seen.insert(p);
    }
  }
  CHECK(seen.size() == 20);
  CHECK(build_prompt(InferenceType::kPrecondition, 3) == "What are some pre-requisites related to this action?");
  CHECK(PromptSpec{InferenceType::kGoal, 2, {}}.prompt_id() == "Pg2");
  expect_code(ErrorCode::kUnknownVariant, [] { build_prompt(InferenceType::kEffect, 7); });
  expect_code(ErrorCode::kUnknownVariant, [] { build_prompt(InferenceType::kEffect, 0); });
  CHECK(parse_inference_type("after") == InferenceType::kAfter);
  CHECK(start_token(InferenceType::kBefore) == "<before>");
}

TEST_CASE("the ten modality combinations") {
  const auto& combos = enumerate_modality_combos();
  REQUIRE(combos.size() == 10);
  std::set<ModalityMask> distinct(combos.begin(), combos.end());
  CHECK(distinct.size() == 10);
  for (const auto& m : combos) {
    CHECK(m.valid());
    CHECK(ModalityMask::parse(m.label()) == m);
  }
  CHECK(combos.front().label() == "Image");
  CHECK(combos.back().label() == "Image + TextDesc + AO Pair + OG");
  CHECK(ModalityMask::parse("image+textdesc+aopair") == combos[7]);
  CHECK_THROWS_AS(ModalityMask::parse("OG"), Error);
  CHECK_THROWS_AS(ModalityMask::parse("Image + Audio"), Error);
}

TEST_CASE("input sequence layout") {
  auto inst = grounded_instance();
  HashVisionProvider vision;
  PromptSpec spec{InferenceType::kPrecondition, 1, {true, true, true, true}};
  auto seq = compose_input_sequence(inst, spec, &vision);
  CHECK(seq.fields() == std::vector<std::string>{"image", "event", "ao", "prompt", "start"});
  CHECK(seq.tokens.back().text == "<precondition>");
  CHECK(seq.start == "<precondition>");
  CHECK(seq.size() <= kMaxSequenceLength);
  CHECK(seq.field("ao") == std::vector<std::string>{kPairStart, "fry", "bacon", kPairEnd});
  auto image = seq.field("image");
  CHECK(image == std::vector<std::string>{kImageStart, "<v0>", "[Object1]", "[Object2]", kImageEnd});

  // grounded event tokens point at the visual slot of their object
  REQUIRE(seq.visual);
  for (const auto& t : seq.tokens) {
    if (t.field == "event" && t.text == "[Object2]") {
      REQUIRE(t.feature_index);
      CHECK(*t.feature_index == seq.visual->index_of("[Object2]"));
    }
  }

  // without OG the description is plain text and the image block has no object slots
  PromptSpec no_og{InferenceType::kPrecondition, 1, {true, true, true, false}};
  auto plain = compose_input_sequence(inst, no_og, &vision);
  CHECK(plain.field("image") == std::vector<std::string>{kImageStart, "<v0>", kImageEnd});
  CHECK(plain.field("event") == std::vector<std::string>{kEventStart, "frying", "bacon", "with", "thing2", kEventEnd});

  PromptSpec ao_only{InferenceType::kGoal, 2, {false, false, true, false}};
  CHECK(compose_input_sequence(inst, ao_only, nullptr).fields() == std::vector<std::string>{"ao", "prompt", "start"});
}

TEST_CASE("visual features are capped") {
  auto inst = grounded_instance(30);
  HashVisionProvider vision;
  PromptSpec spec{InferenceType::kEffect, 1, {true, false, false, true}};
  auto seq = compose_input_sequence(inst, spec, &vision);
  REQUIRE(seq.visual);
  CHECK(seq.visual->size() <= kMaxVisualFeatures);
  CHECK(seq.visual->size() == kMaxVisualFeatures);
}

TEST_CASE("truncation and overflow") {
  auto inst = grounded_instance();
  std::string long_text = "frying";
  for (int i = 0; i < 100; ++i) long_text += " word" + std::to_string(i);
  inst.text_description.text = long_text;
  inst.text_description.bindings.clear();
  PromptSpec spec{InferenceType::kAfter, 4, {false, true, true, false}};
  auto seq = compose_input_sequence(inst, spec, nullptr);
  CHECK(seq.size() == kMaxSequenceLength);
  CHECK(seq.dropped_event > 0);
  CHECK(seq.field("ao").size() == 4);
  CHECK(seq.tokens.back().text == "<after>");
  // the tail of the description survives
  auto event = seq.field("event");
  CHECK(event[event.size() - 2] == "word99");

  ComposeOptions tiny;
  tiny.max_length = 5;
  expect_code(ErrorCode::kSequenceOverflow, [&] { compose_input_sequence(inst, spec, nullptr, tiny); });

  auto text_only = grounded_instance();
  text_only.image.reset();
  PromptSpec needs_image{InferenceType::kGoal, 1, {true, false, false, false}};
  expect_code(ErrorCode::kMissingModality, [&] { compose_input_sequence(text_only, needs_image, nullptr); });
  auto no_text = grounded_instance();
  no_text.text_description = {};
  PromptSpec needs_text{InferenceType::kGoal, 1, {false, true, false, false}};
  expect_code(ErrorCode::kMissingModality, [&] { compose_input_sequence(no_text, needs_text, nullptr); });
}

TEST_CASE("random instances always fit the length limit") {
  std::mt19937_64 rng(21);
  HashVisionProvider vision;
  for (int trial = 0; trial < 300; ++trial) {
    auto inst = grounded_instance(1 + rng() % 25);
    const int extra = static_cast<int>(rng() % 80);
    for (int i = 0; i < extra; ++i) inst.text_description.text += " w" + std::to_string(i);
    for (const auto& m : enumerate_modality_combos()) {
      PromptSpec spec{all_inference_types()[rng() % 5], static_cast<int>(1 + rng() % 4), m};
      auto seq = compose_input_sequence(inst, spec, &vision);
      CHECK(seq.size() <= kMaxSequenceLength);
      CHECK(seq.tokens.back().text == start_token(spec.type));
      if (seq.visual) CHECK(seq.visual->size() <= kMaxVisualFeatures);
    }
  }
}

TEST_CASE("nucleus sampling frequencies") {
  std::vector<std::pair<std::string, double>> dist = {{"a", 0.5}, {"b", 0.3}, {"c", 0.15}, {"d", 0.05}};
  std::mt19937_64 rng(99);
  std::map<std::string, int> hits;
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++hits[nucleus_sample(dist, 0.9, rng)];
  CHECK(hits["d"] == 0);
  CHECK(double(hits["a"]) / n == doctest::Approx(0.5 / 0.95).epsilon(0.01));
  CHECK(double(hits["b"]) / n == doctest::Approx(0.3 / 0.95).epsilon(0.02));
  CHECK(double(hits["c"]) / n == doctest::Approx(0.15 / 0.95).epsilon(0.03));

  std::set<std::string> modal;
  for (int i = 0; i < 100; ++i) modal.insert(nucleus_sample(dist, 0.0, rng));
  CHECK(modal == std::set<std::string>{"a"});

  // ties on probability resolve by token text
  std::vector<std::pair<std::string, double>> tie = {{"z", 0.5}, {"y", 0.5}};
  CHECK(nucleus_sample(tie, 0.0, rng) == "y");
}

TEST_CASE("perplexity contract") {
  auto inst = grounded_instance();
  PromptSpec spec{InferenceType::kPrecondition, 1, {false, false, true, false}};
  TableLM table({{"x", 0.5}, {"y", 0.25}});
  auto sc = score_candidate(inst, spec, "x y", table);
  CHECK(sc.tokens == 2);
  CHECK(sc.nll == doctest::Approx(1.5 * std::log(2.0)));
  CHECK(sc.perplexity == doctest::Approx(2.8284271247));

  for (size_t v : {2u, 17u, 1000u}) {
    UniformLM uniform(v);
    CHECK(score_candidate(inst, spec, "any candidate text here", uniform).perplexity == doctest::Approx(double(v)));
  }
  expect_code(ErrorCode::kEmptyCandidate, [&] { score_candidate(inst, spec, "  ", table); });
  expect_code(ErrorCode::kEmptyCandidate, [&] { score_candidate(inst, spec, "<e_inf>", table); });
  CHECK(strip_continuation(" golden brown <e_inf> junk") == "golden brown");
}

TEST_CASE("seq2seq loss is the batch mean of per-example token NLL") {
  auto a = grounded_instance();
  auto b = grounded_instance(3);
  b.instance_id = "v:3:bacon";
  TableLM lm({{"pan", 0.5}, {"bacon", 0.1}, {"fry", 0.2}}, 0.01);
  PromptSpec spec{InferenceType::kPrecondition, 1, {true, true, true, false}};
  std::vector<TrainingExample> batch = {{&a, spec, "pan"}, {&b, spec, "bacon pan"}};
  auto r = seq2seq_loss(batch, lm);
  const double ea = -std::log(0.5);
  const double eb = -(std::log(0.1) + std::log(0.5)) / 2.0;
  CHECK(r.loss == doctest::Approx((ea + eb) / 2.0));
  CHECK(r.terms.size() == 2);

  HashVisionProvider vision;
  auto with_tp = seq2seq_loss(batch, lm, true, &vision);
  REQUIRE(with_tp.terms.size() == 6);
  double sum = 0.0;
  for (const auto& t : with_tp.terms) sum += t.nll;
  CHECK(with_tp.loss == doctest::Approx(sum / 2.0));
  CHECK(with_tp.terms[2].kind == "pair");
  // "fry bacon" under the table
  CHECK(with_tp.terms[2].nll == doctest::Approx(-(std::log(0.2) + std::log(0.1)) / 2.0));

  expect_code(ErrorCode::kEmptyBatch, [&] { seq2seq_loss({}, lm); });
}

TEST_CASE("generation is deterministic per seed") {
  std::vector<assembly::CommonsenseInstance> training = {grounded_instance()};
  training[0].effects.add("crispy and brown");
  training[0].goals.add("Make BLT");
  ContextUnigramLM lm(training);
  auto inst = grounded_instance();
  PromptSpec spec{InferenceType::kEffect, 1, {false, true, true, false}};
  SampleParams params;
  params.n = 4;
  auto first = generate_inferences(inst, spec, lm, params);
  CHECK(first.size() == 4);
  CHECK(generate_inferences(inst, spec, lm, params) == first);
  params.seed = 14;
  auto other = generate_inferences(inst, spec, lm, params);
  CHECK(other.size() == 4);

  // the distribution plus one unknown slot is normalized
  auto seq = compose_input_sequence(inst, spec, nullptr);
  double total = 0.0;
  for (const auto& [tok, p] : lm.distribution(seq)) {
    total += p;
    CHECK(std::log(p) == doctest::Approx(lm.logprobs(seq, {tok})[0]));
  }
  const double unk = std::exp(lm.logprobs(seq, {"never_seen_token"})[0]);
  CHECK(unk > 0.0);
  CHECK(total + unk == doctest::Approx(1.0));

  CannedLM canned({{"effect", {"golden <e_inf>", "soft"}}});
  params.n = 3;
  CHECK(generate_inferences(inst, spec, canned, params) == std::vector<std::string>{"golden", "soft", "golden"});
}

TEST_CASE("defaults") {
  CHECK(kNucleusP == 0.9);
  CHECK(kMaxVisualFeatures == 15);
  CHECK(kMaxSequenceLength == 64);
  CHECK(kLearningRate == 5e-5);
  CHECK(kBatchSize == 32);
}
