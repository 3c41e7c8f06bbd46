#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "actionsense/error.hpp"
#include "actionsense/extraction.hpp"
#include "actionsense/generation.hpp"
#include "actionsense/metrics.hpp"
#include "actionsense/pipeline.hpp"
#include "actionsense/triplets.hpp"

namespace py = pybind11;
using namespace actionsense;

namespace {

using Pair = std::tuple<std::string, std::string, std::string, int>;  // verb, ingredient, video, segment

std::string triplets_json(const std::vector<Pair>& pairs) {
  std::vector<extraction::VerbIngredientPair> in;
  in.reserve(pairs.size());
  for (const auto& [verb, ing, video, seg] : pairs) in.push_back({verb, ing, video, seg, 0});
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : triplets::build_all_triplets(triplets::group_by_ingredient(triplets::events_from_pairs(in)))) {
    out.push_back(triplets::triplet_to_json(t));
  }
  return out.dump();
}

// Pools given as (nll per candidate, ground-truth count); ground truths come first.
double acc_at_50(const std::vector<std::pair<std::vector<double>, size_t>>& pools, bool top1) {
  std::vector<metrics::ScoredPool> scored;
  for (size_t k = 0; k < pools.size(); ++k) {
    metrics::ScoredPool p;
    p.instance_id = std::to_string(k);
    p.gt_count = pools[k].second;
    const auto& nll = pools[k].first;
    for (size_t i = 0; i < nll.size(); ++i) {
      generation::ScoredCandidate c;
      c.text = "candidate " + std::to_string(i);
      c.nll = nll[i];
      c.perplexity = std::exp(nll[i]);
      c.is_ground_truth = i < p.gt_count;
      p.candidates.push_back(c);
    }
    scored.push_back(std::move(p));
  }
  return metrics::acc_at_50(scored, top1 ? metrics::HitRule::kTop1 : metrics::HitRule::kTopGtCount);
}

double perplexity(const std::map<std::string, double>& table, const std::string& candidate, double floor) {
  generation::TableLM lm(table, floor);
  generation::TokenSequence seq;
  return generation::score_continuation(seq, candidate, lm).perplexity;
}

pipeline::CommandResult run(const std::string& command, const std::filesystem::path& config,
                            const std::optional<std::filesystem::path>& out_dir, bool resume, bool modalities_only) {
  auto cfg = pipeline::load_config(config);
  if (out_dir) cfg.out_dir = *out_dir;
  pipeline::CommandOptions opts;
  opts.resume = resume;
  opts.modalities_only = modalities_only;
  py::gil_scoped_release release;
  if (command == "build-dataset") return pipeline::run_build_dataset(cfg, opts);
  if (command == "generate") return pipeline::run_generate(cfg, opts);
  if (command == "evaluate") return pipeline::run_evaluate(cfg, opts);
  if (command == "ablate") return pipeline::run_ablate(cfg, opts);
  throw Error(ErrorCode::kInvalidArgument, "unknown command " + command);
}

std::pair<int, std::string> stats(const std::filesystem::path& dataset, bool as_json) {
  std::ostringstream out;
  auto r = pipeline::run_stats(dataset, out, as_json);
  return {r.exit_code, r.exit_code == 0 ? out.str() : r.message};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multimodal procedural commonsense toolkit (native core)";

  // Messages start with the error code name, e.g. "CorpusTooSmall: ...".
  py::register_exception<Error>(m, "ActionSenseError");

  m.attr("NUCLEUS_P") = generation::kNucleusP;
  m.attr("MAX_VISUAL_FEATURES") = generation::kMaxVisualFeatures;
  m.attr("MAX_SEQUENCE_LENGTH") = generation::kMaxSequenceLength;
  m.attr("LEARNING_RATE") = generation::kLearningRate;
  m.attr("BATCH_SIZE") = generation::kBatchSize;
  m.attr("MIN_COUNT") = extraction::kDefaultMinCount;
  m.attr("POOL_SIZE") = metrics::kPoolSize;

  m.def("bleu2", &metrics::bleu2, py::arg("candidate"), py::arg("references"));
  m.def("meteor", [](const std::string& c, const std::vector<std::string>& refs) { return metrics::meteor(c, refs); },
        py::arg("candidate"), py::arg("references"));
  m.def("cider", [](const std::vector<std::vector<std::string>>& cands, const std::vector<std::vector<std::string>>& refs) {
        auto r = metrics::cider(cands, refs);
        return std::make_pair(r.per_instance, r.mean);
      }, py::arg("candidates"), py::arg("references"), "Per-instance scores and their mean.");
  m.def("uniqueness", &metrics::uniqueness, py::arg("generated"));
  m.def("novelty", [](const std::vector<std::string>& gen, const std::vector<std::string>& train) {
        return metrics::novelty(gen, metrics::training_set(train));
      }, py::arg("generated"), py::arg("training"));
  m.def("cohen_kappa", &metrics::cohen_kappa, py::arg("ratings_a"), py::arg("ratings_b"), py::arg("categories"));
  m.def("normalize_object_tags", &metrics::normalize_object_tags, py::arg("text"));
  m.def("acc_at_50", &acc_at_50, py::arg("pools"), py::arg("top1") = false);
  m.def("perplexity", &perplexity, py::arg("table"), py::arg("candidate"), py::arg("floor") = 1e-6,
        "Perplexity of a candidate under a context-free token table.");
  m.def("build_prompt", [](const std::string& type, int variant) {
        return generation::build_prompt(generation::parse_inference_type(type), variant);
      }, py::arg("type"), py::arg("variant"));
  m.def("modality_labels", [] {
    std::vector<std::string> out;
    for (const auto& c : generation::enumerate_modality_combos()) out.push_back(c.label());
    return out;
  });
  m.def("_triplets_json", &triplets_json, py::arg("pairs"));

  m.def("_run", &run, py::arg("command"), py::arg("config"), py::arg("out_dir") = std::nullopt,
        py::arg("resume") = false, py::arg("modalities_only") = false);
  m.def("stats", &stats, py::arg("dataset"), py::arg("as_json") = false);

  py::class_<pipeline::CommandResult>(m, "CommandResult")
      .def_readonly("exit_code", &pipeline::CommandResult::exit_code)
      .def_readonly("message", &pipeline::CommandResult::message)
      .def_readonly("outputs", &pipeline::CommandResult::outputs);
}
