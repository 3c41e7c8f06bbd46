// actionsense: build the commonsense dataset, run generation grids and score them.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "actionsense/error.hpp"
#include "actionsense/pipeline.hpp"

namespace fs = std::filesystem;
namespace pl = actionsense::pipeline;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string modalities;
  std::string variants;
  bool resume = false;
  bool modalities_only = false;
  long stop_after = -1;
  bool quiet = false;
};

void add_run_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Override generation.seed");
  cmd->add_option("--out", o.out, "Override run.out (run directory)");
  cmd->add_flag("--resume", o.resume, "Reuse completed work in the run directory");
  cmd->add_flag("-q,--quiet", o.quiet, "No progress output");
}

void add_grid_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--modalities", o.modalities, "Mask labels separated by ';' or ',', or 'all'");
  cmd->add_option("--variants", o.variants, "Prompt variants, e.g. 1,2,3,4 or 'all'");
  cmd->add_option("--stop-after", o.stop_after, "Stop after this many new groups")->group("");
}

pl::RunConfig resolve_config(const Overrides& o) {
  pl::RunConfig config = pl::load_config(o.config);
  if (o.seed) config.seed = *o.seed;
  if (!o.out.empty()) config.out_dir = fs::absolute(o.out).lexically_normal();
  if (!o.modalities.empty()) config.modalities = pl::parse_modalities(o.modalities);
  if (!o.variants.empty()) config.variants = pl::parse_variants(o.variants);
  return config;
}

pl::CommandOptions command_options(const Overrides& o) {
  pl::CommandOptions c;
  c.resume = o.resume;
  c.modalities_only = o.modalities_only;
  c.max_groups = o.stop_after;
  c.log = o.quiet ? nullptr : &std::cerr;
  return c;
}

int finish(const pl::CommandResult& r) {
  if (r.exit_code != pl::kExitOk) {
    std::cerr << "error: " << r.message << "\n";
  } else if (!r.message.empty()) {
    std::cerr << r.message << "\n";
    for (const auto& p : r.outputs) std::cerr << "  " << p.generic_string() << "\n";
  }
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Action commonsense dataset builder and evaluation harness"};
  app.require_subcommand(1);

  Overrides o;
  auto* build = app.add_subcommand("build-dataset", "Corpus -> pairs -> triplets -> instances");
  add_run_flags(build, o);

  std::string dataset_path;
  bool stats_json = false;
  auto* stats = app.add_subcommand("stats", "Print dataset statistics");
  stats->add_option("dataset", dataset_path, "Dataset JSONL")->required();
  stats->add_flag("--json", stats_json, "Emit JSON instead of a table");

  auto* generate = app.add_subcommand("generate", "Sample inferences over the configured grid");
  add_run_flags(generate, o);
  add_grid_flags(generate, o);

  auto* evaluate = app.add_subcommand("evaluate", "Score generations and write reports");
  add_run_flags(evaluate, o);
  add_grid_flags(evaluate, o);

  auto* ablate = app.add_subcommand("ablate", "Modality grid, then the prompt grid on the best row");
  add_run_flags(ablate, o);
  add_grid_flags(ablate, o);
  ablate->add_flag("--modalities-only", o.modalities_only, "Skip the prompt grid");

  std::string report_path;
  std::string report_format = "text";
  auto* report = app.add_subcommand("report", "Render a report JSON");
  report->add_option("report", report_path, "Report JSON")->required();
  report->add_option("--format", report_format, "text, csv or json")
      ->check(CLI::IsMember({"text", "csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : pl::kExitConfig;
  }

  if (stats->parsed()) return finish(pl::run_stats(dataset_path, std::cout, stats_json));
  if (report->parsed()) return finish(pl::run_report(report_path, report_format, std::cout));

  pl::RunConfig config;
  try {
    config = resolve_config(o);
  } catch (const actionsense::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pl::exit_code_for(e);
  }
  const auto options = command_options(o);
  if (build->parsed()) return finish(pl::run_build_dataset(config, options));
  if (generate->parsed()) return finish(pl::run_generate(config, options));
  if (evaluate->parsed()) return finish(pl::run_evaluate(config, options));
  if (ablate->parsed()) return finish(pl::run_ablate(config, options));
  return pl::kExitConfig;
}
