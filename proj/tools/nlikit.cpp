// nlikit — dataset curation and robustness evaluation for budgeted NLI
// fine-tuning. One subcommand per pipeline stage; artifacts and the stage
// manifest live under the run directory.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "nlikit/run/pipeline.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string run_id;
  std::optional<std::size_t> seed_index;
  bool offline = false;
  std::string cache_dir;
};

nlikit::run::Run make_run(const CliOptions& cli) {
  nlikit::run::RunConfig config = nlikit::run::RunConfig::load(cli.config_path);
  std::string run_dir = cli.run_id;
  if (run_dir.empty()) {
    run_dir = "runs/" + nlikit::short_digest(config.digest());
  }
  nlikit::run::RunOptions options;
  options.offline = cli.offline;
  options.cache_dir = cli.cache_dir;
  if (config.provider.kind == "mock" || cli.offline) {
    options.gateway.backoff_base = std::chrono::milliseconds(0);
  } else {
    options.finetune_poll_interval = std::chrono::seconds(10);
  }
  return nlikit::run::Run(std::move(config), run_dir, options);
}

// Runs a per-seed stage for --seed-index, or for every configured seed.
template <typename Fn>
void for_seeds(nlikit::run::Run& run, const CliOptions& cli, Fn&& stage) {
  if (cli.seed_index) {
    stage(*cli.seed_index);
    return;
  }
  for (std::size_t i = 0; i < run.config().seeds.size(); ++i) {
    stage(i);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlikit: budgeted NLI data curation and robustness evaluation"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  CliOptions cli;
  app.add_option("--config", cli.config_path, "run configuration (JSON)")
      ->required();
  app.add_option("--run-id", cli.run_id,
                 "run directory (default runs/<config digest>)");
  app.add_option("--seed-index", cli.seed_index,
                 "0-based index into the config seeds list (default: all)");
  app.add_flag("--offline", cli.offline, "force the deterministic mock provider");
  app.add_option("--cache-dir", cli.cache_dir,
                 "response cache directory (default <run>/cache)");

  auto* ingest = app.add_subcommand("ingest", "normalize registered corpora");
  auto* partition =
      app.add_subcommand("partition", "draw the init/potential split");
  auto* predict =
      app.add_subcommand("predict", "model predictions for selection");
  auto* score = app.add_subcommand("score", "model difficulty/quality scores");
  auto* select = app.add_subcommand("select", "build the swap plan");
  auto* generate = app.add_subcommand("generate", "generate a synthetic pool");
  auto* validate =
      app.add_subcommand("validate", "unanimity-validate the generated pool");
  auto* assemble = app.add_subcommand("assemble", "apply the swap plan");
  auto* export_ft = app.add_subcommand("export-finetune",
                                       "write the chat-format training file");
  auto* finetune = app.add_subcommand("finetune", "run the fine-tune job");
  auto* evaluate = app.add_subcommand("evaluate", "score the eval datasets");
  auto* report = app.add_subcommand("report", "aggregate results and render");
  std::string compare_path;
  report->add_option("--compare", compare_path,
                     "another run's results file for significance testing");
  auto* copa = app.add_subcommand("copa-build",
                                  "construct the choice-derived NLI test set");
  std::string copa_name;
  copa->add_option("dataset", copa_name, "registry name with format 'copa'")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    nlikit::run::Run run = make_run(cli);
    if (ingest->parsed()) {
      run.ingest();
    } else if (partition->parsed()) {
      for_seeds(run, cli, [&](std::size_t i) { run.partition(i); });
    } else if (predict->parsed()) {
      for_seeds(run, cli, [&](std::size_t i) { run.predict(i); });
    } else if (score->parsed()) {
      for_seeds(run, cli, [&](std::size_t i) { run.score(i); });
    } else if (select->parsed()) {
      for_seeds(run, cli, [&](std::size_t i) { run.select(i); });
    } else if (generate->parsed()) {
      run.generate();
    } else if (validate->parsed()) {
      run.validate();
    } else if (assemble->parsed()) {
      for_seeds(run, cli, [&](std::size_t i) { run.assemble(i); });
    } else if (export_ft->parsed()) {
      for_seeds(run, cli, [&](std::size_t i) { run.export_finetune(i); });
    } else if (finetune->parsed()) {
      for_seeds(run, cli, [&](std::size_t i) { run.finetune(i); });
    } else if (evaluate->parsed()) {
      for_seeds(run, cli, [&](std::size_t i) { run.evaluate(i); });
    } else if (report->parsed()) {
      run.report(compare_path);
      std::cout << nlikit::read_text_file(run.run_dir() +
                                          "/reports/report.txt");
    } else if (copa->parsed()) {
      run.copa_build(copa_name);
    }
  } catch (const nlikit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
