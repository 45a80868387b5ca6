#pragma once

// run/pipeline.hpp — stage orchestration over a run directory. Each stage
// reads its inputs from the run directory, writes its outputs there, and
// records a manifest entry with input/output digests so unchanged stages are
// never re-executed.
//
// Layout under the run directory:
//   datasets/    normalized corpora (and constructed test sets)
//   partitions/  seeded init/potential splits
//   predictions/ prediction and score records
//   plans/       swap plans
//   pools/       generated and validated synthetic pools
//   exports/     assembled training sets and fine-tune files
//   reports/     per-seed results and the final report
//   cache/       gateway response journal (not a run artifact)
//   manifest.json

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nlikit/eval.hpp"
#include "nlikit/modelgate/gateway.hpp"
#include "nlikit/modelgate/mock.hpp"
#include "nlikit/modelgate/openai.hpp"
#include "nlikit/registry.hpp"
#include "nlikit/report.hpp"
#include "nlikit/run/config.hpp"
#include "nlikit/run/manifest.hpp"
#include "nlikit/select.hpp"
#include "nlikit/synth.hpp"
#include "nlikit/transform.hpp"

namespace nlikit::run {

struct RunOptions {
  std::string cache_dir;  // empty = <run_dir>/cache
  bool offline = false;   // force the mock provider
  std::chrono::milliseconds finetune_poll_interval{0};
  int max_finetune_polls = 600;
  gate::GatewayOptions gateway;
};

class Run {
public:
  Run(RunConfig config, std::string run_dir, RunOptions options = {})
      : config_(std::move(config)),
        run_dir_(std::move(run_dir)),
        options_(std::move(options)) {
    namespace fs = std::filesystem;
    for (const char* sub : {"", "/datasets", "/partitions", "/predictions",
                            "/plans", "/pools", "/exports", "/reports"}) {
      fs::create_directories(run_dir_ + sub);
    }
    if (options_.offline) config_.provider.kind = "mock";
    while (!run_dir_.empty() && run_dir_.back() == '/') run_dir_.pop_back();
    const std::string manifest_path = run_dir_ + "/manifest.json";
    if (fs::exists(manifest_path)) {
      manifest_ = RunManifest::load(manifest_path);
    } else {
      manifest_ = RunManifest(fs::path(run_dir_).filename().string(),
                              config_.digest());
    }
  }

  const RunConfig& config() const { return config_; }
  RunManifest& manifest() { return manifest_; }
  const std::string& run_dir() const { return run_dir_; }

  void save_manifest() { manifest_.save(run_dir_ + "/manifest.json"); }

  // --- stages ---------------------------------------------------------

  // Normalizes every loadable registry dataset into datasets/<name>.jsonl.
  void ingest() {
    Registry registry = Registry::load(config_.registry_path);
    // Checksums recorded by an earlier ingest carry over, so a mutated
    // source is flagged stale instead of silently re-registered.
    const std::string run_registry = run_dir_ + "/datasets/registry.json";
    if (std::filesystem::exists(run_registry)) {
      Registry recorded = Registry::load(run_registry);
      for (const auto& prev : recorded.manifests()) {
        for (auto& m : registry.manifests_mutable()) {
          if (m.name == prev.name && m.path == prev.path &&
              m.checksum.empty()) {
            m.checksum = prev.checksum;
          }
        }
      }
    }
    std::map<std::string, std::string> inputs;
    inputs["config"] = section_digest("ingest");
    inputs["registry"] = sha256_file(config_.registry_path);
    for (const auto& m : registry.manifests()) {
      if (m.format == "jsonl") inputs["src:" + m.name] = sha256_file(m.path);
    }
    const bool ran =
        run_stage(manifest_, run_dir_, "ingest", inputs, [&] {
          std::vector<std::string> outputs;
          json drop_counts = json::object();
          for (const auto& m : registry.manifests()) {
            if (m.format != "jsonl") continue;
            LoadResult r = registry.load_verified(m.name);
            const std::string rel = "datasets/" + m.name + ".jsonl";
            save_dataset_jsonl(r.dataset, run_dir_ + "/" + rel);
            outputs.push_back(rel);
            drop_counts[m.name] = r.dropped_labels;
          }
          registry.save(run_dir_ + "/datasets/registry.json");
          write_json_file(run_dir_ + "/datasets/ingest_report.json",
                          drop_counts);
          outputs.push_back("datasets/registry.json");
          outputs.push_back("datasets/ingest_report.json");
          return outputs;
        });
    (void)ran;
    save_manifest();
  }

  void partition(std::size_t seed_index) {
    const std::uint64_t seed = config_.seed_at(seed_index);
    const std::string train_rel = "datasets/" + config_.train_dataset + ".jsonl";
    std::map<std::string, std::string> inputs;
    inputs["config"] = section_digest("partition");
    inputs["seed"] = std::to_string(seed);
    inputs["train"] = require_digest(train_rel, "ingest");
    run_stage(manifest_, run_dir_, stage_name("partition", seed_index), inputs,
              [&] {
                Dataset train = load_normalized(config_.train_dataset);
                Partition p = draw_partition(train, config_.budget, seed);
                const std::string rel = partition_rel(seed_index);
                write_json_file(run_dir_ + "/" + rel, partition_to_json(p));
                return std::vector<std::string>{rel};
              });
    save_manifest();
  }

  // Predictions over the candidate pool (and the initial set when the down
  // strategy ranks it) with the selection-time model.
  void predict(std::size_t seed_index) {
    using nlikit::select::Method;
    const Method method = config_.selection.method;
    if ((method == Method::uncertainty ||
         method == Method::uncertainty_correct_only) &&
        !selection_handle().supports_probabilities) {
      throw CapabilityError(
          "selection method '" +
          std::string(nlikit::select::method_name(method)) +
          "' needs class probabilities, but the provider does not expose "
          "them");
    }
    std::map<std::string, std::string> inputs;
    inputs["config"] = section_digest("predict");
    inputs["partition"] =
        require_digest(partition_rel(seed_index), "partition");
    inputs["train"] = require_digest(
        "datasets/" + config_.train_dataset + ".jsonl", "ingest");
    run_stage(
        manifest_, run_dir_, stage_name("predict", seed_index), inputs, [&] {
          Dataset train = load_normalized(config_.train_dataset);
          Partition p = load_partition(seed_index);
          std::vector<std::string> outputs;
          outputs.push_back(predictions_rel(seed_index, "potential"));
          write_predictions(train.subset(p.potential_set(), "potential"),
                            outputs.back());
          if (config_.selection.down_strategy ==
              nlikit::select::DownStrategy::lowest_entropy) {
            outputs.push_back(predictions_rel(seed_index, "init"));
            write_predictions(train.subset(p.init_set(), "init"),
                              outputs.back());
          }
          return outputs;
        });
    save_manifest();
  }

  // Dimension scores over the candidate pool (and the initial set when the
  // down strategy ranks by score).
  void score(std::size_t seed_index) {
    std::map<std::string, std::string> inputs;
    inputs["config"] = section_digest("score");
    inputs["partition"] =
        require_digest(partition_rel(seed_index), "partition");
    inputs["train"] = require_digest(
        "datasets/" + config_.train_dataset + ".jsonl", "ingest");
    run_stage(
        manifest_, run_dir_, stage_name("score", seed_index), inputs, [&] {
          Dataset train = load_normalized(config_.train_dataset);
          Partition p = load_partition(seed_index);
          std::vector<std::string> outputs;
          outputs.push_back(scores_rel(seed_index, "potential"));
          write_scores(train.subset(p.potential_set(), "potential"),
                       outputs.back());
          if (config_.selection.down_strategy ==
              nlikit::select::DownStrategy::lowest_score) {
            outputs.push_back(scores_rel(seed_index, "init"));
            write_scores(train.subset(p.init_set(), "init"), outputs.back());
          }
          return outputs;
        });
    save_manifest();
  }

  void select(std::size_t seed_index) {
    using nlikit::select::DownStrategy;
    using nlikit::select::Method;
    nlikit::select::SelectionConfig sel = config_.selection;
    sel.seed = config_.seed_at(seed_index);

    std::map<std::string, std::string> inputs;
    inputs["config"] = section_digest("select");
    inputs["partition"] =
        require_digest(partition_rel(seed_index), "partition");
    const bool generation_plan = config_.plan_from_generation();
    const bool needs_predictions =
        !generation_plan &&
        (sel.method == Method::uncertainty ||
         sel.method == Method::uncertainty_correct_only ||
         sel.method == Method::misclassified);
    const bool needs_scores =
        !generation_plan && sel.method == Method::difficulty_score;
    if (generation_plan) {
      inputs["pool"] = require_digest("pools/validated.jsonl", "validate");
    }
    if (needs_predictions) {
      inputs["predictions"] =
          require_digest(predictions_rel(seed_index, "potential"), "predict");
    }
    if (sel.down_strategy == DownStrategy::lowest_entropy) {
      inputs["init_predictions"] =
          require_digest(predictions_rel(seed_index, "init"), "predict");
    }
    if (needs_scores) {
      inputs["scores"] =
          require_digest(scores_rel(seed_index, "potential"), "score");
    }
    if (sel.down_strategy == DownStrategy::lowest_score) {
      inputs["init_scores"] =
          require_digest(scores_rel(seed_index, "init"), "score");
    }

    run_stage(
        manifest_, run_dir_, stage_name("select", seed_index), inputs, [&] {
          Dataset train = load_normalized(config_.train_dataset);
          Partition p = load_partition(seed_index);
          Dataset init = train.subset(p.init_set(), "init");

          nlikit::select::PredMap preds;
          nlikit::select::PredMap init_preds;
          nlikit::select::ScoreMap scores;
          nlikit::select::ScoreMap init_scores;
          nlikit::select::DownArtifacts artifacts;
          if (needs_predictions) {
            preds = read_predictions(predictions_rel(seed_index, "potential"));
          }
          if (sel.down_strategy == DownStrategy::lowest_entropy) {
            init_preds = read_predictions(predictions_rel(seed_index, "init"));
            artifacts.init_predictions = &init_preds;
          }
          if (needs_scores) {
            scores = read_scores(scores_rel(seed_index, "potential"));
          }
          if (sel.down_strategy == DownStrategy::lowest_score) {
            init_scores = read_scores(scores_rel(seed_index, "init"));
            artifacts.init_scores = &init_scores;
          }

          SwapPlan plan;
          if (generation_plan) {
            auto pool = load_instances("pools/validated.jsonl");
            plan = synth::build_generation_plan(
                pool, init, sel.effective_budget(config_.budget),
                config_.generation ? config_.generation->strategy : "generation",
                sel.seed);
          } else {
            Dataset pool = train.subset(p.potential_set(), "potential");
            switch (sel.method) {
              case Method::random:
                plan = nlikit::select::select_random(
                    pool, init, config_.budget, sel, artifacts);
                break;
              case Method::uncertainty:
              case Method::uncertainty_correct_only:
                plan = nlikit::select::select_uncertainty(
                    pool, preds, init, config_.budget, sel, artifacts);
                break;
              case Method::difficulty_score:
                plan = nlikit::select::select_difficulty(
                    pool, scores, init, config_.budget, sel, artifacts);
                break;
              case Method::misclassified:
                plan = nlikit::select::select_misclassified(
                    pool, preds, init, config_.budget, sel, artifacts);
                break;
              case Method::concat_hypothesis: {
                // The concat source is everything outside the initial set.
                auto init_ids = p.init_set();
                Dataset source("concat_source", DatasetKind::train);
                for (const auto& inst : train.instances()) {
                  if (!init_ids.count(inst.id)) source.add(inst);
                }
                plan = nlikit::select::select_concat(source, init,
                                                     config_.budget, sel,
                                                     artifacts);
                break;
              }
            }
          }
          json j = plan_to_json(plan);
          j["prompt_template"] = selection_template_id();
          const std::string rel = plan_rel(seed_index);
          write_json_file(run_dir_ + "/" + rel, j);
          return std::vector<std::string>{rel};
        });
    save_manifest();
  }

  // Synthetic pool generation (zero-shot strategies) or unlabelled-corpus
  // labelling (domain_label).
  void generate() {
    if (!config_.generation) {
      throw ConfigError("generate: config has no generation section");
    }
    const GenerationConfig& gen = *config_.generation;
    std::map<std::string, std::string> inputs;
    inputs["config"] = section_digest("generate");
    if (gen.strategy == "domain_label") {
      if (gen.unlabelled_dataset.empty()) {
        throw ConfigError("generate: domain_label needs unlabelled_dataset");
      }
      inputs["unlabelled"] = require_digest(
          "datasets/" + gen.unlabelled_dataset + ".jsonl", "ingest");
    }
    run_stage(
        manifest_, run_dir_, "generate", inputs, [&] {
          FilterRules rules =
              FilterRules::load(config_.assets() + "/filter_rules.txt");
          json report;
          std::vector<NliInstance> instances;
          if (gen.strategy == "domain_label") {
            Dataset corpus = load_normalized(gen.unlabelled_dataset);
            gate::PromptConfig cfg = config_.prompts;
            synth::LabelledBatch batch = synth::label_unlabelled(
                gateway(), base_handle(),
                {corpus.instances().begin(), corpus.instances().end()}, cfg,
                rules);
            instances = std::move(batch.instances);
            report = filter_report_json(batch.filter_report);
            report["dropped_invalid"] = batch.dropped_invalid;
          } else {
            synth::GenStrategy strategy =
                synth::GenStrategy::standard(gen.strategy);
            synth::DomainCatalog domains =
                synth::DomainCatalog::load(config_.assets() + "/domains.txt");
            gate::PromptConfig cfg;
            cfg.n_shots = 0;
            cfg.chain_of_thought = false;
            cfg.temperature = gen.temperature;
            synth::GenerationBatch batch = synth::generate_batch(
                gateway(), base_handle(), strategy, domains,
                gen.target_per_class, gen.seed, rules, cfg);
            if (batch.partial) {
              throw ProviderError(
                  "generate: aborted after exhausting the skip budget (" +
                  std::to_string(batch.skipped) + " draws failed)");
            }
            instances = std::move(batch.instances);
            report = filter_report_json(batch.filter_report);
            report["skipped"] = batch.skipped;
          }
          write_instances(instances, "pools/generated.jsonl");
          write_json_file(run_dir_ + "/pools/generated_filter.json", report);
          record_usage();
          return std::vector<std::string>{"pools/generated.jsonl",
                                          "pools/generated_filter.json"};
        });
    save_manifest();
  }

  void validate() {
    std::map<std::string, std::string> inputs;
    inputs["config"] = section_digest("validate");
    inputs["generated"] = require_digest("pools/generated.jsonl", "generate");
    run_stage(
        manifest_, run_dir_, "validate", inputs, [&] {
          auto pool = load_instances("pools/generated.jsonl");
          gate::PromptConfig cfg = config_.prompts;
          cfg.temperature = config_.generation
                                ? config_.generation->validation_temperature
                                : cfg.temperature;
          synth::UnanimityResult result =
              synth::validate_unanimity(gateway(), base_handle(), pool, cfg);
          write_instances(result.kept, "pools/validated.jsonl");
          std::ofstream verdicts(run_dir_ + "/pools/verdicts.jsonl",
                                 std::ios::binary);
          for (const auto& v : result.verdicts) {
            json j;
            j["id"] = v.instance_id;
            j["votes"] = json::array();
            for (const auto& vote : v.votes) {
              j["votes"].push_back(
                  vote ? std::string(label_word(*vote)) : "invalid");
            }
            j["kept"] = v.kept;
            if (v.final_label) {
              j["final"] = std::string(label_word(*v.final_label));
            }
            verdicts << j.dump() << '\n';
          }
          verdicts.close();
          json summary;
          summary["input"] = pool.size();
          summary["kept"] = result.kept.size();
          summary["unresolved"] = result.unresolved;
          write_json_file(run_dir_ + "/pools/validation_summary.json", summary);
          record_usage();
          return std::vector<std::string>{"pools/validated.jsonl",
                                          "pools/verdicts.jsonl",
                                          "pools/validation_summary.json"};
        });
    save_manifest();
  }

  void assemble(std::size_t seed_index) {
    std::map<std::string, std::string> inputs;
    inputs["config"] = section_digest("assemble");
    inputs["partition"] =
        require_digest(partition_rel(seed_index), "partition");
    inputs["plan"] = require_digest(plan_rel(seed_index), "select");
    run_stage(manifest_, run_dir_, stage_name("assemble", seed_index), inputs,
              [&] {
                Dataset train = load_normalized(config_.train_dataset);
                Partition p = load_partition(seed_index);
                Dataset init = train.subset(p.init_set(), "init");
                SwapPlan plan = plan_from_json(
                    read_json_file(run_dir_ + "/" + plan_rel(seed_index)));
                Budget budget =
                    config_.selection.effective_budget(config_.budget);
                Dataset swapped = apply_swap(init, plan, budget);
                const std::string rel = assembled_rel(seed_index);
                save_dataset_jsonl(swapped, run_dir_ + "/" + rel);
                return std::vector<std::string>{rel};
              });
    save_manifest();
  }

  // Chat-format training file: one user message rendering the instance, one
  // assistant message carrying exactly the lowercase label word.
  void export_finetune(std::size_t seed_index) {
    std::map<std::string, std::string> inputs;
    inputs["config"] = section_digest("export");
    inputs["assembled"] = require_digest(assembled_rel(seed_index), "assemble");
    run_stage(
        manifest_, run_dir_, stage_name("export-finetune", seed_index), inputs,
        [&] {
          Dataset train = load_dataset_jsonl(
              run_dir_ + "/" + assembled_rel(seed_index), "assembled",
              DatasetKind::train);
          const std::string rel = finetune_file_rel(seed_index);
          std::ofstream out(run_dir_ + "/" + rel, std::ios::binary);
          if (!out) throw DataError("cannot write " + rel);
          const gate::TemplateStore& store = gateway().templates();
          for (const auto& inst : train.instances()) {
            if (!inst.label) {
              throw DataError("export-finetune: instance '" + inst.id +
                              "' is unlabelled");
            }
            if (!inst.text_ok()) {
              throw DataError("export-finetune: instance '" + inst.id +
                              "' has empty text");
            }
            json user;
            user["role"] = "user";
            user["content"] =
                store.render(config_.export_template,
                             {{"premise", inst.premise},
                              {"hypothesis", inst.hypothesis}});
            json assistant;
            assistant["role"] = "assistant";
            assistant["content"] = std::string(label_word(*inst.label));
            json line;
            line["messages"] = json::array({user, assistant});
            out << line.dump() << '\n';
          }
          return std::vector<std::string>{rel};
        });
    save_manifest();
  }

  void finetune(std::size_t seed_index) {
    std::map<std::string, std::string> inputs;
    inputs["config"] = section_digest("finetune");
    inputs["export"] =
        require_digest(finetune_file_rel(seed_index), "export-finetune");
    const std::string job_key = stage_name("finetune", seed_index);
    run_stage(
        manifest_, run_dir_, job_key, inputs, [&] {
          gate::FinetuneJob job = gateway().submit_finetune(
              base_handle(), run_dir_ + "/" + finetune_file_rel(seed_index),
              config_.finetune_params, inputs.at("export"));
          int polls = 0;
          while (!gate::job_terminal(job.state)) {
            if (++polls > options_.max_finetune_polls) {
              throw ProviderError("finetune: job '" + job.job_id +
                                  "' not terminal after " +
                                  std::to_string(polls - 1) + " polls");
            }
            if (options_.finetune_poll_interval.count() > 0) {
              std::this_thread::sleep_for(options_.finetune_poll_interval);
            }
            job = gateway().poll_finetune(job);
          }
          if (job.state == gate::JobState::failed) {
            throw ProviderError("finetune: job '" + job.job_id +
                                "' failed: " + job.error);
          }
          manifest_.record_job(job_key, job);
          record_usage();
          return std::vector<std::string>{};
        });
    save_manifest();
  }

  void evaluate(std::size_t seed_index) {
    Registry registry =
        Registry::load(run_dir_ + "/datasets/registry.json");
    std::map<std::string, std::string> inputs;
    inputs["config"] = section_digest("evaluate");
    gate::ModelHandle handle;
    if (config_.eval.model == "base") {
      handle = base_handle();
    } else {
      const auto* job = manifest_.find_job(stage_name("finetune", seed_index));
      if (job == nullptr || !job->result) {
        throw ConfigError("evaluate: no fine-tuned model for seed index " +
                          std::to_string(seed_index) +
                          " (run the finetune stage first)");
      }
      handle = *job->result;
    }
    inputs["model"] = handle.model;
    for (const auto& name : config_.eval_datasets) {
      inputs["eval:" + name] =
          require_digest("datasets/" + name + ".jsonl", "ingest or copa-build");
    }
    run_stage(
        manifest_, run_dir_, stage_name("evaluate", seed_index), inputs, [&] {
          gate::PromptConfig cfg = config_.prompts;
          if (handle.role == "finetuned") {
            // Fine-tuned models see exactly the training rendering.
            cfg.n_shots = 0;
            cfg.chain_of_thought = false;
            cfg.template_id = config_.export_template;
            cfg.temperature = 0.0;
          }
          json results = json::array();
          for (const auto& name : config_.eval_datasets) {
            Dataset d = load_normalized(name);
            std::unordered_map<std::string, gate::PredictionRecord> preds;
            for (const auto& inst : d.instances()) {
              preds[inst.id] = gateway().classify(handle, inst, cfg);
            }
            const bool binary = registry.get(name).binary_eval;
            eval::RunResult r =
                eval::score(d, preds, binary, config_.system_name,
                            config_.seed_at(seed_index));
            results.push_back(r.to_json());
          }
          json doc;
          doc["results"] = results;
          const std::string rel = results_rel(seed_index);
          write_json_file(run_dir_ + "/" + rel, doc);
          record_usage();
          return std::vector<std::string>{rel};
        });
    save_manifest();
  }

  // Aggregates every seed's results; optionally pulls a comparison system's
  // results file for categorization and significance testing.
  void report(const std::string& compare_results_path = "") {
    std::map<std::string, std::string> inputs;
    inputs["config"] = section_digest("report");
    for (std::size_t i = 0; i < config_.seeds.size(); ++i) {
      inputs["results:" + std::to_string(i)] =
          require_digest(results_rel(i), "evaluate");
    }
    if (!compare_results_path.empty()) {
      inputs["compare"] = sha256_file(compare_results_path);
    }
    run_stage(
        manifest_, run_dir_, "report", inputs, [&] {
          std::vector<eval::RunResult> own = load_all_results();
          if (own.empty()) {
            throw DataError("report: no evaluation results to aggregate");
          }
          std::vector<eval::RunResult> baseline;
          if (!compare_results_path.empty()) {
            baseline = load_results_file(compare_results_path);
          }

          // Categorization baseline: the comparison system when present,
          // else this run's own accuracies.
          const std::vector<eval::RunResult>& basis =
              baseline.empty() ? own : baseline;
          std::map<std::string, std::vector<double>> acc_lists;
          for (const auto& r : basis) {
            acc_lists[r.dataset].push_back(r.accuracy());
          }
          std::map<std::string, double> baseline_acc;
          for (const auto& [name, list] : acc_lists) {
            double sum = 0.0;
            for (double a : list) sum += a;
            baseline_acc[name] = sum / static_cast<double>(list.size());
          }
          std::set<std::string> in_distribution;
          Registry registry =
              Registry::load(run_dir_ + "/datasets/registry.json");
          for (const auto& m : registry.manifests()) {
            if (m.in_distribution) in_distribution.insert(m.name);
          }
          auto categorization = eval::categorize(
              baseline_acc, config_.eval.challenge_threshold, in_distribution);

          std::vector<eval::RunResult> all = own;
          all.insert(all.end(), baseline.begin(), baseline.end());
          eval::EvalReport rep =
              eval::aggregate(all, categorization, in_distribution);
          if (!baseline.empty()) {
            const std::string pair =
                own.front().system + " vs " + baseline.front().system;
            rep.significance[pair] = eval::bootstrap_compare(
                own, baseline, categorization,
                config_.eval.bootstrap_resamples, config_.eval.bootstrap_seed);
          }
          write_json_file(run_dir_ + "/reports/report.json",
                          eval::report_to_json(rep));
          write_text_file(run_dir_ + "/reports/report.txt",
                          eval::render_table(rep));
          return std::vector<std::string>{"reports/report.json",
                                          "reports/report.txt"};
        });
    save_manifest();
  }

  // Builds the choice-derived NLI test set from a registry entry with
  // format "copa".
  void copa_build(const std::string& name) {
    Registry registry = Registry::load(config_.registry_path);
    const DatasetManifest& m = registry.get(name);
    if (m.format != "copa") {
      throw ConfigError("copa-build: dataset '" + name + "' has format '" +
                        m.format + "', expected 'copa'");
    }
    std::map<std::string, std::string> inputs;
    inputs["config"] = section_digest("copa");
    inputs["src"] = sha256_file(m.path);
    run_stage(manifest_, run_dir_, "copa-build:" + name, inputs, [&] {
      auto records = load_copa_records(m);
      Dataset d = build_copa_nli(records, Label::neutral, name);
      const std::string rel = "datasets/" + name + ".jsonl";
      save_dataset_jsonl(d, run_dir_ + "/" + rel);
      return std::vector<std::string>{rel};
    });
    save_manifest();
  }

  // --- shared plumbing --------------------------------------------------

  gate::Gateway& gateway() {
    if (!gateway_) {
      gate::GatewayOptions opts = options_.gateway;
      if (opts.cache_journal.empty()) {
        const std::string cache_dir = options_.cache_dir.empty()
                                          ? run_dir_ + "/cache"
                                          : options_.cache_dir;
        opts.cache_journal = cache_dir + "/journal.jsonl";
      }
      std::shared_ptr<gate::Provider> provider;
      if (config_.provider.kind == "mock") {
        provider = std::make_shared<gate::MockProvider>(
            config_.provider.mock_seed,
            config_.provider.supports_probabilities);
      } else {
        gate::OpenAiConfig oa;
        oa.base_url = config_.provider.base_url;
        oa.path_prefix = config_.provider.path_prefix;
        oa.api_key_env = config_.provider.api_key_env;
        provider = std::make_shared<gate::OpenAiProvider>(oa);
      }
      gateway_.emplace(provider,
                       gate::TemplateStore::load_dir(config_.assets() +
                                                     "/templates"),
                       opts);
    }
    return *gateway_;
  }

  gate::ModelHandle base_handle() const {
    gate::ModelHandle h;
    h.provider = config_.provider.kind;
    h.model = config_.provider.model;
    h.role = "base";
    h.supports_probabilities = config_.provider.supports_probabilities;
    h.supports_finetune = config_.provider.supports_finetune;
    return h;
  }

  gate::ModelHandle selection_handle() const {
    gate::ModelHandle h = base_handle();
    if (!config_.selection_model.empty()) {
      h.model = config_.selection_model;
      h.role = "finetuned";
    }
    return h;
  }

  Dataset load_normalized(const std::string& name) const {
    const std::string path = run_dir_ + "/datasets/" + name + ".jsonl";
    if (!std::filesystem::exists(path)) {
      throw DataError("dataset '" + name +
                      "' not ingested yet (expected " + path + ")");
    }
    Registry registry = Registry::load(run_dir_ + "/datasets/registry.json");
    DatasetKind kind = DatasetKind::eval;
    for (const auto& m : registry.manifests()) {
      if (m.name == name) kind = m.kind;
    }
    return load_dataset_jsonl(path, name, kind);
  }

  Partition load_partition(std::size_t seed_index) const {
    return partition_from_json(
        read_json_file(run_dir_ + "/" + partition_rel(seed_index)));
  }

private:
  std::string stage_name(const std::string& base, std::size_t seed_index) const {
    return base + ":seed" + std::to_string(seed_index);
  }
  std::string partition_rel(std::size_t i) const {
    return "partitions/seed" + std::to_string(i) + ".json";
  }
  std::string predictions_rel(std::size_t i, const std::string& which) const {
    return "predictions/" + which + "_seed" + std::to_string(i) + ".jsonl";
  }
  std::string scores_rel(std::size_t i, const std::string& which) const {
    return "predictions/scores_" + which + "_seed" + std::to_string(i) +
           ".jsonl";
  }
  std::string plan_rel(std::size_t i) const {
    return "plans/seed" + std::to_string(i) + ".json";
  }
  std::string assembled_rel(std::size_t i) const {
    return "exports/train_seed" + std::to_string(i) + ".jsonl";
  }
  std::string finetune_file_rel(std::size_t i) const {
    return "exports/finetune_seed" + std::to_string(i) + ".jsonl";
  }
  std::string results_rel(std::size_t i) const {
    return "reports/results_seed" + std::to_string(i) + ".json";
  }

  std::string selection_template_id() const {
    if (!config_.selection_template.empty()) return config_.selection_template;
    if (!config_.prompts.template_id.empty()) return config_.prompts.template_id;
    return config_.prompts.n_shots > 0 ? "classify_fewshot" : "classify_plain";
  }

  // Digest of the config slice a stage depends on, so unrelated config edits
  // do not invalidate it.
  std::string section_digest(const std::string& stage) const {
    json j;
    j["stage"] = stage;
    if (stage == "ingest") {
      j["registry"] = config_.registry_path;
    } else if (stage == "partition") {
      j["m"] = config_.budget.m;
    } else if (stage == "predict") {
      j["model"] = selection_handle().model;
      j["template"] = selection_template_id();
      j["prompts"] = config_.prompts.to_json();
    } else if (stage == "score") {
      json dims = json::array();
      for (auto d : config_.selection.dimensions) {
        dims.push_back(std::string(gate::score_dim_name(d)));
      }
      j["dimensions"] = dims;
      j["model"] = selection_handle().model;
    } else if (stage == "select") {
      j["selection"] = config_.selection.digest();
      j["K"] = config_.budget.K;
      j["template"] = selection_template_id();
    } else if (stage == "generate" || stage == "validate") {
      if (config_.generation) {
        const auto& g = *config_.generation;
        j["strategy"] = g.strategy;
        j["target"] = g.target_per_class;
        j["seed"] = g.seed;
        j["temperature"] =
            stage == "validate" ? g.validation_temperature : g.temperature;
      }
      j["model"] = config_.provider.model;
    } else if (stage == "assemble") {
      j["K"] = config_.budget.K;
    } else if (stage == "export") {
      j["template"] = config_.export_template;
    } else if (stage == "finetune") {
      j["params"] = config_.finetune_params;
      j["model"] = config_.provider.model;
    } else if (stage == "evaluate") {
      j["datasets"] = config_.eval_datasets;
      j["eval_model"] = config_.eval.model;
      j["prompts"] = config_.prompts.to_json();
    } else if (stage == "report") {
      j["threshold"] = config_.eval.challenge_threshold;
      j["resamples"] = config_.eval.bootstrap_resamples;
      j["bootstrap_seed"] = config_.eval.bootstrap_seed;
    } else if (stage == "copa") {
      j["copa"] = true;
    }
    return sha256_hex(j.dump());
  }

  // Digest of an existing run artifact, with a hint naming the producing
  // stage when it is missing.
  std::string require_digest(const std::string& rel,
                             const std::string& producer) const {
    const std::string path = run_dir_ + "/" + rel;
    if (!std::filesystem::exists(path)) {
      throw DataError("missing artifact " + rel + " (run the " + producer +
                      " stage first)");
    }
    return sha256_file(path);
  }

  void write_predictions(const Dataset& d, const std::string& rel) {
    gate::PromptConfig cfg = config_.prompts;
    if (!config_.selection_template.empty()) {
      cfg.template_id = config_.selection_template;
    }
    std::ofstream out(run_dir_ + "/" + rel, std::ios::binary);
    if (!out) throw DataError("cannot write " + rel);
    for (const auto& inst : d.instances()) {
      gate::PredictionRecord rec =
          gateway().classify(selection_handle(), inst, cfg);
      out << gate::prediction_to_json(rec).dump() << '\n';
    }
    record_usage();
  }

  nlikit::select::PredMap read_predictions(const std::string& rel) const {
    std::ifstream in(run_dir_ + "/" + rel, std::ios::binary);
    if (!in) throw DataError("cannot open " + rel);
    nlikit::select::PredMap preds;
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      gate::PredictionRecord rec =
          gate::prediction_from_json(json::parse(line));
      preds[rec.instance_id] = std::move(rec);
    }
    return preds;
  }

  void write_scores(const Dataset& d, const std::string& rel) {
    std::ofstream out(run_dir_ + "/" + rel, std::ios::binary);
    if (!out) throw DataError("cannot write " + rel);
    for (const auto& inst : d.instances()) {
      gate::ScoreResult result = gateway().score_instance(
          selection_handle(), inst, config_.selection.dimensions);
      json j;
      j["id"] = inst.id;
      json values = json::object();
      for (const auto& [dim, v] : result.values) {
        values[std::string(gate::score_dim_name(dim))] = v;
      }
      j["values"] = values;
      j["unscorable"] = result.unscorable;
      if (!result.note.empty()) j["note"] = result.note;
      out << j.dump() << '\n';
    }
    record_usage();
  }

  nlikit::select::ScoreMap read_scores(const std::string& rel) const {
    std::ifstream in(run_dir_ + "/" + rel, std::ios::binary);
    if (!in) throw DataError("cannot open " + rel);
    nlikit::select::ScoreMap scores;
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      json j = json::parse(line);
      gate::ScoreResult result;
      result.unscorable = j.value("unscorable", false);
      for (auto it = j.at("values").begin(); it != j.at("values").end(); ++it) {
        result.values[gate::parse_score_dim(it.key())] =
            it.value().get<int>();
      }
      scores[j.at("id").get<std::string>()] = std::move(result);
    }
    return scores;
  }

  std::vector<NliInstance> load_instances(const std::string& rel) const {
    Dataset d = load_dataset_jsonl(run_dir_ + "/" + rel, rel,
                                   DatasetKind::train);
    return {d.instances().begin(), d.instances().end()};
  }

  void write_instances(const std::vector<NliInstance>& instances,
                       const std::string& rel) {
    std::ofstream out(run_dir_ + "/" + rel, std::ios::binary);
    if (!out) throw DataError("cannot write " + rel);
    for (const auto& inst : instances) {
      out << instance_to_json(inst).dump() << '\n';
    }
  }

  static json filter_report_json(const FilterReport& report) {
    json j;
    j["kept"] = report.kept;
    j["dropped"] = report.dropped;
    j["reasons"] = report.reasons;
    j["scope"] = report.scope_note;
    return j;
  }

  std::vector<CopaRecord> load_copa_records(const DatasetManifest& m) const {
    std::ifstream in(m.path, std::ios::binary);
    if (!in) throw DataError("cannot open copa source: " + m.path);
    std::vector<CopaRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw DataError(m.path + ":" + std::to_string(lineno) + ": " +
                        e.what());
      }
      CopaRecord rec;
      rec.id = j.contains("id")
                   ? (j.at("id").is_string() ? j.at("id").get<std::string>()
                                             : j.at("id").dump())
                   : m.name + ":" + std::to_string(records.size());
      rec.premise = j.at("premise").get<std::string>();
      rec.choice1 = j.at("choice1").get<std::string>();
      rec.choice2 = j.at("choice2").get<std::string>();
      rec.question = j.at("question").get<std::string>();
      rec.correct = j.at("label").get<int>() + 1;  // 0-based label index
      records.push_back(std::move(rec));
    }
    return records;
  }

  std::vector<eval::RunResult> load_all_results() const {
    std::vector<eval::RunResult> all;
    for (std::size_t i = 0; i < config_.seeds.size(); ++i) {
      auto batch = load_results_file(run_dir_ + "/" + results_rel(i));
      all.insert(all.end(), batch.begin(), batch.end());
    }
    return all;
  }

  static std::vector<eval::RunResult> load_results_file(
      const std::string& path) {
    json doc = read_json_file(path);
    std::vector<eval::RunResult> out;
    for (const auto& item : doc.at("results")) {
      out.push_back(eval::RunResult::from_json(item));
    }
    return out;
  }

  void record_usage() {
    if (!gateway_) return;
    manifest_.add_usage("transport",
                        gateway_->transport_count() - usage_snapshot_);
    usage_snapshot_ = gateway_->transport_count();
    manifest_.add_usage("cache_hits",
                        gateway_->cache_hit_count() - cache_snapshot_);
    cache_snapshot_ = gateway_->cache_hit_count();
  }

  RunConfig config_;
  std::string run_dir_;
  RunOptions options_;
  RunManifest manifest_;
  std::optional<gate::Gateway> gateway_;
  std::uint64_t usage_snapshot_ = 0;
  std::uint64_t cache_snapshot_ = 0;
};

}  // namespace nlikit::run
