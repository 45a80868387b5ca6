// Synthetic generation, unlabelled-corpus labelling and the unanimity
// validation gate.

#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "nlikit/synth.hpp"
#include "nlikit/modelgate/mock.hpp"

using namespace nlikit;
using namespace nlikit::synth;
using nlikit::gate::MockProvider;
using nlikit::gate::MockScript;
using nlikit::gate::RequestKind;

namespace {

gate::TemplateStore asset_templates() {
  return gate::TemplateStore::load_dir(std::string(NLIKIT_ASSET_DIR) +
                                       "/templates");
}

gate::GatewayOptions fast_options() {
  gate::GatewayOptions opts;
  opts.backoff_base = std::chrono::milliseconds(0);
  return opts;
}

gate::ModelHandle handle() {
  gate::ModelHandle h;
  h.provider = "mock";
  h.model = "mock-base";
  h.supports_probabilities = true;
  return h;
}

DomainCatalog catalog() {
  return DomainCatalog::load(std::string(NLIKIT_ASSET_DIR) + "/domains.txt");
}

Dataset balanced_init(std::size_t per_class) {
  Dataset d("init", DatasetKind::train);
  int n = 0;
  for (Label c : kLabels) {
    for (std::size_t i = 0; i < per_class; ++i) {
      NliInstance inst;
      inst.id = "i" + std::to_string(n++);
      inst.premise = "Init premise " + inst.id + ".";
      inst.hypothesis = "Init hypothesis.";
      inst.label = c;
      d.add(inst);
    }
  }
  return d;
}

}  // namespace

TEST_CASE("domain catalog carries the 51 phrases") {
  DomainCatalog cat = catalog();
  CHECK(cat.size() == 51);
  CHECK(cat.domains().front() == "about a workplace");
  CHECK(cat.domains().back() == "to describe an object in the British Museum");
  // Entries whose exact wording is easy to "fix" by accident.
  std::set<std::string> entries(cat.domains().begin(), cat.domains().end());
  CHECK(entries.count("found in the instructions for a electrical item") == 1);
  CHECK(entries.count("from a detailed a technical report") == 1);
  CHECK(entries.count(
            "describing a tactical analysis of the team's strategy") == 1);
  CHECK(entries.count("describing your favourite place in the city") == 1);
  CHECK_THROWS_AS(DomainCatalog::from_list({"one", "two"}), DataError);
}

TEST_CASE("standard strategies resolve their template sets") {
  GenStrategy short_simple = GenStrategy::standard("short_simple");
  CHECK(short_simple.length == PremiseLength::one_sentence);
  GenStrategy long_simple = GenStrategy::standard("long_simple");
  CHECK(long_simple.length == PremiseLength::four_sentences);
  GenStrategy complex = GenStrategy::standard("long_complex");
  std::size_t total = 0;
  for (Label c : kLabels) {
    total += complex.hypothesis_templates[static_cast<std::size_t>(
        label_index(c))].size();
  }
  CHECK(total == 6);  // two strategies per class
  CHECK_THROWS_AS(GenStrategy::standard("domain_label"), ConfigError);
}

TEST_CASE("complex strategy templates carry the verbatim strategy text") {
  gate::TemplateStore store = asset_templates();
  const std::string c1 = store.raw("gen_complex_contradiction_1");
  CHECK(c1.find("construct a sentence that contradicts sentence 1") !=
        std::string::npos);
  CHECK(c1.find("does not contradict sentence 2") != std::string::npos);
  const std::string e2 = store.raw("gen_complex_entailment_2");
  CHECK(e2.find("strictly implied by a specific part of the premise above") !=
        std::string::npos);
  const std::string n2 = store.raw("gen_complex_neutral_2");
  CHECK(n2.find("two sentence output") != std::string::npos);
}

TEST_CASE("generate_batch produces the requested shape with domains recorded") {
  auto mock = std::make_shared<MockProvider>(42);
  gate::Gateway gw(mock, asset_templates(), fast_options());
  GenerationBatch batch =
      generate_batch(gw, handle(), GenStrategy::standard("short_simple"),
                     catalog(), 2, 7, FilterRules::defaults());
  CHECK(batch.instances.size() == 6);  // 2 per class, clean mock output
  CHECK_FALSE(batch.partial);
  std::set<std::string> labels;
  for (const auto& inst : batch.instances) {
    CHECK(inst.source == "short_simple");
    CHECK(inst.meta.count("domain") == 1);
    CHECK(inst.meta.count("intended_label") == 1);
    labels.insert(std::string(label_word(*inst.label)));
    // Short & simple premises are single sentences.
    CHECK(inst.premise.find("sentences") == std::string::npos);
  }
  CHECK(labels.size() == 3);
}

TEST_CASE("generate_batch is deterministic end-to-end with the mock") {
  auto run = [] {
    auto mock = std::make_shared<MockProvider>(42);
    gate::Gateway gw(mock, asset_templates(), fast_options());
    GenerationBatch batch =
        generate_batch(gw, handle(), GenStrategy::standard("long_complex"),
                       catalog(), 3, 11, FilterRules::defaults());
    json j = json::array();
    for (const auto& inst : batch.instances) j.push_back(instance_to_json(inst));
    return j.dump();
  };
  CHECK(run() == run());
}

TEST_CASE("long_complex alternates the two class strategies") {
  auto mock = std::make_shared<MockProvider>(42);
  gate::Gateway gw(mock, asset_templates(), fast_options());
  GenerationBatch batch =
      generate_batch(gw, handle(), GenStrategy::standard("long_complex"),
                     catalog(), 2, 3, FilterRules::defaults());
  std::set<std::string> templates;
  for (const auto& inst : batch.instances) {
    REQUIRE(inst.meta.count("template") == 1);
    templates.insert(inst.meta.at("template"));
  }
  CHECK(templates.size() == 6);  // both strategies used for every class
}

TEST_CASE("long_complex prompts embed the first contradiction strategy verbatim") {
  auto mock = std::make_shared<MockProvider>(1);
  // Capture the hypothesis prompt through a script that matches it.
  std::string seen;
  gate::Gateway gw(mock, asset_templates(), fast_options());
  GenStrategy strategy = GenStrategy::standard("long_complex");
  const std::string rendered = gw.templates().render(
      "gen_complex_contradiction_1", {{"premise", "Sentence a. Sentence b."}});
  CHECK(rendered.find("construct a sentence that contradicts sentence 1") !=
        std::string::npos);
  CHECK(rendered.find("Sentence a. Sentence b.") != std::string::npos);
}

TEST_CASE("generated instances that trip the filters are dropped and counted") {
  auto mock = std::make_shared<MockProvider>(42);
  MockScript sure;
  sure.kind = RequestKind::generate;
  sure.prompt_contains = "Provide a single sentence";
  sure.response = "Sure! Here is a sentence.";
  mock->add_script(sure);
  gate::Gateway gw(mock, asset_templates(), fast_options());
  GenerationBatch batch =
      generate_batch(gw, handle(), GenStrategy::standard("short_simple"),
                     catalog(), 2, 7, FilterRules::defaults());
  CHECK(batch.instances.empty());
  CHECK(batch.filter_report.dropped == 6);
  CHECK(batch.filter_report.reasons.at("phrase:sure!") == 6);
}

TEST_CASE("generation failures skip until the budget, then abort partial") {
  auto mock = std::make_shared<MockProvider>(42);
  MockScript fail;
  fail.kind = RequestKind::generate;
  fail.fail_transport = true;  // every generate call fails
  mock->add_script(fail);
  gate::GatewayOptions opts = fast_options();
  opts.transport_retries = 0;
  gate::Gateway gw(mock, asset_templates(), opts);
  GenerationBatch batch =
      generate_batch(gw, handle(), GenStrategy::standard("short_simple"),
                     catalog(), 10, 7, FilterRules::defaults());
  CHECK(batch.partial);
  CHECK(batch.skipped == 4);  // ceil(30 * 10%) = 3 absorbed, the 4th aborts
}

TEST_CASE("label_unlabelled filters first and drops invalid decodes") {
  auto mock = std::make_shared<MockProvider>(42);
  MockScript neutral;
  neutral.kind = RequestKind::classify;
  neutral.response = "The relationship is neutral.";
  mock->add_script(neutral);
  gate::Gateway gw(mock, asset_templates(), fast_options());

  std::vector<NliInstance> corpus;
  for (int i = 0; i < 10; ++i) {
    NliInstance inst;
    inst.id = "u" + std::to_string(i);
    inst.premise = "A clean declarative sentence number " + std::to_string(i) + ".";
    inst.hypothesis = "A clean short claim.";
    corpus.push_back(inst);
  }
  // One instance mentions a banned word; it must cost zero transport.
  corpus[3].premise = "This hypothesis mentions itself.";

  gate::PromptConfig cfg;
  LabelledBatch batch =
      label_unlabelled(gw, handle(), corpus, cfg, FilterRules::defaults());
  CHECK(batch.instances.size() == 9);
  CHECK(batch.filter_report.dropped == 1);
  CHECK(gw.transport_count() == 9);
  for (const auto& inst : batch.instances) {
    CHECK(inst.label == Label::neutral);
  }

  // Labelled input is rejected.
  std::vector<NliInstance> labelled = {corpus[0]};
  labelled[0].label = Label::entailment;
  CHECK_THROWS_AS(
      label_unlabelled(gw, handle(), labelled, cfg, FilterRules::defaults()),
      DataError);
}

TEST_CASE("label_unlabelled drops undecodable predictions with a count") {
  auto mock = std::make_shared<MockProvider>(42);
  MockScript bad;
  bad.kind = RequestKind::classify;
  bad.prompt_contains = "number 0";
  bad.response = "I cannot decide.";
  mock->add_script(bad);
  MockScript rest;
  rest.kind = RequestKind::classify;
  rest.response = "entailment";
  mock->add_script(rest);
  gate::Gateway gw(mock, asset_templates(), fast_options());

  std::vector<NliInstance> corpus;
  for (int i = 0; i < 10; ++i) {
    NliInstance inst;
    inst.id = "u" + std::to_string(i);
    inst.premise = "A clean declarative sentence number " + std::to_string(i) + ".";
    inst.hypothesis = "A clean short claim.";
    corpus.push_back(inst);
  }
  LabelledBatch batch = label_unlabelled(gw, handle(), corpus,
                                         gate::PromptConfig{},
                                         FilterRules::defaults());
  CHECK(batch.instances.size() == 9);
  CHECK(batch.dropped_invalid == 1);
}

TEST_CASE("unanimity decision keeps exactly unanimous valid votes") {
  using V = std::vector<std::optional<Label>>;
  CHECK(unanimity_decision(V(8, Label::entailment)) == Label::entailment);
  V seven_one(7, Label::entailment);
  seven_one.push_back(Label::neutral);
  CHECK(unanimity_decision(seven_one) == std::nullopt);
  V with_invalid(8, Label::contradiction);
  with_invalid[4] = std::nullopt;
  CHECK(unanimity_decision(with_invalid) == std::nullopt);
  CHECK(unanimity_decision(V{}) == std::nullopt);
}

TEST_CASE("unanimity decision, enumerated over every 4^8 vote tuple") {
  // 3 labels plus the invalid marker; exactly the 3 all-equal valid tuples
  // pass.
  const std::array<std::optional<Label>, 4> symbols = {
      Label::entailment, Label::neutral, Label::contradiction, std::nullopt};
  std::size_t kept = 0;
  for (std::size_t code = 0; code < 65536; ++code) {
    std::vector<std::optional<Label>> votes;
    std::size_t v = code;
    for (int i = 0; i < 8; ++i) {
      votes.push_back(symbols[v % 4]);
      v /= 4;
    }
    if (unanimity_decision(votes)) kept++;
  }
  CHECK(kept == 3);
}

TEST_CASE("validate_unanimity issues eight independent votes per instance") {
  auto mock = std::make_shared<MockProvider>(42);
  gate::Gateway gw(mock, asset_templates(), fast_options());

  std::vector<NliInstance> batch;
  for (int i = 0; i < 40; ++i) {
    NliInstance inst;
    inst.id = "g" + std::to_string(i);
    inst.premise = "A generated premise number " + std::to_string(i) + ".";
    inst.hypothesis = "A generated hypothesis.";
    inst.label = Label::entailment;  // intended
    batch.push_back(inst);
  }
  gate::PromptConfig cfg;
  UnanimityResult result = validate_unanimity(gw, handle(), batch, cfg);
  CHECK(result.verdicts.size() == 40);
  CHECK(gw.transport_count() == 40 * 8);  // nonce per vote defeats the cache
  for (const auto& verdict : result.verdicts) {
    CHECK(verdict.votes.size() == 8);
    CHECK(verdict.kept == (unanimity_decision(verdict.votes) != std::nullopt));
  }
}

TEST_CASE("unanimous vote overwrites the intended label and keeps the audit") {
  auto mock = std::make_shared<MockProvider>(42);
  MockScript always_neutral;
  always_neutral.kind = RequestKind::classify;
  always_neutral.response = "neutral";
  mock->add_script(always_neutral);
  gate::Gateway gw(mock, asset_templates(), fast_options());

  NliInstance inst;
  inst.id = "g0";
  inst.premise = "A generated premise.";
  inst.hypothesis = "A generated hypothesis.";
  inst.label = Label::entailment;  // intended, disagrees with the votes
  UnanimityResult result =
      validate_unanimity(gw, handle(), {inst}, gate::PromptConfig{});
  REQUIRE(result.kept.size() == 1);
  CHECK(result.kept[0].label == Label::neutral);
  CHECK(result.kept[0].meta.at("intended_label") == "entailment");
}

TEST_CASE("transport failures mark instances unresolved, not discarded") {
  auto mock = std::make_shared<MockProvider>(42);
  MockScript fail;
  fail.kind = RequestKind::classify;
  fail.fail_transport = true;
  mock->add_script(fail);
  gate::GatewayOptions opts = fast_options();
  opts.transport_retries = 0;
  gate::Gateway gw(mock, asset_templates(), opts);

  NliInstance inst;
  inst.id = "g0";
  inst.premise = "A premise-free sentence.";
  inst.hypothesis = "A clean short claim.";
  UnanimityResult result =
      validate_unanimity(gw, handle(), {inst}, gate::PromptConfig{});
  CHECK(result.kept.empty());
  CHECK(result.verdicts.empty());
  CHECK(result.unresolved == 1);
}

TEST_CASE("unanimity only shrinks per-class counts") {
  auto mock = std::make_shared<MockProvider>(77);
  gate::Gateway gw(mock, asset_templates(), fast_options());
  std::vector<NliInstance> batch;
  for (int i = 0; i < 60; ++i) {
    NliInstance inst;
    inst.id = "g" + std::to_string(i);
    inst.premise = "Premise-less generated text " + std::to_string(i) + ".";
    inst.hypothesis = "Some hypothesis text.";
    inst.label = kLabels[static_cast<std::size_t>(i % 3)];
    batch.push_back(inst);
  }
  UnanimityResult result =
      validate_unanimity(gw, handle(), batch, gate::PromptConfig{});
  // Keeps are rare (1/2187 per instance with uniform votes); whatever
  // remains introduces no new class.
  std::set<int> classes_in;
  for (const auto& inst : batch) classes_in.insert(label_index(*inst.label));
  for (const auto& kept : result.kept) {
    CHECK(classes_in.count(label_index(*kept.label)) == 1);
  }
  CHECK(result.kept.size() + (result.verdicts.size() - [&] {
          std::size_t kept = 0;
          for (const auto& v : result.verdicts) kept += v.kept ? 1 : 0;
          return kept;
        }()) == 60);
}

TEST_CASE("build_generation_plan draws K per class with matched down") {
  Dataset init = balanced_init(10);
  Budget budget = Budget::with_cap(30, 3);
  std::vector<NliInstance> pool;
  for (int i = 0; i < 18; ++i) {
    NliInstance inst;
    inst.id = "gen" + std::to_string(i);
    inst.premise = "Generated premise " + std::to_string(i) + ".";
    inst.hypothesis = "Generated hypothesis.";
    inst.label = kLabels[static_cast<std::size_t>(i % 3)];
    inst.source = "short_simple";
    pool.push_back(inst);
  }
  SwapPlan plan = build_generation_plan(pool, init, budget, "short_simple", 5);
  CHECK(plan.up.size() == 9);
  CHECK(plan.down_ids.size() == 9);
  SwapPlan again = build_generation_plan(pool, init, budget, "short_simple", 5);
  CHECK(plan_to_json(plan).dump() == plan_to_json(again).dump());

  // Shortfall in one class shrinks the matched swap.
  std::vector<NliInstance> short_pool;
  for (const auto& inst : pool) {
    if (inst.label != Label::contradiction || short_pool.size() % 7 == 0) {
      short_pool.push_back(inst);
    }
  }
  std::vector<NliInstance> two_contra;
  int contra = 0;
  for (const auto& inst : pool) {
    if (inst.label == Label::contradiction) {
      if (contra++ >= 2) continue;
    }
    two_contra.push_back(inst);
  }
  SwapPlan shrunk =
      build_generation_plan(two_contra, init, budget, "short_simple", 5);
  auto hist = shrunk.up_histogram();
  CHECK(hist[label_index(Label::contradiction)] == 2);
  CHECK(hist[label_index(Label::entailment)] == 3);
}
