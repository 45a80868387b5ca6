// Corpus ingestion: JSONL loading, the dataset registry, and the generated-
// text quality filters.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "nlikit/filter.hpp"
#include "nlikit/json_io.hpp"
#include "nlikit/registry.hpp"

using namespace nlikit;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("nlikit_ingest_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

NliInstance gen(const std::string& premise, const std::string& hypothesis) {
  NliInstance inst;
  inst.id = "g" + std::to_string(reinterpret_cast<std::uintptr_t>(&inst) % 100000) +
            ":" + std::to_string(rand());
  inst.premise = premise;
  inst.hypothesis = hypothesis;
  return inst;
}

}  // namespace

TEST_CASE("load_dataset parses the primary jsonl format") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("c.jsonl"));
    out << R"({"premise":"P one.","hypothesis":"H one.","label":"entailment"})" << "\n";
    out << R"({"premise":"P two.","hypothesis":"H two.","label":"n","genre":"letters"})" << "\n";
    out << R"({"premise":"P three.","hypothesis":"H three.","label":"contradiction"})" << "\n";
  }
  DatasetManifest m;
  m.name = "toy";
  m.path = tmp.file("c.jsonl");
  LoadResult r = load_dataset(m);
  REQUIRE(r.dataset.size() == 3);
  CHECK(r.dataset.instances()[0].id == "toy:0");
  CHECK(r.dataset.instances()[1].label == Label::neutral);
  CHECK(r.dataset.instances()[1].meta.at("genre") == "letters");
  CHECK(r.dropped_labels == 0);
}

TEST_CASE("load_dataset drops disagreement markers with a count") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("c.jsonl"));
    out << R"({"premise":"P.","hypothesis":"H.","label":"entailment"})" << "\n";
    out << R"({"premise":"P.","hypothesis":"H2.","label":"-"})" << "\n";
  }
  DatasetManifest m;
  m.name = "toy";
  m.path = tmp.file("c.jsonl");
  LoadResult r = load_dataset(m);
  CHECK(r.dataset.size() == 1);
  CHECK(r.dropped_labels == 1);
}

TEST_CASE("load_dataset rejects unknown labels with the line number") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("c.jsonl"));
    out << R"({"premise":"P.","hypothesis":"H.","label":"entailment"})" << "\n";
    out << R"({"premise":"P.","hypothesis":"H.","label":"maybe"})" << "\n";
  }
  DatasetManifest m;
  m.name = "toy";
  m.path = tmp.file("c.jsonl");
  try {
    load_dataset(m);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("load_dataset rejects duplicate explicit ids naming the id") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("c.jsonl"));
    out << R"({"id":"dup","premise":"P.","hypothesis":"H.","label":"e"})" << "\n";
    out << R"({"id":"dup","premise":"Q.","hypothesis":"I.","label":"n"})" << "\n";
  }
  DatasetManifest m;
  m.name = "toy";
  m.path = tmp.file("c.jsonl");
  try {
    load_dataset(m);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("dup") != std::string::npos);
  }
}

TEST_CASE("load_dataset honours foreign field mappings") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("f.jsonl"));
    out << R"({"sentence1":"P.","sentence2":"H.","gold_label":"entailment"})" << "\n";
  }
  DatasetManifest m;
  m.name = "foreign";
  m.path = tmp.file("f.jsonl");
  m.fields.premise = "sentence1";
  m.fields.hypothesis = "sentence2";
  m.fields.label = "gold_label";
  LoadResult r = load_dataset(m);
  REQUIRE(r.dataset.size() == 1);
  CHECK(r.dataset.instances()[0].premise == "P.");
}

TEST_CASE("registry verifies checksums and flags stale datasets") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("c.jsonl"));
    out << R"({"premise":"P.","hypothesis":"H.","label":"e"})" << "\n";
  }
  Registry reg;
  DatasetManifest m;
  m.name = "toy";
  m.path = tmp.file("c.jsonl");
  reg.add(m);

  // First load records the checksum.
  LoadResult r = reg.load_verified("toy");
  CHECK(r.dataset.size() == 1);
  CHECK_FALSE(reg.get("toy").checksum.empty());
  CHECK_FALSE(reg.is_stale("toy"));

  // Same bytes: loads fine. Registry round-trips through its JSON document.
  reg.save(tmp.file("registry.json"));
  Registry back = Registry::load(tmp.file("registry.json"));
  CHECK(back.load_verified("toy").dataset.size() == 1);

  // Mutated file: stale.
  {
    std::ofstream out(tmp.file("c.jsonl"), std::ios::app);
    out << R"({"premise":"Q.","hypothesis":"I.","label":"n"})" << "\n";
  }
  CHECK_THROWS_AS(back.load_verified("toy"), DataError);
  CHECK(back.is_stale("toy"));
}

TEST_CASE("filter drops the banned word list on either field") {
  auto rules = FilterRules::defaults();
  auto [kept, report] = filter_generated(
      {gen("The sky is blue.", "This implies the premise."),
       gen("A premise about boats.", "Boats float."),
       gen("The Entailment was obvious.", "Clear skies ahead."),
       gen("The train left at noon. It was full.", "The train departed.")},
      rules);
  CHECK(kept.size() == 1);
  CHECK(report.kept == 1);
  CHECK(report.dropped == 3);
  // Attribution goes to the earliest match in the text: "implies" precedes
  // "premise" inside "This implies the premise."
  CHECK(report.reasons.at("word:implies") == 1);
  CHECK(report.reasons.at("word:premise") == 1);
  CHECK(report.reasons.at("word:entailment") == 1);
}

TEST_CASE("filter phrase rules apply to premises only") {
  auto rules = FilterRules::defaults();
  auto [kept, report] = filter_generated(
      {gen("Sure! Here is a sentence.", "A declarative thought."),
       gen("A fine morning in town.", "sure! this sentence is fine.")},
      rules);
  CHECK(report.reasons.at("phrase:sure!") == 1);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].premise == "A fine morning in town.");
}

TEST_CASE("filter drops interrogative or exclamatory premises") {
  auto rules = FilterRules::defaults();
  auto [kept, report] = filter_generated(
      {gen("Is this a good day?", "It is a day."),
       gen("What a day it was!", "It was a day."),
       gen("A quiet day passed.", "Did it pass?")},
      rules);
  CHECK(report.reasons.at("punct:terminal") == 2);
  CHECK(kept.size() == 1);  // interrogative hypothesis is not a premise rule
}

TEST_CASE("filter detects sentences joined without punctuation") {
  auto rules = FilterRules::defaults();
  auto [kept, report] = filter_generated(
      {gen("The train left at noon It was full.", "A train ran."),
       gen("The train left at noon. It was full.", "A train ran."),
       gen("A clean sentence here.", "It ends here Then starts another.")},
      rules);
  CHECK(report.reasons.at("punct:join") == 2);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].premise == "The train left at noon. It was full.");
}

TEST_CASE("word matching respects boundaries") {
  auto rules = FilterRules::defaults();
  // "implication" must not trip the "implies"/"implied" rules.
  auto [kept, report] = filter_generated(
      {gen("The implication was subtle.", "A subtle point."),
       gen("It was implied by the text.", "A point.")},
      rules);
  CHECK(kept.size() == 1);
  CHECK(report.reasons.count("word:implied") == 1);
}

TEST_CASE("filtering is idempotent") {
  Rng rng(99);
  std::vector<NliInstance> batch;
  const char* premises[] = {"A day at the harbor.", "Sure! A day.",
                            "Was it raining?", "The dog barked The cat ran.",
                            "A premise walks in.", "Clean and simple."};
  for (int i = 0; i < 200; ++i) {
    auto inst = gen(premises[rng.below(6)], "A hypothesis.");
    inst.id = "i" + std::to_string(i);
    batch.push_back(inst);
  }
  auto [once, r1] = filter_generated(batch);
  auto [twice, r2] = filter_generated(once);
  CHECK(once.size() == twice.size());
  CHECK(r2.dropped == 0);
  CHECK(r1.kept == r2.kept);
}

TEST_CASE("filter rules load from the plain-text asset") {
  FilterRules rules = FilterRules::load(std::string(NLIKIT_ASSET_DIR) +
                                        "/filter_rules.txt");
  CHECK(rules.words.size() == 7);
  CHECK(rules.phrases.size() == 4);
  CHECK(rules.words.front() == "premise");
  CHECK(rules.phrases.front() == "sure!");
}
