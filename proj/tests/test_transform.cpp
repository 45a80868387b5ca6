// COPA-to-NLI construction and difficulty-split tagging.

#include <catch2/catch_amalgamated.hpp>

#include "nlikit/transform.hpp"

using namespace nlikit;

namespace {

CopaRecord record(const std::string& id, const std::string& question,
                  int correct) {
  CopaRecord r;
  r.id = id;
  r.premise = "The streets were wet in the morning.";
  r.choice1 = "It rained";
  r.choice2 = "It snowed";
  r.question = question;
  r.correct = correct;
  return r;
}

}  // namespace

TEST_CASE("copa templates render byte-exactly") {
  Dataset d = build_copa_nli({record("r1", "cause", 1)});
  REQUIRE(d.size() == 2);
  CHECK(d.instances()[0].hypothesis ==
        "\"It rained\" is a more likely cause of this than \"It snowed\"");
  CHECK(d.instances()[1].hypothesis ==
        "\"It snowed\" is a more likely cause of this than \"It rained\"");

  Dataset e = build_copa_nli({record("r2", "effect", 2)});
  CHECK(e.instances()[0].hypothesis ==
        "\"It rained\" is a more likely effect of this than \"It snowed\"");
}

TEST_CASE("copa pairs are label-complementary with ids fwd/swap") {
  std::vector<CopaRecord> records;
  for (int i = 0; i < 100; ++i) {
    records.push_back(record("r" + std::to_string(i),
                             i % 2 == 0 ? "cause" : "effect", 1 + i % 2));
  }
  Dataset d = build_copa_nli(records);
  REQUIRE(d.size() == 200);
  for (int i = 0; i < 100; ++i) {
    const auto& fwd = d.instances()[static_cast<std::size_t>(2 * i)];
    const auto& swp = d.instances()[static_cast<std::size_t>(2 * i + 1)];
    CHECK(fwd.id == "r" + std::to_string(i) + "#fwd");
    CHECK(swp.id == "r" + std::to_string(i) + "#swap");
    const bool fwd_entail = fwd.label == Label::entailment;
    const bool swp_entail = swp.label == Label::entailment;
    CHECK(fwd_entail != swp_entail);  // exactly one of the pair entails
  }
}

TEST_CASE("copa non-entailment encoding is configurable but never entailment") {
  Dataset d =
      build_copa_nli({record("r1", "cause", 1)}, Label::contradiction);
  CHECK(d.instances()[1].label == Label::contradiction);
  CHECK_THROWS_AS(build_copa_nli({record("r1", "cause", 1)}, Label::entailment),
                  ConfigError);
}

TEST_CASE("copa validates records") {
  CopaRecord bad = record("x", "cause", 3);
  CHECK_THROWS_AS(build_copa_nli({bad}), DataError);
  CopaRecord empty_choice = record("y", "effect", 1);
  empty_choice.choice2 = "  ";
  CHECK_THROWS_AS(build_copa_nli({empty_choice}), DataError);
  CopaRecord odd_question = record("z", "because", 1);
  CHECK_THROWS_AS(build_copa_nli({odd_question}), DataError);
}

TEST_CASE("tag_splits records tags without touching text or labels") {
  Dataset d("x", DatasetKind::eval);
  for (int i = 0; i < 5; ++i) {
    NliInstance inst;
    inst.id = "i" + std::to_string(i);
    inst.premise = "P.";
    inst.hypothesis = "H.";
    inst.label = Label::entailment;
    d.add(inst);
  }
  TagLog log;
  Dataset tagged = tag_splits(d, {{"i0", "hard"}, {"i1", "hard"},
                                  {"i2", "hard"}}, &log);
  CHECK(log.tagged == 3);
  CHECK(tagged.by_id("i0").meta.at("split") == "hard");
  CHECK(tagged.by_id("i3").meta.count("split") == 0);
  CHECK(tagged.by_id("i0").premise == "P.");
  CHECK(tagged.by_id("i0").label == Label::entailment);

  // Empty map: identity.
  Dataset same = tag_splits(tagged, {});
  CHECK(same.size() == tagged.size());

  // Unknown ids are warned about via the log, not fatal.
  TagLog log2;
  tag_splits(d, {{"ghost", "easy"}}, &log2);
  CHECK(log2.missing_ids == 1);

  // Applying a second map re-tags with last-write-wins and counts it.
  TagLog log3;
  Dataset retagged = tag_splits(tagged, {{"i0", "easy"}}, &log3);
  CHECK(retagged.by_id("i0").meta.at("split") == "easy");
  CHECK(log3.overwritten == 1);

  // Unknown tag values are rejected.
  CHECK_THROWS_AS(tag_splits(d, {{"i0", "medium"}}), DataError);
}
