// Core domain types: labels, entropy, composition, partitions and swap
// plans.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "nlikit/budget.hpp"
#include "nlikit/entropy.hpp"
#include "nlikit/instance.hpp"
#include "nlikit/json_io.hpp"
#include "nlikit/labels.hpp"
#include "nlikit/partition.hpp"
#include "nlikit/rng.hpp"
#include "nlikit/swap_plan.hpp"

using namespace nlikit;

namespace {

NliInstance make_inst(const std::string& id, Label label,
                      const std::string& premise = "A premise sentence.",
                      const std::string& hypothesis = "A hypothesis sentence.") {
  NliInstance inst;
  inst.id = id;
  inst.premise = premise;
  inst.hypothesis = hypothesis;
  inst.label = label;
  inst.source = "test";
  return inst;
}

// Nine instances, three per class.
Dataset tiny_init() {
  Dataset d("init", DatasetKind::train);
  int n = 0;
  for (Label c : kLabels) {
    for (int i = 0; i < 3; ++i) {
      d.add(make_inst("init:" + std::to_string(n++), c));
    }
  }
  return d;
}

// Independent precedence oracle: highest rank wins, with
// entailment < neutral < contradiction.
Label precedence_oracle(const std::vector<Label>& labels) {
  int best = 0;
  auto rank = [](Label l) {
    switch (l) {
      case Label::entailment: return 0;
      case Label::neutral: return 1;
      case Label::contradiction: return 2;
    }
    return 0;
  };
  for (Label l : labels) best = std::max(best, rank(l));
  return best == 0 ? Label::entailment
                   : (best == 1 ? Label::neutral : Label::contradiction);
}

}  // namespace

TEST_CASE("labels parse strictly") {
  CHECK(parse_label("entailment") == Label::entailment);
  CHECK(parse_label("neutral") == Label::neutral);
  CHECK(parse_label("contradiction") == Label::contradiction);
  CHECK_THROWS_AS(parse_label("Entailment"), DataError);
  CHECK_THROWS_AS(parse_label("maybe"), DataError);
}

TEST_CASE("label normalization accepts ingest aliases only") {
  CHECK(normalize_label("e") == Label::entailment);
  CHECK(normalize_label("Neutral") == Label::neutral);
  CHECK(normalize_label("C") == Label::contradiction);
  CHECK(normalize_label("-") == std::nullopt);
  CHECK_THROWS_AS(normalize_label("entails"), DataError);
}

TEST_CASE("entropy matches the stated reference points") {
  CHECK(entropy({1.0, 0.0, 0.0}) == 0.0);
  CHECK(entropy({1.0 / 3, 1.0 / 3, 1.0 / 3}) ==
        Catch::Approx(std::log(3.0)).epsilon(1e-12));
  // -0.5 ln 0.5 - 2 * 0.25 ln 0.25, evaluated independently
  const double expected = 1.5 * std::log(2.0);
  CHECK(entropy({0.5, 0.25, 0.25}) == Catch::Approx(expected).epsilon(1e-12));
  CHECK(entropy({0.5, 0.25, 0.25}) == Catch::Approx(1.0397).margin(5e-5));
}

TEST_CASE("entropy rejects malformed vectors") {
  CHECK_THROWS_AS(entropy({0.5, 0.5, 0.5}), InvariantError);
  CHECK_THROWS_AS(entropy({-0.1, 0.6, 0.5}), InvariantError);
  CHECK_THROWS_AS(entropy({0.5, 0.25, 0.2}), InvariantError);
}

TEST_CASE("entropy is permutation invariant and uniquely maximal at uniform") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    double a = rng.uniform01() + 1e-9;
    double b = rng.uniform01() + 1e-9;
    double c = rng.uniform01() + 1e-9;
    const double sum = a + b + c;
    Probs p{a / sum, b / sum, c / sum};
    Probs q{p[2], p[0], p[1]};
    CHECK(entropy(p) == Catch::Approx(entropy(q)).epsilon(1e-12));
    const double spread = std::abs(p[0] - 1.0 / 3) + std::abs(p[1] - 1.0 / 3) +
                          std::abs(p[2] - 1.0 / 3);
    if (spread > 1e-3) {
      CHECK(entropy(p) < std::log(3.0) - 1e-9);
    }
  }
}

TEST_CASE("compose_labels follows the contradiction > neutral precedence") {
  CHECK(compose_labels({Label::entailment, Label::entailment,
                        Label::contradiction}) == Label::contradiction);
  CHECK(compose_labels({Label::entailment, Label::neutral,
                        Label::entailment}) == Label::neutral);
  CHECK(compose_labels({Label::entailment, Label::entailment,
                        Label::entailment}) == Label::entailment);
  CHECK_THROWS_AS(compose_labels(std::vector<Label>{}), InvariantError);
}

TEST_CASE("compose_labels agrees with the precedence oracle on all tuples") {
  // Exhaustive over 3^H tuples for H in 1..4.
  for (int H = 1; H <= 4; ++H) {
    int count = 1;
    for (int i = 0; i < H; ++i) count *= 3;
    for (int code = 0; code < count; ++code) {
      std::vector<Label> tuple;
      int v = code;
      for (int i = 0; i < H; ++i) {
        tuple.push_back(kLabels[static_cast<std::size_t>(v % 3)]);
        v /= 3;
      }
      REQUIRE(compose_labels(tuple) == precedence_oracle(tuple));
    }
  }
}

TEST_CASE("budget derives K from the fraction of m") {
  Budget b = Budget::make(10000, 0.05);
  CHECK(b.K == 500);
  CHECK(3 * b.K == 1500);
  CHECK_THROWS_AS(Budget::with_cap(10, 4), ConfigError);  // 3K > m
  CHECK_THROWS_AS(Budget::make(0), ConfigError);
}

TEST_CASE("dataset enforces id uniqueness and preserves order") {
  Dataset d("x", DatasetKind::train);
  d.add(make_inst("a", Label::entailment));
  d.add(make_inst("b", Label::neutral));
  CHECK_THROWS_AS(d.add(make_inst("a", Label::contradiction)), DataError);
  CHECK(d.instances()[0].id == "a");
  CHECK(d.instances()[1].id == "b");
}

TEST_CASE("dataset serialization round-trips byte-for-byte") {
  Dataset d("rt", DatasetKind::train);
  auto a = make_inst("a", Label::entailment, "P one.", "H one.");
  a.meta["genre"] = "fiction";
  d.add(a);
  d.add(make_inst("b", Label::contradiction, "P two.", "H two."));

  const std::string path1 = "rt_test_1.jsonl";
  const std::string path2 = "rt_test_2.jsonl";
  save_dataset_jsonl(d, path1);
  Dataset back = load_dataset_jsonl(path1, "rt", DatasetKind::train);
  save_dataset_jsonl(back, path2);
  CHECK(read_text_file(path1) == read_text_file(path2));
  REQUIRE(back.size() == 2);
  CHECK(back.instances()[0].meta.at("genre") == "fiction");
  std::remove(path1.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("draw_partition produces disjoint sets of size m deterministically") {
  Dataset d("corpus", DatasetKind::train);
  for (int i = 0; i < 40; ++i) {
    d.add(make_inst("c:" + std::to_string(i),
                    kLabels[static_cast<std::size_t>(i % 3)]));
  }
  Budget b = Budget::make(20, 0.05);
  Partition p = draw_partition(d, b, 11);
  REQUIRE(p.init_ids.size() == 20);
  REQUIRE(p.potential_ids.size() == 20);
  std::set<std::string> all(p.init_ids.begin(), p.init_ids.end());
  all.insert(p.potential_ids.begin(), p.potential_ids.end());
  CHECK(all.size() == 40);  // disjoint and covering
  p.validate(d);

  Partition again = draw_partition(d, b, 11);
  CHECK(again.init_ids == p.init_ids);
  CHECK(again.potential_ids == p.potential_ids);

  Partition other = draw_partition(d, b, 12);
  CHECK(other.init_ids != p.init_ids);
}

TEST_CASE("draw_partition reports required vs available on small corpora") {
  Dataset d("small", DatasetKind::train);
  for (int i = 0; i < 15; ++i) {
    d.add(make_inst("s:" + std::to_string(i), Label::entailment));
  }
  Budget b = Budget::make(10, 0.0);
  try {
    draw_partition(d, b, 1);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("15") != std::string::npos);
    CHECK(msg.find("20") != std::string::npos);
  }
}

TEST_CASE("apply_swap preserves size and class histogram") {
  Dataset init = tiny_init();
  Budget b = Budget::with_cap(9, 1);
  SwapPlan plan;
  plan.method = "test";
  plan.up = {make_inst("new:e", Label::entailment),
             make_inst("new:n", Label::neutral),
             make_inst("new:c", Label::contradiction)};
  plan.down_ids = {"init:0", "init:3", "init:6"};
  Dataset swapped = apply_swap(init, plan, b);
  CHECK(swapped.size() == 9);
  CHECK(swapped.class_histogram() == init.class_histogram());
  CHECK_FALSE(swapped.contains("init:0"));
  CHECK(swapped.contains("new:e"));
  // Survivors come first, in init order, then the up instances in plan order.
  CHECK(swapped.instances()[0].id == "init:1");
  CHECK(swapped.instances().back().id == "new:c");
}

TEST_CASE("apply_swap names the violated constraint") {
  Dataset init = tiny_init();
  Budget b = Budget::with_cap(9, 1);

  SECTION("up id already in init") {
    SwapPlan plan;
    plan.up = {make_inst("init:1", Label::entailment)};
    plan.down_ids = {"init:0"};
    try {
      apply_swap(init, plan, b);
      FAIL("expected InvariantError");
    } catch (const InvariantError& e) {
      CHECK(std::string(e.what()).find("already present") != std::string::npos);
    }
  }

  SECTION("class counts mismatched") {
    SwapPlan plan;
    plan.up = {make_inst("new:e", Label::entailment)};
    plan.down_ids = {"init:3"};  // a neutral instance
    try {
      apply_swap(init, plan, b);
      FAIL("expected InvariantError");
    } catch (const InvariantError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("entailment") != std::string::npos);
    }
  }

  SECTION("per-class cap exceeded") {
    Budget b0 = Budget::with_cap(9, 0);
    SwapPlan plan;
    plan.up = {make_inst("new:e", Label::entailment)};
    plan.down_ids = {"init:0"};
    try {
      apply_swap(init, plan, b0);
      FAIL("expected InvariantError");
    } catch (const InvariantError& e) {
      CHECK(std::string(e.what()).find("exceeding K") != std::string::npos);
    }
  }

  SECTION("down id outside init") {
    SwapPlan plan;
    plan.up = {make_inst("new:e", Label::entailment)};
    plan.down_ids = {"ghost"};
    CHECK_THROWS_AS(apply_swap(init, plan, b), InvariantError);
  }
}

TEST_CASE("protocol-scale swap: m = 10,000, K = 500 replaces 1,500") {
  Dataset init("init", DatasetKind::train);
  for (int i = 0; i < 10000; ++i) {
    init.add(make_inst("i:" + std::to_string(i),
                       kLabels[static_cast<std::size_t>(i % 3)]));
  }
  Budget b = Budget::make(10000, 0.05);
  REQUIRE(b.K == 500);

  SwapPlan plan;
  plan.method = "fixture";
  // 500 new instances per class, matched by a seeded 500-per-class
  // down-draw.
  for (int i = 0; i < 1500; ++i) {
    plan.up.push_back(make_inst("new:" + std::to_string(i),
                                kLabels[static_cast<std::size_t>(i % 3)]));
  }
  Rng rng(3);
  std::array<std::size_t, 3> taken{0, 0, 0};
  for (const auto& inst : init.instances()) {
    auto ci = static_cast<std::size_t>(label_index(*inst.label));
    if (taken[ci] < 500 && rng.below(4) == 0) {
      plan.down_ids.push_back(inst.id);
      taken[ci]++;
    }
  }
  REQUIRE(plan.down_ids.size() == 1500);

  Dataset swapped = apply_swap(init, plan, b);
  CHECK(swapped.size() == 10000);
  CHECK(swapped.class_histogram() == init.class_histogram());
  std::size_t replaced = 0;
  for (const auto& inst : swapped.instances()) {
    if (inst.id.rfind("new:", 0) == 0) replaced++;
  }
  CHECK(replaced == 1500);
}

TEST_CASE("protocol-scale partition: 20,000 instances split into two 10,000s") {
  Dataset d("corpus", DatasetKind::train);
  for (int i = 0; i < 20000; ++i) {
    d.add(make_inst("c:" + std::to_string(i),
                    kLabels[static_cast<std::size_t>(i % 3)]));
  }
  Budget b = Budget::make(10000, 0.05);
  Partition p = draw_partition(d, b, 5);
  CHECK(p.init_ids.size() == 10000);
  CHECK(p.potential_ids.size() == 10000);
  std::set<std::string> all(p.init_ids.begin(), p.init_ids.end());
  all.insert(p.potential_ids.begin(), p.potential_ids.end());
  CHECK(all.size() == 20000);  // disjoint and covering the corpus
}

TEST_CASE("rng sampling is deterministic and unbiased enough") {
  Rng a(42);
  Rng b(42);
  auto sa = a.sample_indices(100, 10);
  auto sb = b.sample_indices(100, 10);
  CHECK(sa == sb);
  std::set<std::size_t> uniq(sa.begin(), sa.end());
  CHECK(uniq.size() == 10);

  // Sub-streams with different labels diverge.
  Rng base(42);
  CHECK(base.derive("x").next_u64() != base.derive("y").next_u64());
}
