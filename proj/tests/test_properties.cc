// Randomized invariants over whole learning runs.

#include <cmath>

#include "doctest.h"
#include "hchunk/eval.hpp"
#include "hchunk/generators.hpp"
#include "hchunk/hcm.hpp"
#include "hchunk/hvm.hpp"
#include "hchunk/serialize.hpp"
#include "oracles.hpp"

using namespace hchunk;

namespace {

struct Run {
  std::vector<Sequence> seqs;
  LearnResult result;
};

Run random_run(Rng& rng) {
  std::vector<std::string> alpha{"A", "B", "C", "D"};
  GeneratorSpec spec =
      build_hierarchical_generator(Alphabet(alpha), 1 + rng.index(6), rng.next());
  Sequence s = sample_sequence(spec, 500 + rng.index(1500), rng.next());
  HcmParams p;
  p.decay = 0.9 + 0.1 * rng.uniform();
  p.alpha = std::pow(10.0, -1.0 - 6.0 * rng.uniform());
  p.prune = rng.index(2) == 0;
  Schedule sched{1 + rng.index(10), 1 + rng.index(2)};
  Run run{split_windows(s, 10 + rng.index(40)), {}};
  run.result = learn(LearnerState(Alphabet(alpha), p), run.seqs, sched);
  return run;
}

}  // namespace

TEST_CASE("learned inventories parse every input losslessly") {
  Rng rng(101);
  for (int i = 0; i < 40; ++i) {
    Run run = random_run(rng);
    const ChunkInventory& inv = run.result.state.inventory;
    for (const auto& s : run.seqs) {
      ParseResult p = greedy_parse(inv, atom_parts(s.tokens()));
      REQUIRE(is_lossless(p, s, inv));
      // Spans tile the input.
      std::size_t at = 0;
      for (const auto& sp : p.spans) {
        CHECK(sp.start == at);
        at = sp.end;
      }
      CHECK(at == s.size());
    }
  }
}

TEST_CASE("chunk probabilities stay normalized and counts nonnegative") {
  Rng rng(102);
  for (int i = 0; i < 40; ++i) {
    Run run = random_run(rng);
    const ChunkInventory& inv = run.result.state.inventory;
    double sum = 0.0, counts = 0.0;
    for (const auto& [id, e] : inv.entries()) {
      CHECK(e.count >= 0.0);
      counts += e.count;
      sum += chunk_probability(inv, id);
    }
    CHECK(counts == doctest::Approx(inv.total()));
    CHECK(sum == doctest::Approx(1.0));
  }
}

TEST_CASE("every composite descends from chunks created before it") {
  Rng rng(103);
  for (int i = 0; i < 40; ++i) {
    Run run = random_run(rng);
    const auto& nodes = run.result.graph.nodes();
    for (const auto& e : run.result.graph.edges()) {
      REQUIRE(nodes.count(e.parent));
      REQUIRE(nodes.count(e.child));
      CHECK(nodes.at(e.parent).created_at < nodes.at(e.child).created_at);
      CHECK(nodes.at(e.parent).parts.size() < nodes.at(e.child).parts.size());
    }
    for (const auto& [id, e] : run.result.state.inventory.entries()) {
      CHECK(e.chunk.atomic_length == e.chunk.parts.size());
      if (e.chunk.parents) {
        CHECK(e.chunk.parents->first + " " + e.chunk.parents->second == id);
      }
    }
  }
}

TEST_CASE("forgetting scales mass and prunes only composites") {
  Rng rng(104);
  for (int i = 0; i < 40; ++i) {
    Run run = random_run(rng);
    LearnerState st = run.result.state;
    st.params.prune = true;
    double before = st.inventory.total();
    double f = 0.05 + 0.9 * rng.uniform();
    auto removed = apply_forgetting(st, f);
    for (const auto& id : removed) {
      CHECK(id.find(' ') != std::string::npos);
      CHECK(run.result.state.inventory.count(id) * f < st.params.prune_epsilon);
    }
    for (const auto& a : st.inventory.alphabet().symbols()) CHECK(st.inventory.contains(a));
    double dropped = 0.0;
    for (const auto& id : removed) dropped += run.result.state.inventory.count(id) * f;
    CHECK(st.inventory.total() == doctest::Approx(before * f - dropped));
  }
}

TEST_CASE("stored states reload to the same model") {
  Rng rng(105);
  for (int i = 0; i < 20; ++i) {
    Run run = random_run(rng);
    json j = state_to_json(stored_state(run.result.state, run.result.graph));
    StoredState back = state_from_json(json::parse(j.dump()));
    CHECK(state_to_json(back).dump() == j.dump());
    InventoryModel a(run.result.state.inventory), b(back.learner.inventory);
    for (const auto& s : run.seqs) {
      CHECK(a.sequence_bits(s) == b.sequence_bits(s));
    }
  }
}

TEST_CASE("variable-aware parses of hvm runs are lossless") {
  Rng rng(106);
  Alphabet ab({"A", "B", "C", "D", "E", "F"});
  for (int i = 0; i < 10; ++i) {
    GeneratorSpec spec = build_category_generator(ab, 6, 2, rng.next());
    auto windows = split_windows(sample_sequence(spec, 1500, rng.next()), 30);
    HvmConfig cfg;
    cfg.hcm.alpha = 1e-4;
    HvmState h = hvm_learn(ab, windows, cfg);
    for (const auto& w : windows) {
      ParseResult p = parse_with_variables(h.inventory(), w);
      CHECK(is_lossless(p, w, h.inventory()));
    }
  }
}
