#include <sstream>

#include "doctest.h"
#include "hchunk/generators.hpp"
#include "hchunk/hcm.hpp"
#include "hchunk/hvm.hpp"
#include "hchunk/serialize.hpp"

using namespace hchunk;

namespace {

void check_same_inventory(const ChunkInventory& a, const ChunkInventory& b) {
  CHECK(a.alphabet() == b.alphabet());
  REQUIRE(a.size() == b.size());
  for (const auto& [id, e] : a.entries()) {
    REQUIRE(b.contains(id));
    const auto& f = b.entries().at(id);
    CHECK(e.count == f.count);
    CHECK(e.chunk.parts == f.chunk.parts);
    CHECK(e.chunk.created_at == f.chunk.created_at);
    CHECK(e.chunk.parents == f.chunk.parents);
    CHECK(e.chunk.atomic_length == f.chunk.atomic_length);
  }
  CHECK(a.variables() == b.variables());
}

std::vector<Sequence> motif_trials() {
  return generate_motif_trials(
             make_motif_spec(MotifExperiment::kVariable, "motif"), 1)
      .training;
}

}  // namespace

TEST_CASE("sequence text format round-trips") {
  std::vector<Sequence> seqs{Sequence({"A", "B", "C"}), Sequence(),
                             Sequence({"red", "blue"})};
  std::stringstream ss;
  write_sequences(ss, seqs);
  CHECK(ss.str() == "A B C\n\nred blue\n");
  CHECK(read_sequences(ss) == seqs);
}

TEST_CASE("sequence lines reject doubled and stray separators") {
  CHECK_THROWS_AS(parse_sequence_line("A  B"), ParseError);
  CHECK_THROWS_AS(parse_sequence_line(" A"), ParseError);
  CHECK_THROWS_AS(parse_sequence_line("A "), ParseError);
  CHECK_THROWS_AS(parse_sequence_line("A\tB"), ParseError);
  try {
    parse_sequence_line("A B  C");
  } catch (const ParseError& e) {
    CHECK(e.position() == 4);
  }
  std::stringstream crlf("A B\r\nC\r\n");
  auto seqs = read_sequences(crlf);
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0] == Sequence({"A", "B"}));
}

TEST_CASE("hcm state round-trips losslessly") {
  std::vector<Sequence> seqs;
  for (int i = 0; i < 300; ++i) seqs.push_back(Sequence({"A", "B", "C", "A", "B"}));
  HcmParams p;
  p.decay = 0.97;
  LearnResult r = learn(LearnerState(Alphabet({"A", "B", "C"}), p), seqs, {5, 1});
  REQUIRE(r.state.inventory.size() > 3);
  StoredState s = stored_state(r.state, r.graph);
  s.meta = {{"note", "x"}};
  json j = state_to_json(s);
  StoredState back = state_from_json(json::parse(j.dump()));
  check_same_inventory(r.state.inventory, back.learner.inventory);
  CHECK(back.learner.transitions.pairs() == r.state.transitions.pairs());
  CHECK(back.learner.step_index == r.state.step_index);
  CHECK(back.learner.params.decay == 0.97);
  CHECK(export_graph(back.graph) == export_graph(r.graph));
  CHECK(back.meta == s.meta);
  CHECK(state_to_json(back).dump() == j.dump());
}

TEST_CASE("hvm state with variables round-trips losslessly") {
  auto trials = motif_trials();
  HvmState h = hvm_learn(Alphabet({"A", "B", "C", "D", "E", "F"}), trials, {});
  REQUIRE_FALSE(h.inventory().variables().empty());
  json j = state_to_json(stored_state(h));
  CHECK(j["type"] == "hvm");
  StoredState back = state_from_json(json::parse(j.dump()));
  check_same_inventory(h.inventory(), back.learner.inventory);
  CHECK(back.layers.size() == h.layers.size());
  CHECK(state_to_json(back).dump() == j.dump());
}

TEST_CASE("inventory json has the documented fields") {
  ChunkInventory inv(Alphabet({"A", "B"}));
  Chunk ab;
  ab.parts = {Element::atom("A"), Element::atom("B")};
  ab.parents = std::make_pair(ChunkId("A"), ChunkId("B"));
  ab.created_at = 4;
  inv.add(ab, 2.5);
  json j = inventory_to_json(inv);
  CHECK(j["alphabet"] == json({"A", "B"}));
  const json& c = j["chunks"][0];
  CHECK(c.contains("parts"));
  CHECK(c.contains("count"));
  CHECK(c.contains("createdAt"));
  CHECK(c.contains("parents"));
  CHECK(j["chunks"][1]["parents"] == json({"A", "B"}));
  CHECK(j.contains("variables"));
}

TEST_CASE("malformed state json is a data error") {
  CHECK_THROWS_AS(state_from_json(json::parse(R"({"chunks": []})")), DataError);
  CHECK_THROWS_AS(
      state_from_json(json::parse(
          R"({"alphabet": ["A"], "chunks": [{"parts": ["Z"], "count": 1}]})")),
      DataError);
  CHECK_THROWS_AS(
      state_from_json(json::parse(
          R"({"alphabet": ["A"], "chunks": [{"parts": ["A"], "count": -1}]})")),
      DataError);
  CHECK_THROWS_AS(state_from_json(json::parse(
                      R"({"alphabet": ["A"], "chunks": [], "type": "lstm"})")),
                  DataError);
}

TEST_CASE("generator spec sidecar round-trips") {
  GeneratorSpec spec =
      build_category_generator(Alphabet({"A", "B", "C", "D", "E"}), 8, 2, 3);
  json j = generator_spec_to_json(spec);
  GeneratorSpec back = generator_spec_from_json(json::parse(j.dump()));
  CHECK(generator_spec_to_json(back) == j);
  CHECK(sample_sequence(back, 500, 9) == sample_sequence(spec, 500, 9));
}
