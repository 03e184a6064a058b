#include <cmath>

#include "doctest.h"
#include "hchunk/eval.hpp"
#include "oracles.hpp"

using namespace hchunk;

namespace {

Sequence word(const std::string& s) {
  std::vector<std::string> t;
  for (char c : s) t.emplace_back(1, c);
  return Sequence(std::move(t));
}

Parts chars(const std::string& s) {
  Parts p;
  for (char c : s) p.push_back(Element::atom(std::string(1, c)));
  return p;
}

ChunkInventory inventory(const Alphabet& a,
                         std::vector<std::pair<std::string, double>> counts) {
  ChunkInventory inv(a);
  for (const auto& [s, n] : counts) {
    Chunk c;
    c.parts = chars(s);
    inv.set_count(inv.add(c), n);
  }
  return inv;
}

const Alphabet kABCD({"A", "B", "C", "D"});

GeneratorSpec spec_with(const std::vector<std::pair<std::string, double>>& chunks) {
  GeneratorSpec spec;
  spec.alphabet = kABCD;
  for (const auto& [s, p] : chunks) spec.chunks.push_back({chars(s), p, std::nullopt, 0});
  return spec;
}

}  // namespace

TEST_CASE("factorized probability of small cases") {
  ChunkInventory inv = inventory(Alphabet({"A", "B"}), {{"A", 1}, {"B", 1}});
  CHECK(factorized_probability(inv, word("A")) == doctest::Approx(0.5));
  CHECK(factorized_probability(inv, Sequence()) == 1.0);
  CHECK(sequence_nll(inv, Sequence()) == 0.0);
  ChunkInventory empty(Alphabet({"A"}));
  CHECK_THROWS_AS(factorized_probability(empty, word("A")), UndefinedDistribution);
}

TEST_CASE("a zero-mass chunk zeroes the probability and is floored in bits") {
  ChunkInventory inv = inventory(kABCD, {{"A", 2}, {"B", 2}});
  std::optional<ChunkId> zero;
  CHECK(factorized_probability(inv, word("ABC"), &zero) == 0.0);
  CHECK(zero == ChunkId("C"));
  double expect = 2.0 - std::log2(1.0 / 5.0);
  CHECK(sequence_nll(inv, word("ABC")) == doctest::Approx(expect));
  CHECK(sequence_nll(inv, word("ABC"), {0.25}) == doctest::Approx(4.0));
}

TEST_CASE("probability and bits are dual on random inventories") {
  Rng rng(3);
  std::vector<std::string> alpha{"A", "B", "C", "D"};
  for (int i = 0; i < 300; ++i) {
    ChunkInventory inv(kABCD);
    for (const auto& a : alpha) inv.set_count(a, 1.0 + rng.index(5));
    for (int k = 0; k < 6; ++k) {
      Chunk c;
      c.parts = oracle::atoms_of(oracle::random_sequence(rng, alpha, 2 + rng.index(3)).tokens());
      inv.add(c, 1.0 + rng.index(5));
    }
    Sequence s = oracle::random_sequence(rng, alpha, 1 + rng.index(20));
    double p = factorized_probability(inv, s);
    double bits = sequence_nll(inv, s);
    CHECK(p == doctest::Approx(std::exp2(-bits)).epsilon(1e-9));
    // Chunk-level bits sum to the sequence total.
    double sum = 0.0;
    for (const auto& sc : InventoryModel(inv).score(s)) sum += sc.bits;
    CHECK(sum == doctest::Approx(bits));
  }
}

TEST_CASE("nll counts chunk codes") {
  ChunkInventory inv = inventory(Alphabet({"A", "B"}), {{"A", 1}, {"B", 1}, {"AB", 2}});
  CHECK(sequence_nll(inv, word("ABAB")) == doctest::Approx(2.0));
  ChunkInventory uniform = inventory(kABCD, {{"A", 1}, {"B", 1}, {"C", 1}, {"D", 1}});
  Rng rng(8);
  for (std::size_t len : {1, 7, 40}) {
    Sequence s = oracle::random_sequence(rng, {"A", "B", "C", "D"}, len);
    CHECK(sequence_nll(uniform, s) == doctest::Approx(2.0 * len));
    CHECK(bits_per_symbol(uniform, s) == doctest::Approx(2.0));
  }
}

TEST_CASE("nll is additive for atom inventories") {
  ChunkInventory inv = inventory(kABCD, {{"A", 3}, {"B", 1}, {"C", 2}, {"D", 5}});
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    Sequence a = oracle::random_sequence(rng, {"A", "B", "C", "D"}, rng.index(10));
    Sequence b = oracle::random_sequence(rng, {"A", "B", "C", "D"}, rng.index(10));
    std::vector<std::string> ab = a.tokens();
    ab.insert(ab.end(), b.tokens().begin(), b.tokens().end());
    CHECK(sequence_nll(inv, Sequence(ab)) ==
          doctest::Approx(sequence_nll(inv, a) + sequence_nll(inv, b)));
  }
}

TEST_CASE("bits per symbol edge cases") {
  ChunkInventory inv = inventory(kABCD, {{"A", 1}, {"B", 3}});
  CHECK_THROWS_AS(bits_per_symbol(inv, Sequence()), ArgumentError);
  CHECK(bits_per_symbol(inv, word("B")) == doctest::Approx(sequence_nll(inv, word("B"))));
  std::vector<Sequence> u{word("ABCD"), word("DCBA")};
  CHECK(order0_entropy(u) == doctest::Approx(2.0));
  CHECK_THROWS_AS(order0_entropy(std::vector<Sequence>{}), ArgumentError);
}

TEST_CASE("recovery against the generating set") {
  GeneratorSpec truth =
      spec_with({{"A", 0.2}, {"B", 0.2}, {"C", 0.1}, {"D", 0.1}, {"AB", 0.2}, {"ABC", 0.2}});
  ChunkInventory same(kABCD);
  for (const auto& gc : truth.chunks) {
    Chunk c;
    c.parts = gc.parts;
    same.set_count(same.add(c), gc.probability);
  }
  RecoveryReport r = recovery_score(same, truth);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.probability_l1 == doctest::Approx(0.0));

  ChunkInventory atoms = inventory(kABCD, {{"A", 1}, {"B", 1}, {"C", 1}, {"D", 1}});
  RecoveryReport ra = recovery_score(atoms, truth);
  CHECK(ra.recall == 0.0);
  CHECK(ra.precision == 1.0);
  CHECK(ra.precision_by_convention);

  ChunkInventory half =
      inventory(kABCD, {{"A", 1}, {"B", 1}, {"C", 1}, {"D", 1}, {"AB", 1}, {"ABD", 1}});
  RecoveryReport rh = recovery_score(half, truth);
  CHECK(rh.precision == 0.5);
  CHECK(rh.recall == 0.5);
  CHECK(rh.f1 == doctest::Approx(0.5));
}

TEST_CASE("adding a true composite never lowers recall") {
  GeneratorSpec truth = spec_with({{"A", 0.1}, {"B", 0.1}, {"C", 0.1}, {"D", 0.1},
                                   {"AB", 0.2}, {"CD", 0.2}, {"ABCD", 0.2}});
  ChunkInventory inv = inventory(kABCD, {{"A", 1}, {"B", 1}, {"C", 1}, {"D", 1}});
  double last = recovery_score(inv, truth).recall;
  for (const char* s : {"BC", "AB", "CD", "ABCD"}) {
    Chunk c;
    c.parts = chars(s);
    inv.set_count(inv.add(c), 1.0);
    double now = recovery_score(inv, truth).recall;
    CHECK(now >= last);
    last = now;
  }
  CHECK(last == 1.0);
}

TEST_CASE("transfer comparison of two models") {
  ChunkInventory a = inventory(kABCD, {{"A", 1}, {"B", 1}, {"C", 1}, {"D", 1}});
  ChunkInventory b = inventory(kABCD, {{"A", 1}, {"B", 1}, {"C", 1}, {"D", 1}, {"AB", 4}});
  InventoryModel ma(a), mb(b);
  std::vector<Sequence> set{word("ABAB"), word("ABCD")};
  TransferReport same = transfer_compare(ma, ma, set);
  REQUIRE(same.rows.size() == 2);
  CHECK(same.mean_difference == 0.0);
  TransferReport diff = transfer_compare(ma, mb, set);
  CHECK(diff.mean_difference > 0.0);
  CHECK(diff.rows[1].index == 1);
  TransferReport none = transfer_compare(ma, mb, std::vector<Sequence>{});
  CHECK(none.rows.empty());
  CHECK(none.mean_difference == 0.0);
}
