#include <algorithm>

#include "doctest.h"
#include "hchunk/random.hpp"
#include "hchunk/utility.hpp"

using namespace hchunk;

namespace {

const std::vector<std::string> kKeys{"A", "B", "C", "D"};
const std::vector<ChunkId> kAtoms{"A", "B", "C", "D"};

KeyMatrix cycle_matrix() {
  return {{0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}, {1, 0, 0, 0}};
}

KeyMatrix uniform_matrix() { return KeyMatrix(4, std::vector<double>(4, 0.25)); }

// Best utility over every set of length-2 composites, by brute force.
double brute_force_pairs(const KeyMatrix& m, const UtilityConfig& cfg,
                         std::vector<ChunkId>* best_set) {
  std::vector<ChunkId> edges;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (m[i][j] > 0.0) edges.push_back(kKeys[i] + " " + kKeys[j]);
    }
  }
  double best = -1e300;
  for (std::size_t mask = 0; mask < (std::size_t{1} << edges.size()); ++mask) {
    std::vector<ChunkId> set = kAtoms;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (mask >> e & 1) set.push_back(edges[e]);
    }
    double u = srt_utility_breakdown(set, kKeys, m, cfg).utility;
    if (u > best + 1e-12) {
      best = u;
      *best_set = set;
    }
  }
  return best;
}

// Simulates the greedy responder on a sampled key stream.
UtilityBreakdown simulate(const ChunkPolicy& policy, const KeyMatrix& m,
                          const UtilityConfig& cfg, std::size_t chunks, Rng& rng) {
  double time = 0.0, keys = 0.0, errors = 0.0;
  std::size_t cur = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    const auto& w = policy[cur];
    time += cfg.t_boundary;
    keys += 1.0;
    std::size_t next = 0;
    for (std::size_t i = 0;; ++i) {
      next = rng.categorical(m[cur]);
      if (i + 1 == w.size()) break;
      time += cfg.t_within;
      if (next != w[i + 1]) {
        errors += 1.0;
        break;
      }
      keys += 1.0;
      cur = next;
    }
    cur = next;
  }
  UtilityBreakdown out;
  out.time_per_key = time / keys;
  out.errors_per_key = errors / keys;
  out.utility = -out.time_per_key - cfg.lambda * out.errors_per_key;
  return out;
}

}  // namespace

TEST_CASE("atoms alone cost one boundary time per key") {
  UtilityConfig cfg{1.3, 0.4, 7.0};
  MarkovSRTSpec spec = make_srt_spec(SrtCondition::kDefault);
  CHECK(srt_utility(kAtoms, spec, cfg) == doctest::Approx(-1.3));
  CHECK(srt_utility(kAtoms, make_srt_spec(SrtCondition::kIndependent), cfg) ==
        doctest::Approx(-1.3));
}

TEST_CASE("the closed form matches a simulated responder") {
  MarkovSRTSpec spec = make_srt_spec(SrtCondition::kDefault);
  KeyMatrix m = to_matrix(spec);
  UtilityConfig cfg{1.0, 0.5, 2.0};
  Rng rng(21);
  for (const auto& set : std::vector<std::vector<ChunkId>>{
           {"A", "B", "C", "D", "A B"},
           {"A", "B", "C", "D", "A B C", "C D"},
           {"A", "B", "C", "D", "A B C D", "B C", "D A B"}}) {
    ChunkPolicy policy = greedy_policy(set, kKeys);
    UtilityBreakdown exact = policy_utility(policy, m, cfg);
    UtilityBreakdown sim = simulate(policy, m, cfg, 200000, rng);
    CHECK(sim.time_per_key == doctest::Approx(exact.time_per_key).epsilon(0.01));
    CHECK(sim.errors_per_key == doctest::Approx(exact.errors_per_key).epsilon(0.03));
  }
}

TEST_CASE("greedy policy picks the longest chunk per key") {
  ChunkPolicy p = greedy_policy({"A", "B", "C", "D", "A B", "A B C", "A C"}, kKeys);
  CHECK(p[0] == std::vector<std::size_t>{0, 1, 2});
  CHECK(p[1] == std::vector<std::size_t>{1});
  CHECK_THROWS_AS(greedy_policy({"A", "B", "C"}, kKeys), ArgumentError);
  CHECK_THROWS_AS(greedy_policy({"A", "B", "C", "D", "A Z"}, kKeys), AlphabetMismatch);
}

TEST_CASE("optimizer agrees with brute force over pair sets") {
  KeyMatrix m = to_matrix(make_srt_spec(SrtCondition::kDefault));
  for (double lambda : {0.0, 0.1, 1.0, 10.0}) {
    UtilityConfig cfg{1.0, 0.5, lambda};
    std::vector<ChunkId> brute;
    double best = brute_force_pairs(m, cfg, &brute);
    OptimizeResult r = optimize_chunk_set(kKeys, m, cfg, 2);
    CHECK(r.utility == doctest::Approx(best));
  }
  OptimizeResult zero = optimize_chunk_set(kKeys, m, {1.0, 0.5, 0.0}, 2);
  auto comp = zero.composites();
  CHECK(std::count(comp.begin(), comp.end(), "A B") == 1);
  CHECK(std::count(comp.begin(), comp.end(), "C D") == 1);
}

TEST_CASE("a heavy error penalty leaves only atoms") {
  OptimizeResult r =
      optimize_chunk_set(make_srt_spec(SrtCondition::kDefault), {1.0, 0.5, 50.0}, 3);
  CHECK(r.composites().empty());
  CHECK(r.utility == doctest::Approx(-1.0));
  CHECK(r.mean_chunk_length() == 1.0);
}

TEST_CASE("a deterministic cycle is chunked whole") {
  OptimizeResult r = optimize_chunk_set(kKeys, cycle_matrix(), {1.0, 0.5, 1.0}, 4);
  auto comp = r.composites();
  CHECK(std::count(comp.begin(), comp.end(), "A B C D") == 1);
  CHECK(r.utility == doctest::Approx(-(1.0 + 3 * 0.5) / 4.0));
}

TEST_CASE("uniform transitions reward no anticipation") {
  for (double lambda : {0.0, 1.0}) {
    OptimizeResult r = optimize_chunk_set(kKeys, uniform_matrix(), {1.0, 0.5, lambda}, 3);
    CHECK(r.composites().empty());
  }
}

TEST_CASE("scaling every cost scales utility and keeps the optimum") {
  MarkovSRTSpec spec = make_srt_spec(SrtCondition::kDefault);
  for (double lambda : {0.0, 0.3, 3.0}) {
    OptimizeResult a = optimize_chunk_set(spec, {1.0, 0.5, lambda}, 3);
    OptimizeResult b = optimize_chunk_set(spec, {2.5, 1.25, 2.5 * lambda}, 3);
    CHECK(b.utility == doctest::Approx(2.5 * a.utility));
    CHECK(a.chunk_set == b.chunk_set);
  }
}

TEST_CASE("invalid inputs are rejected") {
  KeyMatrix split{{0.5, 0.5, 0, 0}, {0.5, 0.5, 0, 0}, {0, 0, 0.5, 0.5}, {0, 0, 0.5, 0.5}};
  CHECK_THROWS_AS(stationary_distribution(split), UndefinedDistribution);
  CHECK_THROWS_AS(optimize_chunk_set(kKeys, split, {}, 2), UndefinedDistribution);
  CHECK_THROWS_AS(optimize_chunk_set(kKeys, cycle_matrix(), {}, 5), ArgumentError);
  CHECK_THROWS_AS(UtilityConfig({0.5, 1.0, 0.0}).validate(), ArgumentError);
  CHECK_THROWS_AS(UtilityConfig({1.0, 0.5, -1.0}).validate(), ArgumentError);
  auto pi = stationary_distribution(cycle_matrix());
  for (double p : pi) CHECK(p == doctest::Approx(0.25));
}
