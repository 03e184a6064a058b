#pragma once

// Speed-accuracy utility of a chunk set on a Markov key sequence, and the
// exhaustive search for the best set.
//
// The responder chunks greedily: at a chunk-initial key it commits to the
// longest chunk in the set starting with that key and anticipates the rest.
// A chunk-initial response costs t_boundary and each anticipated response
// t_within. A wrong anticipation counts as one error; the unexpected key then
// starts a new chunk. Expectations come from the stationary distribution of
// the chain over chunk-initial keys.

#include <string>
#include <vector>

#include "hchunk/generators.hpp"

namespace hchunk {

struct UtilityConfig {
  double t_boundary = 1.0;
  double t_within = 0.5;
  double lambda = 0.0;

  void validate() const;
};

using KeyMatrix = std::vector<std::vector<double>>;

KeyMatrix to_matrix(const MarkovSRTSpec& spec);
std::vector<std::string> key_list(const MarkovSRTSpec& spec);

// Throws UndefinedDistribution when the matrix is not irreducible.
std::vector<double> stationary_distribution(const KeyMatrix& matrix);

struct UtilityBreakdown {
  double utility = 0.0;
  double time_per_key = 0.0;
  double errors_per_key = 0.0;
};

// One walk of key indices per start key; walk[k][0] == k.
using ChunkPolicy = std::vector<std::vector<std::size_t>>;

UtilityBreakdown policy_utility(const ChunkPolicy& policy,
                                const KeyMatrix& matrix,
                                const UtilityConfig& cfg);

// Greedy policy of a chunk set: per key, the longest chunk starting with it,
// lexicographically smallest among equals.
ChunkPolicy greedy_policy(const std::vector<ChunkId>& chunk_set,
                          const std::vector<std::string>& keys);

// `chunk_set` holds space-joined key chunks and must contain every atom.
double srt_utility(const std::vector<ChunkId>& chunk_set,
                   const MarkovSRTSpec& matrix, const UtilityConfig& cfg);
UtilityBreakdown srt_utility_breakdown(const std::vector<ChunkId>& chunk_set,
                                       const std::vector<std::string>& keys,
                                       const KeyMatrix& matrix,
                                       const UtilityConfig& cfg);

struct OptimizeResult {
  std::vector<ChunkId> chunk_set;  // sorted; atoms included
  double utility = 0.0;
  std::size_t evaluated = 0;

  std::vector<ChunkId> composites() const;
  // Mean atom length of the chunk used at each start key.
  double mean_chunk_length() const;
};

// Exhaustive over one optional composite per start key, each a walk with
// positive-probability edges of length 2..max_chunk_len (<= 4). Sets holding
// a chunk the greedy responder never uses are dominated by the smaller set,
// so this covers every chunk set. Ties go to fewer chunks, then to the
// lexicographically smaller sorted set.
OptimizeResult optimize_chunk_set(const MarkovSRTSpec& matrix,
                                  const UtilityConfig& cfg,
                                  std::size_t max_chunk_len);
OptimizeResult optimize_chunk_set(const std::vector<std::string>& keys,
                                  const KeyMatrix& matrix,
                                  const UtilityConfig& cfg,
                                  std::size_t max_chunk_len);

}  // namespace hchunk
