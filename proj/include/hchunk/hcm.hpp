#pragma once

// Hierarchical chunking: greedy longest-match parsing against the learned
// inventory, consecutive-pair statistics, merges driven by an exact binomial
// independence test, multiplicative forgetting with pruning, and the graph of
// merge history.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hchunk/seqcore.hpp"
#include "json.hpp"

namespace hchunk {

enum class InitialCount { kObserved, kZero, kOne };

struct HcmParams {
  double decay = 0.999;         // per-parse forgetting factor, (0, 1]
  double alpha = 0.05;          // merge-test significance level, (0, 1)
  double prune_epsilon = 0.1;   // composites below this count are dropped
  double min_evidence = 3.0;    // minimum observed adjacency for a merge
  bool reset_pairs_after_merge = true;
  bool prune = true;
  InitialCount initial_count = InitialCount::kObserved;

  void validate() const;
};

struct Schedule {
  std::size_t parses_per_round = 10;
  std::size_t max_new_chunks_per_round = 1;
};

struct LearnerState {
  LearnerState() = default;
  explicit LearnerState(Alphabet alphabet, HcmParams params = {});

  ChunkInventory inventory;
  TransitionTable transitions;
  HcmParams params;
  std::uint64_t step_index = 0;
};

struct MergeProposal {
  ChunkId left;
  ChunkId right;
  double observed_adjacency = 0.0;
  double expected_adjacency = 0.0;
  double p_value = 1.0;
};

struct TestVerdict {
  double p_value = 1.0;
  double expected = 0.0;
  bool accepted = false;
};

// P(X >= k) for X ~ Binomial(n, p), summed term by term from the nearer tail.
double binomial_upper_tail(std::uint64_t n, double p, std::uint64_t k);

// One-sided test that `right` follows `left` more often than its base rate
// n_right / total. Requires n_lr <= n_left <= total, n_right <= total, total > 0.
TestVerdict independence_test(std::uint64_t n_lr, std::uint64_t n_left,
                              std::uint64_t n_right, std::uint64_t total,
                              double alpha = 0.05, double min_evidence = 3.0);

class RepresentationGraph {
 public:
  struct Node {
    Parts parts;
    std::uint64_t created_at = 0;
  };
  struct Edge {
    ChunkId parent;
    ChunkId child;
    bool operator==(const Edge&) const = default;
  };

  void add_node(const ChunkId& id, const Parts& parts, std::uint64_t created_at);
  void add_edge(const ChunkId& parent, const ChunkId& child);
  bool has_node(const ChunkId& id) const { return nodes_.count(id) != 0; }

  const std::map<ChunkId, Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  // Nodes for every chunk, edges from recorded parents still present.
  static RepresentationGraph from_inventory(const ChunkInventory& inventory);

 private:
  std::map<ChunkId, Node> nodes_;
  std::vector<Edge> edges_;
};

// Deterministic DOT digraph; node labels carry parts and creation step.
std::string export_graph(const RepresentationGraph& graph);

using EventSink = std::function<void(const nlohmann::json&)>;

// Longest-match index over the inventory, keyed by first element.
class ParseIndex {
 public:
  explicit ParseIndex(const ChunkInventory& inventory);

  // Longest chunk whose parts equal stream[pos, pos + len); exact element
  // equality, so variable elements only match identical variable elements.
  const ChunkId* longest_match(std::span<const Element> stream,
                               std::size_t pos, std::size_t* length) const;

 private:
  struct Candidate {
    Parts parts;
    ChunkId id;
  };
  std::map<Element, std::vector<Candidate>> by_first_;
};

ParseResult greedy_parse(const ChunkInventory& inventory,
                         std::span<const Element> stream);
ParseResult greedy_parse(const ParseIndex& index,
                         std::span<const Element> stream);
// Validates `seq` against the state's alphabet, then parses atom by atom.
ParseResult greedy_parse(const LearnerState& state, const Sequence& seq);

void update_statistics(LearnerState& state, const ParseResult& parse);

// Multiplies every count by `factor` and prunes composites that fall below
// prune_epsilon. Returns the pruned ids.
std::vector<ChunkId> apply_forgetting(LearnerState& state, double factor);

// Significant, not-yet-existing composites ordered by ascending p-value,
// descending adjacency, then by parts.
std::vector<MergeProposal> propose_merges(const LearnerState& state);

// Rounded integer view of the state's counts used by the merge test.
TestVerdict test_pair(const LearnerState& state, const ChunkId& left,
                      const ChunkId& right);

// Adds the composite left+right. Returns its id.
ChunkId apply_merge(LearnerState& state, RepresentationGraph& graph,
                    const MergeProposal& proposal);

struct LearnResult {
  LearnerState state;
  RepresentationGraph graph;
  std::size_t merges = 0;
};

// The parse, associate, forget, merge loop over a stream of element strings.
// Returns the number of merges made.
std::size_t learn_streams(LearnerState& state, RepresentationGraph& graph,
                          std::span<const Parts> streams,
                          const Schedule& schedule,
                          const EventSink& sink = nullptr);

LearnResult learn(LearnerState state, std::span<const Sequence> sequences,
                  const Schedule& schedule, const EventSink& sink = nullptr);

// Replaces counts and pair statistics with tallies from one greedy parse of
// `streams` under the current inventory; with pruning on, composites the
// parse never uses are dropped. Returns the dropped ids.
std::vector<ChunkId> refit_counts(LearnerState& state,
                                  std::span<const Parts> streams);
std::vector<ChunkId> refit_counts(LearnerState& state,
                                  std::span<const Sequence> sequences);

struct BatchOptions {
  std::size_t max_iterations = 500;
  std::size_t merges_per_iteration = 1;
};

// Whole-corpus variant: every iteration re-parses all streams with the
// current inventory, replaces counts and pair statistics with the fresh
// tallies, and merges the most significant pairs. Stops when no pair passes
// the test. Decay is not applied; with pruning on, composites unused by the
// final parse are dropped.
std::size_t learn_batch_streams(LearnerState& state, RepresentationGraph& graph,
                                std::span<const Parts> streams,
                                const BatchOptions& options,
                                const EventSink& sink = nullptr);

LearnResult learn_batch(LearnerState state, std::span<const Sequence> sequences,
                        const BatchOptions& options,
                        const EventSink& sink = nullptr);

}  // namespace hchunk
