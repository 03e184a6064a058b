#pragma once

// Hierarchical variable learning: variables proposed from chunks that share
// left and right contexts, symbolic re-encoding of parses, variable-aware
// parsing through the chunk trie, and the layered learning loop.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hchunk/hcm.hpp"
#include "hchunk/seqcore.hpp"
#include "hchunk/trie.hpp"

namespace hchunk {

struct SymbolStream {
  Parts elements;
  std::size_t layer = 0;
};

enum class VariableTest {
  kThreshold,     // both context counts >= theta
  kSignificance,  // additionally both adjacencies pass the merge test
};

struct VariableOptions {
  double theta = 2.0;
  bool one_sided = false;       // left context only
  bool equal_length = false;    // members must share atomic length
  VariableTest test = VariableTest::kThreshold;
  double alpha = 0.05;          // used by kSignificance
};

// Candidates ranked by total supporting evidence (descending), then by
// entailment. Identical entailment sets found in several contexts are merged
// into one candidate carrying every context. Symbols are left empty.
std::vector<Variable> propose_variables(const ChunkInventory& inventory,
                                        const TransitionTable& pairs,
                                        const VariableOptions& options);
std::vector<Variable> propose_variables(const LearnerState& state,
                                        const VariableOptions& options);

// The variable a chunk is re-encoded as: most total evidence, then earliest
// creation, then symbol order. nullptr when the chunk is in no entailment.
const Variable* resolve_variable(const ChunkInventory& inventory,
                                 const ChunkId& id);

// Parsed chunks that are entailed by a variable become that variable's
// symbol; others contribute their own parts.
SymbolStream reencode(const ParseResult& parse, const ChunkInventory& inventory,
                      std::size_t layer = 0);

ParseResult parse_with_variables(const ChunkTrie& trie,
                                 const ChunkInventory& inventory,
                                 const Sequence& seq);
ParseResult parse_with_variables(const ChunkInventory& inventory,
                                 const Sequence& seq);

struct SlotFill {
  ChunkId member;
  Span span;  // offsets into the realized atoms
};

// Entailed member chosen for each variable slot of `parts` when realizing
// `atoms` exactly; members are tried longest-first, then in id order.
std::vector<SlotFill> resolve_slots(const ChunkInventory& inventory,
                                    std::span<const Element> parts,
                                    std::span<const std::string> atoms);

struct HvmConfig {
  VariableOptions variables;
  std::size_t layers_max = 3;
  Schedule schedule{1, 1};
  HcmParams hcm;
};

struct LayerRecord {
  std::size_t layer = 0;
  std::vector<std::string> variables;
  std::size_t merges = 0;
};

struct HvmState {
  LearnerState learner;
  RepresentationGraph graph;
  std::vector<LayerRecord> layers;

  const ChunkInventory& inventory() const { return learner.inventory; }
  ChunkTrie trie() const { return ChunkTrie::build(learner.inventory); }
};

// Replaces chunk counts and pair statistics with tallies from a
// variable-aware parse of `sequences`. A parsed chunk that a variable entails
// is tallied under that variable, as in re-encoding. Nothing is removed.
void hvm_refit_counts(HvmState& state, std::span<const Sequence> sequences);

HvmState hvm_learn(const Alphabet& alphabet, std::span<const Sequence> sequences,
                   const HvmConfig& config, const EventSink& sink = nullptr);

}  // namespace hchunk
