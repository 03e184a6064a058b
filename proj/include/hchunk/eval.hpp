#pragma once

// Scoring of learned inventories: factorized chunk probability of a sequence,
// its negative log-likelihood in bits, ground-truth recovery and transfer
// comparisons between models.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hchunk/generators.hpp"
#include "hchunk/hcm.hpp"
#include "hchunk/hvm.hpp"
#include "hchunk/seqcore.hpp"
#include "hchunk/trie.hpp"

namespace hchunk {

/// Anything that can assign a code length to a sequence. External per-token
/// scorers (for instance a neural language model) plug in here.
class NllSource {
 public:
  virtual ~NllSource() = default;
  virtual double sequence_bits(const Sequence& seq) const = 0;
};

struct ScoreOptions {
  // Probability used for chunks with no mass; <= 0 selects
  // 1 / (alphabet size + 1).
  double floor = 0.0;
};

struct ProbabilityResult {
  double probability = 1.0;
  std::optional<ChunkId> zero_chunk;  // first chunk with zero mass
};

struct ScoredChunk {
  ChunkId chunk;
  Span span;
  double bits = 0.0;
  bool floored = false;
};

/// Frozen inventory scorer. Inventories with variables are parsed through
/// the trie with variable slots; plain ones through greedy longest match.
/// A parsed chunk entailed by a variable is coded as that variable plus the
/// member choice; every variable slot adds the cost of its member.
class InventoryModel : public NllSource {
 public:
  explicit InventoryModel(const ChunkInventory& inventory,
                          ScoreOptions options = {});

  ParseResult parse(const Sequence& seq) const;
  std::vector<ScoredChunk> score(const Sequence& seq) const;
  double sequence_bits(const Sequence& seq) const override;
  ProbabilityResult probability(const Sequence& seq) const;

  const ChunkInventory& inventory() const { return inventory_; }
  double floor() const { return floor_; }

 private:
  // Probability of chunk `id` realizing `atoms`. Zero-mass factors become
  // the floor when `use_floor` is set and `floored` is raised.
  double realization_probability(const ChunkId& id,
                                 std::span<const std::string> atoms,
                                 bool via_variable, bool use_floor,
                                 bool& floored) const;
  double factor(double p, bool use_floor, bool& floored) const;
  std::vector<ScoredChunk> score_impl(const Sequence& seq, bool use_floor) const;

  const ChunkInventory& inventory_;
  ChunkTrie trie_;
  ParseIndex index_;
  bool variable_aware_;
  double floor_;
};

double factorized_probability(const ChunkInventory& inventory,
                              const Sequence& seq,
                              std::optional<ChunkId>* zero_chunk = nullptr);
double sequence_nll(const ChunkInventory& inventory, const Sequence& seq,
                    ScoreOptions options = {});
double bits_per_symbol(const ChunkInventory& inventory, const Sequence& seq,
                       ScoreOptions options = {});
double bits_per_symbol(const NllSource& model, const Sequence& seq);

// Entropy in bits of the unigram atom distribution of `seqs`.
double order0_entropy(std::span<const Sequence> seqs);

struct RecoveryReport {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
  double probability_l1 = 0.0;
  std::size_t truth_composites = 0;
  std::size_t learned_composites = 0;
  std::size_t matched = 0;
  bool precision_by_convention = false;  // no learned composites
};

RecoveryReport recovery_score(const ChunkInventory& learned,
                              const GeneratorSpec& spec);

struct TransferRow {
  std::size_t index = 0;
  double bits_a = 0.0;
  double bits_b = 0.0;
};

struct TransferReport {
  std::vector<TransferRow> rows;
  double mean_difference = 0.0;  // mean(bits_a - bits_b); > 0 favours B
};

// An empty transfer set gives an empty table with mean_difference 0.
TransferReport transfer_compare(const NllSource& a, const NllSource& b,
                                std::span<const Sequence> transfer);

}  // namespace hchunk
