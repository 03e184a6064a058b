#pragma once

// Projectional motifs: each trial is relabeled by first-occurrence rank so
// that trials with the same arrangement of fresh tokens coincide, and chunks
// are learned over the relabeled streams.

#include <cstddef>
#include <span>
#include <vector>

#include "hchunk/eval.hpp"
#include "hchunk/hcm.hpp"
#include "hchunk/seqcore.hpp"

namespace hchunk {

struct IdentityPattern {
  std::vector<std::size_t> codes;
  std::size_t arity = 0;

  bool operator==(const IdentityPattern&) const = default;
  // Codes as the symbols "0", "1", ...
  Sequence to_sequence() const;
  // codes[0] == 0 and each code at most one above every earlier code.
  bool canonical() const;
};

IdentityPattern project_identity_pattern(const Sequence& seq);

// Alphabet {"0", ..., "n-1"}.
Alphabet code_alphabet(std::size_t n);

// Projects every trial and runs the chunking loop over the projected
// streams. The alphabet covers the largest arity seen.
LearnResult motif_learn(std::span<const Sequence> trials, const Schedule& schedule,
                        const HcmParams& params = {},
                        const EventSink& sink = nullptr);

// Bits per projected transfer trial. Codes beyond the learned alphabet cost
// -log2(floor) each; the rest is scored by the frozen inventory.
std::vector<double> motif_transfer_nll(const ChunkInventory& inventory,
                                       std::span<const Sequence> transfer,
                                       ScoreOptions options = {});

}  // namespace hchunk
