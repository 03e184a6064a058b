#pragma once

// Reproducible ground-truth generators: hierarchical chunk composition, the
// category-bearing variant, the four-key serial-reaction-time Markov design and
// the two serial-recall motif experiments.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hchunk/random.hpp"
#include "hchunk/seqcore.hpp"

namespace hchunk {

struct GeneratorChunk {
  Parts parts;  // atoms, plus category symbols in category generators
  double probability = 0.0;
  std::optional<std::pair<ChunkId, ChunkId>> parents;
  std::uint64_t created_at = 0;

  ChunkId id() const { return chunk_key(parts); }
};

struct GeneratorCategory {
  std::string symbol;
  std::vector<ChunkId> members;
};

/// Ground truth for both generator families. A hierarchical spec simply has
/// no categories.
struct GeneratorSpec {
  Alphabet alphabet;
  std::size_t merge_steps = 0;
  std::vector<GeneratorChunk> chunks;
  std::vector<GeneratorCategory> categories;
  std::size_t category_merge_steps = 0;
  std::uint64_t seed = 0;

  const GeneratorChunk* find(const ChunkId& id) const;
  const GeneratorCategory* category(const std::string& symbol) const;
  // Checks positivity, normalization and parent ordering; throws ArgumentError.
  void validate() const;
};

using HierarchicalGeneratorSpec = GeneratorSpec;
using CategoryGeneratorSpec = GeneratorSpec;

GeneratorSpec build_hierarchical_generator(const Alphabet& alphabet,
                                           std::size_t merge_steps,
                                           std::uint64_t seed);

// `merge_steps` rounds in total: the first half are plain merges, then
// `category_count` categories are formed, and the remaining rounds may draw
// categories as components.
GeneratorSpec build_category_generator(const Alphabet& alphabet,
                                       std::size_t merge_steps,
                                       std::size_t category_count,
                                       std::uint64_t seed);

struct ChunkDraw {
  ChunkId chunk;
  std::vector<std::string> realization;
};

struct SampleResult {
  Sequence sequence;
  std::vector<ChunkDraw> draws;
  // Atoms of the final draw dropped by truncation (0 when the cut is clean).
  std::size_t truncated_atoms = 0;
};

SampleResult sample_with_log(const GeneratorSpec& spec, std::size_t atom_length,
                             std::uint64_t seed);
Sequence sample_sequence(const GeneratorSpec& spec, std::size_t atom_length,
                         std::uint64_t seed);

// All atom strings a generator chunk can produce.
std::vector<std::vector<std::string>> realizations(const GeneratorSpec& spec,
                                                   const ChunkId& id);

// --- serial reaction time -------------------------------------------------

enum class SrtCondition { kDefault, kIndependent, kSize2Chunk, kSize3Chunk };

const char* to_string(SrtCondition c);
SrtCondition srt_condition_from_string(const std::string& s);

struct MarkovSRTSpec {
  std::array<std::string, 4> keys{"A", "B", "C", "D"};
  std::array<std::array<double, 4>, 4> transition{};
  SrtCondition condition = SrtCondition::kDefault;
  std::size_t baseline_length = 200;
  std::size_t training_length = 1000;
  std::size_t test_length = 200;

  void validate() const;
};

// Row-stochastic default design: A->B and C->D at 0.9, B->C and D->A at 0.7,
// with each row's remaining mass split evenly over the other three keys.
std::array<std::array<double, 4>, 4> default_srt_matrix();
MarkovSRTSpec make_srt_spec(SrtCondition condition);

struct SrtBlocks {
  Sequence baseline;
  Sequence training;
  Sequence test;
};

SrtBlocks generate_srt_blocks(const MarkovSRTSpec& spec, std::uint64_t seed);

// First-order Markov walk over `keys` with a uniformly drawn first key.
Sequence sample_markov(const std::vector<std::string>& keys,
                       const std::vector<std::vector<double>>& transition,
                       std::size_t length, Rng& rng);

// --- serial recall motifs ---------------------------------------------------

enum class MotifExperiment { kProjectional = 1, kVariable = 2 };

struct TransferBlock {
  std::size_t length = 8;
  // Experiment 1: "motif1", "motif2" or "independent".
  // Experiment 2: "new-fixed".
  std::string relation;
};

struct MotifTrialSpec {
  MotifExperiment experiment = MotifExperiment::kProjectional;
  std::size_t trial_length = 12;
  // Experiment 1: "motif1", "motif2" or "independent".
  // Experiment 2: "motif" or "control".
  std::string group = "motif1";
  std::size_t training_trials = 40;
  std::vector<TransferBlock> transfer_blocks;

  // Experiment 1: binary arrangements (length trial_length, six ones).
  std::string motif1 = "000111000111";
  std::string motif2 = "000000111111";
  std::vector<std::string> training_palette;
  std::vector<std::string> transfer_palette;

  // Experiment 2: template with one variable position.
  std::vector<std::string> fixed_template{"B", "_", "D", "F"};
  std::size_t variable_position = 1;
  std::vector<std::string> variable_members{"A", "C", "E"};
  std::vector<std::string> transfer_fixed{"G", "H", "I"};

  void validate() const;
  Alphabet alphabet() const;
};

MotifTrialSpec make_motif_spec(MotifExperiment experiment,
                               const std::string& group);

struct MotifTrials {
  std::vector<Sequence> training;
  std::vector<std::vector<Sequence>> transfer;  // one list per block

  std::vector<Sequence> all() const;
};

MotifTrials generate_motif_trials(const MotifTrialSpec& spec,
                                  std::uint64_t seed);

// Splits `seq` into consecutive windows of at most `width` atoms; width 0
// keeps it whole. An empty sequence gives no windows.
std::vector<Sequence> split_windows(const Sequence& seq, std::size_t width);

}  // namespace hchunk
