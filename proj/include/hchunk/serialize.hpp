#pragma once

// File formats: the sequence text format (one sequence per line, tokens
// separated by single spaces), inventory and learner-state JSON, and the
// generator spec sidecar.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hchunk/generators.hpp"
#include "hchunk/hcm.hpp"
#include "hchunk/hvm.hpp"
#include "hchunk/seqcore.hpp"
#include "json.hpp"

namespace hchunk {

using nlohmann::json;

// --- sequences --------------------------------------------------------------

std::string format_sequence(const Sequence& seq);
// Throws ParseError (position = byte offset in the line) on empty tokens,
// which is how doubled, leading or trailing separators show up.
Sequence parse_sequence_line(const std::string& line);

void write_sequences(std::ostream& out, std::span<const Sequence> seqs);
std::vector<Sequence> read_sequences(std::istream& in);

// File variants wrap I/O failures in DataError naming the path.
void write_sequences(const std::filesystem::path& path,
                     std::span<const Sequence> seqs);
std::vector<Sequence> read_sequences(const std::filesystem::path& path);

// --- inventories and states -------------------------------------------------

json parts_to_json(const Parts& parts);
Parts parts_from_json(const json& j);

// {alphabet, chunks, variables}; chunks are listed in id order.
json inventory_to_json(const ChunkInventory& inventory);
ChunkInventory inventory_from_json(const json& j);

json transitions_to_json(const TransitionTable& table);
TransitionTable transitions_from_json(const json& j);

json params_to_json(const HcmParams& params);
HcmParams params_from_json(const json& j);

json graph_to_json(const RepresentationGraph& graph);
RepresentationGraph graph_from_json(const json& j);

/// What a state file holds. HCM states have no layers.
struct StoredState {
  std::string type = "hcm";  // "hcm", "hvm" or "motif"
  LearnerState learner;
  RepresentationGraph graph;
  std::vector<LayerRecord> layers;
  json meta = json::object();
};

// Inventory fields at top level plus transitions, params, stepIndex, graph,
// type, layers (hvm only) and meta.
json state_to_json(const StoredState& state);
StoredState state_from_json(const json& j);

StoredState stored_state(const LearnerState& learner,
                         const RepresentationGraph& graph,
                         std::string type = "hcm");
StoredState stored_state(const HvmState& state);
HvmState to_hvm_state(const StoredState& state);

// --- generator specs --------------------------------------------------------

json generator_spec_to_json(const GeneratorSpec& spec);
GeneratorSpec generator_spec_from_json(const json& j);

// --- JSON files -------------------------------------------------------------

// Two-space indent and a trailing newline, so equal values give equal bytes.
void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

}  // namespace hchunk
