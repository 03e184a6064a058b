#pragma once

// Core value types shared by every learner: alphabets, token sequences,
// chunks (flat strings over atoms and variable symbols), the chunk inventory
// with its occurrence weights, consecutive-pair statistics and parses.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hchunk {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class AlphabetMismatch : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class UndefinedDistribution : public Error {
 public:
  using Error::Error;
};

// Raised when input data (files, tokens) cannot be interpreted.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t position)
      : DataError(what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Ordered set of distinct atomic symbols. The construction order defines the
/// canonical symbol indices.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> symbols);

  std::size_t size() const { return symbols_.size(); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  bool contains(const std::string& symbol) const {
    return index_.count(symbol) != 0;
  }
  std::optional<std::size_t> index_of(const std::string& symbol) const;

  bool operator==(const Alphabet& other) const {
    return symbols_ == other.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Immutable stream of atomic tokens.
class Sequence {
 public:
  Sequence() = default;
  explicit Sequence(std::vector<std::string> tokens)
      : tokens_(std::move(tokens)) {}

  // Validates every token against `alphabet`; throws ParseError otherwise.
  static Sequence bound(std::vector<std::string> tokens,
                        const Alphabet& alphabet);

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }

  bool operator==(const Sequence&) const = default;

 private:
  std::vector<std::string> tokens_;
};

// Index of the first token not in `alphabet`, or nullopt when all are valid.
std::optional<std::size_t> validate_sequence(const Sequence& seq,
                                             const Alphabet& alphabet);

// Throws ParseError with the offending position.
void require_valid(const Sequence& seq, const Alphabet& alphabet);

/// One position of a chunk: either an atom or a variable symbol.
struct Element {
  enum class Kind : std::uint8_t { kAtom, kVariable };

  Kind kind = Kind::kAtom;
  std::string symbol;

  static Element atom(std::string s) { return {Kind::kAtom, std::move(s)}; }
  static Element variable(std::string s) {
    return {Kind::kVariable, std::move(s)};
  }
  bool is_variable() const { return kind == Kind::kVariable; }

  auto operator<=>(const Element&) const = default;
};

using Parts = std::vector<Element>;

// Content-based chunk identity: element symbols joined by single spaces.
// Atoms never contain whitespace and variable symbols never collide with
// atoms, so the key is unambiguous within one inventory.
using ChunkId = std::string;

ChunkId chunk_key(std::span<const Element> parts);
Parts atom_parts(std::span<const std::string> tokens);

struct Chunk {
  Parts parts;
  // Number of atoms when concrete; minimum atomic span otherwise.
  std::size_t atomic_length = 0;
  std::uint64_t created_at = 0;
  std::optional<std::pair<ChunkId, ChunkId>> parents;

  ChunkId id() const { return chunk_key(parts); }
  bool is_atom() const { return parts.size() == 1 && !parts[0].is_variable(); }
  bool has_variables() const;
  std::size_t variable_slots() const;
};

Chunk make_atom_chunk(const std::string& symbol);

// Parts-level concatenation; atomic lengths add.
Chunk concat(const Chunk& left, const Chunk& right);

/// An invented symbol standing for a set of interchangeable chunks.
struct ContextEvidence {
  ChunkId left;
  ChunkId right;
  std::map<ChunkId, double> member_counts;

  bool operator==(const ContextEvidence&) const = default;
};

struct Variable {
  std::string symbol;
  std::vector<ChunkId> entailment;  // sorted, pairwise distinct, size >= 2
  std::vector<ContextEvidence> evidence;
  // Realizations tallied from parses, per member.
  std::map<ChunkId, double> usage;
  std::uint64_t created_at = 0;

  double total_evidence() const;
  // Evidence mass per member, summed over contexts.
  std::map<ChunkId, double> member_weights() const;
  // P(member | variable): usage shares when any usage is recorded, else
  // evidence shares, else uniform.
  double member_probability(const ChunkId& member) const;
  bool entails(const ChunkId& id) const;

  bool operator==(const Variable&) const = default;
};

/// The learned dictionary: chunks keyed by content with real-valued
/// occurrence weights. Every alphabet symbol is always present as an atom.
class ChunkInventory {
 public:
  struct Entry {
    Chunk chunk;
    double count = 0.0;
  };

  ChunkInventory() = default;
  explicit ChunkInventory(Alphabet alphabet);

  const Alphabet& alphabet() const { return alphabet_; }

  bool contains(const ChunkId& id) const { return entries_.count(id) != 0; }
  const Chunk& chunk(const ChunkId& id) const;
  double count(const ChunkId& id) const;
  double total() const { return total_; }
  std::size_t size() const { return entries_.size(); }
  const std::map<ChunkId, Entry>& entries() const { return entries_; }
  std::vector<ChunkId> ids() const;

  // Adds `chunk` (recomputing its atomic length) unless an identical chunk
  // exists; returns its id either way.
  ChunkId add(Chunk chunk, double count = 0.0);
  void set_count(const ChunkId& id, double count);
  void add_count(const ChunkId& id, double delta);
  // Atoms and variable-symbol chunks cannot be removed.
  void remove(const ChunkId& id);
  void scale(double factor);
  bool is_protected(const ChunkId& id) const;

  // Variables: registering one also adds its single-element chunk.
  const std::map<std::string, Variable>& variables() const {
    return variables_;
  }
  const Variable* variable(const std::string& symbol) const;
  bool is_variable_symbol(const std::string& symbol) const {
    return variables_.count(symbol) != 0;
  }
  ChunkId add_variable(Variable variable);
  // Next unused symbol of the form V1, V2, ... never colliding with atoms.
  std::string fresh_variable_symbol() const;
  // Replaces the usage tallies of the named variables; others are cleared.
  void set_variable_usage(
      const std::map<std::string, std::map<ChunkId, double>>& usage);

  std::size_t atomic_length_of(std::span<const Element> parts) const;
  std::size_t max_atomic_length() const;
  std::size_t max_element_length() const;

 private:
  void recount_total();

  Alphabet alphabet_;
  std::map<ChunkId, Entry> entries_;
  std::map<std::string, Variable> variables_;
  double total_ = 0.0;
};

// Concatenation of chunks held by two inventories; the inventories must share
// an alphabet.
Chunk concat(const ChunkInventory& left_inventory, const ChunkId& left,
             const ChunkInventory& right_inventory, const ChunkId& right);

double chunk_probability(const ChunkInventory& inventory, const ChunkId& id);

/// Ordered-pair weights between consecutively parsed chunks.
class TransitionTable {
 public:
  using Key = std::pair<ChunkId, ChunkId>;

  double get(const ChunkId& left, const ChunkId& right) const;
  void add(const ChunkId& left, const ChunkId& right, double weight = 1.0);
  void reset(const ChunkId& left, const ChunkId& right);
  void erase_chunk(const ChunkId& id);
  void scale(double factor);

  double total() const { return total_; }
  double recount() const;
  bool empty() const { return pairs_.empty(); }
  const std::map<Key, double>& pairs() const { return pairs_; }

 private:
  std::map<Key, double> pairs_;
  double total_ = 0.0;
};

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Span&) const = default;
};

struct ParseResult {
  std::vector<ChunkId> chunk_ids;
  std::vector<Span> spans;

  std::size_t size() const { return chunk_ids.size(); }
  bool empty() const { return chunk_ids.empty(); }
};

// True when `realization` (atoms) is a realization of `parts` under the
// inventory's variables.
bool realizes(const ChunkInventory& inventory, std::span<const Element> parts,
              std::span<const std::string> realization);

// Checks span contiguity/coverage and that each chunk realizes its span.
bool is_lossless(const ParseResult& parse, const Sequence& seq,
                 const ChunkInventory& inventory);

// Atoms of a fully concrete chunk; throws ArgumentError for abstract chunks.
std::vector<std::string> expand_concrete(const Chunk& chunk);

}  // namespace hchunk
