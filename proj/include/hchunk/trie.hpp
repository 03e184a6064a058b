#pragma once

// Prefix-tree chunk memory. Each node's path is the common prefix of all its
// descendants, so a lookup walks at most max-chunk-length edges.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hchunk/seqcore.hpp"

namespace hchunk {

class ChunkTrie {
 public:
  struct Node {
    std::optional<Element> element;  // empty at the root
    std::map<Element, std::size_t> children;
    std::optional<ChunkId> terminal;
    std::size_t depth = 0;
  };

  ChunkTrie();
  static ChunkTrie build(const ChunkInventory& inventory);

  // Idempotent: re-inserting an existing chunk leaves the trie unchanged.
  void insert(std::span<const Element> parts, const ChunkId& id);
  void insert(const Chunk& chunk) { insert(chunk.parts, chunk.id()); }

  std::optional<std::size_t> find(std::span<const Element> parts) const;
  const Node& node(std::size_t index) const { return nodes_[index]; }
  const Node& root() const { return nodes_[0]; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t terminal_count() const;
  std::size_t depth() const;
  // Element path from the root to `index`.
  Parts path(std::size_t index) const;

 private:
  std::vector<Node> nodes_;
  std::vector<std::size_t> parent_;
};

struct TrieMatch {
  ChunkId chunk;
  std::size_t matched_length = 0;  // elements for exact matches, atoms otherwise
  std::size_t search_steps = 0;
};

// Exact element matching against a symbol stream. nullopt when no terminal is
// reachable from `pos`.
std::optional<TrieMatch> trie_longest_match(const ChunkTrie& trie,
                                            std::span<const Element> stream,
                                            std::size_t pos);

// Every end offset e such that `parts` realizes atoms[pos, e).
std::vector<std::size_t> realization_ends(const ChunkInventory& inventory,
                                          std::span<const Element> parts,
                                          std::span<const std::string> atoms,
                                          std::size_t pos);

// Longest match over atoms where a variable edge matches any realization of
// an entailed chunk. Equal atomic lengths prefer fewer variable slots, then
// the higher count, then the lexicographically smaller parts.
std::optional<TrieMatch> trie_longest_match_atoms(
    const ChunkTrie& trie, const ChunkInventory& inventory,
    std::span<const std::string> atoms, std::size_t pos);

// Ordering used by the tie rules; true when (a) beats (b) at equal length.
bool preferred_at_equal_length(const ChunkInventory& inventory,
                               const ChunkId& a, const ChunkId& b);

}  // namespace hchunk
