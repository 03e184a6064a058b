#include "hchunk/trie.hpp"

#include <algorithm>

namespace hchunk {

ChunkTrie::ChunkTrie() : nodes_(1), parent_(1, 0) {}

ChunkTrie ChunkTrie::build(const ChunkInventory& inventory) {
  ChunkTrie trie;
  for (const auto& [id, e] : inventory.entries()) trie.insert(e.chunk.parts, id);
  return trie;
}

void ChunkTrie::insert(std::span<const Element> parts, const ChunkId& id) {
  if (parts.empty()) throw ArgumentError("cannot insert an empty chunk");
  std::size_t at = 0;
  for (const Element& e : parts) {
    auto it = nodes_[at].children.find(e);
    if (it != nodes_[at].children.end()) {
      at = it->second;
      continue;
    }
    Node child;
    child.element = e;
    child.depth = nodes_[at].depth + 1;
    nodes_.push_back(std::move(child));
    parent_.push_back(at);
    std::size_t index = nodes_.size() - 1;
    nodes_[at].children.emplace(e, index);
    at = index;
  }
  nodes_[at].terminal = id;
}

std::optional<std::size_t> ChunkTrie::find(std::span<const Element> parts) const {
  std::size_t at = 0;
  for (const Element& e : parts) {
    auto it = nodes_[at].children.find(e);
    if (it == nodes_[at].children.end()) return std::nullopt;
    at = it->second;
  }
  return at;
}

std::size_t ChunkTrie::terminal_count() const {
  return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(), [](const Node& n) { return n.terminal.has_value(); }));
}

std::size_t ChunkTrie::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

Parts ChunkTrie::path(std::size_t index) const {
  Parts out;
  while (index != 0) {
    out.push_back(*nodes_[index].element);
    index = parent_[index];
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::optional<TrieMatch> trie_longest_match(const ChunkTrie& trie,
                                            std::span<const Element> stream,
                                            std::size_t pos) {
  if (pos >= stream.size()) throw ArgumentError("match position out of range");
  std::optional<TrieMatch> best;
  std::size_t at = 0;
  std::size_t steps = 0;
  for (std::size_t i = pos; i < stream.size(); ++i) {
    const auto& children = trie.node(at).children;
    auto it = children.find(stream[i]);
    if (it == children.end()) break;
    at = it->second;
    ++steps;
    if (trie.node(at).terminal) {
      best = TrieMatch{*trie.node(at).terminal, steps, 0};
    }
  }
  if (best) best->search_steps = steps;
  return best;
}

namespace {

void ends_from(const ChunkInventory& inv, std::span<const Element> parts,
               std::span<const std::string> atoms, std::size_t pos,
               std::vector<std::size_t>& out, int depth) {
  if (depth > 64) return;
  if (parts.empty()) {
    out.push_back(pos);
    return;
  }
  const Element& head = parts.front();
  if (!head.is_variable()) {
    if (pos < atoms.size() && atoms[pos] == head.symbol) {
      ends_from(inv, parts.subspan(1), atoms, pos + 1, out, depth);
    }
    return;
  }
  const Variable* v = inv.variable(head.symbol);
  if (!v) return;
  for (const auto& member : v->entailment) {
    std::vector<std::size_t> mids;
    ends_from(inv, inv.chunk(member).parts, atoms, pos, mids, depth + 1);
    for (std::size_t mid : mids) {
      ends_from(inv, parts.subspan(1), atoms, mid, out, depth);
    }
  }
}

struct Search {
  const ChunkTrie& trie;
  const ChunkInventory& inventory;
  std::span<const std::string> atoms;
  std::size_t start;
  std::optional<TrieMatch> best;
  std::size_t max_depth = 0;

  void offer(const ChunkId& id, std::size_t end) {
    std::size_t len = end - start;
    if (!best || len > best->matched_length ||
        (len == best->matched_length && id != best->chunk &&
         preferred_at_equal_length(inventory, id, best->chunk))) {
      best = TrieMatch{id, len, 0};
    }
  }

  void visit(std::size_t node, std::size_t pos) {
    const auto& n = trie.node(node);
    max_depth = std::max(max_depth, n.depth);
    if (n.terminal && node != 0) offer(*n.terminal, pos);
    for (const auto& [element, child] : n.children) {
      if (!element.is_variable()) {
        if (pos < atoms.size() && atoms[pos] == element.symbol) {
          visit(child, pos + 1);
        }
        continue;
      }
      std::vector<std::size_t> ends;
      Element slot[1] = {element};
      ends_from(inventory, slot, atoms, pos, ends, 0);
      std::sort(ends.begin(), ends.end());
      ends.erase(std::unique(ends.begin(), ends.end()), ends.end());
      // Longest realizations first.
      for (auto it = ends.rbegin(); it != ends.rend(); ++it) visit(child, *it);
    }
  }
};

}  // namespace

std::vector<std::size_t> realization_ends(const ChunkInventory& inventory,
                                          std::span<const Element> parts,
                                          std::span<const std::string> atoms,
                                          std::size_t pos) {
  std::vector<std::size_t> out;
  ends_from(inventory, parts, atoms, pos, out, 0);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool preferred_at_equal_length(const ChunkInventory& inventory,
                               const ChunkId& a, const ChunkId& b) {
  const Chunk& ca = inventory.chunk(a);
  const Chunk& cb = inventory.chunk(b);
  std::size_t sa = ca.variable_slots();
  std::size_t sb = cb.variable_slots();
  if (sa != sb) return sa < sb;
  double na = inventory.count(a);
  double nb = inventory.count(b);
  if (na != nb) return na > nb;
  return ca.parts < cb.parts;
}

std::optional<TrieMatch> trie_longest_match_atoms(
    const ChunkTrie& trie, const ChunkInventory& inventory,
    std::span<const std::string> atoms, std::size_t pos) {
  if (pos >= atoms.size()) throw ArgumentError("match position out of range");
  Search search{trie, inventory, atoms, pos, std::nullopt};
  search.visit(0, pos);
  if (search.best) search.best->search_steps = search.max_depth;
  return search.best;
}

}  // namespace hchunk
