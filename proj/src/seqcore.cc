#include "hchunk/seqcore.hpp"

#include <algorithm>
#include <numeric>

namespace hchunk {

Alphabet::Alphabet(std::vector<std::string> symbols)
    : symbols_(std::move(symbols)) {
  if (symbols_.empty()) throw ArgumentError("alphabet must not be empty");
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    const std::string& s = symbols_[i];
    if (s.empty()) throw ArgumentError("alphabet symbol must not be empty");
    if (std::any_of(s.begin(), s.end(),
                    [](char c) { return c == ' ' || c == '\t' || c == '\n' ||
                                        c == '\r'; })) {
      throw ArgumentError("alphabet symbol contains whitespace: '" + s + "'");
    }
    if (!index_.emplace(s, i).second) {
      throw ArgumentError("duplicate alphabet symbol '" + s + "'");
    }
  }
}

std::optional<std::size_t> Alphabet::index_of(const std::string& symbol) const {
  auto it = index_.find(symbol);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Sequence Sequence::bound(std::vector<std::string> tokens,
                         const Alphabet& alphabet) {
  Sequence seq(std::move(tokens));
  require_valid(seq, alphabet);
  return seq;
}

std::optional<std::size_t> validate_sequence(const Sequence& seq,
                                             const Alphabet& alphabet) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!alphabet.contains(seq[i])) return i;
  }
  return std::nullopt;
}

void require_valid(const Sequence& seq, const Alphabet& alphabet) {
  if (auto bad = validate_sequence(seq, alphabet)) {
    throw ParseError("token '" + seq[*bad] + "' at index " +
                         std::to_string(*bad) + " is not in the alphabet",
                     *bad);
  }
}

ChunkId chunk_key(std::span<const Element> parts) {
  ChunkId key;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) key += ' ';
    key += parts[i].symbol;
  }
  return key;
}

Parts atom_parts(std::span<const std::string> tokens) {
  Parts parts;
  parts.reserve(tokens.size());
  for (const auto& t : tokens) parts.push_back(Element::atom(t));
  return parts;
}

bool Chunk::has_variables() const {
  return std::any_of(parts.begin(), parts.end(),
                     [](const Element& e) { return e.is_variable(); });
}

std::size_t Chunk::variable_slots() const {
  return static_cast<std::size_t>(
      std::count_if(parts.begin(), parts.end(),
                    [](const Element& e) { return e.is_variable(); }));
}

Chunk make_atom_chunk(const std::string& symbol) {
  Chunk c;
  c.parts = {Element::atom(symbol)};
  c.atomic_length = 1;
  return c;
}

Chunk concat(const Chunk& left, const Chunk& right) {
  Chunk out;
  out.parts = left.parts;
  out.parts.insert(out.parts.end(), right.parts.begin(), right.parts.end());
  out.atomic_length = left.atomic_length + right.atomic_length;
  out.parents = std::make_pair(left.id(), right.id());
  return out;
}

Chunk concat(const ChunkInventory& left_inventory, const ChunkId& left,
             const ChunkInventory& right_inventory, const ChunkId& right) {
  if (!(left_inventory.alphabet() == right_inventory.alphabet())) {
    throw AlphabetMismatch("cannot concatenate chunks over different alphabets");
  }
  return concat(left_inventory.chunk(left), right_inventory.chunk(right));
}

double Variable::total_evidence() const {
  double sum = 0.0;
  for (const auto& ev : evidence) {
    for (const auto& [_, n] : ev.member_counts) sum += n;
  }
  return sum;
}

std::map<ChunkId, double> Variable::member_weights() const {
  std::map<ChunkId, double> weights;
  for (const auto& m : entailment) weights[m] = 0.0;
  for (const auto& ev : evidence) {
    for (const auto& [id, n] : ev.member_counts) weights[id] += n;
  }
  return weights;
}

double Variable::member_probability(const ChunkId& member) const {
  if (!entails(member)) return 0.0;
  auto share = [&](const std::map<ChunkId, double>& weights) {
    double sum = 0.0;
    for (const auto& [_, w] : weights) sum += w;
    if (!(sum > 0.0)) return -1.0;
    auto it = weights.find(member);
    return it == weights.end() ? 0.0 : it->second / sum;
  };
  double p = share(usage);
  if (p >= 0.0) return p;
  p = share(member_weights());
  if (p >= 0.0) return p;
  return 1.0 / static_cast<double>(entailment.size());
}

bool Variable::entails(const ChunkId& id) const {
  return std::binary_search(entailment.begin(), entailment.end(), id);
}

ChunkInventory::ChunkInventory(Alphabet alphabet)
    : alphabet_(std::move(alphabet)) {
  for (const auto& s : alphabet_.symbols()) {
    entries_.emplace(s, Entry{make_atom_chunk(s), 0.0});
  }
}

const Chunk& ChunkInventory::chunk(const ChunkId& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw NotFound("unknown chunk '" + id + "'");
  return it->second.chunk;
}

double ChunkInventory::count(const ChunkId& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw NotFound("unknown chunk '" + id + "'");
  return it->second.count;
}

std::vector<ChunkId> ChunkInventory::ids() const {
  std::vector<ChunkId> out;
  out.reserve(entries_.size());
  for (const auto& [id, _] : entries_) out.push_back(id);
  return out;
}

ChunkId ChunkInventory::add(Chunk chunk, double count) {
  if (chunk.parts.empty()) throw ArgumentError("chunk parts must be non-empty");
  if (count < 0.0) throw ArgumentError("chunk count must be nonnegative");
  for (const auto& e : chunk.parts) {
    if (e.is_variable() ? !is_variable_symbol(e.symbol)
                        : !alphabet_.contains(e.symbol)) {
      throw ArgumentError("chunk element '" + e.symbol +
                          "' is not in the symbol inventory");
    }
  }
  ChunkId id = chunk.id();
  if (entries_.count(id)) return id;
  chunk.atomic_length = atomic_length_of(chunk.parts);
  entries_.emplace(id, Entry{std::move(chunk), count});
  total_ += count;
  return id;
}

void ChunkInventory::set_count(const ChunkId& id, double count) {
  if (count < 0.0) throw ArgumentError("chunk count must be nonnegative");
  auto it = entries_.find(id);
  if (it == entries_.end()) throw NotFound("unknown chunk '" + id + "'");
  total_ += count - it->second.count;
  it->second.count = count;
}

void ChunkInventory::add_count(const ChunkId& id, double delta) {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw NotFound("unknown chunk '" + id + "'");
  double next = std::max(0.0, it->second.count + delta);
  total_ += next - it->second.count;
  it->second.count = next;
}

bool ChunkInventory::is_protected(const ChunkId& id) const {
  const Chunk& c = chunk(id);
  return c.parts.size() == 1;
}

void ChunkInventory::remove(const ChunkId& id) {
  if (is_protected(id)) {
    throw ArgumentError("atomic chunk '" + id + "' cannot be removed");
  }
  entries_.erase(id);
  recount_total();
}

void ChunkInventory::scale(double factor) {
  if (!(factor > 0.0)) throw ArgumentError("scale factor must be positive");
  for (auto& [_, e] : entries_) e.count *= factor;
  recount_total();
}

void ChunkInventory::recount_total() {
  total_ = 0.0;
  for (const auto& [_, e] : entries_) total_ += e.count;
}

const Variable* ChunkInventory::variable(const std::string& symbol) const {
  auto it = variables_.find(symbol);
  return it == variables_.end() ? nullptr : &it->second;
}

ChunkId ChunkInventory::add_variable(Variable variable) {
  if (variable.entailment.size() < 2) {
    throw ArgumentError("variable needs at least two entailed chunks");
  }
  std::sort(variable.entailment.begin(), variable.entailment.end());
  if (std::adjacent_find(variable.entailment.begin(),
                         variable.entailment.end()) !=
      variable.entailment.end()) {
    throw ArgumentError("variable entailment members must be distinct");
  }
  if (alphabet_.contains(variable.symbol) ||
      variables_.count(variable.symbol)) {
    throw ArgumentError("variable symbol '" + variable.symbol +
                        "' collides with an existing symbol");
  }
  for (const auto& m : variable.entailment) {
    if (!contains(m)) throw NotFound("entailed chunk '" + m + "' is unknown");
  }
  std::string symbol = variable.symbol;
  std::uint64_t created = variable.created_at;
  variables_.emplace(symbol, std::move(variable));
  Chunk c;
  c.parts = {Element::variable(symbol)};
  c.created_at = created;
  return add(std::move(c), 0.0);
}

void ChunkInventory::set_variable_usage(
    const std::map<std::string, std::map<ChunkId, double>>& usage) {
  for (auto& [symbol, v] : variables_) {
    v.usage.clear();
    auto it = usage.find(symbol);
    if (it == usage.end()) continue;
    for (const auto& [member, n] : it->second) {
      if (!v.entails(member)) {
        throw ArgumentError("'" + member + "' is not entailed by " + symbol);
      }
      if (n < 0.0) throw ArgumentError("usage must be nonnegative");
      v.usage[member] = n;
    }
  }
}

std::string ChunkInventory::fresh_variable_symbol() const {
  for (std::size_t n = variables_.size() + 1;; ++n) {
    std::string s = "V" + std::to_string(n);
    if (!alphabet_.contains(s) && !variables_.count(s)) return s;
  }
}

std::size_t ChunkInventory::atomic_length_of(
    std::span<const Element> parts) const {
  std::size_t n = 0;
  for (const auto& e : parts) {
    if (!e.is_variable()) {
      ++n;
      continue;
    }
    const Variable* v = variable(e.symbol);
    if (!v) throw NotFound("unknown variable '" + e.symbol + "'");
    std::size_t shortest = 0;
    for (const auto& m : v->entailment) {
      std::size_t len = chunk(m).atomic_length;
      if (shortest == 0 || len < shortest) shortest = len;
    }
    n += shortest;
  }
  return n;
}

std::size_t ChunkInventory::max_atomic_length() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n = std::max(n, e.chunk.atomic_length);
  return n;
}

std::size_t ChunkInventory::max_element_length() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n = std::max(n, e.chunk.parts.size());
  return n;
}

double chunk_probability(const ChunkInventory& inventory, const ChunkId& id) {
  double c = inventory.count(id);
  double total = inventory.total();
  if (!(total > 0.0)) {
    throw UndefinedDistribution("inventory has zero total count");
  }
  return c / total;
}

double TransitionTable::get(const ChunkId& left, const ChunkId& right) const {
  auto it = pairs_.find({left, right});
  return it == pairs_.end() ? 0.0 : it->second;
}

void TransitionTable::add(const ChunkId& left, const ChunkId& right,
                          double weight) {
  if (weight < 0.0) throw ArgumentError("pair weight must be nonnegative");
  pairs_[{left, right}] += weight;
  total_ += weight;
}

void TransitionTable::reset(const ChunkId& left, const ChunkId& right) {
  auto it = pairs_.find({left, right});
  if (it == pairs_.end()) return;
  pairs_.erase(it);
  total_ = recount();
}

void TransitionTable::erase_chunk(const ChunkId& id) {
  std::erase_if(pairs_, [&](const auto& kv) {
    return kv.first.first == id || kv.first.second == id;
  });
  total_ = recount();
}

void TransitionTable::scale(double factor) {
  if (!(factor > 0.0)) throw ArgumentError("scale factor must be positive");
  for (auto& [_, w] : pairs_) w *= factor;
  total_ = recount();
}

double TransitionTable::recount() const {
  double sum = 0.0;
  for (const auto& [_, w] : pairs_) sum += w;
  return sum;
}

namespace {

bool realizes_from(const ChunkInventory& inv, std::span<const Element> parts,
                   std::span<const std::string> atoms, int depth) {
  if (depth > 64) return false;
  if (parts.empty()) return atoms.empty();
  const Element& head = parts.front();
  if (!head.is_variable()) {
    return !atoms.empty() && atoms.front() == head.symbol &&
           realizes_from(inv, parts.subspan(1), atoms.subspan(1), depth);
  }
  const Variable* v = inv.variable(head.symbol);
  if (!v) return false;
  for (const auto& member : v->entailment) {
    const Chunk& m = inv.chunk(member);
    for (std::size_t len = m.atomic_length; len <= atoms.size(); ++len) {
      if (realizes_from(inv, m.parts, atoms.first(len), depth + 1) &&
          realizes_from(inv, parts.subspan(1), atoms.subspan(len), depth)) {
        return true;
      }
      if (!m.has_variables()) break;  // concrete members have one length
    }
  }
  return false;
}

}  // namespace

bool realizes(const ChunkInventory& inventory, std::span<const Element> parts,
              std::span<const std::string> realization) {
  return realizes_from(inventory, parts, realization, 0);
}

bool is_lossless(const ParseResult& parse, const Sequence& seq,
                 const ChunkInventory& inventory) {
  if (parse.chunk_ids.size() != parse.spans.size()) return false;
  std::size_t cursor = 0;
  std::span<const std::string> tokens(seq.tokens());
  for (std::size_t i = 0; i < parse.size(); ++i) {
    const Span& s = parse.spans[i];
    if (s.start != cursor || s.end <= s.start || s.end > seq.size()) {
      return false;
    }
    if (!inventory.contains(parse.chunk_ids[i])) return false;
    const Chunk& c = inventory.chunk(parse.chunk_ids[i]);
    if (!realizes(inventory, c.parts,
                  tokens.subspan(s.start, s.end - s.start))) {
      return false;
    }
    cursor = s.end;
  }
  return cursor == seq.size();
}

std::vector<std::string> expand_concrete(const Chunk& chunk) {
  std::vector<std::string> atoms;
  atoms.reserve(chunk.parts.size());
  for (const auto& e : chunk.parts) {
    if (e.is_variable()) {
      throw ArgumentError("chunk '" + chunk.id() + "' is not concrete");
    }
    atoms.push_back(e.symbol);
  }
  return atoms;
}

}  // namespace hchunk
