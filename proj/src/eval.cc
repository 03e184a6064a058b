#include "hchunk/eval.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace hchunk {

InventoryModel::InventoryModel(const ChunkInventory& inventory,
                               ScoreOptions options)
    : inventory_(inventory),
      trie_(ChunkTrie::build(inventory)),
      index_(inventory),
      variable_aware_(!inventory.variables().empty()),
      floor_(options.floor > 0.0
                 ? options.floor
                 : 1.0 / static_cast<double>(inventory.alphabet().size() + 1)) {
  if (floor_ > 1.0) throw ArgumentError("floor must be <= 1");
}

ParseResult InventoryModel::parse(const Sequence& seq) const {
  if (variable_aware_) return parse_with_variables(trie_, inventory_, seq);
  require_valid(seq, inventory_.alphabet());
  return greedy_parse(index_, atom_parts(seq.tokens()));
}

double InventoryModel::factor(double p, bool use_floor, bool& floored) const {
  if (p > 0.0) return p;
  floored = true;
  return use_floor ? floor_ : 0.0;
}

double InventoryModel::realization_probability(
    const ChunkId& id, std::span<const std::string> atoms, bool via_variable,
    bool use_floor, bool& floored) const {
  const double total = inventory_.total();
  double p = 1.0;
  const Variable* v =
      variable_aware_ && !via_variable ? resolve_variable(inventory_, id) : nullptr;
  if (v) {
    ChunkId vid = chunk_key(Parts{Element::variable(v->symbol)});
    double pv = total > 0.0 && inventory_.contains(vid)
                    ? inventory_.count(vid) / total
                    : 0.0;
    p *= factor(pv, use_floor, floored);
    p *= factor(v->member_probability(id), use_floor, floored);
  } else if (!via_variable) {
    double pc = total > 0.0 ? inventory_.count(id) / total : 0.0;
    p *= factor(pc, use_floor, floored);
  }
  const Chunk& c = inventory_.chunk(id);
  if (!c.has_variables()) return p;
  std::vector<const Variable*> slots;
  for (const Element& e : c.parts) {
    if (e.is_variable()) slots.push_back(inventory_.variable(e.symbol));
  }
  auto fills = resolve_slots(inventory_, c.parts, atoms);
  for (std::size_t k = 0; k < fills.size(); ++k) {
    const SlotFill& fill = fills[k];
    const Variable* slot = slots[k];
    p *= factor(slot->member_probability(fill.member), use_floor, floored);
    p *= realization_probability(
        fill.member, atoms.subspan(fill.span.start, fill.span.end - fill.span.start),
        true, use_floor, floored);
  }
  return p;
}

std::vector<ScoredChunk> InventoryModel::score_impl(const Sequence& seq,
                                                    bool use_floor) const {
  ParseResult parse = this->parse(seq);
  std::span<const std::string> atoms(seq.tokens());
  std::vector<ScoredChunk> out;
  out.reserve(parse.size());
  for (std::size_t i = 0; i < parse.size(); ++i) {
    const Span& sp = parse.spans[i];
    bool floored = false;
    double p = realization_probability(parse.chunk_ids[i],
                                       atoms.subspan(sp.start, sp.end - sp.start),
                                       false, use_floor, floored);
    ScoredChunk sc{parse.chunk_ids[i], sp, 0.0, floored};
    sc.bits = p > 0.0 ? -std::log2(p) : std::numeric_limits<double>::infinity();
    out.push_back(std::move(sc));
  }
  return out;
}

std::vector<ScoredChunk> InventoryModel::score(const Sequence& seq) const {
  return score_impl(seq, true);
}

double InventoryModel::sequence_bits(const Sequence& seq) const {
  double bits = 0.0;
  for (const auto& sc : score_impl(seq, true)) bits += sc.bits;
  return bits;
}

ProbabilityResult InventoryModel::probability(const Sequence& seq) const {
  ProbabilityResult result;
  for (const auto& sc : score_impl(seq, false)) {
    if (sc.floored) {
      result.probability = 0.0;
      if (!result.zero_chunk) result.zero_chunk = sc.chunk;
      continue;
    }
    result.probability *= std::exp2(-sc.bits);
  }
  return result;
}

double factorized_probability(const ChunkInventory& inventory,
                              const Sequence& seq,
                              std::optional<ChunkId>* zero_chunk) {
  if (inventory.total() <= 0.0) {
    throw UndefinedDistribution("inventory has no mass");
  }
  ProbabilityResult r = InventoryModel(inventory).probability(seq);
  if (zero_chunk) *zero_chunk = r.zero_chunk;
  return r.probability;
}

double sequence_nll(const ChunkInventory& inventory, const Sequence& seq,
                    ScoreOptions options) {
  return InventoryModel(inventory, options).sequence_bits(seq);
}

double bits_per_symbol(const NllSource& model, const Sequence& seq) {
  if (seq.empty()) throw ArgumentError("empty sequence");
  return model.sequence_bits(seq) / static_cast<double>(seq.size());
}

double bits_per_symbol(const ChunkInventory& inventory, const Sequence& seq,
                       ScoreOptions options) {
  return bits_per_symbol(InventoryModel(inventory, options), seq);
}

double order0_entropy(std::span<const Sequence> seqs) {
  std::map<std::string, double> counts;
  double n = 0.0;
  for (const auto& s : seqs) {
    for (const auto& t : s.tokens()) {
      counts[t] += 1.0;
      n += 1.0;
    }
  }
  if (n == 0.0) throw ArgumentError("no tokens");
  double h = 0.0;
  for (const auto& [_, c] : counts) h -= c / n * std::log2(c / n);
  return h;
}

namespace {

using Signature = std::set<std::vector<std::string>>;

void expand_learned(const ChunkInventory& inv, std::span<const Element> parts,
                    std::vector<std::string>& prefix, Signature& out, int depth) {
  if (depth > 32) throw ArgumentError("variable nesting too deep");
  if (parts.empty()) {
    out.insert(prefix);
    return;
  }
  const Element& head = parts.front();
  if (!head.is_variable()) {
    prefix.push_back(head.symbol);
    expand_learned(inv, parts.subspan(1), prefix, out, depth);
    prefix.pop_back();
    return;
  }
  const Variable* v = inv.variable(head.symbol);
  if (!v) throw NotFound("unknown variable " + head.symbol);
  for (const auto& m : v->entailment) {
    Signature sub;
    std::vector<std::string> empty;
    expand_learned(inv, inv.chunk(m).parts, empty, sub, depth + 1);
    for (const auto& r : sub) {
      std::size_t keep = prefix.size();
      prefix.insert(prefix.end(), r.begin(), r.end());
      expand_learned(inv, parts.subspan(1), prefix, out, depth);
      prefix.resize(keep);
    }
  }
}

Signature learned_signature(const ChunkInventory& inv, const Chunk& c) {
  Signature out;
  std::vector<std::string> prefix;
  expand_learned(inv, c.parts, prefix, out, 0);
  return out;
}

bool composite(const Parts& parts) { return parts.size() > 1; }

}  // namespace

RecoveryReport recovery_score(const ChunkInventory& learned,
                              const GeneratorSpec& spec) {
  std::map<Signature, double> truth_p;
  std::set<Signature> truth_comp;
  for (const auto& gc : spec.chunks) {
    auto r = realizations(spec, gc.id());
    Signature sig(r.begin(), r.end());
    truth_p[sig] += gc.probability;
    if (composite(gc.parts)) truth_comp.insert(sig);
  }

  std::map<Signature, double> learned_p;
  std::set<Signature> learned_comp;
  const double total = learned.total();
  for (const auto& [id, e] : learned.entries()) {
    Signature sig = learned_signature(learned, e.chunk);
    learned_p[sig] += total > 0.0 ? e.count / total : 0.0;
    if (composite(e.chunk.parts)) learned_comp.insert(sig);
  }

  RecoveryReport r;
  r.truth_composites = truth_comp.size();
  r.learned_composites = learned_comp.size();
  std::size_t learned_matched = 0;
  for (const auto& s : learned_comp) learned_matched += truth_comp.count(s);
  r.matched = learned_matched;
  if (learned_comp.empty()) {
    r.precision = 1.0;
    r.precision_by_convention = true;
  } else {
    r.precision = static_cast<double>(learned_matched) / learned_comp.size();
  }
  r.recall = truth_comp.empty()
                 ? 1.0
                 : static_cast<double>(learned_matched) / truth_comp.size();
  r.f1 = r.precision + r.recall > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  std::set<Signature> keys;
  for (const auto& [k, _] : truth_p) keys.insert(k);
  for (const auto& [k, _] : learned_p) keys.insert(k);
  double l1 = 0.0;
  for (const auto& k : keys) {
    auto a = truth_p.find(k);
    auto b = learned_p.find(k);
    l1 += std::fabs((a == truth_p.end() ? 0.0 : a->second) -
                    (b == learned_p.end() ? 0.0 : b->second));
  }
  r.probability_l1 = l1;
  return r;
}

TransferReport transfer_compare(const NllSource& a, const NllSource& b,
                                std::span<const Sequence> transfer) {
  TransferReport report;
  if (transfer.empty()) return report;
  double diff = 0.0;
  for (std::size_t i = 0; i < transfer.size(); ++i) {
    TransferRow row{i, a.sequence_bits(transfer[i]), b.sequence_bits(transfer[i])};
    diff += row.bits_a - row.bits_b;
    report.rows.push_back(row);
  }
  report.mean_difference = diff / static_cast<double>(transfer.size());
  return report;
}

}  // namespace hchunk
