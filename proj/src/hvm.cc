#include "hchunk/hvm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace hchunk {

namespace {

std::uint64_t rounded(double x) {
  return x <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(x));
}

struct Margins {
  std::map<ChunkId, double> out;
  std::map<ChunkId, double> in;
  double total = 0.0;
};

Margins margins_of(const TransitionTable& pairs) {
  Margins m;
  for (const auto& [key, w] : pairs.pairs()) {
    m.out[key.first] += w;
    m.in[key.second] += w;
    m.total += w;
  }
  return m;
}

bool significant(const Margins& m, const ChunkId& left, const ChunkId& right,
                 double weight, double alpha) {
  const std::uint64_t total = rounded(m.total);
  if (total == 0) return false;
  const std::uint64_t n_left = std::min(total, rounded(m.out.at(left)));
  const std::uint64_t n_right = std::min(total, rounded(m.in.at(right)));
  const std::uint64_t n_lr = std::min(n_left, rounded(weight));
  return independence_test(n_lr, n_left, n_right, total, alpha, 0.0).accepted;
}

}  // namespace

std::vector<Variable> propose_variables(const ChunkInventory& inventory,
                                        const TransitionTable& pairs,
                                        const VariableOptions& options) {
  // Successor lists per left chunk, restricted to supported adjacencies.
  Margins margins = margins_of(pairs);
  std::map<ChunkId, std::vector<std::pair<ChunkId, double>>> successors;
  for (const auto& [key, w] : pairs.pairs()) {
    if (w < options.theta) continue;
    if (!inventory.contains(key.first) || !inventory.contains(key.second)) {
      continue;
    }
    if (options.test == VariableTest::kSignificance &&
        !significant(margins, key.first, key.second, w, options.alpha)) {
      continue;
    }
    successors[key.first].emplace_back(key.second, w);
  }

  // context (left, right) -> member -> supporting count
  std::map<std::pair<ChunkId, ChunkId>, std::map<ChunkId, double>> contexts;
  for (const auto& [left, succ] : successors) {
    for (const auto& [member, w_in] : succ) {
      if (options.one_sided) {
        contexts[{left, ""}][member] = w_in;
        continue;
      }
      auto it = successors.find(member);
      if (it == successors.end()) continue;
      for (const auto& [right, w_out] : it->second) {
        contexts[{left, right}][member] = std::min(w_in, w_out);
      }
    }
  }

  // Split by atomic length when required, then merge identical entailments.
  std::map<std::vector<ChunkId>, Variable> by_entailment;
  for (const auto& [ctx, members] : contexts) {
    std::map<std::size_t, std::map<ChunkId, double>> groups;
    for (const auto& [id, n] : members) {
      std::size_t key =
          options.equal_length ? inventory.chunk(id).atomic_length : 0;
      groups[key][id] = n;
    }
    for (const auto& [_, group] : groups) {
      if (group.size() < 2) continue;
      std::vector<ChunkId> entailment;
      for (const auto& [id, n] : group) entailment.push_back(id);
      Variable& v = by_entailment[entailment];
      v.entailment = entailment;
      v.evidence.push_back({ctx.first, ctx.second, group});
    }
  }
  std::vector<Variable> out;
  for (auto& [_, v] : by_entailment) out.push_back(std::move(v));
  std::stable_sort(out.begin(), out.end(), [](const Variable& a, const Variable& b) {
    double ea = a.total_evidence();
    double eb = b.total_evidence();
    if (ea != eb) return ea > eb;
    return a.entailment < b.entailment;
  });
  return out;
}

std::vector<Variable> propose_variables(const LearnerState& state,
                                        const VariableOptions& options) {
  return propose_variables(state.inventory, state.transitions, options);
}

const Variable* resolve_variable(const ChunkInventory& inventory,
                                 const ChunkId& id) {
  const Variable* best = nullptr;
  for (const auto& [_, v] : inventory.variables()) {
    if (!v.entails(id)) continue;
    if (!best) {
      best = &v;
      continue;
    }
    double ev = v.total_evidence();
    double eb = best->total_evidence();
    if (ev != eb) {
      if (ev > eb) best = &v;
    } else if (v.created_at != best->created_at) {
      if (v.created_at < best->created_at) best = &v;
    }
  }
  return best;
}

SymbolStream reencode(const ParseResult& parse, const ChunkInventory& inventory,
                      std::size_t layer) {
  SymbolStream out;
  out.layer = layer + 1;
  for (const auto& id : parse.chunk_ids) {
    if (const Variable* v = resolve_variable(inventory, id)) {
      out.elements.push_back(Element::variable(v->symbol));
      continue;
    }
    const Parts& parts = inventory.chunk(id).parts;
    out.elements.insert(out.elements.end(), parts.begin(), parts.end());
  }
  return out;
}

ParseResult parse_with_variables(const ChunkTrie& trie,
                                 const ChunkInventory& inventory,
                                 const Sequence& seq) {
  require_valid(seq, inventory.alphabet());
  std::span<const std::string> atoms(seq.tokens());
  ParseResult result;
  std::size_t pos = 0;
  while (pos < atoms.size()) {
    auto match = trie_longest_match_atoms(trie, inventory, atoms, pos);
    if (!match) {
      throw ParseError("token '" + atoms[pos] + "' at position " +
                           std::to_string(pos) + " has no chunk",
                       pos);
    }
    result.chunk_ids.push_back(match->chunk);
    result.spans.push_back({pos, pos + match->matched_length});
    pos += match->matched_length;
  }
  return result;
}

ParseResult parse_with_variables(const ChunkInventory& inventory,
                                 const Sequence& seq) {
  return parse_with_variables(ChunkTrie::build(inventory), inventory, seq);
}

namespace {

bool resolve_into(const ChunkInventory& inv, std::span<const Element> parts,
                  std::span<const std::string> atoms, std::size_t pos,
                  std::vector<SlotFill>& chosen) {
  if (parts.empty()) return pos == atoms.size();
  const Element& head = parts.front();
  if (!head.is_variable()) {
    return pos < atoms.size() && atoms[pos] == head.symbol &&
           resolve_into(inv, parts.subspan(1), atoms, pos + 1, chosen);
  }
  const Variable* v = inv.variable(head.symbol);
  if (!v) return false;
  std::vector<ChunkId> members = v->entailment;
  std::stable_sort(members.begin(), members.end(),
                   [&](const ChunkId& a, const ChunkId& b) {
                     return inv.chunk(a).atomic_length > inv.chunk(b).atomic_length;
                   });
  for (const auto& m : members) {
    auto ends = realization_ends(inv, inv.chunk(m).parts, atoms, pos);
    for (auto it = ends.rbegin(); it != ends.rend(); ++it) {
      chosen.push_back({m, {pos, *it}});
      if (resolve_into(inv, parts.subspan(1), atoms, *it, chosen)) return true;
      chosen.pop_back();
    }
  }
  return false;
}

}  // namespace

std::vector<SlotFill> resolve_slots(const ChunkInventory& inventory,
                                    std::span<const Element> parts,
                                    std::span<const std::string> atoms) {
  std::vector<SlotFill> chosen;
  if (!resolve_into(inventory, parts, atoms, 0, chosen)) {
    throw ArgumentError("chunk parts do not realize the given atoms");
  }
  return chosen;
}

HvmState hvm_learn(const Alphabet& alphabet, std::span<const Sequence> sequences,
                   const HvmConfig& config, const EventSink& sink) {
  if (config.layers_max == 0) throw ArgumentError("layers_max must be >= 1");
  HvmState state;
  HcmParams params = config.hcm;
  // The symbol inventory only grows inside one run.
  params.prune = false;
  state.learner = LearnerState(alphabet, params);

  std::vector<Parts> streams;
  for (const auto& seq : sequences) {
    require_valid(seq, alphabet);
    streams.push_back(atom_parts(seq.tokens()));
  }

  for (std::size_t layer = 0; layer < config.layers_max; ++layer) {
    LayerRecord record;
    record.layer = layer;
    ChunkInventory& inv = state.learner.inventory;

    // Variable round: statistics from a fresh parse of the current streams.
    ParseIndex index(inv);
    std::vector<ParseResult> parses;
    TransitionTable stats;
    for (const auto& s : streams) {
      parses.push_back(greedy_parse(index, s));
      const auto& ids = parses.back().chunk_ids;
      for (std::size_t i = 0; i + 1 < ids.size(); ++i) stats.add(ids[i], ids[i + 1]);
    }
    std::vector<std::vector<ChunkId>> taken;
    for (const auto& [_, v] : inv.variables()) taken.push_back(v.entailment);
    for (Variable& candidate : propose_variables(inv, stats, config.variables)) {
      bool overlaps = std::any_of(taken.begin(), taken.end(), [&](const auto& e) {
        return std::any_of(candidate.entailment.begin(), candidate.entailment.end(),
                           [&](const ChunkId& id) {
                             return std::find(e.begin(), e.end(), id) != e.end();
                           });
      });
      if (overlaps) continue;
      candidate.symbol = inv.fresh_variable_symbol();
      candidate.created_at = state.learner.step_index;
      taken.push_back(candidate.entailment);
      record.variables.push_back(candidate.symbol);
      if (sink) {
        sink({{"event", "variable"},
              {"layer", layer},
              {"symbol", candidate.symbol},
              {"entailment", candidate.entailment},
              {"evidence", candidate.total_evidence()}});
      }
      ChunkId vid = inv.add_variable(std::move(candidate));
      state.graph.add_node(vid, inv.chunk(vid).parts, state.learner.step_index);
    }
    if (!record.variables.empty()) {
      // A new variable starts with the number of parsed occurrences it
      // replaces, as a new composite starts with its observed adjacency.
      std::map<std::string, std::map<ChunkId, double>> usage;
      for (const auto& [symbol, v] : inv.variables()) usage[symbol] = v.usage;
      std::map<std::string, double> occurrences;
      for (std::size_t i = 0; i < streams.size(); ++i) {
        for (const auto& id : parses[i].chunk_ids) {
          if (const Variable* v = resolve_variable(inv, id)) {
            usage[v->symbol][id] += 1.0;
            occurrences[v->symbol] += 1.0;
          }
        }
        streams[i] = reencode(parses[i], inv, layer).elements;
      }
      inv.set_variable_usage(usage);
      for (const auto& symbol : record.variables) {
        inv.set_count(chunk_key(Parts{Element::variable(symbol)}),
                      occurrences[symbol]);
      }
    }

    // Chunk round over the re-encoded streams.
    record.merges = learn_streams(state.learner, state.graph, streams,
                                  config.schedule, sink);
    state.layers.push_back(record);
    if (record.variables.empty() && record.merges == 0) break;
  }
  return state;
}

void hvm_refit_counts(HvmState& state, std::span<const Sequence> sequences) {
  LearnerState& learner = state.learner;
  ChunkTrie trie = ChunkTrie::build(learner.inventory);
  ChunkInventory& inv = learner.inventory;
  for (const auto& id : inv.ids()) inv.set_count(id, 0.0);
  learner.transitions = TransitionTable();
  std::map<std::string, std::map<ChunkId, double>> usage;
  for (const auto& seq : sequences) {
    ParseResult parse = parse_with_variables(trie, inv, seq);
    std::span<const std::string> atoms(seq.tokens());
    for (std::size_t i = 0; i < parse.size(); ++i) {
      ChunkId& id = parse.chunk_ids[i];
      const Span& sp = parse.spans[i];
      const Chunk& c = inv.chunk(id);
      if (c.has_variables()) {
        auto fills = resolve_slots(inv, c.parts,
                                   atoms.subspan(sp.start, sp.end - sp.start));
        std::size_t k = 0;
        for (const Element& e : c.parts) {
          if (e.is_variable()) usage[e.symbol][fills[k++].member] += 1.0;
        }
      }
      if (const Variable* v = resolve_variable(inv, id)) {
        usage[v->symbol][id] += 1.0;
        id = chunk_key(Parts{Element::variable(v->symbol)});
      }
    }
    update_statistics(learner, parse);
  }
  inv.set_variable_usage(usage);
}

}  // namespace hchunk
