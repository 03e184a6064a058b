#include "hchunk/hcm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hchunk {

void HcmParams::validate() const {
  if (!(decay > 0.0 && decay <= 1.0)) {
    throw ArgumentError("decay must lie in (0, 1]");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ArgumentError("alpha must lie in (0, 1)");
  }
  if (prune_epsilon < 0.0) throw ArgumentError("prune epsilon must be >= 0");
  if (min_evidence < 0.0) throw ArgumentError("min evidence must be >= 0");
}

LearnerState::LearnerState(Alphabet alphabet, HcmParams p)
    : inventory(std::move(alphabet)), params(p) {
  params.validate();
}

double binomial_upper_tail(std::uint64_t n, double p, std::uint64_t k) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const double dn = static_cast<double>(n);
  auto log_pmf = [&](std::uint64_t j) {
    const double dj = static_cast<double>(j);
    return std::lgamma(dn + 1.0) - std::lgamma(dj + 1.0) -
           std::lgamma(dn - dj + 1.0) + dj * std::log(p) +
           (dn - dj) * std::log1p(-p);
  };
  const double odds = p / (1.0 - p);
  if (static_cast<double>(k) > dn * p) {
    double term = std::exp(log_pmf(k));
    double sum = 0.0;
    for (std::uint64_t j = k; j <= n; ++j) {
      sum += term;
      if (term < sum * 1e-18) break;
      term *= static_cast<double>(n - j) / static_cast<double>(j + 1) * odds;
    }
    return std::min(1.0, sum);
  }
  // Lower tail P(X <= k - 1), summed downwards.
  double term = std::exp(log_pmf(k - 1));
  double sum = 0.0;
  for (std::uint64_t j = k - 1;; --j) {
    sum += term;
    if (j == 0 || term < sum * 1e-18) break;
    term *= static_cast<double>(j) / static_cast<double>(n - j + 1) / odds;
  }
  return std::clamp(1.0 - sum, 0.0, 1.0);
}

TestVerdict independence_test(std::uint64_t n_lr, std::uint64_t n_left,
                              std::uint64_t n_right, std::uint64_t total,
                              double alpha, double min_evidence) {
  if (total == 0) throw ArgumentError("independence test needs total > 0");
  if (n_lr > n_left || n_left > total || n_right > total) {
    throw ArgumentError("independence test counts out of order");
  }
  TestVerdict v;
  const double rate = static_cast<double>(n_right) / static_cast<double>(total);
  v.expected = static_cast<double>(n_left) * rate;
  v.p_value = binomial_upper_tail(n_left, rate, n_lr);
  v.accepted = v.p_value < alpha && static_cast<double>(n_lr) >= min_evidence;
  return v;
}

void RepresentationGraph::add_node(const ChunkId& id, const Parts& parts,
                                   std::uint64_t created_at) {
  nodes_.emplace(id, Node{parts, created_at});
}

void RepresentationGraph::add_edge(const ChunkId& parent,
                                   const ChunkId& child) {
  edges_.push_back({parent, child});
}

RepresentationGraph RepresentationGraph::from_inventory(
    const ChunkInventory& inventory) {
  RepresentationGraph g;
  for (const auto& [id, e] : inventory.entries()) {
    g.add_node(id, e.chunk.parts, e.chunk.created_at);
  }
  // Children in creation order so the edge list is stable.
  std::vector<const Chunk*> composites;
  for (const auto& [id, e] : inventory.entries()) {
    if (e.chunk.parents) composites.push_back(&e.chunk);
  }
  std::stable_sort(composites.begin(), composites.end(),
                   [](const Chunk* a, const Chunk* b) {
                     return a->created_at < b->created_at;
                   });
  for (const Chunk* c : composites) {
    const ChunkId child = c->id();
    for (const auto& p : {c->parents->first, c->parents->second}) {
      if (g.has_node(p)) g.add_edge(p, child);
    }
  }
  return g;
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string export_graph(const RepresentationGraph& graph) {
  std::vector<std::pair<ChunkId, const RepresentationGraph::Node*>> nodes;
  for (const auto& [id, node] : graph.nodes()) nodes.emplace_back(id, &node);
  std::stable_sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) {
    return a.second->created_at < b.second->created_at;
  });
  std::ostringstream out;
  out << "digraph chunks {\n";
  out << "  node [shape=box];\n";
  for (const auto& [id, node] : nodes) {
    out << "  \"" << dot_escape(id) << "\" [label=\"" << dot_escape(id)
        << "\\n@" << node->created_at << "\"];\n";
  }
  for (const auto& e : graph.edges()) {
    out << "  \"" << dot_escape(e.parent) << "\" -> \"" << dot_escape(e.child)
        << "\";\n";
  }
  out << "}\n";
  return out.str();
}

ParseIndex::ParseIndex(const ChunkInventory& inventory) {
  for (const auto& [id, e] : inventory.entries()) {
    by_first_[e.chunk.parts.front()].push_back({e.chunk.parts, id});
  }
  for (auto& [_, list] : by_first_) {
    std::stable_sort(list.begin(), list.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.parts.size() > b.parts.size();
                     });
  }
}

const ChunkId* ParseIndex::longest_match(std::span<const Element> stream,
                                         std::size_t pos,
                                         std::size_t* length) const {
  auto it = by_first_.find(stream[pos]);
  if (it == by_first_.end()) return nullptr;
  const std::size_t remaining = stream.size() - pos;
  for (const Candidate& c : it->second) {
    if (c.parts.size() > remaining) continue;
    if (std::equal(c.parts.begin(), c.parts.end(), stream.begin() + pos)) {
      *length = c.parts.size();
      return &c.id;
    }
  }
  return nullptr;
}

ParseResult greedy_parse(const ParseIndex& index,
                         std::span<const Element> stream) {
  ParseResult result;
  std::size_t pos = 0;
  while (pos < stream.size()) {
    std::size_t len = 0;
    const ChunkId* id = index.longest_match(stream, pos, &len);
    if (!id) {
      throw ParseError("element '" + stream[pos].symbol + "' at position " +
                           std::to_string(pos) + " has no chunk",
                       pos);
    }
    result.chunk_ids.push_back(*id);
    result.spans.push_back({pos, pos + len});
    pos += len;
  }
  return result;
}

ParseResult greedy_parse(const ChunkInventory& inventory,
                         std::span<const Element> stream) {
  return greedy_parse(ParseIndex(inventory), stream);
}

ParseResult greedy_parse(const LearnerState& state, const Sequence& seq) {
  require_valid(seq, state.inventory.alphabet());
  Parts stream = atom_parts(seq.tokens());
  return greedy_parse(state.inventory, stream);
}

void update_statistics(LearnerState& state, const ParseResult& parse) {
  if (parse.empty()) return;
  for (std::size_t i = 0; i < parse.size(); ++i) {
    state.inventory.add_count(parse.chunk_ids[i], 1.0);
    if (i + 1 < parse.size()) {
      state.transitions.add(parse.chunk_ids[i], parse.chunk_ids[i + 1], 1.0);
    }
  }
  ++state.step_index;
}

std::vector<ChunkId> apply_forgetting(LearnerState& state, double factor) {
  if (!(factor > 0.0 && factor <= 1.0)) {
    throw ArgumentError("forgetting factor must lie in (0, 1]");
  }
  std::vector<ChunkId> pruned;
  if (factor != 1.0) {
    state.inventory.scale(factor);
    state.transitions.scale(factor);
  }
  if (!state.params.prune) return pruned;
  for (const auto& [id, e] : state.inventory.entries()) {
    if (e.count < state.params.prune_epsilon &&
        !state.inventory.is_protected(id)) {
      pruned.push_back(id);
    }
  }
  // Entailed chunks stay while a variable refers to them.
  std::erase_if(pruned, [&](const ChunkId& id) {
    for (const auto& [_, v] : state.inventory.variables()) {
      if (v.entails(id)) return true;
    }
    return false;
  });
  for (const auto& id : pruned) {
    state.inventory.remove(id);
    state.transitions.erase_chunk(id);
  }
  return pruned;
}

namespace {

std::uint64_t rounded(double x) {
  return x <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(x));
}

}  // namespace

TestVerdict test_pair(const LearnerState& state, const ChunkId& left,
                      const ChunkId& right) {
  const std::uint64_t total = rounded(state.inventory.total());
  const std::uint64_t n_left = std::min(total, rounded(state.inventory.count(left)));
  const std::uint64_t n_right =
      std::min(total, rounded(state.inventory.count(right)));
  const std::uint64_t n_lr =
      std::min(n_left, rounded(state.transitions.get(left, right)));
  if (total == 0) return {};
  return independence_test(n_lr, n_left, n_right, total, state.params.alpha,
                           state.params.min_evidence);
}

std::vector<MergeProposal> propose_merges(const LearnerState& state) {
  std::vector<MergeProposal> out;
  for (const auto& [key, weight] : state.transitions.pairs()) {
    if (!(weight > 0.0)) continue;
    const auto& [left, right] = key;
    if (!state.inventory.contains(left) || !state.inventory.contains(right)) {
      continue;
    }
    Chunk composite = concat(state.inventory.chunk(left),
                             state.inventory.chunk(right));
    if (state.inventory.contains(composite.id())) continue;
    TestVerdict v = test_pair(state, left, right);
    if (!v.accepted) continue;
    out.push_back({left, right, weight, v.expected, v.p_value});
  }
  std::sort(out.begin(), out.end(),
            [&](const MergeProposal& a, const MergeProposal& b) {
              if (a.p_value != b.p_value) return a.p_value < b.p_value;
              if (a.observed_adjacency != b.observed_adjacency) {
                return a.observed_adjacency > b.observed_adjacency;
              }
              const Parts& al = state.inventory.chunk(a.left).parts;
              const Parts& bl = state.inventory.chunk(b.left).parts;
              if (al != bl) return al < bl;
              return state.inventory.chunk(a.right).parts <
                     state.inventory.chunk(b.right).parts;
            });
  return out;
}

ChunkId apply_merge(LearnerState& state, RepresentationGraph& graph,
                    const MergeProposal& proposal) {
  Chunk composite = concat(state.inventory.chunk(proposal.left),
                           state.inventory.chunk(proposal.right));
  composite.created_at = state.step_index;
  double count = 0.0;
  switch (state.params.initial_count) {
    case InitialCount::kObserved:
      count = proposal.observed_adjacency;
      break;
    case InitialCount::kZero:
      count = 0.0;
      break;
    case InitialCount::kOne:
      count = 1.0;
      break;
  }
  Parts parts = composite.parts;
  ChunkId id = state.inventory.add(std::move(composite), count);
  if (!graph.has_node(id)) {
    graph.add_node(id, parts, state.step_index);
    graph.add_edge(proposal.left, id);
    graph.add_edge(proposal.right, id);
  }
  if (state.params.reset_pairs_after_merge) {
    state.transitions.reset(proposal.left, proposal.right);
  }
  return id;
}

std::size_t learn_streams(LearnerState& state, RepresentationGraph& graph,
                          std::span<const Parts> streams,
                          const Schedule& schedule, const EventSink& sink) {
  if (schedule.parses_per_round == 0 || schedule.max_new_chunks_per_round == 0) {
    throw ArgumentError("schedule counts must be >= 1");
  }
  state.params.validate();
  for (const auto& [id, e] : state.inventory.entries()) {
    if (!graph.has_node(id)) graph.add_node(id, e.chunk.parts, e.chunk.created_at);
  }
  ParseIndex index(state.inventory);
  std::size_t merges = 0;
  std::size_t since_round = 0;
  for (const Parts& stream : streams) {
    ParseResult parse = greedy_parse(index, stream);
    update_statistics(state, parse);
    if (sink) {
      sink({{"event", "parse"},
            {"step", state.step_index},
            {"chunks", parse.chunk_ids}});
    }
    std::vector<ChunkId> pruned = apply_forgetting(state, state.params.decay);
    if (!pruned.empty()) {
      index = ParseIndex(state.inventory);
      if (sink) {
        for (const auto& id : pruned) {
          sink({{"event", "prune"}, {"step", state.step_index}, {"chunk", id}});
        }
      }
    }
    if (++since_round < schedule.parses_per_round) continue;
    since_round = 0;
    std::vector<MergeProposal> proposals = propose_merges(state);
    std::size_t accepted = 0;
    for (const auto& p : proposals) {
      if (accepted == schedule.max_new_chunks_per_round) break;
      Chunk composite = concat(state.inventory.chunk(p.left),
                               state.inventory.chunk(p.right));
      if (state.inventory.contains(composite.id())) continue;
      ChunkId id = apply_merge(state, graph, p);
      ++accepted;
      if (sink) {
        sink({{"event", "merge"},
              {"step", state.step_index},
              {"left", p.left},
              {"right", p.right},
              {"chunk", id},
              {"observed", p.observed_adjacency},
              {"expected", p.expected_adjacency},
              {"pValue", p.p_value}});
      }
    }
    if (accepted) {
      merges += accepted;
      index = ParseIndex(state.inventory);
    }
  }
  return merges;
}

LearnResult learn(LearnerState state, std::span<const Sequence> sequences,
                  const Schedule& schedule, const EventSink& sink) {
  std::vector<Parts> streams;
  streams.reserve(sequences.size());
  for (const auto& seq : sequences) {
    require_valid(seq, state.inventory.alphabet());
    streams.push_back(atom_parts(seq.tokens()));
  }
  LearnResult result;
  result.graph = RepresentationGraph();
  result.merges = learn_streams(state, result.graph, streams, schedule, sink);
  result.state = std::move(state);
  return result;
}

namespace {

void recount(LearnerState& state, const ParseIndex& index,
             std::span<const Parts> streams) {
  for (const auto& id : state.inventory.ids()) state.inventory.set_count(id, 0.0);
  state.transitions = TransitionTable();
  for (const Parts& stream : streams) {
    update_statistics(state, greedy_parse(index, stream));
  }
}

std::vector<ChunkId> drop_unused(LearnerState& state) {
  std::vector<ChunkId> dropped;
  for (const auto& id : state.inventory.ids()) {
    if (state.inventory.count(id) <= 0.0 && !state.inventory.is_protected(id)) {
      state.inventory.remove(id);
      state.transitions.erase_chunk(id);
      dropped.push_back(id);
    }
  }
  return dropped;
}

}  // namespace

std::vector<ChunkId> refit_counts(LearnerState& state,
                                  std::span<const Parts> streams) {
  recount(state, ParseIndex(state.inventory), streams);
  if (!state.params.prune) return {};
  return drop_unused(state);
}

std::vector<ChunkId> refit_counts(LearnerState& state,
                                  std::span<const Sequence> sequences) {
  std::vector<Parts> streams;
  for (const auto& seq : sequences) {
    require_valid(seq, state.inventory.alphabet());
    streams.push_back(atom_parts(seq.tokens()));
  }
  return refit_counts(state, streams);
}

std::size_t learn_batch_streams(LearnerState& state, RepresentationGraph& graph,
                                std::span<const Parts> streams,
                                const BatchOptions& options,
                                const EventSink& sink) {
  if (options.merges_per_iteration == 0) {
    throw ArgumentError("merges_per_iteration must be >= 1");
  }
  state.params.validate();
  for (const auto& [id, e] : state.inventory.entries()) {
    if (!graph.has_node(id)) graph.add_node(id, e.chunk.parts, e.chunk.created_at);
  }
  std::size_t merges = 0;
  bool fresh = false;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    recount(state, ParseIndex(state.inventory), streams);
    fresh = true;
    std::size_t accepted = 0;
    for (const auto& p : propose_merges(state)) {
      if (accepted == options.merges_per_iteration) break;
      ChunkId id = apply_merge(state, graph, p);
      ++accepted;
      if (sink) {
        sink({{"event", "merge"},
              {"step", state.step_index},
              {"iteration", it},
              {"left", p.left},
              {"right", p.right},
              {"chunk", id},
              {"observed", p.observed_adjacency},
              {"expected", p.expected_adjacency},
              {"pValue", p.p_value}});
      }
    }
    if (accepted == 0) break;
    merges += accepted;
    fresh = false;
  }
  if (!fresh) recount(state, ParseIndex(state.inventory), streams);
  if (state.params.prune) {
    for (const auto& id : drop_unused(state)) {
      if (sink) sink({{"event", "prune"}, {"step", state.step_index}, {"chunk", id}});
    }
  }
  return merges;
}

LearnResult learn_batch(LearnerState state, std::span<const Sequence> sequences,
                        const BatchOptions& options, const EventSink& sink) {
  std::vector<Parts> streams;
  streams.reserve(sequences.size());
  for (const auto& seq : sequences) {
    require_valid(seq, state.inventory.alphabet());
    streams.push_back(atom_parts(seq.tokens()));
  }
  LearnResult result;
  result.merges = learn_batch_streams(state, result.graph, streams, options, sink);
  result.state = std::move(state);
  return result;
}

}  // namespace hchunk
