#include "hchunk/serialize.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace hchunk {
namespace {

// Structural problems in JSON input surface as DataError.
template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw DataError(std::string(what) + ": " + e.what());
  } catch (const ArgumentError& e) {
    throw DataError(std::string(what) + ": " + e.what());
  } catch (const NotFound& e) {
    throw DataError(std::string(what) + ": " + e.what());
  }
}

json parents_to_json(const std::optional<std::pair<ChunkId, ChunkId>>& p) {
  if (!p) return nullptr;
  return json::array({p->first, p->second});
}

std::optional<std::pair<ChunkId, ChunkId>> parents_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_array() || j.size() != 2) throw DataError("parents must be a pair");
  return std::make_pair(j[0].get<ChunkId>(), j[1].get<ChunkId>());
}

const char* to_string(InitialCount c) {
  switch (c) {
    case InitialCount::kObserved: return "observed";
    case InitialCount::kZero: return "zero";
    case InitialCount::kOne: return "one";
  }
  return "observed";
}

InitialCount initial_count_from_string(const std::string& s) {
  if (s == "observed") return InitialCount::kObserved;
  if (s == "zero") return InitialCount::kZero;
  if (s == "one") return InitialCount::kOne;
  throw DataError("unknown initialCount '" + s + "'");
}

bool elements_available(const ChunkInventory& inv, const Parts& parts) {
  for (const auto& e : parts) {
    if (e.is_variable() && !inv.is_variable_symbol(e.symbol)) return false;
  }
  return true;
}

}  // namespace

std::string format_sequence(const Sequence& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += seq[i];
  }
  return out;
}

Sequence parse_sequence_line(const std::string& line) {
  std::vector<std::string> tokens;
  if (line.empty()) return Sequence{};
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ' ') {
      if (i == start) throw ParseError("empty token", i);
      tokens.push_back(line.substr(start, i - start));
      start = i + 1;
    } else if (std::isspace(static_cast<unsigned char>(line[i]))) {
      throw ParseError("tokens must be separated by single spaces", i);
    }
  }
  return Sequence(std::move(tokens));
}

void write_sequences(std::ostream& out, std::span<const Sequence> seqs) {
  for (const auto& s : seqs) out << format_sequence(s) << '\n';
}

std::vector<Sequence> read_sequences(std::istream& in) {
  std::vector<Sequence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      out.push_back(parse_sequence_line(line));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what(),
                       e.position());
    }
  }
  return out;
}

void write_sequences(const std::filesystem::path& path,
                     std::span<const Sequence> seqs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_sequences(out, seqs);
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<Sequence> read_sequences(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    return read_sequences(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.position());
  }
}

json parts_to_json(const Parts& parts) {
  json j = json::array();
  for (const auto& e : parts) {
    if (e.is_variable()) {
      j.push_back({{"var", e.symbol}});
    } else {
      j.push_back(e.symbol);
    }
  }
  return j;
}

Parts parts_from_json(const json& j) {
  return guarded("parts", [&] {
    Parts parts;
    for (const auto& e : j) {
      if (e.is_string()) {
        parts.push_back(Element::atom(e.get<std::string>()));
      } else {
        parts.push_back(Element::variable(e.at("var").get<std::string>()));
      }
    }
    if (parts.empty()) throw DataError("parts must be non-empty");
    return parts;
  });
}

json inventory_to_json(const ChunkInventory& inventory) {
  json j;
  j["alphabet"] = inventory.alphabet().symbols();
  json chunks = json::array();
  for (const auto& [id, entry] : inventory.entries()) {
    chunks.push_back({{"parts", parts_to_json(entry.chunk.parts)},
                      {"count", entry.count},
                      {"createdAt", entry.chunk.created_at},
                      {"parents", parents_to_json(entry.chunk.parents)}});
  }
  j["chunks"] = std::move(chunks);
  json vars = json::array();
  for (const auto& [symbol, v] : inventory.variables()) {
    json evidence = json::array();
    for (const auto& ev : v.evidence) {
      evidence.push_back({{"left", ev.left},
                          {"right", ev.right},
                          {"memberCounts", ev.member_counts}});
    }
    vars.push_back({{"symbol", symbol},
                    {"entailment", v.entailment},
                    {"evidence", std::move(evidence)},
                    {"usage", v.usage},
                    {"createdAt", v.created_at}});
  }
  j["variables"] = std::move(vars);
  return j;
}

ChunkInventory inventory_from_json(const json& j) {
  return guarded("inventory", [&] {
    ChunkInventory inv(
        Alphabet(j.at("alphabet").get<std::vector<std::string>>()));

    std::vector<Variable> pending_vars;
    std::map<std::string, std::map<ChunkId, double>> usage;
    for (const auto& jv : j.value("variables", json::array())) {
      Variable v;
      v.symbol = jv.at("symbol").get<std::string>();
      v.entailment = jv.at("entailment").get<std::vector<ChunkId>>();
      for (const auto& je : jv.value("evidence", json::array())) {
        ContextEvidence ev;
        ev.left = je.at("left").get<ChunkId>();
        ev.right = je.at("right").get<ChunkId>();
        ev.member_counts =
            je.at("memberCounts").get<std::map<ChunkId, double>>();
        v.evidence.push_back(std::move(ev));
      }
      usage[v.symbol] =
          jv.value("usage", json::object()).get<std::map<ChunkId, double>>();
      v.created_at = jv.value("createdAt", std::uint64_t{0});
      pending_vars.push_back(std::move(v));
    }

    struct PendingChunk {
      Chunk chunk;
      double count;
    };
    std::vector<PendingChunk> pending;
    for (const auto& jc : j.at("chunks")) {
      Chunk c;
      c.parts = parts_from_json(jc.at("parts"));
      c.created_at = jc.value("createdAt", std::uint64_t{0});
      c.parents = parents_from_json(jc.value("parents", json(nullptr)));
      double count = jc.value("count", 0.0);
      if (count < 0.0) throw DataError("negative chunk count");
      pending.push_back({std::move(c), count});
    }

    // Variables need their members and chunks need their variables, so add
    // whatever is ready until nothing changes.
    bool progress = true;
    while (progress && (!pending.empty() || !pending_vars.empty())) {
      progress = false;
      for (auto it = pending_vars.begin(); it != pending_vars.end();) {
        bool ready = true;
        for (const auto& m : it->entailment) ready = ready && inv.contains(m);
        if (!ready) {
          ++it;
          continue;
        }
        inv.add_variable(std::move(*it));
        it = pending_vars.erase(it);
        progress = true;
      }
      for (auto it = pending.begin(); it != pending.end();) {
        if (!elements_available(inv, it->chunk.parts)) {
          ++it;
          continue;
        }
        ChunkId id = it->chunk.id();
        if (inv.contains(id)) {
          inv.set_count(id, it->count);
        } else {
          inv.add(std::move(it->chunk), it->count);
        }
        it = pending.erase(it);
        progress = true;
      }
    }
    if (!pending.empty() || !pending_vars.empty()) {
      throw DataError("inventory has chunks or variables that never resolve");
    }
    inv.set_variable_usage(usage);
    return inv;
  });
}

json transitions_to_json(const TransitionTable& table) {
  json j = json::array();
  for (const auto& [key, w] : table.pairs()) {
    j.push_back(json::array({key.first, key.second, w}));
  }
  return j;
}

TransitionTable transitions_from_json(const json& j) {
  return guarded("transitions", [&] {
    TransitionTable t;
    for (const auto& row : j) {
      if (!row.is_array() || row.size() != 3) {
        throw DataError("transition rows are [left, right, weight]");
      }
      double w = row[2].get<double>();
      if (w < 0.0) throw DataError("negative transition weight");
      t.add(row[0].get<ChunkId>(), row[1].get<ChunkId>(), w);
    }
    return t;
  });
}

json params_to_json(const HcmParams& p) {
  return {{"decay", p.decay},
          {"alpha", p.alpha},
          {"pruneEpsilon", p.prune_epsilon},
          {"minEvidence", p.min_evidence},
          {"resetPairsAfterMerge", p.reset_pairs_after_merge},
          {"prune", p.prune},
          {"initialCount", to_string(p.initial_count)}};
}

HcmParams params_from_json(const json& j) {
  return guarded("params", [&] {
    HcmParams p;
    p.decay = j.value("decay", p.decay);
    p.alpha = j.value("alpha", p.alpha);
    p.prune_epsilon = j.value("pruneEpsilon", p.prune_epsilon);
    p.min_evidence = j.value("minEvidence", p.min_evidence);
    p.reset_pairs_after_merge =
        j.value("resetPairsAfterMerge", p.reset_pairs_after_merge);
    p.prune = j.value("prune", p.prune);
    p.initial_count = initial_count_from_string(
        j.value("initialCount", std::string(to_string(p.initial_count))));
    p.validate();
    return p;
  });
}

json graph_to_json(const RepresentationGraph& graph) {
  json nodes = json::array();
  for (const auto& [id, node] : graph.nodes()) {
    nodes.push_back({{"id", id},
                     {"parts", parts_to_json(node.parts)},
                     {"createdAt", node.created_at}});
  }
  json edges = json::array();
  for (const auto& e : graph.edges()) {
    edges.push_back(json::array({e.parent, e.child}));
  }
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

RepresentationGraph graph_from_json(const json& j) {
  return guarded("graph", [&] {
    RepresentationGraph g;
    for (const auto& n : j.at("nodes")) {
      g.add_node(n.at("id").get<ChunkId>(), parts_from_json(n.at("parts")),
                 n.value("createdAt", std::uint64_t{0}));
    }
    for (const auto& e : j.at("edges")) {
      g.add_edge(e.at(0).get<ChunkId>(), e.at(1).get<ChunkId>());
    }
    return g;
  });
}

json state_to_json(const StoredState& state) {
  json j = inventory_to_json(state.learner.inventory);
  j["type"] = state.type;
  j["transitions"] = transitions_to_json(state.learner.transitions);
  j["params"] = params_to_json(state.learner.params);
  j["stepIndex"] = state.learner.step_index;
  j["graph"] = graph_to_json(state.graph);
  if (state.type == "hvm") {
    json layers = json::array();
    for (const auto& l : state.layers) {
      layers.push_back({{"layer", l.layer},
                        {"variables", l.variables},
                        {"merges", l.merges}});
    }
    j["layers"] = std::move(layers);
  }
  j["meta"] = state.meta;
  return j;
}

StoredState state_from_json(const json& j) {
  return guarded("state", [&] {
    StoredState s;
    s.type = j.value("type", std::string("hcm"));
    if (s.type != "hcm" && s.type != "hvm" && s.type != "motif") {
      throw DataError("unknown state type '" + s.type + "'");
    }
    s.learner.inventory = inventory_from_json(j);
    s.learner.transitions =
        transitions_from_json(j.value("transitions", json::array()));
    s.learner.params = params_from_json(j.value("params", json::object()));
    s.learner.step_index = j.value("stepIndex", std::uint64_t{0});
    if (j.contains("graph")) {
      s.graph = graph_from_json(j.at("graph"));
    } else {
      s.graph = RepresentationGraph::from_inventory(s.learner.inventory);
    }
    for (const auto& l : j.value("layers", json::array())) {
      LayerRecord r;
      r.layer = l.at("layer").get<std::size_t>();
      r.variables = l.at("variables").get<std::vector<std::string>>();
      r.merges = l.at("merges").get<std::size_t>();
      s.layers.push_back(std::move(r));
    }
    s.meta = j.value("meta", json::object());
    return s;
  });
}

StoredState stored_state(const LearnerState& learner,
                         const RepresentationGraph& graph, std::string type) {
  StoredState s;
  s.type = std::move(type);
  s.learner = learner;
  s.graph = graph;
  return s;
}

StoredState stored_state(const HvmState& state) {
  StoredState s = stored_state(state.learner, state.graph, "hvm");
  s.layers = state.layers;
  return s;
}

HvmState to_hvm_state(const StoredState& state) {
  HvmState h;
  h.learner = state.learner;
  h.graph = state.graph;
  h.layers = state.layers;
  return h;
}

json generator_spec_to_json(const GeneratorSpec& spec) {
  json chunks = json::array();
  for (const auto& c : spec.chunks) {
    chunks.push_back({{"parts", parts_to_json(c.parts)},
                      {"probability", c.probability},
                      {"createdAt", c.created_at},
                      {"parents", parents_to_json(c.parents)}});
  }
  json cats = json::array();
  for (const auto& c : spec.categories) {
    cats.push_back({{"symbol", c.symbol}, {"members", c.members}});
  }
  return {{"alphabet", spec.alphabet.symbols()},
          {"mergeSteps", spec.merge_steps},
          {"categoryMergeSteps", spec.category_merge_steps},
          {"seed", spec.seed},
          {"chunks", std::move(chunks)},
          {"categories", std::move(cats)}};
}

GeneratorSpec generator_spec_from_json(const json& j) {
  return guarded("generator spec", [&] {
    GeneratorSpec spec;
    spec.alphabet = Alphabet(j.at("alphabet").get<std::vector<std::string>>());
    spec.merge_steps = j.value("mergeSteps", std::size_t{0});
    spec.category_merge_steps = j.value("categoryMergeSteps", std::size_t{0});
    spec.seed = j.value("seed", std::uint64_t{0});
    for (const auto& jc : j.at("chunks")) {
      GeneratorChunk c;
      c.parts = parts_from_json(jc.at("parts"));
      c.probability = jc.at("probability").get<double>();
      c.created_at = jc.value("createdAt", std::uint64_t{0});
      c.parents = parents_from_json(jc.value("parents", json(nullptr)));
      spec.chunks.push_back(std::move(c));
    }
    for (const auto& jc : j.value("categories", json::array())) {
      spec.categories.push_back(
          {jc.at("symbol").get<std::string>(),
           jc.at("members").get<std::vector<ChunkId>>()});
    }
    spec.validate();
    return spec;
  });
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace hchunk
