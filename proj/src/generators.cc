#include "hchunk/generators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace hchunk {

const GeneratorChunk* GeneratorSpec::find(const ChunkId& id) const {
  for (const auto& c : chunks) {
    if (c.id() == id) return &c;
  }
  return nullptr;
}

const GeneratorCategory* GeneratorSpec::category(
    const std::string& symbol) const {
  for (const auto& c : categories) {
    if (c.symbol == symbol) return &c;
  }
  return nullptr;
}

void GeneratorSpec::validate() const {
  double sum = 0.0;
  std::set<ChunkId> seen;
  std::set<std::string> category_symbols;
  for (const auto& cat : categories) {
    if (cat.members.size() < 2) {
      throw ArgumentError("category '" + cat.symbol + "' needs >= 2 members");
    }
    category_symbols.insert(cat.symbol);
  }
  for (const auto& c : chunks) {
    if (!(c.probability > 0.0)) {
      throw ArgumentError("generator chunk '" + c.id() +
                          "' has nonpositive probability");
    }
    sum += c.probability;
    for (const auto& e : c.parts) {
      if (e.is_variable() ? !category_symbols.count(e.symbol)
                          : !alphabet.contains(e.symbol)) {
        throw ArgumentError("generator chunk element '" + e.symbol +
                            "' is unknown");
      }
    }
    if (c.parents) {
      for (const auto& p : {c.parents->first, c.parents->second}) {
        if (!seen.count(p) && !category_symbols.count(p)) {
          throw ArgumentError("parent '" + p + "' of '" + c.id() +
                              "' does not precede it");
        }
      }
    }
    if (!seen.insert(c.id()).second) {
      throw ArgumentError("duplicate generator chunk '" + c.id() + "'");
    }
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ArgumentError("generator probabilities do not sum to 1");
  }
}

namespace {

std::vector<GeneratorChunk> atom_chunks(const Alphabet& alphabet) {
  std::vector<GeneratorChunk> out;
  for (const auto& s : alphabet.symbols()) {
    GeneratorChunk c;
    c.parts = {Element::atom(s)};
    out.push_back(std::move(c));
  }
  return out;
}

// A component is either an existing chunk or a category symbol.
struct Component {
  Parts parts;
  ChunkId id;
  bool category = false;
};

void merge_rounds(std::vector<GeneratorChunk>& chunks,
                  const std::vector<GeneratorCategory>& categories,
                  std::size_t rounds, std::uint64_t& step, Rng& rng) {
  for (std::size_t r = 0; r < rounds; ++r) {
    std::vector<Component> pool;
    for (const auto& c : chunks) pool.push_back({c.parts, c.id()});
    for (const auto& cat : categories) {
      pool.push_back({{Element::variable(cat.symbol)}, cat.symbol, true});
    }
    for (int attempt = 0;; ++attempt) {
      if (attempt > 100000) {
        throw ArgumentError("could not draw a new composite");
      }
      const Component& left = pool[rng.index(pool.size())];
      const Component& right = pool[rng.index(pool.size())];
      // Category rounds always build on at least one category.
      if (!categories.empty() && !left.category && !right.category) {
        continue;
      }
      GeneratorChunk c;
      c.parts = left.parts;
      c.parts.insert(c.parts.end(), right.parts.begin(), right.parts.end());
      ChunkId id = c.id();
      bool exists = std::any_of(chunks.begin(), chunks.end(),
                                [&](const auto& o) { return o.id() == id; });
      if (exists) continue;
      c.parents = std::make_pair(left.id, right.id);
      c.created_at = ++step;
      chunks.push_back(std::move(c));
      break;
    }
  }
}

void assign_dirichlet(std::vector<GeneratorChunk>& chunks, Rng& rng) {
  double sum = 0.0;
  for (auto& c : chunks) {
    c.probability = rng.exponential();
    sum += c.probability;
  }
  for (auto& c : chunks) c.probability /= sum;
}

}  // namespace

GeneratorSpec build_hierarchical_generator(const Alphabet& alphabet,
                                           std::size_t merge_steps,
                                           std::uint64_t seed) {
  if (alphabet.size() == 0) throw ArgumentError("alphabet must not be empty");
  Rng rng(seed);
  GeneratorSpec spec;
  spec.alphabet = alphabet;
  spec.merge_steps = merge_steps;
  spec.seed = seed;
  spec.chunks = atom_chunks(alphabet);
  std::uint64_t step = 0;
  merge_rounds(spec.chunks, {}, merge_steps, step, rng);
  assign_dirichlet(spec.chunks, rng);
  return spec;
}

GeneratorSpec build_category_generator(const Alphabet& alphabet,
                                       std::size_t merge_steps,
                                       std::size_t category_count,
                                       std::uint64_t seed) {
  if (category_count == 0) {
    return build_hierarchical_generator(alphabet, merge_steps, seed);
  }
  Rng rng(seed);
  GeneratorSpec spec;
  spec.alphabet = alphabet;
  spec.merge_steps = merge_steps;
  spec.seed = seed;
  spec.chunks = atom_chunks(alphabet);
  std::uint64_t step = 0;
  std::size_t plain = merge_steps / 2;
  merge_rounds(spec.chunks, {}, plain, step, rng);

  for (std::size_t k = 0; k < category_count; ++k) {
    std::map<std::size_t, std::vector<ChunkId>> by_length;
    for (const auto& c : spec.chunks) {
      by_length[c.parts.size()].push_back(c.id());
    }
    std::vector<std::size_t> eligible;
    for (const auto& [len, ids] : by_length) {
      if (ids.size() >= 2) eligible.push_back(len);
    }
    if (eligible.empty()) {
      throw ArgumentError(
          "not enough chunks of equal length to form a category");
    }
    std::vector<ChunkId> group = by_length[eligible[rng.index(eligible.size())]];
    std::size_t max_size = std::min<std::size_t>(4, group.size());
    std::size_t size = 2 + rng.index(max_size - 1);
    rng.shuffle(group);
    group.resize(size);
    std::sort(group.begin(), group.end());
    GeneratorCategory cat;
    for (std::size_t n = k + 1;; ++n) {
      std::string s = "K" + std::to_string(n);
      if (!alphabet.contains(s) && !spec.category(s)) {
        cat.symbol = s;
        break;
      }
    }
    cat.members = std::move(group);
    spec.categories.push_back(std::move(cat));
  }
  spec.category_merge_steps = merge_steps - plain;
  merge_rounds(spec.chunks, spec.categories, spec.category_merge_steps, step,
               rng);
  assign_dirichlet(spec.chunks, rng);
  return spec;
}

namespace {

void realize_into(const GeneratorSpec& spec, const Parts& parts, Rng& rng,
                  std::vector<std::string>& out, int depth) {
  if (depth > 64) throw ArgumentError("generator recursion too deep");
  for (const auto& e : parts) {
    if (!e.is_variable()) {
      out.push_back(e.symbol);
      continue;
    }
    const GeneratorCategory* cat = spec.category(e.symbol);
    if (!cat) throw ArgumentError("unknown category '" + e.symbol + "'");
    const ChunkId& member = cat->members[rng.index(cat->members.size())];
    const GeneratorChunk* m = spec.find(member);
    if (!m) throw ArgumentError("unknown category member '" + member + "'");
    realize_into(spec, m->parts, rng, out, depth + 1);
  }
}

void enumerate_into(const GeneratorSpec& spec, const Parts& parts,
                    std::size_t pos, std::vector<std::string>& prefix,
                    std::vector<std::vector<std::string>>& out, int depth) {
  if (depth > 64) throw ArgumentError("generator recursion too deep");
  if (pos == parts.size()) {
    out.push_back(prefix);
    return;
  }
  const Element& e = parts[pos];
  if (!e.is_variable()) {
    prefix.push_back(e.symbol);
    enumerate_into(spec, parts, pos + 1, prefix, out, depth);
    prefix.pop_back();
    return;
  }
  const GeneratorCategory* cat = spec.category(e.symbol);
  if (!cat) throw ArgumentError("unknown category '" + e.symbol + "'");
  for (const auto& member : cat->members) {
    for (const auto& r : realizations(spec, member)) {
      std::size_t mark = prefix.size();
      prefix.insert(prefix.end(), r.begin(), r.end());
      enumerate_into(spec, parts, pos + 1, prefix, out, depth + 1);
      prefix.resize(mark);
    }
  }
}

}  // namespace

std::vector<std::vector<std::string>> realizations(const GeneratorSpec& spec,
                                                   const ChunkId& id) {
  const GeneratorChunk* c = spec.find(id);
  if (!c) throw NotFound("unknown generator chunk '" + id + "'");
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> prefix;
  enumerate_into(spec, c->parts, 0, prefix, out, 0);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SampleResult sample_with_log(const GeneratorSpec& spec, std::size_t atom_length,
                             std::uint64_t seed) {
  SampleResult result;
  if (atom_length == 0) return result;
  if (spec.chunks.empty()) throw ArgumentError("generator has no chunks");
  Rng rng(seed);
  std::vector<double> weights;
  for (const auto& c : spec.chunks) weights.push_back(c.probability);
  std::vector<std::string> tokens;
  tokens.reserve(atom_length + 16);
  while (tokens.size() < atom_length) {
    const GeneratorChunk& c = spec.chunks[rng.categorical(weights)];
    ChunkDraw draw;
    draw.chunk = c.id();
    realize_into(spec, c.parts, rng, draw.realization, 0);
    tokens.insert(tokens.end(), draw.realization.begin(),
                  draw.realization.end());
    result.draws.push_back(std::move(draw));
  }
  result.truncated_atoms = tokens.size() - atom_length;
  tokens.resize(atom_length);
  result.sequence = Sequence(std::move(tokens));
  return result;
}

Sequence sample_sequence(const GeneratorSpec& spec, std::size_t atom_length,
                         std::uint64_t seed) {
  return sample_with_log(spec, atom_length, seed).sequence;
}

// --- serial reaction time -------------------------------------------------

const char* to_string(SrtCondition c) {
  switch (c) {
    case SrtCondition::kDefault:
      return "default";
    case SrtCondition::kIndependent:
      return "independent";
    case SrtCondition::kSize2Chunk:
      return "size2";
    case SrtCondition::kSize3Chunk:
      return "size3";
  }
  return "default";
}

SrtCondition srt_condition_from_string(const std::string& s) {
  if (s == "default") return SrtCondition::kDefault;
  if (s == "independent") return SrtCondition::kIndependent;
  if (s == "size2" || s == "size2-chunk") return SrtCondition::kSize2Chunk;
  if (s == "size3" || s == "size3-chunk") return SrtCondition::kSize3Chunk;
  throw ArgumentError("unknown SRT condition '" + s + "'");
}

void MarkovSRTSpec::validate() const {
  std::set<std::string> distinct(keys.begin(), keys.end());
  if (distinct.size() != 4) throw ArgumentError("SRT keys must be distinct");
  for (const auto& row : transition) {
    double sum = 0.0;
    for (double p : row) {
      if (p < 0.0) throw ArgumentError("negative transition probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw ArgumentError("transition rows must sum to 1");
    }
  }
}

std::array<std::array<double, 4>, 4> default_srt_matrix() {
  // Dominant successor per row: A->B, B->C, C->D, D->A.
  const std::array<double, 4> dominant{0.9, 0.7, 0.9, 0.7};
  std::array<std::array<double, 4>, 4> m{};
  for (std::size_t i = 0; i < 4; ++i) {
    std::size_t next = (i + 1) % 4;
    double rest = (1.0 - dominant[i]) / 3.0;
    for (std::size_t j = 0; j < 4; ++j) m[i][j] = j == next ? dominant[i] : rest;
  }
  return m;
}

MarkovSRTSpec make_srt_spec(SrtCondition condition) {
  MarkovSRTSpec spec;
  spec.transition = default_srt_matrix();
  spec.condition = condition;
  return spec;
}

Sequence sample_markov(const std::vector<std::string>& keys,
                       const std::vector<std::vector<double>>& transition,
                       std::size_t length, Rng& rng) {
  std::vector<std::string> tokens;
  tokens.reserve(length);
  if (length == 0) return Sequence();
  std::size_t state = rng.index(keys.size());
  tokens.push_back(keys[state]);
  while (tokens.size() < length) {
    state = rng.categorical(transition[state]);
    tokens.push_back(keys[state]);
  }
  return Sequence(std::move(tokens));
}

namespace {

Sequence sample_units(const std::vector<std::vector<std::string>>& units,
                      std::size_t length, Rng& rng) {
  std::vector<std::string> tokens;
  tokens.reserve(length + 4);
  while (tokens.size() < length) {
    const auto& u = units[rng.index(units.size())];
    tokens.insert(tokens.end(), u.begin(), u.end());
  }
  tokens.resize(length);
  return Sequence(std::move(tokens));
}

}  // namespace

SrtBlocks generate_srt_blocks(const MarkovSRTSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::vector<std::string> keys(spec.keys.begin(), spec.keys.end());
  std::vector<std::vector<double>> matrix;
  for (const auto& row : spec.transition) {
    matrix.emplace_back(row.begin(), row.end());
  }
  const auto& k = spec.keys;
  SrtBlocks blocks;
  blocks.baseline = sample_markov(keys, matrix, spec.baseline_length, rng);
  switch (spec.condition) {
    case SrtCondition::kDefault:
      blocks.training = sample_markov(keys, matrix, spec.training_length, rng);
      break;
    case SrtCondition::kIndependent:
      blocks.training =
          sample_units({{k[0]}, {k[1]}, {k[2]}, {k[3]}}, spec.training_length,
                       rng);
      break;
    case SrtCondition::kSize2Chunk:
      blocks.training =
          sample_units({{k[0], k[1]}, {k[2]}, {k[3]}}, spec.training_length,
                       rng);
      break;
    case SrtCondition::kSize3Chunk:
      blocks.training =
          sample_units({{k[0], k[1], k[2]}, {k[3]}}, spec.training_length, rng);
      break;
  }
  blocks.test = sample_markov(keys, matrix, spec.test_length, rng);
  return blocks;
}

// --- serial recall motifs ---------------------------------------------------

void MotifTrialSpec::validate() const {
  if (training_trials == 0) throw ArgumentError("need at least one trial");
  if (experiment == MotifExperiment::kProjectional) {
    for (const auto* m : {&motif1, &motif2}) {
      if (m->size() != trial_length ||
          std::count(m->begin(), m->end(), '1') * 2 !=
              static_cast<long>(trial_length) ||
          std::any_of(m->begin(), m->end(),
                      [](char c) { return c != '0' && c != '1'; })) {
        throw ArgumentError("motif arrangement '" + *m +
                            "' must be a balanced binary string");
      }
    }
    if (group != "motif1" && group != "motif2" && group != "independent") {
      throw ArgumentError("unknown experiment-1 group '" + group + "'");
    }
    if (training_palette.size() < 2 || transfer_palette.size() < 2) {
      throw ArgumentError("palettes need at least two tokens");
    }
    for (const auto& t : transfer_palette) {
      if (std::find(training_palette.begin(), training_palette.end(), t) !=
          training_palette.end()) {
        throw ArgumentError("transfer palette must be disjoint from training");
      }
    }
  } else {
    if (group != "motif" && group != "control") {
      throw ArgumentError("unknown experiment-2 group '" + group + "'");
    }
    if (variable_position >= fixed_template.size()) {
      throw ArgumentError("variable position outside the template");
    }
    if (variable_members.size() < 2) {
      throw ArgumentError("variable needs at least two members");
    }
    if (transfer_fixed.size() + 1 != fixed_template.size()) {
      throw ArgumentError("transfer fixed parts must fill the template");
    }
  }
}

Alphabet MotifTrialSpec::alphabet() const {
  std::vector<std::string> symbols;
  auto add = [&](const std::string& s) {
    if (s != "_" &&
        std::find(symbols.begin(), symbols.end(), s) == symbols.end()) {
      symbols.push_back(s);
    }
  };
  if (experiment == MotifExperiment::kProjectional) {
    for (const auto& s : training_palette) add(s);
    for (const auto& s : transfer_palette) add(s);
  } else {
    for (const auto& s : fixed_template) add(s);
    for (const auto& s : variable_members) add(s);
    for (const auto& s : transfer_fixed) add(s);
  }
  std::sort(symbols.begin(), symbols.end());
  return Alphabet(std::move(symbols));
}

MotifTrialSpec make_motif_spec(MotifExperiment experiment,
                               const std::string& group) {
  MotifTrialSpec spec;
  spec.experiment = experiment;
  spec.group = group;
  if (experiment == MotifExperiment::kProjectional) {
    spec.trial_length = 12;
    for (int i = 1; i <= 8; ++i) {
      spec.training_palette.push_back("c" + std::to_string(i));
      spec.transfer_palette.push_back("t" + std::to_string(i));
    }
    spec.transfer_blocks = {{8, "motif1"}, {8, "motif2"}, {8, "independent"}};
  } else {
    spec.trial_length = spec.fixed_template.size();
    spec.transfer_blocks = {{24, "new-fixed"}};
  }
  spec.validate();
  return spec;
}

std::vector<Sequence> MotifTrials::all() const {
  std::vector<Sequence> out = training;
  for (const auto& block : transfer) out.insert(out.end(), block.begin(), block.end());
  return out;
}

namespace {

std::string random_arrangement(std::size_t length, Rng& rng) {
  std::string s(length / 2, '0');
  s.append(length - length / 2, '1');
  std::vector<char> v(s.begin(), s.end());
  rng.shuffle(v);
  return std::string(v.begin(), v.end());
}

Sequence realize_arrangement(const std::string& arrangement,
                             const std::vector<std::string>& palette,
                             Rng& rng) {
  std::size_t x = rng.index(palette.size());
  std::size_t y = rng.index(palette.size() - 1);
  if (y >= x) ++y;
  std::vector<std::string> tokens;
  for (char c : arrangement) tokens.push_back(c == '0' ? palette[x] : palette[y]);
  return Sequence(std::move(tokens));
}

std::string arrangement_for(const MotifTrialSpec& spec,
                            const std::string& relation, Rng& rng) {
  if (relation == "motif1") return spec.motif1;
  if (relation == "motif2") return spec.motif2;
  if (relation == "independent") return random_arrangement(spec.trial_length, rng);
  throw ArgumentError("unknown motif relation '" + relation + "'");
}

// Members in shuffled rounds so every member appears equally often.
std::vector<std::string> cycle_members(const std::vector<std::string>& members,
                                       std::size_t n, Rng& rng) {
  std::vector<std::string> out;
  while (out.size() < n) {
    std::vector<std::string> round = members;
    rng.shuffle(round);
    out.insert(out.end(), round.begin(), round.end());
  }
  out.resize(n);
  return out;
}

Sequence fill_template(const std::vector<std::string>& fixed,
                       std::size_t position, const std::string& member) {
  std::vector<std::string> tokens;
  std::size_t f = 0;
  for (std::size_t i = 0; i < fixed.size() + 1; ++i) {
    tokens.push_back(i == position ? member : fixed[f++]);
  }
  return Sequence(std::move(tokens));
}

}  // namespace

MotifTrials generate_motif_trials(const MotifTrialSpec& spec,
                                  std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  MotifTrials trials;
  if (spec.experiment == MotifExperiment::kProjectional) {
    for (std::size_t t = 0; t < spec.training_trials; ++t) {
      std::string arrangement = arrangement_for(spec, spec.group, rng);
      trials.training.push_back(
          realize_arrangement(arrangement, spec.training_palette, rng));
    }
    for (const auto& block : spec.transfer_blocks) {
      std::vector<Sequence> out;
      for (std::size_t t = 0; t < block.length; ++t) {
        std::string arrangement = arrangement_for(spec, block.relation, rng);
        out.push_back(
            realize_arrangement(arrangement, spec.transfer_palette, rng));
      }
      trials.transfer.push_back(std::move(out));
    }
    return trials;
  }

  std::vector<std::string> training_fixed;
  for (std::size_t i = 0; i < spec.fixed_template.size(); ++i) {
    if (i != spec.variable_position) training_fixed.push_back(spec.fixed_template[i]);
  }
  std::vector<std::string> members =
      spec.group == "motif"
          ? cycle_members(spec.variable_members, spec.training_trials, rng)
          : std::vector<std::string>(spec.training_trials,
                                     spec.variable_members.front());
  for (const auto& m : members) {
    trials.training.push_back(
        fill_template(training_fixed, spec.variable_position, m));
  }
  for (const auto& block : spec.transfer_blocks) {
    if (block.relation != "new-fixed") {
      throw ArgumentError("unknown experiment-2 relation '" + block.relation + "'");
    }
    std::vector<Sequence> out;
    for (const auto& m : cycle_members(spec.variable_members, block.length, rng)) {
      out.push_back(fill_template(spec.transfer_fixed, spec.variable_position, m));
    }
    trials.transfer.push_back(std::move(out));
  }
  return trials;
}

std::vector<Sequence> split_windows(const Sequence& seq, std::size_t width) {
  std::vector<Sequence> out;
  if (width == 0 || seq.size() <= width) {
    if (!seq.empty()) out.push_back(seq);
    return out;
  }
  const auto& t = seq.tokens();
  for (std::size_t start = 0; start < t.size(); start += width) {
    std::size_t end = std::min(t.size(), start + width);
    out.emplace_back(std::vector<std::string>(t.begin() + start, t.begin() + end));
  }
  return out;
}

}  // namespace hchunk
