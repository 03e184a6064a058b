// hchunk command-line front end. Every output carries the resolved
// configuration so a run can be repeated byte for byte.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hchunk/eval.hpp"
#include "hchunk/generators.hpp"
#include "hchunk/hcm.hpp"
#include "hchunk/hvm.hpp"
#include "hchunk/motifs.hpp"
#include "hchunk/serialize.hpp"

using namespace hchunk;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double x) {
  if (std::isnan(x)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// Writes to `path`, or to stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw DataError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

// Header lines carried by every TSV report.
void write_meta_comment(std::ostream& out, const json& meta) {
  out << "# command\t" << meta.value("command", std::string()) << '\n';
  std::istringstream cfg(meta.value("config", std::string()));
  std::string line;
  while (std::getline(cfg, line)) {
    if (!line.empty()) out << "# config\t" << line << '\n';
  }
}

Alphabet infer_alphabet(std::span<const Sequence> seqs) {
  std::set<std::string> symbols;
  for (const auto& s : seqs) symbols.insert(s.tokens().begin(), s.tokens().end());
  if (symbols.empty()) throw DataError("input holds no tokens");
  return Alphabet(std::vector<std::string>(symbols.begin(), symbols.end()));
}

std::vector<Sequence> windowed(std::vector<Sequence> seqs, std::size_t width) {
  if (width == 0) return seqs;
  std::vector<Sequence> out;
  for (const auto& s : seqs) {
    auto w = split_windows(s, width);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

struct GenerateOptions {
  std::string alphabet = "A,B,C,D";
  std::size_t merge_steps = 5;
  std::size_t categories = 2;
  std::size_t length = 10000;
  std::uint64_t seed = 1;
  std::string out;
  std::string spec_out;
  std::string condition = "default";
  int experiment = 1;
  std::string group = "motif1";
  std::string out_prefix;
};

struct LearnOptions {
  std::string input;
  std::string out;
  std::string events;
  std::string dot;
  std::string alphabet;
  std::size_t window = 0;
  std::string mode = "online";
  bool refit = false;
  std::size_t max_iterations = 500;
  HcmParams params;
  std::string initial_count = "observed";
  Schedule schedule;
  // hvm
  VariableOptions variables;
  std::string variable_test = "threshold";
  std::size_t layers = 3;
};

struct QueryOptions {
  std::string state;
  std::string input;
  std::string out = "-";
  std::string spec;
  std::string compare;
  double floor = 0.0;
  // motif
  std::string training;
  std::string transfer;
  std::string state_out;
};

class Cli {
 public:
  Cli() : app_("hchunk: hierarchical chunk and variable learning") {
    app_.set_config("--config", "", "TOML config file; flags override it");
    app_.require_subcommand(1);
    app_.fallthrough();
    add_generate();
    add_learn();
    add_query();
  }

  int run(int argc, char** argv) {
    try {
      app_.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      int code = app_.exit(e);
      return code == 0 ? 0 : kUsageError;
    }
    try {
      action_();
      return 0;
    } catch (const ArgumentError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kUsageError;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kDataError;
    }
  }

 private:
  // Resolved options of the invoked command only, as dotted TOML keys.
  std::string resolved_config() const {
    const CLI::App* sub = &app_;
    std::string prefix;
    while (!sub->get_subcommands().empty()) {
      sub = sub->get_subcommands().front();
      prefix += sub->get_name() + ".";
    }
    std::istringstream in(sub->config_to_str(true, false));
    std::string line, out;
    while (std::getline(in, line)) {
      if (!line.empty()) out += prefix + line + "\n";
    }
    return out;
  }

  json meta(const std::string& command) const {
    return {{"command", command}, {"config", resolved_config()}};
  }

  void add_generate() {
    auto* gen = app_.add_subcommand("generate", "Sample ground-truth sequences");
    gen->require_subcommand(1);
    auto* hier = gen->add_subcommand("hier", "Hierarchical chunk generator");
    auto* cat = gen->add_subcommand("cat", "Category-bearing generator");
    for (auto* sub : {hier, cat}) {
      sub->add_option("--alphabet", g_.alphabet, "Comma-separated atoms")
          ->capture_default_str();
      sub->add_option("--merge-steps", g_.merge_steps)->capture_default_str();
      sub->add_option("--length", g_.length, "Atoms to sample")
          ->capture_default_str();
      sub->add_option("--seed", g_.seed)->capture_default_str();
      sub->add_option("--out", g_.out, "Sequence file")->required();
      sub->add_option("--spec", g_.spec_out,
                      "Spec sidecar (default: <out>.spec.json)");
    }
    cat->add_option("--categories", g_.categories)->capture_default_str();
    hier->callback([this] { action_ = [this] { generate_hier(false); }; });
    cat->callback([this] { action_ = [this] { generate_hier(true); }; });

    auto* srt = gen->add_subcommand("srt", "Serial reaction time blocks");
    srt->add_option("--condition", g_.condition,
                    "default, independent, size2 or size3")
        ->capture_default_str();
    srt->add_option("--seed", g_.seed)->capture_default_str();
    srt->add_option("--out-prefix", g_.out_prefix)->required();
    srt->callback([this] { action_ = [this] { generate_srt(); }; });

    auto* motif = gen->add_subcommand("motif", "Serial recall trials");
    motif->add_option("--experiment", g_.experiment, "1 or 2")
        ->check(CLI::Range(1, 2))
        ->capture_default_str();
    motif->add_option("--group", g_.group,
                      "motif1, motif2, independent (1); motif, control (2)")
        ->capture_default_str();
    motif->add_option("--seed", g_.seed)->capture_default_str();
    motif->add_option("--out-prefix", g_.out_prefix)->required();
    motif->callback([this] { action_ = [this] { generate_motif(); }; });
  }

  void add_learner_options(CLI::App* sub, bool variables) {
    sub->add_option("--input", l_.input, "Sequence file")->required();
    sub->add_option("--out", l_.out, "State JSON")->required();
    sub->add_option("--events", l_.events,
                    "Event log (default: <out>.events.jsonl)");
    sub->add_option("--dot", l_.dot, "DOT graph (default: <out>.dot)");
    sub->add_option("--alphabet", l_.alphabet,
                    "Comma-separated atoms (default: tokens of the input)");
    sub->add_option("--alpha", l_.params.alpha)->capture_default_str();
    sub->add_option("--decay", l_.params.decay)->capture_default_str();
    sub->add_option("--prune-epsilon", l_.params.prune_epsilon)
        ->capture_default_str();
    sub->add_option("--min-evidence", l_.params.min_evidence)
        ->capture_default_str();
    sub->add_option("--prune", l_.params.prune)->capture_default_str();
    sub->add_option("--reset-pairs", l_.params.reset_pairs_after_merge)
        ->capture_default_str();
    sub->add_option("--initial-count", l_.initial_count,
                    "observed, zero or one")
        ->capture_default_str();
    sub->add_option("--parses-per-round", l_.schedule.parses_per_round)
        ->capture_default_str();
    sub->add_option("--max-new-chunks", l_.schedule.max_new_chunks_per_round)
        ->capture_default_str();
    sub->add_option("--window", l_.window,
                    "Split each line into windows of this many atoms (0: off)")
        ->capture_default_str();
    sub->add_flag("--refit", l_.refit,
                  "Recount chunk usage with one final parse of the input");
    if (!variables) return;
    sub->add_option("--theta", l_.variables.theta)->capture_default_str();
    sub->add_option("--layers", l_.layers)->capture_default_str();
    sub->add_option("--variable-test", l_.variable_test,
                    "threshold or significance")
        ->capture_default_str();
    sub->add_option("--variable-alpha", l_.variables.alpha)
        ->capture_default_str();
    sub->add_option("--one-sided", l_.variables.one_sided)
        ->capture_default_str();
    sub->add_option("--equal-length", l_.variables.equal_length)
        ->capture_default_str();
  }

  void add_learn() {
    auto* learn = app_.add_subcommand("learn", "Train a learner");
    learn->require_subcommand(1);
    auto* hcm = learn->add_subcommand("hcm", "Chunk learner");
    add_learner_options(hcm, false);
    hcm->add_option("--mode", l_.mode, "online or batch")->capture_default_str();
    hcm->add_option("--max-iterations", l_.max_iterations, "Batch mode only")
        ->capture_default_str();
    hcm->callback([this] { action_ = [this] { learn_hcm(); }; });
    auto* hvm = learn->add_subcommand("hvm", "Chunk and variable learner");
    add_learner_options(hvm, true);
    hvm->callback([this] { action_ = [this] { learn_hvm(); }; });
    auto* motif = learn->add_subcommand("motif", "Learner over identity patterns");
    add_learner_options(motif, false);
    motif->callback([this] { action_ = [this] { learn_motif(); }; });
  }

  void add_query() {
    auto* parse = app_.add_subcommand("parse", "Parse sequences with a state");
    parse->add_option("--state", q_.state)->required();
    parse->add_option("--input", q_.input)->required();
    parse->add_option("--out", q_.out)->capture_default_str();
    parse->callback([this] { action_ = [this] { parse_cmd(); }; });

    auto* eval = app_.add_subcommand("eval", "Score sequences");
    eval->add_option("--state", q_.state)->required();
    eval->add_option("--input", q_.input)->required();
    eval->add_option("--out", q_.out)->capture_default_str();
    eval->add_option("--spec", q_.spec, "Generator sidecar for recovery");
    eval->add_option("--compare", q_.compare, "Second state for transfer");
    eval->add_option("--floor", q_.floor,
                     "Out-of-support probability (<= 0: 1/(|alphabet|+1))")
        ->capture_default_str();
    eval->callback([this] { action_ = [this] { eval_cmd(); }; });

    auto* graph = app_.add_subcommand("export-graph", "DOT of a state's graph");
    graph->add_option("--state", q_.state)->required();
    graph->add_option("--out", q_.out)->capture_default_str();
    graph->callback([this] { action_ = [this] { export_graph_cmd(); }; });

    auto* motif = app_.add_subcommand("motif", "Per-trial transfer NLL of motifs");
    motif->add_option("--transfer", q_.transfer, "Transfer trials")->required();
    motif->add_option("--state", q_.state, "Learned motif state");
    motif->add_option("--training", q_.training,
                      "Training trials (learned here when --state is absent)");
    motif->add_option("--state-out", q_.state_out, "Save the learned state");
    motif->add_option("--alpha", l_.params.alpha)->capture_default_str();
    motif->add_option("--decay", l_.params.decay)->capture_default_str();
    motif->add_option("--parses-per-round", l_.schedule.parses_per_round)
        ->capture_default_str();
    motif->add_option("--max-new-chunks", l_.schedule.max_new_chunks_per_round)
        ->capture_default_str();
    motif->add_option("--floor", q_.floor)->capture_default_str();
    motif->add_option("--out", q_.out)->capture_default_str();
    motif->callback([this] { action_ = [this] { motif_cmd(); }; });
  }

  // --- generate -------------------------------------------------------------

  void generate_hier(bool categories) {
    Alphabet alphabet(split_list(g_.alphabet));
    GeneratorSpec spec =
        categories ? build_category_generator(alphabet, g_.merge_steps,
                                              g_.categories, g_.seed)
                   : build_hierarchical_generator(alphabet, g_.merge_steps,
                                                  g_.seed);
    Sequence seq = sample_sequence(spec, g_.length, g_.seed + 100);
    write_sequences(g_.out, std::span<const Sequence>(&seq, 1));
    json j = generator_spec_to_json(spec);
    j["meta"] = meta(categories ? "generate cat" : "generate hier");
    j["meta"]["seed"] = g_.seed;
    j["meta"]["sampleSeed"] = g_.seed + 100;
    write_json(g_.spec_out.empty() ? g_.out + ".spec.json" : g_.spec_out, j);
  }

  void generate_srt() {
    MarkovSRTSpec spec = make_srt_spec(srt_condition_from_string(g_.condition));
    SrtBlocks blocks = generate_srt_blocks(spec, g_.seed);
    write_sequences(g_.out_prefix + ".baseline.txt",
                    std::span<const Sequence>(&blocks.baseline, 1));
    write_sequences(g_.out_prefix + ".training.txt",
                    std::span<const Sequence>(&blocks.training, 1));
    write_sequences(g_.out_prefix + ".test.txt",
                    std::span<const Sequence>(&blocks.test, 1));
    json j;
    j["keys"] = spec.keys;
    j["transition"] = spec.transition;
    j["condition"] = to_string(spec.condition);
    j["lengths"] = {{"baseline", spec.baseline_length},
                    {"training", spec.training_length},
                    {"test", spec.test_length}};
    j["meta"] = meta("generate srt");
    j["meta"]["seed"] = g_.seed;
    write_json(g_.out_prefix + ".spec.json", j);
  }

  void generate_motif() {
    auto exp = g_.experiment == 1 ? MotifExperiment::kProjectional
                                  : MotifExperiment::kVariable;
    MotifTrialSpec spec = make_motif_spec(exp, g_.group);
    MotifTrials trials = generate_motif_trials(spec, g_.seed);
    std::vector<Sequence> transfer;
    json blocks = json::array();
    for (std::size_t b = 0; b < trials.transfer.size(); ++b) {
      transfer.insert(transfer.end(), trials.transfer[b].begin(),
                      trials.transfer[b].end());
      blocks.push_back({{"relation", spec.transfer_blocks[b].relation},
                        {"trials", trials.transfer[b].size()}});
    }
    write_sequences(g_.out_prefix + ".training.txt", trials.training);
    write_sequences(g_.out_prefix + ".transfer.txt", transfer);
    json j;
    j["experiment"] = g_.experiment;
    j["group"] = spec.group;
    j["alphabet"] = spec.alphabet().symbols();
    j["trainingTrials"] = trials.training.size();
    j["transferBlocks"] = std::move(blocks);
    j["meta"] = meta("generate motif");
    j["meta"]["seed"] = g_.seed;
    write_json(g_.out_prefix + ".spec.json", j);
  }

  // --- learn ----------------------------------------------------------------

  struct LearnIo {
    std::vector<Sequence> sequences;
    Alphabet alphabet;
    std::ofstream events;
  };

  void prepare(LearnIo& io) {
    if (l_.initial_count == "observed") {
      l_.params.initial_count = InitialCount::kObserved;
    } else if (l_.initial_count == "zero") {
      l_.params.initial_count = InitialCount::kZero;
    } else if (l_.initial_count == "one") {
      l_.params.initial_count = InitialCount::kOne;
    } else {
      throw ArgumentError("unknown --initial-count '" + l_.initial_count + "'");
    }
    l_.params.validate();
    io.sequences = windowed(read_sequences(l_.input), l_.window);
    io.alphabet = l_.alphabet.empty() ? infer_alphabet(io.sequences)
                                      : Alphabet(split_list(l_.alphabet));
    std::string events = l_.events.empty() ? l_.out + ".events.jsonl" : l_.events;
    io.events.open(events, std::ios::binary);
    if (!io.events) throw DataError("cannot write " + events);
  }

  EventSink sink(LearnIo& io) {
    return [&io](const json& e) { io.events << e.dump() << '\n'; };
  }

  void finish(StoredState state, const std::string& command) {
    state.meta = meta(command);
    write_json(l_.out, state_to_json(state));
    std::string dot = l_.dot.empty() ? l_.out + ".dot" : l_.dot;
    Output out(dot);
    out.stream() << export_graph(state.graph);
  }

  void learn_hcm() {
    LearnIo io;
    prepare(io);
    for (const auto& s : io.sequences) require_valid(s, io.alphabet);
    LearnerState init(io.alphabet, l_.params);
    LearnResult r;
    if (l_.mode == "online") {
      r = learn(std::move(init), io.sequences, l_.schedule, sink(io));
    } else if (l_.mode == "batch") {
      r = learn_batch(std::move(init), io.sequences,
                      {l_.max_iterations, l_.schedule.max_new_chunks_per_round},
                      sink(io));
    } else {
      throw ArgumentError("unknown --mode '" + l_.mode + "'");
    }
    if (l_.refit) refit_counts(r.state, io.sequences);
    finish(stored_state(r.state, r.graph), "learn hcm");
  }

  void learn_hvm() {
    LearnIo io;
    prepare(io);
    for (const auto& s : io.sequences) require_valid(s, io.alphabet);
    HvmConfig cfg;
    cfg.hcm = l_.params;
    cfg.schedule = l_.schedule;
    cfg.layers_max = l_.layers;
    cfg.variables = l_.variables;
    if (l_.variable_test == "threshold") {
      cfg.variables.test = VariableTest::kThreshold;
    } else if (l_.variable_test == "significance") {
      cfg.variables.test = VariableTest::kSignificance;
    } else {
      throw ArgumentError("unknown --variable-test '" + l_.variable_test + "'");
    }
    HvmState state = hvm_learn(io.alphabet, io.sequences, cfg, sink(io));
    if (l_.refit) hvm_refit_counts(state, io.sequences);
    finish(stored_state(state), "learn hvm");
  }

  void learn_motif() {
    LearnIo io;
    l_.alphabet.clear();  // codes, not tokens
    prepare(io);
    LearnResult r = motif_learn(io.sequences, l_.schedule, l_.params, sink(io));
    if (l_.refit) {
      std::vector<Sequence> projected;
      for (const auto& s : io.sequences) {
        projected.push_back(project_identity_pattern(s).to_sequence());
      }
      refit_counts(r.state, projected);
    }
    finish(stored_state(r.state, r.graph, "motif"), "learn motif");
  }

  // --- queries --------------------------------------------------------------

  static std::vector<Sequence> inputs_for(const StoredState& state,
                                          std::vector<Sequence> seqs) {
    if (state.type != "motif") return seqs;
    for (auto& s : seqs) s = project_identity_pattern(s).to_sequence();
    return seqs;
  }

  void parse_cmd() {
    StoredState state = state_from_json(read_json(q_.state));
    auto seqs = inputs_for(state, read_sequences(q_.input));
    InventoryModel model(state.learner.inventory);
    Output out(q_.out);
    for (const auto& s : seqs) {
      ParseResult p = model.parse(s);
      for (std::size_t i = 0; i < p.size(); ++i) {
        out.stream() << (i ? " | " : "") << p.chunk_ids[i];
      }
      out.stream() << '\n';
    }
  }

  void eval_cmd() {
    StoredState state = state_from_json(read_json(q_.state));
    auto seqs = inputs_for(state, read_sequences(q_.input));
    ScoreOptions opts{q_.floor};
    InventoryModel model(state.learner.inventory, opts);
    Output out(q_.out);
    auto& os = out.stream();
    write_meta_comment(os, meta("eval"));
    os << "# section\tsequences\n";
    os << "index\tlength\tnll_bits\tbits_per_symbol\n";
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      double bits = model.sequence_bits(seqs[i]);
      double bps = seqs[i].empty() ? std::nan("")
                                   : bits / static_cast<double>(seqs[i].size());
      os << i << '\t' << seqs[i].size() << '\t' << fmt(bits) << '\t'
         << fmt(bps) << '\n';
    }
    if (!q_.spec.empty()) {
      GeneratorSpec spec = generator_spec_from_json(read_json(q_.spec));
      RecoveryReport r = recovery_score(state.learner.inventory, spec);
      os << "# section\trecovery\n";
      os << "precision\trecall\tf1\tprobability_l1\ttruth_composites\t"
            "learned_composites\tmatched\tprecision_by_convention\n";
      os << fmt(r.precision) << '\t' << fmt(r.recall) << '\t' << fmt(r.f1)
         << '\t' << fmt(r.probability_l1) << '\t' << r.truth_composites << '\t'
         << r.learned_composites << '\t' << r.matched << '\t'
         << (r.precision_by_convention ? "true" : "false") << '\n';
    }
    if (!q_.compare.empty()) {
      StoredState other = state_from_json(read_json(q_.compare));
      if (!(other.learner.inventory.alphabet() ==
            state.learner.inventory.alphabet())) {
        throw AlphabetMismatch("compared states have different alphabets");
      }
      InventoryModel model_b(other.learner.inventory, opts);
      TransferReport t = transfer_compare(model, model_b, seqs);
      os << "# section\ttransfer\n";
      os << "index\tbits_a\tbits_b\tdifference\n";
      for (const auto& row : t.rows) {
        os << row.index << '\t' << fmt(row.bits_a) << '\t' << fmt(row.bits_b)
           << '\t' << fmt(row.bits_a - row.bits_b) << '\n';
      }
      os << "# mean_difference\t" << fmt(t.mean_difference) << '\n';
    }
  }

  void export_graph_cmd() {
    StoredState state = state_from_json(read_json(q_.state));
    Output out(q_.out);
    out.stream() << export_graph(state.graph);
  }

  void motif_cmd() {
    StoredState state;
    if (!q_.state.empty()) {
      state = state_from_json(read_json(q_.state));
    } else if (!q_.training.empty()) {
      l_.params.validate();
      auto trials = read_sequences(q_.training);
      LearnResult r = motif_learn(trials, l_.schedule, l_.params);
      state = stored_state(r.state, r.graph, "motif");
      state.meta = meta("motif");
      if (!q_.state_out.empty()) write_json(q_.state_out, state_to_json(state));
    } else {
      throw ArgumentError("motif needs --state or --training");
    }
    auto transfer = read_sequences(q_.transfer);
    auto nll = motif_transfer_nll(state.learner.inventory, transfer,
                                  ScoreOptions{q_.floor});
    Output out(q_.out);
    auto& os = out.stream();
    write_meta_comment(os, meta("motif"));
    os << "index\tlength\tarity\tpattern\tnll_bits\n";
    for (std::size_t i = 0; i < transfer.size(); ++i) {
      IdentityPattern p = project_identity_pattern(transfer[i]);
      os << i << '\t' << transfer[i].size() << '\t' << p.arity << '\t'
         << format_sequence(p.to_sequence()) << '\t' << fmt(nll[i]) << '\n';
    }
  }

  CLI::App app_;
  std::function<void()> action_;
  GenerateOptions g_;
  LearnOptions l_;
  QueryOptions q_;
};

}  // namespace

int main(int argc, char** argv) {
  Cli cli;
  return cli.run(argc, argv);
}
