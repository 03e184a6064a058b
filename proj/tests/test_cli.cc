// Drives the hchunk binary end to end in a scratch directory.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

class Scratch {
 public:
  Scratch() {
    dir_ = fs::temp_directory_path() /
           ("hchunk_cli_" + std::to_string(::getpid()) + "_" + std::to_string(next_++));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Scratch() { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Runs the binary with `args` inside the scratch directory.
  int run(const std::string& args) const {
    std::string cmd = "cd '" + dir_.string() + "' && '" HCHUNK_CLI "' " + args +
                      " >stdout.txt 2>stderr.txt";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
  }

  std::vector<std::string> lines(const std::string& name) const {
    std::vector<std::string> out;
    std::istringstream in(read(name));
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  }

 private:
  static inline int next_ = 0;
  fs::path dir_;
};

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("generate writes sequences and a spec sidecar") {
  Scratch s;
  REQUIRE(s.run("generate hier --alphabet A,B,C,D --merge-steps 3 --length 800 "
                "--seed 4 --out h.txt") == 0);
  auto lines = s.lines("h.txt");
  REQUIRE(lines.size() == 1);
  CHECK(std::count(lines[0].begin(), lines[0].end(), ' ') + 1 == 800);
  auto spec = nlohmann::json::parse(s.read("h.txt.spec.json"));
  CHECK(spec["alphabet"].size() == 4);
  CHECK(spec["mergeSteps"] == 3);
  CHECK(spec["meta"]["seed"] == 4);
  CHECK(spec["meta"]["sampleSeed"] == 104);

  REQUIRE(s.run("generate srt --condition size2 --seed 2 --out-prefix s") == 0);
  CHECK(s.lines("s.training.txt").size() == 1);
  CHECK(fs::exists(s.path("s.baseline.txt")));
  CHECK(fs::exists(s.path("s.test.txt")));

  REQUIRE(s.run("generate motif --experiment 2 --group motif --seed 1 --out-prefix m") == 0);
  CHECK(s.lines("m.training.txt").size() == 40);
  CHECK(s.lines("m.transfer.txt").size() == 24);
}

TEST_CASE("learn hvm finds the variable of the template trials") {
  Scratch s;
  REQUIRE(s.run("generate motif --experiment 2 --group motif --seed 1 --out-prefix m") == 0);
  REQUIRE(s.run("learn hvm --input m.training.txt --out v.json --parses-per-round 1") == 0);
  auto j = nlohmann::json::parse(s.read("v.json"));
  CHECK(j["type"] == "hvm");
  REQUIRE(j["variables"].size() == 1);
  CHECK(j["variables"][0]["entailment"] == nlohmann::json({"A", "C", "E"}));
  CHECK(j["meta"]["command"] == "learn hvm");
  CHECK(fs::exists(s.path("v.json.events.jsonl")));
  CHECK(fs::exists(s.path("v.json.dot")));
}

TEST_CASE("repeated runs are byte identical") {
  Scratch s;
  REQUIRE(s.run("generate hier --alphabet A,B,C,D --merge-steps 3 --length 3000 "
                "--seed 9 --out h.txt") == 0);
  std::string first_seq = s.read("h.txt");
  REQUIRE(s.run("generate hier --alphabet A,B,C,D --merge-steps 3 --length 3000 "
                "--seed 9 --out h.txt") == 0);
  CHECK(s.read("h.txt") == first_seq);
  REQUIRE(s.run("learn hcm --input h.txt --out a.json --window 50 --alpha 1e-6") == 0);
  REQUIRE(s.run("learn hcm --input h.txt --out b.json --window 50 --alpha 1e-6 "
                "--events a.json.events.jsonl.2") == 0);
  auto a = nlohmann::json::parse(s.read("a.json"));
  auto b = nlohmann::json::parse(s.read("b.json"));
  a.erase("meta");
  b.erase("meta");
  CHECK(a.dump() == b.dump());
  CHECK(s.read("a.json.events.jsonl") == s.read("a.json.events.jsonl.2"));
  std::string state = s.read("a.json");
  std::string events = s.read("a.json.events.jsonl");
  REQUIRE(s.run("learn hcm --input h.txt --out a.json --window 50 --alpha 1e-6") == 0);
  CHECK(s.read("a.json") == state);
  CHECK(s.read("a.json.events.jsonl") == events);
}

TEST_CASE("parse output reassembles the input") {
  Scratch s;
  REQUIRE(s.run("generate hier --alphabet A,B,C --merge-steps 2 --length 600 "
                "--seed 3 --out h.txt") == 0);
  REQUIRE(s.run("learn hcm --input h.txt --out a.json --window 30 --alpha 1e-4") == 0);
  REQUIRE(s.run("parse --state a.json --input h.txt --out p.txt") == 0);
  auto parsed = s.lines("p.txt");
  REQUIRE(parsed.size() == 1);
  std::string joined;
  std::istringstream in(parsed[0]);
  for (std::string tok; in >> tok;) {
    if (tok == "|") continue;
    joined += (joined.empty() ? "" : " ") + tok;
  }
  CHECK(joined + "\n" == s.read("h.txt"));
  CHECK(contains(parsed[0], " | "));
}

TEST_CASE("eval and motif reports carry headers and sections") {
  Scratch s;
  REQUIRE(s.run("generate hier --alphabet A,B,C,D --merge-steps 3 --length 2000 "
                "--seed 4 --out h.txt") == 0);
  REQUIRE(s.run("learn hcm --input h.txt --out a.json --window 50 --alpha 1e-6") == 0);
  REQUIRE(s.run("eval --state a.json --input h.txt --spec h.txt.spec.json "
                "--compare a.json --out e.tsv") == 0);
  std::string e = s.read("e.tsv");
  CHECK(e.rfind("# command\teval\n", 0) == 0);
  CHECK(contains(e, "# config\teval.state=\"a.json\""));
  CHECK(contains(e, "# section\tsequences\nindex\tlength\tnll_bits\tbits_per_symbol\n"));
  CHECK(contains(e, "# section\trecovery\nprecision\trecall\tf1\t"));
  CHECK(contains(e, "# section\ttransfer\n"));
  CHECK(contains(e, "# mean_difference\t0\n"));

  REQUIRE(s.run("generate motif --experiment 1 --group motif1 --seed 1 --out-prefix m") == 0);
  REQUIRE(s.run("motif --training m.training.txt --transfer m.transfer.txt "
                "--state-out ms.json --out t.tsv") == 0);
  auto rows = s.lines("t.tsv");
  auto header = std::find(rows.begin(), rows.end(), "index\tlength\tarity\tpattern\tnll_bits");
  REQUIRE(header != rows.end());
  CHECK(rows.end() - header - 1 == 24);
  CHECK(nlohmann::json::parse(s.read("ms.json"))["type"] == "motif");
  REQUIRE(s.run("export-graph --state a.json --out g.dot") == 0);
  CHECK(s.read("g.dot").rfind("digraph", 0) == 0);
}

TEST_CASE("exit codes separate usage errors from data errors") {
  Scratch s;
  CHECK(s.run("") == 1);
  CHECK(s.run("learn") == 1);
  CHECK(s.run("learn hcm --input x.txt") == 1);
  CHECK(s.run("parse --state missing.json --input x.txt") == 2);
  s.write("bad.txt", "A  B\n");
  CHECK(s.run("learn hcm --input bad.txt --out o.json") == 2);
  s.write("ok.txt", "A B A B\n");
  CHECK(s.run("learn hcm --input ok.txt --out o.json --alpha 2") == 1);
  CHECK(s.run("learn hcm --input ok.txt --out o.json --alphabet A") == 2);
  s.write("broken.json", "{\"alphabet\": [\"A\"], \"chunks\": [{\"parts\": [\"Z\"]}]}");
  CHECK(s.run("parse --state broken.json --input ok.txt") == 2);
}

TEST_CASE("flags override the config file which overrides defaults") {
  Scratch s;
  s.write("ok.txt", "A B A B A B\n");
  s.write("c.toml", "[learn.hcm]\nalpha = 1e-6\ndecay = 0.95\n");
  REQUIRE(s.run("--config c.toml learn hcm --input ok.txt --out o.json --decay 0.9") == 0);
  auto j = nlohmann::json::parse(s.read("o.json"));
  std::string cfg = j["meta"]["config"];
  CHECK(contains(cfg, "learn.hcm.alpha=1e-6\n"));
  CHECK(contains(cfg, "learn.hcm.decay=0.9\n"));
  CHECK(contains(cfg, "learn.hcm.prune-epsilon=0.1\n"));
  CHECK(j["params"]["decay"] == 0.9);
  CHECK(j["params"]["alpha"] == 1e-6);
}
