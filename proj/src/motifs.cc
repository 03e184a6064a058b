#include "hchunk/motifs.hpp"

#include <cmath>
#include <map>

namespace hchunk {

Sequence IdentityPattern::to_sequence() const {
  std::vector<std::string> tokens;
  tokens.reserve(codes.size());
  for (std::size_t c : codes) tokens.push_back(std::to_string(c));
  return Sequence(std::move(tokens));
}

bool IdentityPattern::canonical() const {
  std::size_t next = 0;
  for (std::size_t c : codes) {
    if (c > next) return false;
    if (c == next) ++next;
  }
  return next == arity;
}

IdentityPattern project_identity_pattern(const Sequence& seq) {
  IdentityPattern out;
  std::map<std::string, std::size_t> rank;
  for (const auto& t : seq.tokens()) {
    auto [it, inserted] = rank.emplace(t, rank.size());
    out.codes.push_back(it->second);
  }
  out.arity = rank.size();
  return out;
}

Alphabet code_alphabet(std::size_t n) {
  std::vector<std::string> symbols;
  for (std::size_t i = 0; i < n; ++i) symbols.push_back(std::to_string(i));
  return Alphabet(std::move(symbols));
}

LearnResult motif_learn(std::span<const Sequence> trials, const Schedule& schedule,
                        const HcmParams& params, const EventSink& sink) {
  if (trials.empty()) throw ArgumentError("no trials");
  std::vector<Sequence> projected;
  std::size_t arity = 0;
  for (const auto& t : trials) {
    IdentityPattern p = project_identity_pattern(t);
    arity = std::max(arity, p.arity);
    projected.push_back(p.to_sequence());
  }
  if (arity == 0) throw ArgumentError("all trials are empty");
  return learn(LearnerState(code_alphabet(arity), params), projected, schedule,
               sink);
}

std::vector<double> motif_transfer_nll(const ChunkInventory& inventory,
                                       std::span<const Sequence> transfer,
                                       ScoreOptions options) {
  InventoryModel model(inventory, options);
  const double unseen_bits = -std::log2(model.floor());
  std::vector<double> out;
  for (const auto& trial : transfer) {
    Sequence projected = project_identity_pattern(trial).to_sequence();
    double bits = 0.0;
    std::vector<std::string> run;
    auto flush = [&] {
      if (!run.empty()) bits += model.sequence_bits(Sequence(run));
      run.clear();
    };
    for (const auto& code : projected.tokens()) {
      if (inventory.alphabet().contains(code)) {
        run.push_back(code);
      } else {
        flush();
        bits += unseen_bits;
      }
    }
    flush();
    out.push_back(bits);
  }
  return out;
}

}  // namespace hchunk
