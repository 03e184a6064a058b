#include "hchunk/utility.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace hchunk {

void UtilityConfig::validate() const {
  if (t_boundary < 0.0 || t_within < 0.0 || lambda < 0.0) {
    throw ArgumentError("utility costs must be >= 0");
  }
  if (t_within > t_boundary) {
    throw ArgumentError("t_within must not exceed t_boundary");
  }
}

KeyMatrix to_matrix(const MarkovSRTSpec& spec) {
  KeyMatrix m(4, std::vector<double>(4));
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) m[i][j] = spec.transition[i][j];
  }
  return m;
}

std::vector<std::string> key_list(const MarkovSRTSpec& spec) {
  return {spec.keys.begin(), spec.keys.end()};
}

namespace {

void check_matrix(const KeyMatrix& m) {
  if (m.empty()) throw ArgumentError("empty transition matrix");
  for (const auto& row : m) {
    if (row.size() != m.size()) throw ArgumentError("matrix must be square");
    double s = 0.0;
    for (double p : row) {
      if (p < 0.0) throw ArgumentError("negative transition probability");
      s += p;
    }
    if (std::fabs(s - 1.0) > 1e-9) throw ArgumentError("matrix row does not sum to 1");
  }
}

// Solves pi Q = pi, sum(pi) = 1 by Gaussian elimination with partial
// pivoting. Returns false when the chain has no unique stationary law.
bool solve_stationary(const KeyMatrix& q, std::vector<double>& pi) {
  const std::size_t n = q.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i][j] = q[j][i] - (i == j ? 1.0 : 0.0);
  }
  for (std::size_t j = 0; j < n; ++j) a[n - 1][j] = 1.0;
  a[n - 1][n] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    if (std::fabs(a[piv][col]) < 1e-12) return false;
    std::swap(a[piv], a[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  pi.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) pi[i] = std::max(0.0, a[i][n] / a[i][i]);
  return true;
}

bool irreducible(const KeyMatrix& m) {
  const std::size_t n = m.size();
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if (m[u][v] > 0.0 && !seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) return false;
  }
  return true;
}

std::vector<std::size_t> walk_of(const ChunkId& id,
                                 const std::vector<std::string>& keys) {
  std::istringstream in(id);
  std::string tok;
  std::vector<std::size_t> walk;
  while (in >> tok) {
    auto it = std::find(keys.begin(), keys.end(), tok);
    if (it == keys.end()) throw AlphabetMismatch("unknown key '" + tok + "'");
    walk.push_back(static_cast<std::size_t>(it - keys.begin()));
  }
  if (walk.empty()) throw ArgumentError("empty chunk");
  return walk;
}

ChunkId id_of(const std::vector<std::size_t>& walk,
              const std::vector<std::string>& keys) {
  std::string out;
  for (std::size_t k : walk) {
    if (!out.empty()) out += ' ';
    out += keys[k];
  }
  return out;
}

void extend_walks(const KeyMatrix& m, std::vector<std::size_t>& walk,
                  std::size_t max_len,
                  std::vector<std::vector<std::size_t>>& out) {
  if (walk.size() >= 2) out.push_back(walk);
  if (walk.size() == max_len) return;
  for (std::size_t next = 0; next < m.size(); ++next) {
    if (m[walk.back()][next] <= 0.0) continue;
    walk.push_back(next);
    extend_walks(m, walk, max_len, out);
    walk.pop_back();
  }
}

// Long-run share of chunk starts when the chunk-initial chain splits into
// several closed classes, as with a deterministic cycle chunked whole. The
// walk starts from the key chain's stationary law; the lazy chain (I + Q) / 2
// has the same Cesaro limit as Q and converges without periodic oscillation.
std::vector<double> long_run_starts(const KeyMatrix& q, const KeyMatrix& keys) {
  const std::size_t n = q.size();
  std::vector<double> rho;
  if (!solve_stationary(keys, rho)) rho.assign(n, 1.0 / static_cast<double>(n));
  for (int it = 0; it < 100000; ++it) {
    std::vector<double> nxt(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      nxt[i] += 0.5 * rho[i];
      for (std::size_t j = 0; j < n; ++j) nxt[j] += 0.5 * rho[i] * q[i][j];
    }
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) delta += std::fabs(nxt[i] - rho[i]);
    rho = std::move(nxt);
    if (delta < 1e-15) break;
  }
  return rho;
}

}  // namespace

std::vector<double> stationary_distribution(const KeyMatrix& matrix) {
  check_matrix(matrix);
  if (!irreducible(matrix)) {
    throw UndefinedDistribution("transition matrix is not irreducible");
  }
  std::vector<double> pi;
  if (!solve_stationary(matrix, pi)) {
    throw UndefinedDistribution("no unique stationary distribution");
  }
  return pi;
}

UtilityBreakdown policy_utility(const ChunkPolicy& policy,
                                const KeyMatrix& matrix,
                                const UtilityConfig& cfg) {
  const std::size_t n = matrix.size();
  if (policy.size() != n) throw ArgumentError("one chunk per key required");
  std::vector<double> time(n, 0.0), keys(n, 0.0), errors(n, 0.0);
  KeyMatrix next(n, std::vector<double>(n, 0.0));
  for (std::size_t s = 0; s < n; ++s) {
    const auto& w = policy[s];
    if (w.empty() || w[0] != s) throw ArgumentError("chunk must start at its key");
    double reach = 1.0;
    time[s] = cfg.t_boundary;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      keys[s] += reach;
      const auto& row = matrix[w[i]];
      const double p = row[w[i + 1]];
      time[s] += reach * cfg.t_within;
      errors[s] += reach * (1.0 - p);
      for (std::size_t y = 0; y < n; ++y) {
        if (y != w[i + 1]) next[s][y] += reach * row[y];
      }
      reach *= p;
    }
    keys[s] += reach;
    for (std::size_t y = 0; y < n; ++y) next[s][y] += reach * matrix[w.back()][y];
  }
  std::vector<double> rho;
  if (!solve_stationary(next, rho)) rho = long_run_starts(next, matrix);
  double t = 0.0, k = 0.0, e = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    t += rho[s] * time[s];
    k += rho[s] * keys[s];
    e += rho[s] * errors[s];
  }
  UtilityBreakdown out;
  out.time_per_key = t / k;
  out.errors_per_key = e / k;
  out.utility = -out.time_per_key - cfg.lambda * out.errors_per_key;
  return out;
}

ChunkPolicy greedy_policy(const std::vector<ChunkId>& chunk_set,
                          const std::vector<std::string>& keys) {
  const std::size_t n = keys.size();
  ChunkPolicy policy(n);
  std::vector<bool> has_atom(n, false);
  for (const auto& id : chunk_set) {
    auto w = walk_of(id, keys);
    if (w.size() == 1) has_atom[w[0]] = true;
    auto& cur = policy[w[0]];
    if (cur.empty() || w.size() > cur.size() ||
        (w.size() == cur.size() && id_of(w, keys) < id_of(cur, keys))) {
      cur = w;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!has_atom[k]) throw ArgumentError("chunk set lacks atom " + keys[k]);
  }
  return policy;
}

UtilityBreakdown srt_utility_breakdown(const std::vector<ChunkId>& chunk_set,
                                       const std::vector<std::string>& keys,
                                       const KeyMatrix& matrix,
                                       const UtilityConfig& cfg) {
  cfg.validate();
  stationary_distribution(matrix);
  ChunkPolicy policy = greedy_policy(chunk_set, keys);
  return policy_utility(policy, matrix, cfg);
}

double srt_utility(const std::vector<ChunkId>& chunk_set,
                   const MarkovSRTSpec& matrix, const UtilityConfig& cfg) {
  return srt_utility_breakdown(chunk_set, key_list(matrix), to_matrix(matrix), cfg)
      .utility;
}

std::vector<ChunkId> OptimizeResult::composites() const {
  std::vector<ChunkId> out;
  for (const auto& id : chunk_set) {
    if (id.find(' ') != std::string::npos) out.push_back(id);
  }
  return out;
}

double OptimizeResult::mean_chunk_length() const {
  std::map<std::string, std::size_t> longest;
  for (const auto& id : chunk_set) {
    std::string head = id.substr(0, id.find(' '));
    std::size_t len = static_cast<std::size_t>(std::count(id.begin(), id.end(), ' ')) + 1;
    longest[head] = std::max(longest[head], len);
  }
  double sum = 0.0;
  for (const auto& [_, len] : longest) sum += static_cast<double>(len);
  return longest.empty() ? 0.0 : sum / static_cast<double>(longest.size());
}

OptimizeResult optimize_chunk_set(const std::vector<std::string>& keys,
                                  const KeyMatrix& matrix,
                                  const UtilityConfig& cfg,
                                  std::size_t max_chunk_len) {
  cfg.validate();
  if (max_chunk_len == 0 || max_chunk_len > 4) {
    throw ArgumentError("max chunk length must be in 1..4");
  }
  if (keys.size() != matrix.size()) throw ArgumentError("key count mismatch");
  stationary_distribution(matrix);
  const std::size_t n = keys.size();

  std::vector<std::vector<std::vector<std::size_t>>> options(n);
  for (std::size_t k = 0; k < n; ++k) {
    options[k].push_back({k});
    std::vector<std::size_t> walk{k};
    if (max_chunk_len >= 2) extend_walks(matrix, walk, max_chunk_len, options[k]);
  }

  auto set_of = [&](const ChunkPolicy& policy) {
    std::vector<ChunkId> out;
    for (std::size_t k = 0; k < n; ++k) {
      out.push_back(keys[k]);
      if (policy[k].size() > 1) out.push_back(id_of(policy[k], keys));
    }
    std::sort(out.begin(), out.end());
    return out;
  };

  OptimizeResult best;
  bool have = false;
  ChunkPolicy policy(n);
  std::vector<std::size_t> choice(n, 0);
  while (true) {
    for (std::size_t k = 0; k < n; ++k) policy[k] = options[k][choice[k]];
    double u = policy_utility(policy, matrix, cfg).utility;
    ++best.evaluated;
    const double tol = 1e-12 * std::max(1.0, std::fabs(u));
    bool better = !have || u > best.utility + tol;
    if (!better && std::fabs(u - best.utility) <= tol) {
      auto cand = set_of(policy);
      better = cand.size() < best.chunk_set.size() ||
               (cand.size() == best.chunk_set.size() && cand < best.chunk_set);
    }
    if (better) {
      best.utility = u;
      best.chunk_set = set_of(policy);
      have = true;
    }
    std::size_t k = 0;
    while (k < n && ++choice[k] == options[k].size()) choice[k++] = 0;
    if (k == n) break;
  }
  return best;
}

OptimizeResult optimize_chunk_set(const MarkovSRTSpec& matrix,
                                  const UtilityConfig& cfg,
                                  std::size_t max_chunk_len) {
  return optimize_chunk_set(key_list(matrix), to_matrix(matrix), cfg,
                            max_chunk_len);
}

}  // namespace hchunk
