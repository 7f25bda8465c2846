#include <algorithm>
#include <cmath>
#include <limits>

#include "evoplace/error.hpp"
#include "evoplace/selector.hpp"

namespace evoplace::select {

Scores normalized_scores(const CandidatePool& pool) {
  Scores s;
  s.f.assign(pool.size(), std::numeric_limits<double>::quiet_NaN());
  s.hpwl_min = std::numeric_limits<double>::infinity();
  s.hpwl_max = -std::numeric_limits<double>::infinity();
  for (const auto& e : pool) {
    if (e.status != place::Status::Success) continue;
    ++s.success_count;
    s.hpwl_min = std::min(s.hpwl_min, e.hpwl);
    s.hpwl_max = std::max(s.hpwl_max, e.hpwl);
  }
  if (s.success_count == 0) return s;
  s.degenerate = s.hpwl_max == s.hpwl_min;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].status != place::Status::Success) continue;
    s.f[i] = s.degenerate ? 0.0 : (s.hpwl_max - pool[i].hpwl) / (s.hpwl_max - s.hpwl_min + kScoreEps);
  }
  return s;
}

double normalized_score(const CandidatePool& pool, std::size_t index) {
  if (index >= pool.size()) throw Error(ErrorCode::InvalidArgument, "pool index out of range");
  if (pool[index].status != place::Status::Success)
    throw Error(ErrorCode::InvalidArgument, "only Success members have a score");
  const Scores s = normalized_scores(pool);
  if (s.success_count < 2) throw Error(ErrorCode::InsufficientPool, "scoring needs at least two Success members");
  if (s.degenerate) throw Error(ErrorCode::DegeneratePool, "all Success members share one HPWL");
  return s.f[index];
}

double dis(const llm::EmbeddingVector& a, const llm::EmbeddingVector& b) { return -llm::cosine(a, b); }

namespace {

// Higher f first, then lower HPWL, then lower id.
bool better(const CandidatePool& pool, const Scores& s, std::size_t a, std::size_t b) {
  if (s.f[a] != s.f[b]) return s.f[a] > s.f[b];
  if (pool[a].hpwl != pool[b].hpwl) return pool[a].hpwl < pool[b].hpwl;
  return pool[a].id < pool[b].id;
}

std::vector<std::size_t> ranked_success(const CandidatePool& pool, const Scores& s) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (pool[i].status == place::Status::Success) idx.push_back(i);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return better(pool, s, a, b); });
  return idx;
}

}  // namespace

std::vector<std::size_t> select_diverse(const CandidatePool& pool, const SelectParams& p) {
  if (p.m < 1) throw Error(ErrorCode::InvalidArgument, "m must be >= 1");
  if (p.k < p.m) throw Error(ErrorCode::InvalidArgument, "k must be >= m");
  const Scores s = normalized_scores(pool);
  if (s.success_count < p.m)
    throw Error(ErrorCode::InsufficientPool, "pool has " + std::to_string(s.success_count) + " Success members, need " +
                                                 std::to_string(p.m));
  std::vector<std::size_t> cand = ranked_success(pool, s);
  if (cand.size() > p.k) cand.resize(p.k);

  std::vector<std::size_t> chosen = {cand.front()};
  const std::size_t star = cand.front();
  std::vector<bool> used(pool.size(), false);
  used[star] = true;
  // diversity sums, updated incrementally
  std::vector<double> sum_dis(pool.size(), 0.0);
  while (chosen.size() < p.m) {
    std::size_t best = pool.size();
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t i : cand) {
      if (used[i]) continue;
      const double v = s.f[i] + p.alpha * sum_dis[i] + p.beta * dis(pool[i].embedding, pool[star].embedding);
      if (best == pool.size() || v > best_val ||
          (v == best_val && (pool[i].hpwl < pool[best].hpwl || (pool[i].hpwl == pool[best].hpwl && pool[i].id < pool[best].id)))) {
        best = i;
        best_val = v;
      }
    }
    chosen.push_back(best);
    used[best] = true;
    for (std::size_t i : cand)
      if (!used[i]) sum_dis[i] += dis(pool[i].embedding, pool[best].embedding);
  }
  return chosen;
}

double subset_objective(const CandidatePool& pool, const Scores& s, const std::vector<std::size_t>& subset,
                        double alpha) {
  double v = 0.0;
  for (std::size_t a = 0; a < subset.size(); ++a) {
    v += s.f[subset[a]];
    for (std::size_t b = a + 1; b < subset.size(); ++b) v += alpha * dis(pool[subset[a]].embedding, pool[subset[b]].embedding);
  }
  return v;
}

std::vector<std::size_t> brute_force_select(const CandidatePool& pool, std::size_t m, double alpha) {
  const Scores s = normalized_scores(pool);
  const std::vector<std::size_t> idx = ranked_success(pool, s);
  if (idx.size() > 15) throw Error(ErrorCode::PoolTooLarge, "brute force is limited to 15 Success members");
  if (m < 1 || idx.size() < m) throw Error(ErrorCode::InsufficientPool, "not enough Success members");
  const std::size_t n = idx.size();
  std::vector<std::size_t> best;
  double best_val = -std::numeric_limits<double>::infinity();
  // Subsets in lexicographic order over the ranked list; strict > keeps the first optimum.
  std::vector<std::size_t> pick(m);
  for (std::size_t i = 0; i < m; ++i) pick[i] = i;
  while (true) {
    std::vector<std::size_t> subset;
    for (std::size_t i : pick) subset.push_back(idx[i]);
    const double v = subset_objective(pool, s, subset, alpha);
    if (v > best_val) {
      best_val = v;
      best = subset;
    }
    std::size_t i = m;
    while (i > 0 && pick[i - 1] == n - m + (i - 1)) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < m; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

}  // namespace evoplace::select
