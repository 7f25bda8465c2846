#pragma once

#include <string>
#include <vector>

#include "evoplace/engine.hpp"
#include "evoplace/llm.hpp"

namespace evoplace::select {

struct PoolEntry {
  std::string id;
  place::Status status = place::Status::Success;
  double hpwl = 0.0;
  llm::EmbeddingVector embedding;
};

using CandidatePool = std::vector<PoolEntry>;

constexpr double kScoreEps = 1e-12;

struct Scores {
  std::vector<double> f;  // NaN for non-Success entries
  double hpwl_min = 0.0;
  double hpwl_max = 0.0;
  bool degenerate = false;  // all Success entries share one HPWL; every f is 0
  std::size_t success_count = 0;
};

/// f = (max - hpwl) / (max - min + eps) over Success entries.
Scores normalized_scores(const CandidatePool& pool);

/// Single-entry form. Throws InvalidArgument for a non-Success member,
/// InsufficientPool below two Success entries, DegeneratePool when all HPWLs
/// are equal.
double normalized_score(const CandidatePool& pool, std::size_t index);

/// Negative cosine similarity; ZeroNorm for zero vectors.
double dis(const llm::EmbeddingVector& a, const llm::EmbeddingVector& b);

struct SelectParams {
  std::size_t m = 10;
  std::size_t k = 50;
  double alpha = 0.5;
  double beta = 0.5;
};

/// Greedy diverse top-m. Returns pool indices in selection order; the first
/// is the argmax-f entry. Throws InsufficientPool or InvalidArgument (k < m).
std::vector<std::size_t> select_diverse(const CandidatePool& pool, const SelectParams& params);

/// sum f + alpha * sum over pairs of dis, for a subset of pool indices.
double subset_objective(const CandidatePool& pool, const Scores& scores, const std::vector<std::size_t>& subset,
                        double alpha);

/// Exhaustive argmax of subset_objective over all m-subsets of the Success
/// entries. PoolTooLarge above 15 of them.
std::vector<std::size_t> brute_force_select(const CandidatePool& pool, std::size_t m, double alpha);

}  // namespace evoplace::select
