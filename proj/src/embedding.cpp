#include <cmath>

#include "evoplace/error.hpp"
#include "evoplace/llm.hpp"
#include "evoplace/rng.hpp"

namespace evoplace::llm {

EmbeddingVector hash_embed(std::string_view text, int dim) {
  if (dim < 16) throw Error(ErrorCode::InvalidArgument, "hash_embed dim must be >= 16");
  EmbeddingVector out;
  out.dim = dim;
  out.source = EmbeddingSource::Hash;
  out.values.assign(static_cast<std::size_t>(dim), 0.0);
  auto add = [&](std::string_view gram) {
    const std::uint64_t h = fnv1a(gram);
    const std::size_t bucket = static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim));
    out.values[bucket] += (mix64(h) & 1u) ? 1.0 : -1.0;
  };
  if (text.size() < 3) {
    if (!text.empty()) add(text);
  } else {
    for (std::size_t i = 0; i + 3 <= text.size(); ++i) add(text.substr(i, 3));
  }
  double norm = 0.0;
  for (double v : out.values) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    out.zero = true;
    return out;
  }
  for (double& v : out.values) v /= norm;
  return out;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.values.size() != b.values.size())
    throw Error(ErrorCode::InvalidArgument, "embedding dimensions differ");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    ab += a.values[i] * b.values[i];
    aa += a.values[i] * a.values[i];
    bb += b.values[i] * b.values[i];
  }
  if (aa == 0.0 || bb == 0.0) throw Error(ErrorCode::ZeroNorm, "cosine of a zero vector");
  return ab / std::sqrt(aa * bb);
}

}  // namespace evoplace::llm
