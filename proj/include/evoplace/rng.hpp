#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace evoplace {

/// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Combines a base seed with any number of stream identifiers. The result
/// depends only on the values, never on call order elsewhere in the program,
/// which is what makes evaluation independent of worker scheduling.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) noexcept;

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text) noexcept;

/// 16-hex-digit rendering of fnv1a(text); used as content ids.
std::string hash_hex(std::string_view text);

/// Raw bits come from mt19937_64 (fully specified by the standard). The
/// distributions are written out here because the standard library ones are
/// implementation-defined and would break cross-platform replay.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal();
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

/// n independent standard normals for stream `stream` of `seed`. Shared by
/// the default initializer and the DSL's rand_n builtin so the two agree
/// bit-for-bit.
std::vector<double> gaussian_stream(std::uint64_t seed, std::uint64_t stream, std::size_t n);

}  // namespace evoplace
