#include "evoplace/error.hpp"
#include "evoplace/rng.hpp"

#include <cmath>
#include <numbers>

namespace evoplace {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::DanglingPinReference: return "DanglingPinReference";
    case ErrorCode::EmptyNetlist: return "EmptyNetlist";
    case ErrorCode::InvalidCase: return "InvalidCase";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NonFiniteCoordinate: return "NonFiniteCoordinate";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::TypeError: return "TypeError";
    case ErrorCode::MissingOutput: return "MissingOutput";
    case ErrorCode::BudgetError: return "BudgetError";
    case ErrorCode::StrategyRuntimeError: return "StrategyRuntimeError";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ExtractionError: return "ExtractionError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::MissingSlot: return "MissingSlot";
    case ErrorCode::DegeneratePool: return "DegeneratePool";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::InsufficientPool: return "InsufficientPool";
    case ErrorCode::PoolTooLarge: return "PoolTooLarge";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::CorruptStore: return "CorruptStore";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message, int line, int column) {
  std::string out(to_string(code));
  if (line > 0) {
    out += " at line " + std::to_string(line);
    if (column > 0) out += ", column " + std::to_string(column);
  }
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, int line, int column)
    : std::runtime_error(decorate(code, message, line, column)),
      code_(code),
      line_(line),
      column_(column) {}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = mix64(base);
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::string_view text) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::uint64_t h = fnv1a(text);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[h & 0xf];
    h >>= 4;
  }
  return out;
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) return 0;
  return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

std::vector<double> gaussian_stream(std::uint64_t seed, std::uint64_t stream, std::size_t n) {
  Rng rng(derive_seed(seed, {0x72616e645f6eULL, stream}));
  std::vector<double> out(n);
  for (double& v : out) v = rng.normal();
  return out;
}

}  // namespace evoplace
