#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "evoplace/dsl.hpp"

namespace evoplace::llm {

struct Message {
  std::string role;
  std::string content;
};

enum class Mode { Remote, Mock };

struct RetryPolicy {
  int max_tries = 5;
  double base_delay = 1.0;  // seconds
  double factor = 2.0;
};

struct BackendConfig {
  Mode mode = Mode::Mock;
  std::string endpoint;  // e.g. https://api.openai.com/v1
  std::string model;
  std::string embedding_model;
  double temperature = 1.0;
  double reflection_temperature = 0.7;
  double timeout = 120.0;  // seconds
  RetryPolicy retry;
  std::string api_key_env = "EVOPLACE_API_KEY";
  std::uint64_t seed = 0;
  int max_in_flight = 8;
  int embedding_dim = 256;
  /// Mock only: share of code-producing replies that omit the fence.
  double mock_unfenced_rate = 0.02;

  /// Remote needs endpoint and model. Throws InvalidConfig.
  void validate() const;
};

enum class EmbeddingSource { Remote, Hash };

struct EmbeddingVector {
  std::vector<double> values;
  int dim = 0;
  EmbeddingSource source = EmbeddingSource::Hash;
  bool zero = false;  // set for empty input; values are all 0
};

/// Signed character-3-gram hashing, L2-normalized.
EmbeddingVector hash_embed(std::string_view text, int dim = 256);
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// ---- transport ----------------------------------------------------------

struct HttpResponse {
  int status = 0;  // 0 when the request never completed
  std::string body;
  bool timed_out = false;
  std::string error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& endpoint, const std::string& path, const std::string& body,
                            const std::map<std::string, std::string>& headers, double timeout) = 0;
};

/// HTTPS via cpp-httplib.
std::shared_ptr<Transport> make_http_transport();

/// Throws TransportError on any use; lets tests prove a path is offline.
class ForbiddenTransport : public Transport {
 public:
  HttpResponse post(const std::string&, const std::string&, const std::string&,
                    const std::map<std::string, std::string>&, double) override;
  int attempts() const { return attempts_; }

 private:
  int attempts_ = 0;
};

using Sleeper = std::function<void(double seconds)>;

struct CallRecord {
  std::string kind;  // chat | embed
  std::string request_hash;
  std::string request;  // JSON text of the request body
  std::string response;
  double latency = 0.0;
  int attempts = 0;
  std::string error;
};

/// FIFO admission with a cap on concurrent holders.
class FairLimiter {
 public:
  explicit FairLimiter(int capacity) : capacity_(capacity) {}
  void acquire();
  void release();
  int peak() const { return peak_; }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t next_admit_ = 0;
  int in_flight_ = 0;
  int capacity_;
  int peak_ = 0;
};

class Gateway {
 public:
  explicit Gateway(BackendConfig cfg, std::shared_ptr<Transport> transport = nullptr, Sleeper sleeper = nullptr);

  const BackendConfig& config() const { return cfg_; }

  /// request_seed makes mock replies independent per call site.
  /// `record`, when given, receives the exchange metadata (request hash etc.).
  std::string chat(const std::vector<Message>& messages, std::uint64_t request_seed,
                   std::optional<double> temperature = std::nullopt, CallRecord* record = nullptr);
  EmbeddingVector embed(const std::string& text);

  /// Receives every remote exchange (and mock ones, for replay).
  void set_recorder(std::function<void(const CallRecord&)> recorder) { recorder_ = std::move(recorder); }
  int peak_in_flight() const { return limiter_.peak(); }

 private:
  std::string post_json(const std::string& kind, const std::string& path, const std::string& body,
                        CallRecord& record);

  BackendConfig cfg_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleeper_;
  FairLimiter limiter_;
  std::function<void(const CallRecord&)> recorder_;
};

/// Parses an OpenAI-style chat completion body; MalformedResponse otherwise.
std::string parse_chat_response(const std::string& body);
std::vector<double> parse_embedding_response(const std::string& body);

// ---- mock model ----------------------------------------------------------

/// Grammar-directed random program for `kind`; always parses and checks.
std::string mock_generate(std::uint64_t seed, dsl::Kind kind);

enum class MutationOp { ConstantPerturbation, BuiltinSubstitution, SubtreeRegeneration, FeatureSwap };

/// One local edit of `source`, chosen by seed. Throws ParseError/TypeError
/// when the input is not a valid program of `kind`.
std::string mock_mutate(std::uint64_t seed, std::string_view source, dsl::Kind kind,
                        MutationOp* applied = nullptr);

/// Offline stand-in for a chat model. Reads the step marker embedded in the
/// prompts and answers in kind.
std::string mock_reply(std::uint64_t seed, const std::vector<Message>& messages, double unfenced_rate);

/// Marker placed in every pipeline prompt so the mock knows what is asked.
std::string step_marker(std::string_view step, dsl::Kind kind, std::string_view outcome = {});

}  // namespace evoplace::llm
