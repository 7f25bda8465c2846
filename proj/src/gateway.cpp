#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "evoplace/error.hpp"
#include "evoplace/llm.hpp"
#include "evoplace/rng.hpp"

namespace evoplace::llm {

using nlohmann::json;

void BackendConfig::validate() const {
  if (mode == Mode::Remote) {
    if (endpoint.empty()) throw Error(ErrorCode::InvalidConfig, "remote backend needs an endpoint");
    if (model.empty()) throw Error(ErrorCode::InvalidConfig, "remote backend needs a model name");
  }
  if (retry.max_tries < 1) throw Error(ErrorCode::InvalidConfig, "retry.max_tries must be >= 1");
  if (max_in_flight < 1) throw Error(ErrorCode::InvalidConfig, "max_in_flight must be >= 1");
  if (embedding_dim < 16) throw Error(ErrorCode::InvalidConfig, "embedding_dim must be >= 16");
  if (!(timeout > 0.0)) throw Error(ErrorCode::InvalidConfig, "timeout must be positive");
}

HttpResponse ForbiddenTransport::post(const std::string& endpoint, const std::string&, const std::string&,
                                      const std::map<std::string, std::string>&, double) {
  ++attempts_;
  throw Error(ErrorCode::TransportError, "network use forbidden in this context: " + endpoint);
}

void FairLimiter::acquire() {
  std::unique_lock lock(mu_);
  const std::uint64_t ticket = next_ticket_++;
  cv_.wait(lock, [&] { return ticket == next_admit_ && in_flight_ < capacity_; });
  ++next_admit_;
  ++in_flight_;
  peak_ = std::max(peak_, in_flight_);
  cv_.notify_all();
}

void FairLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_all();
}

namespace {

struct Slot {
  FairLimiter& l;
  explicit Slot(FairLimiter& lim) : l(lim) { l.acquire(); }
  ~Slot() { l.release(); }
};

std::string messages_key(const std::vector<Message>& messages) {
  std::string key;
  for (const Message& m : messages) {
    key += m.role;
    key += '\x1f';
    key += m.content;
    key += '\x1e';
  }
  return key;
}

}  // namespace

std::string parse_chat_response(const std::string& body) {
  try {
    const json j = json::parse(body);
    const json& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw Error(ErrorCode::MalformedResponse, "content is not a string");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("unreadable chat response: ") + e.what());
  }
}

std::vector<double> parse_embedding_response(const std::string& body) {
  try {
    const json j = json::parse(body);
    auto v = j.at("data").at(0).at("embedding").get<std::vector<double>>();
    if (v.empty()) throw Error(ErrorCode::MalformedResponse, "empty embedding");
    return v;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("unreadable embedding response: ") + e.what());
  }
}

Gateway::Gateway(BackendConfig cfg, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), sleeper_(std::move(sleeper)),
      limiter_(cfg_.max_in_flight) {
  cfg_.validate();
  if (!sleeper_)
    sleeper_ = [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
  if (!transport_ && cfg_.mode == Mode::Remote) transport_ = make_http_transport();
}

std::string Gateway::post_json(const std::string& kind, const std::string& path, const std::string& body,
                               CallRecord& record) {
  const char* key = std::getenv(cfg_.api_key_env.c_str());
  if (key == nullptr || *key == '\0')
    throw Error(ErrorCode::AuthError, "environment variable " + cfg_.api_key_env + " is not set");
  const std::map<std::string, std::string> headers = {{"Authorization", std::string("Bearer ") + key}};

  record.kind = kind;
  record.request = body;
  record.request_hash = hash_hex(body);

  Slot slot(limiter_);
  const auto t0 = std::chrono::steady_clock::now();
  HttpResponse last;
  for (int attempt = 1; attempt <= cfg_.retry.max_tries; ++attempt) {
    record.attempts = attempt;
    try {
      last = transport_->post(cfg_.endpoint, path, body, headers, cfg_.timeout);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TransportError) throw;
      last = HttpResponse{};
      last.error = e.what();
    }
    if (last.status >= 200 && last.status < 300) {
      record.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      record.response = last.body;
      return last.body;
    }
    if (last.status == 401 || last.status == 403)
      throw Error(ErrorCode::AuthError, "backend rejected credentials (HTTP " + std::to_string(last.status) + ")");
    const bool retryable = last.status == 0 || last.status == 429 || last.status >= 500;
    if (!retryable) break;
    if (attempt < cfg_.retry.max_tries)
      sleeper_(cfg_.retry.base_delay * std::pow(cfg_.retry.factor, attempt - 1));
  }
  record.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (last.status == 429) throw Error(ErrorCode::RateLimited, "rate limited after retries");
  if (last.timed_out) throw Error(ErrorCode::Timeout, "request timed out: " + last.error);
  if (last.status == 0) throw Error(ErrorCode::TransportError, "transport failure: " + last.error);
  throw Error(ErrorCode::TransportError, "HTTP " + std::to_string(last.status) + ": " + last.body.substr(0, 200));
}

std::string Gateway::chat(const std::vector<Message>& messages, std::uint64_t request_seed,
                          std::optional<double> temperature, CallRecord* record_out) {
  if (messages.empty()) throw Error(ErrorCode::InvalidArgument, "chat needs at least one message");
  const double temp = temperature.value_or(cfg_.temperature);
  json req = {{"model", cfg_.model}, {"temperature", temp}, {"messages", json::array()}};
  for (const Message& m : messages) req["messages"].push_back({{"role", m.role}, {"content", m.content}});

  CallRecord record;
  if (cfg_.mode == Mode::Mock) {
    Slot slot(limiter_);
    const std::string body = req.dump();
    record.kind = "chat";
    record.request = body;
    record.request_hash = hash_hex(body);
    record.attempts = 1;
    const std::uint64_t seed = derive_seed(cfg_.seed, {request_seed, fnv1a(messages_key(messages))});
    record.response = mock_reply(seed, messages, cfg_.mock_unfenced_rate);
    if (recorder_) recorder_(record);
    if (record_out) *record_out = record;
    return record.response;
  }
  try {
    const std::string body = post_json("chat", "/chat/completions", req.dump(), record);
    std::string text = parse_chat_response(body);
    if (recorder_) recorder_(record);
    if (record_out) *record_out = record;
    return text;
  } catch (const Error& e) {
    record.error = e.what();
    if (recorder_ && !record.request.empty()) recorder_(record);
    if (record_out) *record_out = record;
    throw;
  }
}

EmbeddingVector Gateway::embed(const std::string& text) {
  if (text.empty()) throw Error(ErrorCode::InvalidArgument, "embed needs non-empty text");
  if (cfg_.mode == Mode::Mock || cfg_.embedding_model.empty()) return hash_embed(text, cfg_.embedding_dim);
  const json req = {{"model", cfg_.embedding_model}, {"input", text}};
  CallRecord record;
  try {
    const std::string body = post_json("embed", "/embeddings", req.dump(), record);
    EmbeddingVector out;
    out.values = parse_embedding_response(body);
    out.dim = static_cast<int>(out.values.size());
    out.source = EmbeddingSource::Remote;
    double norm = 0.0;
    for (double v : out.values) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm)) throw Error(ErrorCode::MalformedResponse, "degenerate embedding");
    for (double& v : out.values) v /= norm;
    if (recorder_) recorder_(record);
    return out;
  } catch (const Error& e) {
    record.error = e.what();
    if (recorder_ && !record.request.empty()) recorder_(record);
    throw;
  }
}

}  // namespace evoplace::llm
