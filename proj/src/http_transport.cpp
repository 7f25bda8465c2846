#include <httplib.h>

#include "evoplace/error.hpp"
#include "evoplace/llm.hpp"

namespace evoplace::llm {

namespace {

// "https://host:443/v1" -> ("https://host:443", "/v1")
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidConfig, "endpoint needs a scheme: " + endpoint);
  const auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {endpoint, ""};
  std::string base = endpoint.substr(path_start);
  while (!base.empty() && base.back() == '/') base.pop_back();
  return {endpoint.substr(0, path_start), base};
}

class HttpTransport : public Transport {
 public:
  HttpResponse post(const std::string& endpoint, const std::string& path, const std::string& body,
                    const std::map<std::string, std::string>& headers, double timeout) override {
    const auto [host, base] = split_endpoint(endpoint);
    httplib::Client client(host);
    const auto sec = static_cast<time_t>(timeout);
    const auto usec = static_cast<time_t>((timeout - static_cast<double>(sec)) * 1e6);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(base + path, h, body, "application/json");
    HttpResponse out;
    if (!res) {
      const auto err = res.error();
      out.timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
      out.error = httplib::to_string(err);
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }
};

}  // namespace

std::shared_ptr<Transport> make_http_transport() { return std::make_shared<HttpTransport>(); }

}  // namespace evoplace::llm
