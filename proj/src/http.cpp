#include "dqa/http.hpp"

#include <httplib.h>

#include "dqa/error.hpp"

namespace dqa::http {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("not an absolute URL: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

Response post_json(const std::string& url, const nlohmann::json& body,
                   std::chrono::milliseconds timeout,
                   const std::map<std::string, std::string>& headers) {
  auto [origin, path] = split_url(url);
  httplib::Client client(origin);
  if (!client.is_valid()) throw TransportError("cannot create client for " + origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);
  auto res = client.Post(path, hdrs, body.dump(), "application/json");
  if (!res) {
    throw TransportError("POST " + url + " failed: " + httplib::to_string(res.error()));
  }
  return {res->status, res->body};
}

nlohmann::json post_json_expect_ok(const std::string& url, const nlohmann::json& body,
                                   std::chrono::milliseconds timeout) {
  auto res = post_json(url, body, timeout);
  if (res.status < 200 || res.status >= 300) {
    throw ServiceError("POST " + url + " returned HTTP " + std::to_string(res.status));
  }
  try {
    return nlohmann::json::parse(res.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ServiceError("POST " + url + " returned malformed JSON: " + e.what());
  }
}

}  // namespace dqa::http
