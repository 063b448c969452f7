#pragma once

#include <chrono>
#include <map>
#include <string>

#include <json.hpp>

namespace dqa::http {

struct Response {
  int status = 0;
  std::string body;
};

/// POSTs a JSON body to an absolute http(s) URL. Throws TransportError when
/// no HTTP response arrives (connection refused, timeout, bad URL).
Response post_json(const std::string& url, const nlohmann::json& body,
                   std::chrono::milliseconds timeout,
                   const std::map<std::string, std::string>& headers = {});

/// post_json with a single attempt that requires a 2xx JSON reply.
/// Throws ServiceError on other statuses or an unparseable body.
nlohmann::json post_json_expect_ok(const std::string& url, const nlohmann::json& body,
                                   std::chrono::milliseconds timeout);

}  // namespace dqa::http
