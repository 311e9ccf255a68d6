// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include "divproxy/http.hpp"

#include <httplib.h>

#include <random>
#include <thread>

#include "divproxy/error.hpp"

namespace divproxy {

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt) {
  using std::chrono::milliseconds;
  const int shift = std::clamp(attempt - 1, 0, 30);
  const auto base = policy.base_backoff.count();
  const auto capped = std::min<long long>(base << shift, policy.max_backoff.count());
  if (capped <= 1) return milliseconds(capped);
  thread_local std::mt19937_64 rng{std::random_device{}()};
  std::uniform_int_distribution<long long> jitter(capped / 2, capped);
  return milliseconds(jitter(rng));
}

HttpEndpoint HttpEndpoint::parse(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw UsageError("url '" + url + "' has no scheme (expected http:// or https://)");
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw UsageError("url '" + url + "' has unsupported scheme '" + scheme + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  HttpEndpoint ep;
  ep.origin = url.substr(0, path_start);
  ep.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!ep.path.empty() && ep.path.back() == '/') ep.path.pop_back();
  if (ep.origin.size() <= scheme_end + 3) throw UsageError("url '" + url + "' has no host");
  return ep;
}

HttpEndpoint HttpEndpoint::join(const std::string& suffix) const {
  HttpEndpoint ep = *this;
  if (suffix.empty()) return ep;
  ep.path += (suffix.front() == '/' ? "" : "/") + suffix;
  return ep;
}

nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body,
                         const HttpOptions& options) {
  httplib::Client client(endpoint.origin);
  if (!client.is_valid())
    throw UsageError("cannot create HTTP client for '" + endpoint.origin +
                     "' (https requires a build with OpenSSL)");
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(options.timeout);
  client.set_write_timeout(options.timeout);

  httplib::Headers headers;
  if (!options.bearer_token.empty())
    headers.emplace("Authorization", "Bearer " + options.bearer_token);
  const std::string payload = body.dump();
  const std::string path = endpoint.path.empty() ? "/" : endpoint.path;

  const int attempts = std::max(1, options.retry.max_attempts);
  std::string last_failure;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(backoff_delay(options.retry, attempt - 1));
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_failure = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300)
      throw ProtocolError("POST " + endpoint.url() + " returned HTTP " +
                          std::to_string(res->status) + ": " + res->body.substr(0, 200));
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError("POST " + endpoint.url() + " returned invalid JSON: " + e.what());
    }
  }
  throw TransportError("POST " + endpoint.url() + " failed after " + std::to_string(attempts) +
                       " attempts (" + last_failure + ")");
}

}  // namespace divproxy
