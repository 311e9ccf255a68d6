// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <string>

#include <nlohmann/json.hpp>

namespace divproxy {

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_backoff{500};
  std::chrono::milliseconds max_backoff{30'000};
};

// Delay before retry number `attempt` (1-based): base * 2^(attempt-1), capped,
// with full jitter in [delay/2, delay].
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt);

struct HttpEndpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // absolute path, no trailing slash

  static HttpEndpoint parse(const std::string& url);
  HttpEndpoint join(const std::string& suffix) const;
  std::string url() const { return origin + path; }
};

struct HttpOptions {
  std::string bearer_token;
  std::chrono::seconds timeout{120};
  RetryPolicy retry;
};

// POSTs a JSON body and returns the decoded JSON reply. Connection failures,
// HTTP 429 and 5xx are retried per the policy and end in TransportError;
// other non-2xx statuses and undecodable bodies raise ProtocolError.
nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body,
                         const HttpOptions& options);

}  // namespace divproxy
