// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include "divproxy/hashing.hpp"

#include <cstdio>

namespace divproxy {

std::string fingerprint_hex(std::string_view bytes) {
  const std::uint64_t lo = fnv1a64(bytes);
  const std::uint64_t hi = splitmix64(fnv1a64(bytes, 0x84222325cbf29ce4ULL) ^ lo);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return buf;
}

std::string join_fields(std::initializer_list<std::string_view> fields) {
  std::string out;
  for (auto f : fields) {
    out += std::to_string(f.size());
    out += ':';
    out += f;
  }
  return out;
}

}  // namespace divproxy
