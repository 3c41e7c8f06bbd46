#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "actionsense/error.hpp"

namespace actionsense::provider {

// Environment variable holding the bearer token sent to remote providers.
inline constexpr const char* kCredentialsEnv = "ACTIONSENSE_PROVIDER_TOKEN";

// Write-once, content-addressed response store. Entries live at
// <root>/<namespace>/<sha256(key)>.json and are never rewritten, so
// concurrent writers racing on one key leave a single valid file.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path root);

  std::optional<nlohmann::json> get(const std::string& ns, const std::string& key) const;
  void put(const std::string& ns, const std::string& key, const nlohmann::json& value) const;

  // sha256 over the sorted entry names of one namespace; "" when empty.
  std::string digest(const std::string& ns) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path entry_path(const std::string& ns, const std::string& key) const;

  std::filesystem::path root_;
};

// Minimal JSON-over-HTTP POST client. `endpoint` is "http://host:port/path".
class JsonHttpClient {
 public:
  explicit JsonHttpClient(std::string endpoint, std::chrono::seconds timeout = std::chrono::seconds(60));

  nlohmann::json post(const nlohmann::json& body) const;
  const std::string& endpoint() const { return endpoint_; }

 private:
  std::string endpoint_;
  std::string host_;
  int port_ = 80;
  std::string path_;
  std::chrono::seconds timeout_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds base_delay{200};
};

// Runs `fn` until it succeeds or the attempts run out. Only ProviderError is
// retried; the delay doubles after each failure.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
  auto delay = policy.base_delay;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kProviderError || attempt >= policy.attempts) throw;
    }
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

}  // namespace actionsense::provider
