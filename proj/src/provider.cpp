#include "actionsense/provider.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "actionsense/text.hpp"

namespace actionsense::provider {

using nlohmann::json;

ResponseCache::ResponseCache(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path ResponseCache::entry_path(const std::string& ns, const std::string& key) const {
  return root_ / ns / (text::sha256_hex(key) + ".json");
}

std::optional<json> ResponseCache::get(const std::string& ns, const std::string& key) const {
  auto path = entry_path(ns, key);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    json doc = json::parse(in);
    // entries store their key so hash collisions and stale files are detectable
    if (!doc.contains("key") || doc.at("key") != key) return std::nullopt;
    return doc.at("value");
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& ns, const std::string& key, const json& value) const {
  auto path = entry_path(ns, key);
  std::error_code ec;
  if (std::filesystem::exists(path, ec)) return;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create cache dir " + path.parent_path().string());

  static std::mutex counter_mutex;
  static std::mt19937_64 counter_rng(std::random_device{}());
  unsigned long long salt;
  {
    std::lock_guard<std::mutex> lock(counter_mutex);
    salt = counter_rng();
  }
  auto tmp = path;
  tmp += ".tmp" + std::to_string(salt);
  {
    std::ofstream out(tmp);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out << json{{"key", key}, {"value", value}}.dump();
  }
  if (std::filesystem::exists(path, ec)) {
    std::filesystem::remove(tmp, ec);
    return;
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) std::filesystem::remove(tmp, ec);
}

std::string ResponseCache::digest(const std::string& ns) const {
  std::error_code ec;
  auto dir = root_ / ns;
  if (!std::filesystem::is_directory(dir, ec)) return "";
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.path().extension() == ".json") names.push_back(entry.path().filename().string());
  }
  if (names.empty()) return "";
  std::sort(names.begin(), names.end());
  return text::sha256_hex(text::join(names, "\n"));
}

JsonHttpClient::JsonHttpClient(std::string endpoint, std::chrono::seconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {
  std::string rest = endpoint_;
  const std::string scheme = "http://";
  if (rest.rfind(scheme, 0) == 0) {
    rest = rest.substr(scheme.size());
  } else if (rest.find("://") != std::string::npos) {
    throw Error(ErrorCode::kConfigError, "only http:// endpoints are supported: " + endpoint_);
  }
  auto slash = rest.find('/');
  std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : rest.substr(slash);
  auto colon = hostport.rfind(':');
  if (colon != std::string::npos) {
    host_ = hostport.substr(0, colon);
    try {
      port_ = std::stoi(hostport.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfigError, "bad port in endpoint " + endpoint_);
    }
  } else {
    host_ = hostport;
  }
  if (host_.empty()) throw Error(ErrorCode::kConfigError, "bad endpoint " + endpoint_);
}

json JsonHttpClient::post(const json& body) const {
  httplib::Client client(host_, port_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  httplib::Headers headers;
  if (const char* token = std::getenv(kCredentialsEnv); token && *token) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kProviderError,
                endpoint_ + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kProviderError,
                endpoint_ + ": HTTP " + std::to_string(res->status));
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kProviderError, endpoint_ + ": invalid JSON response: " + e.what());
  }
}

}  // namespace actionsense::provider
