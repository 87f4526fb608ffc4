#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "plansage/pipeline.hpp"

namespace httplib {
class Server;
}

namespace plansage {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitCatalogLoadFailure = 3;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path catalog_path;
  std::filesystem::path ratings_path;
  Metric default_metric = Metric::Cosine;
  std::vector<std::string> cors_allowed_origins;

  /// Relative paths are resolved against `base_dir`. Throws ConfigError.
  static ServiceConfig parse(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static ServiceConfig load(const std::filesystem::path& path);

  /// Port range and file existence. Throws ConfigError.
  void validate() const;
};

struct HttpReply {
  int status = 200;
  std::string body;
};

using QueryParams = std::multimap<std::string, std::string>;

/// Request handlers over an atomically swapped snapshot. Handlers are plain
/// member functions so they can be exercised without a socket; mount() wires
/// them onto an httplib server under /api/v1.
class Service {
 public:
  Service(ServiceConfig config, std::string admin_token);

  /// Reads the configured files and publishes the result. Throws
  /// CatalogError and leaves the current snapshot in place on failure.
  void load();

  std::shared_ptr<const Snapshot> snapshot() const;
  const ServiceConfig& config() const { return config_; }

  HttpReply recommend(std::string_view content_type, std::string_view body) const;
  HttpReply plans(const QueryParams& query) const;
  HttpReply health() const;
  /// `authorization` is the raw Authorization header ("Bearer <token>").
  HttpReply reload(std::string_view authorization);

  void mount(httplib::Server& server);

 private:
  void publish(std::shared_ptr<const Snapshot> next);

  ServiceConfig config_;
  std::string admin_token_;
  std::shared_ptr<const Snapshot> snapshot_;  // std::atomic_load / atomic_store only
  std::mutex reload_mutex_;
};

/// Blocks serving until stop_server() is called from another thread.
/// Returns a process exit code.
int run_server(Service& service);
void stop_server();

}  // namespace plansage
