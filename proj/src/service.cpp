#include "plansage/service.hpp"

#include <atomic>
#include <fstream>
#include <iostream>

#include <httplib.h>

#include "plansage/wire.hpp"

namespace plansage {

namespace {

using nlohmann::json;

HttpReply reply(int status, const json& body) { return {status, render(body)}; }

HttpReply unavailable() {
  return reply(503, {{"status", "unavailable"},
                     {"code", "catalog_unavailable"},
                     {"message", "catalog is not loaded"}});
}

bool is_json_content_type(std::string_view ct) {
  const auto semi = ct.find(';');
  auto media = ct.substr(0, semi);
  while (!media.empty() && media.back() == ' ') media.remove_suffix(1);
  return media == "application/json";
}

json report_json(const CatalogReport& report) {
  json j = {{"rows", report.rows}, {"valid_plans", report.plans.size()},
            {"violations", to_json(report.violations)}};
  if (auto err = report.first_error()) j["error"] = err->what();
  return j;
}

json report_json(const RatingsReport& report) {
  json j = {{"rows", report.rows}, {"valid_ratings", report.ratings.size()},
            {"violations", to_json(report.violations)}};
  if (auto err = report.first_error()) j["error"] = err->what();
  return j;
}

std::atomic<httplib::Server*> g_running_server{nullptr};

}  // namespace

ServiceConfig ServiceConfig::parse(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ServiceConfig c;
  auto resolve = [&base_dir](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  try {
    const auto address = j.at("listen_address").get<std::string>();
    const auto colon = address.rfind(':');
    if (colon == std::string::npos) throw ConfigError("listen_address must be host:port");
    c.host = address.substr(0, colon);
    const auto port_text = address.substr(colon + 1);
    std::size_t used = 0;
    int port = 0;
    try {
      port = std::stoi(port_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != port_text.size() || port_text.empty()) {
      throw ConfigError("listen_address port is not a number: '" + port_text + "'");
    }
    c.port = port;
    c.catalog_path = resolve(j.at("catalog_path").get<std::string>());
    c.ratings_path = resolve(j.at("ratings_path").get<std::string>());
    if (j.contains("default_metric")) {
      const auto m = parse_metric(j["default_metric"].get<std::string>());
      if (!m) throw ConfigError("default_metric must be cosine or knn");
      c.default_metric = *m;
    }
    if (j.contains("cors_allowed_origins")) {
      c.cors_allowed_origins = j["cors_allowed_origins"].get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return c;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse(j, path.parent_path());
}

void ServiceConfig::validate() const {
  if (port < 1 || port > 65535) throw ConfigError("port must be in [1, 65535]");
  if (host.empty()) throw ConfigError("listen_address host is empty");
  if (!std::filesystem::exists(catalog_path)) {
    throw ConfigError("catalog_path does not exist: " + catalog_path.string());
  }
  if (!std::filesystem::exists(ratings_path)) {
    throw ConfigError("ratings_path does not exist: " + ratings_path.string());
  }
}

Service::Service(ServiceConfig config, std::string admin_token)
    : config_(std::move(config)), admin_token_(std::move(admin_token)) {}

std::shared_ptr<const Snapshot> Service::snapshot() const { return std::atomic_load(&snapshot_); }

void Service::publish(std::shared_ptr<const Snapshot> next) { std::atomic_store(&snapshot_, std::move(next)); }

void Service::load() {
  std::lock_guard lock(reload_mutex_);
  publish(Snapshot::load(config_.catalog_path, config_.ratings_path));
}

HttpReply Service::recommend(std::string_view content_type, std::string_view body) const {
  if (!is_json_content_type(content_type)) {
    return reply(415, {{"code", "unsupported_media_type"},
                       {"message", "Content-Type must be application/json"}});
  }
  const auto snap = snapshot();
  if (!snap) return unavailable();
  auto r = respond_recommend(body, *snap, config_.default_metric);
  return {r.status, std::move(r.body)};
}

HttpReply Service::plans(const QueryParams& query) const {
  std::vector<json> errors;
  std::optional<int> tier;
  std::optional<CoverageRegion> region;
  for (const auto& [key, value] : query) {
    if (key == "tier") {
      if (value.size() == 1 && value[0] >= '1' && value[0] <= '4') {
        tier = value[0] - '0';
      } else {
        errors.push_back({{"field", "tier"}, {"message", "must be 1, 2, 3 or 4"}});
      }
    } else if (key == "region") {
      region = parse_region(value);
      if (!region) errors.push_back({{"field", "region"}, {"message", "must be lagos or nationwide"}});
    } else {
      errors.push_back({{"field", key}, {"message", "unknown filter"}});
    }
  }
  if (!errors.empty()) {
    return reply(400, {{"code", "invalid_request"}, {"message", "invalid filter"}, {"errors", errors}});
  }

  const auto snap = snapshot();
  if (!snap) return unavailable();

  std::vector<const PlanRecord*> selected;
  for (const auto& p : snap->plans()) {
    if (tier && p.premium_tier != *tier) continue;
    if (region && p.coverage_region != *region) continue;
    selected.push_back(&p);
  }
  std::sort(selected.begin(), selected.end(),
            [](const PlanRecord* a, const PlanRecord* b) { return a->plan_id < b->plan_id; });
  json arr = json::array();
  for (const auto* p : selected) arr.push_back(to_json(*p));
  return reply(200, arr);
}

HttpReply Service::health() const {
  const auto snap = snapshot();
  if (!snap) return unavailable();
  return reply(200, {{"status", "ok"},
                     {"catalog_size", snap->plans().size()},
                     {"schema_id", snap->schema().id}});
}

HttpReply Service::reload(std::string_view authorization) {
  constexpr std::string_view kBearer = "Bearer ";
  if (admin_token_.empty() || !authorization.starts_with(kBearer) ||
      authorization.substr(kBearer.size()) != admin_token_) {
    return reply(401, {{"code", "unauthorized"}, {"message", "missing or invalid admin token"}});
  }

  std::lock_guard lock(reload_mutex_);
  auto catalog = inspect_catalog(config_.catalog_path);
  auto ratings = inspect_ratings(config_.ratings_path);
  if (!catalog.ok() || !ratings.ok()) {
    return reply(422, {{"code", "invalid_files"},
                       {"message", "reload rejected; previous catalog is still served"},
                       {"catalog", report_json(catalog)},
                       {"ratings", report_json(ratings)}});
  }
  auto next = std::make_shared<const Snapshot>(std::move(catalog.plans), std::move(ratings.ratings));
  publish(next);
  return reply(200, {{"code", "ok"}, {"catalog_size", next->plans().size()}, {"schema_id", next->schema().id}});
}

void Service::mount(httplib::Server& server) {
  auto send = [](httplib::Response& res, const HttpReply& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };

  server.Post("/api/v1/recommend", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, recommend(req.get_header_value("Content-Type"), req.body));
  });
  server.Get("/api/v1/plans", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, plans(QueryParams(req.params.begin(), req.params.end())));
  });
  server.Get("/api/v1/health", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, health());
  });
  server.Post("/api/v1/admin/reload", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, reload(req.get_header_value("Authorization")));
  });
  server.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });

  server.set_post_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    const auto origin = req.get_header_value("Origin");
    if (origin.empty()) return;
    const auto& allowed = config_.cors_allowed_origins;
    if (std::find(allowed.begin(), allowed.end(), origin) == allowed.end()) return;
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Vary", "Origin");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, Authorization");
  });
}

int run_server(Service& service) {
  httplib::Server server;
  service.mount(server);
  if (!server.bind_to_port(service.config().host, service.config().port)) {
    std::cerr << "cannot listen on " << service.config().host << ':' << service.config().port << '\n';
    return kExitConfigError;
  }
  g_running_server.store(&server);
  std::cerr << "listening on " << service.config().host << ':' << service.config().port << '\n';
  server.listen_after_bind();
  g_running_server.store(nullptr);
  return kExitOk;
}

void stop_server() {
  if (auto* s = g_running_server.load()) s->stop();
}

}  // namespace plansage
