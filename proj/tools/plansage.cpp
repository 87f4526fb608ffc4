// plansage: catalog validation, one-off recommendations, the cosine vs KNN
// agreement harness, and the HTTP server.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "plansage/catalog.hpp"
#include "plansage/compare.hpp"
#include "plansage/pipeline.hpp"
#include "plansage/service.hpp"
#include "plansage/wire.hpp"

namespace {

using namespace plansage;
using nlohmann::json;

constexpr int kExitInvalid = 1;
constexpr int kExitNoCandidates = 4;

void print_violations(const std::vector<Violation>& violations) {
  for (const auto& v : violations) {
    std::cerr << "  line " << v.line << ": " << v.field << ": " << v.message << '\n';
  }
}

int run_validate(const std::string& catalog_path, const std::string& ratings_path) {
  bool valid = true;
  const auto report = inspect_catalog(catalog_path);
  std::cerr << "catalog: " << catalog_path << '\n';
  if (report.fatal) {
    std::cerr << report.fatal->what() << '\n';
    valid = false;
  } else {
    std::cerr << report.plans.size() << " plans, " << report.violations.size() << " violations\n";
    print_violations(report.violations);

    std::map<int, std::size_t> tiers;
    std::map<std::string_view, std::size_t> regions;
    for (const auto& p : report.plans) {
      ++tiers[p.premium_tier];
      ++regions[to_string(p.coverage_region)];
    }
    std::cerr << "tiers:";
    for (int t = kMinTier; t <= kMaxTier; ++t) std::cerr << ' ' << t << '=' << tiers[t];
    std::cerr << "\nregions: lagos=" << regions["lagos"] << " nationwide=" << regions["nationwide"] << '\n';
    std::cerr << "missing values:";
    if (report.missing.empty()) std::cerr << " none";
    for (const auto& [field, n] : report.missing) std::cerr << ' ' << field << '=' << n;
    std::cerr << '\n';
    if (!report.defaulted_rows.empty()) {
      std::cerr << report.defaulted_rows.size() << " rows had missing booleans defaulted to no\n";
    }
    valid = report.ok();
  }

  if (!ratings_path.empty()) {
    const auto ratings = inspect_ratings(ratings_path);
    std::cerr << "ratings: " << ratings_path << '\n';
    if (ratings.fatal) {
      std::cerr << ratings.fatal->what() << '\n';
    } else {
      std::cerr << ratings.ratings.size() << " hmos rated, " << ratings.violations.size() << " violations\n";
      print_violations(ratings.violations);
    }
    valid = valid && ratings.ok();
  }
  return valid ? kExitOk : kExitInvalid;
}

std::shared_ptr<const Snapshot> load_or_report(const std::string& catalog, const std::string& ratings) {
  try {
    return Snapshot::load(catalog, ratings);
  } catch (const CatalogError& e) {
    std::cerr << e.what() << '\n';
  }
  return nullptr;
}

int run_recommend(const std::string& catalog, const std::string& ratings, const std::string& pref_path,
                  const std::string& metric) {
  const auto snap = load_or_report(catalog, ratings);
  if (!snap) return kExitInvalid;

  std::ifstream in(pref_path);
  if (!in) {
    std::cerr << "cannot open " << pref_path << '\n';
    return kExitInvalid;
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    std::cerr << pref_path << ": " << e.what() << '\n';
    return kExitInvalid;
  }
  // a bare preference object is wrapped into a request
  if (!doc.is_object() || !doc.contains("preference")) doc = json{{"preference", doc}};
  if (!metric.empty()) doc["metric"] = metric;

  const auto response = respond_recommend(doc.dump(), *snap, Metric::Cosine);
  std::cout << response.body;
  if (response.code == "ok") return kExitOk;
  if (response.code == "no_candidates") {
    std::cerr << "no plan matches the requested location and tier\n";
    return kExitNoCandidates;
  }
  std::cerr << "request rejected: " << response.code << '\n';
  return kExitInvalid;
}

int run_compare(const std::string& catalog, const std::string& ratings, std::size_t trials,
                std::uint64_t seed) {
  const auto snap = load_or_report(catalog, ratings);
  if (!snap) return kExitInvalid;

  const auto prefs = generate_preferences(trials, seed);
  const auto report = compare_metrics(*snap, prefs);
  std::cout << render(to_json(report, seed));
  std::cerr << report.trials << " trials, " << report.evaluated << " evaluated; top-1 agreement "
            << report.top1_agreement_rate << ", mean top-3 jaccard " << report.mean_top3_jaccard
            << ", mean final jaccard " << report.mean_final_jaccard << '\n';
  return kExitOk;
}

int run_serve(std::string config_path) {
  if (config_path.empty()) {
    if (const char* env = std::getenv("PLANSAGE_CONFIG")) config_path = env;
  }
  if (config_path.empty()) {
    std::cerr << "no config: pass --config or set PLANSAGE_CONFIG\n";
    return kExitConfigError;
  }
  ServiceConfig config;
  try {
    config = ServiceConfig::load(config_path);
    config.validate();
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfigError;
  }

  const char* token = std::getenv("PLANSAGE_ADMIN_TOKEN");
  Service service(config, token ? token : "");
  try {
    service.load();
  } catch (const CatalogError& e) {
    std::cerr << e.what() << '\n';
    return kExitCatalogLoadFailure;
  }

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::thread waiter([signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    stop_server();
  });
  waiter.detach();

  return run_server(service);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plansage: health plan recommendation engine"};
  app.require_subcommand(1);

  std::string catalog;
  std::string ratings;

  auto* validate = app.add_subcommand("validate", "check a catalog (and ratings) file");
  validate->add_option("--catalog", catalog, "catalog file (.csv or .json)")->required();
  validate->add_option("--ratings", ratings, "ratings file (.csv or .json)");

  std::string pref_path;
  std::string metric;
  auto* recommend = app.add_subcommand("recommend", "print top-3 recommendations as JSON");
  recommend->add_option("--catalog", catalog)->required();
  recommend->add_option("--ratings", ratings)->required();
  recommend->add_option("--pref", pref_path, "preference or request JSON file")->required();
  recommend->add_option("--metric", metric)->check(CLI::IsMember({"cosine", "knn"}));

  std::size_t trials = 0;
  std::uint64_t seed = 0;
  auto* compare = app.add_subcommand("compare", "cosine vs KNN agreement over seeded preferences");
  compare->add_option("--catalog", catalog)->required();
  compare->add_option("--ratings", ratings)->required();
  compare->add_option("--trials", trials)->required()->check(CLI::PositiveNumber);
  compare->add_option("--seed", seed)->required();

  std::string config_path;
  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  serve->add_option("--config", config_path, "config JSON (default: $PLANSAGE_CONFIG)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  if (*validate) return run_validate(catalog, ratings);
  if (*recommend) return run_recommend(catalog, ratings, pref_path, metric);
  if (*compare) return run_compare(catalog, ratings, trials, seed);
  return run_serve(config_path);
}
