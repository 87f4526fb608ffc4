#include <gtest/gtest.h>

#include <chrono>
#include <csignal>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <thread>

#include <nlohmann/json.hpp>

#include "test_support.hpp"

// after Eigen: <resolv.h> defines a _res macro that collides with Eigen internals
#include <httplib.h>

using namespace plansage::test;
using nlohmann::json;

namespace {

const std::string kCli = PLANSAGE_CLI_PATH;

std::string quoted(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

std::pair<int, std::string> cli(const std::string& args, bool merge_stderr = false) {
  return run_command(kCli + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null"));
}

std::string sample_args() {
  return "--catalog " + quoted(sample_catalog()) + " --ratings " + quoted(sample_ratings());
}

constexpr const char* kDentalTelePref = R"({"location": "lagos", "max_tier": 1,
    "desired": {"dental_care": true, "telemedicine": true, "cashback_benefit": true}})";

// Bind to port 0 and release it. An httplib probe server would keep its
// listening socket open and swallow the first client connection.
int free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t len = sizeof addr;
  int port = -1;
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0 &&
      ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) == 0) {
    port = ntohs(addr.sin_port);
  }
  ::close(fd);
  return port;
}

}  // namespace

TEST(CliValidate, SampleCatalogIsClean) {
  const auto [code, out] = cli("validate " + sample_args(), true);
  EXPECT_EQ(code, 0) << out;
  EXPECT_NE(out.find("148 plans, 0 violations"), std::string::npos) << out;
  EXPECT_NE(out.find("tiers: 1=30 2=48 3=38 4=32"), std::string::npos) << out;
  EXPECT_NE(out.find("missing values: none"), std::string::npos) << out;
}

TEST(CliValidate, EmptyAndBrokenFiles) {
  auto [code, out] = cli("validate --catalog " + quoted(fixture_dir() / "empty.csv"), true);
  EXPECT_EQ(code, 1);
  EXPECT_NE(out.find("EmptyCatalog"), std::string::npos) << out;

  std::tie(code, out) = cli("validate --catalog " + quoted(fixture_dir() / "header_only.csv"), true);
  EXPECT_EQ(code, 1);
  EXPECT_NE(out.find("EmptyCatalog"), std::string::npos) << out;

  std::tie(code, out) = cli("validate --catalog " + quoted(fixture_dir() / "bad_rows.csv"), true);
  EXPECT_EQ(code, 1);
  EXPECT_NE(out.find("3 plans, 2 violations"), std::string::npos) << out;
  EXPECT_NE(out.find("line 3"), std::string::npos) << out;
  EXPECT_NE(out.find("line 5"), std::string::npos) << out;

  std::tie(code, out) = cli("validate --catalog " + quoted(fixture_dir() / "ten_plans.csv") + " --ratings " +
                            quoted(fixture_dir() / "ratings_dup.csv"), true);
  EXPECT_EQ(code, 1);
  EXPECT_NE(out.find("line 4"), std::string::npos) << out;

  std::tie(code, out) = cli("validate --catalog /nonexistent/c.csv", true);
  EXPECT_EQ(code, 1);
  EXPECT_NE(out.find("Unreadable"), std::string::npos) << out;
}

TEST(CliRecommend, DentalTele) {
  TempDir dir;
  const auto pref = dir.write("pref.json", kDentalTelePref);
  const auto [code, out] = cli("recommend " + sample_args() + " --pref " + quoted(pref));
  ASSERT_EQ(code, 0) << out;
  const auto j = json::parse(out);
  EXPECT_EQ(j["code"], "ok");
  EXPECT_EQ(j["metric"], "cosine");
  ASSERT_EQ(j["recommendations"].size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(j["recommendations"][i]["rank"], i + 1);

  const auto [code2, knn] = cli("recommend " + sample_args() + " --pref " + quoted(pref) + " --metric knn");
  EXPECT_EQ(code2, 0);
  EXPECT_EQ(json::parse(knn)["metric"], "knn");
}

TEST(CliRecommend, ByteIdenticalAcrossRuns) {
  TempDir dir;
  const auto pref = dir.write("pref.json", kDentalTelePref);
  const auto first = cli("recommend " + sample_args() + " --pref " + quoted(pref));
  for (int i = 0; i < 3; ++i) EXPECT_EQ(cli("recommend " + sample_args() + " --pref " + quoted(pref)), first);
}

TEST(CliRecommend, GoldenOutput) {
  const auto [code, out] = cli("recommend --catalog " + quoted(fixture_dir() / "golden_catalog.csv") +
                               " --ratings " + quoted(fixture_dir() / "golden_ratings.csv") + " --pref " +
                               quoted(fixture_dir() / "golden_request.json"));
  EXPECT_EQ(code, 0);
  EXPECT_EQ(out, read_text(fixture_dir() / "golden_response.json"));
}

TEST(CliRecommend, ExitCodes) {
  TempDir dir;
  const auto tier1 = dir.write("t1.json", R"({"location": "lagos", "max_tier": 1, "desired": {"dental_care": true}})");
  auto [code, out] = cli("recommend --catalog " + quoted(fixture_dir() / "tier4_only.csv") + " --ratings " +
                         quoted(fixture_dir() / "ratings_three.csv") + " --pref " + quoted(tier1));
  EXPECT_EQ(code, 4);
  EXPECT_EQ(json::parse(out)["code"], "no_candidates");

  const auto bad = dir.write("bad.json", R"({"location": "lagos", "max_tier": 0})");
  std::tie(code, out) = cli("recommend " + sample_args() + " --pref " + quoted(bad));
  EXPECT_EQ(code, 1);
  EXPECT_EQ(json::parse(out)["errors"][0]["field"], "preference.max_tier");

  const auto zero = dir.write("zero.json", R"({"location": "lagos", "max_tier": 2})");
  std::tie(code, out) = cli("recommend " + sample_args() + " --pref " + quoted(zero));
  EXPECT_EQ(code, 1);
  EXPECT_EQ(json::parse(out)["code"], "empty_preference");

  std::tie(code, out) = cli("recommend " + sample_args() + " --pref " + quoted(dir / "missing.json"));
  EXPECT_EQ(code, 1);
  std::tie(code, out) = cli("recommend " + sample_args() + " --pref " + quoted(tier1) + " --metric manhattan");
  EXPECT_EQ(code, 1);
  std::tie(code, out) = cli("frobnicate");
  EXPECT_EQ(code, 1);
}

TEST(CliCompare, DeterministicForSeed) {
  const auto a = cli("compare " + sample_args() + " --trials 200 --seed 7");
  const auto b = cli("compare " + sample_args() + " --trials 200 --seed 7");
  ASSERT_EQ(a.first, 0);
  EXPECT_EQ(a, b);
  const auto j = json::parse(a.second);
  EXPECT_EQ(j["trials"], 200);
  EXPECT_EQ(j["seed"], 7);
  EXPECT_NE(cli("compare " + sample_args() + " --trials 200 --seed 8").second, a.second);
}

TEST(CliServe, ConfigAndCatalogFailures) {
  TempDir dir;
  auto serve = [&](const std::string& config_json) {
    const auto cfg = dir.write("config.json", config_json);
    return cli("serve --config " + quoted(cfg)).first;
  };
  EXPECT_EQ(serve("{"), 2);
  EXPECT_EQ(serve(R"({"listen_address": "127.0.0.1:0", "catalog_path": "x", "ratings_path": "y"})"), 2);
  EXPECT_EQ(serve(R"({"listen_address": "127.0.0.1:8080", "catalog_path": "missing.csv",
                      "ratings_path": "missing.csv"})"),
            2);
  EXPECT_EQ(run_command("env -u PLANSAGE_CONFIG " + kCli + " serve 2>/dev/null").first, 2);

  dir.write("empty.csv", "");
  dir.write("ratings.csv", read_text(sample_ratings()));
  EXPECT_EQ(serve(R"({"listen_address": "127.0.0.1:8080", "catalog_path": "empty.csv",
                      "ratings_path": "ratings.csv"})"),
            3);
}

TEST(CliServe, ServesAndStopsOnSigterm) {
  TempDir dir;
  const int port = free_port();
  ASSERT_GT(port, 0);
  const auto cfg = dir.write("config.json", json{{"listen_address", "127.0.0.1:" + std::to_string(port)},
                                                 {"catalog_path", sample_catalog().string()},
                                                 {"ratings_path", sample_ratings().string()}}
                                                .dump());
  const pid_t pid = ::fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    std::freopen("/dev/null", "w", stderr);
    ::setenv("PLANSAGE_CONFIG", cfg.c_str(), 1);
    ::execl(kCli.c_str(), kCli.c_str(), "serve", static_cast<char*>(nullptr));
    ::_exit(127);
  }

  {
    httplib::Client client("127.0.0.1", port);
    httplib::Result res;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
    while (std::chrono::steady_clock::now() < deadline) {
      res = client.Get("/api/v1/health");
      if (res) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    ASSERT_TRUE(res) << "server did not come up";
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body)["catalog_size"], 148);
  }

  ::kill(pid, SIGTERM);
  int status = 0;
  ::waitpid(pid, &status, 0);
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
}
