#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plansage/pipeline.hpp"

namespace plansage {

/// Draws `n` preferences from std::mt19937_64 seeded with `seed`. Each
/// preference consumes ten raw 64-bit outputs in this order: one per service
/// feature in slot order (desired iff the top bit is set), one for the tier
/// (1 + value % 4), one for the location (Nationwide iff the top bit is set).
/// Ward and eye-care preferences are left unset.
std::vector<UserPreference> generate_preferences(std::size_t n, std::uint64_t seed);

struct TrialOutcome {
  std::size_t trial = 0;
  UserPreference preference;
  /// "ok", "no_candidates" or "empty_preference".
  std::string status;
  /// Similarity order before the rating rerank, truncated to three.
  std::vector<std::string> cosine_top;
  std::vector<std::string> knn_top;
  /// Final recommendations after the rerank.
  std::vector<std::string> cosine_final;
  std::vector<std::string> knn_final;
  bool top1_agree = false;
  double top3_jaccard = 0.0;
  double final_jaccard = 0.0;
};

struct AgreementReport {
  std::size_t trials = 0;
  /// Trials where both metrics produced a ranking.
  std::size_t evaluated = 0;
  std::size_t top1_agreements = 0;
  double top1_agreement_rate = 0.0;
  double mean_top3_jaccard = 0.0;
  double mean_final_jaccard = 0.0;
  std::vector<TrialOutcome> outcomes;
};

double jaccard(std::span<const std::string> a, std::span<const std::string> b);

/// Runs both metrics on every preference with the default pool size.
AgreementReport compare_metrics(const Snapshot& snapshot, std::span<const UserPreference> prefs);

nlohmann::json to_json(const AgreementReport& report, std::uint64_t seed);

}  // namespace plansage
