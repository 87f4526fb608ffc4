#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "plansage/catalog.hpp"
#include "plansage/simeng.hpp"

namespace plansage {

inline constexpr std::size_t kRecommendationCount = 3;

class NoCandidatesError : public std::runtime_error {
 public:
  NoCandidatesError() : std::runtime_error("no plan matches the requested location and tier") {}
};

class EmptyPreferenceError : public std::runtime_error {
 public:
  EmptyPreferenceError()
      : std::runtime_error(
            "preference selects no features; choose at least one feature for cosine matching") {}
};

class PlanIndex {
 public:
  explicit PlanIndex(std::span<const PlanRecord> plans);

  /// nullptr when unknown.
  const PlanRecord* find(std::string_view plan_id) const;

 private:
  std::unordered_map<std::string_view, const PlanRecord*> by_id_;
};

/// Immutable catalog + ratings state with the plan vectors pre-encoded.
/// Shared between concurrent readers through shared_ptr<const Snapshot>.
class Snapshot {
 public:
  /// Throws std::invalid_argument on duplicate plan ids.
  Snapshot(std::vector<PlanRecord> plans, RatingsMap ratings);

  Snapshot(const Snapshot&) = delete;
  Snapshot& operator=(const Snapshot&) = delete;

  /// Loads both files; throws CatalogError.
  static std::shared_ptr<const Snapshot> load(const std::filesystem::path& catalog,
                                              const std::filesystem::path& ratings);

  const std::vector<PlanRecord>& plans() const { return plans_; }
  const RatingsMap& ratings() const { return ratings_; }
  const PlanIndex& index() const { return index_; }
  /// Encoding schema bound to a fingerprint of the snapshot's content.
  const EncodingSchema& schema() const { return schema_; }
  const FeatureVector& encoded(std::size_t i) const { return encoded_[i]; }

  /// Mean rating of an HMO, 0 when it has none on file.
  double rating_of(std::string_view hmo_id) const;

 private:
  std::vector<PlanRecord> plans_;
  RatingsMap ratings_;
  PlanIndex index_;
  EncodingSchema schema_;
  std::vector<FeatureVector> encoded_;
};

/// Content fingerprint (16 hex digits) of a catalog and its ratings.
std::string fingerprint(std::span<const PlanRecord> plans, const RatingsMap& ratings);

struct RecommendationRequest {
  UserPreference preference;
  Metric metric = Metric::Cosine;
  std::size_t pool_size = kDefaultPoolSize;
};

struct Recommendation {
  int rank = 0;
  std::string plan_id;
  std::string hmo_id;
  std::string hmo_name;
  std::string plan_name;
  int premium_tier = kMinTier;
  double similarity_score = 0.0;
  double mean_rating = 0.0;
  std::vector<std::string> matched_features;

  bool operator==(const Recommendation&) const = default;
};

/// A Lagos user is reachable by Lagos-only and nationwide plans; a
/// nationwide user only by nationwide plans.
bool region_compatible(Location user, CoverageRegion plan);
bool passes_filter(const PlanRecord& plan, const UserPreference& pref);

std::vector<PlanRecord> prefilter(std::span<const PlanRecord> plans, const UserPreference& pref);

/// Top three of `pool` by rating (missing => 0), then pool position, then
/// plan_id. `pool` must already be in similarity order.
std::vector<ScoredCandidate> rerank_by_rating(std::span<const ScoredCandidate> pool,
                                              const RatingsMap& ratings, const PlanIndex& plans);

/// Requests below three are raised to three.
std::size_t effective_pool_size(std::size_t requested);

/// Similarity pool before rerank: filter, encode, rank_candidates.
/// Throws EmptyPreferenceError or NoCandidatesError.
std::vector<ScoredCandidate> similarity_pool(const RecommendationRequest& request,
                                             const Snapshot& snapshot);

std::vector<Recommendation> recommend(const RecommendationRequest& request, const Snapshot& snapshot);

std::vector<std::string> matched_features(const PlanRecord& plan, const UserPreference& pref);

}  // namespace plansage
