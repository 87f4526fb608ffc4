#include "plansage/pipeline.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <numeric>

namespace plansage {

PlanIndex::PlanIndex(std::span<const PlanRecord> plans) {
  by_id_.reserve(plans.size());
  for (const auto& p : plans) {
    if (!by_id_.emplace(p.plan_id, &p).second) {
      throw std::invalid_argument("duplicate plan_id '" + p.plan_id + "'");
    }
  }
}

const PlanRecord* PlanIndex::find(std::string_view plan_id) const {
  const auto it = by_id_.find(plan_id);
  return it == by_id_.end() ? nullptr : it->second;
}

std::string fingerprint(std::span<const PlanRecord> plans, const RatingsMap& ratings) {
  // FNV-1a, 64 bit
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  feed(EncodingSchema::kBaseId);
  feed("\n");
  feed(catalog_to_csv(plans));
  char buf[64];
  for (const auto& [id, r] : ratings) {
    feed(id);
    std::snprintf(buf, sizeof buf, ",%.17g,%lld\n", r.mean_rating, r.rating_count);
    feed(buf);
  }
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Snapshot::Snapshot(std::vector<PlanRecord> plans, RatingsMap ratings)
    : plans_(std::move(plans)),
      ratings_(std::move(ratings)),
      index_(plans_),
      schema_(EncodingSchema::bound_to(fingerprint(plans_, ratings_))) {
  encoded_.reserve(plans_.size());
  for (const auto& p : plans_) encoded_.push_back(encode_plan(p, schema_));
}

std::shared_ptr<const Snapshot> Snapshot::load(const std::filesystem::path& catalog,
                                               const std::filesystem::path& ratings) {
  auto plans = load_catalog(catalog);
  auto rates = load_ratings(ratings);
  return std::make_shared<const Snapshot>(std::move(plans), std::move(rates));
}

double Snapshot::rating_of(std::string_view hmo_id) const {
  const auto it = ratings_.find(hmo_id);
  return it == ratings_.end() ? 0.0 : it->second.mean_rating;
}

bool region_compatible(Location user, CoverageRegion plan) {
  return user == Location::Lagos || plan == CoverageRegion::Nationwide;
}

bool passes_filter(const PlanRecord& plan, const UserPreference& pref) {
  return plan.premium_tier <= pref.max_tier && region_compatible(pref.location, plan.coverage_region);
}

std::vector<PlanRecord> prefilter(std::span<const PlanRecord> plans, const UserPreference& pref) {
  std::vector<PlanRecord> out;
  std::copy_if(plans.begin(), plans.end(), std::back_inserter(out),
               [&](const PlanRecord& p) { return passes_filter(p, pref); });
  return out;
}

std::vector<ScoredCandidate> rerank_by_rating(std::span<const ScoredCandidate> pool,
                                              const RatingsMap& ratings, const PlanIndex& plans) {
  struct Entry {
    double rating;
    std::size_t position;
  };
  std::vector<Entry> entries;
  entries.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    double rating = 0.0;
    if (const auto* plan = plans.find(pool[i].plan_id)) {
      if (const auto it = ratings.find(plan->hmo_id); it != ratings.end()) {
        rating = it->second.mean_rating;
      }
    }
    entries.push_back({rating, i});
  }
  // positions are unique, so plan_id never decides; kept for a total order
  std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
    if (a.rating != b.rating) return a.rating > b.rating;
    if (a.position != b.position) return a.position < b.position;
    return pool[a.position].plan_id < pool[b.position].plan_id;
  });

  std::vector<ScoredCandidate> out;
  const auto n = std::min(kRecommendationCount, entries.size());
  for (std::size_t i = 0; i < n; ++i) out.push_back(pool[entries[i].position]);
  return out;
}

std::size_t effective_pool_size(std::size_t requested) {
  return std::max(requested, kRecommendationCount);
}

std::vector<ScoredCandidate> similarity_pool(const RecommendationRequest& request,
                                             const Snapshot& snapshot) {
  const auto query = encode_preference(request.preference, snapshot.schema());
  if (request.metric == Metric::Cosine && ordered_squared_norm(query.values) == 0.0) {
    throw EmptyPreferenceError();
  }

  std::vector<Candidate> candidates;
  const auto& plans = snapshot.plans();
  for (std::size_t i = 0; i < plans.size(); ++i) {
    if (!passes_filter(plans[i], request.preference)) continue;
    candidates.push_back({plans[i].plan_id, snapshot.encoded(i), snapshot.rating_of(plans[i].hmo_id)});
  }
  if (candidates.empty()) throw NoCandidatesError();

  return rank_candidates(query, candidates, request.metric, effective_pool_size(request.pool_size));
}

std::vector<std::string> matched_features(const PlanRecord& plan, const UserPreference& pref) {
  std::vector<std::string> out;
  for (auto f : kServiceFeatures) {
    if (has(plan.features, f) && has(pref.desired, f)) out.emplace_back(feature_name(f));
  }
  return out;
}

std::vector<Recommendation> recommend(const RecommendationRequest& request, const Snapshot& snapshot) {
  const auto pool = similarity_pool(request, snapshot);
  const auto top = rerank_by_rating(pool, snapshot.ratings(), snapshot.index());

  std::vector<Recommendation> out;
  out.reserve(top.size());
  for (const auto& scored : top) {
    const auto* plan = snapshot.index().find(scored.plan_id);
    Recommendation r;
    r.rank = static_cast<int>(out.size()) + 1;
    r.plan_id = plan->plan_id;
    r.hmo_id = plan->hmo_id;
    r.hmo_name = plan->hmo_name;
    r.plan_name = plan->plan_name;
    r.premium_tier = plan->premium_tier;
    r.similarity_score = scored.score;
    r.mean_rating = snapshot.rating_of(plan->hmo_id);
    r.matched_features = matched_features(*plan, request.preference);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace plansage
