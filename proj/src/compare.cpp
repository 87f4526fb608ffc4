#include "plansage/compare.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "plansage/wire.hpp"

namespace plansage {

std::vector<UserPreference> generate_preferences(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<UserPreference> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    UserPreference p;
    for (std::size_t f = 0; f < kServiceFeatureCount; ++f) p.desired[f] = (rng() >> 63) != 0;
    p.max_tier = kMinTier + static_cast<int>(rng() % 4);
    p.location = (rng() >> 63) != 0 ? Location::Nationwide : Location::Lagos;
    out.push_back(p);
  }
  return out;
}

double jaccard(std::span<const std::string> a, std::span<const std::string> b) {
  const std::set<std::string> sa(a.begin(), a.end());
  const std::set<std::string> sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& x : sa) common += sb.count(x);
  return static_cast<double>(common) / static_cast<double>(sa.size() + sb.size() - common);
}

namespace {

std::vector<std::string> head_ids(const std::vector<ScoredCandidate>& v, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(n, v.size()); ++i) out.push_back(v[i].plan_id);
  return out;
}

}  // namespace

AgreementReport compare_metrics(const Snapshot& snapshot, std::span<const UserPreference> prefs) {
  AgreementReport report;
  report.trials = prefs.size();
  double top3_sum = 0.0;
  double final_sum = 0.0;

  for (std::size_t i = 0; i < prefs.size(); ++i) {
    TrialOutcome t;
    t.trial = i + 1;
    t.preference = prefs[i];
    try {
      RecommendationRequest req{prefs[i], Metric::Cosine, kDefaultPoolSize};
      const auto cos_pool = similarity_pool(req, snapshot);
      req.metric = Metric::EuclideanKnn;
      const auto knn_pool = similarity_pool(req, snapshot);

      t.cosine_top = head_ids(cos_pool, kRecommendationCount);
      t.knn_top = head_ids(knn_pool, kRecommendationCount);
      t.cosine_final = head_ids(rerank_by_rating(cos_pool, snapshot.ratings(), snapshot.index()),
                                kRecommendationCount);
      t.knn_final = head_ids(rerank_by_rating(knn_pool, snapshot.ratings(), snapshot.index()),
                             kRecommendationCount);
      t.top1_agree = t.cosine_top.front() == t.knn_top.front();
      t.top3_jaccard = jaccard(t.cosine_top, t.knn_top);
      t.final_jaccard = jaccard(t.cosine_final, t.knn_final);
      t.status = "ok";

      ++report.evaluated;
      report.top1_agreements += t.top1_agree ? 1 : 0;
      top3_sum += t.top3_jaccard;
      final_sum += t.final_jaccard;
    } catch (const EmptyPreferenceError&) {
      t.status = "empty_preference";
    } catch (const NoCandidatesError&) {
      t.status = "no_candidates";
    }
    report.outcomes.push_back(std::move(t));
  }

  if (report.evaluated > 0) {
    const auto n = static_cast<double>(report.evaluated);
    report.top1_agreement_rate = static_cast<double>(report.top1_agreements) / n;
    report.mean_top3_jaccard = top3_sum / n;
    report.mean_final_jaccard = final_sum / n;
  }
  return report;
}

nlohmann::json to_json(const AgreementReport& report, std::uint64_t seed) {
  using nlohmann::json;
  json trials = json::array();
  for (const auto& t : report.outcomes) {
    trials.push_back({
        {"trial", t.trial},
        {"preference", to_json(t.preference)},
        {"status", t.status},
        {"cosine_top", t.cosine_top},
        {"knn_top", t.knn_top},
        {"cosine_final", t.cosine_final},
        {"knn_final", t.knn_final},
        {"top1_agree", t.top1_agree},
        {"top3_jaccard", t.top3_jaccard},
        {"final_jaccard", t.final_jaccard},
    });
  }
  return {
      {"seed", seed},
      {"trials", report.trials},
      {"evaluated", report.evaluated},
      {"top1_agreements", report.top1_agreements},
      {"top1_agreement_rate", report.top1_agreement_rate},
      {"mean_top3_jaccard", report.mean_top3_jaccard},
      {"mean_final_jaccard", report.mean_final_jaccard},
      {"per_trial", trials},
  };
}

}  // namespace plansage
