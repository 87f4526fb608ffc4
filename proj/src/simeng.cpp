#include "plansage/simeng.hpp"

#include <algorithm>
#include <limits>

namespace plansage {

std::string_view to_string(Metric m) { return m == Metric::Cosine ? "cosine" : "knn"; }

std::optional<Metric> parse_metric(std::string_view s) {
  if (s == "cosine") return Metric::Cosine;
  if (s == "knn" || s == "euclidean_knn") return Metric::EuclideanKnn;
  return std::nullopt;
}

double score(Metric metric, const FeatureVector& query, const FeatureVector& candidate) {
  return metric == Metric::Cosine ? cosine_similarity(query, candidate)
                                  : euclidean_distance(query, candidate);
}

std::vector<ScoredCandidate> rank_candidates(const FeatureVector& query,
                                             std::span<const Candidate> candidates, Metric metric,
                                             std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  if (metric == Metric::Cosine && ordered_squared_norm(query.values) == 0.0) {
    throw ZeroVectorError();
  }

  struct Entry {
    double score;
    double rating;
    std::string_view plan_id;
  };
  std::vector<Entry> entries;
  entries.reserve(candidates.size());
  for (const auto& c : candidates) {
    entries.push_back({score(metric, query, c.vector.get()),
                       c.rating.value_or(-std::numeric_limits<double>::infinity()), c.plan_id});
  }

  // Order by score, then close scores into tie groups, then order each group
  // by rating and id. Grouping needs the whole sorted list, not just the top k.
  std::sort(entries.begin(), entries.end(), [metric](const Entry& a, const Entry& b) {
    if (a.score != b.score) return better_score(metric, a.score, b.score);
    return a.plan_id < b.plan_id;
  });
  for (std::size_t first = 0; first < entries.size();) {
    std::size_t last = first + 1;
    while (last < entries.size() && same_score(entries[last - 1].score, entries[last].score)) ++last;
    std::sort(entries.begin() + static_cast<std::ptrdiff_t>(first),
              entries.begin() + static_cast<std::ptrdiff_t>(last), [](const Entry& a, const Entry& b) {
                if (a.rating != b.rating) return a.rating > b.rating;
                return a.plan_id < b.plan_id;
              });
    first = last;
  }
  const auto n = std::min(k, entries.size());

  std::vector<ScoredCandidate> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({std::string(entries[i].plan_id), entries[i].score, metric});
  }
  return out;
}

}  // namespace plansage
