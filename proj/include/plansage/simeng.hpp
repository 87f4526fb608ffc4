#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "plansage/catalog.hpp"

namespace plansage {

enum class Metric { Cosine, EuclideanKnn };

std::string_view to_string(Metric m);
/// Accepts "cosine" and "knn" (also "euclidean_knn").
std::optional<Metric> parse_metric(std::string_view s);

/// Candidate pool size before the rating rerank.
inline constexpr std::size_t kDefaultPoolSize = 5;

class ZeroVectorError : public std::domain_error {
 public:
  ZeroVectorError() : std::domain_error("cosine similarity is undefined for a zero-norm vector") {}
};

class SchemaMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

template <typename DerivedA, typename DerivedB>
void check_same_size(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    throw SchemaMismatchError("vector dimensions differ: " + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()));
  }
}

}  // namespace detail

/// Dot product accumulated strictly left to right. Eigen's own reductions
/// may reorder the sum depending on vectorization; scores feed exact
/// comparisons, so the order is pinned here.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar ordered_dot(const Eigen::MatrixBase<DerivedA>& a,
                                      const Eigen::MatrixBase<DerivedB>& b) {
  detail::check_same_size(a, b);
  typename DerivedA::Scalar acc(0);
  for (Eigen::Index i = 0; i < a.size(); ++i) acc += a(i) * b(i);
  return acc;
}

template <typename Derived>
typename Derived::Scalar ordered_squared_norm(const Eigen::MatrixBase<Derived>& a) {
  return ordered_dot(a, a);
}

/// (a . b) / (|a| |b|). Throws ZeroVectorError if either norm is zero.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
  using std::sqrt;
  using Scalar = typename DerivedA::Scalar;
  const Scalar aa = ordered_squared_norm(a);
  const Scalar bb = ordered_squared_norm(b);
  if (aa == Scalar(0) || bb == Scalar(0)) throw ZeroVectorError();
  return ordered_dot(a, b) / (sqrt(aa) * sqrt(bb));
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar euclidean_distance(const Eigen::MatrixBase<DerivedA>& a,
                                             const Eigen::MatrixBase<DerivedB>& b) {
  using std::sqrt;
  detail::check_same_size(a, b);
  typename DerivedA::Scalar acc(0);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const auto d = a(i) - b(i);
    acc += d * d;
  }
  return sqrt(acc);
}

/// Schema-checked overloads for encoded vectors.
template <typename Scalar>
Scalar cosine_similarity(const BasicFeatureVector<Scalar>& a, const BasicFeatureVector<Scalar>& b) {
  if (a.schema_id != b.schema_id) {
    throw SchemaMismatchError("schema '" + a.schema_id + "' vs '" + b.schema_id + "'");
  }
  return cosine_similarity(a.values, b.values);
}

template <typename Scalar>
Scalar euclidean_distance(const BasicFeatureVector<Scalar>& a, const BasicFeatureVector<Scalar>& b) {
  if (a.schema_id != b.schema_id) {
    throw SchemaMismatchError("schema '" + a.schema_id + "' vs '" + b.schema_id + "'");
  }
  return euclidean_distance(a.values, b.values);
}

/// Scores one pair under `metric`.
double score(Metric metric, const FeatureVector& query, const FeatureVector& candidate);

/// True if score `a` ranks ahead of score `b` under `metric`.
inline bool better_score(Metric metric, double a, double b) {
  return metric == Metric::Cosine ? a > b : a < b;
}

/// Scores closer than this are treated as a tie. Encoded values are small
/// rationals, so exact ties are common and would otherwise be split by
/// rounding noise (which changes when a query is rescaled).
inline constexpr double kScoreTieTolerance = 1e-12;

inline bool same_score(double a, double b) { return std::abs(a - b) <= kScoreTieTolerance; }

struct Candidate {
  std::string_view plan_id;
  std::reference_wrapper<const FeatureVector> vector;
  /// Tie-break rating; candidates without one sort after rated ones.
  std::optional<double> rating;
};

struct ScoredCandidate {
  std::string plan_id;
  double score = 0.0;
  Metric metric = Metric::Cosine;

  bool operator==(const ScoredCandidate&) const = default;
};

/// Exhaustive top-k. Order: score in the metric's direction, then higher
/// rating, then plan_id ascending. Returns min(k, |candidates|) entries.
/// Throws ZeroVectorError for a zero query under Cosine, SchemaMismatchError
/// if any candidate was encoded under another schema, std::invalid_argument
/// for k == 0.
std::vector<ScoredCandidate> rank_candidates(const FeatureVector& query,
                                             std::span<const Candidate> candidates, Metric metric,
                                             std::size_t k = kDefaultPoolSize);

}  // namespace plansage
