#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracle.hpp"
#include "plansage/simeng.hpp"
#include "test_support.hpp"

using namespace plansage;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

FeatureVector fv(Eigen::VectorXd v, std::string schema = "s") { return {std::move(v), std::move(schema)}; }

Eigen::VectorXd random_nonneg(std::mt19937_64& rng, Eigen::Index dim = 10) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = u(rng);
  return v;
}

std::vector<double> as_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST(CosineSimilarity, Orthogonal) { EXPECT_EQ(cosine_similarity(vec({1, 0}), vec({0, 1})), 0.0); }

TEST(CosineSimilarity, Identical) {
  EXPECT_NEAR(cosine_similarity(vec({1, 1, 0}), vec({1, 1, 0})), 1.0, 1e-12);
}

TEST(CosineSimilarity, HalfSqrtTwo) {
  // 1 / sqrt(2), evaluated by hand
  EXPECT_NEAR(cosine_similarity(vec({1, 1, 0}), vec({1, 0, 0})), 0.70710678, 1e-8);
}

TEST(CosineSimilarity, ZeroVectorThrows) {
  EXPECT_THROW(cosine_similarity(vec({0, 0, 0}), vec({1, 0, 0})), ZeroVectorError);
  EXPECT_THROW(cosine_similarity(vec({1, 0, 0}), vec({0, 0, 0})), ZeroVectorError);
}

TEST(CosineSimilarity, SchemaAndDimensionMismatch) {
  EXPECT_THROW(cosine_similarity(fv(vec({1, 0}), "a"), fv(vec({1, 0}), "b")), SchemaMismatchError);
  EXPECT_THROW(euclidean_distance(fv(vec({1, 0}), "a"), fv(vec({1, 0}), "b")), SchemaMismatchError);
  EXPECT_THROW(cosine_similarity(vec({1, 0}), vec({1, 0, 0})), SchemaMismatchError);
  EXPECT_THROW(euclidean_distance(vec({1, 0}), vec({1, 0, 0})), SchemaMismatchError);
}

TEST(CosineSimilarity, WorksOnExpressionsAndOtherScalars) {
  const Eigen::Vector3f a(1.f, 2.f, 0.f);
  const Eigen::Vector3f b(2.f, 4.f, 0.f);
  EXPECT_NEAR(cosine_similarity(a, b), 1.0f, 1e-6f);
  EXPECT_NEAR(cosine_similarity(a + b, 3.0f * a), 1.0f, 1e-6f);
  EXPECT_FLOAT_EQ(euclidean_distance(a, b), std::sqrt(5.0f));
  EXPECT_DOUBLE_EQ(euclidean_distance(vec({1, 2, 3}).head(2), vec({1, 2}).array().matrix()), 0.0);
}

TEST(EuclideanDistance, Examples) {
  EXPECT_EQ(euclidean_distance(vec({0, 0}), vec({0, 0})), 0.0);
  EXPECT_NEAR(euclidean_distance(vec({0, 0}), vec({1, 1})), 1.41421356, 1e-8);
}

TEST(EuclideanDistance, MatchesBruteForce) {
  std::mt19937_64 rng(101);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_nonneg(rng);
    const auto b = random_nonneg(rng);
    EXPECT_NEAR(euclidean_distance(a, b), oracle::euclid(as_std(a), as_std(b)), 1e-12);
    EXPECT_NEAR(cosine_similarity(a, b), oracle::cosine(as_std(a), as_std(b)), 1e-12);
  }
}

TEST(SimilarityProperties, SymmetryRangeTranslationIdentity) {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> shift(-5.0, 5.0);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_nonneg(rng);
    const auto b = random_nonneg(rng);
    const double c = cosine_similarity(a, b);
    EXPECT_EQ(c, cosine_similarity(b, a));
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
    EXPECT_EQ(euclidean_distance(a, b), euclidean_distance(b, a));

    Eigen::VectorXd t(10);
    for (Eigen::Index k = 0; k < 10; ++k) t(k) = shift(rng);
    EXPECT_NEAR(euclidean_distance(a + t, b + t), euclidean_distance(a, b), 1e-12);

    EXPECT_EQ(euclidean_distance(a, a), 0.0);
    EXPECT_GT(euclidean_distance(a, b), 0.0);
  }
}

TEST(SimilarityProperties, IdentityOfIndiscerniblesOnEncodedPlans) {
  std::mt19937_64 rng(303);
  for (int i = 0; i < 2000; ++i) {
    const auto p = test::random_plan(rng, "a");
    const auto q = test::random_plan(rng, "b");
    const auto vp = encode_plan(p);
    const auto vq = encode_plan(q);
    EXPECT_EQ(euclidean_distance(vp, vq) == 0.0, vp.values == vq.values);
  }
}

// ---------------------------------------------------------------------------

namespace {

struct Pool {
  std::vector<std::string> ids;
  std::vector<FeatureVector> vectors;
  std::vector<Candidate> candidates;

  void build(std::vector<std::optional<double>> ratings = {}) {
    candidates.clear();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      candidates.push_back({ids[i], vectors[i], i < ratings.size() ? ratings[i] : std::nullopt});
    }
  }
};

Pool synthetic_pool(std::mt19937_64& rng, std::size_t n) {
  Pool pool;
  for (std::size_t i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "c%03zu", i);
    pool.ids.emplace_back(id);
    pool.vectors.push_back(encode_plan(test::random_plan(rng, id)));
  }
  pool.build();
  return pool;
}

std::vector<std::string> ids_of(const std::vector<ScoredCandidate>& v) {
  std::vector<std::string> out;
  for (const auto& s : v) out.push_back(s.plan_id);
  return out;
}

}  // namespace

TEST(RankCandidates, SelfMatchFirstUnderBothMetrics) {
  std::mt19937_64 rng(1);
  auto pool = synthetic_pool(rng, 40);
  const auto& query = pool.vectors[17];

  const auto cos = rank_candidates(query, pool.candidates, Metric::Cosine, 5);
  ASSERT_EQ(cos.size(), 5u);
  EXPECT_NEAR(cos.front().score, 1.0, 1e-12);
  EXPECT_EQ(cos.front().metric, Metric::Cosine);
  EXPECT_EQ(pool.vectors[std::stoul(cos.front().plan_id.substr(1))].values, query.values);

  const auto knn = rank_candidates(query, pool.candidates, Metric::EuclideanKnn, 5);
  EXPECT_EQ(knn.front().score, 0.0);
  EXPECT_EQ(pool.vectors[std::stoul(knn.front().plan_id.substr(1))].values, query.values);
}

TEST(RankCandidates, MatchesExhaustiveSortOn148) {
  std::mt19937_64 rng(148);
  auto pool = synthetic_pool(rng, 148);
  for (int trial = 0; trial < 50; ++trial) {
    const auto query = encode_preference(test::random_preference(rng));
    const auto q = as_std(query.values);
    for (auto metric : {Metric::Cosine, Metric::EuclideanKnn}) {
      if (metric == Metric::Cosine && query.values.isZero(0.0)) continue;
      std::vector<std::pair<double, std::string>> all;
      for (std::size_t i = 0; i < pool.ids.size(); ++i) {
        const auto v = as_std(pool.vectors[i].values);
        all.emplace_back(metric == Metric::Cosine ? oracle::cosine(q, v) : oracle::euclid(q, v), pool.ids[i]);
      }
      // unrated pool: near-equal scores fall back to id
      auto ahead = [&](const auto& a, const auto& b) {
        if (std::abs(a.first - b.first) > 1e-12) return metric == Metric::Cosine ? a.first > b.first : a.first < b.first;
        return a.second < b.second;
      };
      for (std::size_t i = 1; i < all.size(); ++i) {
        for (std::size_t j = i; j > 0 && ahead(all[j], all[j - 1]); --j) std::swap(all[j], all[j - 1]);
      }
      const auto got = rank_candidates(query, pool.candidates, metric, 5);
      ASSERT_EQ(got.size(), 5u);
      for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(got[i].plan_id, all[i].second);
        EXPECT_EQ(got[i].score, all[i].first);
      }
    }
  }
}

TEST(RankCandidates, ReturnsMinOfKAndPool) {
  std::mt19937_64 rng(2);
  auto pool = synthetic_pool(rng, 3);
  const auto query = pool.vectors[0];
  EXPECT_EQ(rank_candidates(query, pool.candidates, Metric::Cosine, 10).size(), 3u);
  EXPECT_EQ(rank_candidates(query, pool.candidates, Metric::Cosine, 1).size(), 1u);
  EXPECT_TRUE(rank_candidates(query, {}, Metric::Cosine, 5).empty());
  EXPECT_THROW(rank_candidates(query, pool.candidates, Metric::Cosine, 0), std::invalid_argument);
}

TEST(RankCandidates, ZeroQueryUnderCosineThrows) {
  std::mt19937_64 rng(3);
  auto pool = synthetic_pool(rng, 5);
  const auto zero = encode_preference(UserPreference{});
  EXPECT_THROW(rank_candidates(zero, pool.candidates, Metric::Cosine, 5), ZeroVectorError);
  EXPECT_EQ(rank_candidates(zero, pool.candidates, Metric::EuclideanKnn, 5).size(), 5u);
}

TEST(RankCandidates, SchemaMismatchRejected) {
  std::mt19937_64 rng(4);
  auto pool = synthetic_pool(rng, 5);
  auto query = pool.vectors[0];
  query.schema_id = "other";
  EXPECT_THROW(rank_candidates(query, pool.candidates, Metric::EuclideanKnn, 5), SchemaMismatchError);
}

TEST(RankCandidates, TieBreakRatingThenPlanId) {
  Pool pool;
  const auto v = encode_plan(test::make_plan("x"));
  pool.ids = {"d", "b", "c", "a"};
  pool.vectors = {v, v, v, v};
  pool.build();
  EXPECT_EQ(ids_of(rank_candidates(v, pool.candidates, Metric::Cosine, 4)),
            (std::vector<std::string>{"a", "b", "c", "d"}));

  pool.build({2.0, 4.0, 4.0, std::nullopt});
  EXPECT_EQ(ids_of(rank_candidates(v, pool.candidates, Metric::EuclideanKnn, 4)),
            (std::vector<std::string>{"b", "c", "d", "a"}));
}

TEST(RankCandidates, TopKConsistencyAndDeterminism) {
  std::mt19937_64 rng(5);
  auto pool = synthetic_pool(rng, 60);
  for (int trial = 0; trial < 40; ++trial) {
    const auto query = encode_plan(test::random_plan(rng, "q"));
    for (auto metric : {Metric::Cosine, Metric::EuclideanKnn}) {
      const auto all = rank_candidates(query, pool.candidates, metric, pool.ids.size());
      const auto top = rank_candidates(query, pool.candidates, metric, 7);
      ASSERT_EQ(top, rank_candidates(query, pool.candidates, metric, 7));
      for (std::size_t i = 0; i < top.size(); ++i) EXPECT_EQ(top[i], all[i]);
      for (std::size_t i = 7; i < all.size(); ++i) {
        EXPECT_TRUE(!better_score(metric, all[i].score, top.back().score) ||
                    same_score(all[i].score, top.back().score));
      }
      for (std::size_t i = 1; i < all.size(); ++i) {
        EXPECT_TRUE(!better_score(metric, all[i].score, all[i - 1].score) ||
                    same_score(all[i].score, all[i - 1].score));
      }
    }
  }
}

TEST(RankCandidates, CosineOrderIsScaleInvariant) {
  std::mt19937_64 rng(6);
  auto pool = synthetic_pool(rng, 148);
  for (int trial = 0; trial < 100; ++trial) {
    FeatureVector query{random_nonneg(rng), std::string(EncodingSchema::kBaseId)};
    const auto base = ids_of(rank_candidates(query, pool.candidates, Metric::Cosine, 148));
    for (double c : {0.1, 2.0, 1000.0}) {
      FeatureVector scaled{c * query.values, query.schema_id};
      EXPECT_EQ(ids_of(rank_candidates(scaled, pool.candidates, Metric::Cosine, 148)), base) << c;
    }
  }
}

TEST(Metric, ParseAndPrint) {
  EXPECT_EQ(parse_metric("cosine"), Metric::Cosine);
  EXPECT_EQ(parse_metric("knn"), Metric::EuclideanKnn);
  EXPECT_EQ(parse_metric("euclidean_knn"), Metric::EuclideanKnn);
  EXPECT_FALSE(parse_metric("manhattan"));
  EXPECT_EQ(to_string(Metric::EuclideanKnn), "knn");
}

TEST(RankCandidates, DiscreteQueriesKeepOrderWhenScaled) {
  // Preference vectors hit exact ties between different plans; rounding
  // noise in those ties must not reorder them.
  std::mt19937_64 rng(16);
  auto pool = synthetic_pool(rng, 148);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto query = encode_preference(test::random_preference(rng));
    if (query.values.squaredNorm() == 0.0) continue;
    ++checked;
    const auto base = ids_of(rank_candidates(query, pool.candidates, Metric::Cosine, 148));
    for (double c : {0.1, 2.0, 1000.0}) {
      FeatureVector scaled{c * query.values, query.schema_id};
      EXPECT_EQ(ids_of(rank_candidates(scaled, pool.candidates, Metric::Cosine, 148)), base) << c;
    }
  }
  EXPECT_GT(checked, 150);
}

TEST(RankCandidates, EqualScoresFromDifferentVectorsUseRating) {
  // (1,0,..) and (0,1,..) against (1,1,..): both cos = 1/sqrt(2)
  PlanRecord a = test::make_plan("a"), b = test::make_plan("b");
  a.ward_type = b.ward_type = WardType::General;
  set(a.features, ServiceFeature::FamilyPlanning, true);
  set(b.features, ServiceFeature::MentalHealth, true);
  UserPreference u;
  set(u.desired, ServiceFeature::FamilyPlanning, true);
  set(u.desired, ServiceFeature::MentalHealth, true);
  u.ward_preference = WardType::General;
  const auto va = encode_plan(a), vb = encode_plan(b);
  const std::vector<Candidate> candidates{{"a", va, 2.0}, {"b", vb, 4.5}};
  const auto query = encode_preference(u);
  for (double c : {1.0, 0.1, 1000.0}) {
    FeatureVector scaled{c * query.values, query.schema_id};
    EXPECT_EQ(ids_of(rank_candidates(scaled, candidates, Metric::Cosine, 2)),
              (std::vector<std::string>{"b", "a"}));
  }
}
