#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace plansage {

/// Boolean benefits a plan may cover. The enumerator order is the slot order
/// of the encoded feature vector.
enum class ServiceFeature : std::size_t {
  FamilyPlanning,
  MentalHealth,
  DentalCare,
  Telemedicine,
  CashbackBenefit,
  AncDelivery,
  GymMembership,
  AnnualScreening,
};

inline constexpr std::size_t kServiceFeatureCount = 8;

inline constexpr std::array<ServiceFeature, kServiceFeatureCount> kServiceFeatures = {
    ServiceFeature::FamilyPlanning, ServiceFeature::MentalHealth,
    ServiceFeature::DentalCare,     ServiceFeature::Telemedicine,
    ServiceFeature::CashbackBenefit, ServiceFeature::AncDelivery,
    ServiceFeature::GymMembership,  ServiceFeature::AnnualScreening,
};

/// Snake-case name used in CSV headers and JSON keys.
std::string_view feature_name(ServiceFeature f);
std::optional<ServiceFeature> parse_feature_name(std::string_view name);

using ServiceFlags = std::array<bool, kServiceFeatureCount>;

inline bool has(const ServiceFlags& flags, ServiceFeature f) {
  return flags[static_cast<std::size_t>(f)];
}
inline void set(ServiceFlags& flags, ServiceFeature f, bool value) {
  flags[static_cast<std::size_t>(f)] = value;
}

enum class CoverageRegion { LagosOnly, Nationwide };
enum class Location { Lagos, Nationwide };
enum class WardType { General, SemiPrivate, Private };

std::string_view to_string(CoverageRegion r);
std::string_view to_string(Location l);
std::string_view to_string(WardType w);
std::optional<CoverageRegion> parse_region(std::string_view s);
std::optional<Location> parse_location(std::string_view s);
std::optional<WardType> parse_ward(std::string_view s);

inline constexpr int kMinTier = 1;
inline constexpr int kMaxTier = 4;
inline constexpr int kMaxEyeCareLevel = 3;

struct PlanRecord {
  std::string plan_id;
  std::string hmo_id;
  std::string hmo_name;
  std::string plan_name;
  int premium_tier = kMinTier;
  CoverageRegion coverage_region = CoverageRegion::LagosOnly;
  ServiceFlags features{};
  WardType ward_type = WardType::General;
  int eye_care_limit_level = 0;

  bool operator==(const PlanRecord&) const = default;
};

struct UserPreference {
  Location location = Location::Lagos;
  int max_tier = kMaxTier;
  ServiceFlags desired{};
  std::optional<WardType> ward_preference;
  std::optional<int> eye_care_preference;

  bool operator==(const UserPreference&) const = default;
};

struct RatingRecord {
  std::string hmo_id;
  double mean_rating = 0.0;
  long long rating_count = 0;

  bool operator==(const RatingRecord&) const = default;
};

using RatingsMap = std::map<std::string, RatingRecord, std::less<>>;

// ---------------------------------------------------------------------------
// Encoding

/// Dense feature encoding. Components are in [0, 1]; vectors are only
/// comparable when their schema ids match.
template <typename Scalar>
struct BasicFeatureVector {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;
  std::string schema_id;
};

using FeatureVector = BasicFeatureVector<double>;

/// Slot layout: the eight service flags in ServiceFeature order, then ward,
/// then eye care. Premium tier and region are filter-only and never encoded.
struct EncodingSchema {
  static constexpr Eigen::Index kDimension = 10;
  static constexpr Eigen::Index kWardSlot = 8;
  static constexpr Eigen::Index kEyeCareSlot = 9;
  static constexpr std::string_view kBaseId = "plansage-enc-v1";

  std::string id{kBaseId};

  /// Schema whose id is additionally bound to a content fingerprint, so that
  /// vectors from different catalog snapshots are never mixed.
  static EncodingSchema bound_to(std::string_view fingerprint);
};

/// General -> 1/3, SemiPrivate -> 2/3, Private -> 1.
double ward_level(WardType w);

FeatureVector encode_plan(const PlanRecord& plan, const EncodingSchema& schema = {});
FeatureVector encode_preference(const UserPreference& pref,
                                const EncodingSchema& schema = {});

// ---------------------------------------------------------------------------
// Ingestion

enum class CatalogErrorKind { Unreadable, MalformedFile, SchemaViolation, EmptyCatalog };

std::string_view to_string(CatalogErrorKind k);

/// `line` is the 1-based physical line for CSV input and the 1-based array
/// position for JSON input; 0 when the error is not tied to a record.
class CatalogError : public std::runtime_error {
 public:
  CatalogError(CatalogErrorKind kind, std::size_t line, const std::string& message);

  CatalogErrorKind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }

 private:
  CatalogErrorKind kind_;
  std::size_t line_;
};

struct Violation {
  std::size_t line = 0;
  std::string field;
  std::string message;
};

/// Everything learned while reading a catalog file. Rows with violations are
/// excluded from `plans`.
struct CatalogReport {
  std::vector<PlanRecord> plans;
  std::size_t rows = 0;
  std::vector<Violation> violations;
  std::optional<CatalogError> fatal;
  /// Missing cells per column name.
  std::map<std::string, std::size_t> missing;
  /// (line, number of booleans defaulted to "no") for rows with missing flags.
  std::vector<std::pair<std::size_t, std::size_t>> defaulted_rows;

  bool ok() const { return !fatal && violations.empty() && !plans.empty(); }
  /// The error load_catalog would throw, if any.
  std::optional<CatalogError> first_error() const;
};

struct RatingsReport {
  RatingsMap ratings;
  std::size_t rows = 0;
  std::vector<Violation> violations;
  std::optional<CatalogError> fatal;

  bool ok() const { return !fatal && violations.empty(); }
  std::optional<CatalogError> first_error() const;
};

/// Reads a whole catalog, collecting every violation instead of stopping at
/// the first one. Never throws for content problems.
CatalogReport inspect_catalog(const std::filesystem::path& path);
RatingsReport inspect_ratings(const std::filesystem::path& path);

/// Throws CatalogError on the first problem.
std::vector<PlanRecord> load_catalog(const std::filesystem::path& path);
RatingsMap load_ratings(const std::filesystem::path& path);

/// Both accept in-memory text; `json` selects the JSON array form.
CatalogReport parse_catalog(std::string_view text, bool json);
RatingsReport parse_ratings(std::string_view text, bool json);

/// Output format follows the extension, as for loading.
void write_catalog(const std::filesystem::path& path, std::span<const PlanRecord> plans);
void write_ratings(const std::filesystem::path& path, const RatingsMap& ratings);

std::string catalog_to_csv(std::span<const PlanRecord> plans);

}  // namespace plansage
