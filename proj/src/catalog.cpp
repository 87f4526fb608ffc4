#include "plansage/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "csv.hpp"

namespace plansage {

namespace {

constexpr std::array<std::string_view, kServiceFeatureCount> kFeatureNames = {
    "family_planning", "mental_health",    "dental_care",    "telemedicine",
    "cashback_benefit", "anc_delivery",    "gym_membership", "annual_screening",
};

constexpr std::size_t kCatalogColumns = 16;
constexpr std::array<std::string_view, kCatalogColumns> kCatalogHeader = {
    "plan_id",          "hmo_id",          "hmo_name",       "plan_name",
    "premium_tier",     "coverage_region", "family_planning", "mental_health",
    "dental_care",      "telemedicine",    "cashback_benefit", "anc_delivery",
    "gym_membership",   "annual_screening", "ward_type",     "eye_care_limit_level",
};
constexpr std::size_t kFirstFeatureColumn = 6;
constexpr std::size_t kWardColumn = 14;
constexpr std::size_t kEyeColumn = 15;

constexpr std::size_t kRatingsColumns = 3;
constexpr std::array<std::string_view, kRatingsColumns> kRatingsHeader = {
    "hmo_id", "mean_rating", "rating_count"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::optional<long long> parse_int(std::string_view s) {
  s = trim(s);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

std::optional<bool> parse_yes_no(std::string_view s) {
  const auto v = lower(trim(s));
  if (v == "yes") return true;
  if (v == "no") return false;
  return std::nullopt;
}

/// One record with cells in canonical column order; a disengaged cell means
/// the value was absent (empty CSV cell, missing or null JSON member).
template <std::size_t N>
struct RawRow {
  std::size_t line = 0;
  std::array<std::optional<std::string>, N> cells;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CatalogError(CatalogErrorKind::Unreadable, 0, "cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_json_path(const std::filesystem::path& path) {
  return lower(path.extension().string()) == ".json";
}

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

/// Splits CSV text into rows in canonical column order. Returns nullopt for
/// a file with no content at all.
template <std::size_t N>
std::optional<std::vector<RawRow<N>>> csv_rows(std::string_view text,
                                               const std::array<std::string_view, N>& header) {
  auto records = csv::parse(text);  // throws csv::SyntaxError
  if (records.empty()) return std::nullopt;

  const auto& head = records.front();
  bool header_ok = head.fields.size() == N;
  for (std::size_t i = 0; header_ok && i < N; ++i) {
    header_ok = lower(trim(head.fields[i])) == header[i];
  }
  if (!header_ok) {
    std::string expected;
    for (auto h : header) expected += (expected.empty() ? "" : ",") + std::string(h);
    throw CatalogError(CatalogErrorKind::MalformedFile, head.line,
                       "header must be exactly: " + expected);
  }

  std::vector<RawRow<N>> rows;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() == 1 && trim(rec.fields[0]).empty()) continue;  // blank line
    if (rec.fields.size() != N) {
      throw CatalogError(CatalogErrorKind::MalformedFile, rec.line,
                         "expected " + std::to_string(N) + " columns, found " +
                             std::to_string(rec.fields.size()));
    }
    RawRow<N> row;
    row.line = rec.line;
    for (std::size_t i = 0; i < N; ++i) {
      auto cell = trim(rec.fields[i]);
      if (!cell.empty()) row.cells[i] = std::string(cell);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

template <std::size_t N>
std::vector<RawRow<N>> json_rows(std::string_view text,
                                 const std::array<std::string_view, N>& header,
                                 std::vector<Violation>& violations) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CatalogError(CatalogErrorKind::MalformedFile, line_of_offset(text, e.byte),
                       std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) {
    throw CatalogError(CatalogErrorKind::MalformedFile, 0, "top-level JSON value must be an array");
  }

  std::vector<RawRow<N>> rows;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& obj = doc[i];
    if (!obj.is_object()) {
      throw CatalogError(CatalogErrorKind::MalformedFile, i + 1, "array element is not an object");
    }
    RawRow<N> row;
    row.line = i + 1;
    for (const auto& [key, value] : obj.items()) {
      const auto it = std::find(header.begin(), header.end(), key);
      if (it == header.end()) {
        violations.push_back({row.line, key, "unknown field"});
        continue;
      }
      auto& cell = row.cells[static_cast<std::size_t>(it - header.begin())];
      if (value.is_null()) continue;
      if (value.is_string()) {
        auto s = trim(value.template get_ref<const std::string&>());
        if (!s.empty()) cell = std::string(s);
      } else if (value.is_boolean()) {
        cell = value.template get<bool>() ? "yes" : "no";
      } else if (value.is_number_integer() || value.is_number_unsigned()) {
        cell = std::to_string(value.template get<long long>());
      } else if (value.is_number_float()) {
        std::ostringstream ss;
        ss.precision(17);
        ss << value.template get<double>();
        cell = ss.str();
      } else {
        cell = value.dump();
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void validate_plan_rows(const std::vector<RawRow<kCatalogColumns>>& rows, CatalogReport& report) {
  std::set<std::string, std::less<>> seen_ids;
  for (const auto& row : rows) {
    ++report.rows;
    const auto violations_before = report.violations.size();
    auto violate = [&](std::size_t col, std::string msg) {
      report.violations.push_back({row.line, std::string(kCatalogHeader[col]), std::move(msg)});
    };
    auto missing = [&](std::size_t col) { ++report.missing[std::string(kCatalogHeader[col])]; };

    PlanRecord plan;
    std::string* text_fields[] = {&plan.plan_id, &plan.hmo_id, &plan.hmo_name, &plan.plan_name};
    for (std::size_t col = 0; col < 4; ++col) {
      if (row.cells[col]) {
        *text_fields[col] = *row.cells[col];
      } else {
        missing(col);
        violate(col, "required value is missing");
      }
    }
    if (row.cells[0] && !seen_ids.insert(plan.plan_id).second) {
      violate(0, "duplicate plan_id '" + plan.plan_id + "'");
    }

    if (!row.cells[4]) {
      missing(4);
      violate(4, "required value is missing");
    } else if (auto tier = parse_int(*row.cells[4]); !tier || *tier < kMinTier || *tier > kMaxTier) {
      violate(4, "premium_tier must be an integer in [1,4], got '" + *row.cells[4] + "'");
    } else {
      plan.premium_tier = static_cast<int>(*tier);
    }

    if (!row.cells[5]) {
      missing(5);
      violate(5, "required value is missing");
    } else if (auto region = parse_region(*row.cells[5])) {
      plan.coverage_region = *region;
    } else {
      violate(5, "coverage_region must be lagos or nationwide, got '" + *row.cells[5] + "'");
    }

    std::size_t defaulted = 0;
    for (std::size_t f = 0; f < kServiceFeatureCount; ++f) {
      const std::size_t col = kFirstFeatureColumn + f;
      if (!row.cells[col]) {
        missing(col);
        ++defaulted;
        plan.features[f] = false;
      } else if (auto flag = parse_yes_no(*row.cells[col])) {
        plan.features[f] = *flag;
      } else {
        violate(col, "expected yes or no, got '" + *row.cells[col] + "'");
      }
    }
    if (defaulted > 0) report.defaulted_rows.emplace_back(row.line, defaulted);

    if (!row.cells[kWardColumn]) {
      missing(kWardColumn);
      violate(kWardColumn, "required value is missing");
    } else if (auto ward = parse_ward(*row.cells[kWardColumn])) {
      plan.ward_type = *ward;
    } else {
      violate(kWardColumn,
              "ward_type must be general, semi_private or private, got '" + *row.cells[kWardColumn] + "'");
    }

    if (!row.cells[kEyeColumn]) {
      missing(kEyeColumn);
      violate(kEyeColumn, "required value is missing");
    } else if (auto eye = parse_int(*row.cells[kEyeColumn]);
               !eye || *eye < 0 || *eye > kMaxEyeCareLevel) {
      violate(kEyeColumn,
              "eye_care_limit_level must be an integer in [0,3], got '" + *row.cells[kEyeColumn] + "'");
    } else {
      plan.eye_care_limit_level = static_cast<int>(*eye);
    }

    if (report.violations.size() == violations_before) report.plans.push_back(std::move(plan));
  }
}

void validate_rating_rows(const std::vector<RawRow<kRatingsColumns>>& rows, RatingsReport& report) {
  for (const auto& row : rows) {
    ++report.rows;
    const auto violations_before = report.violations.size();
    auto violate = [&](std::size_t col, std::string msg) {
      report.violations.push_back({row.line, std::string(kRatingsHeader[col]), std::move(msg)});
    };
    RatingRecord rec;
    if (!row.cells[0]) {
      violate(0, "required value is missing");
    } else {
      rec.hmo_id = *row.cells[0];
      if (report.ratings.contains(rec.hmo_id)) violate(0, "duplicate hmo_id '" + rec.hmo_id + "'");
    }
    if (!row.cells[1]) {
      violate(1, "required value is missing");
    } else if (auto r = parse_real(*row.cells[1]); !r || *r < 0.0 || *r > 5.0) {
      violate(1, "mean_rating must be a number in [0,5], got '" + *row.cells[1] + "'");
    } else {
      rec.mean_rating = *r;
    }
    if (!row.cells[2]) {
      violate(2, "required value is missing");
    } else if (auto c = parse_int(*row.cells[2]); !c || *c < 0) {
      violate(2, "rating_count must be a non-negative integer, got '" + *row.cells[2] + "'");
    } else {
      rec.rating_count = *c;
    }
    if (report.violations.size() == violations_before) {
      auto id = rec.hmo_id;
      report.ratings.emplace(std::move(id), std::move(rec));
    }
  }
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string_view feature_name(ServiceFeature f) { return kFeatureNames[static_cast<std::size_t>(f)]; }

std::optional<ServiceFeature> parse_feature_name(std::string_view name) {
  for (auto f : kServiceFeatures) {
    if (feature_name(f) == name) return f;
  }
  return std::nullopt;
}

std::string_view to_string(CoverageRegion r) {
  return r == CoverageRegion::LagosOnly ? "lagos" : "nationwide";
}
std::string_view to_string(Location l) { return l == Location::Lagos ? "lagos" : "nationwide"; }
std::string_view to_string(WardType w) {
  switch (w) {
    case WardType::General: return "general";
    case WardType::SemiPrivate: return "semi_private";
    case WardType::Private: return "private";
  }
  return "general";
}

std::optional<CoverageRegion> parse_region(std::string_view s) {
  const auto v = lower(trim(s));
  if (v == "lagos") return CoverageRegion::LagosOnly;
  if (v == "nationwide") return CoverageRegion::Nationwide;
  return std::nullopt;
}

std::optional<Location> parse_location(std::string_view s) {
  const auto v = lower(trim(s));
  if (v == "lagos") return Location::Lagos;
  if (v == "nationwide") return Location::Nationwide;
  return std::nullopt;
}

std::optional<WardType> parse_ward(std::string_view s) {
  const auto v = lower(trim(s));
  if (v == "general") return WardType::General;
  if (v == "semi_private") return WardType::SemiPrivate;
  if (v == "private") return WardType::Private;
  return std::nullopt;
}

EncodingSchema EncodingSchema::bound_to(std::string_view fingerprint) {
  EncodingSchema s;
  s.id = std::string(kBaseId) + "." + std::string(fingerprint);
  return s;
}

double ward_level(WardType w) {
  switch (w) {
    case WardType::General: return 1.0 / 3.0;
    case WardType::SemiPrivate: return 2.0 / 3.0;
    case WardType::Private: return 1.0;
  }
  return 0.0;
}

FeatureVector encode_plan(const PlanRecord& plan, const EncodingSchema& schema) {
  FeatureVector v{Eigen::VectorXd::Zero(EncodingSchema::kDimension), schema.id};
  for (std::size_t f = 0; f < kServiceFeatureCount; ++f) {
    v.values(static_cast<Eigen::Index>(f)) = plan.features[f] ? 1.0 : 0.0;
  }
  v.values(EncodingSchema::kWardSlot) = ward_level(plan.ward_type);
  v.values(EncodingSchema::kEyeCareSlot) = plan.eye_care_limit_level / 3.0;
  return v;
}

FeatureVector encode_preference(const UserPreference& pref, const EncodingSchema& schema) {
  FeatureVector v{Eigen::VectorXd::Zero(EncodingSchema::kDimension), schema.id};
  for (std::size_t f = 0; f < kServiceFeatureCount; ++f) {
    v.values(static_cast<Eigen::Index>(f)) = pref.desired[f] ? 1.0 : 0.0;
  }
  if (pref.ward_preference) v.values(EncodingSchema::kWardSlot) = ward_level(*pref.ward_preference);
  if (pref.eye_care_preference) v.values(EncodingSchema::kEyeCareSlot) = *pref.eye_care_preference / 3.0;
  return v;
}

std::string_view to_string(CatalogErrorKind k) {
  switch (k) {
    case CatalogErrorKind::Unreadable: return "Unreadable";
    case CatalogErrorKind::MalformedFile: return "MalformedFile";
    case CatalogErrorKind::SchemaViolation: return "SchemaViolation";
    case CatalogErrorKind::EmptyCatalog: return "EmptyCatalog";
  }
  return "Unknown";
}

CatalogError::CatalogError(CatalogErrorKind kind, std::size_t line, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) +
                         (line > 0 ? " at line " + std::to_string(line) : std::string()) + ": " +
                         message),
      kind_(kind),
      line_(line) {}

std::optional<CatalogError> CatalogReport::first_error() const {
  if (fatal) return fatal;
  if (!violations.empty()) {
    const auto& v = violations.front();
    return CatalogError(CatalogErrorKind::SchemaViolation, v.line, v.field + ": " + v.message);
  }
  if (plans.empty()) return CatalogError(CatalogErrorKind::EmptyCatalog, 0, "catalog has no valid rows");
  return std::nullopt;
}

std::optional<CatalogError> RatingsReport::first_error() const {
  if (fatal) return fatal;
  if (!violations.empty()) {
    const auto& v = violations.front();
    return CatalogError(CatalogErrorKind::SchemaViolation, v.line, v.field + ": " + v.message);
  }
  return std::nullopt;
}

CatalogReport parse_catalog(std::string_view text, bool json) {
  CatalogReport report;
  try {
    std::vector<RawRow<kCatalogColumns>> rows;
    if (json) {
      rows = json_rows(text, kCatalogHeader, report.violations);
    } else if (auto parsed = csv_rows(text, kCatalogHeader)) {
      rows = std::move(*parsed);
    }
    validate_plan_rows(rows, report);
  } catch (const csv::SyntaxError& e) {
    report.fatal = CatalogError(CatalogErrorKind::MalformedFile, e.line(), e.what());
  } catch (const CatalogError& e) {
    report.fatal = e;
  }
  if (!report.fatal && report.violations.empty() && report.plans.empty()) {
    report.fatal = CatalogError(CatalogErrorKind::EmptyCatalog, 0, "catalog has no valid rows");
  }
  return report;
}

RatingsReport parse_ratings(std::string_view text, bool json) {
  RatingsReport report;
  try {
    std::vector<RawRow<kRatingsColumns>> rows;
    if (json) {
      rows = json_rows(text, kRatingsHeader, report.violations);
    } else if (auto parsed = csv_rows(text, kRatingsHeader)) {
      rows = std::move(*parsed);
    }
    validate_rating_rows(rows, report);
  } catch (const csv::SyntaxError& e) {
    report.fatal = CatalogError(CatalogErrorKind::MalformedFile, e.line(), e.what());
  } catch (const CatalogError& e) {
    report.fatal = e;
  }
  return report;
}

CatalogReport inspect_catalog(const std::filesystem::path& path) {
  try {
    return parse_catalog(read_file(path), is_json_path(path));
  } catch (const CatalogError& e) {
    CatalogReport report;
    report.fatal = e;
    return report;
  }
}

RatingsReport inspect_ratings(const std::filesystem::path& path) {
  try {
    return parse_ratings(read_file(path), is_json_path(path));
  } catch (const CatalogError& e) {
    RatingsReport report;
    report.fatal = e;
    return report;
  }
}

std::vector<PlanRecord> load_catalog(const std::filesystem::path& path) {
  auto report = inspect_catalog(path);
  if (auto err = report.first_error()) throw *err;
  return std::move(report.plans);
}

RatingsMap load_ratings(const std::filesystem::path& path) {
  auto report = inspect_ratings(path);
  if (auto err = report.first_error()) throw *err;
  return std::move(report.ratings);
}

std::string catalog_to_csv(std::span<const PlanRecord> plans) {
  std::string out;
  for (std::size_t i = 0; i < kCatalogColumns; ++i) {
    out += (i ? "," : "");
    out += kCatalogHeader[i];
  }
  out += '\n';
  for (const auto& p : plans) {
    out += csv_field(p.plan_id) + ',' + csv_field(p.hmo_id) + ',' + csv_field(p.hmo_name) + ',' +
           csv_field(p.plan_name) + ',' + std::to_string(p.premium_tier) + ',' +
           std::string(to_string(p.coverage_region));
    for (bool flag : p.features) out += flag ? ",yes" : ",no";
    out += ',' + std::string(to_string(p.ward_type)) + ',' + std::to_string(p.eye_care_limit_level) + '\n';
  }
  return out;
}

void write_catalog(const std::filesystem::path& path, std::span<const PlanRecord> plans) {
  if (!is_json_path(path)) {
    write_text(path, catalog_to_csv(plans));
    return;
  }
  auto doc = nlohmann::json::array();
  for (const auto& p : plans) {
    nlohmann::json o;
    o["plan_id"] = p.plan_id;
    o["hmo_id"] = p.hmo_id;
    o["hmo_name"] = p.hmo_name;
    o["plan_name"] = p.plan_name;
    o["premium_tier"] = p.premium_tier;
    o["coverage_region"] = to_string(p.coverage_region);
    for (auto f : kServiceFeatures) o[std::string(feature_name(f))] = has(p.features, f) ? "yes" : "no";
    o["ward_type"] = to_string(p.ward_type);
    o["eye_care_limit_level"] = p.eye_care_limit_level;
    doc.push_back(std::move(o));
  }
  write_text(path, doc.dump(2) + "\n");
}

void write_ratings(const std::filesystem::path& path, const RatingsMap& ratings) {
  if (is_json_path(path)) {
    auto doc = nlohmann::json::array();
    for (const auto& [id, r] : ratings) {
      doc.push_back({{"hmo_id", id}, {"mean_rating", r.mean_rating}, {"rating_count", r.rating_count}});
    }
    write_text(path, doc.dump(2) + "\n");
    return;
  }
  std::string out = "hmo_id,mean_rating,rating_count\n";
  for (const auto& [id, r] : ratings) {
    std::ostringstream ss;
    ss.precision(17);
    ss << r.mean_rating;
    out += csv_field(id) + ',' + ss.str() + ',' + std::to_string(r.rating_count) + '\n';
  }
  write_text(path, out);
}

}  // namespace plansage
