#pragma once

// JSON wire formats shared by the HTTP service and the CLI. Both front ends
// build their recommend payload through respond_recommend, which is what
// makes their output byte-identical.

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "plansage/catalog.hpp"
#include "plansage/pipeline.hpp"

namespace plansage {

struct FieldError {
  std::string field;
  std::string message;
};

class RequestError : public std::invalid_argument {
 public:
  explicit RequestError(std::vector<FieldError> errors);
  const std::vector<FieldError>& errors() const noexcept { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

/// Validates a preference object; problems are appended to `errors` with
/// field paths prefixed by `path`.
UserPreference parse_preference(const nlohmann::json& j, const std::string& path,
                                std::vector<FieldError>& errors);

/// Parses {"preference": {...}, "metric": "...", "pool_size": n}.
/// Throws RequestError listing every invalid field.
RecommendationRequest parse_request(const nlohmann::json& j, Metric default_metric);

nlohmann::json to_json(const UserPreference& pref);
nlohmann::json to_json(const PlanRecord& plan);
nlohmann::json to_json(const Recommendation& rec);
nlohmann::json to_json(const std::vector<Violation>& violations);

struct WireResponse {
  int status = 200;
  /// "ok", "no_candidates", "invalid_request", "empty_preference", ...
  std::string code;
  std::string body;
};

/// Full recommend round trip from request text to response body.
WireResponse respond_recommend(std::string_view request_body, const Snapshot& snapshot,
                               Metric default_metric);

/// Serializes a JSON document the way every endpoint does.
std::string render(const nlohmann::json& j);

}  // namespace plansage
