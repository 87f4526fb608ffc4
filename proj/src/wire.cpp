#include "plansage/wire.hpp"

namespace plansage {

namespace {

using nlohmann::json;

std::string join_fields(const std::vector<FieldError>& errors) {
  std::string out;
  for (const auto& e : errors) out += (out.empty() ? "" : "; ") + e.field + ": " + e.message;
  return out;
}

json error_body(std::string_view code, std::string_view message) {
  return {{"code", code}, {"message", message}};
}

}  // namespace

RequestError::RequestError(std::vector<FieldError> errors)
    : std::invalid_argument("invalid request: " + join_fields(errors)), errors_(std::move(errors)) {}

UserPreference parse_preference(const json& j, const std::string& path,
                                std::vector<FieldError>& errors) {
  UserPreference pref;
  auto field = [&path](std::string_view name) { return path + std::string(name); };
  if (!j.is_object()) {
    errors.push_back({path.empty() ? "preference" : path.substr(0, path.size() - 1),
                      "must be an object"});
    return pref;
  }

  for (const auto& [key, value] : j.items()) {
    if (key != "location" && key != "max_tier" && key != "desired" && key != "ward_preference" &&
        key != "eye_care_preference") {
      errors.push_back({field(key), "unknown field"});
    }
  }

  if (!j.contains("location")) {
    errors.push_back({field("location"), "required"});
  } else if (const auto& v = j["location"]; !v.is_string() || !parse_location(v.get<std::string>())) {
    errors.push_back({field("location"), "must be \"lagos\" or \"nationwide\""});
  } else {
    pref.location = *parse_location(v.get<std::string>());
  }

  if (!j.contains("max_tier")) {
    errors.push_back({field("max_tier"), "required"});
  } else if (const auto& v = j["max_tier"];
             !v.is_number_integer() || v.get<long long>() < kMinTier || v.get<long long>() > kMaxTier) {
    errors.push_back({field("max_tier"), "must be an integer in [1,4]"});
  } else {
    pref.max_tier = v.get<int>();
  }

  if (j.contains("desired")) {
    const auto& d = j["desired"];
    if (!d.is_object()) {
      errors.push_back({field("desired"), "must be an object of feature name to boolean"});
    } else {
      for (const auto& [name, value] : d.items()) {
        const auto f = parse_feature_name(name);
        const auto key = field("desired.") + name;
        if (!f) {
          errors.push_back({key, "unknown service feature"});
          continue;
        }
        if (value.is_boolean()) {
          set(pref.desired, *f, value.get<bool>());
        } else if (value.is_string() && (value == "yes" || value == "no")) {
          set(pref.desired, *f, value == "yes");
        } else {
          errors.push_back({key, "must be a boolean"});
        }
      }
    }
  }

  if (j.contains("ward_preference") && !j["ward_preference"].is_null()) {
    const auto& v = j["ward_preference"];
    if (!v.is_string() || !parse_ward(v.get<std::string>())) {
      errors.push_back({field("ward_preference"), "must be general, semi_private, private or null"});
    } else {
      pref.ward_preference = parse_ward(v.get<std::string>());
    }
  }

  if (j.contains("eye_care_preference") && !j["eye_care_preference"].is_null()) {
    const auto& v = j["eye_care_preference"];
    if (!v.is_number_integer() || v.get<long long>() < 0 || v.get<long long>() > kMaxEyeCareLevel) {
      errors.push_back({field("eye_care_preference"), "must be an integer in [0,3] or null"});
    } else {
      pref.eye_care_preference = v.get<int>();
    }
  }
  return pref;
}

RecommendationRequest parse_request(const json& j, Metric default_metric) {
  std::vector<FieldError> errors;
  RecommendationRequest req;
  req.metric = default_metric;

  if (!j.is_object()) throw RequestError(std::vector<FieldError>{{"body", "must be a JSON object"}});
  for (const auto& [key, value] : j.items()) {
    if (key != "preference" && key != "metric" && key != "pool_size") {
      errors.push_back({key, "unknown field"});
    }
  }

  if (!j.contains("preference")) {
    errors.push_back({"preference", "required"});
  } else {
    req.preference = parse_preference(j["preference"], "preference.", errors);
  }

  if (j.contains("metric") && !j["metric"].is_null()) {
    const auto& v = j["metric"];
    const auto m = v.is_string() ? parse_metric(v.get<std::string>()) : std::nullopt;
    if (!m) {
      errors.push_back({"metric", "must be \"cosine\" or \"knn\""});
    } else {
      req.metric = *m;
    }
  }

  if (j.contains("pool_size") && !j["pool_size"].is_null()) {
    const auto& v = j["pool_size"];
    if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 10000) {
      errors.push_back({"pool_size", "must be a positive integer"});
    } else {
      req.pool_size = effective_pool_size(v.get<std::size_t>());
    }
  }

  if (!errors.empty()) throw RequestError(std::move(errors));
  return req;
}

json to_json(const UserPreference& pref) {
  json desired = json::object();
  for (auto f : kServiceFeatures) desired[std::string(feature_name(f))] = has(pref.desired, f);
  return {
      {"location", to_string(pref.location)},
      {"max_tier", pref.max_tier},
      {"desired", desired},
      {"ward_preference", pref.ward_preference ? json(to_string(*pref.ward_preference)) : json()},
      {"eye_care_preference", pref.eye_care_preference ? json(*pref.eye_care_preference) : json()},
  };
}

json to_json(const PlanRecord& plan) {
  json j = {
      {"plan_id", plan.plan_id},
      {"hmo_id", plan.hmo_id},
      {"hmo_name", plan.hmo_name},
      {"plan_name", plan.plan_name},
      {"premium_tier", plan.premium_tier},
      {"coverage_region", to_string(plan.coverage_region)},
      {"ward_type", to_string(plan.ward_type)},
      {"eye_care_limit_level", plan.eye_care_limit_level},
  };
  for (auto f : kServiceFeatures) j[std::string(feature_name(f))] = has(plan.features, f);
  return j;
}

json to_json(const Recommendation& rec) {
  return {
      {"rank", rec.rank},
      {"plan_id", rec.plan_id},
      {"hmo_id", rec.hmo_id},
      {"hmo_name", rec.hmo_name},
      {"plan_name", rec.plan_name},
      {"premium_tier", rec.premium_tier},
      {"similarity_score", rec.similarity_score},
      {"mean_rating", rec.mean_rating},
      {"matched_features", rec.matched_features},
  };
}

json to_json(const std::vector<Violation>& violations) {
  json arr = json::array();
  for (const auto& v : violations) {
    arr.push_back({{"line", v.line}, {"field", v.field}, {"message", v.message}});
  }
  return arr;
}

std::string render(const json& j) { return j.dump() + "\n"; }

WireResponse respond_recommend(std::string_view request_body, const Snapshot& snapshot,
                               Metric default_metric) {
  json doc;
  try {
    doc = json::parse(request_body);
  } catch (const json::parse_error& e) {
    json body = error_body("invalid_request", "body is not valid JSON");
    body["errors"] = json::array({{{"field", "body"}, {"message", e.what()}}});
    return {400, "invalid_request", render(body)};
  }

  RecommendationRequest request;
  try {
    request = parse_request(doc, default_metric);
  } catch (const RequestError& e) {
    json body = error_body("invalid_request", "request failed validation");
    body["errors"] = json::array();
    for (const auto& fe : e.errors()) {
      body["errors"].push_back({{"field", fe.field}, {"message", fe.message}});
    }
    return {400, "invalid_request", render(body)};
  }

  json body = {
      {"metric", to_string(request.metric)},
      {"schema_id", snapshot.schema().id},
      {"recommendations", json::array()},
  };
  try {
    for (const auto& rec : recommend(request, snapshot)) body["recommendations"].push_back(to_json(rec));
    body["code"] = "ok";
    return {200, "ok", render(body)};
  } catch (const NoCandidatesError& e) {
    body["code"] = "no_candidates";
    body["message"] = e.what();
    return {200, "no_candidates", render(body)};
  } catch (const EmptyPreferenceError& e) {
    return {422, "empty_preference", render(error_body("empty_preference", e.what()))};
  }
}

}  // namespace plansage
