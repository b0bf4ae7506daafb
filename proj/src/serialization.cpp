#include "molcap/serialization.hpp"

#include <set>

#include "molcap/stats.hpp"

namespace molcap {

using nlohmann::json;

void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                  const std::string& context) {
  if (!obj.is_object()) throw ConfigError(context + ": expected a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!ok.count(key)) throw ConfigError(context + ": unknown field '" + key + "'");
  }
}

namespace {

double number_at(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw ConfigError(context + ": missing numeric field '" + key + "'");
  return j.at(key).get<double>();
}

std::vector<double> numbers_at(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key) || !j.at(key).is_array())
    throw ConfigError(context + ": missing array field '" + key + "'");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw ConfigError(context + ": '" + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

json to_json(const ProductionFunction& f) {
  json params;
  std::string family;
  switch (f.family()) {
    case ProductionFamily::affine:
      family = "affine";
      params["v"] = f.rate();
      break;
    case ProductionFamily::affine_capped:
      family = "affine_capped";
      params["v"] = f.rate();
      params["phi"] = f.cap();
      break;
    case ProductionFamily::sqrt_offset:
      family = "sqrt_offset";
      params["c"] = f.offset();
      break;
    case ProductionFamily::piecewise_linear: {
      family = "piecewise_linear";
      json knots = json::array();
      for (const Knot& k : f.knots()) knots.push_back(json::array({k.s, k.f}));
      params["knots"] = knots;
      break;
    }
  }
  return json{{"family", family}, {"params", params}};
}

ProductionFunction production_from_json(const json& j) {
  require_keys(j, {"family", "params"}, "production");
  if (!j.contains("family") || !j.at("family").is_string() || !j.contains("params"))
    throw ConfigError("production: needs 'family' (string) and 'params'");
  const std::string family = j.at("family").get<std::string>();
  const json& params = j.at("params");
  try {
    if (family == "affine") {
      require_keys(params, {"v"}, "production.params");
      return ProductionFunction::affine(number_at(params, "v", "production.params"));
    }
    if (family == "affine_capped") {
      require_keys(params, {"v", "phi"}, "production.params");
      return ProductionFunction::affine_capped(number_at(params, "v", "production.params"),
                                               number_at(params, "phi", "production.params"));
    }
    if (family == "sqrt_offset") {
      require_keys(params, {"c"}, "production.params");
      return ProductionFunction::sqrt_offset(number_at(params, "c", "production.params"));
    }
    if (family == "piecewise_linear") {
      require_keys(params, {"knots"}, "production.params");
      if (!params.contains("knots") || !params.at("knots").is_array())
        throw ConfigError("production.params: 'knots' must be an array of [s, f] pairs");
      std::vector<Knot> knots;
      for (const auto& kj : params.at("knots")) {
        if (!kj.is_array() || kj.size() != 2 || !kj[0].is_number() || !kj[1].is_number())
          throw ConfigError("production.params: each knot must be a [s, f] number pair");
        knots.push_back({kj[0].get<double>(), kj[1].get<double>()});
      }
      return ProductionFunction::piecewise_linear(std::move(knots));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("production: ") + e.what());
  }
  throw ConfigError("production: unknown family '" + family + "'");
}

json to_json(const ChannelProfile& p) { return json{{"coeffs", p.coeffs()}}; }

ChannelProfile profile_from_json(const json& j) {
  require_keys(j, {"coeffs"}, "channel profile");
  try {
    return ChannelProfile(numbers_at(j, "coeffs", "channel profile"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("channel profile: ") + e.what());
  }
}

json to_json(const DominationCertificate& c) {
  return json{{"q", c.q}, {"mass", c.mass}, {"residual", c.residual}};
}

DominationCertificate certificate_from_json(const json& j) {
  require_keys(j, {"q", "mass", "residual"}, "certificate");
  DominationCertificate c;
  c.q = numbers_at(j, "q", "certificate");
  c.mass = number_at(j, "mass", "certificate");
  c.residual = number_at(j, "residual", "certificate");
  return c;
}

json to_json(const InputDistribution& d) {
  return json{{"support", d.support}, {"pmf", d.pmf}};
}

InputDistribution distribution_from_json(const json& j) {
  require_keys(j, {"support", "pmf"}, "distribution");
  try {
    return InputDistribution(numbers_at(j, "support", "distribution"),
                             numbers_at(j, "pmf", "distribution"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("distribution: ") + e.what());
  }
}

json to_json(const BoundReport& r) {
  json j{{"bound_kind", to_string(r.kind)},
         {"value_nats", r.value_nats},
         {"constraint_c", r.constraint_c},
         {"iterations", r.iterations},
         {"final_gap", r.final_gap},
         {"truncation_warning", r.truncation_warning}};
  if (r.achieving) j["achieving"] = to_json(*r.achieving);
  if (r.stationary) j["stationary"] = *r.stationary;
  return j;
}

BoundReport bound_report_from_json(const json& j) {
  require_keys(j,
               {"bound_kind", "value_nats", "constraint_c", "iterations", "final_gap",
                "truncation_warning", "achieving", "stationary"},
               "bound report");
  BoundReport r;
  if (!j.contains("bound_kind") || !j.at("bound_kind").is_string())
    throw ConfigError("bound report: missing 'bound_kind'");
  r.kind = bound_kind_from_string(j.at("bound_kind").get<std::string>());
  r.value_nats = number_at(j, "value_nats", "bound report");
  r.constraint_c = number_at(j, "constraint_c", "bound report");
  r.iterations = static_cast<long>(number_at(j, "iterations", "bound report"));
  r.final_gap = number_at(j, "final_gap", "bound report");
  if (j.contains("truncation_warning")) r.truncation_warning = j.at("truncation_warning").get<bool>();
  if (j.contains("achieving")) r.achieving = distribution_from_json(j.at("achieving"));
  if (j.contains("stationary")) r.stationary = numbers_at(j, "stationary", "bound report");
  return r;
}

std::uint64_t config_hash(const json& config) {
  const std::string canonical = config.dump();
  return fnv1a64(canonical.data(), canonical.size());
}

}  // namespace molcap
