#pragma once

#include <string>

#include "json.hpp"
#include "molcap/adaptation.hpp"
#include "molcap/capacity.hpp"
#include "molcap/channel.hpp"
#include "molcap/production.hpp"

namespace molcap {

/// Malformed or schema-violating configuration/input (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ConfigError if `obj` is not an object or carries keys outside
/// `allowed`.
void require_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                  const std::string& context);

// Wire formats. Field names are part of the file contract:
//   ProductionFunction    {"family": str, "params": {...}}
//   ChannelProfile        {"coeffs": [...]}
//   DominationCertificate {"q": [...], "mass": x, "residual": x}
nlohmann::json to_json(const ProductionFunction& f);
ProductionFunction production_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ChannelProfile& p);
ChannelProfile profile_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DominationCertificate& c);
DominationCertificate certificate_from_json(const nlohmann::json& j);

nlohmann::json to_json(const InputDistribution& d);
InputDistribution distribution_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BoundReport& r);
BoundReport bound_report_from_json(const nlohmann::json& j);

/// Stable hash of a configuration document (canonical dump, FNV-1a 64).
std::uint64_t config_hash(const nlohmann::json& config);

}  // namespace molcap
