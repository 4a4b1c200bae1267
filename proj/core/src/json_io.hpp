#pragma once

#include <set>
#include <string>

#include <json.hpp>

#include "procstruct/error.hpp"
#include "procstruct/predictor.hpp"

namespace procstruct::detail {

using json = nlohmann::ordered_json;

/// Rejects keys outside `allowed`, naming the offending key and section.
inline void require_known_keys(const json& obj, const std::set<std::string>& allowed,
                               const std::string& section) {
  if (!obj.is_object()) throw ConfigError(section + " must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + section);
}

json predictor_config_to_json(const PredictorConfig& c);
/// Missing keys keep the values already in `base`.
PredictorConfig predictor_config_from_json(const json& j, PredictorConfig base = {});

}  // namespace procstruct::detail
