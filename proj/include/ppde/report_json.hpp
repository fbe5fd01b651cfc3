#pragma once

#include "json.hpp"
#include "ppde/scheme.hpp"

namespace ppde {

nlohmann::json to_json(const SchemeParams& params);
nlohmann::json to_json(const SolveResult& result);
nlohmann::json to_json(const MonotonicityReport& report);

}  // namespace ppde
