#pragma once

#include "cdas/scheduler_core.hpp"

#include <nlohmann/json.hpp>

namespace cdas {

void to_json(nlohmann::json& j, const ProblemId& id);
void from_json(const nlohmann::json& j, ProblemId& id);

void to_json(nlohmann::json& j, const ProblemRecord& r);
void from_json(const nlohmann::json& j, ProblemRecord& r);

void to_json(nlohmann::json& j, const CompetenceState& c);
void from_json(const nlohmann::json& j, CompetenceState& c);

void to_json(nlohmann::json& j, const PassRateObservation& o);
void from_json(const nlohmann::json& j, PassRateObservation& o);

}  // namespace cdas
