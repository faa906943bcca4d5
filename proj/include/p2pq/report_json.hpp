#pragma once

#include <json.hpp>

#include "p2pq/analytics.hpp"
#include "p2pq/ctmc.hpp"
#include "p2pq/model.hpp"
#include "p2pq/sim.hpp"

// JSON views with stable field names. Absent optionals serialize as null.
namespace p2pq {

nlohmann::json to_json(const SystemParams& params);
nlohmann::json to_json(const DerivedLoads& loads);
nlohmann::json to_json(const StabilityReport& report);
nlohmann::json to_json(const analytics::AnalyticEstimates& est);
nlohmann::json to_json(const analytics::ServiceTimeMoments& m);
nlohmann::json to_json(const ctmc::CtmcMoments& m);
nlohmann::json to_json(const sim::SimReport& report);

}  // namespace p2pq
