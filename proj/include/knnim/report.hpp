#pragma once

// JSON / CSV serialization of results. Every JSON document carries
// "schema_version".

#include "knnim/design2s.hpp"
#include "knnim/focal.hpp"
#include "knnim/io.hpp"
#include "knnim/randtest.hpp"
#include "knnim/sim.hpp"

#include "json.hpp"

#include <iosfwd>

namespace knnim {

inline constexpr int kSchemaVersion = 1;

nlohmann::json to_json(const TestReport& report);
nlohmann::json to_json(const TwoStageResult& result);
nlohmann::json to_json(const ExposureTable& table);
nlohmann::json to_json(const KRecommendation& rec, std::size_t threshold);
nlohmann::json to_json(const PowerTable& table);
nlohmann::json focal_summary(const FocalPartition& partition, std::size_t k);

// unit,is_focal
void write_focals_csv(std::ostream& out, const FocalPartition& partition, bool one_based = true);
// own,neighbors,count with neighbours as a rank-ordered bit string ("01").
void write_exposures_csv(std::ostream& out, const ExposureTable& table);

}  // namespace knnim
