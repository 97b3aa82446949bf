#pragma once

#include <string>

#include "fhm/types.hpp"

namespace fhm {

// Model directory layout: manifest.json plus households.csv, activities.csv,
// observed_levels.csv, prices.csv (and consumption.csv when present).
void write_model(const ModelInstance& model, const std::string& dir);
ModelInstance read_model(const std::string& dir);

SubsidyPolicy policy_from_json(const std::string& json_text);
std::string policy_to_json(const SubsidyPolicy& policy);

// Manifest written into every output directory; timestamp honors
// SOURCE_DATE_EPOCH for reproducible runs.
void write_run_manifest(const std::string& dir, const std::string& stage,
                        const std::string& input_dir, long long seed = 0);

}  // namespace fhm
