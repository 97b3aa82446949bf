#pragma once

#include <map>
#include <optional>
#include <string>

#include "fhm/calibration.hpp"
#include "fhm/types.hpp"

namespace fhm {

struct BaselineSpec {
    int years = 6;  // 2011 -> 2017
    double cost_inflation = 0.027;
    std::map<std::string, double> yield_shift;  // product -> fraction
    std::map<std::string, double> price_shift;

    static BaselineSpec senegal_2011_2017();  // published yield/price shifts
};

struct ScenarioSpec {
    std::string name = "custom";
    SubsidyPolicy policy;
    BaselineSpec baseline;
};

// Named presets: "baseline" (current program carried forward), "abol",
// "univ" (75 kg cap, everyone), "cibl" (75 kg cap, holdings of 5 ha or less).
// The baseline preset adopts the model's base policy at run time.
ScenarioSpec scenario_preset(const std::string& name);
ScenarioSpec scenario_from_json(const std::string& json_text);
std::string scenario_to_json(const ScenarioSpec& spec);

// Input costs compound with inflation, yields and prices move by their
// published shifts; the subsidy policy is carried unchanged.
ModelInstance project_baseline(const ModelInstance& model, const BaselineSpec& spec);

// Behavioral terms for the projected model: Q scales with each activity's
// gross-margin deflator and d is re-derived so the projection stays exactly
// anchored on the calibrated levels.
CalibrationSet project_calibration(const ModelInstance& base_model, const ModelInstance& projected,
                                   const CalibrationSet& base_set);

double eligibility_rate(const std::vector<Household>& households, const SubsidyPolicy& policy);

struct ScenarioResult {
    std::string name;
    SubsidyPolicy policy;
    std::map<std::string, Solution> solutions;
    double total_outlay_weighted = 0.0;
    double total_income_weighted = 0.0;
    double eligible_share = 0.0;
};

ScenarioResult run_scenario(const ModelInstance& projected_model, const CalibrationSet& calibrations,
                            const ScenarioSpec& spec, int jobs = 1);

}  // namespace fhm
