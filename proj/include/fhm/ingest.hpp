#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fhm/types.hpp"

namespace fhm {

struct CleaningPolicy {
    enum class Method { tukey_drop, winsorize };
    Method method = Method::tukey_drop;
    double tukey_k = 1.5;
    double winsor_lo = 5.0;   // percentile
    double winsor_hi = 95.0;  // percentile
    // missing values are imputed with the median of surviving values
};

struct PlotRow {
    std::string plot_id;
    std::string household;
    std::string crop;
    Season season = Season::rainy;
    std::optional<double> area_ha;
    std::optional<double> production_kg;
    std::optional<double> exp_seed, exp_fertilizer, exp_phyto, exp_equipment, exp_hired_labor, exp_other;
    std::optional<double> fertilizer_kg;
    std::optional<double> labor_days;
    std::optional<double> sale_price;
    std::optional<Practice> practice;  // filled by typology labels, if any
};

struct HouseholdRow {
    std::string id;
    std::string region;
    double weight = 1.0;
    double members = 0.0;
    double adult_equivalents = 1.0;
    double exog_income = 0.0;
    bool beneficiary = false;
};

struct SurveyDataset {
    std::vector<HouseholdRow> households;
    std::vector<PlotRow> plots;
};

struct CleaningAction {
    std::string household;
    std::string plot_id;
    std::string field;
    std::string raw_value;
    std::string action;  // "outlier->median" | "missing->median" | "clamped"
};

struct IngestResult {
    ModelInstance model;
    std::vector<CleaningAction> report;
    std::vector<Diagnostic> diagnostics;  // excluded households and the like
};

struct IngestConfig {
    CleaningPolicy cleaning;
    double cash_multiplier = 1.2;       // cash endowment = base input spend x multiplier
    double fertilizer_price = 300.0;    // FCFA/kg
    double subsidy_rate = 0.5;          // base-year program
    double base_quota_kg = 150.0;       // 3 bags of 50 kg
    double default_labor_days_ha = 25.0;
    double labor_days_per_adult = 130.0;  // per season
    double default_buy_markup = 1.15;
    double default_sell_markdown = 1.0;
    bool clean_per_region = true;  // cleaning groups are crop x region, else crop only
};

// Survey directory: households.csv + plots.csv.
SurveyDataset load_survey(const std::string& dir);

// Single-series cleaner. Output has the input's length and no missing entries.
std::vector<double> clean_series(const std::vector<std::optional<double>>& values,
                                 const CleaningPolicy& policy,
                                 std::vector<std::string>* actions = nullptr);

IngestResult build_households(const SurveyDataset& dataset, const IngestConfig& config,
                              const std::map<std::string, Practice>& practice_labels = {});

void write_cleaning_report(const std::string& path, const std::vector<CleaningAction>& report);

}  // namespace fhm
