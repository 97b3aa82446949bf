#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fhm/scenario.hpp"
#include "fhm/types.hpp"

namespace fhm {

enum class GroupBy { national, region, size_class, specialization, crop };

std::string to_string(GroupBy g);
std::optional<GroupBy> group_by_from(const std::string& s);

struct IndicatorRow {
    std::string group;
    std::string indicator;  // area_ha, area_share_pct, production_t, yield_kg_ha,
                            // fertilizer_kg_ha, mean_income_fcfa, beneficiary_rate_pct
    double value = 0.0;
    std::string unit;
};

struct IndicatorTable {
    GroupBy group_by = GroupBy::national;
    std::vector<IndicatorRow> rows;  // sorted by (group, indicator)

    std::optional<double> find(const std::string& group, const std::string& indicator) const;
};

// Weighted aggregation with the survey expansion factors; deterministic
// summation order (households sorted by id).
IndicatorTable aggregate(const std::map<std::string, Solution>& results, const ModelInstance& model,
                         GroupBy group_by);

struct CompareRow {
    std::string group;
    std::string indicator;
    double baseline = 0.0;
    double scenario = 0.0;
    std::optional<double> pct_change;  // empty -> flagged cell (baseline zero)
};

std::vector<CompareRow> compare(const IndicatorTable& scenario, const IndicatorTable& baseline);

struct DistributionPoint {
    double cumulative_weight_share = 0.0;  // 0..1, after sorting gaps ascending
    double gap_pct = 0.0;
    std::string household;
};

struct DistributionCurve {
    std::vector<DistributionPoint> points;
    std::vector<Diagnostic> excluded;  // nonpositive reference income
};

DistributionCurve income_distribution(const std::map<std::string, Solution>& results,
                                      const std::map<std::string, Solution>& reference,
                                      const ModelInstance& model);

struct CostBenefit {
    double cost = 0.0;     // FCFA, weighted subsidy outlay
    double benefit = 0.0;  // FCFA, weighted income gain over the abolition run
    std::optional<double> ratio;
};

CostBenefit cost_benefit(const std::map<std::string, Solution>& scenario,
                         const std::map<std::string, Solution>& abolition,
                         const ModelInstance& model);

void write_indicator_csv(const std::string& path, const IndicatorTable& table);
void write_compare_csv(const std::string& path, const std::vector<CompareRow>& rows);
void write_distribution_csv(const std::string& path, const DistributionCurve& curve);
void write_cost_benefit_json(const std::string& path, const CostBenefit& cb);

}  // namespace fhm
