#include "fhm/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "fhm/csv.hpp"
#include "fhm/typology.hpp"

namespace fhm {

std::string to_string(GroupBy g) {
    switch (g) {
        case GroupBy::national: return "national";
        case GroupBy::region: return "region";
        case GroupBy::size_class: return "size_class";
        case GroupBy::specialization: return "specialization";
        case GroupBy::crop: return "crop";
    }
    return "?";
}

std::optional<GroupBy> group_by_from(const std::string& s) {
    if (s == "national") return GroupBy::national;
    if (s == "region") return GroupBy::region;
    if (s == "size_class" || s == "size") return GroupBy::size_class;
    if (s == "specialization") return GroupBy::specialization;
    if (s == "crop") return GroupBy::crop;
    return std::nullopt;
}

std::optional<double> IndicatorTable::find(const std::string& group, const std::string& indicator) const {
    for (const auto& r : rows)
        if (r.group == group && r.indicator == indicator) return r.value;
    return std::nullopt;
}

IndicatorTable aggregate(const std::map<std::string, Solution>& results, const ModelInstance& model,
                         GroupBy group_by) {
    IndicatorTable table;
    table.group_by = group_by;

    struct Acc {
        double area = 0, production = 0, fert = 0, weight = 0, income = 0, users = 0;
    };
    std::map<std::string, Acc> acc;
    double total_area = 0;

    std::vector<const Household*> hs;
    for (const auto& h : model.households)
        if (results.count(h.id)) hs.push_back(&h);
    std::sort(hs.begin(), hs.end(), [](const Household* a, const Household* b) { return a->id < b->id; });

    for (const Household* h : hs) {
        const Solution& s = results.at(h->id);
        if (!s.feasible) continue;
        std::string hgroup;
        switch (group_by) {
            case GroupBy::national: hgroup = "national"; break;
            case GroupBy::region: hgroup = h->region; break;
            case GroupBy::size_class: hgroup = to_string(economic_size(*h, model).size); break;
            case GroupBy::specialization: hgroup = to_string(classify_farm(*h, model).specialization); break;
            case GroupBy::crop: break;
        }
        double h_area = 0, h_prod = 0, h_fert = 0;
        for (const auto& [aid, ha] : s.levels) {
            const Activity* a = model.find_activity(aid);
            if (!a) continue;
            double w = h->weight;
            h_area += ha;
            h_prod += ha * a->yield_kg_ha;
            h_fert += ha * a->fertilizer_kg_ha;
            if (group_by == GroupBy::crop) {
                Acc& c = acc[a->product];
                c.area += w * ha;
                c.production += w * ha * a->yield_kg_ha;
                c.fert += w * ha * a->fertilizer_kg_ha;
            }
        }
        total_area += h->weight * h_area;
        if (group_by != GroupBy::crop) {
            Acc& g = acc[hgroup];
            g.area += h->weight * h_area;
            g.production += h->weight * h_prod;
            g.fert += h->weight * h_fert;
            g.weight += h->weight;
            g.income += h->weight * s.total_income;
            if (s.fertilizer_subsidized_kg > 1e-9) g.users += h->weight;
        }
    }

    for (const auto& [group, a] : acc) {
        auto push = [&](const std::string& ind, double v, const std::string& unit) {
            table.rows.push_back({group, ind, v, unit});
        };
        push("area_ha", a.area, "ha");
        push("area_share_pct", total_area > 0 ? 100.0 * a.area / total_area : 0.0, "%");
        push("production_t", a.production / 1000.0, "t");
        if (a.area > 0) {
            push("yield_kg_ha", a.production / a.area, "kg/ha");
            push("fertilizer_kg_ha", a.fert / a.area, "kg/ha");
        }
        if (group_by != GroupBy::crop && a.weight > 0) {
            push("mean_income_fcfa", a.income / a.weight, "FCFA");
            push("beneficiary_rate_pct", 100.0 * a.users / a.weight, "%");
        }
    }
    std::sort(table.rows.begin(), table.rows.end(), [](const IndicatorRow& x, const IndicatorRow& y) {
        return x.group != y.group ? x.group < y.group : x.indicator < y.indicator;
    });
    return table;
}

std::vector<CompareRow> compare(const IndicatorTable& scenario, const IndicatorTable& baseline) {
    std::vector<CompareRow> out;
    for (const auto& b : baseline.rows) {
        auto sv = scenario.find(b.group, b.indicator);
        if (!sv) throw std::invalid_argument("compare: scenario table missing " + b.group + "/" + b.indicator);
        CompareRow row;
        row.group = b.group;
        row.indicator = b.indicator;
        row.baseline = b.value;
        row.scenario = *sv;
        if (b.value != 0.0) row.pct_change = 100.0 * (*sv - b.value) / b.value;
        out.push_back(row);
    }
    return out;
}

DistributionCurve income_distribution(const std::map<std::string, Solution>& results,
                                      const std::map<std::string, Solution>& reference,
                                      const ModelInstance& model) {
    DistributionCurve curve;
    struct Gap {
        double gap, weight;
        std::string id;
    };
    std::vector<Gap> gaps;
    for (const auto& h : model.households) {
        auto rit = results.find(h.id);
        auto bit = reference.find(h.id);
        if (rit == results.end() || bit == reference.end()) continue;
        double ref = bit->second.total_income;
        if (ref <= 0) {
            curve.excluded.push_back({h.id, "nonpositive reference income"});
            continue;
        }
        gaps.push_back({100.0 * (rit->second.total_income - ref) / ref, h.weight, h.id});
    }
    std::sort(gaps.begin(), gaps.end(), [](const Gap& a, const Gap& b) {
        return a.gap != b.gap ? a.gap < b.gap : a.id < b.id;
    });
    double total = 0;
    for (const auto& g : gaps) total += g.weight;
    double cum = 0;
    for (const auto& g : gaps) {
        cum += g.weight;
        curve.points.push_back({total > 0 ? cum / total : 0.0, g.gap, g.id});
    }
    return curve;
}

CostBenefit cost_benefit(const std::map<std::string, Solution>& scenario,
                         const std::map<std::string, Solution>& abolition,
                         const ModelInstance& model) {
    CostBenefit cb;
    for (const auto& h : model.households) {
        auto sit = scenario.find(h.id);
        auto ait = abolition.find(h.id);
        if (sit == scenario.end() || ait == abolition.end()) continue;
        cb.cost += h.weight * sit->second.subsidy_outlay;
        cb.benefit += h.weight * (sit->second.total_income - ait->second.total_income);
    }
    if (cb.cost > 0) cb.ratio = cb.benefit / cb.cost;
    return cb;
}

void write_indicator_csv(const std::string& path, const IndicatorTable& table) {
    csv::Table t;
    t.header = {"group", "indicator", "value", "unit"};
    for (const auto& r : table.rows)
        t.rows.push_back({r.group, r.indicator, csv::format_double(r.value), r.unit});
    csv::write_file(path, t);
}

void write_compare_csv(const std::string& path, const std::vector<CompareRow>& rows) {
    csv::Table t;
    t.header = {"group", "indicator", "baseline", "scenario", "pct_change", "flag"};
    for (const auto& r : rows) {
        t.rows.push_back({r.group, r.indicator, csv::format_double(r.baseline),
                          csv::format_double(r.scenario),
                          r.pct_change ? csv::format_double(*r.pct_change) : "",
                          r.pct_change ? "" : "new"});
    }
    csv::write_file(path, t);
}

void write_distribution_csv(const std::string& path, const DistributionCurve& curve) {
    csv::Table t;
    t.header = {"cumulative_weight_share", "income_gap_pct", "household"};
    for (const auto& p : curve.points)
        t.rows.push_back({csv::format_double(p.cumulative_weight_share),
                          csv::format_double(p.gap_pct), p.household});
    csv::write_file(path, t);
}

void write_cost_benefit_json(const std::string& path, const CostBenefit& cb) {
    nlohmann::json j;
    j["cost_fcfa"] = cb.cost;
    j["benefit_fcfa"] = cb.benefit;
    if (cb.ratio)
        j["ratio"] = *cb.ratio;
    else
        j["ratio"] = nullptr;
    std::ofstream(path) << j.dump(2) << "\n";
}

}  // namespace fhm
