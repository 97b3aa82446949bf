#include "fhm/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <stdexcept>

#include "fhm/csv.hpp"
#include "fhm/stats.hpp"

namespace fhm {

namespace {

ProductCategory category_for_crop(const std::string& crop) {
    static const std::map<std::string, ProductCategory> table = {
        {"mil", ProductCategory::cereal},        {"sorgho", ProductCategory::cereal},
        {"mais", ProductCategory::cereal},       {"riz", ProductCategory::cereal},
        {"fonio", ProductCategory::cereal},      {"manioc", ProductCategory::root_tuber},
        {"patate", ProductCategory::root_tuber}, {"arachide", ProductCategory::legume},
        {"niebe", ProductCategory::legume},      {"tomate", ProductCategory::cash_horticulture},
        {"oignon", ProductCategory::cash_horticulture},
        {"aubergine", ProductCategory::cash_horticulture},
        {"pasteque", ProductCategory::cash_horticulture},
        {"gombo", ProductCategory::cash_horticulture},
        {"coton", ProductCategory::cash_other},  {"sesame", ProductCategory::cash_other},
        {"bissap", ProductCategory::cash_other}, {"anacarde", ProductCategory::cash_other},
    };
    auto it = table.find(crop);
    return it == table.end() ? ProductCategory::cash_other : it->second;
}

std::optional<double> opt_num(const csv::Table& t, std::size_t row, int col) {
    if (col < 0) return std::nullopt;
    return csv::parse_double(t.cell(row, col));
}

}  // namespace

SurveyDataset load_survey(const std::string& dir) {
    SurveyDataset ds;
    csv::Table hh = csv::read_file(dir + "/households.csv");
    int c_id = hh.require_column("id");
    int c_reg = hh.require_column("region");
    int c_w = hh.require_column("weight");
    int c_mem = hh.column("members");
    int c_ae = hh.column("adult_equivalents");
    int c_ex = hh.column("exog_income");
    int c_ben = hh.column("beneficiary");
    std::set<std::string> seen;
    for (std::size_t r = 0; r < hh.rows.size(); ++r) {
        HouseholdRow h;
        h.id = hh.cell(r, c_id);
        if (!seen.insert(h.id).second) throw std::runtime_error("duplicate id '" + h.id + "' in households.csv");
        h.region = hh.cell(r, c_reg);
        h.weight = opt_num(hh, r, c_w).value_or(1.0);
        h.members = opt_num(hh, r, c_mem).value_or(0.0);
        h.adult_equivalents = opt_num(hh, r, c_ae).value_or(1.0);
        h.exog_income = opt_num(hh, r, c_ex).value_or(0.0);
        h.beneficiary = c_ben >= 0 && hh.cell(r, c_ben) == "1";
        ds.households.push_back(h);
    }

    csv::Table pl = csv::read_file(dir + "/plots.csv");
    int p_id = pl.require_column("plot_id");
    int p_hh = pl.require_column("household");
    int p_crop = pl.require_column("crop");
    int p_season = pl.require_column("season");
    int p_area = pl.require_column("area_ha");
    int p_prod = pl.require_column("production_kg");
    int p_seed = pl.column("exp_seed");
    int p_fert = pl.column("exp_fertilizer");
    int p_phyto = pl.column("exp_phyto");
    int p_equip = pl.column("exp_equipment");
    int p_hired = pl.column("exp_hired_labor");
    int p_other = pl.column("exp_other");
    int p_fkg = pl.column("fertilizer_kg");
    int p_lab = pl.column("labor_days");
    int p_price = pl.column("sale_price");
    for (std::size_t r = 0; r < pl.rows.size(); ++r) {
        PlotRow p;
        p.plot_id = pl.cell(r, p_id);
        p.household = pl.cell(r, p_hh);
        if (!seen.count(p.household))
            throw std::runtime_error("plot '" + p.plot_id + "' references unknown household '" + p.household + "'");
        p.crop = pl.cell(r, p_crop);
        p.season = season_from(pl.cell(r, p_season)).value_or(Season::rainy);
        p.area_ha = opt_num(pl, r, p_area);
        p.production_kg = opt_num(pl, r, p_prod);
        p.exp_seed = opt_num(pl, r, p_seed);
        p.exp_fertilizer = opt_num(pl, r, p_fert);
        p.exp_phyto = opt_num(pl, r, p_phyto);
        p.exp_equipment = opt_num(pl, r, p_equip);
        p.exp_hired_labor = opt_num(pl, r, p_hired);
        p.exp_other = opt_num(pl, r, p_other);
        p.fertilizer_kg = opt_num(pl, r, p_fkg);
        p.labor_days = opt_num(pl, r, p_lab);
        p.sale_price = opt_num(pl, r, p_price);
        ds.plots.push_back(p);
    }
    return ds;
}

std::vector<double> clean_series(const std::vector<std::optional<double>>& values,
                                 const CleaningPolicy& policy,
                                 std::vector<std::string>* actions) {
    std::vector<double> present;
    for (const auto& v : values)
        if (v) present.push_back(*v);
    if (present.empty()) throw std::invalid_argument("clean_series: all values missing");
    if (actions) actions->assign(values.size(), "");

    std::vector<double> out(values.size(), 0.0);
    if (policy.method == CleaningPolicy::Method::tukey_drop) {
        double q1 = stats::quantile(present, 0.25);
        double q3 = stats::quantile(present, 0.75);
        double lo = q1 - policy.tukey_k * (q3 - q1);
        double hi = q3 + policy.tukey_k * (q3 - q1);
        std::vector<double> survivors;
        for (const auto& v : values)
            if (v && *v >= lo && *v <= hi) survivors.push_back(*v);
        // a fence that rejects everything degenerates to the raw median
        double med = stats::median(survivors.empty() ? present : survivors);
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!values[i]) {
                out[i] = med;
                if (actions) (*actions)[i] = "missing->median";
            } else if (*values[i] < lo || *values[i] > hi) {
                out[i] = med;
                if (actions) (*actions)[i] = "outlier->median";
            } else {
                out[i] = *values[i];
            }
        }
    } else {
        double lo = stats::quantile(present, policy.winsor_lo / 100.0);
        double hi = stats::quantile(present, policy.winsor_hi / 100.0);
        std::vector<double> clamped;
        for (const auto& v : values)
            if (v) clamped.push_back(std::min(std::max(*v, lo), hi));
        double med = stats::median(clamped);
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!values[i]) {
                out[i] = med;
                if (actions) (*actions)[i] = "missing->median";
            } else {
                out[i] = std::min(std::max(*values[i], lo), hi);
                if (actions && out[i] != *values[i]) (*actions)[i] = "clamped";
            }
        }
    }
    return out;
}

namespace {

struct PlotClean {
    const PlotRow* raw;
    Practice practice = Practice::extensive;
    double area = 0.0;
    double yield = 0.0;         // kg/ha
    double seed = 0.0, fert_cost = 0.0, phyto = 0.0, equip = 0.0, hired = 0.0, other = 0.0;  // FCFA/ha
    double fert_kg = 0.0;       // kg/ha
    double labor = 0.0;         // days/ha
    double price = 0.0;         // FCFA/kg
};

// Cleans one intensity field across the plots of a (crop x region) group.
void clean_field(std::vector<PlotClean>& group, const CleaningPolicy& policy, const std::string& field,
                 const std::function<std::optional<double>(const PlotClean&)>& get,
                 const std::function<void(PlotClean&, double)>& set,
                 std::vector<CleaningAction>& report) {
    std::vector<std::optional<double>> series;
    series.reserve(group.size());
    for (const auto& p : group) series.push_back(get(p));
    bool any = std::any_of(series.begin(), series.end(), [](const auto& v) { return v.has_value(); });
    if (!any) {
        for (auto& p : group) set(p, 0.0);
        for (const auto& p : group)
            report.push_back({p.raw->household, p.raw->plot_id, field, "", "missing->zero"});
        return;
    }
    std::vector<std::string> actions;
    auto cleaned = clean_series(series, policy, &actions);
    for (std::size_t i = 0; i < group.size(); ++i) {
        set(group[i], cleaned[i]);
        if (!actions[i].empty())
            report.push_back({group[i].raw->household, group[i].raw->plot_id, field,
                              series[i] ? csv::format_double(*series[i]) : "", actions[i]});
    }
}

}  // namespace

IngestResult build_households(const SurveyDataset& dataset, const IngestConfig& config,
                              const std::map<std::string, Practice>& practice_labels) {
    if (dataset.households.empty() || dataset.plots.empty())
        throw std::invalid_argument("build_households: empty dataset");

    IngestResult result;
    auto& model = result.model;
    model.consumption_enabled = false;
    model.prices.fertilizer_price = config.fertilizer_price;

    // cleaning groups
    std::map<std::string, std::vector<PlotClean>> groups;
    std::map<std::string, const HouseholdRow*> hh_by_id;
    for (const auto& h : dataset.households) hh_by_id[h.id] = &h;
    for (const auto& p : dataset.plots) {
        const auto* hh = hh_by_id.at(p.household);
        std::string key = config.clean_per_region ? p.crop + "|" + hh->region : p.crop;
        PlotClean pc;
        pc.raw = &p;
        auto lab = practice_labels.find(p.plot_id);
        pc.practice = p.practice.value_or(lab != practice_labels.end() ? lab->second : Practice::extensive);
        groups[key].push_back(pc);
    }

    auto per_ha = [](const std::optional<double>& v, const std::optional<double>& area)
        -> std::optional<double> {
        if (!v || !area || *area <= 0) return std::nullopt;
        return *v / *area;
    };

    for (auto& [key, group] : groups) {
        // area: median imputation only; genuine farm-size variation is not noise
        std::vector<std::optional<double>> areas;
        for (const auto& p : group) areas.push_back(p.raw->area_ha);
        std::vector<double> present;
        for (const auto& a : areas)
            if (a && *a > 0) present.push_back(*a);
        double area_med = present.empty() ? 1.0 : stats::median(present);
        for (std::size_t i = 0; i < group.size(); ++i) {
            if (areas[i] && *areas[i] > 0) {
                group[i].area = *areas[i];
            } else {
                group[i].area = area_med;
                result.report.push_back({group[i].raw->household, group[i].raw->plot_id, "area_ha",
                                         areas[i] ? csv::format_double(*areas[i]) : "", "missing->median"});
            }
        }
        const auto& pol = config.cleaning;
        clean_field(group, pol, "yield_kg_ha",
                    [&](const PlotClean& p) { return per_ha(p.raw->production_kg, p.area); },
                    [](PlotClean& p, double v) { p.yield = v; }, result.report);
        clean_field(group, pol, "exp_seed_ha",
                    [&](const PlotClean& p) { return per_ha(p.raw->exp_seed, p.area); },
                    [](PlotClean& p, double v) { p.seed = v; }, result.report);
        clean_field(group, pol, "exp_fertilizer_ha",
                    [&](const PlotClean& p) { return per_ha(p.raw->exp_fertilizer, p.area); },
                    [](PlotClean& p, double v) { p.fert_cost = v; }, result.report);
        clean_field(group, pol, "exp_phyto_ha",
                    [&](const PlotClean& p) { return per_ha(p.raw->exp_phyto, p.area); },
                    [](PlotClean& p, double v) { p.phyto = v; }, result.report);
        clean_field(group, pol, "exp_equipment_ha",
                    [&](const PlotClean& p) { return per_ha(p.raw->exp_equipment, p.area); },
                    [](PlotClean& p, double v) { p.equip = v; }, result.report);
        clean_field(group, pol, "exp_hired_labor_ha",
                    [&](const PlotClean& p) { return per_ha(p.raw->exp_hired_labor, p.area); },
                    [](PlotClean& p, double v) { p.hired = v; }, result.report);
        clean_field(group, pol, "exp_other_ha",
                    [&](const PlotClean& p) { return per_ha(p.raw->exp_other, p.area); },
                    [](PlotClean& p, double v) { p.other = v; }, result.report);
        clean_field(group, pol, "fertilizer_kg_ha",
                    [&](const PlotClean& p) { return per_ha(p.raw->fertilizer_kg, p.area); },
                    [](PlotClean& p, double v) { p.fert_kg = v; }, result.report);
        clean_field(group, pol, "labor_days_ha",
                    [&](const PlotClean& p) -> std::optional<double> {
                        auto v = per_ha(p.raw->labor_days, p.area);
                        if (!v) return std::nullopt;
                        return *v;
                    },
                    [](PlotClean& p, double v) { p.labor = v; }, result.report);
        clean_field(group, pol, "sale_price",
                    [](const PlotClean& p) { return p.raw->sale_price; },
                    [](PlotClean& p, double v) { p.price = v; }, result.report);
        for (auto& p : group)
            if (p.labor <= 0) p.labor = config.default_labor_days_ha;
    }

    // activity cells, area-weighted means
    struct Cell {
        double area = 0, yield = 0, seed = 0, fert_cost = 0, phyto = 0, equip = 0, hired = 0, other = 0;
        double fert_kg = 0, labor = 0;
    };
    std::map<std::string, Cell> cells;             // activity id -> accumulators
    std::map<std::string, std::string> cell_crop;  // activity id -> crop
    std::map<std::string, Season> cell_season;
    std::map<std::string, Practice> cell_practice;
    struct CropAgg {
        double qty = 0, value = 0;
    };
    std::map<std::string, CropAgg> crop_price;  // production-weighted price

    auto act_id = [](const std::string& crop, Practice pr, Season se) {
        return crop + "_" + (pr == Practice::extensive ? "ext" : "semi") + "_" +
               (se == Season::rainy ? "rainy" : "dry");
    };

    for (const auto& [key, group] : groups) {
        for (const auto& p : group) {
            std::string id = act_id(p.raw->crop, p.practice, p.raw->season);
            Cell& c = cells[id];
            cell_crop[id] = p.raw->crop;
            cell_season[id] = p.raw->season;
            cell_practice[id] = p.practice;
            c.area += p.area;
            c.yield += p.area * p.yield;
            c.seed += p.area * p.seed;
            c.fert_cost += p.area * p.fert_cost;
            c.phyto += p.area * p.phyto;
            c.equip += p.area * p.equip;
            c.hired += p.area * p.hired;
            c.other += p.area * p.other;
            c.fert_kg += p.area * p.fert_kg;
            c.labor += p.area * p.labor;
            crop_price[p.raw->crop].qty += p.area * p.yield;
            crop_price[p.raw->crop].value += p.area * p.yield * p.price;
        }
    }

    for (const auto& [crop, agg] : crop_price) {
        Product prod;
        prod.id = crop;
        prod.name = crop;
        prod.category = category_for_crop(crop);
        prod.tradable = true;
        model.products.push_back(prod);
        model.prices.market_price[crop] = agg.qty > 0 ? agg.value / agg.qty : 0.0;
        model.prices.buy_markup[crop] = config.default_buy_markup;
        model.prices.sell_markdown[crop] = config.default_sell_markdown;
    }

    for (const auto& [id, c] : cells) {
        Activity a;
        a.id = id;
        a.product = cell_crop[id];
        a.practice = cell_practice[id];
        a.season = cell_season[id];
        double inv = c.area > 0 ? 1.0 / c.area : 0.0;
        a.yield_kg_ha = c.yield * inv;
        a.input_costs.seed = c.seed * inv;
        a.input_costs.phyto = c.phyto * inv;
        a.input_costs.equipment = c.equip * inv;
        a.input_costs.hired_labor = c.hired * inv;
        a.input_costs.other = c.other * inv;
        a.fertilizer_kg_ha = c.fert_kg * inv;
        // canonical fertilizer cost at the market price; tranche pricing is applied at solve time
        a.input_costs.fertilizer = a.fertilizer_kg_ha * config.fertilizer_price;
        a.labor_days_ha = c.labor * inv;
        a.subsidy_eligible_fertilizer = true;
        model.activities.push_back(a);
    }

    // households
    std::map<std::string, std::vector<const PlotClean*>> plots_by_hh;
    for (const auto& [key, group] : groups)
        for (const auto& p : group) plots_by_hh[p.raw->household].push_back(&p);

    std::vector<std::string> beneficiaries;
    for (const auto& hrow : dataset.households) {
        auto it = plots_by_hh.find(hrow.id);
        if (it == plots_by_hh.end()) {
            result.diagnostics.push_back({hrow.id, "excluded: no agricultural plots"});
            continue;
        }
        Household h;
        h.id = hrow.id;
        h.region = hrow.region;
        h.weight = hrow.weight;
        h.exog_income = hrow.exog_income;
        h.adult_equivalents = hrow.adult_equivalents;
        h.base_beneficiary = hrow.beneficiary;
        double area_rainy = 0, area_dry = 0, labor_rainy = 0, labor_dry = 0;
        double cash_spend = 0, fert_demand = 0;
        for (const auto* p : it->second) {
            std::string id = act_id(p->raw->crop, p->practice, p->raw->season);
            h.observed_levels[id] += p->area;
            if (p->raw->season == Season::rainy) {
                area_rainy += p->area;
                labor_rainy += p->area * p->labor;
            } else {
                area_dry += p->area;
                labor_dry += p->area * p->labor;
            }
            cash_spend += p->area * (p->seed + p->phyto + p->hired);
            fert_demand += p->area * p->fert_kg;
        }
        double sub_kg = hrow.beneficiary ? std::min(fert_demand, config.base_quota_kg) : 0.0;
        cash_spend += sub_kg * (1.0 - config.subsidy_rate) * config.fertilizer_price +
                      (fert_demand - sub_kg) * config.fertilizer_price;
        h.land_ha = std::max(area_rainy, area_dry);
        h.labor_days = std::max(std::max(labor_rainy, labor_dry),
                                h.adult_equivalents * config.labor_days_per_adult);
        h.cash_fcfa = cash_spend * config.cash_multiplier;
        model.households.push_back(h);
        if (hrow.beneficiary) beneficiaries.push_back(hrow.id);
    }
    if (model.households.empty()) throw std::invalid_argument("build_households: no agricultural households");

    model.base_policy.name = "baseline";
    model.base_policy.rate = config.subsidy_rate;
    model.base_policy.quota_kg = config.base_quota_kg;
    model.base_policy.eligibility = EligibilityKind::listed;
    std::sort(beneficiaries.begin(), beneficiaries.end());
    model.base_policy.beneficiary_ids = beneficiaries;
    return result;
}

void write_cleaning_report(const std::string& path, const std::vector<CleaningAction>& report) {
    csv::Table t;
    t.header = {"household", "plot_id", "field", "raw_value", "action"};
    for (const auto& a : report) t.rows.push_back({a.household, a.plot_id, a.field, a.raw_value, a.action});
    csv::write_file(path, t);
}

}  // namespace fhm
