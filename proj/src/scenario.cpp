#include "fhm/scenario.hpp"

#include <cmath>
#include <json.hpp>
#include <set>
#include <stdexcept>

#include "fhm/model_io.hpp"
#include "fhm/typology.hpp"

namespace fhm {

using nlohmann::json;

BaselineSpec BaselineSpec::senegal_2011_2017() {
    BaselineSpec s;
    s.years = 6;
    s.cost_inflation = 0.027;
    s.yield_shift = {{"arachide", 0.341}, {"mais", 0.332}, {"mil", 0.135},
                     {"oignon", 0.047},   {"riz", 0.133}};
    s.price_shift = {{"arachide", 0.135}, {"mais", 0.098}, {"mil", 0.240},
                     {"oignon", 0.304},   {"riz", 0.294}};
    return s;
}

ScenarioSpec scenario_preset(const std::string& name) {
    ScenarioSpec s;
    s.baseline = BaselineSpec::senegal_2011_2017();
    if (name == "baseline") {
        s.name = "baseline";
        s.policy.name = "baseline";  // replaced by the model's base policy at run time
    } else if (name == "abol") {
        s.name = "Abol";
        s.policy.name = "Abol";
        s.policy.rate = 0.0;
        s.policy.quota_kg = 0.0;
        s.policy.eligibility = EligibilityKind::none;
    } else if (name == "univ") {
        s.name = "Univ";
        s.policy.name = "Univ";
        s.policy.rate = 0.5;
        s.policy.quota_kg = 75.0;
        s.policy.eligibility = EligibilityKind::all;
    } else if (name == "cibl") {
        s.name = "Cibl";
        s.policy.name = "Cibl";
        s.policy.rate = 0.5;
        s.policy.quota_kg = 75.0;
        s.policy.eligibility = EligibilityKind::area_leq;
        s.policy.area_threshold_ha = 5.0;
    } else {
        throw std::invalid_argument("unknown scenario preset '" + name + "'");
    }
    return s;
}

ScenarioSpec scenario_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    ScenarioSpec s;
    s.name = j.value("name", "custom");
    s.policy = policy_from_json(j.dump());
    s.policy.name = s.name;
    s.baseline = BaselineSpec::senegal_2011_2017();
    if (j.contains("baseline")) {
        const auto& b = j["baseline"];
        s.baseline.years = b.value("years", s.baseline.years);
        s.baseline.cost_inflation = b.value("inflation", s.baseline.cost_inflation);
        if (b.contains("yield_shifts")) {
            s.baseline.yield_shift.clear();
            for (auto& [k, v] : b["yield_shifts"].items()) s.baseline.yield_shift[k] = v;
        }
        if (b.contains("price_shifts")) {
            s.baseline.price_shift.clear();
            for (auto& [k, v] : b["price_shifts"].items()) s.baseline.price_shift[k] = v;
        }
    }
    return s;
}

std::string scenario_to_json(const ScenarioSpec& spec) {
    json j = json::parse(policy_to_json(spec.policy));
    j["name"] = spec.name;
    j["baseline"]["years"] = spec.baseline.years;
    j["baseline"]["inflation"] = spec.baseline.cost_inflation;
    j["baseline"]["yield_shifts"] = spec.baseline.yield_shift;
    j["baseline"]["price_shifts"] = spec.baseline.price_shift;
    return j.dump(2);
}

ModelInstance project_baseline(const ModelInstance& model, const BaselineSpec& spec) {
    if (spec.years < 0) throw std::invalid_argument("project_baseline: negative horizon");
    ModelInstance out = model;
    double infl = std::pow(1.0 + spec.cost_inflation, spec.years);
    auto shift = [](const std::map<std::string, double>& m, const std::string& k) {
        auto it = m.find(k);
        return it == m.end() ? 0.0 : it->second;
    };
    for (auto& a : out.activities) {
        a.input_costs.seed *= infl;
        a.input_costs.phyto *= infl;
        a.input_costs.equipment *= infl;
        a.input_costs.hired_labor *= infl;
        a.input_costs.other *= infl;
        a.yield_kg_ha *= 1.0 + shift(spec.yield_shift, a.product);
        a.input_costs.fertilizer = a.fertilizer_kg_ha * model.prices.fertilizer_price * infl;
    }
    out.prices.fertilizer_price = model.prices.fertilizer_price * infl;
    for (auto& [pid, p] : out.prices.market_price) p *= 1.0 + shift(spec.price_shift, pid);
    // endowed cash keeps pace with input costs so the anchor stays feasible
    for (auto& h : out.households) h.cash_fcfa *= infl;
    out.base_year = model.base_year + spec.years;
    return out;
}

CalibrationSet project_calibration(const ModelInstance& base_model, const ModelInstance& projected,
                                   const CalibrationSet& base_set) {
    CalibrationSet out;
    out.group_of_household = base_set.group_of_household;

    // first pass: rescale Q by the margin deflator, re-derive duals and d
    for (const auto& h : projected.households) {
        auto bit = base_set.by_household.find(h.id);
        if (bit == base_set.by_household.end()) continue;
        const CalibrationResult& base = bit->second;
        CalibrationResult res;
        res.converged = base.converged;
        if (base.behavioral.activities.empty()) {
            out.by_household[h.id] = res;
            continue;
        }
        const Household* h0 = base_model.find_household(h.id);
        std::map<std::string, double> observed;
        for (const auto& [aid, ha] : h.observed_levels)
            if (ha > 0) observed[aid] = ha;

        for (const auto& [aid, q_base] : base.behavioral.q_diag) {
            if (!observed.count(aid)) continue;  // alternatives re-attached below
            const Activity* a_new = projected.find_activity(aid);
            const Activity* a_old = base_model.find_activity(aid);
            if (!a_new || !a_old || !h0) continue;
            double m_old = marginal_gross_margin(base_model, *h0, *a_old, base_model.prices,
                                                 base_model.base_policy);
            double m_new = marginal_gross_margin(projected, h, *a_new, projected.prices,
                                                 projected.base_policy);
            double deflator;
            if (m_old > 1e-9 && m_new > 1e-9)
                deflator = m_new / m_old;
            else {
                double r_old = a_old->yield_kg_ha * base_model.prices.market(a_old->product);
                double r_new = a_new->yield_kg_ha * projected.prices.market(a_new->product);
                deflator = r_old > 1e-9 ? r_new / r_old : 1.0;
            }
            res.behavioral.q_diag[aid] = q_base * deflator;
            res.behavioral.activities.push_back(aid);
        }
        if (res.behavioral.activities.empty()) {
            out.by_household[h.id] = res;
            continue;
        }
        res.duals = stage1_duals(projected, h, projected.prices, projected.base_policy);
        res.behavioral.duals = res.duals;
        for (const auto& aid : res.behavioral.activities) {
            const Activity* a = projected.find_activity(aid);
            res.margins[aid] = marginal_gross_margin(projected, h, *a, projected.prices,
                                                     projected.base_policy);
        }
        out.by_household[h.id] = std::move(res);
    }

    // d derivation needs the same resource-charge form as calibration
    for (const auto& h : projected.households) {
        auto it = out.by_household.find(h.id);
        if (it == out.by_household.end() || it->second.behavioral.activities.empty()) continue;
        CalibrationResult& res = it->second;
        SubsidyPolicy pol = projected.base_policy;
        double fert_demand = 0.0;
        for (const auto& [aid, ha] : h.observed_levels) {
            const Activity* a = projected.find_activity(aid);
            if (a && ha > 0) fert_demand += ha * a->fertilizer_kg_ha;
        }
        bool sub = pol.eligible(h) && pol.rate > 0 && fert_demand < pol.quota_kg - 1e-9;
        double pf = sub ? (1.0 - pol.rate) * projected.prices.fertilizer_price
                        : projected.prices.fertilizer_price;
        auto charge = [&](const Activity& a) {
            bool rainy = a.season == Season::rainy;
            auto get = [&](const std::string& k) {
                auto d = res.duals.find(k);
                return d == res.duals.end() ? 0.0 : d->second;
            };
            return get(rainy ? "land_rainy" : "land_dry") +
                   get(rainy ? "labor_rainy" : "labor_dry") * a.labor_days_ha +
                   get("cash") * (a.input_costs.cash_items() + pf * a.fertilizer_kg_ha);
        };
        for (const auto& aid : res.behavioral.activities) {
            const Activity* a = projected.find_activity(aid);
            double x0 = h.observed_levels.count(aid) ? h.observed_levels.at(aid) : 0.0;
            res.behavioral.d[aid] = res.margins[aid] - res.behavioral.q_diag[aid] * x0 - charge(*a);
        }
        res.reported_d = res.behavioral.d;
    }

    GroupStats stats = compute_group_stats(projected, out.by_household, out.group_of_household);
    for (const auto& h : projected.households) {
        auto it = out.by_household.find(h.id);
        if (it == out.by_household.end() || it->second.behavioral.activities.empty()) continue;
        const std::string& group = out.group_of_household[h.id];
        if (stats.by_group.count(group))
            attach_alternatives(projected, h, projected.prices, projected.base_policy, stats, group,
                                it->second);
    }
    return out;
}

double eligibility_rate(const std::vector<Household>& households, const SubsidyPolicy& policy) {
    double total = 0.0, eligible = 0.0;
    for (const auto& h : households) {
        total += h.weight;
        if (policy.eligible(h)) eligible += h.weight;
    }
    if (total <= 0) throw std::invalid_argument("eligibility_rate: zero total weight");
    return eligible / total;
}

ScenarioResult run_scenario(const ModelInstance& projected_model, const CalibrationSet& calibrations,
                            const ScenarioSpec& spec, int jobs) {
    ScenarioResult result;
    result.name = spec.name;
    result.policy = spec.policy.name == "baseline" ? projected_model.base_policy : spec.policy;
    result.solutions = solve_all(projected_model, calibrations.behavioral(), projected_model.prices,
                                 result.policy, jobs);
    double tw = 0.0;
    for (const auto& h : projected_model.households) {
        auto it = result.solutions.find(h.id);
        if (it == result.solutions.end()) continue;
        result.total_outlay_weighted += h.weight * it->second.subsidy_outlay;
        result.total_income_weighted += h.weight * it->second.total_income;
        tw += h.weight;
    }
    result.eligible_share = tw > 0 ? eligibility_rate(projected_model.households, result.policy) : 0.0;
    return result;
}

}  // namespace fhm
