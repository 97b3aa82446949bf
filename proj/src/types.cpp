#include "fhm/types.hpp"

#include <algorithm>
#include <cmath>

namespace fhm {

std::string to_string(ProductCategory c) {
    switch (c) {
        case ProductCategory::cereal: return "cereal";
        case ProductCategory::root_tuber: return "root_tuber";
        case ProductCategory::legume: return "legume";
        case ProductCategory::cash_horticulture: return "cash_horticulture";
        case ProductCategory::cash_other: return "cash_other";
    }
    return "?";
}

std::string to_string(Practice p) { return p == Practice::extensive ? "extensive" : "semi_intensive"; }
std::string to_string(Season s) { return s == Season::rainy ? "rainy" : "dry"; }

std::string to_string(Regime r) {
    switch (r) {
        case Regime::buyer: return "buyer";
        case Regime::seller: return "seller";
        case Regime::autarky: return "autarky";
    }
    return "?";
}

std::string to_string(EligibilityKind k) {
    switch (k) {
        case EligibilityKind::all: return "all";
        case EligibilityKind::area_leq: return "area_leq";
        case EligibilityKind::listed: return "listed";
        case EligibilityKind::none: return "none";
    }
    return "?";
}

std::optional<ProductCategory> product_category_from(const std::string& s) {
    if (s == "cereal") return ProductCategory::cereal;
    if (s == "root_tuber") return ProductCategory::root_tuber;
    if (s == "legume") return ProductCategory::legume;
    if (s == "cash_horticulture") return ProductCategory::cash_horticulture;
    if (s == "cash_other") return ProductCategory::cash_other;
    return std::nullopt;
}

std::optional<Practice> practice_from(const std::string& s) {
    if (s == "extensive" || s == "ext") return Practice::extensive;
    if (s == "semi_intensive" || s == "semi-int" || s == "semi_int") return Practice::semi_intensive;
    return std::nullopt;
}

std::optional<Season> season_from(const std::string& s) {
    if (s == "rainy") return Season::rainy;
    if (s == "dry") return Season::dry;
    return std::nullopt;
}

std::optional<EligibilityKind> eligibility_kind_from(const std::string& s) {
    if (s == "all") return EligibilityKind::all;
    if (s == "area_leq") return EligibilityKind::area_leq;
    if (s == "listed") return EligibilityKind::listed;
    if (s == "none") return EligibilityKind::none;
    return std::nullopt;
}

double PriceSystem::market(const std::string& product) const {
    auto it = market_price.find(product);
    return it == market_price.end() ? 0.0 : it->second;
}

double PriceSystem::buy_price(const std::string& product) const {
    auto it = buy_markup.find(product);
    double t = it == buy_markup.end() ? 1.0 : it->second;
    return market(product) * t;
}

double PriceSystem::sell_price(const std::string& product) const {
    auto it = sell_markdown.find(product);
    double t = it == sell_markdown.end() ? 1.0 : it->second;
    return market(product) * t;
}

double BehavioralFunction::q(const std::string& a, const std::string& b) const {
    if (a == b) {
        auto it = q_diag.find(a);
        return it == q_diag.end() ? 0.0 : it->second;
    }
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto it = q_cross.find(key);
    return it == q_cross.end() ? 0.0 : it->second;
}

double SubsidyPolicy::observed_area(const Household& h) {
    double total = 0.0;
    for (const auto& [_, ha] : h.observed_levels) total += ha;
    return total;
}

bool SubsidyPolicy::eligible(const Household& h) const {
    if (rate <= 0.0 || quota_kg <= 0.0) return false;
    switch (eligibility) {
        case EligibilityKind::all: return true;
        case EligibilityKind::none: return false;
        case EligibilityKind::area_leq: return observed_area(h) <= area_threshold_ha;
        case EligibilityKind::listed:
            return std::binary_search(beneficiary_ids.begin(), beneficiary_ids.end(), h.id);
    }
    return false;
}

const Product* ModelInstance::find_product(const std::string& id) const {
    for (const auto& p : products)
        if (p.id == id) return &p;
    return nullptr;
}

const Activity* ModelInstance::find_activity(const std::string& id) const {
    for (const auto& a : activities)
        if (a.id == id) return &a;
    return nullptr;
}

const Household* ModelInstance::find_household(const std::string& id) const {
    for (const auto& h : households)
        if (h.id == id) return &h;
    return nullptr;
}

namespace {

bool bad(double v) { return !std::isfinite(v); }

}  // namespace

std::vector<Diagnostic> validate_model(const ModelInstance& model) {
    std::vector<Diagnostic> out;
    auto add = [&](const std::string& where, const std::string& msg) { out.push_back({where, msg}); };

    std::map<std::string, int> product_ids, activity_ids, household_ids;
    for (const auto& p : model.products) {
        if (++product_ids[p.id] == 2) add(p.id, "duplicate product id");
    }
    for (const auto& a : model.activities) {
        if (++activity_ids[a.id] == 2) add(a.id, "duplicate activity id");
        if (!product_ids.count(a.product)) add(a.id, "unknown product '" + a.product + "'");
        if (a.yield_kg_ha < 0 || bad(a.yield_kg_ha)) add(a.id, "negative yield");
        const auto& c = a.input_costs;
        for (double v : {c.seed, c.fertilizer, c.phyto, c.equipment, c.hired_labor, c.other})
            if (v < 0 || bad(v)) { add(a.id, "negative input cost"); break; }
        if (a.fertilizer_kg_ha < 0 || bad(a.fertilizer_kg_ha)) add(a.id, "negative fertilizer quantity");
        if (a.fertilizer_kg_ha > 0 && c.fertilizer <= 0 && model.prices.fertilizer_price > 0)
            add(a.id, "fertilizer quantity positive but fertilizer cost zero");
        if (a.labor_days_ha < 0 || bad(a.labor_days_ha)) add(a.id, "negative labor requirement");
    }
    for (const auto& h : model.households) {
        if (++household_ids[h.id] == 2) add(h.id, "duplicate household id");
        if (h.weight < 0 || bad(h.weight)) add(h.id, "negative weight");
        if (h.land_ha < 0 || bad(h.land_ha)) add(h.id, "negative land endowment");
        if (h.labor_days < 0 || bad(h.labor_days)) add(h.id, "negative labor endowment");
        if (h.cash_fcfa < 0 || bad(h.cash_fcfa)) add(h.id, "negative cash endowment");
        double area_rainy = 0.0, area_dry = 0.0;
        for (const auto& [aid, ha] : h.observed_levels) {
            const Activity* a = model.find_activity(aid);
            if (!a) {
                add(h.id, "observed level references unknown activity '" + aid + "'");
                continue;
            }
            if (ha < 0 || bad(ha)) add(h.id, "negative observed level for " + aid);
            (a->season == Season::rainy ? area_rainy : area_dry) += ha;
        }
        const double tol = 1e-9 * (1.0 + h.land_ha);
        if (area_rainy > h.land_ha + tol || area_dry > h.land_ha + tol)
            add(h.id, "land overcommitted");
        for (const auto& [pid, kg] : h.observed_consumption) {
            if (!product_ids.count(pid)) add(h.id, "consumption references unknown product '" + pid + "'");
            if (kg < 0 || bad(kg)) add(h.id, "negative observed consumption");
        }
    }
    for (const auto& p : model.products) {
        if (!p.tradable) continue;
        auto bi = model.prices.buy_markup.find(p.id);
        if (bi != model.prices.buy_markup.end() && bi->second < 1.0)
            add(p.id, "buy factor below 1");
        auto si = model.prices.sell_markdown.find(p.id);
        if (si != model.prices.sell_markdown.end() && si->second > 1.0)
            add(p.id, "sell factor above 1");
        if (model.prices.market(p.id) < 0) add(p.id, "negative market price");
    }
    if (model.prices.fertilizer_price < 0) add("prices", "negative fertilizer price");
    const auto& pol = model.base_policy;
    if (pol.rate < 0 || pol.rate > 1) add("policy", "subsidy rate outside [0,1]");
    if (pol.quota_kg < 0) add("policy", "negative quota");
    return out;
}

}  // namespace fhm
