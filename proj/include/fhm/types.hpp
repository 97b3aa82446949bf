#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fhm {

enum class ProductCategory { cereal, root_tuber, legume, cash_horticulture, cash_other };
enum class Practice { extensive, semi_intensive };
enum class Season { rainy, dry };
enum class Regime { buyer, seller, autarky };
enum class EligibilityKind { all, area_leq, listed, none };

std::string to_string(ProductCategory c);
std::string to_string(Practice p);
std::string to_string(Season s);
std::string to_string(Regime r);
std::string to_string(EligibilityKind k);

std::optional<ProductCategory> product_category_from(const std::string& s);
std::optional<Practice> practice_from(const std::string& s);
std::optional<Season> season_from(const std::string& s);
std::optional<EligibilityKind> eligibility_kind_from(const std::string& s);

struct Product {
    std::string id;
    std::string name;
    ProductCategory category = ProductCategory::cereal;
    bool tradable = true;
};

// Input cost items per hectare, FCFA.
struct InputCosts {
    double seed = 0.0;
    double fertilizer = 0.0;
    double phyto = 0.0;
    double equipment = 0.0;
    double hired_labor = 0.0;
    double other = 0.0;

    double total() const { return seed + fertilizer + phyto + equipment + hired_labor + other; }
    // Items settled in cash within the season; equipment upkeep and residual
    // items are treated as non-cash (depreciation-like).
    double cash_items() const { return seed + phyto + hired_labor; }
};

struct Activity {
    std::string id;
    std::string product;
    Practice practice = Practice::extensive;
    Season season = Season::rainy;
    double yield_kg_ha = 0.0;
    InputCosts input_costs;
    double fertilizer_kg_ha = 0.0;
    double labor_days_ha = 0.0;
    bool subsidy_eligible_fertilizer = true;
};

struct Household {
    std::string id;
    std::string region;
    double weight = 1.0;
    double land_ha = 0.0;         // per season
    double labor_days = 0.0;      // per season
    double cash_fcfa = 0.0;       // working capital for input purchases
    double exog_income = 0.0;
    std::map<std::string, double> observed_levels;       // activity id -> ha
    std::map<std::string, double> observed_consumption;  // product id -> kg (optional)
    double adult_equivalents = 1.0;
    bool base_beneficiary = false;  // received subsidized fertilizer in the base year
};

struct PriceSystem {
    std::map<std::string, double> market_price;   // product -> FCFA/kg
    std::map<std::string, double> buy_markup;     // t^b >= 1
    std::map<std::string, double> sell_markdown;  // t^s <= 1
    double fertilizer_price = 0.0;                // FCFA/kg
    std::map<std::string, double> factor_prices;  // factor -> FCFA/unit (unused trade hook)

    double market(const std::string& product) const;
    double buy_price(const std::string& product) const;   // p^m * t^b
    double sell_price(const std::string& product) const;  // p^m * t^s
};

struct BehavioralFunction {
    std::map<std::string, double> d;                                // activity -> FCFA/ha
    std::map<std::string, double> q_diag;                           // activity -> FCFA/ha^2
    std::map<std::pair<std::string, std::string>, double> q_cross;  // kept zero unless calibrated

    double q(const std::string& a, const std::string& b) const;
};

struct SubsidyPolicy {
    std::string name = "none";
    double rate = 0.0;      // fraction of market fertilizer price covered
    double quota_kg = 0.0;  // per household
    EligibilityKind eligibility = EligibilityKind::none;
    double area_threshold_ha = 0.0;            // for area_leq
    std::vector<std::string> beneficiary_ids;  // for listed (kept sorted)

    bool eligible(const Household& h) const;
    static double observed_area(const Household& h);  // total cultivated ha across seasons
};

struct Solution {
    std::map<std::string, double> levels;          // activity -> ha
    std::map<std::string, double> sales;           // product -> kg
    std::map<std::string, double> purchases;       // product -> kg
    std::map<std::string, double> self_consumed;   // product -> kg
    std::map<std::string, double> consumed;        // product -> kg
    std::map<std::string, double> internal_price;  // product -> FCFA/kg
    double fertilizer_subsidized_kg = 0.0;
    double fertilizer_unsubsidized_kg = 0.0;
    std::map<std::string, double> duals;  // constraint id -> FCFA per unit
    std::map<std::string, Regime> regime;
    double farm_income = 0.0;   // Z minus ExInc
    double total_income = 0.0;  // Z
    double subsidy_outlay = 0.0;
    bool feasible = true;
    std::string diagnostic;
};

struct Diagnostic {
    std::string where;    // household/activity/product id
    std::string message;  // violated invariant
};

struct ModelInstance {
    int schema_version = 1;
    int base_year = 2011;
    std::string currency = "FCFA";
    bool consumption_enabled = false;
    std::vector<Product> products;
    std::vector<Activity> activities;
    std::vector<Household> households;
    PriceSystem prices;
    SubsidyPolicy base_policy;

    const Product* find_product(const std::string& id) const;
    const Activity* find_activity(const std::string& id) const;
    const Household* find_household(const std::string& id) const;
};

// Returns the empty list iff every type invariant holds; pure and idempotent.
std::vector<Diagnostic> validate_model(const ModelInstance& model);

}  // namespace fhm
