#include "fhm/model_io.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "fhm/csv.hpp"

namespace fhm {

namespace fs = std::filesystem;
using nlohmann::json;
using csv::format_double;

namespace {

double num(const csv::Table& t, std::size_t row, int col, double fallback = 0.0) {
    auto v = csv::parse_double(t.cell(row, col));
    return v.value_or(fallback);
}

}  // namespace

void write_model(const ModelInstance& model, const std::string& dir) {
    fs::create_directories(dir);

    json manifest;
    manifest["schema_version"] = model.schema_version;
    manifest["base_year"] = model.base_year;
    manifest["currency"] = model.currency;
    manifest["consumption_enabled"] = model.consumption_enabled;
    manifest["fertilizer_price"] = model.prices.fertilizer_price;
    manifest["factor_prices"] = model.prices.factor_prices;
    manifest["base_policy"] = json::parse(policy_to_json(model.base_policy));
    std::ofstream(dir + "/manifest.json") << manifest.dump(2) << "\n";

    csv::Table prices;
    prices.header = {"product", "name", "category", "tradable", "market_price", "buy_markup", "sell_markdown"};
    for (const auto& p : model.products) {
        auto bm = model.prices.buy_markup.count(p.id) ? model.prices.buy_markup.at(p.id) : 1.0;
        auto sm = model.prices.sell_markdown.count(p.id) ? model.prices.sell_markdown.at(p.id) : 1.0;
        prices.rows.push_back({p.id, p.name, to_string(p.category), p.tradable ? "1" : "0",
                               format_double(model.prices.market(p.id)), format_double(bm), format_double(sm)});
    }
    csv::write_file(dir + "/prices.csv", prices);

    csv::Table acts;
    acts.header = {"id", "product", "practice", "season", "yield_kg_ha",
                   "cost_seed", "cost_fertilizer", "cost_phyto", "cost_equipment",
                   "cost_hired_labor", "cost_other", "fertilizer_kg_ha", "labor_days_ha",
                   "subsidy_eligible"};
    for (const auto& a : model.activities) {
        acts.rows.push_back({a.id, a.product, to_string(a.practice), to_string(a.season),
                             format_double(a.yield_kg_ha), format_double(a.input_costs.seed),
                             format_double(a.input_costs.fertilizer), format_double(a.input_costs.phyto),
                             format_double(a.input_costs.equipment), format_double(a.input_costs.hired_labor),
                             format_double(a.input_costs.other), format_double(a.fertilizer_kg_ha),
                             format_double(a.labor_days_ha), a.subsidy_eligible_fertilizer ? "1" : "0"});
    }
    csv::write_file(dir + "/activities.csv", acts);

    csv::Table hh;
    hh.header = {"id", "region", "weight", "land_ha", "labor_days", "cash_fcfa",
                 "exog_income", "adult_equivalents", "beneficiary"};
    for (const auto& h : model.households) {
        hh.rows.push_back({h.id, h.region, format_double(h.weight), format_double(h.land_ha),
                           format_double(h.labor_days), format_double(h.cash_fcfa),
                           format_double(h.exog_income), format_double(h.adult_equivalents),
                           h.base_beneficiary ? "1" : "0"});
    }
    csv::write_file(dir + "/households.csv", hh);

    csv::Table levels;
    levels.header = {"household", "activity", "area_ha"};
    bool any_consumption = false;
    for (const auto& h : model.households) {
        for (const auto& [aid, ha] : h.observed_levels)
            levels.rows.push_back({h.id, aid, format_double(ha)});
        if (!h.observed_consumption.empty()) any_consumption = true;
    }
    csv::write_file(dir + "/observed_levels.csv", levels);

    if (any_consumption) {
        csv::Table cons;
        cons.header = {"household", "product", "kg"};
        for (const auto& h : model.households)
            for (const auto& [pid, kg] : h.observed_consumption)
                cons.rows.push_back({h.id, pid, format_double(kg)});
        csv::write_file(dir + "/consumption.csv", cons);
    }
}

ModelInstance read_model(const std::string& dir) {
    ModelInstance m;
    std::ifstream mf(dir + "/manifest.json");
    if (!mf) throw std::runtime_error("missing manifest.json in " + dir);
    json manifest = json::parse(mf);
    m.schema_version = manifest.value("schema_version", 1);
    m.base_year = manifest.value("base_year", 2011);
    m.currency = manifest.value("currency", "FCFA");
    m.consumption_enabled = manifest.value("consumption_enabled", false);
    m.prices.fertilizer_price = manifest.value("fertilizer_price", 0.0);
    if (manifest.contains("factor_prices"))
        for (auto& [k, v] : manifest["factor_prices"].items()) m.prices.factor_prices[k] = v;
    if (manifest.contains("base_policy")) m.base_policy = policy_from_json(manifest["base_policy"].dump());

    csv::Table prices = csv::read_file(dir + "/prices.csv");
    {
        int c_id = prices.require_column("product"), c_name = prices.column("name");
        int c_cat = prices.require_column("category"), c_trad = prices.column("tradable");
        int c_mp = prices.require_column("market_price");
        int c_bm = prices.column("buy_markup"), c_sm = prices.column("sell_markdown");
        for (std::size_t r = 0; r < prices.rows.size(); ++r) {
            Product p;
            p.id = prices.cell(r, c_id);
            p.name = c_name >= 0 ? prices.cell(r, c_name) : p.id;
            auto cat = product_category_from(prices.cell(r, c_cat));
            if (!cat) throw std::runtime_error("unknown product category '" + prices.cell(r, c_cat) + "'");
            p.category = *cat;
            p.tradable = c_trad < 0 || prices.cell(r, c_trad) != "0";
            m.products.push_back(p);
            m.prices.market_price[p.id] = num(prices, r, c_mp);
            if (c_bm >= 0) m.prices.buy_markup[p.id] = num(prices, r, c_bm, 1.0);
            if (c_sm >= 0) m.prices.sell_markdown[p.id] = num(prices, r, c_sm, 1.0);
        }
    }

    csv::Table acts = csv::read_file(dir + "/activities.csv");
    {
        int c_id = acts.require_column("id"), c_prod = acts.require_column("product");
        int c_pr = acts.require_column("practice"), c_se = acts.require_column("season");
        int c_y = acts.require_column("yield_kg_ha");
        int c_cs = acts.require_column("cost_seed"), c_cf = acts.require_column("cost_fertilizer");
        int c_cp = acts.require_column("cost_phyto"), c_ce = acts.require_column("cost_equipment");
        int c_ch = acts.require_column("cost_hired_labor"), c_co = acts.require_column("cost_other");
        int c_fq = acts.require_column("fertilizer_kg_ha"), c_ld = acts.require_column("labor_days_ha");
        int c_el = acts.column("subsidy_eligible");
        for (std::size_t r = 0; r < acts.rows.size(); ++r) {
            Activity a;
            a.id = acts.cell(r, c_id);
            a.product = acts.cell(r, c_prod);
            a.practice = practice_from(acts.cell(r, c_pr)).value_or(Practice::extensive);
            a.season = season_from(acts.cell(r, c_se)).value_or(Season::rainy);
            a.yield_kg_ha = num(acts, r, c_y);
            a.input_costs.seed = num(acts, r, c_cs);
            a.input_costs.fertilizer = num(acts, r, c_cf);
            a.input_costs.phyto = num(acts, r, c_cp);
            a.input_costs.equipment = num(acts, r, c_ce);
            a.input_costs.hired_labor = num(acts, r, c_ch);
            a.input_costs.other = num(acts, r, c_co);
            a.fertilizer_kg_ha = num(acts, r, c_fq);
            a.labor_days_ha = num(acts, r, c_ld);
            a.subsidy_eligible_fertilizer = c_el < 0 || acts.cell(r, c_el) != "0";
            m.activities.push_back(a);
        }
    }

    csv::Table hh = csv::read_file(dir + "/households.csv");
    {
        int c_id = hh.require_column("id"), c_reg = hh.require_column("region");
        int c_w = hh.require_column("weight"), c_land = hh.require_column("land_ha");
        int c_lab = hh.require_column("labor_days"), c_cash = hh.require_column("cash_fcfa");
        int c_ex = hh.require_column("exog_income"), c_ae = hh.require_column("adult_equivalents");
        int c_ben = hh.column("beneficiary");
        for (std::size_t r = 0; r < hh.rows.size(); ++r) {
            Household h;
            h.id = hh.cell(r, c_id);
            h.region = hh.cell(r, c_reg);
            h.weight = num(hh, r, c_w, 1.0);
            h.land_ha = num(hh, r, c_land);
            h.labor_days = num(hh, r, c_lab);
            h.cash_fcfa = num(hh, r, c_cash);
            h.exog_income = num(hh, r, c_ex);
            h.adult_equivalents = num(hh, r, c_ae, 1.0);
            h.base_beneficiary = c_ben >= 0 && hh.cell(r, c_ben) == "1";
            m.households.push_back(h);
        }
    }

    csv::Table levels = csv::read_file(dir + "/observed_levels.csv");
    {
        int c_h = levels.require_column("household"), c_a = levels.require_column("activity");
        int c_ha = levels.require_column("area_ha");
        std::map<std::string, Household*> by_id;
        for (auto& h : m.households) by_id[h.id] = &h;
        for (std::size_t r = 0; r < levels.rows.size(); ++r) {
            auto it = by_id.find(levels.cell(r, c_h));
            if (it == by_id.end())
                throw std::runtime_error("observed_levels references unknown household '" +
                                         levels.cell(r, c_h) + "'");
            it->second->observed_levels[levels.cell(r, c_a)] += num(levels, r, c_ha);
        }
    }

    if (fs::exists(dir + "/consumption.csv")) {
        csv::Table cons = csv::read_file(dir + "/consumption.csv");
        int c_h = cons.require_column("household"), c_p = cons.require_column("product");
        int c_kg = cons.require_column("kg");
        std::map<std::string, Household*> by_id;
        for (auto& h : m.households) by_id[h.id] = &h;
        for (std::size_t r = 0; r < cons.rows.size(); ++r) {
            auto it = by_id.find(cons.cell(r, c_h));
            if (it != by_id.end()) it->second->observed_consumption[cons.cell(r, c_p)] += num(cons, r, c_kg);
        }
    }
    return m;
}

SubsidyPolicy policy_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    SubsidyPolicy p;
    p.name = j.value("name", "custom");
    p.rate = j.value("rate", 0.0);
    p.quota_kg = j.value("quota_kg", 0.0);
    std::string kind = "none";
    if (j.contains("eligibility")) {
        if (j["eligibility"].is_object()) {
            kind = j["eligibility"].value("kind", "none");
            p.area_threshold_ha = j["eligibility"].value("threshold_ha", 0.0);
            if (j["eligibility"].contains("ids"))
                for (auto& id : j["eligibility"]["ids"]) p.beneficiary_ids.push_back(id);
        } else {
            kind = j["eligibility"];
        }
    }
    auto k = eligibility_kind_from(kind);
    if (!k) throw std::runtime_error("unknown eligibility kind '" + kind + "'");
    p.eligibility = *k;
    std::sort(p.beneficiary_ids.begin(), p.beneficiary_ids.end());
    return p;
}

std::string policy_to_json(const SubsidyPolicy& policy) {
    json j;
    j["name"] = policy.name;
    j["rate"] = policy.rate;
    j["quota_kg"] = policy.quota_kg;
    j["eligibility"]["kind"] = to_string(policy.eligibility);
    if (policy.eligibility == EligibilityKind::area_leq)
        j["eligibility"]["threshold_ha"] = policy.area_threshold_ha;
    if (policy.eligibility == EligibilityKind::listed)
        j["eligibility"]["ids"] = policy.beneficiary_ids;
    return j.dump();
}

void write_run_manifest(const std::string& dir, const std::string& stage,
                        const std::string& input_dir, long long seed) {
    fs::create_directories(dir);
    long long ts = 0;
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH"))
        ts = std::atoll(env);
    else
        ts = static_cast<long long>(std::time(nullptr));
    json j;
    j["stage"] = stage;
    j["input_dir"] = input_dir;
    j["output_dir"] = dir;
    j["seed"] = seed;
    j["timestamp"] = ts;
    j["version"] = "1.0.0";
    std::ofstream(dir + "/run_manifest.json") << j.dump(2) << "\n";
}

}  // namespace fhm
