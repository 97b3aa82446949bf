#include <doctest.h>

#include <filesystem>

#include "fhm/model_io.hpp"
#include "fhm/types.hpp"

using namespace fhm;

namespace {

ModelInstance two_household_fixture() {
    ModelInstance m;
    m.products.push_back({"mil", "mil", ProductCategory::cereal, true});
    m.products.push_back({"arachide", "arachide", ProductCategory::legume, true});
    m.prices.market_price = {{"mil", 173.8}, {"arachide", 185.4}};
    m.prices.buy_markup = {{"mil", 1.15}, {"arachide", 1.15}};
    m.prices.sell_markdown = {{"mil", 1.0}, {"arachide", 1.0}};
    m.prices.fertilizer_price = 300.0;

    Activity mil;
    mil.id = "mil_ext_rainy";
    mil.product = "mil";
    mil.yield_kg_ha = 604;
    mil.input_costs = {3874, 1172, 369, 973, 720, 0};
    mil.fertilizer_kg_ha = 1172.0 / 300.0;
    mil.labor_days_ha = 22;
    m.activities.push_back(mil);

    Activity ara = mil;
    ara.id = "arachide_ext_rainy";
    ara.product = "arachide";
    ara.yield_kg_ha = 721;
    ara.input_costs = {4443, 1668, 555, 1105, 1232, 0};
    ara.fertilizer_kg_ha = 1668.0 / 300.0;
    m.activities.push_back(ara);

    Household h1;
    h1.id = "H1";
    h1.region = "Kaffrine";
    h1.weight = 100;
    h1.land_ha = 5;
    h1.labor_days = 300;
    h1.cash_fcfa = 100000;
    h1.exog_income = 50000;
    h1.observed_levels = {{"mil_ext_rainy", 3.0}, {"arachide_ext_rainy", 2.0}};
    h1.adult_equivalents = 5;
    m.households.push_back(h1);

    Household h2 = h1;
    h2.id = "H2";
    h2.land_ha = 4;
    h2.observed_levels = {{"mil_ext_rainy", 4.0}};
    h2.observed_consumption = {{"mil", 500.0}};
    m.households.push_back(h2);
    return m;
}

}  // namespace

TEST_CASE("consistent fixture validates clean") {
    CHECK(validate_model(two_household_fixture()).empty());
}

TEST_CASE("land overcommitment is diagnosed") {
    ModelInstance m = two_household_fixture();
    m.households[0].observed_levels["mil_ext_rainy"] = 4.0;  // 4 + 2 > 5
    auto diags = validate_model(m);
    REQUIRE(!diags.empty());
    bool found = false;
    for (const auto& d : diags)
        if (d.where == "H1" && d.message == "land overcommitted") found = true;
    CHECK(found);
}

TEST_CASE("buy factor below one is diagnosed") {
    ModelInstance m = two_household_fixture();
    m.prices.buy_markup["mil"] = 0.9;
    auto diags = validate_model(m);
    bool found = false;
    for (const auto& d : diags)
        if (d.where == "mil" && d.message == "buy factor below 1") found = true;
    CHECK(found);
}

TEST_CASE("validate_model is idempotent and side-effect free") {
    ModelInstance m = two_household_fixture();
    m.prices.buy_markup["mil"] = 0.9;
    auto a = validate_model(m);
    auto b = validate_model(m);
    CHECK(a.size() == b.size());
}

TEST_CASE("model directory serialization round trips") {
    ModelInstance m = two_household_fixture();
    m.base_policy.name = "baseline";
    m.base_policy.rate = 0.5;
    m.base_policy.quota_kg = 150;
    m.base_policy.eligibility = EligibilityKind::listed;
    m.base_policy.beneficiary_ids = {"H1"};
    auto dir = std::filesystem::temp_directory_path() / "fhm_model_roundtrip";
    std::filesystem::remove_all(dir);
    write_model(m, dir.string());
    ModelInstance back = read_model(dir.string());

    REQUIRE(back.products.size() == m.products.size());
    REQUIRE(back.activities.size() == m.activities.size());
    REQUIRE(back.households.size() == m.households.size());
    CHECK(back.base_year == m.base_year);
    CHECK(back.consumption_enabled == m.consumption_enabled);
    CHECK(back.prices.fertilizer_price == m.prices.fertilizer_price);
    for (std::size_t i = 0; i < m.activities.size(); ++i) {
        CHECK(back.activities[i].id == m.activities[i].id);
        CHECK(back.activities[i].yield_kg_ha == m.activities[i].yield_kg_ha);
        CHECK(back.activities[i].input_costs.seed == m.activities[i].input_costs.seed);
        CHECK(back.activities[i].fertilizer_kg_ha == m.activities[i].fertilizer_kg_ha);
    }
    for (std::size_t i = 0; i < m.households.size(); ++i) {
        CHECK(back.households[i].id == m.households[i].id);
        CHECK(back.households[i].weight == m.households[i].weight);
        CHECK(back.households[i].observed_levels == m.households[i].observed_levels);
        CHECK(back.households[i].observed_consumption == m.households[i].observed_consumption);
    }
    CHECK(back.base_policy.eligibility == EligibilityKind::listed);
    CHECK(back.base_policy.beneficiary_ids == m.base_policy.beneficiary_ids);
    CHECK(back.base_policy.eligible(back.households[0]));
    CHECK(!back.base_policy.eligible(back.households[1]));
}
