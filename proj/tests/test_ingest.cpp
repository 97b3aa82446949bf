#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "fhm/csv.hpp"
#include "fhm/ingest.hpp"

using namespace fhm;

namespace {

std::filesystem::path make_survey_dir(const std::string& households, const std::string& plots,
                                      const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "households.csv") << households;
    std::ofstream(dir / "plots.csv") << plots;
    return dir;
}

const char* kHouseholds =
    "id,region,weight,members,adult_equivalents,exog_income,beneficiary\n"
    "H1,Kaffrine,100,7,5,120000,1\n"
    "H2,Kaffrine,80,6,4.5,90000,0\n"
    "H3,Thies,60,5,4,50000,0\n";

const char* kPlots =
    "plot_id,household,crop,season,area_ha,production_kg,exp_seed,exp_fertilizer,exp_phyto,"
    "exp_equipment,exp_hired_labor,exp_other,fertilizer_kg,labor_days,sale_price\n"
    "P1,H1,mil,rainy,1,800,3900,1200,400,900,700,0,4,22,174\n"
    "P2,H1,mil,rainy,1,800,3800,1100,350,950,750,0,4,23,173\n"
    "P3,H1,arachide,rainy,2,1500,8900,3300,1100,2200,2500,0,11,45,185\n"
    "P4,H2,mil,rainy,2,1500,7700,n/a,700,1900,1500,0,8,44,175\n"
    "P5,H2,arachide,rainy,1,700,4400,1700,560,1100,1250,0,6,23,186\n"
    "P6,H3,mil,rainy,1.5,1100,5800,1750,550,1450,1100,0,6,33,172\n"
    "P7,H3,manioc,rainy,0.5,400,2200,900,280,570,380,0,3,12,273\n";

}  // namespace

TEST_CASE("load_survey preserves counts and flags missing cells") {
    auto dir = make_survey_dir(kHouseholds, kPlots, "fhm_survey_basic");
    SurveyDataset ds = load_survey(dir.string());
    CHECK(ds.households.size() == 3);
    CHECK(ds.plots.size() == 7);
    CHECK(!ds.plots[3].exp_fertilizer.has_value());  // "n/a"
    CHECK(ds.plots[0].exp_fertilizer.value() == doctest::Approx(1200));
}

TEST_CASE("duplicate household id is an error") {
    std::string dup = std::string(kHouseholds) + "H1,Thies,10,3,2,0,0\n";
    auto dir = make_survey_dir(dup, kPlots, "fhm_survey_dup");
    CHECK_THROWS_WITH_AS(load_survey(dir.string()), doctest::Contains("duplicate id"),
                         std::runtime_error);
}

TEST_CASE("missing mandatory column is an error naming the column") {
    auto dir = make_survey_dir("id,region\nH1,Kaffrine\n", kPlots, "fhm_survey_nocol");
    CHECK_THROWS_WITH_AS(load_survey(dir.string()), doctest::Contains("weight"), std::runtime_error);
}

TEST_CASE("tukey cleaning replaces the outlier with the surviving median") {
    std::vector<std::optional<double>> v = {1, 2, 3, 4, 100};
    CleaningPolicy pol;  // tukey_drop, k = 1.5
    auto out = clean_series(v, pol);
    // Q1 = 2, Q3 = 4, fence = 4 + 1.5*2 = 7; 100 out; median of {1,2,3,4} = 2.5
    REQUIRE(out.size() == 5);
    CHECK(out[0] == 1);
    CHECK(out[3] == 4);
    CHECK(out[4] == doctest::Approx(2.5));
}

TEST_CASE("constant series passes through unchanged") {
    std::vector<std::optional<double>> v = {5, 5, 5};
    CleaningPolicy pol;
    CHECK(clean_series(v, pol) == std::vector<double>{5, 5, 5});
    pol.method = CleaningPolicy::Method::winsorize;
    CHECK(clean_series(v, pol) == std::vector<double>{5, 5, 5});
}

TEST_CASE("winsorize imputes the median for missing entries") {
    std::vector<std::optional<double>> v = {1.0, std::nullopt, 3.0};
    CleaningPolicy pol;
    pol.method = CleaningPolicy::Method::winsorize;
    auto out = clean_series(v, pol);
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[1] == doctest::Approx(2.0));  // median of {1,3}
    CHECK(out[2] == doctest::Approx(3.0));
}

TEST_CASE("all-missing input is an error") {
    std::vector<std::optional<double>> v = {std::nullopt, std::nullopt};
    CHECK_THROWS_AS(clean_series(v, CleaningPolicy{}), std::invalid_argument);
}

TEST_CASE("clean_series is idempotent on survey-like data") {
    std::mt19937_64 rng(7);
    std::lognormal_distribution<double> body(6.0, 0.6);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<std::optional<double>> v;
        int n = 20 + static_cast<int>(rng() % 60);
        for (int i = 0; i < n; ++i) {
            double x = body(rng);
            if (rng() % 20 == 0) x *= 12.0;  // injected outlier
            if (rng() % 25 == 0)
                v.push_back(std::nullopt);
            else
                v.push_back(x);
        }
        for (auto method : {CleaningPolicy::Method::tukey_drop, CleaningPolicy::Method::winsorize}) {
            CleaningPolicy pol;
            pol.method = method;
            auto once = clean_series(v, pol);
            std::vector<std::optional<double>> again(once.begin(), once.end());
            auto twice = clean_series(again, pol);
            for (std::size_t i = 0; i < once.size(); ++i)
                CHECK(twice[i] == doctest::Approx(once[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("winsorize never leaves the observed range") {
    std::mt19937_64 rng(11);
    std::lognormal_distribution<double> body(5.0, 1.0);
    std::vector<std::optional<double>> v;
    for (int i = 0; i < 50; ++i) v.push_back(body(rng));
    CleaningPolicy pol;
    pol.method = CleaningPolicy::Method::winsorize;
    auto out = clean_series(v, pol);
    double lo = 1e300, hi = -1e300;
    for (const auto& x : v) {
        lo = std::min(lo, *x);
        hi = std::max(hi, *x);
    }
    for (double x : out) {
        CHECK(x >= lo);
        CHECK(x <= hi);
    }
}

TEST_CASE("build_households aggregates plots into activities and households") {
    auto dir = make_survey_dir(kHouseholds, kPlots, "fhm_survey_build");
    SurveyDataset ds = load_survey(dir.string());
    IngestConfig cfg;
    IngestResult res = build_households(ds, cfg);
    const ModelInstance& m = res.model;

    // H1 has two identical 1-ha mil plots -> 2 ha observed on one activity
    const Household* h1 = m.find_household("H1");
    REQUIRE(h1 != nullptr);
    CHECK(h1->observed_levels.at("mil_ext_rainy") == doctest::Approx(2.0));
    CHECK(h1->base_beneficiary);

    // total area preserved through cleaning and aggregation
    double obs_total = 0;
    for (const auto& h : m.households)
        for (const auto& [aid, ha] : h.observed_levels) obs_total += ha;
    CHECK(obs_total == doctest::Approx(1 + 1 + 2 + 2 + 1 + 1.5 + 0.5));

    // land endowment covers observed area
    for (const auto& h : m.households) {
        double rainy = 0;
        for (const auto& [aid, ha] : h.observed_levels) rainy += ha;
        CHECK(h.land_ha >= rainy - 1e-12);
    }

    CHECK(validate_model(m).empty());
}

TEST_CASE("area-weighted yield over unequal plots") {
    std::string plots =
        "plot_id,household,crop,season,area_ha,production_kg,exp_seed,exp_fertilizer,exp_phyto,"
        "exp_equipment,exp_hired_labor,exp_other,fertilizer_kg,labor_days,sale_price\n"
        "P1,H1,mil,rainy,1,700,3900,1200,400,900,700,0,4,22,174\n"
        "P2,H1,mil,rainy,1,900,3800,1100,350,950,750,0,4,23,173\n";
    auto dir = make_survey_dir("id,region,weight,adult_equivalents,exog_income\nH1,Kaffrine,1,5,0\n",
                               plots, "fhm_survey_yield");
    IngestResult res = build_households(load_survey(dir.string()), IngestConfig{});
    CHECK(res.model.find_activity("mil_ext_rainy")->yield_kg_ha == doctest::Approx(800.0));
}

TEST_CASE("household without plots is excluded with a diagnostic") {
    std::string hh = std::string(kHouseholds) + "H9,Louga,10,3,2,0,0\n";
    auto dir = make_survey_dir(hh, kPlots, "fhm_survey_noplots");
    IngestResult res = build_households(load_survey(dir.string()), IngestConfig{});
    CHECK(res.model.find_household("H9") == nullptr);
    bool found = false;
    for (const auto& d : res.diagnostics)
        if (d.where == "H9") found = true;
    CHECK(found);
}

TEST_CASE("empty dataset is an error") {
    SurveyDataset empty;
    CHECK_THROWS_AS(build_households(empty, IngestConfig{}), std::invalid_argument);
}
