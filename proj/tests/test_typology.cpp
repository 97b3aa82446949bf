#include <doctest.h>

#include <algorithm>
#include <random>

#include "fhm/typology.hpp"

using namespace fhm;

namespace {

// Practice-level expenditure magnitudes for mil (seed, fert, phyto, equip, labor).
const double kMilExt[5] = {3874, 1172, 369, 973, 720};
const double kMilSemi[5] = {23718, 9471, 1317, 2794, 6476};

std::vector<PracticeObservation> planted_clusters(int n_ext, int n_semi, unsigned seed,
                                                  double noise = 0.15) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<PracticeObservation> obs;
    auto emit = [&](const double* base, int count, const std::string& prefix) {
        for (int i = 0; i < count; ++i) {
            PracticeObservation o;
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%s%04d", prefix.c_str(), i);
            o.plot_id = buf;
            o.crop = "mil";
            double* fields[5] = {&o.seed, &o.fertilizer, &o.phyto, &o.equipment, &o.hired_labor};
            for (int k = 0; k < 5; ++k)
                *fields[k] = std::max(0.0, base[k] * (1.0 + noise * g(rng)));
            obs.push_back(o);
        }
    };
    emit(kMilExt, n_ext, "e");
    emit(kMilSemi, n_semi, "s");
    return obs;
}

ModelInstance value_fixture() {
    ModelInstance m;
    m.products = {{"mil", "mil", ProductCategory::cereal, true},
                  {"manioc", "manioc", ProductCategory::root_tuber, true},
                  {"arachide", "arachide", ProductCategory::legume, true},
                  {"tomate", "tomate", ProductCategory::cash_horticulture, true}};
    m.prices.market_price = {{"mil", 100}, {"manioc", 100}, {"arachide", 100}, {"tomate", 100}};
    for (const auto& p : m.products) {
        Activity a;
        a.id = p.id + "_ext_rainy";
        a.product = p.id;
        a.yield_kg_ha = 1000;  // 1 ha -> 100 000 FCFA at these prices
        m.activities.push_back(a);
    }
    return m;
}

Household with_values(double mil, double manioc, double arachide, double tomate) {
    Household h;
    h.id = "H";
    h.land_ha = 1000;
    // value in FCFA = 100 000 per ha here
    h.observed_levels = {{"mil_ext_rainy", mil / 100000.0},
                         {"manioc_ext_rainy", manioc / 100000.0},
                         {"arachide_ext_rainy", arachide / 100000.0},
                         {"tomate_ext_rainy", tomate / 100000.0}};
    return h;
}

}  // namespace

TEST_CASE("well separated groups split into extensive and semi-intensive") {
    std::vector<PracticeObservation> obs;
    for (int i = 0; i < 6; ++i) {
        PracticeObservation o;
        o.plot_id = "p" + std::to_string(i);
        o.crop = "x";
        double total = i < 3 ? 3000.0 : 60000.0;
        o.seed = total * 0.4;
        o.fertilizer = total * 0.3;
        o.phyto = total * 0.1;
        o.equipment = total * 0.1;
        o.hired_labor = total * 0.1;
        obs.push_back(o);
    }
    auto cls = classify_practices(obs, 2);
    for (int i = 0; i < 3; ++i) CHECK(cls.labels.at("p" + std::to_string(i)) == Practice::extensive);
    for (int i = 3; i < 6; ++i) CHECK(cls.labels.at("p" + std::to_string(i)) == Practice::semi_intensive);
    CHECK(cls.diagnostics.empty());
}

TEST_CASE("identical observations collapse to extensive with a diagnostic") {
    std::vector<PracticeObservation> obs(5);
    for (int i = 0; i < 5; ++i) {
        obs[static_cast<std::size_t>(i)].plot_id = "p" + std::to_string(i);
        obs[static_cast<std::size_t>(i)].seed = 1000;
    }
    auto cls = classify_practices(obs, 2);
    for (const auto& [pid, pr] : cls.labels) CHECK(pr == Practice::extensive);
    CHECK(!cls.diagnostics.empty());
}

TEST_CASE("fewer observations than clusters is an error") {
    std::vector<PracticeObservation> one(1);
    one[0].plot_id = "p";
    CHECK_THROWS_AS(classify_practices(one, 2), std::invalid_argument);
}

TEST_CASE("published mil magnitudes are recovered at 95 percent or better") {
    auto obs = planted_clusters(85, 15, 2024);
    auto cls = classify_practices(obs, 2);
    int correct = 0;
    for (const auto& o : obs) {
        bool truth_semi = o.plot_id[0] == 's';
        if ((cls.labels.at(o.plot_id) == Practice::semi_intensive) == truth_semi) ++correct;
    }
    CHECK(static_cast<double>(correct) / static_cast<double>(obs.size()) >= 0.95);
}

TEST_CASE("classification is invariant to row permutation") {
    auto obs = planted_clusters(20, 8, 99);
    auto base = classify_practices(obs, 2);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        auto shuffled = obs;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        auto cls = classify_practices(shuffled, 2);
        CHECK(cls.labels == base.labels);
    }
}

TEST_CASE("economic size thresholds with closed middle endpoints") {
    ModelInstance m = value_fixture();
    auto size_of = [&](double value) {
        Household h = with_values(value, 0, 0, 0);
        return economic_size(h, m).size;
    };
    CHECK(size_of(350000) == SizeClass::petite);
    CHECK(size_of(0) == SizeClass::petite);
    CHECK(size_of(399999) == SizeClass::petite);
    CHECK(size_of(400000) == SizeClass::moyenne);
    CHECK(size_of(850000) == SizeClass::moyenne);
    CHECK(size_of(850001) == SizeClass::grande);
}

TEST_CASE("economic size is monotone in production") {
    ModelInstance m = value_fixture();
    double prev = -1;
    for (double v : {100000.0, 399999.0, 400000.0, 600000.0, 850000.0, 850001.0, 2e6}) {
        Household h = with_values(v, 0, 0, 0);
        double val = economic_size(h, m).economic_value;
        CHECK(val > prev);
        prev = val;
    }
}

TEST_CASE("specialization rule order") {
    ModelInstance m = value_fixture();
    // cereals 70% -> vivrier
    CHECK(specialization(with_values(70, 0, 0, 30), m) == Specialization::vivrier);
    // cereals 40 + legumes 40 -> cereales_legumineuses by rule order (0.80 >= 0.65)
    CHECK(specialization(with_values(40, 0, 40, 20), m) == Specialization::cereales_legumineuses);
    // four categories at 25% each -> mixte
    CHECK(specialization(with_values(25, 25, 25, 25), m) == Specialization::mixte);
    // legumes + horticulture 80% -> rente
    CHECK(specialization(with_values(20, 0, 40, 40), m) == Specialization::rente);
    // zero value errors
    CHECK_THROWS_AS(specialization(with_values(0, 0, 0, 0), m), std::invalid_argument);
}

TEST_CASE("every share mix lands in exactly one class") {
    ModelInstance m = value_fixture();
    for (int a = 0; a <= 10; ++a)
        for (int b = 0; a + b <= 10; ++b)
            for (int c = 0; a + b + c <= 10; ++c) {
                int d = 10 - a - b - c;
                if (a + b + c + d == 0) continue;
                Household h = with_values(a * 10, b * 10, c * 10, d * 10);
                if (a + b + c + d > 0) CHECK_NOTHROW(specialization(h, m));
            }
}

TEST_CASE("hand-built 20-case table classifies with full agreement") {
    ModelInstance m = value_fixture();
    struct Case {
        double mil, manioc, arachide, tomate;  // FCFA values
        SizeClass size;
        Specialization spec;
    };
    // mil: cereal (vivrier + cer/leg), manioc: tuber (vivrier),
    // arachide: legume (rente + cer/leg), tomate: horticulture (rente)
    const Case cases[20] = {
        {350000, 0, 0, 0, SizeClass::petite, Specialization::vivrier},
        {0, 100000, 0, 0, SizeClass::petite, Specialization::vivrier},
        {200000, 100000, 50000, 0, SizeClass::petite, Specialization::vivrier},
        {400000, 0, 0, 0, SizeClass::moyenne, Specialization::vivrier},
        {850000, 0, 0, 0, SizeClass::moyenne, Specialization::vivrier},
        {850001, 0, 0, 0, SizeClass::grande, Specialization::vivrier},
        {0, 0, 300000, 0, SizeClass::petite, Specialization::rente},
        {0, 0, 200000, 300000, SizeClass::moyenne, Specialization::rente},
        {100000, 0, 0, 900000, SizeClass::grande, Specialization::rente},
        {50000, 0, 0, 150000, SizeClass::petite, Specialization::rente},
        {400000, 0, 400000, 100000, SizeClass::grande, Specialization::cereales_legumineuses},
        {200000, 0, 200000, 100000, SizeClass::moyenne, Specialization::cereales_legumineuses},
        {65000, 0, 0, 35000, SizeClass::petite, Specialization::vivrier},
        {64000, 0, 0, 36000, SizeClass::petite, Specialization::mixte},
        {0, 0, 65000, 35000, SizeClass::petite, Specialization::rente},
        {400000, 0, 350000, 250000, SizeClass::grande, Specialization::cereales_legumineuses},
        {250000, 250000, 0, 500000, SizeClass::grande, Specialization::mixte},
        {90000, 90000, 90000, 90000, SizeClass::petite, Specialization::mixte},
        {600000, 0, 100000, 100000, SizeClass::moyenne, Specialization::vivrier},
        {320000, 0, 320000, 160000, SizeClass::moyenne, Specialization::cereales_legumineuses},
    };
    for (const auto& c : cases) {
        Household h = with_values(c.mil, c.manioc, c.arachide, c.tomate);
        FarmClass fc = classify_farm(h, m);
        CHECK(fc.size == c.size);
        CHECK(fc.specialization == c.spec);
    }
}
