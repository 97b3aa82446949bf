#include "fhm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <stdexcept>

#include "fhm/csv.hpp"

namespace fhm {

namespace {

struct CropParams {
    std::string name;
    double semi_share;  // share of plots on the semi-intensive practice
    // ext / semi pairs
    double seed[2], fert_cost[2], phyto[2], equip[2], hired[2];
    double yield[2];
    double price;
    double fert_kg[2];  // implied at ~300 FCFA/kg, rescaled per region
    bool dry_season = false;
};

// Magnitudes of the published practice-level survey statistics.
const std::vector<CropParams>& crops() {
    static const std::vector<CropParams> table = {
        {"mil", 0.147, {3874, 23718}, {1172, 9471}, {369, 1317}, {973, 2794}, {720, 6476},
         {604, 854}, 173.8, {3.9, 31.6}},
        {"sorgho", 0.214, {1829, 14138}, {659, 6888}, {333, 1000}, {1148, 2182}, {141, 7343},
         {666, 1005}, 191.4, {2.2, 23.0}},
        {"mais", 0.126, {2528, 20428}, {1354, 9938}, {450, 2296}, {759, 1859}, {800, 7899},
         {752, 1110}, 194.6, {4.5, 33.1}},
        {"riz", 0.179, {3301, 20509}, {1603, 20799}, {535, 4974}, {569, 4279}, {1045, 13417},
         {1095, 2372}, 224.8, {5.3, 69.3}},
        {"manioc", 0.276, {4458, 27621}, {1780, 5850}, {562, 647}, {1138, 3684}, {766, 14424},
         {789, 1851}, 273.3, {5.9, 19.5}},
        {"arachide", 0.231, {4443, 27769}, {1668, 7881}, {555, 1213}, {1105, 3312}, {1232, 5462},
         {721, 975}, 185.4, {5.6, 26.3}},
        {"oignon", 0.30, {15000, 32000}, {7500, 15000}, {3000, 6000}, {5000, 9000}, {12000, 20000},
         {3800, 5200}, 65.0, {25.0, 50.0}, true},
    };
    return table;
}

const CropParams& crop_params(const std::string& name) {
    for (const auto& c : crops())
        if (c.name == name) return c;
    throw std::invalid_argument("unknown synth crop " + name);
}

}  // namespace

const std::vector<RegionProfile>& region_profiles() {
    static const std::vector<RegionProfile> table = {
        {"Senegal", 2278, 4.7, 5.1, 43.9, 7.1, 2.0, 7.6, 39.4, 0.383, 0.818, 8.7},
        {"Dakar", 8, 3.5, 6.9, 31.0, 0.0, 10.9, 3.3, 54.8, 0.625, 0.577, 31.4},
        {"Thies", 118, 5.1, 6.0, 30.8, 0.0, 8.9, 18.8, 41.5, 0.381, 0.919, 9.1},
        {"Diourbel", 136, 5.6, 5.5, 45.3, 0.0, 1.1, 5.7, 47.9, 0.213, 0.938, 6.9},
        {"Fatick_Kao", 392, 4.9, 5.0, 52.2, 0.7, 0.2, 4.5, 42.4, 0.362, 0.872, 7.6},
        {"Kaffrine", 240, 7.6, 5.0, 50.3, 0.1, 0.4, 7.0, 42.2, 0.591, 0.896, 11.2},
        {"St-Louis", 141, 3.5, 5.0, 15.8, 31.7, 6.4, 24.5, 21.6, 0.752, 0.609, 34.1},
        {"Louga", 65, 5.2, 5.1, 40.6, 0.0, 0.3, 5.8, 53.3, 0.108, 0.958, 0.7},
        {"Matam", 163, 2.5, 4.5, 68.2, 4.7, 1.7, 11.1, 14.3, 0.104, 0.855, 2.0},
        {"Tamba_Ked", 437, 4.1, 5.3, 59.3, 1.9, 0.2, 3.5, 35.1, 0.295, 0.771, 3.5},
        {"Casamance", 578, 4.6, 5.2, 38.2, 22.9, 1.1, 4.0, 33.8, 0.434, 0.733, 6.0},
    };
    return table;
}

const RegionProfile* find_profile(const std::string& name) {
    for (const auto& p : region_profiles())
        if (p.name == name) return &p;
    return nullptr;
}

namespace {

struct HouseholdDraft {
    std::string id;
    const RegionProfile* region;
    double weight, adult_eq, exog_income;
    bool fert_user = false, beneficiary = false;
    struct Plot {
        std::string crop;
        bool semi = false, dry = false;
        double area = 0, yield = 0, seed = 0, fert_cost = 0, phyto = 0, equip = 0, hired = 0;
        double fert_kg = 0, labor = 0, price = 0;
    };
    std::vector<Plot> plots;
};

}  // namespace

void synth_survey(const SynthConfig& config, const std::string& out_dir) {
    if (config.households < 1) throw std::invalid_argument("synth: need at least one household");
    const RegionProfile* master = find_profile(config.profile);
    if (!master) throw std::invalid_argument("unknown profile '" + config.profile + "'");

    std::mt19937_64 rng(config.seed);
    auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    auto gauss = [&](double m, double sd) { return std::normal_distribution<double>(m, sd)(rng); };

    // regional composition: a named region is homogeneous, the national
    // profile mixes regions by survey share
    std::vector<const RegionProfile*> assignment(config.households, master);
    if (config.profile == "Senegal") {
        std::vector<const RegionProfile*> regions;
        double total = 0;
        for (const auto& p : region_profiles())
            if (p.name != "Senegal") {
                regions.push_back(&p);
                total += p.sample_count;
            }
        int assigned = 0;
        for (std::size_t r = 0; r < regions.size() && assigned < config.households; ++r) {
            int take = static_cast<int>(std::round(config.households * regions[r]->sample_count / total));
            if (r + 1 == regions.size()) take = config.households - assigned;
            take = std::min(take, config.households - assigned);
            for (int k = 0; k < take; ++k) assignment[static_cast<std::size_t>(assigned++)] = regions[r];
        }
        while (assigned < config.households) assignment[static_cast<std::size_t>(assigned++)] = regions.back();
    }

    std::vector<HouseholdDraft> drafts(static_cast<std::size_t>(config.households));
    for (int i = 0; i < config.households; ++i) {
        auto& d = drafts[static_cast<std::size_t>(i)];
        const RegionProfile& reg = *assignment[static_cast<std::size_t>(i)];
        d.region = &reg;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "H%05d", i + 1);
        d.id = buf;
        d.weight = uni(60.0, 140.0);
        d.adult_eq = std::max(1.0, gauss(reg.adult_equivalents, 0.9));
        d.exog_income = std::max(0.0, gauss(180000.0, 90000.0));

        double area = std::exp(gauss(std::log(reg.mean_area_ha) - 0.5 * 0.45 * 0.45, 0.45));
        int n_plots = 2 + static_cast<int>(uni(0.0, 1.0) * 2.999);

        // crop picks by regional assolement shares
        struct Pick {
            std::string crop;
            double w;
        };
        std::vector<Pick> menu = {
            {"mil", reg.share_cereal * 0.55},   {"sorgho", reg.share_cereal * 0.18},
            {"mais", reg.share_cereal * 0.27},  {"riz", reg.share_rice},
            {"manioc", reg.share_tuber},        {"oignon", reg.share_horticulture},
            {"arachide", reg.share_cash},
        };
        std::vector<std::string> chosen;
        for (int p = 0; p < n_plots; ++p) {
            double total = 0;
            for (const auto& m : menu) total += m.w;
            if (total <= 0) break;
            double r = uni(0.0, total);
            for (auto& m : menu) {
                if (r <= m.w) {
                    chosen.push_back(m.crop);
                    m.w = 0;  // without replacement
                    break;
                }
                r -= m.w;
            }
        }
        if (chosen.empty()) chosen.push_back("mil");

        std::vector<double> alloc(chosen.size());
        double alloc_total = 0;
        for (auto& a : alloc) {
            a = uni(0.35, 1.0);
            alloc_total += a;
        }
        for (std::size_t p = 0; p < chosen.size(); ++p) {
            const CropParams& cp = crop_params(chosen[p]);
            HouseholdDraft::Plot plot;
            plot.crop = cp.name;
            plot.dry = cp.dry_season;
            plot.semi = uni(0.0, 1.0) < cp.semi_share;
            plot.area = area * alloc[p] / alloc_total;
            int k = plot.semi ? 1 : 0;
            plot.yield = std::max(0.15 * cp.yield[k], gauss(cp.yield[k], 0.12 * cp.yield[k]));
            plot.seed = std::max(0.0, gauss(cp.seed[k], 0.15 * cp.seed[k]));
            plot.phyto = std::max(0.0, gauss(cp.phyto[k], 0.15 * cp.phyto[k]));
            plot.equip = std::max(0.0, gauss(cp.equip[k], 0.15 * cp.equip[k]));
            plot.hired = std::max(0.0, gauss(cp.hired[k], 0.15 * cp.hired[k]));
            plot.fert_kg = std::max(0.0, gauss(cp.fert_kg[k], 0.3 * cp.fert_kg[k]));
            plot.labor = std::max(6.0, gauss(plot.semi ? 36.0 : 22.0, 5.0));
            plot.price = std::max(0.3 * cp.price, gauss(cp.price, 0.05 * cp.price));
            d.plots.push_back(plot);
        }
    }

    // exact regional mean area: rescale areas within each region
    std::map<std::string, std::pair<double, int>> region_area;  // sum, households
    for (const auto& d : drafts) {
        double a = 0;
        for (const auto& p : d.plots) a += p.area;
        region_area[d.region->name].first += a;
        region_area[d.region->name].second += 1;
    }
    for (auto& d : drafts) {
        auto [sum, cnt] = region_area[d.region->name];
        double factor = sum > 0 ? d.region->mean_area_ha * cnt / sum : 1.0;
        for (auto& p : d.plots) p.area *= factor;
    }

    // fertilizer users and beneficiaries at the exact regional rates
    std::map<std::string, std::vector<std::size_t>> by_region;
    for (std::size_t i = 0; i < drafts.size(); ++i) by_region[drafts[i].region->name].push_back(i);
    for (auto& [rname, idxs] : by_region) {
        const RegionProfile& reg = *drafts[idxs.front()].region;
        std::vector<std::size_t> shuffled = idxs;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        int users = static_cast<int>(std::round(reg.fert_use_rate * static_cast<double>(idxs.size())));
        for (int u = 0; u < users; ++u) drafts[shuffled[static_cast<std::size_t>(u)]].fert_user = true;
        int benef = static_cast<int>(std::round(reg.benef_among_users * users));
        for (int b = 0; b < benef; ++b) drafts[shuffled[static_cast<std::size_t>(b)]].beneficiary = true;

        // scale user quantities so the regional kg/ha mean lands on the profile
        double area = 0, fert = 0;
        for (std::size_t i : idxs) {
            for (auto& p : drafts[i].plots) {
                area += p.area;
                if (drafts[i].fert_user) fert += p.area * p.fert_kg;
            }
        }
        double target = reg.fert_kg_ha * area;
        double factor = fert > 0 ? target / fert : 0.0;
        for (std::size_t i : idxs)
            for (auto& p : drafts[i].plots) p.fert_kg = drafts[i].fert_user ? p.fert_kg * factor : 0.0;
    }

    // fertilizer expenditure at the price actually paid
    for (auto& d : drafts) {
        double total = 0;
        for (const auto& p : d.plots) total += p.area * p.fert_kg;
        double sub_share = 0.0;
        if (d.beneficiary && total > 0)
            sub_share = std::min(total, config.base_quota_kg) / total;
        double paid = sub_share * (1.0 - config.subsidy_rate) * config.fertilizer_price +
                      (1.0 - sub_share) * config.fertilizer_price;
        for (auto& p : d.plots) p.fert_cost = p.fert_kg * paid;
    }

    // light damage: missing cells and the occasional wild yield
    csv::Table hh, plots;
    hh.header = {"id", "region", "weight", "members", "adult_equivalents", "exog_income", "beneficiary"};
    plots.header = {"plot_id", "household", "crop", "season", "area_ha", "production_kg",
                    "exp_seed", "exp_fertilizer", "exp_phyto", "exp_equipment", "exp_hired_labor",
                    "exp_other", "fertilizer_kg", "labor_days", "sale_price"};
    int plot_seq = 0;
    for (auto& d : drafts) {
        hh.rows.push_back({d.id, d.region->name, csv::format_double(d.weight),
                           csv::format_double(std::round(d.adult_eq + 2.0)),
                           csv::format_double(d.adult_eq), csv::format_double(d.exog_income),
                           d.beneficiary ? "1" : "0"});
        for (auto& p : d.plots) {
            char pid[16];
            std::snprintf(pid, sizeof(pid), "P%06d", ++plot_seq);
            double yield = p.yield;
            if (uni(0.0, 1.0) < config.outlier_rate) yield *= 8.0;
            std::string production = csv::format_double(yield * p.area);
            std::string fert_kg = csv::format_double(p.fert_kg * p.area);
            if (uni(0.0, 1.0) < config.missing_rate) production = "n/a";
            if (uni(0.0, 1.0) < config.missing_rate) fert_kg = "";
            plots.rows.push_back({pid, d.id, p.crop, p.dry ? "dry" : "rainy",
                                  csv::format_double(p.area), production,
                                  csv::format_double(p.seed * p.area),
                                  csv::format_double(p.fert_cost * p.area),
                                  csv::format_double(p.phyto * p.area),
                                  csv::format_double(p.equip * p.area),
                                  csv::format_double(p.hired * p.area),
                                  "0",
                                  fert_kg,
                                  csv::format_double(p.labor * p.area),
                                  csv::format_double(p.price)});
        }
    }
    std::filesystem::create_directories(out_dir);
    csv::write_file(out_dir + "/households.csv", hh);
    csv::write_file(out_dir + "/plots.csv", plots);
}

}  // namespace fhm
