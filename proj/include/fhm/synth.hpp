#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fhm {

struct RegionProfile {
    std::string name;
    int sample_count = 0;          // observed survey share, used by the national mix
    double mean_area_ha = 0.0;
    double adult_equivalents = 0.0;
    double share_cereal = 0.0;     // assolement shares, excl. rice
    double share_rice = 0.0;
    double share_tuber = 0.0;
    double share_horticulture = 0.0;
    double share_cash = 0.0;
    double fert_use_rate = 0.0;           // households applying any fertilizer
    double benef_among_users = 0.0;       // program beneficiaries among users
    double fert_kg_ha = 0.0;              // regional mean over all cultivated area
};

const std::vector<RegionProfile>& region_profiles();
const RegionProfile* find_profile(const std::string& name);

struct SynthConfig {
    std::uint64_t seed = 1;
    int households = 100;
    std::string profile = "Senegal";  // region name, or the national mix
    double fertilizer_price = 300.0;
    double subsidy_rate = 0.5;
    double base_quota_kg = 150.0;
    double missing_rate = 0.01;   // blanked numeric cells
    double outlier_rate = 0.005;  // inflated yields, exercises the cleaner
};

// Writes households.csv and plots.csv shaped on the regional survey profile;
// deterministic for a given config. Regional means of area, fertilizer use and
// beneficiary rates land on the profile by construction.
void synth_survey(const SynthConfig& config, const std::string& out_dir);

}  // namespace fhm
