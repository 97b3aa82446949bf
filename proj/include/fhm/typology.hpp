#pragma once

#include <map>
#include <string>
#include <vector>

#include "fhm/types.hpp"

namespace fhm {

struct PracticeObservation {
    std::string plot_id;
    std::string crop;
    double seed = 0.0;
    double fertilizer = 0.0;
    double phyto = 0.0;
    double equipment = 0.0;
    double hired_labor = 0.0;  // all FCFA/ha

    double total() const { return seed + fertilizer + phyto + equipment + hired_labor; }
};

enum class SizeClass { petite, moyenne, grande };
enum class Specialization { vivrier, rente, cereales_legumineuses, mixte };

std::string to_string(SizeClass s);
std::string to_string(Specialization s);

struct FarmClass {
    SizeClass size = SizeClass::petite;
    Specialization specialization = Specialization::mixte;
    double economic_value = 0.0;  // FCFA
};

struct PracticeClassification {
    std::map<std::string, Practice> labels;  // plot id -> practice
    std::vector<Diagnostic> diagnostics;
};

// Agglomerative clustering (Ward linkage, Euclidean distance on z-scored
// expenditures) cut at n_clusters; the cluster with the lower mean total
// expenditure is labeled extensive. Order-independent given distinct inputs;
// ties break on the lowest plot id.
PracticeClassification classify_practices(const std::vector<PracticeObservation>& observations,
                                          int n_clusters = 2);

// Production value of the household's observed crop mix at market prices.
// Thresholds per the size table: <= 850 000 splits at 400 000; both endpoints
// fall in the middle class.
FarmClass economic_size(const Household& household, const ModelInstance& model);

Specialization specialization(const Household& household, const ModelInstance& model);

FarmClass classify_farm(const Household& household, const ModelInstance& model);

// value share of each product category for a household, base-year mix
std::map<ProductCategory, double> category_value_shares(const Household& household,
                                                        const ModelInstance& model);

}  // namespace fhm
