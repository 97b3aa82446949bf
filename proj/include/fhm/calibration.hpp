#pragma once

#include <map>
#include <string>
#include <vector>

#include "fhm/household.hpp"
#include "fhm/types.hpp"

namespace fhm {

struct ElasticityTargets {
    std::map<std::string, double> by_product;  // product -> own-price supply elasticity
    double default_elasticity = 0.8;

    double get(const std::string& product) const {
        auto it = by_product.find(product);
        return it == by_product.end() ? default_elasticity : it->second;
    }
};

struct ElasticityCheck {
    std::string activity;
    double target = 0.0;
    double simulated = 0.0;
    bool corner = false;  // blocked response; reported, not asserted
    bool within = false;  // |simulated/target - 1| <= 0.05
};

struct CalibrationResult {
    HouseholdCalibration behavioral;                     // QP-ready terms
    std::map<std::string, double> duals;                 // stage-1 resource duals
    std::map<std::string, double> margins;               // activity -> marginal gross margin at base
    std::map<std::string, double> reported_d;            // spec-form d (group margin anchored for alternatives)
    std::map<std::string, double> residuals;             // activity -> |x - x0| / max(x0, 1e-12)
    std::vector<ElasticityCheck> elasticity;
    bool converged = true;
    int iterations = 0;
    std::string diagnostic;
};

// Per-ha margin at market prices: yield x price + fertilizer subsidy value
// minus all input costs. Throws on negative revenue components.
double gross_margin(const Activity& activity, const PriceSystem& prices, const SubsidyPolicy& policy);

// Margin at the household's base-year regime price and marginal fertilizer
// price; this is what the QP sees at the observed point.
double marginal_gross_margin(const ModelInstance& model, const Household& household,
                             const Activity& activity, const PriceSystem& prices,
                             const SubsidyPolicy& policy);

// LP duals of the resource constraints at observed levels (activity bounds
// x <= x0 * (1 + 1e-6)). Keys: land_rainy, land_dry, labor_rainy, labor_dry, cash.
std::map<std::string, double> stage1_duals(const ModelInstance& model, const Household& household,
                                           const PriceSystem& prices, const SubsidyPolicy& policy);

struct CalibrationOptions {
    double elasticity_tol = 0.05;  // relative
    int max_fixed_point_iterations = 50;
    double fd_step = 0.01;  // +/-1% price perturbation
};

CalibrationResult calibrate_pmp(const ModelInstance& model, const Household& household,
                                const PriceSystem& prices, const SubsidyPolicy& policy,
                                const ElasticityTargets& targets, const CalibrationOptions& options = {});

struct GroupStats {
    // (region|specialization) -> activity -> accumulated mean margin and Q
    struct Entry {
        double mean_margin = 0.0;
        double mean_q = 0.0;
        int count = 0;
    };
    std::map<std::string, std::map<std::string, Entry>> by_group;
};

GroupStats compute_group_stats(const ModelInstance& model,
                               const std::map<std::string, CalibrationResult>& calibrated,
                               const std::map<std::string, std::string>& group_of_household);

// Adds the group's activities the household does not practice, at group-mean
// Q and margin; the base-year solution is preserved.
void attach_alternatives(const ModelInstance& model, const Household& household,
                         const PriceSystem& prices, const SubsidyPolicy& policy,
                         const GroupStats& stats, const std::string& group,
                         CalibrationResult& result);

struct LesPriors {
    std::map<std::string, double> beta;   // sums to one
    std::map<std::string, double> gamma;  // committed kg
};

// Prior-anchored constrained least squares reproducing observed consumption;
// returns (beta, gamma) with sum(beta) = 1, beta >= 0, 0 <= gamma <= observed.
std::pair<std::map<std::string, double>, std::map<std::string, double>> estimate_les(
    const Household& household, const LesPriors& priors, const PriceSystem& prices, double income);

struct CalibrationSet {
    std::map<std::string, CalibrationResult> by_household;
    std::map<std::string, std::string> group_of_household;

    std::map<std::string, HouseholdCalibration> behavioral() const;
};

// Two-pass pipeline: per-household PMP calibration, then group statistics and
// alternative-activity attachment. Group = region x specialization.
CalibrationSet calibrate_all(const ModelInstance& model, const ElasticityTargets& targets,
                             int jobs = 1, const CalibrationOptions& options = {});

}  // namespace fhm
