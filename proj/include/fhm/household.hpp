#pragma once

#include <map>
#include <string>
#include <vector>

#include "fhm/qp.hpp"
#include "fhm/types.hpp"

namespace fhm {

// Per-household behavioral terms produced by calibration. `activities` lists
// observed plus attached alternative activity ids.
struct HouseholdCalibration {
    std::vector<std::string> activities;
    std::map<std::string, double> d;       // FCFA/ha
    std::map<std::string, double> q_diag;  // FCFA/ha^2
    std::map<std::string, double> duals;   // stage-1 resource duals, for reporting
    // LES parameters, used only when the consumption module is enabled
    std::map<std::string, double> les_beta;
    std::map<std::string, double> les_gamma;
};

struct QuotaSplit {
    double subsidized_kg = 0.0;
    double unsubsidized_kg = 0.0;
    double cost_fcfa = 0.0;
};

// Tranche pricing: the subsidized price applies up to the household quota,
// the market price beyond; ineligible households pay market on everything.
QuotaSplit apply_quota(double demand_kg, const SubsidyPolicy& policy, const Household& household,
                       double fertilizer_market_price);

struct KKTReport {
    double stationarity = 0.0;
    double primal = 0.0;
    double complementarity = 0.0;
};

// One regime-resolved QP over (x, s, b, fertilizer tranches).
struct ProblemInstance {
    qp::Problem problem;  // minimization of -Z (decision-dependent part)
    double objective_constant = 0.0;
    std::vector<std::string> var_names;  // "x:<act>", "sell:<prod>", "buy:<prod>", "fert_sub", "fert_unsub"
    std::vector<std::string> eq_names;   // "balance:<prod>", "fert_link"
    std::vector<std::string> in_names;   // "land_rainy", "land_dry", "labor_rainy", "labor_dry", "cash"
    std::map<std::string, Regime> regimes;
    std::map<std::string, double> consumption;  // product -> fixed consumption target (kg)
    bool consumption_enabled = false;
    double sub_price = 0.0, unsub_price = 0.0, quota_eff = 0.0;
};

struct SolveOptions {
    int max_regime_products = 6;  // full enumeration cap; beyond it, local flips
    double verify_tol = 1e-8;
    int les_max_iterations = 40;
};

ProblemInstance build_problem(const ModelInstance& model, const Household& household,
                              const HouseholdCalibration& calibration, const PriceSystem& prices,
                              const SubsidyPolicy& policy,
                              const std::map<std::string, Regime>& regimes,
                              const std::map<std::string, double>& consumption);

std::pair<Solution, KKTReport> solve_qp(const ModelInstance& model, const Household& household,
                                        const ProblemInstance& instance);

Solution solve_household(const ModelInstance& model, const Household& household,
                         const HouseholdCalibration& calibration, const PriceSystem& prices,
                         const SubsidyPolicy& policy, const SolveOptions& options = {});

// Independent per-household solves; failures are collected as infeasible
// solutions with a diagnostic and do not stop the run. Deterministic for any
// worker count.
std::map<std::string, Solution> solve_all(const ModelInstance& model,
                                          const std::map<std::string, HouseholdCalibration>& calibrations,
                                          const PriceSystem& prices, const SubsidyPolicy& policy,
                                          int jobs = 1, const SolveOptions& options = {});

struct BalanceReport {
    double complementarity = 0.0;  // max |s_j * b_j| scaled
    double balance_e7 = 0.0;       // max |q + b - s - c| scaled
    double balance_e8 = 0.0;       // max |c - cs - b| scaled
    double price_band = 0.0;       // max band violation of internal prices, scaled
    double max() const;
};

// Re-checks market-balance identities of a finished Solution against the raw
// model data (independently of the solver's own report).
BalanceReport verify_solution(const ModelInstance& model, const Household& household,
                              const Solution& solution);
BalanceReport verify_solution(const ModelInstance& model, const PriceSystem& prices,
                              const Household& household, const Solution& solution);

}  // namespace fhm
