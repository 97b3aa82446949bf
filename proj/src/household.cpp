#include "fhm/household.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <thread>

namespace fhm {

QuotaSplit apply_quota(double demand_kg, const SubsidyPolicy& policy, const Household& household,
                       double fertilizer_market_price) {
    QuotaSplit split;
    if (demand_kg < 0) throw std::invalid_argument("apply_quota: negative demand");
    double p = fertilizer_market_price;
    if (policy.eligible(household)) {
        split.subsidized_kg = std::min(demand_kg, policy.quota_kg);
        split.unsubsidized_kg = demand_kg - split.subsidized_kg;
        split.cost_fcfa = split.subsidized_kg * (1.0 - policy.rate) * p + split.unsubsidized_kg * p;
    } else {
        split.unsubsidized_kg = demand_kg;
        split.cost_fcfa = demand_kg * p;
    }
    return split;
}

double BalanceReport::max() const {
    return std::max(std::max(complementarity, balance_e7), std::max(balance_e8, price_band));
}

namespace {

constexpr double kKgTol = 1e-7;

struct Compiled {
    const ModelInstance* model = nullptr;
    const Household* h = nullptr;
    const PriceSystem* prices = nullptr;
    const SubsidyPolicy* policy = nullptr;
    std::vector<const Activity*> acts;  // sorted by id
    std::vector<double> d, qdiag;
    bool has_fert = false;
    bool eligible = false;
    double quota_eff = 0.0, sub_price = 0.0, unsub_price = 0.0;
    std::map<std::string, std::vector<int>> producers;  // product -> act indices
    std::map<std::string, double> base_production;      // product -> q(x_obs)
};

double other_costs(const Activity& a) {
    const auto& c = a.input_costs;
    return c.seed + c.phyto + c.equipment + c.hired_labor + c.other;
}

Compiled compile(const ModelInstance& model, const Household& household,
                 const HouseholdCalibration& calibration, const PriceSystem& prices,
                 const SubsidyPolicy& policy) {
    Compiled c;
    c.model = &model;
    c.h = &household;
    c.prices = &prices;
    c.policy = &policy;
    std::vector<std::string> ids = calibration.activities;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (const auto& id : ids) {
        const Activity* a = model.find_activity(id);
        if (!a) throw std::runtime_error("calibration references unknown activity '" + id + "'");
        int idx = static_cast<int>(c.acts.size());
        c.acts.push_back(a);
        auto dit = calibration.d.find(id);
        auto qit = calibration.q_diag.find(id);
        c.d.push_back(dit == calibration.d.end() ? 0.0 : dit->second);
        c.qdiag.push_back(qit == calibration.q_diag.end() ? 0.0 : qit->second);
        if (a->fertilizer_kg_ha > 0) c.has_fert = true;
        c.producers[a->product].push_back(idx);
    }
    c.eligible = policy.eligible(household);
    c.unsub_price = prices.fertilizer_price;
    c.sub_price = c.eligible ? (1.0 - policy.rate) * prices.fertilizer_price : prices.fertilizer_price;
    c.quota_eff = (c.eligible && policy.rate > 0.0) ? policy.quota_kg : 0.0;
    for (const auto& [aid, ha] : household.observed_levels) {
        const Activity* a = model.find_activity(aid);
        if (a) c.base_production[a->product] += ha * a->yield_kg_ha;
    }
    return c;
}

// Fixed consumption targets for the supply configuration: observed consumption
// where present; non-tradable products are anchored at base-year output.
std::map<std::string, double> supply_consumption(const Compiled& c) {
    std::map<std::string, double> cbar;
    for (const auto& [pid, kg] : c.h->observed_consumption)
        if (kg > 0) cbar[pid] = kg;
    for (const auto& [pid, idxs] : c.producers) {
        const Product* p = c.model->find_product(pid);
        if (p && !p->tradable && !cbar.count(pid)) {
            auto it = c.base_production.find(pid);
            cbar[pid] = it == c.base_production.end() ? 0.0 : it->second;
        }
    }
    return cbar;
}

ProblemInstance build_instance(const Compiled& c, const std::map<std::string, Regime>& regimes,
                               const std::map<std::string, double>& consumption) {
    ProblemInstance inst;
    inst.regimes = regimes;
    inst.consumption = consumption;
    inst.consumption_enabled = c.model->consumption_enabled;
    inst.sub_price = c.sub_price;
    inst.unsub_price = c.unsub_price;
    inst.quota_eff = c.quota_eff;

    const int na = static_cast<int>(c.acts.size());
    // balance products: produced or consumed
    std::set<std::string> bal_products;
    for (const auto& [pid, _] : c.producers) bal_products.insert(pid);
    for (const auto& [pid, kg] : consumption)
        if (kg > 0) bal_products.insert(pid);

    std::vector<std::string> trade_var_product;
    std::vector<bool> trade_is_sell;
    for (const auto& pid : bal_products) {
        auto rit = regimes.find(pid);
        Regime r = rit == regimes.end() ? Regime::seller : rit->second;
        if (r == Regime::seller) {
            trade_var_product.push_back(pid);
            trade_is_sell.push_back(true);
        } else if (r == Regime::buyer) {
            trade_var_product.push_back(pid);
            trade_is_sell.push_back(false);
        }
    }
    const int nt = static_cast<int>(trade_var_product.size());
    const int nf = c.has_fert ? 2 : 0;
    const int n = na + nt + nf;

    for (const auto* a : c.acts) inst.var_names.push_back("x:" + a->id);
    for (int k = 0; k < nt; ++k)
        inst.var_names.push_back((trade_is_sell[k] ? "sell:" : "buy:") + trade_var_product[k]);
    if (c.has_fert) {
        inst.var_names.push_back("fert_sub");
        inst.var_names.push_back("fert_unsub");
    }

    const int me = static_cast<int>(bal_products.size()) + (c.has_fert ? 1 : 0);
    // resource rows assembled below, then trimmed
    qp::Problem& p = inst.problem;
    p.resize(n, me, 5);

    // objective: minimize -Z decision part
    for (int i = 0; i < na; ++i) {
        p.g[i] = other_costs(*c.acts[i]) + c.d[i];
        p.H(i, i) = c.qdiag[i];
        p.lb[i] = 0.0;
    }
    for (int k = 0; k < nt; ++k) {
        const std::string& pid = trade_var_product[k];
        p.g[na + k] = trade_is_sell[k] ? -c.prices->sell_price(pid) : c.prices->buy_price(pid);
        p.lb[na + k] = 0.0;
    }
    if (c.has_fert) {
        p.g[na + nt] = c.sub_price;
        p.g[na + nt + 1] = c.unsub_price;
        p.lb[na + nt] = 0.0;
        p.ub[na + nt] = c.quota_eff;
        p.lb[na + nt + 1] = 0.0;
    }
    inst.objective_constant = c.h->exog_income;

    // equality rows: balances, then the fertilizer link
    int row = 0;
    for (const auto& pid : bal_products) {
        auto pit = c.producers.find(pid);
        if (pit != c.producers.end())
            for (int i : pit->second) p.Aeq(row, i) = c.acts[i]->yield_kg_ha;
        for (int k = 0; k < nt; ++k)
            if (trade_var_product[k] == pid) p.Aeq(row, na + k) = trade_is_sell[k] ? -1.0 : 1.0;
        auto cit = consumption.find(pid);
        p.beq[row] = cit == consumption.end() ? 0.0 : cit->second;
        inst.eq_names.push_back("balance:" + pid);
        ++row;
    }
    if (c.has_fert) {
        for (int i = 0; i < na; ++i) p.Aeq(row, i) = c.acts[i]->fertilizer_kg_ha;
        p.Aeq(row, na + nt) = -1.0;
        p.Aeq(row, na + nt + 1) = -1.0;
        inst.eq_names.push_back("fert_link");
        ++row;
    }

    // resource rows: land and labor per season, then cash
    int irow = 0;
    auto add_season_rows = [&](Season season, const std::string& suffix) {
        bool any = false;
        for (const auto* a : c.acts)
            if (a->season == season) any = true;
        if (!any) return;
        for (int i = 0; i < na; ++i)
            if (c.acts[i]->season == season) p.Ain(irow, i) = 1.0;
        p.bin[irow] = c.h->land_ha;
        inst.in_names.push_back("land_" + suffix);
        ++irow;
        for (int i = 0; i < na; ++i)
            if (c.acts[i]->season == season) p.Ain(irow, i) = c.acts[i]->labor_days_ha;
        p.bin[irow] = c.h->labor_days;
        inst.in_names.push_back("labor_" + suffix);
        ++irow;
    };
    add_season_rows(Season::rainy, "rainy");
    add_season_rows(Season::dry, "dry");
    for (int i = 0; i < na; ++i) p.Ain(irow, i) = c.acts[i]->input_costs.cash_items();
    if (c.has_fert) {
        p.Ain(irow, na + nt) = c.sub_price;
        p.Ain(irow, na + nt + 1) = c.unsub_price;
    }
    p.bin[irow] = c.h->cash_fcfa;
    inst.in_names.push_back("cash");
    ++irow;

    p.Ain.conservativeResize(irow, n);
    p.bin.conservativeResize(irow);
    return inst;
}

Eigen::VectorXd warm_start(const Compiled& c, const ProblemInstance& inst) {
    const int n = inst.problem.n();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    const int na = static_cast<int>(c.acts.size());
    double fert_demand = 0.0;
    std::map<std::string, double> q;
    for (int i = 0; i < na; ++i) {
        auto it = c.h->observed_levels.find(c.acts[i]->id);
        double ha = it == c.h->observed_levels.end() ? 0.0 : it->second;
        x[i] = ha;
        fert_demand += ha * c.acts[i]->fertilizer_kg_ha;
        q[c.acts[i]->product] += ha * c.acts[i]->yield_kg_ha;
    }
    for (int v = na; v < n; ++v) {
        const std::string& name = inst.var_names[v];
        if (name.rfind("sell:", 0) == 0) {
            std::string pid = name.substr(5);
            auto cit = inst.consumption.find(pid);
            double cbar = cit == inst.consumption.end() ? 0.0 : cit->second;
            x[v] = std::max(0.0, q[pid] - cbar);
        } else if (name.rfind("buy:", 0) == 0) {
            std::string pid = name.substr(4);
            auto cit = inst.consumption.find(pid);
            double cbar = cit == inst.consumption.end() ? 0.0 : cit->second;
            x[v] = std::max(0.0, cbar - q[pid]);
        } else if (name == "fert_sub") {
            x[v] = std::min(fert_demand, inst.quota_eff);
        } else if (name == "fert_unsub") {
            x[v] = std::max(0.0, fert_demand - inst.quota_eff);
        }
    }
    return x;
}

struct Candidate {
    Solution sol;
    KKTReport kkt;
    double metric = -std::numeric_limits<double>::infinity();
    bool consistent = false;
    int preference = 0;  // autarky 2, seller 1, buyer 0 summed over products
};

// Extracts a Solution from a solved instance; prices self-consumption at the
// clamped balance shadow price, which coincides with the regime price whenever
// the trade variable is interior.
Candidate extract(const Compiled& c, const ProblemInstance& inst, const qp::Result& res) {
    Candidate cand;
    Solution& s = cand.sol;
    cand.kkt.stationarity = res.kkt.stationarity;
    cand.kkt.primal = res.kkt.feasibility;
    cand.kkt.complementarity = res.kkt.complementarity;

    const int na = static_cast<int>(c.acts.size());
    std::map<std::string, double> q;
    for (int i = 0; i < na; ++i) {
        double ha = std::max(0.0, res.x[i]);
        s.levels[c.acts[i]->id] = ha;
        q[c.acts[i]->product] += ha * c.acts[i]->yield_kg_ha;
    }
    for (int v = na; v < inst.problem.n(); ++v) {
        const std::string& name = inst.var_names[v];
        double val = std::max(0.0, res.x[v]);
        if (name.rfind("sell:", 0) == 0)
            s.sales[name.substr(5)] = val < kKgTol ? 0.0 : val;
        else if (name.rfind("buy:", 0) == 0)
            s.purchases[name.substr(4)] = val < kKgTol ? 0.0 : val;
        else if (name == "fert_sub")
            s.fertilizer_subsidized_kg = val;
        else if (name == "fert_unsub")
            s.fertilizer_unsubsidized_kg = val;
    }

    cand.consistent = true;
    double cbar_value = 0.0;
    for (std::size_t r = 0; r < inst.eq_names.size(); ++r) {
        const std::string& name = inst.eq_names[r];
        if (name.rfind("balance:", 0) != 0) continue;
        std::string pid = name.substr(8);
        double shadow = -res.lambda_eq[static_cast<int>(r)];
        double ps = c.prices->sell_price(pid), pb = c.prices->buy_price(pid);
        double band_tol = 1e-6 * std::max(1.0, c.prices->market(pid));
        auto rit = inst.regimes.find(pid);
        Regime assigned = rit == inst.regimes.end() ? Regime::seller : rit->second;
        if (assigned == Regime::autarky && (shadow < ps - band_tol || shadow > pb + band_tol))
            cand.consistent = false;  // household would rather trade this product
        double clamped = std::min(std::max(shadow, ps), pb);
        s.internal_price[pid] = clamped;
        s.duals["balance:" + pid] = clamped;
        auto cit = inst.consumption.find(pid);
        double cbar = cit == inst.consumption.end() ? 0.0 : cit->second;
        double bought = s.purchases.count(pid) ? s.purchases.at(pid) : 0.0;
        s.consumed[pid] = cbar;
        s.self_consumed[pid] = std::max(0.0, cbar - bought);
        cbar_value += cbar * clamped;
        // realized regime label; ties resolve toward autarky, then seller
        double sold = s.sales.count(pid) ? s.sales.at(pid) : 0.0;
        if (sold > kKgTol)
            s.regime[pid] = Regime::seller;
        else if (bought > kKgTol)
            s.regime[pid] = Regime::buyer;
        else
            s.regime[pid] = Regime::autarky;
        cand.preference += s.regime[pid] == Regime::autarky ? 2 : (s.regime[pid] == Regime::seller ? 1 : 0);
    }
    for (std::size_t r = 0; r < inst.in_names.size(); ++r) {
        double mu = res.mu_in[static_cast<int>(r)];
        if (mu > 1e-9) s.duals[inst.in_names[r]] = mu;
    }
    for (int v = na; v < inst.problem.n(); ++v)
        if (inst.var_names[v] == "fert_sub" && res.mu_ub[v] > 1e-9) s.duals["quota"] = res.mu_ub[v];

    s.total_income = -res.objective + inst.objective_constant + cbar_value;
    s.farm_income = s.total_income - c.h->exog_income;
    s.subsidy_outlay = (inst.unsub_price - inst.sub_price) * s.fertilizer_subsidized_kg;
    s.feasible = true;
    cand.metric = s.total_income;
    return cand;
}

std::optional<Candidate> solve_assignment(const Compiled& c, const std::map<std::string, Regime>& regimes,
                                          const std::map<std::string, double>& consumption) {
    ProblemInstance inst = build_instance(c, regimes, consumption);
    qp::Result res = qp::solve(inst.problem, warm_start(c, inst));
    if (!res.ok()) return std::nullopt;
    return extract(c, inst, res);
}

// LES demand at the given income and regime prices.
std::map<std::string, double> les_consumption(const HouseholdCalibration& cal, const Compiled& c,
                                              const std::map<std::string, Regime>& regimes,
                                              const std::map<std::string, double>& autarky_price,
                                              double income) {
    std::map<std::string, double> price;
    for (const auto& [pid, beta] : cal.les_beta) {
        auto rit = regimes.find(pid);
        Regime r = rit == regimes.end() ? Regime::seller : rit->second;
        if (r == Regime::seller)
            price[pid] = c.prices->sell_price(pid);
        else if (r == Regime::buyer)
            price[pid] = c.prices->buy_price(pid);
        else {
            auto ait = autarky_price.find(pid);
            price[pid] = ait != autarky_price.end()
                             ? ait->second
                             : 0.5 * (c.prices->sell_price(pid) + c.prices->buy_price(pid));
        }
    }
    double committed = 0.0;
    for (const auto& [pid, gamma] : cal.les_gamma) committed += gamma * price[pid];
    double supernumerary = std::max(0.0, income - committed);
    std::map<std::string, double> cbar;
    for (const auto& [pid, beta] : cal.les_beta) {
        double gamma = cal.les_gamma.count(pid) ? cal.les_gamma.at(pid) : 0.0;
        double p = price[pid];
        cbar[pid] = gamma + (p > 0 ? beta * supernumerary / p : 0.0);
    }
    return cbar;
}

std::optional<Candidate> solve_assignment_les(const Compiled& c, const HouseholdCalibration& cal,
                                              const std::map<std::string, Regime>& regimes,
                                              const SolveOptions& options) {
    double income = c.h->exog_income;
    for (const auto& [pid, kg] : c.base_production) income += kg * c.prices->sell_price(pid);
    std::map<std::string, double> autarky_price;
    std::optional<Candidate> last;
    for (int it = 0; it < options.les_max_iterations; ++it) {
        auto cbar = les_consumption(cal, c, regimes, autarky_price, income);
        auto cand = solve_assignment(c, regimes, cbar);
        if (!cand) return std::nullopt;
        double z = cand->sol.total_income;
        for (const auto& [pid, p] : cand->sol.internal_price)
            if (cand->sol.regime.count(pid) && cand->sol.regime.at(pid) == Regime::autarky)
                autarky_price[pid] = p;
        bool done = std::abs(z - income) <= 1e-9 * (1.0 + std::abs(z));
        income = z;
        last = std::move(cand);
        if (done) break;
    }
    return last;
}

std::vector<std::map<std::string, Regime>> enumerate_assignments(
    const std::vector<std::string>& products, const std::map<std::string, Regime>& forced) {
    std::vector<std::map<std::string, Regime>> out;
    const Regime all[3] = {Regime::autarky, Regime::seller, Regime::buyer};
    std::vector<int> idx(products.size(), 0);
    while (true) {
        std::map<std::string, Regime> a = forced;
        for (std::size_t i = 0; i < products.size(); ++i) a[products[i]] = all[idx[i]];
        out.push_back(a);
        std::size_t k = 0;
        while (k < idx.size() && ++idx[k] == 3) idx[k++] = 0;
        if (k == idx.size()) break;
    }
    return out;
}

}  // namespace

ProblemInstance build_problem(const ModelInstance& model, const Household& household,
                              const HouseholdCalibration& calibration, const PriceSystem& prices,
                              const SubsidyPolicy& policy,
                              const std::map<std::string, Regime>& regimes,
                              const std::map<std::string, double>& consumption) {
    Compiled c = compile(model, household, calibration, prices, policy);
    for (const auto& [pid, r] : regimes) {
        const Product* p = model.find_product(pid);
        if (!p) throw std::runtime_error("regime assigned to unknown product '" + pid + "'");
        if (!p->tradable && r != Regime::autarky)
            throw std::runtime_error("non-tradable product '" + pid + "' must be autarkic");
    }
    return build_instance(c, regimes, consumption);
}

std::pair<Solution, KKTReport> solve_qp(const ModelInstance& model, const Household& household,
                                        const ProblemInstance& instance) {
    SubsidyPolicy no_policy;  // tranche prices already baked into the instance
    Compiled c;
    c.model = &model;
    c.h = &household;
    c.prices = &model.prices;
    c.policy = &no_policy;
    // rebuild the activity view used for extraction
    for (const auto& name : instance.var_names) {
        if (name.rfind("x:", 0) == 0) {
            const Activity* a = model.find_activity(name.substr(2));
            if (!a) throw std::runtime_error("instance references unknown activity " + name);
            c.acts.push_back(a);
            if (a->fertilizer_kg_ha > 0) c.has_fert = true;
            c.producers[a->product].push_back(static_cast<int>(c.acts.size()) - 1);
        }
    }
    c.sub_price = instance.sub_price;
    c.unsub_price = instance.unsub_price;
    c.quota_eff = instance.quota_eff;
    qp::Result res = qp::solve(instance.problem, warm_start(c, instance));
    if (res.status == qp::Status::infeasible) {
        Solution s;
        s.feasible = false;
        s.diagnostic = "infeasible instance";
        return {s, {}};
    }
    if (res.status == qp::Status::unbounded) throw std::runtime_error("unbounded household problem");
    if (res.status == qp::Status::iteration_limit)
        throw std::runtime_error("household solve hit iteration limit");
    Candidate cand = extract(c, instance, res);
    return {cand.sol, cand.kkt};
}

Solution solve_household(const ModelInstance& model, const Household& household,
                         const HouseholdCalibration& calibration, const PriceSystem& prices,
                         const SubsidyPolicy& policy, const SolveOptions& options) {
    Compiled c = compile(model, household, calibration, prices, policy);

    if (c.acts.empty() && household.observed_consumption.empty()) {
        Solution s;
        s.total_income = household.exog_income;
        s.farm_income = 0.0;
        return s;
    }

    std::map<std::string, double> cbar =
        model.consumption_enabled ? std::map<std::string, double>{} : supply_consumption(c);

    // regime classification per product
    std::map<std::string, Regime> forced;
    std::vector<std::string> enumerable;
    std::set<std::string> relevant;
    for (const auto& [pid, _] : c.producers) relevant.insert(pid);
    if (model.consumption_enabled)
        for (const auto& [pid, beta] : calibration.les_beta) {
            if (beta > 0) relevant.insert(pid);
        }
    else
        for (const auto& [pid, kg] : cbar)
            if (kg > 0) relevant.insert(pid);

    for (const auto& pid : relevant) {
        const Product* p = model.find_product(pid);
        bool tradable = p == nullptr || p->tradable;
        bool produced = c.producers.count(pid) > 0;
        bool consumed = model.consumption_enabled
                            ? calibration.les_beta.count(pid) > 0 || calibration.les_gamma.count(pid) > 0
                            : cbar.count(pid) > 0 && cbar.at(pid) > 0;
        if (!tradable)
            forced[pid] = Regime::autarky;
        else if (produced && consumed)
            enumerable.push_back(pid);
        else if (produced)
            forced[pid] = Regime::seller;
        else
            forced[pid] = Regime::buyer;
    }

    auto eval = [&](const std::map<std::string, Regime>& regimes) -> std::optional<Candidate> {
        if (model.consumption_enabled) return solve_assignment_les(c, calibration, regimes, options);
        return solve_assignment(c, regimes, cbar);
    };

    auto better = [](const Candidate& a, const Candidate& b) {
        double tol = 1e-9 * (1.0 + std::abs(a.metric) + std::abs(b.metric));
        if (a.metric > b.metric + tol) return true;
        if (b.metric > a.metric + tol) return false;
        return a.preference > b.preference;
    };

    std::optional<Candidate> best;
    if (static_cast<int>(enumerable.size()) <= options.max_regime_products) {
        for (const auto& regimes : enumerate_assignments(enumerable, forced)) {
            auto cand = eval(regimes);
            if (cand && cand->consistent && (!best || better(*cand, *best))) best = std::move(cand);
        }
    } else {
        // local single-product flips from the base-year position
        std::map<std::string, Regime> current = forced;
        for (const auto& pid : enumerable) {
            double q0 = c.base_production.count(pid) ? c.base_production.at(pid) : 0.0;
            double cb = cbar.count(pid) ? cbar.at(pid) : 0.0;
            current[pid] = q0 > cb + kKgTol ? Regime::seller
                                            : (q0 < cb - kKgTol ? Regime::buyer : Regime::autarky);
        }
        best = eval(current);
        bool improved = true;
        int guard = 0;
        while (improved && guard++ < 3 * static_cast<int>(enumerable.size()) + 3) {
            improved = false;
            for (const auto& pid : enumerable) {
                for (Regime r : {Regime::autarky, Regime::seller, Regime::buyer}) {
                    if (current[pid] == r) continue;
                    auto trial = current;
                    trial[pid] = r;
                    auto cand = eval(trial);
                    if (cand && cand->consistent && (!best || better(*cand, *best))) {
                        best = std::move(cand);
                        current = trial;
                        improved = true;
                    }
                }
            }
        }
    }

    if (!best) {
        Solution s;
        s.feasible = false;
        s.diagnostic = "all regime assignments infeasible";
        return s;
    }
    Solution sol = best->sol;
    BalanceReport report = verify_solution(model, prices, household, sol);
    double kkt_max = std::max(best->kkt.stationarity,
                              std::max(best->kkt.primal, best->kkt.complementarity));
    if (report.max() > options.verify_tol || kkt_max > options.verify_tol) {
        sol.diagnostic = "verification residual " + std::to_string(std::max(report.max(), kkt_max));
    }
    return sol;
}

std::map<std::string, Solution> solve_all(const ModelInstance& model,
                                          const std::map<std::string, HouseholdCalibration>& calibrations,
                                          const PriceSystem& prices, const SubsidyPolicy& policy,
                                          int jobs, const SolveOptions& options) {
    std::vector<const Household*> hs;
    for (const auto& h : model.households) hs.push_back(&h);
    std::sort(hs.begin(), hs.end(), [](const Household* a, const Household* b) { return a->id < b->id; });

    std::vector<Solution> out(hs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= hs.size()) break;
            const Household* h = hs[i];
            try {
                auto cit = calibrations.find(h->id);
                if (cit == calibrations.end()) throw std::runtime_error("no calibration for household");
                out[i] = solve_household(model, *h, cit->second, prices, policy, options);
            } catch (const std::exception& e) {
                Solution s;
                s.feasible = false;
                s.diagnostic = e.what();
                out[i] = s;
            }
        }
    };
    int workers = std::max(1, std::min<int>(jobs, static_cast<int>(hs.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    std::map<std::string, Solution> result;
    for (std::size_t i = 0; i < hs.size(); ++i) result[hs[i]->id] = std::move(out[i]);
    return result;
}

BalanceReport verify_solution(const ModelInstance& model, const Household& household,
                              const Solution& solution) {
    return verify_solution(model, model.prices, household, solution);
}

BalanceReport verify_solution(const ModelInstance& model, const PriceSystem& prices,
                              const Household& household, const Solution& solution) {
    BalanceReport r;
    std::map<std::string, double> q;
    for (const auto& [aid, ha] : solution.levels) {
        const Activity* a = model.find_activity(aid);
        if (a) q[a->product] += ha * a->yield_kg_ha;
    }
    std::set<std::string> pids;
    for (const auto& [pid, _] : q) pids.insert(pid);
    for (const auto& [pid, _] : solution.consumed) pids.insert(pid);
    for (const auto& [pid, _] : solution.sales) pids.insert(pid);
    for (const auto& [pid, _] : solution.purchases) pids.insert(pid);
    for (const auto& pid : pids) {
        auto get = [&](const std::map<std::string, double>& m) {
            auto it = m.find(pid);
            return it == m.end() ? 0.0 : it->second;
        };
        double qj = q.count(pid) ? q.at(pid) : 0.0;
        double s = get(solution.sales), b = get(solution.purchases);
        double cj = get(solution.consumed), cs = get(solution.self_consumed);
        double scale = 1.0 + qj + s + b + cj;
        r.complementarity = std::max(r.complementarity, s * b / (scale * scale));
        r.balance_e7 = std::max(r.balance_e7, std::abs(qj + b - s - cj) / scale);
        r.balance_e8 = std::max(r.balance_e8, std::abs(cj - cs - b) / scale);
        auto ip = solution.internal_price.find(pid);
        if (ip != solution.internal_price.end()) {
            double ps = prices.sell_price(pid), pb = prices.buy_price(pid);
            double pscale = std::max(1.0, prices.market(pid));
            r.price_band = std::max(r.price_band,
                                    std::max(0.0, std::max(ps - ip->second, ip->second - pb)) / pscale);
        }
    }
    return r;
}

}  // namespace fhm
