#include "fhm/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

#include "fhm/typology.hpp"

namespace fhm {

namespace {

constexpr double kBoundEps = 1e-6;  // calibration bound x <= x0 * (1 + eps)

double cash_coeff(const Activity& a, double marginal_fert_price) {
    return a.input_costs.cash_items() + marginal_fert_price * a.fertilizer_kg_ha;
}

struct BaseContext {
    std::map<std::string, double> production;   // product -> q at observed levels
    std::map<std::string, double> consumption;  // product -> committed kg
    double fert_demand = 0.0;
    double marginal_fert_price = 0.0;
    bool eligible = false;
};

BaseContext base_context(const ModelInstance& model, const Household& household,
                         const PriceSystem& prices, const SubsidyPolicy& policy) {
    BaseContext ctx;
    for (const auto& [aid, ha] : household.observed_levels) {
        const Activity* a = model.find_activity(aid);
        if (!a || ha <= 0) continue;
        ctx.production[a->product] += ha * a->yield_kg_ha;
        ctx.fert_demand += ha * a->fertilizer_kg_ha;
    }
    for (const auto& [pid, kg] : household.observed_consumption)
        if (kg > 0) ctx.consumption[pid] = kg;
    ctx.eligible = policy.eligible(household);
    bool subsidized_margin = ctx.eligible && policy.rate > 0 &&
                             ctx.fert_demand < policy.quota_kg - 1e-9;
    ctx.marginal_fert_price =
        subsidized_margin ? (1.0 - policy.rate) * prices.fertilizer_price : prices.fertilizer_price;
    return ctx;
}

// Valuation price of the activity's product at the observed position: sellers
// (and autarkic households, tie toward the sell side) value output at the sell
// price, deficit households at the buy price.
double regime_price(const BaseContext& ctx, const PriceSystem& prices, const std::string& product) {
    double q0 = ctx.production.count(product) ? ctx.production.at(product) : 0.0;
    double cb = ctx.consumption.count(product) ? ctx.consumption.at(product) : 0.0;
    return q0 >= cb ? prices.sell_price(product) : prices.buy_price(product);
}

}  // namespace

double gross_margin(const Activity& activity, const PriceSystem& prices, const SubsidyPolicy& policy) {
    double revenue = activity.yield_kg_ha * prices.market(activity.product);
    if (revenue < 0) throw std::invalid_argument("gross_margin: negative revenue for " + activity.id);
    double subsidy = 0.0;
    if (activity.subsidy_eligible_fertilizer && policy.rate > 0 && policy.quota_kg > 0)
        subsidy = policy.rate * prices.fertilizer_price * activity.fertilizer_kg_ha;
    if (subsidy < 0) throw std::invalid_argument("gross_margin: negative subsidy for " + activity.id);
    return revenue + subsidy - activity.input_costs.total();
}

double marginal_gross_margin(const ModelInstance& model, const Household& household,
                             const Activity& activity, const PriceSystem& prices,
                             const SubsidyPolicy& policy) {
    BaseContext ctx = base_context(model, household, prices, policy);
    double p = regime_price(ctx, prices, activity.product);
    double fert_price = activity.subsidy_eligible_fertilizer ? ctx.marginal_fert_price
                                                             : prices.fertilizer_price;
    const auto& c = activity.input_costs;
    double other = c.seed + c.phyto + c.equipment + c.hired_labor + c.other;
    return p * activity.yield_kg_ha - other - fert_price * activity.fertilizer_kg_ha;
}

std::map<std::string, double> stage1_duals(const ModelInstance& model, const Household& household,
                                           const PriceSystem& prices, const SubsidyPolicy& policy) {
    std::vector<const Activity*> acts;
    std::vector<double> x0;
    for (const auto& [aid, ha] : household.observed_levels) {
        if (ha <= 0) continue;
        const Activity* a = model.find_activity(aid);
        if (!a) throw std::runtime_error("observed level references unknown activity '" + aid + "'");
        acts.push_back(a);
        x0.push_back(ha);
    }
    std::map<std::string, double> duals = {{"land_rainy", 0.0}, {"land_dry", 0.0},
                                           {"labor_rainy", 0.0}, {"labor_dry", 0.0},
                                           {"cash", 0.0}};
    if (acts.empty()) return duals;

    BaseContext ctx = base_context(model, household, prices, policy);
    const int n = static_cast<int>(acts.size());
    qp::Problem p;
    p.resize(n, 0, 5);
    std::vector<std::string> rows = {"land_rainy", "land_dry", "labor_rainy", "labor_dry", "cash"};
    for (int i = 0; i < n; ++i) {
        p.g[i] = -marginal_gross_margin(model, household, *acts[i], prices, policy);
        p.lb[i] = 0.0;
        p.ub[i] = x0[static_cast<std::size_t>(i)] * (1.0 + kBoundEps);
        bool rainy = acts[i]->season == Season::rainy;
        p.Ain(rainy ? 0 : 1, i) = 1.0;
        p.Ain(rainy ? 2 : 3, i) = acts[i]->labor_days_ha;
        p.Ain(4, i) = cash_coeff(*acts[i], ctx.marginal_fert_price);
    }
    p.bin << household.land_ha, household.land_ha, household.labor_days, household.labor_days,
        household.cash_fcfa;

    Eigen::VectorXd start = Eigen::Map<Eigen::VectorXd>(x0.data(), n);
    qp::Result res = qp::solve(p, start);
    if (res.status == qp::Status::infeasible)
        throw std::runtime_error("household " + household.id + ": observed base year infeasible");
    if (!res.ok()) throw std::runtime_error("household " + household.id + ": stage-1 LP failed");
    for (int r = 0; r < 5; ++r) duals[rows[static_cast<std::size_t>(r)]] = res.mu_in[r];
    return duals;
}

namespace {

double resource_charge(const Activity& a, const std::map<std::string, double>& duals,
                       double marginal_fert_price) {
    bool rainy = a.season == Season::rainy;
    auto get = [&](const std::string& k) {
        auto it = duals.find(k);
        return it == duals.end() ? 0.0 : it->second;
    };
    return get(rainy ? "land_rainy" : "land_dry") +
           get(rainy ? "labor_rainy" : "labor_dry") * a.labor_days_ha +
           get("cash") * cash_coeff(a, marginal_fert_price);
}

struct FdMeasurement {
    std::map<std::string, double> elasticity;  // activity -> simulated elasticity
};

FdMeasurement measure_elasticities(const ModelInstance& model, const Household& household,
                                   const HouseholdCalibration& behavioral, const PriceSystem& prices,
                                   const SubsidyPolicy& policy, double step,
                                   const std::map<std::string, double>& observed) {
    FdMeasurement m;
    std::set<std::string> products;
    for (const auto& [aid, _] : observed) {
        const Activity* a = model.find_activity(aid);
        if (a) products.insert(a->product);
    }
    SolveOptions opts;
    opts.verify_tol = 1e-6;  // tolerate loose verification during probing
    for (const auto& pid : products) {
        PriceSystem up = prices, down = prices;
        up.market_price[pid] *= (1.0 + step);
        down.market_price[pid] *= (1.0 - step);
        Solution shi = solve_household(model, household, behavioral, up, policy, opts);
        Solution slo = solve_household(model, household, behavioral, down, policy, opts);
        if (!shi.feasible || !slo.feasible) continue;
        for (const auto& [aid, x0] : observed) {
            const Activity* a = model.find_activity(aid);
            if (!a || a->product != pid || x0 <= 0) continue;
            double xh = shi.levels.count(aid) ? shi.levels.at(aid) : 0.0;
            double xl = slo.levels.count(aid) ? slo.levels.at(aid) : 0.0;
            m.elasticity[aid] = (xh - xl) / (2.0 * step * x0);
        }
    }
    return m;
}

}  // namespace

CalibrationResult calibrate_pmp(const ModelInstance& model, const Household& household,
                                const PriceSystem& prices, const SubsidyPolicy& policy,
                                const ElasticityTargets& targets, const CalibrationOptions& options) {
    CalibrationResult result;
    std::map<std::string, double> observed;
    for (const auto& [aid, ha] : household.observed_levels)
        if (ha > 0) observed[aid] = ha;
    if (observed.empty()) {
        result.diagnostic = "no observed activities";
        return result;
    }

    BaseContext ctx = base_context(model, household, prices, policy);
    result.duals = stage1_duals(model, household, prices, policy);

    std::map<std::string, double> margin, qdiag;
    for (const auto& [aid, x0] : observed) {
        const Activity* a = model.find_activity(aid);
        if (!a) throw std::runtime_error("unknown activity '" + aid + "'");
        margin[aid] = marginal_gross_margin(model, household, *a, prices, policy);
        double revenue = regime_price(ctx, prices, a->product) * a->yield_kg_ha;
        double eps = targets.get(a->product);
        // myopic seed: own-price elasticity of the one-variable QP
        qdiag[aid] = revenue > 0 ? revenue / (eps * x0) : 1.0;
    }

    auto derive_d = [&]() {
        std::map<std::string, double> d;
        for (const auto& [aid, x0] : observed) {
            const Activity* a = model.find_activity(aid);
            d[aid] = margin[aid] - qdiag[aid] * x0 -
                     resource_charge(*a, result.duals, ctx.marginal_fert_price);
        }
        return d;
    };

    auto make_behavioral = [&]() {
        HouseholdCalibration b;
        for (const auto& [aid, _] : observed) b.activities.push_back(aid);
        b.d = derive_d();
        b.q_diag = qdiag;
        b.duals = result.duals;
        return b;
    };

    // non-myopic fixed point: measure full-model elasticities, rescale Q
    double best_err = std::numeric_limits<double>::infinity();
    std::map<std::string, double> best_q = qdiag;
    FdMeasurement meas;
    int iter = 0;
    for (; iter < options.max_fixed_point_iterations; ++iter) {
        HouseholdCalibration b = make_behavioral();
        meas = measure_elasticities(model, household, b, prices, policy, options.fd_step, observed);
        double max_err = 0.0;
        bool any = false;
        for (const auto& [aid, sim] : meas.elasticity) {
            if (sim <= 1e-3) continue;  // corner: response blocked by constraints
            const Activity* a = model.find_activity(aid);
            double tgt = targets.get(a->product);
            max_err = std::max(max_err, std::abs(sim / tgt - 1.0));
            any = true;
        }
        if (max_err < best_err) {
            best_err = max_err;
            best_q = qdiag;
        }
        if (!any || max_err <= options.elasticity_tol) break;
        for (const auto& [aid, sim] : meas.elasticity) {
            if (sim <= 1e-3) continue;
            const Activity* a = model.find_activity(aid);
            double ratio = sim / targets.get(a->product);
            qdiag[aid] *= std::min(4.0, std::max(0.25, ratio));
        }
    }
    if (iter >= options.max_fixed_point_iterations) {
        qdiag = best_q;
        result.converged = false;
        result.diagnostic = "elasticity fixed point not converged; best max error " +
                            std::to_string(best_err);
    }
    result.iterations = iter + 1;

    result.behavioral = make_behavioral();
    result.margins = margin;
    result.reported_d = result.behavioral.d;

    // final elasticity report
    meas = measure_elasticities(model, household, result.behavioral, prices, policy, options.fd_step,
                                observed);
    for (const auto& [aid, x0] : observed) {
        ElasticityCheck check;
        check.activity = aid;
        const Activity* a = model.find_activity(aid);
        check.target = targets.get(a->product);
        auto it = meas.elasticity.find(aid);
        check.simulated = it == meas.elasticity.end() ? 0.0 : it->second;
        check.corner = check.simulated <= 1e-3;
        check.within = !check.corner && std::abs(check.simulated / check.target - 1.0) <= options.elasticity_tol;
        result.elasticity.push_back(check);
    }

    // exact-reproduction residuals
    Solution base = solve_household(model, household, result.behavioral, prices, policy);
    for (const auto& [aid, x0] : observed) {
        double x = base.levels.count(aid) ? base.levels.at(aid) : 0.0;
        result.residuals[aid] = std::abs(x - x0) / std::max(x0, 1e-12);
    }
    return result;
}

GroupStats compute_group_stats(const ModelInstance& model,
                               const std::map<std::string, CalibrationResult>& calibrated,
                               const std::map<std::string, std::string>& group_of_household) {
    GroupStats stats;
    for (const auto& [hid, result] : calibrated) {
        auto git = group_of_household.find(hid);
        if (git == group_of_household.end()) continue;
        auto& group = stats.by_group[git->second];
        for (const auto& [aid, m] : result.margins) {
            auto& e = group[aid];
            double q = result.behavioral.q_diag.count(aid) ? result.behavioral.q_diag.at(aid) : 0.0;
            e.mean_margin += m;
            e.mean_q += q;
            e.count += 1;
        }
    }
    for (auto& [g, acts] : stats.by_group)
        for (auto& [aid, e] : acts)
            if (e.count > 0) {
                e.mean_margin /= e.count;
                e.mean_q /= e.count;
            }
    return stats;
}

void attach_alternatives(const ModelInstance& model, const Household& household,
                         const PriceSystem& prices, const SubsidyPolicy& policy,
                         const GroupStats& stats, const std::string& group,
                         CalibrationResult& result) {
    auto git = stats.by_group.find(group);
    if (git == stats.by_group.end() || git->second.empty())
        throw std::invalid_argument("attach_alternatives: empty group '" + group + "'");
    std::set<std::string> have(result.behavioral.activities.begin(), result.behavioral.activities.end());
    BaseContext ctx = base_context(model, household, prices, policy);
    for (const auto& [aid, entry] : git->second) {
        if (have.count(aid) || entry.count == 0) continue;
        const Activity* a = model.find_activity(aid);
        if (!a) continue;
        double charge = resource_charge(*a, result.duals, ctx.marginal_fert_price);
        double own = marginal_gross_margin(model, household, *a, prices, policy);
        // spec-form d keeps the group-margin anchor; the QP-effective d is
        // clamped so the alternative's first-order condition stays <= 0 at zero
        double d_spec = entry.mean_margin - charge;
        double d_qp = std::max(entry.mean_margin, own) - charge;
        result.behavioral.activities.push_back(aid);
        result.behavioral.d[aid] = d_qp;
        result.behavioral.q_diag[aid] = std::max(entry.mean_q, 1e-6);
        result.reported_d[aid] = d_spec;
        result.margins[aid] = entry.mean_margin;
    }
    std::sort(result.behavioral.activities.begin(), result.behavioral.activities.end());
}

std::pair<std::map<std::string, double>, std::map<std::string, double>> estimate_les(
    const Household& household, const LesPriors& priors, const PriceSystem& prices, double income) {
    const auto& cobs = household.observed_consumption;
    if (cobs.empty()) throw std::invalid_argument("estimate_les: no observed consumption");
    std::vector<std::string> goods;
    for (const auto& [pid, kg] : cobs) goods.push_back(pid);
    const int n = static_cast<int>(goods.size());

    std::map<std::string, double> c0 = cobs, p;
    double budget = 0.0;
    for (const auto& g : goods) {
        p[g] = prices.market(g);
        budget += c0[g] * p[g];
    }
    (void)income;  // adding-up ties the LES budget to observed expenditure on the modeled goods

    std::map<std::string, double> beta0 = priors.beta, gamma0 = priors.gamma;
    for (const auto& g : goods) {
        if (!beta0.count(g)) beta0[g] = 1.0 / n;
        if (!gamma0.count(g)) gamma0[g] = 0.0;
        if (gamma0[g] > c0[g] + 1e-12)
            throw std::invalid_argument("estimate_les: committed quantity above observed consumption for " + g);
        gamma0[g] = std::min(gamma0[g], c0[g]);
    }

    auto beta_of = [&](const Eigen::VectorXd& gamma) {
        Eigen::VectorXd beta(n);
        double denom = budget;
        for (int j = 0; j < n; ++j) denom -= gamma[j] * p[goods[j]];
        if (denom <= 1e-12 * std::max(1.0, budget)) {
            double s = 0;
            for (int j = 0; j < n; ++j) s += beta0[goods[j]];
            for (int j = 0; j < n; ++j) beta[j] = beta0[goods[j]] / std::max(s, 1e-12);
            return beta;
        }
        for (int j = 0; j < n; ++j) beta[j] = (c0[goods[j]] - gamma[j]) * p[goods[j]] / denom;
        return beta;
    };

    Eigen::VectorXd sb(n), sg(n), lo = Eigen::VectorXd::Zero(n), hi(n), g0v(n);
    for (int j = 0; j < n; ++j) {
        sb[j] = std::max(0.2 * beta0[goods[j]], 1e-3);
        sg[j] = std::max(0.2 * gamma0[goods[j]], 1e-3 * std::max(c0[goods[j]], 1.0));
        hi[j] = c0[goods[j]];
        g0v[j] = gamma0[goods[j]];
    }
    auto objective = [&](const Eigen::VectorXd& gamma) {
        Eigen::VectorXd beta = beta_of(gamma);
        double f = 0;
        for (int j = 0; j < n; ++j) {
            double rb = (beta[j] - beta0[goods[j]]) / sb[j];
            double rg = (gamma[j] - g0v[j]) / sg[j];
            f += rb * rb + rg * rg;
        }
        return f;
    };

    Eigen::VectorXd gamma = g0v.cwiseMax(lo).cwiseMin(hi);
    double f = objective(gamma);
    for (int it = 0; it < 400 && f > 1e-18; ++it) {
        Eigen::VectorXd grad(n);
        for (int j = 0; j < n; ++j) {
            double h = 1e-7 * std::max(1.0, hi[j]);
            Eigen::VectorXd gp = gamma, gm = gamma;
            gp[j] = std::min(gamma[j] + h, hi[j]);
            gm[j] = std::max(gamma[j] - h, 0.0);
            double denom = gp[j] - gm[j];
            grad[j] = denom > 0 ? (objective(gp) - objective(gm)) / denom : 0.0;
        }
        double step = 0.1 * (hi.maxCoeff() + 1.0) / std::max(grad.norm(), 1e-12);
        bool improved = false;
        for (int ls = 0; ls < 30; ++ls) {
            Eigen::VectorXd trial = (gamma - step * grad).cwiseMax(lo).cwiseMin(hi);
            double ft = objective(trial);
            if (ft < f - 1e-15) {
                gamma = trial;
                f = ft;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
    }

    Eigen::VectorXd beta = beta_of(gamma);
    // exact adding-up, then clip round-off
    double s = beta.sum();
    if (std::abs(s) > 1e-12) beta /= s;
    std::map<std::string, double> beta_out, gamma_out;
    for (int j = 0; j < n; ++j) {
        beta_out[goods[j]] = std::max(0.0, beta[j]);
        gamma_out[goods[j]] = std::min(std::max(gamma[j], 0.0), hi[j]);
    }
    double s2 = 0;
    for (auto& [g, b] : beta_out) s2 += b;
    if (s2 > 0)
        for (auto& [g, b] : beta_out) b /= s2;
    return {beta_out, gamma_out};
}

std::map<std::string, HouseholdCalibration> CalibrationSet::behavioral() const {
    std::map<std::string, HouseholdCalibration> out;
    for (const auto& [hid, res] : by_household) out[hid] = res.behavioral;
    return out;
}

CalibrationSet calibrate_all(const ModelInstance& model, const ElasticityTargets& targets, int jobs,
                             const CalibrationOptions& options) {
    CalibrationSet set;
    std::vector<const Household*> hs;
    for (const auto& h : model.households) hs.push_back(&h);
    std::sort(hs.begin(), hs.end(), [](const Household* a, const Household* b) { return a->id < b->id; });

    for (const Household* h : hs) {
        FarmClass fc = classify_farm(*h, model);
        set.group_of_household[h->id] = h->region + "|" + to_string(fc.specialization);
    }

    std::vector<CalibrationResult> results(hs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= hs.size()) break;
            try {
                results[i] = calibrate_pmp(model, *hs[i], model.prices, model.base_policy, targets, options);
            } catch (const std::exception& e) {
                results[i] = CalibrationResult{};
                results[i].converged = false;
                results[i].diagnostic = e.what();
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
    for (std::size_t i = 0; i < hs.size(); ++i) set.by_household[hs[i]->id] = std::move(results[i]);

    GroupStats stats = compute_group_stats(model, set.by_household, set.group_of_household);
    for (const Household* h : hs) {
        auto& result = set.by_household[h->id];
        if (result.behavioral.activities.empty()) continue;
        const std::string& group = set.group_of_household[h->id];
        if (stats.by_group.count(group))
            attach_alternatives(model, *h, model.prices, model.base_policy, stats, group, result);
    }
    return set;
}

}  // namespace fhm
