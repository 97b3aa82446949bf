#include "fhm/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <stdexcept>

#include "fhm/csv.hpp"
#include "fhm/model_io.hpp"

namespace fhm {

namespace fs = std::filesystem;
using nlohmann::json;
using csv::format_double;

void write_calibration(const std::string& dir, const ModelInstance& model, const CalibrationSet& set) {
    fs::create_directories(dir);
    csv::Table cal;
    cal.header = {"household", "activity", "d", "q", "observed_ha", "residual", "margin", "d_reported"};
    csv::Table duals;
    duals.header = {"household", "constraint", "value"};
    csv::Table elas;
    elas.header = {"household", "activity", "target", "simulated", "corner", "within"};
    csv::Table meta;
    meta.header = {"household", "group", "converged", "iterations", "diagnostic"};
    for (const auto& [hid, res] : set.by_household) {
        const Household* h = model.find_household(hid);
        for (const auto& aid : res.behavioral.activities) {
            double x0 = h && h->observed_levels.count(aid) ? h->observed_levels.at(aid) : 0.0;
            double resid = res.residuals.count(aid) ? res.residuals.at(aid) : 0.0;
            double margin = res.margins.count(aid) ? res.margins.at(aid) : 0.0;
            double drep = res.reported_d.count(aid) ? res.reported_d.at(aid) : 0.0;
            cal.rows.push_back({hid, aid, format_double(res.behavioral.d.at(aid)),
                                format_double(res.behavioral.q_diag.at(aid)), format_double(x0),
                                format_double(resid), format_double(margin), format_double(drep)});
        }
        for (const auto& [cname, value] : res.duals)
            duals.rows.push_back({hid, cname, format_double(value)});
        for (const auto& e : res.elasticity)
            elas.rows.push_back({hid, e.activity, format_double(e.target), format_double(e.simulated),
                                 e.corner ? "1" : "0", e.within ? "1" : "0"});
        auto git = set.group_of_household.find(hid);
        meta.rows.push_back({hid, git == set.group_of_household.end() ? "" : git->second,
                             res.converged ? "1" : "0", std::to_string(res.iterations), res.diagnostic});
    }
    csv::write_file(dir + "/calibration.csv", cal);
    csv::write_file(dir + "/duals.csv", duals);
    csv::write_file(dir + "/elasticity_check.csv", elas);
    csv::write_file(dir + "/calibration_meta.csv", meta);
}

CalibrationSet read_calibration(const std::string& dir) {
    CalibrationSet set;
    csv::Table cal = csv::read_file(dir + "/calibration.csv");
    int c_h = cal.require_column("household"), c_a = cal.require_column("activity");
    int c_d = cal.require_column("d"), c_q = cal.require_column("q");
    int c_x = cal.require_column("observed_ha"), c_r = cal.column("residual");
    int c_m = cal.column("margin"), c_dr = cal.column("d_reported");
    for (std::size_t r = 0; r < cal.rows.size(); ++r) {
        auto& res = set.by_household[cal.cell(r, c_h)];
        std::string aid = cal.cell(r, c_a);
        res.behavioral.activities.push_back(aid);
        res.behavioral.d[aid] = csv::parse_double(cal.cell(r, c_d)).value_or(0.0);
        res.behavioral.q_diag[aid] = csv::parse_double(cal.cell(r, c_q)).value_or(0.0);
        if (c_r >= 0) res.residuals[aid] = csv::parse_double(cal.cell(r, c_r)).value_or(0.0);
        if (c_m >= 0) res.margins[aid] = csv::parse_double(cal.cell(r, c_m)).value_or(0.0);
        if (c_dr >= 0) res.reported_d[aid] = csv::parse_double(cal.cell(r, c_dr)).value_or(0.0);
        (void)c_x;
    }
    csv::Table duals = csv::read_file(dir + "/duals.csv");
    int d_h = duals.require_column("household"), d_c = duals.require_column("constraint");
    int d_v = duals.require_column("value");
    for (std::size_t r = 0; r < duals.rows.size(); ++r) {
        auto& res = set.by_household[duals.cell(r, d_h)];
        double v = csv::parse_double(duals.cell(r, d_v)).value_or(0.0);
        res.duals[duals.cell(r, d_c)] = v;
        res.behavioral.duals[duals.cell(r, d_c)] = v;
    }
    if (fs::exists(dir + "/calibration_meta.csv")) {
        csv::Table meta = csv::read_file(dir + "/calibration_meta.csv");
        int m_h = meta.require_column("household"), m_g = meta.column("group");
        int m_c = meta.column("converged"), m_d = meta.column("diagnostic");
        for (std::size_t r = 0; r < meta.rows.size(); ++r) {
            auto& res = set.by_household[meta.cell(r, m_h)];
            if (m_g >= 0) set.group_of_household[meta.cell(r, m_h)] = meta.cell(r, m_g);
            if (m_c >= 0) res.converged = meta.cell(r, m_c) == "1";
            if (m_d >= 0) res.diagnostic = meta.cell(r, m_d);
        }
    }
    return set;
}

void write_solutions(const std::string& dir, const ModelInstance& model, const ScenarioResult& result) {
    fs::create_directories(dir);
    csv::Table t;
    t.header = {"kind", "household", "activity", "ha", "product", "sold_kg", "bought_kg",
                "consumed_kg", "self_consumed_kg", "internal_price", "regime", "fert_sub_kg",
                "fert_unsub_kg", "farm_income", "total_income", "subsidy_outlay", "binding",
                "diagnostic"};
    auto blank = [&]() { return std::vector<std::string>(t.header.size(), ""); };
    for (const auto& [hid, s] : result.solutions) {
        for (const auto& [aid, ha] : s.levels) {
            auto row = blank();
            row[0] = "activity";
            row[1] = hid;
            row[2] = aid;
            row[3] = format_double(ha);
            t.rows.push_back(row);
        }
        std::set<std::string> pids;
        for (const auto& [pid, _] : s.internal_price) pids.insert(pid);
        for (const auto& [pid, _] : s.sales) pids.insert(pid);
        for (const auto& [pid, _] : s.purchases) pids.insert(pid);
        for (const auto& pid : pids) {
            auto get = [&](const std::map<std::string, double>& m) {
                auto it = m.find(pid);
                return it == m.end() ? 0.0 : it->second;
            };
            auto row = blank();
            row[0] = "product";
            row[1] = hid;
            row[4] = pid;
            row[5] = format_double(get(s.sales));
            row[6] = format_double(get(s.purchases));
            row[7] = format_double(get(s.consumed));
            row[8] = format_double(get(s.self_consumed));
            row[9] = format_double(get(s.internal_price));
            row[10] = s.regime.count(pid) ? to_string(s.regime.at(pid)) : "";
            t.rows.push_back(row);
        }
        auto row = blank();
        row[0] = "household";
        row[1] = hid;
        row[11] = format_double(s.fertilizer_subsidized_kg);
        row[12] = format_double(s.fertilizer_unsubsidized_kg);
        row[13] = format_double(s.farm_income);
        row[14] = format_double(s.total_income);
        row[15] = format_double(s.subsidy_outlay);
        std::string binding;
        for (const auto& [cname, v] : s.duals) {
            if (!binding.empty()) binding += ";";
            binding += cname + "=" + format_double(v);
        }
        row[16] = s.feasible ? binding : "";
        row[17] = s.diagnostic;
        t.rows.push_back(row);
    }
    csv::write_file(dir + "/solutions.csv", t);

    json j;
    j["scenario"] = result.name;
    j["policy"] = json::parse(policy_to_json(result.policy));
    j["total_outlay_weighted"] = result.total_outlay_weighted;
    j["total_income_weighted"] = result.total_income_weighted;
    j["eligible_share"] = result.eligible_share;
    std::ofstream(dir + "/summary.json") << j.dump(2) << "\n";
}

std::map<std::string, Solution> read_solutions(const std::string& dir) {
    std::map<std::string, Solution> out;
    csv::Table t = csv::read_file(dir + "/solutions.csv");
    int c_kind = t.require_column("kind"), c_h = t.require_column("household");
    int c_a = t.require_column("activity"), c_ha = t.require_column("ha");
    int c_p = t.require_column("product");
    int c_s = t.require_column("sold_kg"), c_b = t.require_column("bought_kg");
    int c_c = t.require_column("consumed_kg"), c_cs = t.require_column("self_consumed_kg");
    int c_ip = t.require_column("internal_price"), c_rg = t.require_column("regime");
    int c_fs = t.require_column("fert_sub_kg"), c_fu = t.require_column("fert_unsub_kg");
    int c_fi = t.require_column("farm_income"), c_ti = t.require_column("total_income");
    int c_so = t.require_column("subsidy_outlay"), c_bind = t.require_column("binding");
    int c_diag = t.require_column("diagnostic");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        Solution& s = out[t.cell(r, c_h)];
        const std::string& kind = t.cell(r, c_kind);
        auto num = [&](int col) { return csv::parse_double(t.cell(r, col)).value_or(0.0); };
        if (kind == "activity") {
            s.levels[t.cell(r, c_a)] = num(c_ha);
        } else if (kind == "product") {
            const std::string pid = t.cell(r, c_p);
            s.sales[pid] = num(c_s);
            s.purchases[pid] = num(c_b);
            s.consumed[pid] = num(c_c);
            s.self_consumed[pid] = num(c_cs);
            s.internal_price[pid] = num(c_ip);
            const std::string rg = t.cell(r, c_rg);
            if (rg == "seller") s.regime[pid] = Regime::seller;
            else if (rg == "buyer") s.regime[pid] = Regime::buyer;
            else if (rg == "autarky") s.regime[pid] = Regime::autarky;
        } else if (kind == "household") {
            s.fertilizer_subsidized_kg = num(c_fs);
            s.fertilizer_unsubsidized_kg = num(c_fu);
            s.farm_income = num(c_fi);
            s.total_income = num(c_ti);
            s.subsidy_outlay = num(c_so);
            s.diagnostic = t.cell(r, c_diag);
            std::string binding = t.cell(r, c_bind);
            std::size_t pos = 0;
            while (pos < binding.size()) {
                std::size_t end = binding.find(';', pos);
                if (end == std::string::npos) end = binding.size();
                std::string item = binding.substr(pos, end - pos);
                std::size_t eq = item.find('=');
                if (eq != std::string::npos)
                    s.duals[item.substr(0, eq)] =
                        csv::parse_double(item.substr(eq + 1)).value_or(0.0);
                pos = end + 1;
            }
        }
    }
    return out;
}

void stage_synth(const SynthConfig& config, const std::string& out_dir) {
    synth_survey(config, out_dir);
    write_run_manifest(out_dir, "synth", "", static_cast<long long>(config.seed));
}

IngestResult stage_ingest(const std::string& survey_dir, const IngestConfig& config,
                          const std::string& practice_labels_csv, const std::string& out_dir) {
    SurveyDataset ds = load_survey(survey_dir);
    std::map<std::string, Practice> labels;
    if (!practice_labels_csv.empty()) labels = read_practice_labels(practice_labels_csv);
    IngestResult result = build_households(ds, config, labels);
    write_model(result.model, out_dir);
    write_cleaning_report(out_dir + "/cleaning_report.csv", result.report);
    write_run_manifest(out_dir, "ingest", survey_dir);
    return result;
}

std::map<std::string, Practice> read_practice_labels(const std::string& path) {
    std::map<std::string, Practice> labels;
    csv::Table t = csv::read_file(path);
    int c_p = t.require_column("plot_id"), c_l = t.require_column("practice");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        auto pr = practice_from(t.cell(r, c_l));
        if (pr) labels[t.cell(r, c_p)] = *pr;
    }
    return labels;
}

void stage_typology(const std::string& survey_dir, const std::string& model_dir,
                    const std::string& out_dir) {
    fs::create_directories(out_dir);
    SurveyDataset ds = load_survey(survey_dir);
    std::map<std::string, std::vector<PracticeObservation>> by_crop;
    for (const auto& p : ds.plots) {
        if (!p.area_ha || *p.area_ha <= 0) continue;
        double inv = 1.0 / *p.area_ha;
        PracticeObservation o;
        o.plot_id = p.plot_id;
        o.crop = p.crop;
        o.seed = p.exp_seed.value_or(0.0) * inv;
        o.fertilizer = p.exp_fertilizer.value_or(0.0) * inv;
        o.phyto = p.exp_phyto.value_or(0.0) * inv;
        o.equipment = p.exp_equipment.value_or(0.0) * inv;
        o.hired_labor = p.exp_hired_labor.value_or(0.0) * inv;
        by_crop[p.crop].push_back(o);
    }
    csv::Table labels;
    labels.header = {"plot_id", "practice"};
    for (const auto& [crop, obs] : by_crop) {
        if (static_cast<int>(obs.size()) < 2) {
            for (const auto& o : obs) labels.rows.push_back({o.plot_id, "extensive"});
            continue;
        }
        PracticeClassification cls = classify_practices(obs, 2);
        for (const auto& [pid, pr] : cls.labels) labels.rows.push_back({pid, to_string(pr)});
    }
    std::sort(labels.rows.begin(), labels.rows.end());
    csv::write_file(out_dir + "/practice_labels.csv", labels);

    if (!model_dir.empty() && fs::exists(model_dir + "/manifest.json")) {
        ModelInstance model = read_model(model_dir);
        csv::Table ty;
        ty.header = {"household", "size_class", "specialization", "economic_value"};
        for (const auto& h : model.households) {
            FarmClass fc = classify_farm(h, model);
            ty.rows.push_back({h.id, to_string(fc.size), to_string(fc.specialization),
                               format_double(fc.economic_value)});
        }
        csv::write_file(out_dir + "/typology.csv", ty);
    }
    write_run_manifest(out_dir, "typology", survey_dir);
}

CalibrationSet stage_calibrate(const std::string& model_dir, const ElasticityTargets& targets,
                               const StageOptions& options, const std::string& out_dir) {
    ModelInstance model = read_model(model_dir);
    CalibrationSet set = calibrate_all(model, targets, options.jobs);
    write_calibration(out_dir, model, set);
    write_run_manifest(out_dir, "calibrate", model_dir, options.seed);
    return set;
}

void stage_baseline(const std::string& model_dir, const std::string& calibration_dir,
                    const BaselineSpec& spec, const StageOptions& options, const std::string& out_dir) {
    ModelInstance model = read_model(model_dir);
    CalibrationSet base_set = read_calibration(calibration_dir);
    ModelInstance projected = project_baseline(model, spec);
    CalibrationSet proj_set = project_calibration(model, projected, base_set);
    write_model(projected, out_dir + "/model");
    write_calibration(out_dir + "/calibration", projected, proj_set);
    json j;
    j["years"] = spec.years;
    j["inflation"] = spec.cost_inflation;
    j["yield_shifts"] = spec.yield_shift;
    j["price_shifts"] = spec.price_shift;
    fs::create_directories(out_dir);
    std::ofstream(out_dir + "/baseline.json") << j.dump(2) << "\n";
    write_run_manifest(out_dir, "baseline", model_dir, options.seed);
    (void)options;
}

ScenarioResult stage_simulate(const std::string& baseline_dir, const ScenarioSpec& spec,
                              const StageOptions& options, const std::string& out_dir) {
    if (!fs::exists(baseline_dir + "/model/manifest.json"))
        throw std::runtime_error("missing baseline artifacts in " + baseline_dir +
                                 "; run the baseline stage first");
    ModelInstance projected = read_model(baseline_dir + "/model");
    CalibrationSet set = read_calibration(baseline_dir + "/calibration");
    ScenarioResult result = run_scenario(projected, set, spec, options.jobs);
    write_solutions(out_dir, projected, result);
    std::ofstream(out_dir + "/scenario.json") << scenario_to_json(spec) << "\n";
    write_run_manifest(out_dir, "simulate", baseline_dir, options.seed);
    return result;
}

void stage_report(const std::string& baseline_dir, const std::vector<std::string>& scenario_dirs,
                  GroupBy group_by, bool plot_data, const std::string& out_dir) {
    ModelInstance model = read_model(baseline_dir + "/model");
    fs::create_directories(out_dir);

    struct Run {
        std::string name;
        std::map<std::string, Solution> solutions;
        IndicatorTable table;
    };
    std::vector<Run> runs;
    for (const auto& dir : scenario_dirs) {
        Run run;
        std::ifstream sj(dir + "/summary.json");
        if (!sj) throw std::runtime_error("missing summary.json in " + dir + "; run simulate first");
        json j = json::parse(sj);
        run.name = j.value("scenario", "run");
        run.solutions = read_solutions(dir);
        run.table = aggregate(run.solutions, model, group_by);
        runs.push_back(std::move(run));
    }

    const Run* baseline = nullptr;
    const Run* abolition = nullptr;
    for (const auto& r : runs) {
        if (r.name == "baseline") baseline = &r;
        if (r.name == "Abol") abolition = &r;
    }

    csv::Table plot;
    plot.header = {"scenario", "group", "indicator", "value"};
    for (const auto& r : runs) {
        write_indicator_csv(out_dir + "/indicators_" + r.name + "_" + to_string(group_by) + ".csv",
                            r.table);
        if (baseline && &r != baseline) {
            auto rows = compare(r.table, baseline->table);
            write_compare_csv(out_dir + "/compare_" + r.name + "_" + to_string(group_by) + ".csv", rows);
        }
        if (abolition && &r != abolition) {
            auto curve = income_distribution(r.solutions, abolition->solutions, model);
            write_distribution_csv(out_dir + "/distribution_" + r.name + ".csv", curve);
            auto cb = cost_benefit(r.solutions, abolition->solutions, model);
            write_cost_benefit_json(out_dir + "/cost_benefit_" + r.name + ".json", cb);
        }
        if (plot_data)
            for (const auto& row : r.table.rows)
                plot.rows.push_back({r.name, row.group, row.indicator, format_double(row.value)});
    }
    if (plot_data) csv::write_file(out_dir + "/plot_data_" + to_string(group_by) + ".csv", plot);
    write_run_manifest(out_dir, "report", baseline_dir);
}

}  // namespace fhm
