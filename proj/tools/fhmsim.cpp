#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <thread>

#include "fhm/model_io.hpp"
#include "fhm/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

fhm::ScenarioSpec resolve_scenario(const std::string& name_or_path) {
    std::string lower;
    for (char c : name_or_path) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "baseline" || lower == "abol" || lower == "univ" || lower == "cibl")
        return fhm::scenario_preset(lower);
    std::ifstream in(name_or_path);
    if (!in) throw std::runtime_error("scenario '" + name_or_path + "' is neither a preset nor a readable file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return fhm::scenario_from_json(buf.str());
}

fhm::ElasticityTargets load_targets(const std::string& path) {
    fhm::ElasticityTargets t;
    if (path.empty()) return t;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read elasticity targets " + path);
    json j = json::parse(in);
    t.default_elasticity = j.value("default", 0.8);
    if (j.contains("by_product"))
        for (auto& [k, v] : j["by_product"].items()) t.by_product[k] = v;
    return t;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fhmsim - farm household microsimulation for input subsidy analysis"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs < 1) jobs = 1;
    long long seed = 1;
    std::string out_dir = "out";
    std::string config_path;
    app.add_option("--jobs", jobs, "household-solve worker count (1 reproduces serial results)");
    app.add_option("--seed", seed, "random seed for synthetic generation");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--config", config_path, "JSON config overriding stage defaults");

    auto* synth = app.add_subcommand("synth", "generate a synthetic survey");
    int synth_n = 100;
    std::string synth_profile = "Senegal";
    synth->add_option("-n,--households", synth_n, "number of households");
    synth->add_option("--profile", synth_profile, "region profile (or 'Senegal' for the national mix)");

    auto* ingest = app.add_subcommand("ingest", "clean a survey and assemble the model directory");
    std::string ingest_in, ingest_labels, ingest_method = "tukey_drop";
    double tukey_k = 1.5, winsor_lo = 5.0, winsor_hi = 95.0;
    ingest->add_option("--survey", ingest_in, "survey directory (households.csv, plots.csv)")->required();
    ingest->add_option("--practice-labels", ingest_labels, "practice labels CSV from the typology stage");
    ingest->add_option("--cleaning", ingest_method, "tukey_drop or winsorize");
    ingest->add_option("--tukey-k", tukey_k, "IQR fence multiplier");
    ingest->add_option("--winsor-lo", winsor_lo, "lower winsor percentile");
    ingest->add_option("--winsor-hi", winsor_hi, "upper winsor percentile");

    auto* typology = app.add_subcommand("typology", "practice clustering and farm classes");
    std::string typo_survey, typo_model;
    typology->add_option("--survey", typo_survey, "survey directory")->required();
    typology->add_option("--model", typo_model, "model directory (adds size/specialization classes)");

    auto* calibrate = app.add_subcommand("calibrate", "estimate behavioral terms per household");
    std::string cal_model, cal_targets;
    calibrate->add_option("--model", cal_model, "model directory from ingest")->required();
    calibrate->add_option("--targets", cal_targets, "elasticity targets JSON");

    auto* baseline = app.add_subcommand("baseline", "project the base year to the reference situation");
    std::string base_model, base_cal, base_spec;
    baseline->add_option("--model", base_model, "model directory")->required();
    baseline->add_option("--calibration", base_cal, "calibration directory")->required();
    baseline->add_option("--spec", base_spec, "baseline spec JSON (defaults to the published shifts)");

    auto* simulate = app.add_subcommand("simulate", "run a policy scenario on the baseline");
    std::string sim_baseline, sim_scenario;
    simulate->add_option("--baseline", sim_baseline, "baseline directory")->required();
    simulate->add_option("--scenario", sim_scenario, "preset name (baseline|abol|univ|cibl) or JSON path")
        ->required();

    auto* report = app.add_subcommand("report", "aggregate scenario results into indicator tables");
    std::string rep_baseline, rep_group = "national";
    std::vector<std::string> rep_runs;
    bool plot_data = false;
    report->add_option("--baseline", rep_baseline, "baseline directory")->required();
    report->add_option("--runs", rep_runs, "scenario result directories")->required()->expected(-1);
    report->add_option("--group-by", rep_group, "national|region|size_class|specialization|crop");
    report->add_flag("--plot-data", plot_data, "emit plot-ready long-format CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        fhm::StageOptions stage_opts;
        stage_opts.jobs = jobs;
        stage_opts.seed = seed;

        if (synth->parsed()) {
            fhm::SynthConfig cfg;
            cfg.seed = static_cast<std::uint64_t>(seed);
            cfg.households = synth_n;
            cfg.profile = synth_profile;
            fhm::stage_synth(cfg, out_dir);
            std::cout << "wrote synthetic survey for " << synth_n << " households to " << out_dir << "\n";
        } else if (ingest->parsed()) {
            fhm::IngestConfig cfg;
            if (ingest_method == "winsorize")
                cfg.cleaning.method = fhm::CleaningPolicy::Method::winsorize;
            else if (ingest_method != "tukey_drop")
                throw std::runtime_error("unknown cleaning method '" + ingest_method + "'");
            cfg.cleaning.tukey_k = tukey_k;
            cfg.cleaning.winsor_lo = winsor_lo;
            cfg.cleaning.winsor_hi = winsor_hi;
            fhm::IngestResult result = fhm::stage_ingest(ingest_in, cfg, ingest_labels, out_dir);
            auto diags = fhm::validate_model(result.model);
            for (const auto& d : result.diagnostics) std::cerr << d.where << ": " << d.message << "\n";
            for (const auto& d : diags) std::cerr << d.where << ": " << d.message << "\n";
            std::cout << "model written to " << out_dir << " (" << result.model.households.size()
                      << " households, " << result.report.size() << " cleaning actions)\n";
            if (!diags.empty()) return 2;
        } else if (typology->parsed()) {
            fhm::stage_typology(typo_survey, typo_model, out_dir);
            std::cout << "typology written to " << out_dir << "\n";
        } else if (calibrate->parsed()) {
            auto targets = load_targets(cal_targets);
            fhm::CalibrationSet set = fhm::stage_calibrate(cal_model, targets, stage_opts, out_dir);
            int failures = 0;
            for (const auto& [hid, res] : set.by_household)
                if (!res.diagnostic.empty()) ++failures;
            std::cout << "calibrated " << set.by_household.size() << " households ("
                      << failures << " diagnostics) -> " << out_dir << "\n";
        } else if (baseline->parsed()) {
            fhm::BaselineSpec spec = fhm::BaselineSpec::senegal_2011_2017();
            if (!base_spec.empty()) {
                std::ifstream in(base_spec);
                if (!in) throw std::runtime_error("cannot read baseline spec " + base_spec);
                fhm::ScenarioSpec s = fhm::scenario_from_json(
                    (std::ostringstream() << in.rdbuf()).str());
                spec = s.baseline;
            }
            fhm::stage_baseline(base_model, base_cal, spec, stage_opts, out_dir);
            std::cout << "baseline projection written to " << out_dir << "\n";
        } else if (simulate->parsed()) {
            fhm::ScenarioSpec spec = resolve_scenario(sim_scenario);
            fhm::ScenarioResult result = fhm::stage_simulate(sim_baseline, spec, stage_opts, out_dir);
            int infeasible = 0;
            for (const auto& [hid, s] : result.solutions)
                if (!s.feasible) ++infeasible;
            std::cout << "scenario " << result.name << ": " << result.solutions.size()
                      << " households solved (" << infeasible << " infeasible) -> " << out_dir << "\n";
        } else if (report->parsed()) {
            auto gb = fhm::group_by_from(rep_group);
            if (!gb) throw std::runtime_error("unknown group-by '" + rep_group + "'");
            fhm::stage_report(rep_baseline, rep_runs, *gb, plot_data, out_dir);
            std::cout << "report written to " << out_dir << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
