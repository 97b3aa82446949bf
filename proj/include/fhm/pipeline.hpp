#pragma once

#include <map>
#include <string>
#include <vector>

#include "fhm/calibration.hpp"
#include "fhm/ingest.hpp"
#include "fhm/report.hpp"
#include "fhm/scenario.hpp"
#include "fhm/synth.hpp"
#include "fhm/typology.hpp"

namespace fhm {

// Calibration artifacts: calibration.csv (household, activity, d, q, observed,
// residual), duals.csv, elasticity_check.csv.
void write_calibration(const std::string& dir, const ModelInstance& model, const CalibrationSet& set);
CalibrationSet read_calibration(const std::string& dir);

// Scenario artifacts: solutions.csv plus summary.json.
void write_solutions(const std::string& dir, const ModelInstance& model, const ScenarioResult& result);
std::map<std::string, Solution> read_solutions(const std::string& dir);

struct StageOptions {
    int jobs = 1;
    long long seed = 0;
};

// Stage entry points shared by the command line and the test suites. Each
// writes a run manifest into its output directory.
void stage_synth(const SynthConfig& config, const std::string& out_dir);
IngestResult stage_ingest(const std::string& survey_dir, const IngestConfig& config,
                          const std::string& practice_labels_csv, const std::string& out_dir);
void stage_typology(const std::string& survey_dir, const std::string& model_dir,
                    const std::string& out_dir);
CalibrationSet stage_calibrate(const std::string& model_dir, const ElasticityTargets& targets,
                               const StageOptions& options, const std::string& out_dir);
void stage_baseline(const std::string& model_dir, const std::string& calibration_dir,
                    const BaselineSpec& spec, const StageOptions& options, const std::string& out_dir);
ScenarioResult stage_simulate(const std::string& baseline_dir, const ScenarioSpec& spec,
                              const StageOptions& options, const std::string& out_dir);
void stage_report(const std::string& baseline_dir, const std::vector<std::string>& scenario_dirs,
                  GroupBy group_by, bool plot_data, const std::string& out_dir);

std::map<std::string, Practice> read_practice_labels(const std::string& path);

}  // namespace fhm
