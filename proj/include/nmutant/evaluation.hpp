#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nmutant/oracle_spec.hpp"
#include "nmutant/sensitivity.hpp"
#include "nmutant/sprt.hpp"

namespace nmutant {

struct AttackSource {
  std::string name;
  std::string records;  // CSV written by save_records
};

/// A sensitivity + detection study. Paths are resolved relative to the plan
/// file's directory.
struct ExperimentPlan {
  std::string dataset;
  std::string model;
  std::vector<AttackSource> attacks;
  std::vector<std::size_t> step_sizes{1, 5, 10};
  std::vector<double> mu{1.2, 1.5, 2.0};
  std::size_t n_mutations = 300;
  std::size_t n_samples = 100;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  double beta = 0.05;
  double level = 0.99;
  std::size_t max_mutations = 500;
  Cadence cadence = Cadence::kEveryMutation;
  std::optional<std::size_t> detection_step_size;  // defaults to the smallest step size
  double kappa_floor = kDefaultKappaFloor;
  bool undecided_normal_correct = true;            // undecided normal input scored as correct
  bool undecided_adversarial_identified = false;   // undecided adversarial input scored as found

  std::size_t detection_step() const;
  void validate() const;
};

ExperimentPlan parse_plan(const std::string& json_text, const std::string& base_dir = "");
ExperimentPlan load_plan(const std::string& path);
std::string plan_to_json(const ExperimentPlan& plan);

struct StudyGroup {
  std::string name;
  bool adversarial = false;
  std::vector<Sample> samples;
};

/// Loaded plan artifacts. groups[0] is always the normal group.
struct StudyInputs {
  OracleSource oracle;
  std::vector<StudyGroup> groups;
};

/// Normal samples are the correctly classified dataset items; each group keeps
/// at most n_samples inputs, drawn as a seeded random subset in original order.
/// Throws IoError naming the attack whose records are missing.
StudyInputs prepare_study(const ExperimentPlan& plan);

struct SensitivityRow {
  std::string group;
  std::size_t step_size = 0;
  AggregateKappa kappa;
  std::optional<double> ratio;  // kappa_group / kappa_normal at this step size
};

struct SensitivityTable {
  std::vector<SensitivityRow> rows;
};

SensitivityTable run_sensitivity_study(const ExperimentPlan& plan, const StudyInputs& inputs,
                                       std::size_t workers = 1);

/// kappa1 for the detection step size, calibrated on the normal group.
Calibration calibrate_for_plan(const ExperimentPlan& plan, const StudyInputs& inputs, std::size_t workers = 1);

struct DetectionRow {
  std::string group;
  double kappa1 = 0.0;
  double mu = 0.0;
  std::size_t n_total = 0;
  std::size_t n_identified = 0;  // inputs flagged adversarial
  double accuracy = 0.0;
  double avg_mutations = 0.0;      // over decided runs
  double avg_label_changes = 0.0;  // over decided runs
  std::size_t n_undecided = 0;

  friend bool operator==(const DetectionRow&, const DetectionRow&) = default;
};

struct DetectionSummary {
  std::vector<DetectionRow> rows;
  friend bool operator==(const DetectionSummary&, const DetectionSummary&) = default;
};

/// Scores one group's decisions under the plan's undecided policy.
DetectionRow score_decisions(const std::string& group, bool adversarial, double kappa1, double mu,
                             const std::vector<Decision>& decisions, const ExperimentPlan& plan);

DetectionSummary run_detection_study(const ExperimentPlan& plan, const StudyInputs& inputs, double kappa1,
                                     std::size_t workers = 1);

enum class ReportFormat { kCsv, kJson, kMarkdown };

ReportFormat parse_report_format(const std::string& text);
std::string extension(ReportFormat format);

std::string emit_report(const DetectionSummary& summary, ReportFormat format);
std::string emit_report(const SensitivityTable& table, ReportFormat format);

DetectionSummary parse_detection_csv(const std::string& text);
DetectionSummary parse_detection_json(const std::string& text);

struct EvaluationResult {
  SensitivityTable sensitivity;
  Calibration calibration;
  DetectionSummary detection;
  std::vector<std::string> files;
};

/// Runs both studies and writes sensitivity.<ext>, detection.<ext> for each
/// format, calibration.json, and kappa_<group>_step<k>.csv per-sample tables
/// into out_dir (created if needed).
EvaluationResult run_evaluation(const ExperimentPlan& plan, const std::string& out_dir,
                                const std::vector<ReportFormat>& formats, std::size_t workers = 1);

}  // namespace nmutant
