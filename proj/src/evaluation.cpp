#include "nmutant/evaluation.hpp"

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "nmutant/attacks.hpp"
#include "nmutant/calibration_file.hpp"
#include "nmutant/dataset_io.hpp"
#include "nmutant/error.hpp"
#include "nmutant/text.hpp"

namespace nmutant {

namespace fs = std::filesystem;

namespace {

// Seed salts keep the random streams of different study phases apart.
constexpr std::uint64_t kSubsetSalt = 11;
constexpr std::uint64_t kSensitivitySalt = 23;
constexpr std::uint64_t kDetectionSalt = 37;

const std::vector<std::string> kDetectionColumns = {
    "group", "kappa1", "mu", "n_total", "n_identified", "accuracy", "avg_mutations", "avg_label_changes",
    "n_undecided"};

const std::vector<std::string> kSensitivityColumns = {"group", "step_size", "n_samples", "kappa_mean",
                                                      "half_width", "level", "ratio"};

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || path.rfind("exec:", 0) == 0 || path.rfind("tcp:", 0) == 0 ||
      path.rfind("idx:", 0) == 0 || fs::path(path).is_absolute()) {
    return path;
  }
  return (fs::path(base_dir) / path).string();
}

std::vector<std::size_t> seeded_subset(std::size_t available, std::size_t wanted, std::uint64_t seed) {
  std::vector<std::size_t> order(available);
  std::iota(order.begin(), order.end(), 0);
  if (wanted >= available) return order;
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(wanted);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<std::string> detection_cells(const DetectionRow& r) {
  return {r.group,
          format_real(r.kappa1),
          format_real(r.mu),
          std::to_string(r.n_total),
          std::to_string(r.n_identified),
          format_real(r.accuracy),
          format_real(r.avg_mutations),
          format_real(r.avg_label_changes),
          std::to_string(r.n_undecided)};
}

std::vector<std::string> sensitivity_cells(const SensitivityRow& r) {
  return {r.group,
          std::to_string(r.step_size),
          std::to_string(r.kappa.per_sample.size()),
          format_real(r.kappa.mean),
          format_real(r.kappa.half_width),
          format_real(r.kappa.confidence_level),
          r.ratio ? format_real(*r.ratio) : std::string{}};
}

std::string join_row(const std::vector<std::string>& cells, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += sep;
    out += cells[i];
  }
  return out;
}

std::string render_table(const std::vector<std::string>& columns,
                         const std::vector<std::vector<std::string>>& rows, ReportFormat format) {
  std::string out;
  switch (format) {
    case ReportFormat::kCsv:
      out = join_row(columns, ",") + "\n";
      for (const auto& row : rows) out += join_row(row, ",") + "\n";
      break;
    case ReportFormat::kMarkdown: {
      out = "| " + join_row(columns, " | ") + " |\n|";
      for (std::size_t i = 0; i < columns.size(); ++i) out += "---|";
      out += "\n";
      for (const auto& row : rows) out += "| " + join_row(row, " | ") + " |\n";
      break;
    }
    case ReportFormat::kJson:
      break;
  }
  return out;
}

}  // namespace

std::size_t ExperimentPlan::detection_step() const {
  if (detection_step_size) return *detection_step_size;
  return *std::min_element(step_sizes.begin(), step_sizes.end());
}

void ExperimentPlan::validate() const {
  if (dataset.empty()) throw ValidationError("plan: dataset is required");
  if (model.empty()) throw ValidationError("plan: model is required");
  if (step_sizes.empty()) throw ValidationError("plan: step_sizes must be non-empty");
  if (mu.empty()) throw ValidationError("plan: mu must be non-empty");
  for (double m : mu) {
    if (!(m > 1.0)) throw ValidationError("plan: every mu must exceed 1");
  }
  for (std::size_t s : step_sizes) {
    if (s == 0) throw ValidationError("plan: step sizes must be at least 1");
  }
  if (n_mutations == 0) throw ValidationError("plan: n_mutations must be at least 1");
  if (n_samples < 2) throw ValidationError("plan: n_samples must be at least 2");
  if (max_mutations == 0) throw ValidationError("plan: max_mutations must be at least 1");
  for (const auto& a : attacks) {
    if (a.name.empty() || a.records.empty()) throw ValidationError("plan: attacks need a name and a records file");
    if (a.name == "normal") throw ValidationError("plan: 'normal' is reserved for the normal group");
  }
}

ExperimentPlan parse_plan(const std::string& json_text, const std::string& base_dir) {
  ExperimentPlan plan;
  try {
    const auto doc = nlohmann::json::parse(json_text);
    plan.dataset = resolve(doc.at("dataset").get<std::string>(), base_dir);
    plan.model = resolve(doc.at("model").get<std::string>(), base_dir);
    for (const auto& a : doc.value("attacks", nlohmann::json::array())) {
      plan.attacks.push_back({a.at("name").get<std::string>(), resolve(a.at("records").get<std::string>(), base_dir)});
    }
    if (doc.contains("step_sizes")) plan.step_sizes = doc["step_sizes"].get<std::vector<std::size_t>>();
    if (doc.contains("mu")) plan.mu = doc["mu"].get<std::vector<double>>();
    plan.n_mutations = doc.value("n_mutations", plan.n_mutations);
    plan.n_samples = doc.value("n_samples", plan.n_samples);
    plan.seed = doc.value("seed", plan.seed);
    plan.alpha = doc.value("alpha", plan.alpha);
    plan.beta = doc.value("beta", plan.beta);
    plan.level = doc.value("level", plan.level);
    plan.max_mutations = doc.value("max_mutations", plan.max_mutations);
    if (doc.contains("cadence")) plan.cadence = parse_cadence(doc["cadence"].get<std::string>());
    if (doc.contains("detection_step_size")) plan.detection_step_size = doc["detection_step_size"].get<std::size_t>();
    plan.kappa_floor = doc.value("kappa_floor", plan.kappa_floor);
    if (doc.contains("undecided")) {
      const auto& u = doc["undecided"];
      const auto normal = u.value("normal", std::string("correct"));
      const auto adversarial = u.value("adversarial", std::string("missed"));
      if (normal != "correct" && normal != "wrong") throw ValidationError("plan: undecided.normal is correct|wrong");
      if (adversarial != "missed" && adversarial != "identified") {
        throw ValidationError("plan: undecided.adversarial is missed|identified");
      }
      plan.undecided_normal_correct = normal == "correct";
      plan.undecided_adversarial_identified = adversarial == "identified";
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed plan: ") + e.what());
  }
  plan.validate();
  return plan;
}

ExperimentPlan load_plan(const std::string& path) {
  return parse_plan(read_file(path), fs::path(path).parent_path().string());
}

std::string plan_to_json(const ExperimentPlan& plan) {
  nlohmann::ordered_json doc;
  doc["dataset"] = plan.dataset;
  doc["model"] = plan.model;
  auto attacks = nlohmann::ordered_json::array();
  for (const auto& a : plan.attacks) attacks.push_back({{"name", a.name}, {"records", a.records}});
  doc["attacks"] = attacks;
  doc["step_sizes"] = plan.step_sizes;
  doc["mu"] = plan.mu;
  doc["n_mutations"] = plan.n_mutations;
  doc["n_samples"] = plan.n_samples;
  doc["seed"] = plan.seed;
  doc["alpha"] = plan.alpha;
  doc["beta"] = plan.beta;
  doc["level"] = plan.level;
  doc["max_mutations"] = plan.max_mutations;
  doc["cadence"] = to_string(plan.cadence);
  if (plan.detection_step_size) doc["detection_step_size"] = *plan.detection_step_size;
  doc["kappa_floor"] = plan.kappa_floor;
  doc["undecided"] = {{"normal", plan.undecided_normal_correct ? "correct" : "wrong"},
                      {"adversarial", plan.undecided_adversarial_identified ? "identified" : "missed"}};
  return doc.dump(1) + "\n";
}

StudyInputs prepare_study(const ExperimentPlan& plan) {
  plan.validate();
  StudyInputs inputs;
  const Dataset dataset = load_dataset(plan.dataset);
  if (dataset.empty()) throw ValidationError("plan dataset " + plan.dataset + " is empty");
  inputs.oracle = open_oracle(plan.model);
  auto oracle = inputs.oracle.factory();

  const auto normal = select_normal(dataset.items, *oracle);
  StudyGroup normal_group{"normal", false, {}};
  for (std::size_t i : seeded_subset(normal.size(), plan.n_samples, derive_seed(plan.seed, kSubsetSalt))) {
    normal_group.samples.push_back(normal[i].sample);
  }
  if (normal_group.samples.size() < 2) throw ValidationError("fewer than two correctly classified samples");
  inputs.groups.push_back(std::move(normal_group));

  for (std::size_t a = 0; a < plan.attacks.size(); ++a) {
    const auto& attack = plan.attacks[a];
    if (!fs::exists(attack.records)) {
      throw IoError("attack '" + attack.name + "' records not found: " + attack.records);
    }
    const Dataset records = load_dataset(attack.records);
    if (records.size() < 2) {
      throw ValidationError("attack '" + attack.name + "' has " + std::to_string(records.size()) +
                            " records; at least two are needed");
    }
    if (records.shape() != dataset.shape()) {
      throw ValidationError("attack '" + attack.name + "' records have shape " + to_string(records.shape()) +
                            ", dataset has " + to_string(dataset.shape()));
    }
    StudyGroup group{attack.name, true, {}};
    for (std::size_t i : seeded_subset(records.size(), plan.n_samples, derive_seed(plan.seed, kSubsetSalt + 1 + a))) {
      const auto& item = records.items[i];
      if (oracle->classify(item.sample) == item.true_label) {
        throw ValidationError("attack '" + attack.name + "' record " + std::to_string(i) +
                              " is classified correctly by the model; records were made for a different model?");
      }
      group.samples.push_back(item.sample);
    }
    inputs.groups.push_back(std::move(group));
  }
  return inputs;
}

SensitivityTable run_sensitivity_study(const ExperimentPlan& plan, const StudyInputs& inputs, std::size_t workers) {
  SensitivityTable table;
  for (std::size_t step : plan.step_sizes) {
    const std::uint64_t step_seed = derive_seed(derive_seed(plan.seed, kSensitivitySalt), step);
    AggregateKappa normal;
    for (std::size_t g = 0; g < inputs.groups.size(); ++g) {
      const auto& group = inputs.groups[g];
      SensitivityRow row;
      row.group = group.name;
      row.step_size = step;
      row.kappa = aggregate(group.samples, inputs.oracle.factory, PixelMutation{step}, plan.n_mutations, plan.level,
                            derive_seed(step_seed, g), workers);
      if (g == 0) {
        normal = row.kappa;
      } else if (normal.mean > 0.0) {
        row.ratio = distance_ratio(normal, row.kappa);
      }
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

Calibration calibrate_for_plan(const ExperimentPlan& plan, const StudyInputs& inputs, std::size_t workers) {
  const std::size_t step = plan.detection_step();
  const std::uint64_t step_seed = derive_seed(derive_seed(plan.seed, kSensitivitySalt), step);
  std::vector<LabeledSample> normal;
  auto oracle = inputs.oracle.factory();
  for (const auto& s : inputs.groups.front().samples) normal.push_back({s, oracle->classify(s)});
  return calibrate_kappa1(normal, inputs.oracle.factory, PixelMutation{step}, plan.n_mutations, plan.level,
                          derive_seed(step_seed, 0), plan.kappa_floor, workers);
}

DetectionRow score_decisions(const std::string& group, bool adversarial, double kappa1, double mu,
                             const std::vector<Decision>& decisions, const ExperimentPlan& plan) {
  DetectionRow row;
  row.group = group;
  row.kappa1 = kappa1;
  row.mu = mu;
  row.n_total = decisions.size();
  std::size_t correct = 0;
  std::size_t decided = 0;
  std::size_t mutation_sum = 0;
  std::size_t change_sum = 0;
  for (const auto& d : decisions) {
    if (d.verdict == Verdict::kAdversarial) ++row.n_identified;
    if (d.verdict == Verdict::kUndecided) {
      ++row.n_undecided;
      if (adversarial ? plan.undecided_adversarial_identified : plan.undecided_normal_correct) ++correct;
      continue;
    }
    ++decided;
    mutation_sum += d.mutations;
    change_sum += d.label_changes;
    if ((d.verdict == Verdict::kAdversarial) == adversarial) ++correct;
  }
  if (row.n_total > 0) row.accuracy = static_cast<double>(correct) / static_cast<double>(row.n_total);
  if (decided > 0) {
    row.avg_mutations = static_cast<double>(mutation_sum) / static_cast<double>(decided);
    row.avg_label_changes = static_cast<double>(change_sum) / static_cast<double>(decided);
  }
  return row;
}

DetectionSummary run_detection_study(const ExperimentPlan& plan, const StudyInputs& inputs, double kappa1,
                                     std::size_t workers) {
  DetectionSummary summary;
  const std::uint64_t detect_seed = derive_seed(plan.seed, kDetectionSalt);
  for (std::size_t g = 0; g < inputs.groups.size(); ++g) {
    const auto& group = inputs.groups[g];
    for (double mu : plan.mu) {
      DetectorConfig config;
      config.kappa1 = kappa1;
      config.mu = mu;
      config.alpha = plan.alpha;
      config.beta = plan.beta;
      config.mutation = PixelMutation{plan.detection_step()};
      config.max_mutations = plan.max_mutations;
      config.cadence = plan.cadence;
      // The same per-sample streams are reused across mu values.
      const auto decisions =
          detect_batch(group.samples, inputs.oracle.factory, config, derive_seed(detect_seed, g), workers);
      summary.rows.push_back(score_decisions(group.name, group.adversarial, kappa1, mu, decisions, plan));
    }
  }
  return summary;
}

ReportFormat parse_report_format(const std::string& text) {
  if (text == "csv") return ReportFormat::kCsv;
  if (text == "json") return ReportFormat::kJson;
  if (text == "markdown" || text == "md") return ReportFormat::kMarkdown;
  throw ValidationError("report format must be csv, json or markdown, got '" + text + "'");
}

std::string extension(ReportFormat format) {
  switch (format) {
    case ReportFormat::kCsv: return "csv";
    case ReportFormat::kJson: return "json";
    case ReportFormat::kMarkdown: return "md";
  }
  return "txt";
}

std::string emit_report(const DetectionSummary& summary, ReportFormat format) {
  if (format == ReportFormat::kJson) {
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : summary.rows) {
      nlohmann::ordered_json j;
      j["group"] = r.group;
      j["kappa1"] = r.kappa1;
      j["mu"] = r.mu;
      j["n_total"] = r.n_total;
      j["n_identified"] = r.n_identified;
      j["accuracy"] = r.accuracy;
      j["avg_mutations"] = r.avg_mutations;
      j["avg_label_changes"] = r.avg_label_changes;
      j["n_undecided"] = r.n_undecided;
      rows.push_back(std::move(j));
    }
    return rows.dump(1) + "\n";
  }
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : summary.rows) cells.push_back(detection_cells(r));
  return render_table(kDetectionColumns, cells, format);
}

std::string emit_report(const SensitivityTable& table, ReportFormat format) {
  if (format == ReportFormat::kJson) {
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : table.rows) {
      nlohmann::ordered_json j;
      j["group"] = r.group;
      j["step_size"] = r.step_size;
      j["n_samples"] = r.kappa.per_sample.size();
      j["kappa_mean"] = r.kappa.mean;
      j["half_width"] = r.kappa.half_width;
      j["level"] = r.kappa.confidence_level;
      if (r.ratio) j["ratio"] = *r.ratio;
      else j["ratio"] = nullptr;
      rows.push_back(std::move(j));
    }
    return rows.dump(1) + "\n";
  }
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : table.rows) cells.push_back(sensitivity_cells(r));
  return render_table(kSensitivityColumns, cells, format);
}

DetectionSummary parse_detection_csv(const std::string& text) {
  DetectionSummary summary;
  bool header = true;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (header) {
      if (cells.size() != kDetectionColumns.size()) throw FormatError("detection report header has wrong columns");
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] != kDetectionColumns[i]) throw FormatError("unexpected column '" + std::string(cells[i]) + "'");
      }
      header = false;
      continue;
    }
    if (cells.size() != kDetectionColumns.size()) {
      throw FormatError("detection report line " + std::to_string(line_no) + " has wrong column count");
    }
    DetectionRow r;
    r.group = std::string(cells[0]);
    r.kappa1 = parse_real(cells[1]);
    r.mu = parse_real(cells[2]);
    r.n_total = parse_count(cells[3]);
    r.n_identified = parse_count(cells[4]);
    r.accuracy = parse_real(cells[5]);
    r.avg_mutations = parse_real(cells[6]);
    r.avg_label_changes = parse_real(cells[7]);
    r.n_undecided = parse_count(cells[8]);
    summary.rows.push_back(std::move(r));
  }
  return summary;
}

DetectionSummary parse_detection_json(const std::string& text) {
  DetectionSummary summary;
  try {
    for (const auto& j : nlohmann::json::parse(text)) {
      DetectionRow r;
      r.group = j.at("group").get<std::string>();
      r.kappa1 = j.at("kappa1").get<double>();
      r.mu = j.at("mu").get<double>();
      r.n_total = j.at("n_total").get<std::size_t>();
      r.n_identified = j.at("n_identified").get<std::size_t>();
      r.accuracy = j.at("accuracy").get<double>();
      r.avg_mutations = j.at("avg_mutations").get<double>();
      r.avg_label_changes = j.at("avg_label_changes").get<double>();
      r.n_undecided = j.at("n_undecided").get<std::size_t>();
      summary.rows.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed detection report: ") + e.what());
  }
  return summary;
}

EvaluationResult run_evaluation(const ExperimentPlan& plan, const std::string& out_dir,
                                const std::vector<ReportFormat>& formats, std::size_t workers) {
  const StudyInputs inputs = prepare_study(plan);
  EvaluationResult result;
  result.sensitivity = run_sensitivity_study(plan, inputs, workers);
  result.calibration = calibrate_for_plan(plan, inputs, workers);
  result.detection = run_detection_study(plan, inputs, result.calibration.kappa1, workers);

  fs::create_directories(out_dir);
  auto emit = [&](const std::string& name, const std::string& contents) {
    const std::string path = (fs::path(out_dir) / name).string();
    write_file(path, contents);
    result.files.push_back(path);
  };
  for (ReportFormat f : formats) {
    emit("sensitivity." + extension(f), emit_report(result.sensitivity, f));
    emit("detection." + extension(f), emit_report(result.detection, f));
  }
  const CalibrationFile calibration = make_calibration_file(
      result.calibration, PixelMutation{plan.detection_step()}, plan.n_mutations,
      derive_seed(derive_seed(derive_seed(plan.seed, kSensitivitySalt), plan.detection_step()), 0));
  emit("calibration.json", calibration_to_json(calibration));
  for (const auto& row : result.sensitivity.rows) {
    std::ostringstream csv;
    write_kappa_csv(csv, row.kappa);
    emit("kappa_" + row.group + "_step" + std::to_string(row.step_size) + ".csv", csv.str());
  }
  return result;
}

}  // namespace nmutant
