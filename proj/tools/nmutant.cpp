#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nmutant/attacks.hpp"
#include "nmutant/calibration_file.hpp"
#include "nmutant/dataset_io.hpp"
#include "nmutant/error.hpp"
#include "nmutant/evaluation.hpp"
#include "nmutant/mlp.hpp"
#include "nmutant/oracle_spec.hpp"
#include "nmutant/sensitivity.hpp"
#include "nmutant/sprt.hpp"
#include "nmutant/text.hpp"

namespace {

using namespace nmutant;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitAdversarial = 3;
constexpr int kExitUndecided = 4;
constexpr int kExitOracle = 5;

struct SeedFlag {
  std::optional<std::uint64_t> value;

  std::optional<std::uint64_t> env() const {
    const char* text = std::getenv("NMUTANT_SEED");
    if (text == nullptr || *text == '\0') return std::nullopt;
    try {
      return parse_count(text);
    } catch (const Error&) {
      throw ValidationError(std::string("NMUTANT_SEED must be a non-negative integer, got '") + text + "'");
    }
  }

  std::uint64_t resolve() const {
    if (value) return *value;
    return env().value_or(0);
  }
};

void add_seed(CLI::App* cmd, SeedFlag& seed) {
  cmd->add_option("--seed", seed.value, "Random seed (falls back to NMUTANT_SEED, then 0)");
}

struct MutationFlags {
  std::string kind = "pixel";
  std::size_t step_size = 1;
  std::size_t occlusion_height = 2;
  std::size_t occlusion_width = 2;
  double delta_max = 0.1;

  MutationOp op() const {
    if (kind == "pixel") return PixelMutation{step_size};
    if (kind == "occlusion") return OcclusionMutation{occlusion_height, occlusion_width};
    if (kind == "lighting") return LightingMutation{delta_max};
    throw ValidationError("--mutation must be pixel, occlusion or lighting, got '" + kind + "'");
  }
};

void add_mutation(CLI::App* cmd, MutationFlags& m) {
  cmd->add_option("--mutation", m.kind, "Mutation operator: pixel, occlusion or lighting")->capture_default_str();
  cmd->add_option("--step-size", m.step_size, "Pixels re-drawn per pixel mutation")->capture_default_str();
  cmd->add_option("--occlusion-height", m.occlusion_height, "Occlusion rectangle height")->capture_default_str();
  cmd->add_option("--occlusion-width", m.occlusion_width, "Occlusion rectangle width")->capture_default_str();
  cmd->add_option("--delta-max", m.delta_max, "Largest lighting offset")->capture_default_str();
}

struct ModelFlags {
  std::string spec;
  std::size_t timeout_ms = 10000;

  OracleSource open() const { return open_oracle(spec, std::chrono::milliseconds(timeout_ms)); }
};

void add_model(CLI::App* cmd, ModelFlags& m) {
  cmd->add_option("--model", m.spec, "Weights file, exec:<command> or tcp:<host:port>")->required();
  cmd->add_option("--oracle-timeout-ms", m.timeout_ms, "Per-request timeout for external oracles")
      ->capture_default_str();
}

// ---- train

struct TrainArgs {
  std::string dataset;
  std::vector<std::size_t> hidden{16};
  std::size_t epochs = 20;
  double lr = 0.05;
  std::size_t batch_size = 16;
  SeedFlag seed;
  std::string out;
};

int run_train(const TrainArgs& a) {
  const Dataset dataset = load_dataset(a.dataset);
  TrainOptions options;
  options.hidden = a.hidden;
  options.epochs = a.epochs;
  options.learning_rate = a.lr;
  options.batch_size = a.batch_size;
  options.seed = a.seed.resolve();
  const TrainResult result = mlp_train(dataset, options);
  save_mlp(result.model, a.out);
  std::cout << "train accuracy " << format_real(result.train_accuracy) << ", final loss "
            << format_real(result.final_loss) << "\n"
            << "wrote " << a.out << "\n";
  return kExitOk;
}

// ---- calibrate

struct CalibrateArgs {
  ModelFlags model;
  std::string dataset;
  MutationFlags mutation;
  std::size_t n = 300;
  std::size_t samples = 100;
  double level = 0.99;
  double floor = kDefaultKappaFloor;
  std::size_t workers = 1;
  SeedFlag seed;
  std::string out;
};

int run_calibrate(const CalibrateArgs& a) {
  const Dataset dataset = load_dataset(a.dataset);
  const MutationOp op = a.mutation.op();
  validate_mutation(op, dataset.shape());
  const OracleSource source = a.model.open();
  auto oracle = source.factory();
  auto normal = select_normal(dataset.items, *oracle);
  if (normal.size() > a.samples) normal.resize(a.samples);
  if (normal.size() < 2) throw ValidationError("fewer than two correctly classified samples in " + a.dataset);
  const std::uint64_t seed = a.seed.resolve();
  const Calibration calibration =
      calibrate_kappa1(normal, source.factory, op, a.n, a.level, seed, a.floor, a.workers);
  const CalibrationFile file = make_calibration_file(calibration, op, a.n, seed);
  write_file(a.out, calibration_to_json(file));
  if (calibration.floored) {
    std::cerr << "warning: no label change observed on " << normal.size() << " normal samples; kappa1 set to floor "
              << format_real(calibration.kappa1) << "\n";
  }
  std::cout << "kappa1 " << format_real(calibration.kappa1) << " (kappa_nor " << format_real(calibration.normal.mean)
            << " +/- " << format_real(calibration.normal.half_width) << ", " << normal.size() << " samples)\n"
            << "wrote " << a.out << "\n";
  return kExitOk;
}

// ---- detect

struct DetectArgs {
  ModelFlags model;
  std::vector<std::string> inputs;
  std::string calibration;
  double mu = 1.2;
  double alpha = 0.05;
  double beta = 0.05;
  std::optional<double> sigma;
  std::size_t max_mutations = 2000;
  std::string cadence = "every-mutation";
  std::size_t workers = 1;
  SeedFlag seed;
  std::string out;
};

int run_detect(const DetectArgs& a) {
  const CalibrationFile calibration = calibration_from_json(read_file(a.calibration));
  DetectorConfig config;
  config.kappa1 = calibration.kappa1;
  config.mu = a.mu;
  config.alpha = a.alpha;
  config.beta = a.beta;
  config.sigma = a.sigma;
  config.mutation = calibration.mutation;
  config.max_mutations = a.max_mutations;
  config.cadence = parse_cadence(a.cadence);
  config.sprt().validate();

  std::vector<Dataset> datasets;
  for (const auto& path : a.inputs) {
    datasets.push_back(load_dataset(path));
    validate_mutation(config.mutation, datasets.back().shape());
  }
  const OracleSource source = a.model.open();

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out, std::ios::binary);
    if (!file) throw IoError("cannot open " + a.out + " for writing");
  }
  std::ostream& out = a.out.empty() ? std::cout : file;

  const std::uint64_t seed = a.seed.resolve();
  bool any_adversarial = false;
  bool any_undecided = false;
  for (std::size_t f = 0; f < datasets.size(); ++f) {
    std::vector<Sample> samples;
    for (const auto& item : datasets[f].items) samples.push_back(item.sample);
    const auto decisions = detect_batch(samples, source.factory, config, derive_seed(seed, f), a.workers);
    for (std::size_t i = 0; i < decisions.size(); ++i) {
      nlohmann::ordered_json line;
      line["input"] = a.inputs[f];
      line["index"] = i;
      const auto decision = nlohmann::ordered_json::parse(decision_to_json(decisions[i]));
      for (const auto& [key, value] : decision.items()) line[key] = value;
      out << line.dump() << "\n";
      any_adversarial = any_adversarial || decisions[i].verdict == Verdict::kAdversarial;
      any_undecided = any_undecided || decisions[i].verdict == Verdict::kUndecided;
    }
  }
  out.flush();
  if (any_adversarial) return kExitAdversarial;
  if (any_undecided) return kExitUndecided;
  return kExitOk;
}

// ---- evaluate

struct EvaluateArgs {
  std::string plan;
  std::string out_dir;
  std::vector<std::string> formats{"csv"};
  std::size_t workers = 1;
  SeedFlag seed;
};

int run_evaluate(const EvaluateArgs& a) {
  const std::string text = read_file(a.plan);
  ExperimentPlan plan = parse_plan(text, std::filesystem::path(a.plan).parent_path().string());
  if (a.seed.value) {
    plan.seed = *a.seed.value;
  } else if (!nlohmann::json::parse(text).contains("seed")) {
    plan.seed = a.seed.env().value_or(plan.seed);
  }
  std::vector<ReportFormat> formats;
  for (const auto& f : a.formats) formats.push_back(parse_report_format(f));
  const EvaluationResult result = run_evaluation(plan, a.out_dir, formats, a.workers);
  std::cout << "kappa1 " << format_real(result.calibration.kappa1) << "\n";
  for (const auto& path : result.files) std::cout << "wrote " << path << "\n";
  return kExitOk;
}

// ---- attack

struct AttackArgs {
  ModelFlags model;
  std::string dataset;
  std::string kind = "fgsm";
  double epsilon = 0.25;
  std::size_t max_attempts = 500;
  std::string out;
};

int run_attack(const AttackArgs& a) {
  const Dataset dataset = load_dataset(a.dataset);
  const AttackKind kind = parse_attack_kind(a.kind);
  const OracleSource source = a.model.open();
  AttackRun run;
  if (kind == AttackKind::kFgsm) {
    if (!source.model) throw ValidationError("fgsm needs gradients; --model must be a weights file");
    run = fgsm_dataset(*source.model, dataset, a.epsilon, a.max_attempts);
  } else {
    auto oracle = source.factory();
    run.records = find_wrongly_labeled(dataset, *oracle);
    run.attempts = dataset.size();
  }
  save_records(run.records, run.attempts, dataset, a.out);
  std::cout << run.records.size() << " of " << run.attempts << " attempts succeeded\n"
            << "wrote " << a.out << ".csv and " << manifest_path_for(a.out + ".csv") << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box adversarial input detection by model mutation sensitivity"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the MLP on a dataset and write a weights file");
  train_cmd->add_option("--dataset", train.dataset, "CSV file or idx:<images>,<labels>")->required();
  train_cmd->add_option("--hidden", train.hidden, "Hidden layer widths")->capture_default_str();
  train_cmd->add_option("--epochs", train.epochs)->capture_default_str();
  train_cmd->add_option("--lr", train.lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--batch-size", train.batch_size)->capture_default_str();
  train_cmd->add_option("--out", train.out, "Weights JSON to write")->required();
  add_seed(train_cmd, train.seed);

  CalibrateArgs calibrate;
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Estimate kappa1 on normal samples");
  add_model(calibrate_cmd, calibrate.model);
  calibrate_cmd->add_option("--dataset", calibrate.dataset, "Labeled samples")->required();
  add_mutation(calibrate_cmd, calibrate.mutation);
  calibrate_cmd->add_option("--n", calibrate.n, "Mutations per sample")->capture_default_str();
  calibrate_cmd->add_option("--samples", calibrate.samples, "Normal samples used")->capture_default_str();
  calibrate_cmd->add_option("--level", calibrate.level, "Confidence level")->capture_default_str();
  calibrate_cmd->add_option("--floor", calibrate.floor, "kappa1 used when no label change is seen")
      ->capture_default_str();
  calibrate_cmd->add_option("--workers", calibrate.workers)->capture_default_str();
  calibrate_cmd->add_option("--out", calibrate.out, "Calibration JSON to write")->required();
  add_seed(calibrate_cmd, calibrate.seed);

  DetectArgs detect;
  auto* detect_cmd = app.add_subcommand("detect", "Run the sequential detector on input samples");
  add_model(detect_cmd, detect.model);
  detect_cmd->add_option("--input", detect.inputs, "Sample CSV files")->required();
  detect_cmd->add_option("--calibration", detect.calibration, "Calibration JSON")->required();
  detect_cmd->add_option("--mu", detect.mu)->capture_default_str();
  detect_cmd->add_option("--alpha", detect.alpha)->capture_default_str();
  detect_cmd->add_option("--beta", detect.beta)->capture_default_str();
  detect_cmd->add_option("--sigma", detect.sigma, "Indifference half-width (default (mu-1)*kappa1)");
  detect_cmd->add_option("--max-mutations", detect.max_mutations)->capture_default_str();
  detect_cmd->add_option("--cadence", detect.cadence, "every-mutation or on-change")->capture_default_str();
  detect_cmd->add_option("--workers", detect.workers)->capture_default_str();
  detect_cmd->add_option("--out", detect.out, "JSON-lines output (default stdout)");
  add_seed(detect_cmd, detect.seed);

  EvaluateArgs evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Run the sensitivity and detection studies of a plan");
  evaluate_cmd->add_option("--plan", evaluate.plan, "Plan JSON")->required();
  evaluate_cmd->add_option("--out-dir", evaluate.out_dir, "Report directory")->required();
  evaluate_cmd->add_option("--format", evaluate.formats, "csv, json or markdown (repeatable)")
      ->capture_default_str();
  evaluate_cmd->add_option("--workers", evaluate.workers)->capture_default_str();
  add_seed(evaluate_cmd, evaluate.seed);

  AttackArgs attack;
  auto* attack_cmd = app.add_subcommand("attack", "Craft or mine adversarial records");
  add_model(attack_cmd, attack.model);
  attack_cmd->add_option("--dataset", attack.dataset)->required();
  attack_cmd->add_option("--kind", attack.kind, "fgsm or wrongly-labeled")->capture_default_str();
  attack_cmd->add_option("--epsilon", attack.epsilon)->capture_default_str();
  attack_cmd->add_option("--max-attempts", attack.max_attempts)->capture_default_str();
  attack_cmd->add_option("--out", attack.out, "Output prefix for <out>.csv and <out>.manifest.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return run_train(train);
    if (*calibrate_cmd) return run_calibrate(calibrate);
    if (*detect_cmd) return run_detect(detect);
    if (*evaluate_cmd) return run_evaluate(evaluate);
    if (*attack_cmd) return run_attack(attack);
  } catch (const OracleError& e) {
    std::cerr << "oracle failure: " << e.what() << "\n";
    return kExitOracle;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
