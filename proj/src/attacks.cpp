#include "nmutant/attacks.hpp"

#include <json.hpp>

#include "nmutant/dataset_io.hpp"
#include "nmutant/error.hpp"
#include "nmutant/text.hpp"

namespace nmutant {

std::string to_string(AttackKind kind) { return kind == AttackKind::kFgsm ? "fgsm" : "wrongly-labeled"; }

AttackKind parse_attack_kind(const std::string& text) {
  if (text == "fgsm") return AttackKind::kFgsm;
  if (text == "wrongly-labeled") return AttackKind::kWronglyLabeled;
  throw ValidationError("unknown attack '" + text + "' (expected fgsm or wrongly-labeled)");
}

Sample fgsm_perturb(const MlpModel& model, const LabeledSample& x, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ValidationError("fgsm epsilon must lie in (0, 1]");
  const auto gradient = mlp_backward(model, x.sample, x.true_label);
  std::vector<double> values(x.sample.values().begin(), x.sample.values().end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (gradient[i] > 0.0) values[i] += epsilon;
    else if (gradient[i] < 0.0) values[i] -= epsilon;
  }
  return clip(x.sample.shape(), std::move(values));
}

std::optional<AdversarialRecord> fgsm(const MlpModel& model, const LabeledSample& x, double epsilon,
                                      std::size_t source_index) {
  Sample perturbed = fgsm_perturb(model, x, epsilon);
  const Label label = mlp_forward(model, perturbed).label;
  if (label == x.true_label) return std::nullopt;
  return AdversarialRecord{x, std::move(perturbed), AttackKind::kFgsm, epsilon, label, source_index};
}

AttackRun fgsm_dataset(const MlpModel& model, const Dataset& dataset, double epsilon, std::size_t max_attempts) {
  AttackRun run;
  for (std::size_t i = 0; i < dataset.size() && run.attempts < max_attempts; ++i) {
    const auto& item = dataset.items[i];
    if (mlp_forward(model, item.sample).label != item.true_label) continue;
    ++run.attempts;
    if (auto record = fgsm(model, item, epsilon, i)) run.records.push_back(std::move(*record));
  }
  return run;
}

std::vector<AdversarialRecord> find_wrongly_labeled(const Dataset& dataset, Oracle& oracle) {
  std::vector<AdversarialRecord> found;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& item = dataset.items[i];
    const Label label = oracle.classify(item.sample);
    if (label != item.true_label) {
      found.push_back(AdversarialRecord{item, item.sample, AttackKind::kWronglyLabeled, 0.0, label, i});
    }
  }
  return found;
}

std::string manifest_path_for(const std::string& csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() && csv_path.compare(csv_path.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return csv_path.substr(0, csv_path.size() - suffix.size()) + ".manifest.json";
  }
  return csv_path + ".manifest.json";
}

void save_records(const std::vector<AdversarialRecord>& records, std::size_t attempts, const Dataset& source,
                  const std::string& prefix) {
  Dataset out;
  out.num_classes = source.num_classes;
  out.name = (source.name.empty() ? std::string("dataset") : source.name);
  nlohmann::ordered_json manifest;
  const AttackKind kind = records.empty() ? AttackKind::kFgsm : records.front().attack;
  manifest["attack"] = to_string(kind);
  manifest["epsilon"] = records.empty() ? 0.0 : records.front().epsilon;
  manifest["attempts"] = attempts;
  manifest["count"] = records.size();
  auto entries = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    out.items.push_back({r.adversarial, r.original.true_label});
    nlohmann::ordered_json entry;
    entry["index"] = r.source_index;
    entry["adversarial_label"] = r.adversarial_label.index;
    entries.push_back(std::move(entry));
  }
  manifest["records"] = std::move(entries);
  std::string csv = format_csv(out);
  if (records.empty()) {
    // Header-only file; keep the shape so an empty record set stays loadable.
    csv = "# name=" + out.name + " shape=" + to_string(source.shape()) +
          " classes=" + std::to_string(source.num_classes) + "\n";
  }
  write_file(prefix + ".csv", csv);
  write_file(prefix + ".manifest.json", manifest.dump(1) + "\n");
}

RecordManifest load_manifest(const std::string& path) {
  try {
    const auto doc = nlohmann::json::parse(read_file(path));
    RecordManifest m;
    m.attack = parse_attack_kind(doc.at("attack").get<std::string>());
    m.epsilon = doc.at("epsilon").get<double>();
    m.attempts = doc.at("attempts").get<std::size_t>();
    for (const auto& entry : doc.at("records")) {
      m.indices.push_back(entry.at("index").get<std::size_t>());
      m.adversarial_labels.push_back(Label{entry.at("adversarial_label").get<std::size_t>()});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed manifest " + path + ": " + e.what());
  }
}

}  // namespace nmutant
