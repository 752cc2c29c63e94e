#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nmutant/mlp.hpp"
#include "nmutant/oracle.hpp"
#include "nmutant/tensor.hpp"

namespace nmutant {

enum class AttackKind { kFgsm, kWronglyLabeled };

std::string to_string(AttackKind kind);
AttackKind parse_attack_kind(const std::string& text);

/// An input the model labels differently from its true label.
struct AdversarialRecord {
  LabeledSample original;
  Sample adversarial;
  AttackKind attack = AttackKind::kFgsm;
  double epsilon = 0.0;  // fgsm only
  Label adversarial_label;
  std::size_t source_index = 0;  // position of `original` in its dataset
};

/// Single-step fast gradient sign attack on softmax cross-entropy:
/// clip(x + epsilon * sign(grad_x L(x, true_label))), with sign(0) = 0.
/// Returns nullopt when the label does not change.
std::optional<AdversarialRecord> fgsm(const MlpModel& model, const LabeledSample& x, double epsilon,
                                      std::size_t source_index = 0);

/// The perturbed sample without the success check.
Sample fgsm_perturb(const MlpModel& model, const LabeledSample& x, double epsilon);

struct AttackRun {
  std::vector<AdversarialRecord> records;
  std::size_t attempts = 0;
};

/// Attacks up to `max_attempts` correctly classified items, in dataset order.
AttackRun fgsm_dataset(const MlpModel& model, const Dataset& dataset, double epsilon,
                       std::size_t max_attempts = SIZE_MAX);

/// Items whose oracle label differs from the true label.
std::vector<AdversarialRecord> find_wrongly_labeled(const Dataset& dataset, Oracle& oracle);

/// Writes `<prefix>.csv` (adversarial samples with their true labels, in the
/// dataset CSV format) and `<prefix>.manifest.json` (attack, epsilon,
/// attempts, per-record source index and adversarial label).
void save_records(const std::vector<AdversarialRecord>& records, std::size_t attempts, const Dataset& source,
                  const std::string& prefix);

std::string manifest_path_for(const std::string& csv_path);

struct RecordManifest {
  AttackKind attack = AttackKind::kFgsm;
  double epsilon = 0.0;
  std::size_t attempts = 0;
  std::vector<std::size_t> indices;
  std::vector<Label> adversarial_labels;
};

RecordManifest load_manifest(const std::string& path);

}  // namespace nmutant
