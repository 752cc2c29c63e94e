#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "nmutant/mutation.hpp"
#include "nmutant/oracle.hpp"

namespace nmutant {

/// Sensitivity of one sample: the fraction of n mutations whose label differs
/// from the label of the unmutated sample.
struct SensitivityReport {
  double kappa = 0.0;  // label_changes / mutations, divided once
  std::size_t mutations = 0;
  std::size_t label_changes = 0;
  Label base_label;
};

struct AggregateKappa {
  double mean = 0.0;
  double half_width = 0.0;
  double confidence_level = 0.99;
  std::vector<SensitivityReport> per_sample;

  double upper() const { return mean + half_width; }
};

// Two-sided standard normal quantile for a confidence level, e.g. 0.99 -> 2.5758.
double z_value(double confidence_level);

/// f(x) is queried once; exactly n mutations are then drawn from a stream
/// seeded with `seed` and compared against it.
SensitivityReport estimate_kappa(const Sample& x, Oracle& oracle, const MutationOp& op, std::size_t n,
                                 std::uint64_t seed);

/// Mean of per-sample kappa with a normal-approximation interval
/// z * s / sqrt(m) over the m per-sample values (s = sample std deviation).
AggregateKappa aggregate_reports(std::vector<SensitivityReport> reports, double confidence_level);

/// Sample i is estimated with seed derive_seed(seed, i).
AggregateKappa aggregate(std::span<const Sample> samples, const OracleFactory& oracle, const MutationOp& op,
                         std::size_t n, double confidence_level, std::uint64_t seed, std::size_t workers = 1);

struct Calibration {
  double kappa1 = 0.0;
  AggregateKappa normal;
  bool floored = false;  // no label change was observed; kappa1 is the floor
};

constexpr double kDefaultKappaFloor = 1e-4;

/// kappa1 = upper bound of the kappa_nor interval. Every sample must be
/// classified as its true label (misclassified samples are adversarial by
/// definition); use select_normal() to filter first.
Calibration calibrate_kappa1(std::span<const LabeledSample> normal_samples, const OracleFactory& oracle,
                             const MutationOp& op, std::size_t n, double confidence_level, std::uint64_t seed,
                             double floor = kDefaultKappaFloor, std::size_t workers = 1);

std::vector<LabeledSample> select_normal(std::span<const LabeledSample> samples, Oracle& oracle);

/// kappa_adv / kappa_nor.
double distance_ratio(const AggregateKappa& normal, const AggregateKappa& adversarial);

// Per-sample rows (id, base_label, n, c, kappa) plus a trailing summary row.
void write_kappa_csv(std::ostream& out, const AggregateKappa& aggregate);

}  // namespace nmutant
