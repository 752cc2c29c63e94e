#include "nmutant/sensitivity.hpp"

#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "nmutant/error.hpp"
#include "nmutant/parallel.hpp"
#include "nmutant/text.hpp"

namespace nmutant {

double z_value(double confidence_level) {
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) {
    throw ValidationError("confidence level must lie in (0, 1)");
  }
  const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, 1.0 - (1.0 - confidence_level) / 2.0);
}

SensitivityReport estimate_kappa(const Sample& x, Oracle& oracle, const MutationOp& op, std::size_t n,
                                 std::uint64_t seed) {
  if (n == 0) throw ValidationError("sensitivity needs at least one mutation");
  MutationStream stream(x, op, seed);
  SensitivityReport report;
  report.base_label = oracle.classify(x);
  for (std::size_t k = 0; k < n; ++k) {
    if (oracle.classify(stream.next()) != report.base_label) ++report.label_changes;
  }
  report.mutations = n;
  report.kappa = static_cast<double>(report.label_changes) / static_cast<double>(n);
  return report;
}

AggregateKappa aggregate_reports(std::vector<SensitivityReport> reports, double confidence_level) {
  if (reports.size() < 2) throw ValidationError("aggregating sensitivity needs at least two samples");
  const double z = z_value(confidence_level);
  const double m = static_cast<double>(reports.size());
  double sum = 0.0;
  for (const auto& r : reports) sum += r.kappa;
  const double mean = sum / m;
  double squares = 0.0;
  for (const auto& r : reports) squares += (r.kappa - mean) * (r.kappa - mean);
  const double sd = std::sqrt(squares / (m - 1.0));

  AggregateKappa agg;
  agg.mean = mean;
  agg.half_width = z * sd / std::sqrt(m);
  agg.confidence_level = confidence_level;
  agg.per_sample = std::move(reports);
  return agg;
}

AggregateKappa aggregate(std::span<const Sample> samples, const OracleFactory& oracle, const MutationOp& op,
                         std::size_t n, double confidence_level, std::uint64_t seed, std::size_t workers) {
  if (samples.size() < 2) throw ValidationError("aggregating sensitivity needs at least two samples");
  auto reports = parallel_map<SensitivityReport>(samples.size(), workers, [&] {
    return [&, handle = oracle()](std::size_t i) {
      return estimate_kappa(samples[i], *handle, op, n, derive_seed(seed, i));
    };
  });
  return aggregate_reports(std::move(reports), confidence_level);
}

Calibration calibrate_kappa1(std::span<const LabeledSample> normal_samples, const OracleFactory& oracle,
                             const MutationOp& op, std::size_t n, double confidence_level, std::uint64_t seed,
                             double floor, std::size_t workers) {
  if (!(floor > 0.0)) throw ValidationError("kappa1 floor must be positive");
  std::vector<Sample> samples;
  samples.reserve(normal_samples.size());
  for (const auto& item : normal_samples) samples.push_back(item.sample);

  Calibration result;
  result.normal = aggregate(samples, oracle, op, n, confidence_level, seed, workers);
  for (std::size_t i = 0; i < normal_samples.size(); ++i) {
    if (result.normal.per_sample[i].base_label != normal_samples[i].true_label) {
      throw ValidationError("calibration sample " + std::to_string(i) +
                            " is misclassified by the oracle; calibrate on correctly classified samples only");
    }
  }
  result.kappa1 = result.normal.upper();
  if (result.kappa1 <= 0.0) {
    result.kappa1 = floor;
    result.floored = true;
  }
  return result;
}

std::vector<LabeledSample> select_normal(std::span<const LabeledSample> samples, Oracle& oracle) {
  std::vector<LabeledSample> normal;
  for (const auto& item : samples) {
    if (oracle.classify(item.sample) == item.true_label) normal.push_back(item);
  }
  return normal;
}

double distance_ratio(const AggregateKappa& normal, const AggregateKappa& adversarial) {
  if (!(normal.mean > 0.0)) throw ValidationError("distance ratio is undefined when kappa_nor is zero");
  return adversarial.mean / normal.mean;
}

void write_kappa_csv(std::ostream& out, const AggregateKappa& aggregate) {
  out << "id,base_label,n,c,kappa,half_width\n";
  std::size_t total_n = 0;
  std::size_t total_c = 0;
  for (std::size_t i = 0; i < aggregate.per_sample.size(); ++i) {
    const auto& r = aggregate.per_sample[i];
    out << i << ',' << r.base_label.index << ',' << r.mutations << ',' << r.label_changes << ','
        << format_real(r.kappa) << ",\n";
    total_n += r.mutations;
    total_c += r.label_changes;
  }
  out << "summary,," << total_n << ',' << total_c << ',' << format_real(aggregate.mean) << ','
      << format_real(aggregate.half_width) << '\n';
}

}  // namespace nmutant
