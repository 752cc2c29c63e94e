#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nmutant/mutation.hpp"
#include "nmutant/oracle.hpp"

namespace nmutant {

/// Wald SPRT between H0: p <= p0 and H1: p >= p1 for i.i.d. Bernoulli trials
/// (here: "this mutation changed the label").
struct SprtParameters {
  double p0 = 0.0;
  double p1 = 0.0;
  double alpha = 0.05;
  double beta = 0.05;

  // Throws ValidationError unless 0 < p0 < p1 < 1, alpha, beta in (0, 1)
  // and alpha + beta < 1.
  void validate() const;
  double log_accept_h1() const;  // log((1 - beta) / alpha)
  double log_accept_h0() const;  // log(beta / (1 - alpha))
};

/// log of p1^c (1-p1)^(n-c) / (p0^c (1-p0)^(n-c)), computed in the log domain.
double log_probability_ratio(std::size_t c, std::size_t n, double p0, double p1);

enum class Cadence {
  kEveryMutation,  // test both thresholds after every mutation
  kOnChange,       // test only right after a label change
};

enum class Verdict { kAdversarial, kNormal, kUndecided };

std::string to_string(Verdict verdict);
std::string to_string(Cadence cadence);
Verdict parse_verdict(const std::string& text);
Cadence parse_cadence(const std::string& text);

/// Detector parameters. The hypotheses are kappa(x) <= mu * kappa1 against
/// kappa(x) > mu * kappa1 with indifference half-width sigma around
/// mu * kappa1; sigma defaults to (mu - 1) * kappa1, which puts p0 at kappa1.
struct DetectorConfig {
  double kappa1 = 0.0;
  double mu = 1.2;
  double alpha = 0.05;
  double beta = 0.05;
  std::optional<double> sigma;
  MutationOp mutation = PixelMutation{1};
  std::size_t max_mutations = 2000;
  Cadence cadence = Cadence::kEveryMutation;

  double sigma_value() const { return sigma.value_or((mu - 1.0) * kappa1); }
  // Validated p0 = mu*kappa1 - sigma, p1 = mu*kappa1 + sigma.
  SprtParameters sprt() const;
};

struct Decision {
  Verdict verdict = Verdict::kUndecided;
  std::optional<double> error_bound;  // beta for adversarial, alpha for normal
  std::size_t mutations = 0;
  std::size_t label_changes = 0;
  double log_ratio = 0.0;

  friend bool operator==(const Decision&, const Decision&) = default;
};

struct SprtStep {
  std::size_t mutations = 0;
  std::size_t label_changes = 0;
  double log_ratio = 0.0;
  bool evaluated = false;  // thresholds were tested at this step
};

using SprtObserver = std::function<void(const SprtStep&)>;

/// Runs the sequential test on an abstract trial source; `next_trial`
/// returns true when the trial is a label change.
Decision run_sprt(const SprtParameters& params, std::size_t max_mutations, Cadence cadence,
                  const std::function<bool()>& next_trial, const SprtObserver& observer = {});

/// Sequential mutation testing of one input.
Decision detect(const Sample& x, Oracle& oracle, const DetectorConfig& config, std::uint64_t seed,
                const SprtObserver& observer = {});

/// Sample i uses seed derive_seed(seed, i); results are in input order.
std::vector<Decision> detect_batch(std::span<const Sample> samples, const OracleFactory& oracle,
                                   const DetectorConfig& config, std::uint64_t seed, std::size_t workers = 1);

// {"verdict":..., "error_bound":..., "mutations":..., "label_changes":..., "log_ratio":...}
std::string decision_to_json(const Decision& decision);
Decision decision_from_json(const std::string& line);

}  // namespace nmutant
