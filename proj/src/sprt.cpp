#include "nmutant/sprt.hpp"

#include <cmath>

#include <json.hpp>

#include "nmutant/error.hpp"
#include "nmutant/parallel.hpp"

namespace nmutant {

void SprtParameters::validate() const {
  if (!(p0 > 0.0)) throw ValidationError("SPRT needs p0 > 0 (kappa1 too small or sigma too large)");
  if (!(p1 < 1.0)) throw ValidationError("SPRT needs p1 < 1");
  if (!(p0 < p1)) throw ValidationError("SPRT needs p0 < p1 (mu must exceed 1)");
  if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0)) {
    throw ValidationError("alpha and beta must lie in (0, 1)");
  }
  if (!(alpha + beta < 1.0)) throw ValidationError("alpha + beta must be below 1");
}

double SprtParameters::log_accept_h1() const { return std::log((1.0 - beta) / alpha); }
double SprtParameters::log_accept_h0() const { return std::log(beta / (1.0 - alpha)); }

double log_probability_ratio(std::size_t c, std::size_t n, double p0, double p1) {
  if (!(p0 > 0.0 && p0 < p1 && p1 < 1.0)) throw ValidationError("log ratio needs 0 < p0 < p1 < 1");
  if (c > n) throw ValidationError("label changes cannot exceed mutations");
  const double per_change = std::log(p1 / p0);
  const double per_keep = std::log1p(-p1) - std::log1p(-p0);
  return static_cast<double>(c) * per_change + static_cast<double>(n - c) * per_keep;
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kAdversarial: return "adversarial";
    case Verdict::kNormal: return "normal";
    case Verdict::kUndecided: return "undecided";
  }
  return "undecided";
}

std::string to_string(Cadence cadence) {
  return cadence == Cadence::kEveryMutation ? "every-mutation" : "on-change";
}

Verdict parse_verdict(const std::string& text) {
  if (text == "adversarial") return Verdict::kAdversarial;
  if (text == "normal") return Verdict::kNormal;
  if (text == "undecided") return Verdict::kUndecided;
  throw FormatError("unknown verdict '" + text + "'");
}

Cadence parse_cadence(const std::string& text) {
  if (text == "every-mutation") return Cadence::kEveryMutation;
  if (text == "on-change") return Cadence::kOnChange;
  throw ValidationError("cadence must be every-mutation or on-change, got '" + text + "'");
}

SprtParameters DetectorConfig::sprt() const {
  if (!(mu > 1.0)) throw ValidationError("mu must exceed 1");
  if (!(kappa1 > 0.0)) throw ValidationError("kappa1 must be positive");
  if (max_mutations == 0) throw ValidationError("mutation budget must be at least 1");
  const double center = mu * kappa1;
  const double s = sigma_value();
  if (!(s > 0.0)) throw ValidationError("sigma must be positive");
  SprtParameters params{center - s, center + s, alpha, beta};
  params.validate();
  return params;
}

Decision run_sprt(const SprtParameters& params, std::size_t max_mutations, Cadence cadence,
                  const std::function<bool()>& next_trial, const SprtObserver& observer) {
  params.validate();
  const double upper = params.log_accept_h1();
  const double lower = params.log_accept_h0();
  Decision decision;
  std::size_t n = 0;
  std::size_t c = 0;
  double log_ratio = 0.0;
  while (n < max_mutations) {
    const bool changed = next_trial();
    ++n;
    if (changed) ++c;
    log_ratio = log_probability_ratio(c, n, params.p0, params.p1);
    const bool evaluate = cadence == Cadence::kEveryMutation || changed;
    if (observer) observer(SprtStep{n, c, log_ratio, evaluate});
    if (!evaluate) continue;
    if (log_ratio >= upper) {
      decision.verdict = Verdict::kAdversarial;
      decision.error_bound = params.beta;
      break;
    }
    if (log_ratio <= lower) {
      decision.verdict = Verdict::kNormal;
      decision.error_bound = params.alpha;
      break;
    }
  }
  decision.mutations = n;
  decision.label_changes = c;
  decision.log_ratio = log_ratio;
  return decision;
}

Decision detect(const Sample& x, Oracle& oracle, const DetectorConfig& config, std::uint64_t seed,
                const SprtObserver& observer) {
  const SprtParameters params = config.sprt();
  MutationStream stream(x, config.mutation, seed);
  const Label base = oracle.classify(x);
  return run_sprt(
      params, config.max_mutations, config.cadence, [&] { return oracle.classify(stream.next()) != base; },
      observer);
}

std::vector<Decision> detect_batch(std::span<const Sample> samples, const OracleFactory& oracle,
                                   const DetectorConfig& config, std::uint64_t seed, std::size_t workers) {
  if (samples.empty()) return {};
  config.sprt();
  return parallel_map<Decision>(samples.size(), workers, [&] {
    return [&, handle = oracle()](std::size_t i) { return detect(samples[i], *handle, config, derive_seed(seed, i)); };
  });
}

std::string decision_to_json(const Decision& decision) {
  nlohmann::ordered_json doc;
  doc["verdict"] = to_string(decision.verdict);
  if (decision.error_bound) doc["error_bound"] = *decision.error_bound;
  else doc["error_bound"] = nullptr;
  doc["mutations"] = decision.mutations;
  doc["label_changes"] = decision.label_changes;
  doc["log_ratio"] = decision.log_ratio;
  return doc.dump();
}

Decision decision_from_json(const std::string& line) {
  try {
    const auto doc = nlohmann::json::parse(line);
    Decision decision;
    decision.verdict = parse_verdict(doc.at("verdict").get<std::string>());
    if (!doc.at("error_bound").is_null()) decision.error_bound = doc["error_bound"].get<double>();
    decision.mutations = doc.at("mutations").get<std::size_t>();
    decision.label_changes = doc.at("label_changes").get<std::size_t>();
    decision.log_ratio = doc.at("log_ratio").get<double>();
    return decision;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed decision: ") + e.what());
  }
}

}  // namespace nmutant
