#pragma once

#include <cstdint>
#include <string>

#include "nmutant/mutation.hpp"
#include "nmutant/sensitivity.hpp"

namespace nmutant {

struct CalibrationFile {
  double kappa1 = 0.0;
  MutationOp mutation = PixelMutation{1};
  double level = 0.99;
  std::size_t mutations_per_sample = 0;
  std::size_t samples = 0;
  double kappa_nor_mean = 0.0;
  double half_width = 0.0;
  bool floored = false;
  std::uint64_t seed = 0;

  friend bool operator==(const CalibrationFile&, const CalibrationFile&) = default;
};

CalibrationFile make_calibration_file(const Calibration& calibration, const MutationOp& op, std::size_t n,
                                      std::uint64_t seed);

std::string calibration_to_json(const CalibrationFile& file);
CalibrationFile calibration_from_json(const std::string& text);

std::string mutation_to_json(const MutationOp& op);
MutationOp mutation_from_json(const std::string& text);

}  // namespace nmutant
