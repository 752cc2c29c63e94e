#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "nmutant/rng.hpp"
#include "nmutant/tensor.hpp"

namespace nmutant {

// Re-draws `step_size` distinct coordinates uniformly from [0, 1].
struct PixelMutation {
  std::size_t step_size = 1;
  friend bool operator==(const PixelMutation&, const PixelMutation&) = default;
};

// Zeroes a uniformly placed height x width rectangle across all channels.
struct OcclusionMutation {
  std::size_t height = 1;
  std::size_t width = 1;
  friend bool operator==(const OcclusionMutation&, const OcclusionMutation&) = default;
};

// Adds one global offset drawn from U(-delta_max, +delta_max), then clips.
struct LightingMutation {
  double delta_max = 0.1;
  friend bool operator==(const LightingMutation&, const LightingMutation&) = default;
};

using MutationOp = std::variant<PixelMutation, OcclusionMutation, LightingMutation>;

// Throws ValidationError if `op` cannot be applied to samples of `shape`.
void validate_mutation(const MutationOp& op, const Shape& shape);

std::string describe(const MutationOp& op);

Sample mutate_pixels(const Sample& x, std::size_t step_size, Rng& rng);
Sample mutate_occlusion(const Sample& x, std::size_t height, std::size_t width, Rng& rng);
Sample mutate_lighting(const Sample& x, double delta_max, Rng& rng);

// Deterministic cores of the random operators.
Sample occlude_at(const Sample& x, std::size_t height, std::size_t width, std::size_t row, std::size_t col);
Sample shift_lighting(const Sample& x, double delta);

Sample apply_mutation(const MutationOp& op, const Sample& x, Rng& rng);

/// Infinite i.i.d. sequence of mutations of one base sample. Every mutation
/// starts from the base; nothing accumulates across calls.
class MutationStream {
 public:
  MutationStream(Sample base, MutationOp op, std::uint64_t seed);

  Sample next();
  const Sample& base() const { return base_; }
  const MutationOp& op() const { return op_; }

 private:
  Sample base_;
  MutationOp op_;
  Rng rng_;
};

}  // namespace nmutant
