#include "nmutant/mutation.hpp"

#include <algorithm>
#include <vector>

#include "nmutant/error.hpp"
#include "nmutant/text.hpp"

namespace nmutant {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<double> copy_values(const Sample& x) { return {x.values().begin(), x.values().end()}; }

}  // namespace

void validate_mutation(const MutationOp& op, const Shape& shape) {
  std::visit(Overloaded{
                 [&](const PixelMutation& m) {
                   if (m.step_size == 0) throw ValidationError("pixel step size must be at least 1");
                   if (m.step_size > shape.size()) {
                     throw ValidationError("pixel step size " + std::to_string(m.step_size) + " exceeds the " +
                                           std::to_string(shape.size()) + " coordinates of a sample");
                   }
                 },
                 [&](const OcclusionMutation& m) {
                   if (m.height == 0 || m.width == 0) throw ValidationError("occlusion rectangle must be non-empty");
                   if (m.height > shape.height || m.width > shape.width) {
                     throw ValidationError("occlusion rectangle " + std::to_string(m.height) + "x" +
                                           std::to_string(m.width) + " does not fit a " + to_string(shape) +
                                           " sample");
                   }
                 },
                 [&](const LightingMutation& m) {
                   if (!(m.delta_max > 0.0 && m.delta_max <= 1.0)) {
                     throw ValidationError("lighting delta must lie in (0, 1]");
                   }
                 },
             },
             op);
}

std::string describe(const MutationOp& op) {
  return std::visit(Overloaded{
                        [](const PixelMutation& m) { return "pixel:" + std::to_string(m.step_size); },
                        [](const OcclusionMutation& m) {
                          return "occlusion:" + std::to_string(m.height) + "x" + std::to_string(m.width);
                        },
                        [](const LightingMutation& m) { return "lighting:" + format_real(m.delta_max); },
                    },
                    op);
}

Sample mutate_pixels(const Sample& x, std::size_t step_size, Rng& rng) {
  validate_mutation(PixelMutation{step_size}, x.shape());
  const std::size_t total = x.size();
  // Floyd's sampling: a uniformly random step_size-subset of [0, total).
  std::vector<std::size_t> chosen;
  chosen.reserve(step_size);
  for (std::size_t j = total - step_size; j < total; ++j) {
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    const bool seen = std::find(chosen.begin(), chosen.end(), t) != chosen.end();
    chosen.push_back(seen ? j : t);
  }
  auto values = copy_values(x);
  for (std::size_t index : chosen) values[index] = uniform01(rng);
  return Sample(x.shape(), std::move(values));
}

Sample occlude_at(const Sample& x, std::size_t height, std::size_t width, std::size_t row, std::size_t col) {
  const Shape& s = x.shape();
  if (row + height > s.height || col + width > s.width) throw ValidationError("occlusion outside the image");
  auto values = copy_values(x);
  for (std::size_t r = row; r < row + height; ++r) {
    for (std::size_t c = col; c < col + width; ++c) {
      for (std::size_t ch = 0; ch < s.channels; ++ch) values[(r * s.width + c) * s.channels + ch] = 0.0;
    }
  }
  return Sample(s, std::move(values));
}

Sample mutate_occlusion(const Sample& x, std::size_t height, std::size_t width, Rng& rng) {
  validate_mutation(OcclusionMutation{height, width}, x.shape());
  const std::size_t row = std::uniform_int_distribution<std::size_t>(0, x.shape().height - height)(rng);
  const std::size_t col = std::uniform_int_distribution<std::size_t>(0, x.shape().width - width)(rng);
  return occlude_at(x, height, width, row, col);
}

Sample shift_lighting(const Sample& x, double delta) {
  auto values = copy_values(x);
  for (double& v : values) v += delta;
  return clip(x.shape(), std::move(values));
}

Sample mutate_lighting(const Sample& x, double delta_max, Rng& rng) {
  validate_mutation(LightingMutation{delta_max}, x.shape());
  const double delta = std::uniform_real_distribution<double>(-delta_max, delta_max)(rng);
  return shift_lighting(x, delta);
}

Sample apply_mutation(const MutationOp& op, const Sample& x, Rng& rng) {
  return std::visit(Overloaded{
                        [&](const PixelMutation& m) { return mutate_pixels(x, m.step_size, rng); },
                        [&](const OcclusionMutation& m) { return mutate_occlusion(x, m.height, m.width, rng); },
                        [&](const LightingMutation& m) { return mutate_lighting(x, m.delta_max, rng); },
                    },
                    op);
}

MutationStream::MutationStream(Sample base, MutationOp op, std::uint64_t seed)
    : base_(std::move(base)), op_(op), rng_(seed) {
  validate_mutation(op_, base_.shape());
}

Sample MutationStream::next() { return apply_mutation(op_, base_, rng_); }

}  // namespace nmutant
