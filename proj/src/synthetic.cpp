#include "nmutant/synthetic.hpp"

#include <algorithm>

#include "nmutant/error.hpp"
#include "nmutant/rng.hpp"

namespace nmutant {

Dataset make_glyphs(const GlyphOptions& options, std::uint64_t seed) {
  if (options.height == 0 || options.width == 0) throw ValidationError("glyph images must be non-empty");
  if (!(options.low >= 0.0 && options.high <= 1.0 && options.low < options.high)) {
    throw ValidationError("glyph intensities must satisfy 0 <= low < high <= 1");
  }
  if (!(options.noise >= 0.0)) throw ValidationError("glyph noise must be non-negative");
  const Shape shape{options.height, options.width, 1};
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset dataset;
  dataset.name = "glyphs";
  dataset.num_classes = 2;
  dataset.items.reserve(options.count);
  for (std::size_t n = 0; n < options.count; ++n) {
    const std::size_t label = coin(rng) ? 1 : 0;
    std::vector<double> values(shape.size());
    for (std::size_t r = 0; r < shape.height; ++r) {
      for (std::size_t c = 0; c < shape.width; ++c) {
        const bool even = (r + c) % 2 == 0;
        const double mean = (even != (label == 1)) ? options.high : options.low;
        values[r * shape.width + c] = std::clamp(mean + options.noise * gauss(rng), 0.0, 1.0);
      }
    }
    dataset.items.push_back({Sample(shape, std::move(values)), Label{label}});
  }
  return dataset;
}

}  // namespace nmutant
