#pragma once

#include <cstdint>

#include "nmutant/tensor.hpp"

namespace nmutant {

/// Two-class "glyph" images. Class 0's mean image is a checkerboard with
/// `high` on even squares and `low` on odd ones; class 1 is its inverse. Each
/// pixel adds independent N(0, noise^2) and is clipped to [0, 1]. The class
/// overlap set by `noise` produces a few percent of inputs that a trained
/// model gets wrong, which serve as wrongly-labeled samples.
struct GlyphOptions {
  std::size_t height = 3;
  std::size_t width = 4;
  std::size_t count = 2000;
  double low = 0.1;
  double high = 0.9;
  double noise = 0.55;
};

Dataset make_glyphs(const GlyphOptions& options, std::uint64_t seed);

}  // namespace nmutant
