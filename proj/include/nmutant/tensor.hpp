#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace nmutant {

struct Shape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t size() const { return height * width * channels; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& shape);

struct Label {
  std::size_t index = 0;

  friend auto operator<=>(const Label&, const Label&) = default;
};

/// A classifier input: an H x W x C tensor of reals in [0, 1], stored
/// row-major in (H, W, C) order. Construction validates both invariants, so a
/// Sample that exists is always well-formed.
class Sample {
 public:
  Sample() = default;
  Sample(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const Sample&, const Sample&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

struct LabeledSample {
  Sample sample;
  Label true_label;
};

struct Dataset {
  std::string name;
  std::size_t num_classes = 0;
  std::vector<LabeledSample> items;

  bool empty() const { return items.empty(); }
  std::size_t size() const { return items.size(); }
  Shape shape() const;

  // Throws ValidationError unless all samples share one shape and every label
  // is below num_classes.
  void validate() const;
};

/// Clamps raw values into [0, 1]. NaN is rejected.
Sample clip(const Shape& shape, std::vector<double> values);

double linf_distance(const Sample& a, const Sample& b);
std::size_t count_differing_pixels(const Sample& a, const Sample& b);

}  // namespace nmutant
