#include "nmutant/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "nmutant/error.hpp"

namespace nmutant {

std::string to_string(const Shape& shape) {
  return std::to_string(shape.height) + "x" + std::to_string(shape.width) + "x" +
         std::to_string(shape.channels);
}

Sample::Sample(Shape shape, std::vector<double> values) : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.size()) {
    throw ValidationError("sample of shape " + to_string(shape_) + " needs " +
                          std::to_string(shape_.size()) + " values, got " +
                          std::to_string(values_.size()));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double v = values_[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("sample value " + std::to_string(v) + " at coordinate " +
                            std::to_string(i) + " is outside [0, 1]");
    }
  }
}

Shape Dataset::shape() const { return items.empty() ? Shape{} : items.front().sample.shape(); }

void Dataset::validate() const {
  if (items.empty()) return;
  const Shape first = items.front().sample.shape();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].sample.shape() != first) {
      throw ValidationError("item " + std::to_string(i) + " has shape " +
                            to_string(items[i].sample.shape()) + ", expected " + to_string(first));
    }
    if (items[i].true_label.index >= num_classes) {
      throw ValidationError("item " + std::to_string(i) + " has label " +
                            std::to_string(items[i].true_label.index) + " but the dataset has " +
                            std::to_string(num_classes) + " classes");
    }
  }
}

Sample clip(const Shape& shape, std::vector<double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) {
      throw ValidationError("cannot clip NaN at coordinate " + std::to_string(i));
    }
    values[i] = std::clamp(values[i], 0.0, 1.0);
  }
  return Sample(shape, std::move(values));
}

namespace {

void require_same_shape(const Sample& a, const Sample& b) {
  if (a.shape() != b.shape()) {
    throw ValidationError("shape mismatch: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

}  // namespace

double linf_distance(const Sample& a, const Sample& b) {
  require_same_shape(a, b);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

std::size_t count_differing_pixels(const Sample& a, const Sample& b) {
  require_same_shape(a, b);
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += (a[i] != b[i]) ? 1 : 0;
  return n;
}

}  // namespace nmutant
