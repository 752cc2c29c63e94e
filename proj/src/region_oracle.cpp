#include "nmutant/region_oracle.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "nmutant/error.hpp"
#include "nmutant/rng.hpp"

namespace nmutant {

RegionOracle::RegionOracle(std::vector<std::size_t> resolution, std::vector<Label> cell_labels,
                           std::size_t num_classes)
    : resolution_(std::move(resolution)), cell_labels_(std::move(cell_labels)), num_classes_(num_classes) {
  if (resolution_.empty()) throw ValidationError("region oracle needs at least one axis");
  std::size_t cells = 1;
  for (std::size_t r : resolution_) {
    if (r == 0) throw ValidationError("grid resolution must be positive");
    cells *= r;
  }
  if (cell_labels_.size() != cells) {
    throw ValidationError("grid has " + std::to_string(cells) + " cells but " +
                          std::to_string(cell_labels_.size()) + " labels were given");
  }
  for (const auto& label : cell_labels_) {
    if (label.index >= num_classes_) throw ValidationError("cell label out of range");
  }
}

std::size_t RegionOracle::cell_along(std::size_t axis, double coordinate) const {
  const auto cells = static_cast<double>(resolution_[axis]);
  const double scaled = std::ceil(coordinate * cells) - 1.0;
  if (scaled <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(scaled), resolution_[axis] - 1);
}

Label RegionOracle::label_of_cell(const std::vector<std::size_t>& cell) const {
  std::size_t index = 0;
  for (std::size_t k = 0; k < resolution_.size(); ++k) index = index * resolution_[k] + cell[k];
  return cell_labels_[index];
}

Label RegionOracle::classify(const Sample& point) {
  if (point.size() != dimension()) {
    throw ValidationError("point has " + std::to_string(point.size()) + " coordinates, region oracle is " +
                          std::to_string(dimension()) + "-dimensional");
  }
  std::vector<std::size_t> cell(dimension());
  for (std::size_t k = 0; k < dimension(); ++k) cell[k] = cell_along(k, point[k]);
  return label_of_cell(cell);
}

RegionOracle random_region_oracle(std::vector<std::size_t> resolution, std::size_t num_classes,
                                  std::uint64_t seed) {
  const std::size_t cells =
      std::accumulate(resolution.begin(), resolution.end(), std::size_t{1}, std::multiplies<>());
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, num_classes - 1);
  std::vector<Label> labels(cells);
  for (auto& label : labels) label = Label{pick(rng)};
  return RegionOracle(std::move(resolution), std::move(labels), num_classes);
}

}  // namespace nmutant
