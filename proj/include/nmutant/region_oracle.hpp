#pragma once

#include <cstdint>
#include <vector>

#include "nmutant/oracle.hpp"

namespace nmutant {

/// Piecewise-constant classifier over the unit cube [0,1]^d, partitioned into
/// a regular grid with `resolution[k]` cells along axis k. It stands in for
/// the input space of a trained model where every region's label is known,
/// so sensitivity can be computed exactly rather than estimated.
///
/// Cells are indexed row-major with axis 0 most significant. A coordinate on
/// a cell boundary belongs to the lower-index cell.
class RegionOracle final : public Oracle {
 public:
  RegionOracle(std::vector<std::size_t> resolution, std::vector<Label> cell_labels, std::size_t num_classes);

  std::size_t num_classes() const override { return num_classes_; }
  std::size_t dimension() const { return resolution_.size(); }
  const std::vector<std::size_t>& resolution() const { return resolution_; }
  const std::vector<Label>& cell_labels() const { return cell_labels_; }

  Label classify(const Sample& point) override;

  // Cell coordinate of a value along one axis.
  std::size_t cell_along(std::size_t axis, double coordinate) const;
  Label label_of_cell(const std::vector<std::size_t>& cell) const;

 private:
  std::vector<std::size_t> resolution_;
  std::vector<Label> cell_labels_;
  std::size_t num_classes_;
};

/// Random layout: each cell independently takes a uniformly drawn label.
RegionOracle random_region_oracle(std::vector<std::size_t> resolution, std::size_t num_classes,
                                  std::uint64_t seed);

}  // namespace nmutant
