#include "nmutant/oracle.hpp"

#include "nmutant/error.hpp"

namespace nmutant {

ConstantOracle::ConstantOracle(std::size_t num_classes, Label label)
    : num_classes_(num_classes), label_(label) {
  if (label.index >= num_classes) throw ValidationError("constant label out of range");
}

}  // namespace nmutant
