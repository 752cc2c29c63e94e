#pragma once

#include <functional>
#include <memory>

#include "nmutant/tensor.hpp"

namespace nmutant {

/// Black-box classifier: all the detector ever learns about a model is the
/// label it assigns to an input. Implementations must be deterministic, since
/// sensitivity counting compares labels of repeated queries.
///
/// classify is non-const because some oracles own a transport; a single
/// handle is used by one worker at a time.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual std::size_t num_classes() const = 0;
  virtual Label classify(const Sample& sample) = 0;
};

// Produces a fresh handle per worker.
using OracleFactory = std::function<std::unique_ptr<Oracle>()>;

class ConstantOracle final : public Oracle {
 public:
  ConstantOracle(std::size_t num_classes, Label label);
  std::size_t num_classes() const override { return num_classes_; }
  Label classify(const Sample&) override { return label_; }

 private:
  std::size_t num_classes_;
  Label label_;
};

class FunctionOracle final : public Oracle {
 public:
  using Fn = std::function<Label(const Sample&)>;
  FunctionOracle(std::size_t num_classes, Fn fn) : num_classes_(num_classes), fn_(std::move(fn)) {}
  std::size_t num_classes() const override { return num_classes_; }
  Label classify(const Sample& sample) override { return fn_(sample); }

 private:
  std::size_t num_classes_;
  Fn fn_;
};

}  // namespace nmutant
