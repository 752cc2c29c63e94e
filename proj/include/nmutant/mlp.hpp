#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nmutant/oracle.hpp"
#include "nmutant/tensor.hpp"

namespace nmutant {

enum class Activation { kRelu, kIdentity };

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;
};

/// Fully connected network over flattened samples. The last layer's width is
/// the number of classes; its outputs are logits.
class MlpModel {
 public:
  MlpModel(Shape input_shape, std::vector<DenseLayer> layers);

  const Shape& input_shape() const { return input_shape_; }
  std::size_t input_dim() const { return input_shape_.size(); }
  std::size_t num_classes() const { return layers_.back().outputs; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  friend bool operator==(const MlpModel&, const MlpModel&);

 private:
  Shape input_shape_;
  std::vector<DenseLayer> layers_;
};

struct ForwardResult {
  std::vector<double> logits;
  Label label;
};

// Index of the largest value; ties go to the lowest index.
Label argmax(std::span<const double> values);

ForwardResult mlp_forward(const MlpModel& model, std::span<const double> input);
ForwardResult mlp_forward(const MlpModel& model, const Sample& sample);

/// Softmax cross-entropy of the logits against `target`.
double mlp_loss(const MlpModel& model, std::span<const double> input, Label target);

/// Gradient of mlp_loss with respect to the input vector.
std::vector<double> mlp_backward(const MlpModel& model, std::span<const double> input, Label target);
std::vector<double> mlp_backward(const MlpModel& model, const Sample& sample, Label target);

/// He-uniform weights, zero biases. `hidden` lists hidden layer widths (ReLU);
/// an identity output layer of width num_classes is appended.
MlpModel mlp_random_init(const Shape& input_shape, const std::vector<std::size_t>& hidden,
                         std::size_t num_classes, std::uint64_t seed);

struct TrainOptions {
  std::vector<std::size_t> hidden{16};
  std::size_t epochs = 20;
  double learning_rate = 0.05;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
};

struct TrainResult {
  MlpModel model;
  double train_accuracy = 0.0;
  double final_loss = 0.0;
};

/// Minibatch SGD on softmax cross-entropy. Deterministic given options.seed.
TrainResult mlp_train(const Dataset& dataset, const TrainOptions& options);

double mlp_accuracy(const MlpModel& model, const Dataset& dataset);

// Versioned JSON weights file.
std::string mlp_to_json(const MlpModel& model);
MlpModel mlp_from_json(const std::string& text);
void save_mlp(const MlpModel& model, const std::string& path);
MlpModel load_mlp(const std::string& path);

class MlpOracle final : public Oracle {
 public:
  explicit MlpOracle(std::shared_ptr<const MlpModel> model);
  std::size_t num_classes() const override { return model_->num_classes(); }
  Label classify(const Sample& sample) override;
  const MlpModel& model() const { return *model_; }

 private:
  std::shared_ptr<const MlpModel> model_;
};

}  // namespace nmutant
