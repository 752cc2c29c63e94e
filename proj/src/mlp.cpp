#include "nmutant/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "nmutant/error.hpp"
#include "nmutant/rng.hpp"
#include "nmutant/text.hpp"

namespace nmutant {

namespace {

constexpr const char* kFormatName = "nmutant-mlp";
constexpr int kFormatVersion = 1;

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
  }
}

// Per-layer pre-activations and activations of one forward pass.
struct Trace {
  std::vector<std::vector<double>> activations;  // activations[0] is the input
  std::vector<std::vector<double>> preactivations;
};

Trace forward_trace(const MlpModel& model, std::span<const double> input) {
  if (input.size() != model.input_dim()) {
    throw ValidationError("input has " + std::to_string(input.size()) + " values, model expects " +
                          std::to_string(model.input_dim()));
  }
  Trace trace;
  trace.activations.emplace_back(input.begin(), input.end());
  for (const auto& layer : model.layers()) {
    const auto& x = trace.activations.back();
    std::vector<double> z(layer.outputs);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double* row = layer.weights.data() + o * layer.inputs;
      z[o] = std::inner_product(row, row + layer.inputs, x.begin(), layer.bias[o]);
    }
    std::vector<double> a = z;
    if (layer.activation == Activation::kRelu) {
      for (double& v : a) v = std::max(v, 0.0);
    }
    trace.preactivations.push_back(std::move(z));
    trace.activations.push_back(std::move(a));
  }
  check_finite(trace.activations.back(), "logits");
  return trace;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += p[i] = std::exp(logits[i] - peak);
  for (double& v : p) v /= total;
  return p;
}

double cross_entropy(std::span<const double> logits, Label target) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double v : logits) total += std::exp(v - peak);
  return std::log(total) + peak - logits[target.index];
}

struct ParameterGradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;
  std::vector<double> input;
};

// Backpropagates dL/dlogits through the network. When `params` is null only
// the input gradient is produced.
std::vector<double> backpropagate(const MlpModel& model, const Trace& trace, std::vector<double> delta,
                                  ParameterGradients* params) {
  const auto& layers = model.layers();
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    if (layer.activation == Activation::kRelu) {
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        if (trace.preactivations[l][o] <= 0.0) delta[o] = 0.0;
      }
    }
    const auto& x = trace.activations[l];
    if (params != nullptr) {
      auto& gw = params->weights[l];
      auto& gb = params->bias[l];
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        if (delta[o] == 0.0) continue;
        gb[o] += delta[o];
        double* row = gw.data() + o * layer.inputs;
        for (std::size_t i = 0; i < layer.inputs; ++i) row[i] += delta[o] * x[i];
      }
    }
    std::vector<double> upstream(layer.inputs, 0.0);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      if (delta[o] == 0.0) continue;
      const double* row = layer.weights.data() + o * layer.inputs;
      for (std::size_t i = 0; i < layer.inputs; ++i) upstream[i] += row[i] * delta[o];
    }
    delta = std::move(upstream);
  }
  check_finite(delta, "gradient");
  return delta;
}

std::vector<double> loss_delta(std::span<const double> logits, Label target) {
  if (target.index >= logits.size()) throw ValidationError("target label out of range");
  auto p = softmax(logits);
  p[target.index] -= 1.0;
  return p;
}

const char* activation_name(Activation a) { return a == Activation::kRelu ? "relu" : "identity"; }

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw FormatError("unknown activation '" + name + "'");
}

}  // namespace

MlpModel::MlpModel(Shape input_shape, std::vector<DenseLayer> layers)
    : input_shape_(input_shape), layers_(std::move(layers)) {
  if (layers_.empty()) throw ValidationError("an MLP needs at least one layer");
  std::size_t expected = input_shape_.size();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const std::string where = "layer " + std::to_string(l);
    if (layer.inputs != expected) {
      throw ValidationError(where + " takes " + std::to_string(layer.inputs) + " inputs, previous width is " +
                            std::to_string(expected));
    }
    if (layer.outputs == 0) throw ValidationError(where + " has zero outputs");
    if (layer.weights.size() != layer.inputs * layer.outputs || layer.bias.size() != layer.outputs) {
      throw ValidationError(where + " has mismatched weight or bias sizes");
    }
    for (double w : layer.weights) {
      if (!std::isfinite(w)) throw ValidationError(where + " has a non-finite weight");
    }
    for (double b : layer.bias) {
      if (!std::isfinite(b)) throw ValidationError(where + " has a non-finite bias");
    }
    expected = layer.outputs;
  }
}

bool operator==(const MlpModel& a, const MlpModel& b) {
  if (a.input_shape_ != b.input_shape_ || a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    const auto& x = a.layers_[l];
    const auto& y = b.layers_[l];
    if (x.inputs != y.inputs || x.outputs != y.outputs || x.activation != y.activation ||
        x.weights != y.weights || x.bias != y.bias) {
      return false;
    }
  }
  return true;
}

Label argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return Label{best};
}

ForwardResult mlp_forward(const MlpModel& model, std::span<const double> input) {
  auto trace = forward_trace(model, input);
  ForwardResult result;
  result.logits = std::move(trace.activations.back());
  result.label = argmax(result.logits);
  return result;
}

ForwardResult mlp_forward(const MlpModel& model, const Sample& sample) {
  return mlp_forward(model, sample.values());
}

double mlp_loss(const MlpModel& model, std::span<const double> input, Label target) {
  const auto logits = mlp_forward(model, input).logits;
  if (target.index >= logits.size()) throw ValidationError("target label out of range");
  return cross_entropy(logits, target);
}

std::vector<double> mlp_backward(const MlpModel& model, std::span<const double> input, Label target) {
  const auto trace = forward_trace(model, input);
  return backpropagate(model, trace, loss_delta(trace.activations.back(), target), nullptr);
}

std::vector<double> mlp_backward(const MlpModel& model, const Sample& sample, Label target) {
  return mlp_backward(model, sample.values(), target);
}

MlpModel mlp_random_init(const Shape& input_shape, const std::vector<std::size_t>& hidden,
                         std::size_t num_classes, std::uint64_t seed) {
  if (num_classes < 2) throw ValidationError("an MLP classifier needs at least two classes");
  Rng rng(derive_seed(seed, 0));
  std::vector<DenseLayer> layers;
  std::size_t inputs = input_shape.size();
  std::vector<std::size_t> widths = hidden;
  widths.push_back(num_classes);
  for (std::size_t l = 0; l < widths.size(); ++l) {
    DenseLayer layer;
    layer.inputs = inputs;
    layer.outputs = widths[l];
    layer.activation = l + 1 == widths.size() ? Activation::kIdentity : Activation::kRelu;
    const double limit = std::sqrt(6.0 / static_cast<double>(inputs));
    std::uniform_real_distribution<double> dist(-limit, limit);
    layer.weights.resize(layer.inputs * layer.outputs);
    for (double& w : layer.weights) w = dist(rng);
    layer.bias.assign(layer.outputs, 0.0);
    inputs = layer.outputs;
    layers.push_back(std::move(layer));
  }
  return MlpModel(input_shape, std::move(layers));
}

double mlp_accuracy(const MlpModel& model, const Dataset& dataset) {
  if (dataset.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& item : dataset.items) {
    correct += mlp_forward(model, item.sample).label == item.true_label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

TrainResult mlp_train(const Dataset& dataset, const TrainOptions& options) {
  if (dataset.empty()) throw ValidationError("cannot train on an empty dataset");
  if (options.batch_size == 0) throw ValidationError("batch size must be positive");
  if (!(options.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  dataset.validate();

  MlpModel model = mlp_random_init(dataset.shape(), options.hidden, dataset.num_classes, options.seed);
  Rng rng(derive_seed(options.seed, 1));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  double epoch_loss = 0.0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      ParameterGradients grads;
      for (const auto& layer : model.layers()) {
        grads.weights.emplace_back(layer.weights.size(), 0.0);
        grads.bias.emplace_back(layer.bias.size(), 0.0);
      }
      for (std::size_t k = start; k < end; ++k) {
        const auto& item = dataset.items[order[k]];
        const auto trace = forward_trace(model, item.sample.values());
        const double loss = cross_entropy(trace.activations.back(), item.true_label);
        if (!std::isfinite(loss)) {
          throw NumericError("training diverged (loss is not finite); try a smaller learning rate");
        }
        epoch_loss += loss;
        backpropagate(model, trace, loss_delta(trace.activations.back(), item.true_label), &grads);
      }
      const double scale = options.learning_rate / static_cast<double>(end - start);
      auto& layers = model.mutable_layers();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        for (std::size_t i = 0; i < layers[l].weights.size(); ++i) layers[l].weights[i] -= scale * grads.weights[l][i];
        for (std::size_t i = 0; i < layers[l].bias.size(); ++i) layers[l].bias[i] -= scale * grads.bias[l][i];
      }
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss)) {
      throw NumericError("training diverged (loss is not finite); try a smaller learning rate");
    }
  }
  for (const auto& layer : model.layers()) {
    check_finite(layer.weights, "weight after training; try a smaller learning rate");
  }

  TrainResult result{model, mlp_accuracy(model, dataset), epoch_loss};
  return result;
}

std::string mlp_to_json(const MlpModel& model) {
  nlohmann::ordered_json doc;
  doc["format"] = kFormatName;
  doc["version"] = kFormatVersion;
  const auto& s = model.input_shape();
  doc["input_shape"] = {s.height, s.width, s.channels};
  doc["num_classes"] = model.num_classes();
  auto layers = nlohmann::ordered_json::array();
  for (const auto& layer : model.layers()) {
    nlohmann::ordered_json entry;
    entry["inputs"] = layer.inputs;
    entry["outputs"] = layer.outputs;
    entry["activation"] = activation_name(layer.activation);
    entry["weights"] = layer.weights;
    entry["bias"] = layer.bias;
    layers.push_back(std::move(entry));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(1) + "\n";
}

MlpModel mlp_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("weights file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.value("format", std::string{}) != kFormatName) throw FormatError("not an nmutant-mlp weights file");
    const int version = doc.at("version").get<int>();
    if (version != kFormatVersion) {
      throw FormatError("unsupported weights version " + std::to_string(version) + " (expected " +
                        std::to_string(kFormatVersion) + ")");
    }
    const auto dims = doc.at("input_shape").get<std::vector<std::size_t>>();
    if (dims.size() != 3) throw FormatError("input_shape must have three entries");
    std::vector<DenseLayer> layers;
    for (const auto& entry : doc.at("layers")) {
      DenseLayer layer;
      layer.inputs = entry.at("inputs").get<std::size_t>();
      layer.outputs = entry.at("outputs").get<std::size_t>();
      layer.activation = parse_activation(entry.at("activation").get<std::string>());
      layer.weights = entry.at("weights").get<std::vector<double>>();
      layer.bias = entry.at("bias").get<std::vector<double>>();
      layers.push_back(std::move(layer));
    }
    MlpModel model(Shape{dims[0], dims[1], dims[2]}, std::move(layers));
    if (doc.contains("num_classes") && doc["num_classes"].get<std::size_t>() != model.num_classes()) {
      throw FormatError("num_classes does not match the output layer width");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed weights file: ") + e.what());
  }
}

void save_mlp(const MlpModel& model, const std::string& path) { write_file(path, mlp_to_json(model)); }

MlpModel load_mlp(const std::string& path) { return mlp_from_json(read_file(path)); }

MlpOracle::MlpOracle(std::shared_ptr<const MlpModel> model) : model_(std::move(model)) {
  if (!model_) throw ValidationError("null model");
}

Label MlpOracle::classify(const Sample& sample) { return mlp_forward(*model_, sample).label; }

}  // namespace nmutant
