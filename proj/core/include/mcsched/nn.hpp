#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcsched/rng.hpp"

namespace mcsched {

enum class Activation { kTanh, kRelu };
enum class OutputHead { kSoftmax, kLinear };

// Parameter gradients, same shapes as the owning net.
struct GradientSet {
  std::vector<std::vector<double>> weights;  // per layer, row-major out x in
  std::vector<std::vector<double>> biases;

  void add(const GradientSet& other);
  void scale(double factor);
};

// Activation cache from one forward pass, consumed by backward().
struct ForwardTape {
  std::vector<std::vector<double>> layer_inputs;  // input to each layer
  std::vector<double> output;                     // post-head output
  std::uint64_t net_stamp = 0;                    // guards against stale tapes
};

struct AdamState {
  long step_count = 0;
  std::vector<std::vector<double>> m_weights, v_weights;
  std::vector<std::vector<double>> m_biases, v_biases;
};

// Small dense feed-forward network, double precision throughout.
class DenseNet {
 public:
  DenseNet() = default;
  DenseNet(std::vector<int> layer_sizes, Activation hidden, OutputHead head);

  // Uniform fan-in initialization from the given stream.
  void init_params(RngStream& rng);

  std::vector<double> forward(const std::vector<double>& input) const;
  std::vector<double> forward(const std::vector<double>& input, ForwardTape& tape) const;

  // Gradient of a scalar loss given dLoss/dOutput (w.r.t. the post-head
  // output, including softmax probabilities).
  GradientSet backward(const ForwardTape& tape, const std::vector<double>& output_grad) const;

  GradientSet zero_gradients() const;

  // Adaptive-moment update with bias correction; moments persist on the net.
  void optimizer_step(const GradientSet& grads, double learning_rate);

  nlohmann::json save_weights() const;
  static DenseNet load_weights(const nlohmann::json& doc);

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int input_size() const { return layer_sizes_.front(); }
  int output_size() const { return layer_sizes_.back(); }
  Activation hidden_activation() const { return hidden_; }
  OutputHead output_head() const { return head_; }

  bool operator==(const DenseNet& other) const;

 private:
  int n_layers() const { return static_cast<int>(layer_sizes_.size()) - 1; }

  std::vector<int> layer_sizes_;
  Activation hidden_ = Activation::kTanh;
  OutputHead head_ = OutputHead::kLinear;
  std::vector<std::vector<double>> weights_;  // layer l: [out x in], row-major
  std::vector<std::vector<double>> biases_;
  AdamState adam_;
  std::uint64_t stamp_ = 0;  // bumped on parameter changes
};

std::vector<double> softmax(const std::vector<double>& logits);

}  // namespace mcsched
