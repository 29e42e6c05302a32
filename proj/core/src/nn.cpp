#include "mcsched/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcsched {

namespace {
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

const char* activation_name(Activation a) {
  return a == Activation::kTanh ? "tanh" : "relu";
}
const char* head_name(OutputHead h) {
  return h == OutputHead::kSoftmax ? "softmax" : "linear";
}
Activation activation_from_name(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  throw std::runtime_error("unknown activation: " + s);
}
OutputHead head_from_name(const std::string& s) {
  if (s == "softmax") return OutputHead::kSoftmax;
  if (s == "linear") return OutputHead::kLinear;
  throw std::runtime_error("unknown output head: " + s);
}
}  // namespace

void GradientSet::add(const GradientSet& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (std::size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += other.weights[l][i];
    for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
  }
}

void GradientSet::scale(double factor) {
  for (auto& w : weights)
    for (double& v : w) v *= factor;
  for (auto& b : biases)
    for (double& v : b) v *= factor;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

DenseNet::DenseNet(std::vector<int> layer_sizes, Activation hidden, OutputHead head)
    : layer_sizes_(std::move(layer_sizes)), hidden_(hidden), head_(head) {
  if (layer_sizes_.size() < 2) throw std::invalid_argument("DenseNet: need >= 2 layers");
  for (int s : layer_sizes_)
    if (s < 1) throw std::invalid_argument("DenseNet: layer sizes must be positive");
  weights_.resize(n_layers());
  biases_.resize(n_layers());
  adam_.m_weights.resize(n_layers());
  adam_.v_weights.resize(n_layers());
  adam_.m_biases.resize(n_layers());
  adam_.v_biases.resize(n_layers());
  for (int l = 0; l < n_layers(); ++l) {
    const std::size_t n_w = static_cast<std::size_t>(layer_sizes_[l + 1]) * layer_sizes_[l];
    weights_[l].assign(n_w, 0.0);
    biases_[l].assign(layer_sizes_[l + 1], 0.0);
    adam_.m_weights[l].assign(n_w, 0.0);
    adam_.v_weights[l].assign(n_w, 0.0);
    adam_.m_biases[l].assign(layer_sizes_[l + 1], 0.0);
    adam_.v_biases[l].assign(layer_sizes_[l + 1], 0.0);
  }
}

void DenseNet::init_params(RngStream& rng) {
  for (int l = 0; l < n_layers(); ++l) {
    const int fan_in = layer_sizes_[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& w : weights_[l]) w = (2.0 * rng.uniform01() - 1.0) * bound;
    for (double& b : biases_[l]) b = 0.0;
  }
  ++stamp_;
}

std::vector<double> DenseNet::forward(const std::vector<double>& input) const {
  ForwardTape tape;
  return forward(input, tape);
}

std::vector<double> DenseNet::forward(const std::vector<double>& input, ForwardTape& tape) const {
  if (static_cast<int>(input.size()) != input_size())
    throw std::invalid_argument("forward: input size mismatch");
  tape.layer_inputs.assign(n_layers(), {});
  std::vector<double> x = input;
  for (int l = 0; l < n_layers(); ++l) {
    tape.layer_inputs[l] = x;
    const int n_out = layer_sizes_[l + 1];
    const int n_in = layer_sizes_[l];
    std::vector<double> z(n_out);
    for (int i = 0; i < n_out; ++i) {
      double acc = biases_[l][i];
      const double* row = &weights_[l][static_cast<std::size_t>(i) * n_in];
      for (int j = 0; j < n_in; ++j) acc += row[j] * x[j];
      z[i] = acc;
    }
    if (l + 1 < n_layers()) {
      if (hidden_ == Activation::kTanh)
        for (double& v : z) v = std::tanh(v);
      else
        for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
    x = std::move(z);
  }
  if (head_ == OutputHead::kSoftmax) x = softmax(x);
  tape.output = x;
  tape.net_stamp = stamp_;
  return x;
}

GradientSet DenseNet::backward(const ForwardTape& tape,
                               const std::vector<double>& output_grad) const {
  if (tape.net_stamp != stamp_) throw std::runtime_error("backward: stale tape");
  if (static_cast<int>(output_grad.size()) != output_size())
    throw std::invalid_argument("backward: output gradient size mismatch");

  GradientSet grads = zero_gradients();
  std::vector<double> delta = output_grad;

  if (head_ == OutputHead::kSoftmax) {
    // dL/dlogit_i = p_i * (g_i - sum_j g_j p_j)
    const std::vector<double>& p = tape.output;
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += output_grad[i] * p[i];
    for (std::size_t i = 0; i < p.size(); ++i) delta[i] = p[i] * (output_grad[i] - dot);
  }

  for (int l = n_layers() - 1; l >= 0; --l) {
    const int n_out = layer_sizes_[l + 1];
    const int n_in = layer_sizes_[l];
    const std::vector<double>& x = tape.layer_inputs[l];

    for (int i = 0; i < n_out; ++i) {
      grads.biases[l][i] = delta[i];
      double* grow = &grads.weights[l][static_cast<std::size_t>(i) * n_in];
      for (int j = 0; j < n_in; ++j) grow[j] = delta[i] * x[j];
    }

    if (l > 0) {
      std::vector<double> prev(n_in, 0.0);
      for (int i = 0; i < n_out; ++i) {
        const double* row = &weights_[l][static_cast<std::size_t>(i) * n_in];
        for (int j = 0; j < n_in; ++j) prev[j] += row[j] * delta[i];
      }
      // Through the previous layer's activation; its post-activation values
      // are the inputs recorded for this layer.
      if (hidden_ == Activation::kTanh) {
        for (int j = 0; j < n_in; ++j) prev[j] *= 1.0 - x[j] * x[j];
      } else {
        for (int j = 0; j < n_in; ++j)
          if (x[j] <= 0.0) prev[j] = 0.0;
      }
      delta = std::move(prev);
    }
  }
  return grads;
}

GradientSet DenseNet::zero_gradients() const {
  GradientSet g;
  g.weights.resize(n_layers());
  g.biases.resize(n_layers());
  for (int l = 0; l < n_layers(); ++l) {
    g.weights[l].assign(weights_[l].size(), 0.0);
    g.biases[l].assign(biases_[l].size(), 0.0);
  }
  return g;
}

void DenseNet::optimizer_step(const GradientSet& grads, double learning_rate) {
  if (static_cast<int>(grads.weights.size()) != n_layers())
    throw std::invalid_argument("optimizer_step: gradient shape mismatch");
  adam_.step_count += 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(adam_.step_count));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(adam_.step_count));
  for (int l = 0; l < n_layers(); ++l) {
    if (grads.weights[l].size() != weights_[l].size() ||
        grads.biases[l].size() != biases_[l].size())
      throw std::invalid_argument("optimizer_step: gradient shape mismatch");
    for (std::size_t i = 0; i < weights_[l].size(); ++i) {
      double& m = adam_.m_weights[l][i];
      double& v = adam_.v_weights[l][i];
      const double g = grads.weights[l][i];
      m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
      v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g * g;
      weights_[l][i] -= learning_rate * (m / bc1) / (std::sqrt(v / bc2) + kAdamEps);
    }
    for (std::size_t i = 0; i < biases_[l].size(); ++i) {
      double& m = adam_.m_biases[l][i];
      double& v = adam_.v_biases[l][i];
      const double g = grads.biases[l][i];
      m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
      v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g * g;
      biases_[l][i] -= learning_rate * (m / bc1) / (std::sqrt(v / bc2) + kAdamEps);
    }
  }
  ++stamp_;
}

nlohmann::json DenseNet::save_weights() const {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["layer_sizes"] = layer_sizes_;
  doc["hidden_activation"] = activation_name(hidden_);
  doc["output_head"] = head_name(head_);
  nlohmann::json layers = nlohmann::json::array();
  for (int l = 0; l < n_layers(); ++l) {
    nlohmann::json jl;
    jl["weights"] = weights_[l];
    jl["bias"] = biases_[l];
    layers.push_back(jl);
  }
  doc["layers"] = layers;
  nlohmann::json adam;
  adam["step_count"] = adam_.step_count;
  adam["m_weights"] = adam_.m_weights;
  adam["v_weights"] = adam_.v_weights;
  adam["m_biases"] = adam_.m_biases;
  adam["v_biases"] = adam_.v_biases;
  doc["adam"] = adam;
  return doc;
}

DenseNet DenseNet::load_weights(const nlohmann::json& doc) {
  if (!doc.contains("schema_version"))
    throw std::runtime_error("load_weights: missing schema version");
  if (doc.at("schema_version").get<int>() != 1)
    throw std::runtime_error("load_weights: unsupported schema version");
  DenseNet net(doc.at("layer_sizes").get<std::vector<int>>(),
               activation_from_name(doc.at("hidden_activation").get<std::string>()),
               head_from_name(doc.at("output_head").get<std::string>()));
  const auto& layers = doc.at("layers");
  if (static_cast<int>(layers.size()) != net.n_layers())
    throw std::runtime_error("load_weights: layer count mismatch");
  for (int l = 0; l < net.n_layers(); ++l) {
    auto w = layers[l].at("weights").get<std::vector<double>>();
    auto b = layers[l].at("bias").get<std::vector<double>>();
    if (w.size() != net.weights_[l].size() || b.size() != net.biases_[l].size())
      throw std::runtime_error("load_weights: parameter shape mismatch");
    net.weights_[l] = std::move(w);
    net.biases_[l] = std::move(b);
  }
  const auto& adam = doc.at("adam");
  net.adam_.step_count = adam.at("step_count").get<long>();
  net.adam_.m_weights = adam.at("m_weights").get<std::vector<std::vector<double>>>();
  net.adam_.v_weights = adam.at("v_weights").get<std::vector<std::vector<double>>>();
  net.adam_.m_biases = adam.at("m_biases").get<std::vector<std::vector<double>>>();
  net.adam_.v_biases = adam.at("v_biases").get<std::vector<std::vector<double>>>();
  for (int l = 0; l < net.n_layers(); ++l) {
    if (net.adam_.m_weights[l].size() != net.weights_[l].size() ||
        net.adam_.v_weights[l].size() != net.weights_[l].size() ||
        net.adam_.m_biases[l].size() != net.biases_[l].size() ||
        net.adam_.v_biases[l].size() != net.biases_[l].size())
      throw std::runtime_error("load_weights: optimizer moment shape mismatch");
  }
  return net;
}

bool DenseNet::operator==(const DenseNet& other) const {
  return layer_sizes_ == other.layer_sizes_ && hidden_ == other.hidden_ &&
         head_ == other.head_ && weights_ == other.weights_ && biases_ == other.biases_ &&
         adam_.step_count == other.adam_.step_count &&
         adam_.m_weights == other.adam_.m_weights && adam_.v_weights == other.adam_.v_weights &&
         adam_.m_biases == other.adam_.m_biases && adam_.v_biases == other.adam_.v_biases;
}

}  // namespace mcsched
