#pragma once

// Dense ReLU network engine: initialization, forward pass, softmax
// cross-entropy gradients and finite-difference verification.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sgdlab {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct MlpSpec {
  int input_dim = 2;
  std::vector<int> hidden_widths;
  int n_classes = 2;

  // Throws ContractViolation when a dimension is out of range.
  void validate() const;

  int n_layers() const { return static_cast<int>(hidden_widths.size()) + 1; }
  int fan_in(int layer) const;
  int fan_out(int layer) const;
  std::size_t param_count() const;
  std::uint64_t fingerprint() const;

  bool operator==(const MlpSpec&) const = default;
};

enum class Provenance { RandomInit, AdversarialInit, Trained };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

// weight is fan_out x fan_in; bias has fan_out entries.
struct Layer {
  Matrix weight;
  Vector bias;
};

// Parameter-shaped container shared by weights, gradients and momentum buffers.
using LayerStack = std::vector<Layer>;

struct Weights {
  LayerStack layers;
  std::uint64_t spec_fingerprint = 0;
  Provenance provenance = Provenance::RandomInit;
  std::uint64_t seed = 0;

  // Parameters flattened in checkpoint order: per layer, weight row-major then bias.
  std::vector<double> flatten() const;
  static Weights unflatten(const MlpSpec& spec, std::span<const double> params);
  bool all_finite() const;
};

using Gradients = LayerStack;

struct Batch {
  Matrix features;  // b x input_dim
  std::vector<int> labels;
};

// Zero-filled stack with the shape of `spec`.
LayerStack zeros_like(const MlpSpec& spec);

// Throws ContractViolation if the layer shapes disagree with `spec`.
void check_shapes(const MlpSpec& spec, const LayerStack& layers);

// Weights and biases i.i.d. uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Weights init_weights(const MlpSpec& spec, std::uint64_t seed);

Matrix forward(const MlpSpec& spec, const Weights& w, const Matrix& x);

struct LossAndGrads {
  double loss = 0.0;
  Gradients grads;
};

// Mean softmax cross-entropy plus (l2/2) * sum of squared weight-matrix entries.
// Biases are not penalized.
LossAndGrads loss_and_grads(const MlpSpec& spec, const Weights& w, const Batch& batch, double l2);

// Loss only, same definition as loss_and_grads.
double loss(const MlpSpec& spec, const Weights& w, const Batch& batch, double l2);

// Row-wise argmax; ties go to the lowest class index.
std::vector<int> predict(const MlpSpec& spec, const Weights& w, const Matrix& x);

// Fraction of rows whose prediction equals the label.
double accuracy(const MlpSpec& spec, const Weights& w, const Matrix& x, std::span<const int> labels);

// d(cross-entropy)/d(input) for one example.
Vector input_gradient(const MlpSpec& spec, const Weights& w, std::span<const double> x, int y);

// Max relative error between analytic and central-difference gradients, over
// every parameter and every input coordinate of the batch.
double gradient_check(const MlpSpec& spec, const Weights& w, const Batch& batch,
                      double epsilon = 1e-5, double l2 = 0.0);

}  // namespace sgdlab
