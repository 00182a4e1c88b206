#include "sgdlab/nn.hpp"

#include "sgdlab/errors.hpp"
#include "sgdlab/random.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace sgdlab {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

std::uint64_t fnv_mix(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
  return h;
}

// Per-layer activations kept for the backward pass.
struct Tape {
  std::vector<Matrix> inputs;  // input to layer l (post-ReLU of layer l-1)
  std::vector<Matrix> pre;     // pre-activations of layer l
};

void check_input(const MlpSpec& spec, const Matrix& x) {
  if (x.cols() != spec.input_dim) {
    throw ContractViolation(fmt::format("forward: layer 0 expects {} input columns, got {}",
                                        spec.input_dim, x.cols()));
  }
  if (!x.allFinite()) throw ContractViolation("forward: input contains non-finite values");
}

Matrix run_forward(const MlpSpec& spec, const Weights& w, const Matrix& x, Tape* tape) {
  check_input(spec, x);
  check_shapes(spec, w.layers);
  Matrix a = x;
  const int n_layers = spec.n_layers();
  for (int l = 0; l < n_layers; ++l) {
    const Layer& layer = w.layers[static_cast<std::size_t>(l)];
    Matrix z = a * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    if (tape) {
      tape->inputs.push_back(std::move(a));
      tape->pre.push_back(z);
    }
    if (l + 1 < n_layers) {
      a = z.cwiseMax(0.0);
    } else {
      return z;
    }
  }
  return a;  // unreachable: n_layers >= 1
}

void check_labels(const MlpSpec& spec, std::span<const int> labels, Eigen::Index rows) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw ContractViolation(
        fmt::format("batch has {} rows but {} labels", rows, labels.size()));
  }
  if (rows < 1) throw ContractViolation("batch must contain at least one example");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= spec.n_classes) {
      throw ContractViolation(fmt::format("label {} at row {} outside [0, {})", labels[i], i,
                                          spec.n_classes));
    }
  }
}

// Softmax probabilities and summed cross-entropy, computed with max subtraction.
double softmax_xent(const Matrix& logits, std::span<const int> labels, Matrix& probs) {
  probs.resize(logits.rows(), logits.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    auto e = (logits.row(i).array() - m).exp();
    const double s = e.sum();
    probs.row(i) = e / s;
    total += (std::log(s) + m) - logits(i, labels[static_cast<std::size_t>(i)]);
  }
  return total;
}

double weight_penalty(const Weights& w, double l2) {
  if (l2 == 0.0) return 0.0;
  double sq = 0.0;
  for (const auto& layer : w.layers) sq += layer.weight.squaredNorm();
  return 0.5 * l2 * sq;
}

}  // namespace

void MlpSpec::validate() const {
  if (input_dim < 1) throw ContractViolation("MlpSpec: input_dim must be >= 1");
  if (n_classes < 2) throw ContractViolation("MlpSpec: n_classes must be >= 2");
  for (std::size_t i = 0; i < hidden_widths.size(); ++i) {
    if (hidden_widths[i] < 1) {
      throw ContractViolation(fmt::format("MlpSpec: hidden width {} must be >= 1", i));
    }
  }
}

int MlpSpec::fan_in(int layer) const {
  return layer == 0 ? input_dim : hidden_widths[static_cast<std::size_t>(layer - 1)];
}

int MlpSpec::fan_out(int layer) const {
  return layer + 1 == n_layers() ? n_classes : hidden_widths[static_cast<std::size_t>(layer)];
}

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  for (int l = 0; l < n_layers(); ++l) {
    n += static_cast<std::size_t>(fan_in(l)) * static_cast<std::size_t>(fan_out(l)) +
         static_cast<std::size_t>(fan_out(l));
  }
  return n;
}

std::uint64_t MlpSpec::fingerprint() const {
  std::uint64_t h = kFnvOffset;
  h = fnv_mix(h, static_cast<std::uint64_t>(input_dim));
  h = fnv_mix(h, hidden_widths.size());
  for (int width : hidden_widths) h = fnv_mix(h, static_cast<std::uint64_t>(width));
  return fnv_mix(h, static_cast<std::uint64_t>(n_classes));
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::RandomInit: return "random-init";
    case Provenance::AdversarialInit: return "adversarial-init";
    case Provenance::Trained: return "trained";
  }
  return "unknown";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "random-init") return Provenance::RandomInit;
  if (s == "adversarial-init") return Provenance::AdversarialInit;
  if (s == "trained") return Provenance::Trained;
  throw ContractViolation(fmt::format("unknown provenance '{}'", s));
}

std::vector<double> Weights::flatten() const {
  std::vector<double> out;
  for (const auto& layer : layers) {
    out.insert(out.end(), layer.weight.data(), layer.weight.data() + layer.weight.size());
    out.insert(out.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
  }
  return out;
}

Weights Weights::unflatten(const MlpSpec& spec, std::span<const double> params) {
  spec.validate();
  if (params.size() != spec.param_count()) {
    throw ContractViolation(fmt::format("expected {} parameters, got {}", spec.param_count(),
                                        params.size()));
  }
  Weights w;
  w.spec_fingerprint = spec.fingerprint();
  w.layers = zeros_like(spec);
  std::size_t at = 0;
  for (auto& layer : w.layers) {
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(at), layer.weight.size(),
                layer.weight.data());
    at += static_cast<std::size_t>(layer.weight.size());
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(at), layer.bias.size(),
                layer.bias.data());
    at += static_cast<std::size_t>(layer.bias.size());
  }
  return w;
}

bool Weights::all_finite() const {
  return std::all_of(layers.begin(), layers.end(), [](const Layer& l) {
    return l.weight.allFinite() && l.bias.allFinite();
  });
}

LayerStack zeros_like(const MlpSpec& spec) {
  LayerStack out;
  out.reserve(static_cast<std::size_t>(spec.n_layers()));
  for (int l = 0; l < spec.n_layers(); ++l) {
    out.push_back({Matrix::Zero(spec.fan_out(l), spec.fan_in(l)), Vector::Zero(spec.fan_out(l))});
  }
  return out;
}

void check_shapes(const MlpSpec& spec, const LayerStack& layers) {
  if (static_cast<int>(layers.size()) != spec.n_layers()) {
    throw ContractViolation(
        fmt::format("expected {} layers, got {}", spec.n_layers(), layers.size()));
  }
  for (int l = 0; l < spec.n_layers(); ++l) {
    const Layer& layer = layers[static_cast<std::size_t>(l)];
    if (layer.weight.rows() != spec.fan_out(l) || layer.weight.cols() != spec.fan_in(l) ||
        layer.bias.size() != spec.fan_out(l)) {
      throw ContractViolation(fmt::format(
          "layer {}: expected weight {}x{} and bias {}, got {}x{} and {}", l, spec.fan_out(l),
          spec.fan_in(l), spec.fan_out(l), layer.weight.rows(), layer.weight.cols(),
          layer.bias.size()));
    }
  }
}

Weights init_weights(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = make_rng(seed);
  Weights w;
  w.layers = zeros_like(spec);
  w.spec_fingerprint = spec.fingerprint();
  w.provenance = Provenance::RandomInit;
  w.seed = seed;
  for (int l = 0; l < spec.n_layers(); ++l) {
    Layer& layer = w.layers[static_cast<std::size_t>(l)];
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in(l)));
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
      layer.weight.data()[i] = uniform(rng, -bound, bound);
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      layer.bias[i] = uniform(rng, -bound, bound);
    }
  }
  return w;
}

Matrix forward(const MlpSpec& spec, const Weights& w, const Matrix& x) {
  return run_forward(spec, w, x, nullptr);
}

LossAndGrads loss_and_grads(const MlpSpec& spec, const Weights& w, const Batch& batch,
                            double l2) {
  if (l2 < 0.0) throw ContractViolation("loss_and_grads: l2 must be non-negative");
  check_labels(spec, batch.labels, batch.features.rows());
  Tape tape;
  const Matrix logits = run_forward(spec, w, batch.features, &tape);
  Matrix probs;
  const auto b = static_cast<double>(batch.features.rows());
  const double xent = softmax_xent(logits, batch.labels, probs) / b;

  LossAndGrads out;
  out.loss = xent + weight_penalty(w, l2);
  out.grads = zeros_like(spec);

  Matrix delta = std::move(probs);
  for (std::size_t i = 0; i < batch.labels.size(); ++i) {
    delta(static_cast<Eigen::Index>(i), batch.labels[i]) -= 1.0;
  }
  delta /= b;

  for (int l = spec.n_layers() - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    Layer& g = out.grads[li];
    g.weight.noalias() = delta.transpose() * tape.inputs[li];
    g.bias = delta.colwise().sum().transpose();
    if (l2 != 0.0) g.weight += l2 * w.layers[li].weight;
    if (l > 0) {
      Matrix upstream = delta * w.layers[li].weight;
      delta = (tape.pre[li - 1].array() > 0.0).select(upstream, 0.0);
    }
  }
  return out;
}

double loss(const MlpSpec& spec, const Weights& w, const Batch& batch, double l2) {
  check_labels(spec, batch.labels, batch.features.rows());
  const Matrix logits = forward(spec, w, batch.features);
  Matrix probs;
  const double xent =
      softmax_xent(logits, batch.labels, probs) / static_cast<double>(batch.features.rows());
  return xent + weight_penalty(w, l2);
}

std::vector<int> predict(const MlpSpec& spec, const Weights& w, const Matrix& x) {
  const Matrix logits = forward(spec, w, x);
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index k = 1; k < logits.cols(); ++k) {
      if (logits(i, k) > logits(i, best)) best = static_cast<int>(k);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

double accuracy(const MlpSpec& spec, const Weights& w, const Matrix& x,
                std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows() || labels.empty()) {
    throw ContractViolation("accuracy: label count must match a non-empty feature matrix");
  }
  const auto pred = predict(spec, w, x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

Vector input_gradient(const MlpSpec& spec, const Weights& w, std::span<const double> x, int y) {
  if (static_cast<int>(x.size()) != spec.input_dim) {
    throw ContractViolation(fmt::format("input_gradient: layer 0 expects {} inputs, got {}",
                                        spec.input_dim, x.size()));
  }
  Batch batch;
  batch.features = Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  batch.labels = {y};
  check_labels(spec, batch.labels, 1);

  Tape tape;
  const Matrix logits = run_forward(spec, w, batch.features, &tape);
  Matrix delta;
  softmax_xent(logits, batch.labels, delta);
  delta(0, y) -= 1.0;
  for (int l = spec.n_layers() - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    Matrix upstream = delta * w.layers[li].weight;
    if (l == 0) return upstream.row(0).transpose();
    delta = (tape.pre[li - 1].array() > 0.0).select(upstream, 0.0);
  }
  return {};
}

double gradient_check(const MlpSpec& spec, const Weights& w, const Batch& batch, double epsilon,
                      double l2) {
  if (!(epsilon > 0.0)) throw ContractViolation("gradient_check: epsilon must be > 0");
  auto rel_err = [](double a, double n) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
  };

  const auto analytic = loss_and_grads(spec, w, batch, l2);
  double worst = 0.0;

  Weights probe = w;
  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    auto check_block = [&](double* values, const double* grads, Eigen::Index count) {
      for (Eigen::Index i = 0; i < count; ++i) {
        const double saved = values[i];
        values[i] = saved + epsilon;
        const double up = loss(spec, probe, batch, l2);
        values[i] = saved - epsilon;
        const double down = loss(spec, probe, batch, l2);
        values[i] = saved;
        worst = std::max(worst, rel_err(grads[i], (up - down) / (2.0 * epsilon)));
      }
    };
    check_block(probe.layers[l].weight.data(), analytic.grads[l].weight.data(),
                probe.layers[l].weight.size());
    check_block(probe.layers[l].bias.data(), analytic.grads[l].bias.data(),
                probe.layers[l].bias.size());
  }

  for (Eigen::Index r = 0; r < batch.features.rows(); ++r) {
    std::vector<double> x(batch.features.row(r).begin(), batch.features.row(r).end());
    const int y = batch.labels[static_cast<std::size_t>(r)];
    const Vector g = input_gradient(spec, w, x, y);
    Batch single{Matrix(1, spec.input_dim), {y}};
    for (int j = 0; j < spec.input_dim; ++j) {
      const double saved = x[static_cast<std::size_t>(j)];
      single.features.row(0) = Eigen::Map<const Eigen::RowVectorXd>(x.data(), spec.input_dim);
      single.features(0, j) = saved + epsilon;
      const double up = loss(spec, w, single, 0.0);
      single.features(0, j) = saved - epsilon;
      const double down = loss(spec, w, single, 0.0);
      worst = std::max(worst, rel_err(g[j], (up - down) / (2.0 * epsilon)));
    }
  }
  return worst;
}

}  // namespace sgdlab
