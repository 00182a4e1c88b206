#pragma once

// Model-quality proxies: normalized parameter distance, Frobenius norm, path
// norms, FGSM robustness and 2-D decision-boundary margins.

#include "sgdlab/data.hpp"
#include "sgdlab/nn.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sgdlab {

// ||w1 - w2||_F / ||w2||_F over all parameters, biases included.
// Throws UndefinedDenominator when ||w2||_F == 0.
double distance(const Weights& w1, const Weights& w2);

double weight_frobenius(const Weights& w);

// (sum over input->output paths of prod |w_e|^p)^(1/p) with p in {1, 2}.
// Biases enter as edges from a constant-1 unit appended to every layer input.
double path_norm(const MlpSpec& spec, const Weights& w, int p);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

// x + eps * sign(grad_x loss), sign(0) = 0, optionally clipped.
std::vector<double> fgsm_perturb(const MlpSpec& spec, const Weights& w, std::span<const double> x,
                                 int y, double eps, std::optional<Interval> clip = std::nullopt);

struct RobustnessPoint {
  double epsilon = 0.0;
  double accuracy = 0.0;
};

struct RobustnessCurve {
  std::vector<RobustnessPoint> points;
  std::string eval_set;
  std::string attack = "fgsm";

  // Trapezoidal area under accuracy(epsilon).
  double area() const;
};

// `epsilons` must be strictly increasing and start at 0.
RobustnessCurve robustness_curve(const MlpSpec& spec, const Weights& w, const Dataset& ds,
                                 std::span<const double> epsilons,
                                 std::optional<Interval> clip = std::nullopt);

struct Box2 {
  Interval x{-4.5, 4.5};
  Interval y{-4.5, 4.5};
};

struct MarginReport {
  std::vector<double> per_point;  // +inf when no grid cell carries another label
  double min = 0.0;
  double median = 0.0;
  double cell_diagonal = 0.0;
};

// Distance from each point to the nearest grid-cell centre whose predicted
// label differs from the point's own predicted label. Two-dimensional inputs
// only; grid_res >= 64.
MarginReport margin_estimate(const MlpSpec& spec, const Weights& w, const Dataset& ds,
                             const Box2& box, int grid_res);

// Predicted labels at grid_res x grid_res cell centres, row-major from (x.lo, y.lo).
std::vector<int> predict_grid(const MlpSpec& spec, const Weights& w, const Box2& box,
                              int grid_res);

struct ComplexityReport {
  double frobenius = 0.0;
  double path_norm_l1 = 0.0;
  double path_norm_l2 = 0.0;
  std::map<std::string, double> distances;
};

ComplexityReport complexity_report(const MlpSpec& spec, const Weights& w);

}  // namespace sgdlab
