#include "sgdlab/metrics.hpp"

#include "sgdlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace sgdlab {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double median_of(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const std::size_t mid = xs.size() / 2;
  if (xs.size() % 2 == 1) return xs[mid];
  return 0.5 * (xs[mid - 1] + xs[mid]);
}

}  // namespace

double distance(const Weights& w1, const Weights& w2) {
  if (w1.layers.size() != w2.layers.size()) {
    throw ContractViolation("distance: weights have different layer counts");
  }
  double diff_sq = 0.0;
  double ref_sq = 0.0;
  for (std::size_t l = 0; l < w1.layers.size(); ++l) {
    const auto& a = w1.layers[l];
    const auto& b = w2.layers[l];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
        a.bias.size() != b.bias.size()) {
      throw ContractViolation(fmt::format("distance: layer {} shapes differ", l));
    }
    diff_sq += (a.weight - b.weight).squaredNorm() + (a.bias - b.bias).squaredNorm();
    ref_sq += b.weight.squaredNorm() + b.bias.squaredNorm();
  }
  if (ref_sq == 0.0) throw UndefinedDenominator("distance: reference weights have zero norm");
  return std::sqrt(diff_sq) / std::sqrt(ref_sq);
}

double weight_frobenius(const Weights& w) {
  double sq = 0.0;
  for (const auto& layer : w.layers) sq += layer.weight.squaredNorm() + layer.bias.squaredNorm();
  return std::sqrt(sq);
}

double path_norm(const MlpSpec& spec, const Weights& w, int p) {
  if (p != 1 && p != 2) throw ContractViolation("path_norm: p must be 1 or 2");
  check_shapes(spec, w.layers);
  auto power = [p](double v) { return p == 1 ? std::abs(v) : v * v; };
  // paths[j] = sum over paths ending at unit j of prod |w_e|^p
  Vector paths = Vector::Ones(spec.input_dim);
  for (const auto& layer : w.layers) {
    const Matrix wp = layer.weight.unaryExpr(power);
    const Vector bp = layer.bias.unaryExpr(power);
    paths = wp * paths + bp;
  }
  const double total = paths.sum();
  return p == 1 ? total : std::sqrt(total);
}

std::vector<double> fgsm_perturb(const MlpSpec& spec, const Weights& w, std::span<const double> x,
                                 int y, double eps, std::optional<Interval> clip) {
  if (!(eps >= 0.0)) throw ContractViolation("fgsm_perturb: eps must be >= 0");
  std::vector<double> out(x.begin(), x.end());
  if (eps == 0.0) return out;
  const Vector g = input_gradient(spec, w, x, y);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += eps * sign(g[static_cast<Eigen::Index>(i)]);
    if (clip) out[i] = std::clamp(out[i], clip->lo, clip->hi);
  }
  return out;
}

double RobustnessCurve::area() const {
  double a = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    a += 0.5 * (points[i].accuracy + points[i - 1].accuracy) *
         (points[i].epsilon - points[i - 1].epsilon);
  }
  return a;
}

RobustnessCurve robustness_curve(const MlpSpec& spec, const Weights& w, const Dataset& ds,
                                 std::span<const double> epsilons, std::optional<Interval> clip) {
  if (epsilons.empty() || epsilons.front() != 0.0) {
    throw ContractViolation("robustness_curve: epsilons must start at 0");
  }
  for (std::size_t i = 1; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > epsilons[i - 1])) {
      throw ContractViolation("robustness_curve: epsilons must be strictly increasing");
    }
  }
  ds.validate();

  RobustnessCurve curve;
  curve.eval_set = ds.name;
  curve.points.push_back({0.0, accuracy(spec, w, ds.features, ds.labels)});

  // The sign pattern does not depend on eps, so compute it once per example.
  Matrix signs(ds.features.rows(), ds.features.cols());
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    const Vector g = input_gradient(
        spec, w, std::span(ds.features.row(i).data(), static_cast<std::size_t>(ds.dim())),
        ds.labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < g.size(); ++j) signs(i, j) = sign(g[j]);
  }
  for (std::size_t e = 1; e < epsilons.size(); ++e) {
    Matrix attacked = ds.features + epsilons[e] * signs;
    if (clip) attacked = attacked.cwiseMax(clip->lo).cwiseMin(clip->hi);
    curve.points.push_back({epsilons[e], accuracy(spec, w, attacked, ds.labels)});
  }
  return curve;
}

std::vector<int> predict_grid(const MlpSpec& spec, const Weights& w, const Box2& box,
                              int grid_res) {
  if (spec.input_dim != 2) {
    throw UnsupportedDimension(
        fmt::format("grid prediction needs 2-D inputs, network has {}", spec.input_dim));
  }
  if (grid_res < 1) throw ContractViolation("grid_res must be >= 1");
  const double dx = (box.x.hi - box.x.lo) / grid_res;
  const double dy = (box.y.hi - box.y.lo) / grid_res;
  Matrix centres(static_cast<Eigen::Index>(grid_res) * grid_res, 2);
  for (int r = 0; r < grid_res; ++r) {
    for (int c = 0; c < grid_res; ++c) {
      const Eigen::Index idx = static_cast<Eigen::Index>(r) * grid_res + c;
      centres(idx, 0) = box.x.lo + (c + 0.5) * dx;
      centres(idx, 1) = box.y.lo + (r + 0.5) * dy;
    }
  }
  return predict(spec, w, centres);
}

MarginReport margin_estimate(const MlpSpec& spec, const Weights& w, const Dataset& ds,
                             const Box2& box, int grid_res) {
  if (spec.input_dim != 2 || ds.dim() != 2) {
    throw UnsupportedDimension("margin estimation is only defined for 2-D inputs");
  }
  if (grid_res < 64) throw ContractViolation("margin_estimate: grid_res must be >= 64");
  ds.validate();

  const auto grid = predict_grid(spec, w, box, grid_res);
  const double dx = (box.x.hi - box.x.lo) / grid_res;
  const double dy = (box.y.hi - box.y.lo) / grid_res;

  // Cell centres grouped by predicted label.
  std::vector<std::vector<std::pair<double, double>>> by_label(
      static_cast<std::size_t>(spec.n_classes));
  for (int r = 0; r < grid_res; ++r) {
    for (int c = 0; c < grid_res; ++c) {
      const int label = grid[static_cast<std::size_t>(r) * grid_res + c];
      by_label[static_cast<std::size_t>(label)].emplace_back(box.x.lo + (c + 0.5) * dx,
                                                            box.y.lo + (r + 0.5) * dy);
    }
  }

  const auto own = predict(spec, w, ds.features);
  MarginReport report;
  report.cell_diagonal = std::hypot(dx, dy);
  report.per_point.resize(ds.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double px = ds.features(static_cast<Eigen::Index>(i), 0);
    const double py = ds.features(static_cast<Eigen::Index>(i), 1);
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < spec.n_classes; ++k) {
      if (k == own[i]) continue;
      for (const auto& [cx, cy] : by_label[static_cast<std::size_t>(k)]) {
        best = std::min(best, (cx - px) * (cx - px) + (cy - py) * (cy - py));
      }
    }
    report.per_point[i] = std::sqrt(best);
  }
  report.min = *std::min_element(report.per_point.begin(), report.per_point.end());
  report.median = median_of(report.per_point);
  return report;
}

ComplexityReport complexity_report(const MlpSpec& spec, const Weights& w) {
  ComplexityReport r;
  r.frobenius = weight_frobenius(w);
  r.path_norm_l1 = path_norm(spec, w, 1);
  r.path_norm_l2 = path_norm(spec, w, 2);
  return r;
}

}  // namespace sgdlab
