#include "doctest.h"
#include "helpers.hpp"

#include "sgdlab/errors.hpp"
#include "sgdlab/metrics.hpp"

#include <cmath>
#include <functional>

using namespace sgdlab;
using namespace testutil;

namespace {

// Explicit enumeration of every path, starting at an input unit or at the
// constant unit feeding any layer.
double path_norm_oracle(const Weights& w, int p) {
  const auto& L = w.layers;
  double total = 0.0;
  std::function<void(std::size_t, Eigen::Index, double)> walk = [&](std::size_t l, Eigen::Index unit, double prod) {
    if (l == L.size()) {
      total += prod;
      return;
    }
    for (Eigen::Index o = 0; o < L[l].weight.rows(); ++o) {
      walk(l + 1, o, prod * std::pow(std::abs(L[l].weight(o, unit)), p));
    }
  };
  for (Eigen::Index i = 0; i < L[0].weight.cols(); ++i) walk(0, i, 1.0);
  for (std::size_t l = 0; l < L.size(); ++l) {
    for (Eigen::Index o = 0; o < L[l].bias.size(); ++o) walk(l + 1, o, std::pow(std::abs(L[l].bias[o]), p));
  }
  return p == 1 ? total : std::sqrt(total);
}

// Predicts class 1 iff x > 0 (ties at 0 go to class 0).
Weights sign_x_net() { return weights({{mat(2, 2, {-1, 0, 1, 0}), vec({0, 0})}}); }

}  // namespace

TEST_CASE("normalized distance") {
  const MlpSpec spec{1, {}, 2};
  const Weights a = weights({{mat(2, 1, {1, 1}), vec({1, 0})}});
  const Weights b = weights({{mat(2, 1, {0, 0}), vec({0, 0})}});
  const Weights c = weights({{mat(2, 1, {2, 3}), vec({1, 1})}});
  CHECK(distance(c, a) == doctest::Approx(std::sqrt(1 + 4 + 0 + 1) / std::sqrt(3.0)));
  CHECK(distance(a, a) == 0.0);
  Weights twice = a;
  for (auto& l : twice.layers) {
    l.weight *= 2;
    l.bias *= 2;
  }
  CHECK(distance(twice, a) == doctest::Approx(1.0).epsilon(1e-15));
  const Weights w = init_weights({3, {4}, 2}, 1);
  for (double k : {-2.0, 0.0, 0.5, 3.0}) {
    Weights s = w;
    for (auto& l : s.layers) {
      l.weight *= k;
      l.bias *= k;
    }
    CHECK(distance(s, w) == doctest::Approx(std::abs(k - 1)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(distance(a, b), UndefinedDenominator);
  CHECK(distance(b, a) == doctest::Approx(1.0));
  CHECK(spec.param_count() == 4);
}

TEST_CASE("frobenius includes biases") {
  const Weights w = weights({{mat(1, 2, {3, 0}), vec({4})}, {mat(2, 1, {0, 0}), vec({0, 0})}});
  CHECK(weight_frobenius(w) == 5.0);
}

TEST_CASE("path norm: hand example") {
  // 1 -> 1 -> 2 with unit biases on the hidden layer
  const MlpSpec spec{1, {1}, 2};
  const Weights w = weights({{mat(1, 1, {2}), vec({1})}, {mat(2, 1, {1, -3}), vec({0, 0})}});
  // input paths: 2*1, 2*3; hidden-bias paths: 1*1, 1*3
  CHECK(path_norm(spec, w, 1) == doctest::Approx(2 + 6 + 1 + 3));
  CHECK(path_norm(spec, w, 2) == doctest::Approx(std::sqrt(4 + 36 + 1 + 9)));
  CHECK(path_norm_oracle(w, 1) == doctest::Approx(12));
  CHECK_THROWS_AS(path_norm(spec, w, 3), ContractViolation);
}

TEST_CASE("path norm matches enumeration on random nets") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const MlpSpec spec{3, {4, 3}, 2};
    const Weights w = init_weights(spec, s);
    for (int p : {1, 2}) {
      const double a = path_norm(spec, w, p);
      CHECK(std::abs(a - path_norm_oracle(w, p)) <= 1e-12 * a);
    }
  }
}

TEST_CASE("fgsm") {
  const MlpSpec spec{2, {}, 2};
  const Weights w = weights({{mat(2, 2, {0, 0, 0.4, -0.2}), vec({0.1, 0})}});
  const std::vector<double> x{0.5, 0.5};
  // logits are equal, grad = 0.5*(w1 - w0) = (0.2, -0.1)
  const auto adv = fgsm_perturb(spec, w, x, 0, 0.1);
  CHECK(adv[0] == doctest::Approx(0.6));
  CHECK(adv[1] == doctest::Approx(0.4));
  const auto clipped = fgsm_perturb(spec, w, x, 0, 0.7, Interval{0, 1});
  CHECK(clipped[0] == 1.0);
  CHECK(clipped[1] == 0.0);
  CHECK(fgsm_perturb(spec, w, x, 0, 0.0) == x);
  CHECK_THROWS_AS(fgsm_perturb(spec, w, x, 0, -0.1), ContractViolation);

  const Weights zero = weights({{Matrix::Zero(2, 2), Vector::Zero(2)}});
  CHECK(fgsm_perturb(spec, zero, x, 1, 0.3) == x);
}

TEST_CASE("robustness curve") {
  const MlpSpec spec{2, {}, 2};
  const Weights w = sign_x_net();
  const Dataset ds = dataset(mat(4, 2, {-0.5, 0, -0.15, 1, 0.25, 0, 1, -1}), {0, 0, 1, 1});
  const std::vector<double> eps{0.0, 0.1, 0.2, 0.3, 1.0};
  const auto curve = robustness_curve(spec, w, ds, eps);
  REQUIRE(curve.points.size() == 5);
  CHECK(curve.points[0].accuracy == accuracy(spec, w, ds.features, ds.labels));
  CHECK(curve.points[0].accuracy == 1.0);
  CHECK(curve.points[1].accuracy == 1.0);
  CHECK(curve.points[2].accuracy == 0.75);
  CHECK(curve.points[3].accuracy == 0.5);
  CHECK(curve.points[4].accuracy == 0.0);
  for (std::size_t i = 1; i < curve.points.size(); ++i) CHECK(curve.points[i].accuracy <= curve.points[i - 1].accuracy);
  const double area = 0.1 * 1.0 + 0.1 * 0.875 + 0.1 * 0.625 + 0.7 * 0.25;
  CHECK(curve.area() == doctest::Approx(area));
  CHECK(curve.attack == "fgsm");

  const std::vector<double> only0{0.0};
  CHECK(robustness_curve(spec, w, ds, only0).points.size() == 1);
  const std::vector<double> bad_start{0.1, 0.2};
  CHECK_THROWS_AS(robustness_curve(spec, w, ds, bad_start), ContractViolation);
  const std::vector<double> bad_order{0.0, 0.2, 0.2};
  CHECK_THROWS_AS(robustness_curve(spec, w, ds, bad_order), ContractViolation);
}

TEST_CASE("margin on a vertical boundary") {
  const MlpSpec spec{2, {}, 2};
  const Weights w = sign_x_net();
  const Dataset ds = dataset(mat(3, 2, {-0.5, 0, 1.25, 2, -3, -1}), {0, 1, 0});
  const Box2 box;
  const auto m = margin_estimate(spec, w, ds, box, 200);
  const double diag = m.cell_diagonal;
  CHECK(diag == doctest::Approx(std::hypot(9.0 / 200, 9.0 / 200)));
  REQUIRE(m.per_point.size() == 3);
  CHECK(std::abs(m.per_point[0] - 0.5) <= diag);
  CHECK(std::abs(m.per_point[1] - 1.25) <= diag);
  CHECK(std::abs(m.per_point[2] - 3.0) <= diag);
  CHECK(m.min == m.per_point[0]);
  CHECK(m.median == m.per_point[1]);

  SUBCASE("refinement stays within a cell diagonal") {
    for (int res : {64, 100, 333}) {
      const auto r = margin_estimate(spec, w, ds, box, res);
      for (std::size_t i = 0; i < 3; ++i) {
        const double truth = std::abs(ds.features(static_cast<Eigen::Index>(i), 0));
        CHECK(std::abs(r.per_point[i] - truth) <= r.cell_diagonal);
      }
    }
  }
  SUBCASE("point on the boundary") {
    const Dataset on = dataset(mat(1, 2, {0, 0}), {0});
    CHECK(margin_estimate(spec, w, on, box, 200).min <= diag);
  }
  SUBCASE("constant classifier has infinite margin") {
    const Weights c = weights({{Matrix::Zero(2, 2), vec({1, 0})}});
    CHECK(std::isinf(margin_estimate(spec, c, ds, box, 64).min));
  }
}

TEST_CASE("margin guards") {
  const MlpSpec spec3{3, {}, 2};
  const Dataset ds3 = dataset(mat(1, 3, {0, 0, 0}), {0});
  CHECK_THROWS_AS(margin_estimate(spec3, init_weights(spec3, 0), ds3, {}, 200), UnsupportedDimension);
  const MlpSpec spec{2, {}, 2};
  const Dataset ds = dataset(mat(1, 2, {0, 0}), {0});
  CHECK_THROWS_AS(margin_estimate(spec, sign_x_net(), ds, {}, 63), ContractViolation);
  CHECK_THROWS_AS(predict_grid(spec3, init_weights(spec3, 0), {}, 10), UnsupportedDimension);
}

TEST_CASE("predict grid layout") {
  const MlpSpec spec{2, {}, 2};
  const auto g = predict_grid(spec, sign_x_net(), {{-1, 1}, {-1, 1}}, 4);
  REQUIRE(g.size() == 16);
  for (int r = 0; r < 4; ++r) {
    CHECK(g[static_cast<std::size_t>(r * 4 + 0)] == 0);
    CHECK(g[static_cast<std::size_t>(r * 4 + 1)] == 0);
    CHECK(g[static_cast<std::size_t>(r * 4 + 2)] == 1);
    CHECK(g[static_cast<std::size_t>(r * 4 + 3)] == 1);
  }
}

TEST_CASE("complexity report") {
  const MlpSpec spec{2, {3}, 2};
  const Weights w = init_weights(spec, 2);
  const auto r = complexity_report(spec, w);
  CHECK(r.frobenius == weight_frobenius(w));
  CHECK(r.path_norm_l1 == path_norm(spec, w, 1));
  CHECK(r.path_norm_l2 == path_norm(spec, w, 2));
}
