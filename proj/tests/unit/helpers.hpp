#pragma once

#include "sgdlab/data.hpp"
#include "sgdlab/nn.hpp"

#include <initializer_list>
#include <utility>
#include <vector>

namespace testutil {

inline sgdlab::Matrix mat(int rows, int cols, std::initializer_list<double> v) {
  sgdlab::Matrix m(rows, cols);
  auto it = v.begin();
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = *it++;
  return m;
}

inline sgdlab::Vector vec(std::initializer_list<double> v) {
  sgdlab::Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline sgdlab::Weights weights(std::vector<std::pair<sgdlab::Matrix, sgdlab::Vector>> layers) {
  sgdlab::Weights w;
  for (auto& [m, b] : layers) w.layers.push_back({std::move(m), std::move(b)});
  return w;
}

inline sgdlab::Dataset dataset(sgdlab::Matrix x, std::vector<int> y, int k = 2) {
  sgdlab::Dataset d;
  d.features = std::move(x);
  d.labels = std::move(y);
  d.n_classes = k;
  d.name = "fixture";
  return d;
}

inline bool same_params(const sgdlab::Weights& a, const sgdlab::Weights& b) {
  return a.flatten() == b.flatten();
}

}  // namespace testutil
