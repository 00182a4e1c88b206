#pragma once

// SVG rendering of a 2-D classifier: one <rect class="cell"> per grid cell
// coloured by predicted class, training points drawn on top by true class.

#include "sgdlab/data.hpp"
#include "sgdlab/metrics.hpp"
#include "sgdlab/nn.hpp"

#include <filesystem>
#include <string>

namespace sgdlab {

struct RenderOptions {
  double canvas = 600.0;  // pixels per side
  double point_radius = 3.0;
};

// Throws UnsupportedDimension unless input_dim == 2.
std::string render_decision_boundary_svg(const MlpSpec& spec, const Weights& w, const Dataset& ds,
                                         const Box2& box, int grid_res,
                                         const RenderOptions& opt = {});

void render_decision_boundary(const MlpSpec& spec, const Weights& w, const Dataset& ds,
                              const Box2& box, int grid_res, const std::filesystem::path& out,
                              const RenderOptions& opt = {});

}  // namespace sgdlab
