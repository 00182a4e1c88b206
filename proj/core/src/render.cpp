#include "sgdlab/render.hpp"

#include "sgdlab/errors.hpp"

#include <array>
#include <fmt/format.h>
#include <fstream>

namespace sgdlab {

namespace {

constexpr std::array<const char*, 10> kFill = {"#9ecae1", "#fdae6b", "#a1d99b", "#fc9272", "#bcbddc",
                                               "#d9d9d9", "#c7e9c0", "#fdd0a2", "#c6dbef", "#dadaeb"};
constexpr std::array<const char*, 10> kPoint = {"#08519c", "#a63603", "#006d2c", "#a50f15", "#54278f",
                                                "#252525", "#238b45", "#d94801", "#2171b5", "#6a51a3"};

const char* pick(const std::array<const char*, 10>& palette, int label) {
  return palette[static_cast<std::size_t>(label) % palette.size()];
}

}  // namespace

std::string render_decision_boundary_svg(const MlpSpec& spec, const Weights& w, const Dataset& ds,
                                         const Box2& box, int grid_res, const RenderOptions& opt) {
  if (spec.input_dim != 2 || ds.dim() != 2) {
    throw UnsupportedDimension("decision-boundary rendering needs 2-D inputs");
  }
  ds.validate();
  const auto grid = predict_grid(spec, w, box, grid_res);
  const double cell = opt.canvas / grid_res;
  const double sx = opt.canvas / (box.x.hi - box.x.lo);
  const double sy = opt.canvas / (box.y.hi - box.y.lo);

  std::string out;
  out.reserve(static_cast<std::size_t>(grid_res) * grid_res * 80);
  out += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{0:.0f}\" "
      "viewBox=\"0 0 {0:.0f} {0:.0f}\" shape-rendering=\"crispEdges\">\n",
      opt.canvas);
  out += "<g id=\"field\">\n";
  // SVG y grows downward, grid row 0 is the bottom of the box.
  for (int r = 0; r < grid_res; ++r) {
    const double y = opt.canvas - (r + 1) * cell;
    for (int c = 0; c < grid_res; ++c) {
      const int label = grid[static_cast<std::size_t>(r) * grid_res + c];
      out += fmt::format(
          "<rect class=\"cell\" x=\"{:.4f}\" y=\"{:.4f}\" width=\"{:.4f}\" height=\"{:.4f}\" "
          "fill=\"{}\"/>\n",
          c * cell, y, cell, cell, pick(kFill, label));
    }
  }
  out += "</g>\n<g id=\"points\" stroke=\"#ffffff\" stroke-width=\"0.5\">\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double px = (ds.features(row, 0) - box.x.lo) * sx;
    const double py = opt.canvas - (ds.features(row, 1) - box.y.lo) * sy;
    out += fmt::format("<circle class=\"point\" cx=\"{:.4f}\" cy=\"{:.4f}\" r=\"{:.2f}\" fill=\"{}\"/>\n",
                       px, py, opt.point_radius, pick(kPoint, ds.labels[i]));
  }
  out += "</g>\n</svg>\n";
  return out;
}

void render_decision_boundary(const MlpSpec& spec, const Weights& w, const Dataset& ds,
                              const Box2& box, int grid_res, const std::filesystem::path& out,
                              const RenderOptions& opt) {
  const std::string svg = render_decision_boundary_svg(spec, w, ds, box, grid_res, opt);
  if (out.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(out.parent_path(), ec);
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(fmt::format("cannot write '{}'", out.string()));
  f << svg;
}

}  // namespace sgdlab
