#include <algorithm>
#include <cmath>
#include <numbers>

#include "sketchparse/graphrank/graphrank.hpp"
#include "sketchparse/imaging/ops.hpp"

namespace sketchparse::graphrank {

namespace {

double wrap_angle(double t) {
  while (t <= -std::numbers::pi) t += 2 * std::numbers::pi;
  while (t > std::numbers::pi) t -= 2 * std::numbers::pi;
  return t;
}

// 2*pi minus the widest empty sector around the centre.
double angular_extent(const std::vector<std::size_t>& pixels, std::size_t w, std::size_t h) {
  const double ox = 0.5 * static_cast<double>(w), oy = 0.5 * static_cast<double>(h);
  std::vector<double> ang;
  ang.reserve(pixels.size());
  for (auto i : pixels) {
    const double x = static_cast<double>(i % w) + 0.5 - ox, y = static_cast<double>(i / w) + 0.5 - oy;
    if (x == 0.0 && y == 0.0) return 2 * std::numbers::pi;  // covers the centre
    ang.push_back(std::atan2(y, x));
  }
  if (ang.size() < 2) return 0.0;
  std::sort(ang.begin(), ang.end());
  double gap = ang.front() + 2 * std::numbers::pi - ang.back();
  for (std::size_t k = 1; k < ang.size(); ++k) gap = std::max(gap, ang[k] - ang[k - 1]);
  return 2 * std::numbers::pi - gap;
}

}  // namespace

std::optional<std::pair<double, double>> AttributeGraph::polar(std::size_t from, std::size_t to) const {
  for (const auto& e : edges) {
    if (e.a == from && e.b == to) return std::make_pair(e.r, e.theta);
    if (e.a == to && e.b == from) return std::make_pair(e.r, wrap_angle(e.theta + std::numbers::pi));
  }
  return std::nullopt;
}

AttributeGraph build_graph(const imaging::LabelMap& lm) {
  AttributeGraph g;
  const std::size_t W = lm.width(), H = lm.height();
  const std::size_t fg = imaging::count_nonzero(lm);
  g.global.area_fraction = lm.size() == 0 ? 0.0 : static_cast<double>(fg) / static_cast<double>(lm.size());
  if (fg == 0) return g;

  const auto comps = imaging::connected_components(lm);
  std::vector<long> owner(lm.size(), -1);
  for (const auto& c : comps) {
    const double area = static_cast<double>(c.area()) / static_cast<double>(fg);
    if (area < kMinAreaFraction) continue;
    const auto id = static_cast<long>(g.locals.size());
    for (auto i : c.pixels) owner[i] = id;
    LocalNode n;
    n.part = c.part_id;
    n.pixels = c.area();
    n.area = area;
    n.angle = angular_extent(c.pixels, W, H);
    n.cx = (c.centroid_col + 0.5) / static_cast<double>(W);
    n.cy = (c.centroid_row + 0.5) / static_cast<double>(H);
    g.locals.push_back(n);
    ++g.global.histogram[c.part_id];
  }

  std::vector<std::pair<std::size_t, std::size_t>> adj;
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      const long a = owner[y * W + x];
      if (a < 0) continue;
      for (auto [nx, ny] : {std::pair{x + 1, y}, std::pair{x, y + 1}}) {
        if (nx >= W || ny >= H) continue;
        const long b = owner[ny * W + nx];
        if (b < 0 || b == a) continue;
        adj.emplace_back(std::min(a, b), std::max(a, b));
      }
    }
  }
  std::sort(adj.begin(), adj.end());
  adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  for (auto [a, b] : adj) {
    const double dx = g.locals[b].cx - g.locals[a].cx, dy = g.locals[b].cy - g.locals[a].cy;
    g.edges.push_back({a, b, std::hypot(dx, dy), std::atan2(dy, dx)});
  }
  return g;
}

}  // namespace sketchparse::graphrank
