#include "isac/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "isac/errors.hpp"

namespace isac {

std::size_t NetworkLayout::path_count() const {
  if (mode == PairingMode::kMonostatic) return tx_positions.size();
  return tx_positions.size() * rx_positions.size();
}

std::pair<std::size_t, std::size_t> NetworkLayout::path_nodes(std::size_t path) const {
  if (mode == PairingMode::kMonostatic) return {path, path};
  const std::size_t n = rx_positions.size();
  return {path / n, path % n};
}

void NetworkLayout::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("layout: propagation speed must be positive");
  if (tx_positions.empty() || rx_positions.empty()) throw ConfigError("layout: needs at least one tx and one rx");
  if (mode == PairingMode::kMonostatic) {
    if (tx_positions.size() != rx_positions.size())
      throw ConfigError("layout: monostatic mode needs as many receivers as transmitters");
    for (std::size_t i = 0; i < tx_positions.size(); ++i) {
      if (tx_positions[i] != rx_positions[i])
        throw ConfigError("layout: monostatic node " + std::to_string(i) + " is not colocated");
    }
  }
}

PathGeometry path_geometry(const Vec2& tx, const Vec2& rx, bool colocated, const Vec2& position, double c) {
  PathGeometry pg;
  const Vec2 dt = position - tx;
  const Vec2 dr = position - rx;
  pg.range_t = dt.norm();
  pg.range_r = dr.norm();
  if (pg.range_t < kDegenerateDistance || pg.range_r < kDegenerateDistance)
    throw DegenerateGeometry("target coincides with a network node");
  pg.u_t = dt / pg.range_t;
  pg.u_r = dr / pg.range_r;
  pg.g = pg.u_t + pg.u_r;
  pg.tau = (pg.range_t + pg.range_r) / c;
  pg.colocated = colocated;
  return pg;
}

std::vector<PathGeometry> path_geometries(const NetworkLayout& layout, const Vec2& position) {
  const std::size_t paths = layout.path_count();
  const bool mono = layout.mode == PairingMode::kMonostatic;
  std::vector<PathGeometry> out;
  out.reserve(paths);
  for (std::size_t l = 0; l < paths; ++l) {
    const auto [k, r] = layout.path_nodes(l);
    out.push_back(path_geometry(layout.tx_positions[k], layout.rx_positions[r], mono, position, layout.c));
  }
  return out;
}

double doppler_shift(const PathGeometry& pg, const Vec2& velocity, double carrier, double c) {
  return carrier / c * pg.g.dot(velocity);
}

Eigen::MatrixX2d delay_jacobian(const NetworkLayout& layout, const Vec2& position) {
  const auto geoms = path_geometries(layout, position);
  Eigen::MatrixX2d jac(geoms.size(), 2);
  for (std::size_t l = 0; l < geoms.size(); ++l) jac.row(static_cast<Eigen::Index>(l)) = geoms[l].g.transpose() / layout.c;
  return jac;
}

Mat2 geometry_gradient_jacobian(const PathGeometry& pg) {
  if (pg.range_t < kDegenerateDistance || pg.range_r < kDegenerateDistance)
    throw DegenerateGeometry("zero range in geometry gradient");
  const Mat2 eye = Mat2::Identity();
  if (pg.colocated) return (2.0 / pg.range_t) * (eye - pg.u_t * pg.u_t.transpose());
  return (eye - pg.u_t * pg.u_t.transpose()) / pg.range_t + (eye - pg.u_r * pg.u_r.transpose()) / pg.range_r;
}

namespace {

Vec2 on_circle(double radius, double angle) {
  // Snap so quarter-turn layouts land exactly on the axes.
  double cs = std::cos(angle);
  double sn = std::sin(angle);
  if (std::abs(cs) < 1e-15) cs = 0.0;
  if (std::abs(sn) < 1e-15) sn = 0.0;
  return {radius * cs, radius * sn};
}

}  // namespace

NetworkLayout uniform_circle_monostatic(std::size_t n, double radius, double phase, double c) {
  NetworkLayout layout;
  layout.mode = PairingMode::kMonostatic;
  layout.c = c;
  for (std::size_t i = 0; i < n; ++i) {
    const double angle = phase + 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    layout.tx_positions.push_back(on_circle(radius, angle));
  }
  layout.rx_positions = layout.tx_positions;
  return layout;
}

NetworkLayout concentric_rings_multistatic(std::size_t m, std::size_t n, double tx_radius, double rx_radius,
                                           double rx_phase, double c) {
  NetworkLayout layout;
  layout.mode = PairingMode::kMultistatic;
  layout.c = c;
  for (std::size_t i = 0; i < m; ++i)
    layout.tx_positions.push_back(
        on_circle(tx_radius, 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(m)));
  for (std::size_t i = 0; i < n; ++i)
    layout.rx_positions.push_back(
        on_circle(rx_radius, rx_phase + 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
  return layout;
}

NetworkLayout rotated(const NetworkLayout& layout, double angle) {
  const Vec2 e = on_circle(1.0, angle);
  Mat2 rot;
  rot << e.x(), -e.y(), e.y(), e.x();
  NetworkLayout out = layout;
  for (auto& p : out.tx_positions) p = rot * p;
  for (auto& p : out.rx_positions) p = rot * p;
  return out;
}

}  // namespace isac
