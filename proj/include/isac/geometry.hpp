#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace isac {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kSpeedOfLight = 299792458.0;

/// Targets closer than this to a node are rejected.
inline constexpr double kDegenerateDistance = 1e-9;

enum class PairingMode {
  kMultistatic,  ///< every transmitter paired with every receiver, k-major
  kMonostatic,   ///< colocated transmitter/receiver pairs
};

struct NetworkLayout {
  std::vector<Vec2> tx_positions;
  std::vector<Vec2> rx_positions;
  PairingMode mode = PairingMode::kMultistatic;
  double c = kSpeedOfLight;

  std::size_t path_count() const;
  /// Transmitter and receiver index of a path in canonical order.
  std::pair<std::size_t, std::size_t> path_nodes(std::size_t path) const;
  /// Throws ConfigError on an inconsistent layout.
  void validate() const;
};

struct TargetState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
};

/// Geometry of one transmitter -> target -> receiver path.
///
/// Unit vectors point from the node toward the target, so g is the gradient
/// of the bistatic range sum with respect to the target position and the
/// radial speed of the path is g^T v.
struct PathGeometry {
  Vec2 u_t = Vec2::Zero();
  Vec2 u_r = Vec2::Zero();
  Vec2 g = Vec2::Zero();
  double tau = 0.0;
  double range_t = 0.0;
  double range_r = 0.0;
  bool colocated = false;
};

PathGeometry path_geometry(const Vec2& tx, const Vec2& rx, bool colocated, const Vec2& position, double c);

/// One PathGeometry per path, ordered k-major (multistatic) or by node (monostatic).
std::vector<PathGeometry> path_geometries(const NetworkLayout& layout, const Vec2& position);

inline std::vector<PathGeometry> path_geometries(const NetworkLayout& layout, const TargetState& target) {
  return path_geometries(layout, target.position);
}

/// Doppler shift (f_c / c) g^T v for the given carrier.
double doppler_shift(const PathGeometry& pg, const Vec2& velocity, double carrier, double c);

/// L x 2 matrix of delay gradients; row l is g_l^T / c.
Eigen::MatrixX2d delay_jacobian(const NetworkLayout& layout, const Vec2& position);

/// d g / d x for one path: a sum of projectors off the lines of sight, scaled by 1/range.
Mat2 geometry_gradient_jacobian(const PathGeometry& pg);

// Layout builders used by configs and experiments.

/// n colocated nodes evenly spaced on a circle, the first at angle `phase`.
NetworkLayout uniform_circle_monostatic(std::size_t n, double radius, double phase = 0.0,
                                        double c = kSpeedOfLight);

/// m transmitters and n receivers on concentric rings; receivers are rotated by
/// `rx_phase` so the two node sets interleave.
NetworkLayout concentric_rings_multistatic(std::size_t m, std::size_t n, double tx_radius, double rx_radius,
                                           double rx_phase, double c = kSpeedOfLight);

/// Rotate every node about the origin.
NetworkLayout rotated(const NetworkLayout& layout, double angle);

}  // namespace isac
