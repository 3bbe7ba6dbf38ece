#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "isac/geometry.hpp"
#include "isac/schedule.hpp"
#include "isac/signal.hpp"
#include "isac/waveform.hpp"

namespace isac {

using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

/// Condition-number ceiling for the geometry-weighted 2x2 matrices.
inline constexpr double kMaxGeometryCondition = 1e12;

enum class FimMode {
  kCentered,  ///< moments must have zero-mean times and carriers
  kRaw,       ///< any moments; amplitude cross blocks are kept
};

/// Fisher information of one path.
///
/// `full` is ordered (tau, v_x, v_y, Re alpha, Im alpha); `reduced` is the
/// (tau, v_x, v_y) information left after eliminating the complex gain.
struct PerPathFim {
  Mat5 full = Mat5::Zero();
  Mat3 reduced = Mat3::Zero();
};

PerPathFim per_path_fim(const ScheduleMoments& m, const PathGeometry& pg, const WaveformSpec& wf, double c,
                        FimMode mode = FimMode::kCentered);

/// Schur complement of the gain block: J_(tau,v) - J_(tau,v),a J_aa^-1 J_a,(tau,v).
Mat3 eliminate_amplitude(const Mat5& full);

/// Jacobian T of (tau_centered, v) with respect to (tau_raw, v) for a time origin
/// shifted by `mean_time`; raw and centered reduced FIMs satisfy J_raw = T^T J_c T.
Mat3 centering_jacobian(double mean_time, const Vec2& g, double c);

struct WeightOptions {
  /// Use sum z_p^2 instead of P Var_z for the velocity weight.
  bool velocity_second_moment = false;
  /// Use Cov(t, f_c^2) instead of Cov(f_c, t f_c) for the coupling weight.
  bool printed_coupling = false;
};

/// Scalars that multiply g g^T (velocity), 1 (delay) and g^T (cross) in the
/// amplitude-reduced per-path information.
struct PathWeights {
  double w_tau = 0.0;
  double w_v = 0.0;
  double w_cross = 0.0;
};

/// Requires centered moments (throws NotCentered otherwise).
PathWeights path_weights(const ScheduleMoments& m, const WaveformSpec& wf, double c, WeightOptions opts = {});

/// (L+2) x (L+2) information over (tau_1 .. tau_L, v_x, v_y).
MatX assemble_eta_fim(std::span<const PathWeights> weights, std::span<const PathGeometry> geoms);

struct GeometrySums {
  Mat2 G_x = Mat2::Zero();
  Mat2 G_v = Mat2::Zero();
  Mat2 G_cross = Mat2::Zero();
};

GeometrySums geometry_sums(std::span<const PathWeights> weights, std::span<const PathGeometry> geoms);

/// [G_x / c^2, G_cross / c; G_cross / c, G_v].
Mat4 state_fim_from_sums(const GeometrySums& sums, double c);

/// G^T J_eta G with G = blockdiag(d tau / d x, I_2), by explicit products.
Mat4 chain_to_state(const MatX& eta_fim, const Eigen::MatrixX2d& delay_jac);

struct NetworkFim {
  MatX eta_fim;
  Mat4 state_fim = Mat4::Zero();
  GeometrySums sums;
  std::vector<PathWeights> weights;
  std::vector<PathGeometry> geometries;
};

/// Assembles the network information of a scenario whose schedules are centered.
NetworkFim network_fim(const Scenario& scenario, WeightOptions opts = {});

struct CrlbResult {
  Mat4 cov_bound = Mat4::Zero();
  Mat2 pos_block = Mat2::Zero();
  Mat2 vel_block = Mat2::Zero();
  /// c^2 G_x^-1 and G_v^-1: the bounds without delay/velocity coupling.
  Mat2 pos_uncoupled = Mat2::Zero();
  Mat2 vel_uncoupled = Mat2::Zero();
  double pos_trace = 0.0;
  double vel_trace = 0.0;
};

/// Closed-form bound via 2x2 Schur complements. Throws SingularGeometry when
/// G_x or G_v has condition number above kMaxGeometryCondition.
CrlbResult crlb(const GeometrySums& sums, double c);

inline CrlbResult crlb(const Scenario& scenario, WeightOptions opts = {}) {
  return crlb(network_fim(scenario, opts).sums, scenario.layout.c);
}

/// Condition number of a symmetric 2x2 matrix (infinity when singular).
double condition_number(const Mat2& m);

/// Closed-form inverse of a symmetric 2x2; throws SingularGeometry above `max_condition`.
Mat2 inverse_2x2(const Mat2& m, double max_condition = kMaxGeometryCondition);

using MeanFunction = std::function<CVector(const VecX&)>;

/// Complex-Gaussian FIM (2 / sigma^2) Re{ D^H D } with central-difference
/// derivatives D. The step vector is halved once as a check: if any entry,
/// normalized by sqrt(J_ii J_jj), moves by more than 5% the call throws
/// StepTooLarge. Returns the half-step estimate.
MatX numerical_fim(const MeanFunction& mean, const VecX& eta, double noise_var, const VecX& steps);

struct DataAveragedCrlb {
  CrlbResult averaged;       ///< inverse of the draw-averaged FIM
  CrlbResult deterministic;  ///< bound at the mean drawn beta
  Mat4 mean_of_bounds = Mat4::Zero();  ///< average of per-draw bounds
  double mean_beta = 0.0;
  int draws = 0;
};

/// Draws one effective bandwidth per transmitter and realization, averages the
/// state FIM over realizations and inverts it.
DataAveragedCrlb data_averaged_crlb(const OfdmSpec& ofdm, const Scenario& scenario, int draws, std::uint64_t seed,
                                    WeightOptions opts = {});

}  // namespace isac
