#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "isac/geometry.hpp"
#include "isac/schedule.hpp"
#include "isac/signal.hpp"
#include "isac/waveform.hpp"

namespace isac {

using Vec4 = Eigen::Vector4d;

struct StateEstimate {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Per-path (delay, radial speed) estimate with its information and covariance.
struct PerPathEstimate {
  double tau = 0.0;
  double radial_speed = 0.0;
  Mat2 info = Mat2::Zero();
  Mat2 cov = Mat2::Zero();
  std::size_t path_index = 0;
};

/// Four-dimensional search region over (x, y, v_x, v_y) for the grid MLE.
struct SearchBox {
  Vec4 lo = Vec4::Zero();
  Vec4 hi = Vec4::Zero();
  int coarse = 15;
  int refine = 3;
  double target_pos = 0.05;
  double target_vel = 0.05;
  int keep_top = 5;

  /// Box of half-widths `pos_half`, `vel_half` around a state.
  static SearchBox around(const TargetState& center, double pos_half, double vel_half);
  /// Throws EmptyBox unless every axis has positive width and the grid settings are usable.
  void validate() const;
};

/// Sum over paths of |phi(x, v)^H y|^2 / ||phi||^2.
double concentrated_objective(std::span<const SlowTimeObservation> obs, std::span<const HopSchedule> schedules,
                              const NetworkLayout& layout, const Vec2& position, const Vec2& velocity);

/// Coarse-to-fine grid maximization of the concentrated objective. When
/// `level_best` is given it receives the best objective of every grid level.
StateEstimate mle_estimate(std::span<const SlowTimeObservation> obs, std::span<const HopSchedule> schedules,
                           const NetworkLayout& layout, const SearchBox& box,
                           std::vector<double>* level_best = nullptr);

/// |phi(tau, r)^H y|^2 / ||phi||^2 for one path.
double glrt_objective(const CVector& y, const HopSchedule& schedule, double tau, double radial_speed, double c);

/// Rectangular (delay, radial speed) window for Stage A.
struct StageAWindow {
  double tau_center = 0.0;
  double r_center = 0.0;
  double tau_half = 0.0;
  double r_half = 0.0;
  double tau_step = 0.0;
  double r_step = 0.0;
};

struct StageAConfig {
  /// Window half-width in units of the default half-width (half an ambiguity period).
  double window_scale = 1.0;
  /// Grid oversampling relative to the resolution cell.
  double oversample = 8.0;
  /// Quadratic-interpolation passes; every pass after the first shrinks the spacing by 4.
  int refinements = 1;
};

/// Window centered on (tau, r) with delay spacing 1 / (8 span) and radial-speed
/// spacing c / (8 f_max T_syn); half-widths are half the delay ambiguity
/// period (from the smallest carrier gap) and half the Doppler ambiguity at one PRI.
StageAWindow default_window(const HopSchedule& schedule, double tau, double radial_speed, double c,
                            const StageAConfig& cfg = {});

/// Stage A: grid search of the GLRT over the window, then quadratic peak
/// interpolation. Throws WindowMiss when the grid peak sits on the window edge.
PerPathEstimate stage_a(const SlowTimeObservation& y, const HopSchedule& schedule, const WaveformSpec& wf,
                        const StageAWindow& window, double c, const StageAConfig& cfg = {});

/// Slow-time information of (tau, r) for one path given the gain energy |alpha|^2 E_s:
/// [[A, -B], [-B, D]] with A = K P Var_f, B = K (P / c) Cov(f, z), D = K P Var_z / c^2.
Mat2 stage_a_information(const ScheduleMoments& m, double gain_energy, double noise_var, double c);

struct GaussNewtonConfig {
  int max_iterations = 50;
  double step_tol = 1e-6;
  double cost_tol = 1e-9;
  double damping_condition = 1e10;
  double pos_scale = 0.05;  ///< step-norm scale [m]
  double vel_scale = 0.05;  ///< step-norm scale [m/s]
};

/// Stage B: damped Gauss-Newton fusion of per-path estimates into (x, v).
/// Throws InsufficientPaths with fewer than two estimates.
StateEstimate stage_b(std::span<const PerPathEstimate> estimates, const NetworkLayout& layout,
                      const StateEstimate& prior, const GaussNewtonConfig& cfg = {});

/// Weighted cost sum_k e_k^T W_k e_k with residuals in (meters of range sum, m/s).
double stage_b_cost(std::span<const PerPathEstimate> estimates, const NetworkLayout& layout, const Vec2& position,
                    const Vec2& velocity);

struct TsifResult {
  StateEstimate estimate;
  std::vector<PerPathEstimate> paths;
  std::size_t outages = 0;  ///< Stage A window misses
  bool failed = false;      ///< fewer than two paths survived Stage A
};

/// Two-stage estimator with Stage A windows centered on the prior state.
TsifResult tsif(std::span<const SlowTimeObservation> obs, std::span<const HopSchedule> schedules,
                std::span<const WaveformSpec> waveforms, const NetworkLayout& layout, const TargetState& prior,
                const StageAConfig& stage_a_cfg = {}, const GaussNewtonConfig& gn_cfg = {});

}  // namespace isac
