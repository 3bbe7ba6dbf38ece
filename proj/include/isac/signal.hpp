#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "isac/geometry.hpp"
#include "isac/schedule.hpp"
#include "isac/waveform.hpp"

namespace isac {

using CVector = Eigen::VectorXcd;

/// Post-matched-filter slow-time samples of one path.
struct SlowTimeObservation {
  CVector samples;
  std::size_t path_index = 0;
};

/// Element p is exp(-j 2 pi f_p tau) exp(+j 2 pi (F_p / c) r t_p), where f_p
/// is the delay-phase carrier and F_p the physical carrier. Unit modulus.
CVector steering_vector(const HopSchedule& schedule, double tau, double radial_speed, double c);

/// A single-target scenario: one schedule and one waveform per path.
struct Scenario {
  NetworkLayout layout;
  TargetState target;
  std::vector<HopSchedule> schedules;
  std::vector<WaveformSpec> waveforms;

  std::size_t path_count() const { return layout.path_count(); }
  /// Throws DimensionMismatch / ConfigError / BadSchedule on inconsistency.
  void validate() const;
};

/// y_l = alpha_l sqrt(E_s) phi_l(tau_l(x), g_l^T v) + w_l with w_l ~ CN(0, sigma_w^2 I).
///
/// Every path draws its noise from its own stream derived from `seed`, so the
/// result depends only on the seed and path ordering.
std::vector<SlowTimeObservation> synthesize(const NetworkLayout& layout, const TargetState& target,
                                            std::span<const HopSchedule> schedules,
                                            std::span<const WaveformSpec> waveforms, std::uint64_t seed);

inline std::vector<SlowTimeObservation> synthesize(const Scenario& scenario, std::uint64_t seed) {
  return synthesize(scenario.layout, scenario.target, scenario.schedules, scenario.waveforms, seed);
}

}  // namespace isac
