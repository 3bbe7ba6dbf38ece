#pragma once

#include <cstdint>
#include <vector>

namespace isac {

enum class HopPattern {
  kLinear,       ///< carriers step evenly from f0 - span/2 to f0 + span/2
  kPermuted,     ///< the linear carrier set in a seeded random order
  kPalindromic,  ///< f_p == f_{P-1-p}
  kCustom,       ///< caller-supplied carriers
};

struct ScheduleSpec {
  HopPattern pattern = HopPattern::kLinear;
  int pulses = 12;
  double pri = 1e-3;
  double f0 = 28e9;
  double span = 2e9;
  std::uint64_t seed = 0;        ///< used by kPermuted
  std::vector<double> carriers;  ///< used by kCustom
};

/// Slow-time pulse instants and per-pulse carriers for one path.
///
/// `carriers` are the frequencies that multiply the delay in the steering
/// phase. After centering they are zero-mean and `carrier_offset` holds the
/// removed mean, so the physical carrier (which drives the Doppler term) is
/// always carriers[p] + carrier_offset. `time_offset` likewise records the
/// removed mean pulse time.
struct HopSchedule {
  std::vector<double> pulse_times;
  std::vector<double> carriers;
  double pri = 0.0;
  double f0 = 0.0;
  double span = 0.0;
  double time_offset = 0.0;
  double carrier_offset = 0.0;

  std::size_t size() const { return pulse_times.size(); }
  double physical_carrier(std::size_t p) const { return carriers[p] + carrier_offset; }
  /// Total synthesized time t_{P-1} - t_0.
  double synthesized_time() const { return pulse_times.back() - pulse_times.front(); }
  /// Throws BadSchedule when an invariant is broken.
  void validate() const;
};

HopSchedule make_schedule(const ScheduleSpec& spec);

struct CenteredSchedule {
  HopSchedule schedule;
  double mean_time = 0.0;
  double mean_carrier = 0.0;
};

/// Shift the time origin and the delay-phase carrier reference to their means.
CenteredSchedule center(const HopSchedule& schedule);

/// Slow-time and carrier moments.
///
/// Carrier sums (F1, F2, var_f) use the delay-phase carriers; the mixed
/// sequence z_p = t_p f_p uses physical carriers on the schedule's own time
/// axis. var_t is the unnormalized sum of squared deviations, var_f and
/// var_z are per-pulse variances.
struct ScheduleMoments {
  int pulses = 0;
  double S0 = 0.0;
  double S1 = 0.0;
  double S2 = 0.0;
  double F1 = 0.0;
  double F2 = 0.0;
  double var_t = 0.0;
  double var_f = 0.0;
  double var_z = 0.0;
  double mean_z = 0.0;
  double sum_z = 0.0;
  double sum_z2 = 0.0;
  /// (1/P) sum t~_p f_p^2 on the centered time axis.
  double cov_t_fc2 = 0.0;
  /// (1/P) sum (f_p - mean f)(z_p - mean z): the delay/radial-speed coupling.
  double cov_f_z = 0.0;
  /// sum f_d,p z_p with delay-phase carriers; enters the raw (uncentered) cross block.
  double sum_fd_z = 0.0;
  /// Means that were nonzero when the moments were taken.
  double mean_t = 0.0;
  double mean_f = 0.0;
  /// Raw magnitudes (sum |t| and sum |f| before centering) for centering tolerances.
  double t_scale = 0.0;
  double f_scale = 0.0;

  bool is_centered(double rel_tol = 1e-12) const;
};

ScheduleMoments moments(const HopSchedule& schedule, bool centered = false);

}  // namespace isac
