#include "isac/signal.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "isac/errors.hpp"
#include "isac/rng.hpp"

namespace isac {

CVector steering_vector(const HopSchedule& schedule, double tau, double radial_speed, double c) {
  const std::size_t P = schedule.size();
  CVector phi(static_cast<Eigen::Index>(P));
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t p = 0; p < P; ++p) {
    const double phase = -two_pi * schedule.carriers[p] * tau +
                         two_pi * schedule.physical_carrier(p) / c * radial_speed * schedule.pulse_times[p];
    phi[static_cast<Eigen::Index>(p)] = std::polar(1.0, phase);
  }
  return phi;
}

void Scenario::validate() const {
  layout.validate();
  const std::size_t L = layout.path_count();
  if (schedules.size() != L)
    throw DimensionMismatch("scenario has " + std::to_string(schedules.size()) + " schedules for " +
                            std::to_string(L) + " paths");
  if (waveforms.size() != L)
    throw DimensionMismatch("scenario has " + std::to_string(waveforms.size()) + " waveforms for " +
                            std::to_string(L) + " paths");
  for (const auto& s : schedules) s.validate();
  for (const auto& w : waveforms) w.validate();
}

std::vector<SlowTimeObservation> synthesize(const NetworkLayout& layout, const TargetState& target,
                                            std::span<const HopSchedule> schedules,
                                            std::span<const WaveformSpec> waveforms, std::uint64_t seed) {
  const std::size_t L = layout.path_count();
  if (schedules.size() != L || waveforms.size() != L)
    throw DimensionMismatch("synthesize: schedules/waveforms do not match the path count");

  const auto geoms = path_geometries(layout, target.position);
  std::vector<SlowTimeObservation> out(L);
  for (std::size_t l = 0; l < L; ++l) {
    const auto& wf = waveforms[l];
    const double r = geoms[l].g.dot(target.velocity);
    const std::complex<double> gain = wf.alpha * std::sqrt(wf.energy);
    out[l].path_index = l;
    out[l].samples = gain * steering_vector(schedules[l], geoms[l].tau, r, layout.c);
    Rng rng(derive_seed(seed, {l}));
    for (Eigen::Index p = 0; p < out[l].samples.size(); ++p) out[l].samples[p] += complex_normal(rng, wf.noise_var);
  }
  return out;
}

}  // namespace isac
