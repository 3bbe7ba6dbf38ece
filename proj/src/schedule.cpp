#include "isac/schedule.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "isac/errors.hpp"
#include "isac/rng.hpp"

namespace isac {

void HopSchedule::validate() const {
  const std::size_t P = pulse_times.size();
  if (P < 2) throw BadSchedule("schedule needs at least two pulses");
  if (carriers.size() != P)
    throw BadSchedule("schedule has " + std::to_string(carriers.size()) + " carriers for " + std::to_string(P) +
                      " pulses");
  for (std::size_t p = 1; p < P; ++p) {
    if (!(pulse_times[p] > pulse_times[p - 1])) throw BadSchedule("pulse times must be strictly increasing");
  }
  for (std::size_t p = 0; p < P; ++p) {
    if (!(physical_carrier(p) > 0.0) || !std::isfinite(physical_carrier(p)))
      throw BadSchedule("carrier " + std::to_string(p) + " is not positive");
  }
}

namespace {

std::vector<double> linear_carriers(int P, double f0, double span) {
  std::vector<double> f(static_cast<std::size_t>(P));
  for (int p = 0; p < P; ++p) f[static_cast<std::size_t>(p)] = f0 + span * (static_cast<double>(p) / (P - 1) - 0.5);
  return f;
}

}  // namespace

HopSchedule make_schedule(const ScheduleSpec& spec) {
  if (spec.pulses < 2) throw BadSchedule("schedule needs at least two pulses");
  if (!(spec.span >= 0.0)) throw BadSchedule("span must be nonnegative");
  if (!(spec.pri > 0.0)) throw BadSchedule("pulse repetition interval must be positive");

  const int P = spec.pulses;
  HopSchedule s;
  s.pri = spec.pri;
  s.f0 = spec.f0;
  s.span = spec.span;
  s.pulse_times.resize(static_cast<std::size_t>(P));
  for (int p = 0; p < P; ++p) s.pulse_times[static_cast<std::size_t>(p)] = p * spec.pri;

  switch (spec.pattern) {
    case HopPattern::kLinear:
      s.carriers = linear_carriers(P, spec.f0, spec.span);
      break;
    case HopPattern::kPermuted: {
      s.carriers = linear_carriers(P, spec.f0, spec.span);
      Rng rng(derive_seed(spec.seed, {0x686f70}));
      for (std::size_t i = s.carriers.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(uniform_index(rng, i + 1));
        std::swap(s.carriers[i], s.carriers[j]);
      }
      break;
    }
    case HopPattern::kPalindromic: {
      // V-shaped sweep: the endpoints sit at the top of the band, the middle at the bottom.
      s.carriers.resize(static_cast<std::size_t>(P));
      for (int p = 0; p < P; ++p) {
        const double a = std::abs(2.0 * p - (P - 1)) / (P - 1);
        s.carriers[static_cast<std::size_t>(p)] = spec.f0 + spec.span * (a - 0.5);
      }
      break;
    }
    case HopPattern::kCustom:
      if (spec.carriers.size() != static_cast<std::size_t>(P))
        throw BadSchedule("custom carrier list has " + std::to_string(spec.carriers.size()) + " entries, expected " +
                          std::to_string(P));
      s.carriers = spec.carriers;
      break;
  }
  s.validate();
  return s;
}

CenteredSchedule center(const HopSchedule& schedule) {
  const auto P = static_cast<double>(schedule.size());
  double mt = 0.0;
  double mf = 0.0;
  for (std::size_t p = 0; p < schedule.size(); ++p) {
    mt += schedule.pulse_times[p];
    mf += schedule.carriers[p];
  }
  mt /= P;
  mf /= P;

  CenteredSchedule out{schedule, mt, mf};
  for (std::size_t p = 0; p < schedule.size(); ++p) {
    out.schedule.pulse_times[p] -= mt;
    out.schedule.carriers[p] -= mf;
  }
  out.schedule.time_offset += mt;
  out.schedule.carrier_offset += mf;
  return out;
}

bool ScheduleMoments::is_centered(double rel_tol) const {
  return std::abs(S1) <= rel_tol * t_scale && std::abs(F1) <= rel_tol * f_scale;
}

ScheduleMoments moments(const HopSchedule& input, bool centered) {
  const HopSchedule s = centered ? center(input).schedule : input;
  const std::size_t n = s.size();
  const auto P = static_cast<double>(n);

  ScheduleMoments m;
  m.pulses = static_cast<int>(n);
  m.S0 = P;
  double sum_f_phys = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const double t = s.pulse_times[p];
    const double fd = s.carriers[p];
    const double f = s.physical_carrier(p);
    const double z = t * f;
    m.S1 += t;
    m.S2 += t * t;
    m.F1 += fd;
    m.F2 += fd * fd;
    m.sum_z += z;
    m.sum_z2 += z * z;
    m.sum_fd_z += fd * z;
    m.t_scale += std::abs(t);
    m.f_scale += std::abs(fd);
    sum_f_phys += f;
  }
  m.t_scale += P * std::abs(s.time_offset);
  m.f_scale += P * std::abs(s.carrier_offset);
  m.mean_t = m.S1 / P;
  m.mean_f = m.F1 / P;
  m.mean_z = m.sum_z / P;

  // Two-pass deviations keep these accurate when means are large.
  const double mean_f_phys = sum_f_phys / P;
  double var_t = 0.0;
  double var_f = 0.0;
  double var_z = 0.0;
  double cov_t_fc2 = 0.0;
  double cov_f_z = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const double dt = s.pulse_times[p] - m.mean_t;
    const double df = s.carriers[p] - m.mean_f;
    const double f = s.physical_carrier(p);
    const double dz = s.pulse_times[p] * f - m.mean_z;
    var_t += dt * dt;
    var_f += df * df;
    var_z += dz * dz;
    cov_t_fc2 += dt * f * f;
    cov_f_z += (f - mean_f_phys) * dz;
  }
  m.var_t = var_t;
  m.var_f = var_f / P;
  m.var_z = var_z / P;
  m.cov_t_fc2 = cov_t_fc2 / P;
  m.cov_f_z = cov_f_z / P;
  return m;
}

}  // namespace isac
