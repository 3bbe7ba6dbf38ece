#include "isac/waveform.hpp"

#include <cmath>
#include <string>

#include "isac/errors.hpp"

namespace isac {

void WaveformSpec::validate() const {
  if (!(energy > 0.0)) throw ConfigError("waveform: energy must be positive");
  if (!(beta >= 0.0)) throw ConfigError("waveform: beta must be nonnegative");
  if (!(noise_var > 0.0)) throw ConfigError("waveform: noise variance must be positive");
}

void OfdmSpec::validate() const {
  if (subcarriers < 1) throw ConfigError("ofdm: needs at least one subcarrier");
  if (!(spacing > 0.0)) throw ConfigError("ofdm: subcarrier spacing must be positive");
  if (!active.empty() && active.size() != static_cast<std::size_t>(subcarriers))
    throw ConfigError("ofdm: active mask has " + std::to_string(active.size()) + " entries");
}

double effective_bandwidth(std::span<const double> frequencies, std::span<const double> density) {
  if (frequencies.size() != density.size()) throw DimensionMismatch("spectrum grid and density differ in length");
  double total = 0.0;
  double first = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    if (density[i] < 0.0) throw EmptySpectrum("negative power density");
    total += density[i];
    first += frequencies[i] * density[i];
  }
  if (!(total > 0.0)) throw EmptySpectrum("spectrum carries no power");
  const double centroid = first / total;
  double second = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    const double df = frequencies[i] - centroid;
    second += df * df * density[i];
  }
  return std::sqrt(second / total);
}

double flat_comb_beta(int subcarriers, double spacing) {
  const double n = subcarriers;
  return spacing * std::sqrt((n * n - 1.0) / 12.0);
}

namespace {

double symbol_power(Constellation c, Rng& rng) {
  switch (c) {
    case Constellation::kConstantModulus:
    case Constellation::kQpsk:
      return 1.0;
    case Constellation::kQam16: {
      // Levels {-3,-1,1,3}/sqrt(10) per rail: unit average power.
      const auto level = [&rng] { return 2.0 * static_cast<double>(uniform_index(rng, 4)) - 3.0; };
      const double i = level();
      const double q = level();
      return (i * i + q * q) / 10.0;
    }
  }
  return 1.0;
}

}  // namespace

double draw_ofdm_beta(const OfdmSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<double> freq;
  std::vector<double> power;
  freq.reserve(static_cast<std::size_t>(spec.subcarriers));
  power.reserve(static_cast<std::size_t>(spec.subcarriers));
  for (int k = 0; k < spec.subcarriers; ++k) {
    if (!spec.active.empty() && !spec.active[static_cast<std::size_t>(k)]) continue;
    freq.push_back(k * spec.spacing);
    power.push_back(symbol_power(spec.constellation, rng));
  }
  return effective_bandwidth(freq, power);
}

double sigma_from_snr(double snr_db, std::complex<double> alpha, double energy) {
  return std::norm(alpha) * energy * std::pow(10.0, -snr_db / 10.0);
}

}  // namespace isac
