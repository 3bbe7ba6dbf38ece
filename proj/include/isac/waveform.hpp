#pragma once

#include <complex>
#include <span>
#include <vector>

#include "isac/rng.hpp"

namespace isac {

/// Per-path signal-strength parameters.
///
/// SNR convention: |alpha|^2 E_s / sigma_w^2 per pulse. sigma_w^2 is the total
/// complex noise variance (each real component carries half of it).
struct WaveformSpec {
  std::complex<double> alpha{1.0, 0.0};
  double energy = 1.0;     ///< E_s, per-pulse fast-time energy
  double beta = 0.0;       ///< effective (rms) bandwidth [Hz]
  double noise_var = 1.0;  ///< sigma_w^2

  double snr() const { return std::norm(alpha) * energy / noise_var; }
  void validate() const;
};

enum class Constellation {
  kConstantModulus,  ///< unit-modulus symbols (PSK-like)
  kQpsk,
  kQam16,
};

struct OfdmSpec {
  int subcarriers = 1024;
  double spacing = 1.62e3;
  Constellation constellation = Constellation::kQam16;
  /// Active-subcarrier mask; empty means every subcarrier is active.
  std::vector<bool> active;

  void validate() const;
};

/// sqrt of the centroid-relative second moment of a sampled power spectrum.
double effective_bandwidth(std::span<const double> frequencies, std::span<const double> density);

/// Effective bandwidth of a flat comb of n subcarriers: spacing * sqrt((n^2 - 1) / 12).
double flat_comb_beta(int subcarriers, double spacing);

/// Draws one OFDM symbol and returns the effective bandwidth of its power spectrum.
double draw_ofdm_beta(const OfdmSpec& spec, Rng& rng);

/// Noise variance giving the requested per-pulse SNR.
double sigma_from_snr(double snr_db, std::complex<double> alpha, double energy);

}  // namespace isac
