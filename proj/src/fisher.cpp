#include "isac/fisher.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "isac/errors.hpp"
#include "isac/rng.hpp"

namespace isac {

namespace {

constexpr double kPi = std::numbers::pi;

// 8 pi^2 |alpha|^2 E_s / sigma^2, the factor shared by every phase-derivative block.
double phase_scale(const WaveformSpec& wf) { return 8.0 * kPi * kPi * std::norm(wf.alpha) * wf.energy / wf.noise_var; }

}  // namespace

PerPathFim per_path_fim(const ScheduleMoments& m, const PathGeometry& pg, const WaveformSpec& wf, double c,
                        FimMode mode) {
  if (mode == FimMode::kCentered && !m.is_centered())
    throw NotCentered("per_path_fim: moments have nonzero mean time or carrier");

  const double K = phase_scale(wf);
  const double P = m.S0;
  const double amp = 4.0 * kPi * wf.energy / wf.noise_var;
  const Vec2& g = pg.g;

  PerPathFim out;
  Mat5& J = out.full;
  J(0, 0) = K * (wf.beta * wf.beta * P + m.F2);
  J.block<1, 2>(0, 1) = -(K / c) * m.sum_fd_z * g.transpose();
  J.block<2, 2>(1, 1) = (K / (c * c)) * m.sum_z2 * (g * g.transpose());
  J.block<2, 2>(3, 3) = (2.0 * P * wf.energy / wf.noise_var) * Mat2::Identity();

  // Gain cross terms: the delay row scales with F1, the velocity rows with sum z_p / c.
  J(0, 3) = amp * m.F1 * wf.alpha.imag();
  J(0, 4) = -amp * m.F1 * wf.alpha.real();
  J.block<2, 1>(1, 3) = -amp * (m.sum_z / c) * wf.alpha.imag() * g;
  J.block<2, 1>(1, 4) = amp * (m.sum_z / c) * wf.alpha.real() * g;

  J.triangularView<Eigen::StrictlyLower>() = J.transpose();
  out.reduced = eliminate_amplitude(J);
  return out;
}

Mat3 eliminate_amplitude(const Mat5& full) {
  const Mat3 top = full.topLeftCorner<3, 3>();
  const Eigen::Matrix<double, 3, 2> cross = full.topRightCorner<3, 2>();
  const Mat2 gain = full.bottomRightCorner<2, 2>();
  const Mat2 gain_inv = inverse_2x2(gain, std::numeric_limits<double>::infinity());
  Mat3 reduced = top - cross * gain_inv * cross.transpose();
  return 0.5 * (reduced + reduced.transpose());
}

Mat3 centering_jacobian(double mean_time, const Vec2& g, double c) {
  Mat3 T = Mat3::Identity();
  T.block<1, 2>(0, 1) = -(mean_time / c) * g.transpose();
  return T;
}

PathWeights path_weights(const ScheduleMoments& m, const WaveformSpec& wf, double c, WeightOptions opts) {
  if (!m.is_centered()) throw NotCentered("path_weights: moments have nonzero mean time or carrier");
  const double K = phase_scale(wf);
  const double P = m.S0;
  PathWeights w;
  w.w_tau = K * P * (wf.beta * wf.beta + m.var_f);
  w.w_v = opts.velocity_second_moment ? K / (c * c) * m.sum_z2 : K * P / (c * c) * m.var_z;
  w.w_cross = -K * P / c * (opts.printed_coupling ? m.cov_t_fc2 : m.cov_f_z);
  return w;
}

MatX assemble_eta_fim(std::span<const PathWeights> weights, std::span<const PathGeometry> geoms) {
  if (weights.size() != geoms.size()) throw DimensionMismatch("assemble_eta_fim: weights and geometries differ");
  const auto L = static_cast<Eigen::Index>(weights.size());
  MatX J = MatX::Zero(L + 2, L + 2);
  for (Eigen::Index l = 0; l < L; ++l) {
    const auto& w = weights[static_cast<std::size_t>(l)];
    const Vec2& g = geoms[static_cast<std::size_t>(l)].g;
    J(l, l) = w.w_tau;
    J.block<1, 2>(l, L) = w.w_cross * g.transpose();
    J.block<2, 1>(L, l) = w.w_cross * g;
    J.block<2, 2>(L, L) += w.w_v * (g * g.transpose());
  }
  return J;
}

GeometrySums geometry_sums(std::span<const PathWeights> weights, std::span<const PathGeometry> geoms) {
  if (weights.size() != geoms.size()) throw DimensionMismatch("geometry_sums: weights and geometries differ");
  GeometrySums s;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const Mat2 ggT = geoms[l].g * geoms[l].g.transpose();
    s.G_x += weights[l].w_tau * ggT;
    s.G_v += weights[l].w_v * ggT;
    s.G_cross += weights[l].w_cross * ggT;
  }
  return s;
}

Mat4 state_fim_from_sums(const GeometrySums& sums, double c) {
  Mat4 J;
  J << sums.G_x / (c * c), sums.G_cross / c, sums.G_cross / c, sums.G_v;
  return J;
}

Mat4 chain_to_state(const MatX& eta_fim, const Eigen::MatrixX2d& delay_jac) {
  const Eigen::Index L = delay_jac.rows();
  if (eta_fim.rows() != L + 2 || eta_fim.cols() != L + 2)
    throw DimensionMismatch("chain_to_state: eta FIM size does not match the delay Jacobian");
  MatX G = MatX::Zero(L + 2, 4);
  G.topLeftCorner(L, 2) = delay_jac;
  G.bottomRightCorner(2, 2) = Mat2::Identity();
  Mat4 J = G.transpose() * eta_fim * G;
  return 0.5 * (J + J.transpose());
}

NetworkFim network_fim(const Scenario& scenario, WeightOptions opts) {
  scenario.validate();
  NetworkFim net;
  net.geometries = path_geometries(scenario.layout, scenario.target.position);
  net.weights.reserve(net.geometries.size());
  for (std::size_t l = 0; l < net.geometries.size(); ++l)
    net.weights.push_back(path_weights(moments(scenario.schedules[l]), scenario.waveforms[l], scenario.layout.c, opts));
  net.eta_fim = assemble_eta_fim(net.weights, net.geometries);
  net.sums = geometry_sums(net.weights, net.geometries);
  net.state_fim = state_fim_from_sums(net.sums, scenario.layout.c);
  return net;
}

double condition_number(const Mat2& m) {
  const double mean = 0.5 * (m(0, 0) + m(1, 1));
  const double half_diff = 0.5 * (m(0, 0) - m(1, 1));
  const double off = 0.5 * (m(0, 1) + m(1, 0));
  const double radius = std::hypot(half_diff, off);
  const double hi = mean + radius;
  const double lo = mean - radius;
  if (!(hi > 0.0) || !(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

Mat2 inverse_2x2(const Mat2& m, double max_condition) {
  if (std::isfinite(max_condition) && !(condition_number(m) <= max_condition))
    throw SingularGeometry("2x2 information matrix is rank deficient (condition " +
                           std::to_string(condition_number(m)) + ")");
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  if (det == 0.0 || !std::isfinite(det)) throw SingularGeometry("2x2 information matrix is singular");
  Mat2 inv;
  inv << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return inv / det;
}

CrlbResult crlb(const GeometrySums& sums, double c) {
  const Mat2 Gx_inv = inverse_2x2(sums.G_x);
  const Mat2 Gv_inv = inverse_2x2(sums.G_v);
  const Mat2& Gc = sums.G_cross;

  // Schur complements of the (x, v) information; the scale factors of c cancel
  // inside G_cross G_v^-1 G_cross and G_cross G_x^-1 G_cross.
  const Mat2 schur_x = sums.G_x - Gc * Gv_inv * Gc;
  const Mat2 schur_v = sums.G_v - Gc * Gx_inv * Gc;

  CrlbResult r;
  r.pos_block = (c * c) * inverse_2x2(schur_x, std::numeric_limits<double>::infinity());
  r.vel_block = inverse_2x2(schur_v, std::numeric_limits<double>::infinity());
  r.pos_block = 0.5 * (r.pos_block + r.pos_block.transpose());
  r.vel_block = 0.5 * (r.vel_block + r.vel_block.transpose());
  r.pos_uncoupled = (c * c) * Gx_inv;
  r.vel_uncoupled = Gv_inv;

  // Off-diagonal block of the full inverse: -CRLB(x) B C^-1 with B = G_cross / c.
  const Mat2 off = -r.pos_block * (Gc / c) * Gv_inv;
  r.cov_bound << r.pos_block, off, off.transpose(), r.vel_block;
  r.pos_trace = r.pos_block.trace();
  r.vel_trace = r.vel_block.trace();
  return r;
}

MatX numerical_fim(const MeanFunction& mean, const VecX& eta, double noise_var, const VecX& steps) {
  if (steps.size() != eta.size()) throw DimensionMismatch("numerical_fim: one step per parameter is required");
  const Eigen::Index n = eta.size();

  const auto fim_with = [&](const VecX& h) {
    const CVector mu0 = mean(eta);
    Eigen::MatrixXcd D(mu0.size(), n);
    for (Eigen::Index i = 0; i < n; ++i) {
      VecX up = eta;
      VecX dn = eta;
      up[i] += h[i];
      dn[i] -= h[i];
      const CVector diff = mean(up) - mean(dn);
      if (diff.size() != mu0.size()) throw DimensionMismatch("numerical_fim: mean length changed under perturbation");
      D.col(i) = diff / (2.0 * h[i]);
    }
    MatX J = (2.0 / noise_var) * (D.adjoint() * D).real();
    return MatX(0.5 * (J + J.transpose()));
  };

  const MatX coarse = fim_with(steps);
  const MatX fine = fim_with(0.5 * steps);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double scale = std::sqrt(std::abs(fine(i, i) * fine(j, j)));
      if (scale == 0.0) continue;
      if (std::abs(coarse(i, j) - fine(i, j)) > 0.05 * scale)
        throw StepTooLarge("numerical_fim: entry (" + std::to_string(i) + "," + std::to_string(j) +
                           ") changes by more than 5% when the step is halved");
    }
  }
  return fine;
}

DataAveragedCrlb data_averaged_crlb(const OfdmSpec& ofdm, const Scenario& scenario, int draws, std::uint64_t seed,
                                    WeightOptions opts) {
  if (draws < 1) throw ConfigError("data_averaged_crlb: needs at least one draw");
  scenario.validate();
  const double c = scenario.layout.c;
  const std::size_t M = scenario.layout.tx_positions.size();
  const std::size_t L = scenario.path_count();

  DataAveragedCrlb out;
  out.draws = draws;
  GeometrySums mean_sums;
  Scenario draw = scenario;
  double beta_sum = 0.0;
  for (int d = 0; d < draws; ++d) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(d)}));
    std::vector<double> beta(M);
    for (auto& b : beta) {
      b = draw_ofdm_beta(ofdm, rng);
      beta_sum += b;
    }
    for (std::size_t l = 0; l < L; ++l) draw.waveforms[l].beta = beta[scenario.layout.path_nodes(l).first];
    const auto net = network_fim(draw, opts);
    mean_sums.G_x += net.sums.G_x;
    mean_sums.G_v += net.sums.G_v;
    mean_sums.G_cross += net.sums.G_cross;
    out.mean_of_bounds += crlb(net.sums, c).cov_bound;
  }
  const double n = draws;
  mean_sums.G_x /= n;
  mean_sums.G_v /= n;
  mean_sums.G_cross /= n;
  out.mean_of_bounds /= n;
  out.averaged = crlb(mean_sums, c);

  out.mean_beta = beta_sum / (n * static_cast<double>(M));
  Scenario fixed = scenario;
  for (auto& wf : fixed.waveforms) wf.beta = out.mean_beta;
  out.deterministic = crlb(fixed, opts);
  return out;
}

}  // namespace isac
