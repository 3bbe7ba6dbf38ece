#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "isac/errors.hpp"
#include "isac/fisher.hpp"
#include "oracle.hpp"

using namespace isac;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

HopSchedule hops(HopPattern pattern, int pulses, double f0, double span, std::uint64_t seed = 0) {
  ScheduleSpec s;
  s.pattern = pattern;
  s.pulses = pulses;
  s.f0 = f0;
  s.span = span;
  s.seed = seed;
  return make_schedule(s);
}

Scenario network(const NetworkLayout& layout, const HopSchedule& h, double beta, double snr_db = 10.0) {
  Scenario sc;
  sc.layout = layout;
  sc.target = {Vec2(300, 200), Vec2(20, 15)};
  const auto hc = center(h).schedule;
  for (std::size_t l = 0; l < layout.path_count(); ++l) {
    sc.schedules.push_back(hc);
    WaveformSpec wf;
    wf.alpha = std::polar(1.0, 0.3 * static_cast<double>(l));
    wf.beta = beta;
    wf.noise_var = sigma_from_snr(snr_db, wf.alpha, wf.energy);
    sc.waveforms.push_back(wf);
  }
  return sc;
}

NetworkLayout ring_multistatic() { return concentric_rings_multistatic(3, 3, 1000, 1000, kPi / 3); }

// Finite-difference FIM of the slow-time model with two fast-time tones at +/- beta,
// built from the scalar steering oracle.
Eigen::MatrixXd fd_fim(const HopSchedule& h, const Vec2& g, double tau, const Vec2& v, const WaveformSpec& wf,
                       double c) {
  const std::size_t P = h.size();
  auto mean = [&](const Eigen::VectorXd& e) {
    Eigen::VectorXd out(4 * P);
    const std::complex<double> a(e[3], e[4]);
    const double r = g.dot(Vec2(e[1], e[2]));
    for (std::size_t p = 0; p < P; ++p)
      for (int q = 0; q < 2; ++q) {
        const double tone = q == 0 ? -wf.beta : wf.beta;
        const auto s = a * std::sqrt(wf.energy / 2.0) *
                       oracle::steering_element(h.carriers[p], h.physical_carrier(p), h.pulse_times[p], e[0], r, c) *
                       std::polar(1.0, -2.0 * kPi * tone * e[0]);
        out[static_cast<Eigen::Index>(4 * p + 2 * q)] = s.real();
        out[static_cast<Eigen::Index>(4 * p + 2 * q + 1)] = s.imag();
      }
    return out;
  };
  Eigen::VectorXd eta(5);
  eta << tau, v.x(), v.y(), wf.alpha.real(), wf.alpha.imag();
  // per-parameter steps: delay, velocity, gain
  const double steps[] = {1e-9, 0.5, 0.5, 1e-4, 1e-4};
  Eigen::MatrixXd D(4 * P, 5);
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Unit(5, i) * steps[i];
    D.col(i) = (mean(eta + e) - mean(eta - e)) / (2.0 * steps[i]);
  }
  // real stacking: 2 Re{D^H D} / sigma^2 == 2 D_r^T D_r / sigma^2
  return 2.0 / wf.noise_var * D.transpose() * D;
}

}  // namespace

TEST_SUITE("fisher") {
  TEST_CASE("gain block and delay element by substitution") {
    ScheduleSpec s;
    s.pulses = 12;
    const auto m12 = moments(center(make_schedule(s)).schedule, true);
    WaveformSpec wf;
    PathGeometry pg;
    pg.g = Vec2(2, 0);
    const auto J = per_path_fim(m12, pg, wf, 3e8).full;
    CHECK(J(3, 3) == Approx(24.0));
    CHECK(J(4, 4) == Approx(24.0));
    CHECK(J(3, 4) == 0.0);

    const auto m4 = moments(center(hops(HopPattern::kLinear, 4, 28e9, 2e9)).schedule, true);
    const auto J4 = per_path_fim(m4, pg, wf, 3e8).full;
    CHECK(J4(0, 0) == Approx(8 * kPi * kPi * 4 * (5.0 / 9.0) * 1e18).epsilon(1e-12));
    CHECK(J4(0, 0) == Approx(1.7546e20).epsilon(1e-4));
  }

  TEST_CASE("analytic per-path FIM matches the finite-difference oracle at desk scale") {
    const auto raw = hops(HopPattern::kPermuted, 8, 1e6, 2e5, 3);
    const Vec2 node(1000, 0), x(300, 200), v(20, 15);
    const double c = kSpeedOfLight;
    const auto pg = path_geometry(node, node, true, x, c);
    WaveformSpec wf;
    wf.alpha = std::polar(1.0, 0.7);
    wf.beta = 5e4;
    wf.noise_var = 0.1;

    const auto hc = center(raw).schedule;
    const auto an = per_path_fim(moments(hc, true), pg, wf, c).full;
    const auto fd = fd_fim(hc, pg.g, pg.tau, v, wf, c);
    CHECK(oracle::rel_frobenius(an, fd) < 1e-3);

    const auto an_raw = per_path_fim(moments(raw), pg, wf, c, FimMode::kRaw).full;
    const auto fd_raw = fd_fim(raw, pg.g, pg.tau, v, wf, c);
    CHECK(oracle::rel_frobenius(an_raw, fd_raw) < 1e-3);

    CHECK_THROWS_AS(per_path_fim(moments(raw), pg, wf, c), NotCentered);
  }

  TEST_CASE("amplitude elimination") {
    const auto raw = hops(HopPattern::kPermuted, 8, 1e6, 2e5, 3);
    const auto pg = path_geometry(Vec2(1000, 0), Vec2(1000, 0), true, Vec2(300, 200), kSpeedOfLight);
    WaveformSpec wf;
    wf.beta = 5e4;
    const auto J = per_path_fim(moments(raw), pg, wf, kSpeedOfLight, FimMode::kRaw);
    // Schur subtraction is PSD
    const Mat3 loss = J.full.topLeftCorner<3, 3>() - J.reduced;
    CHECK(oracle::min_eigenvalue(loss) >= -1e-12 * loss.norm());

    // without gain cross terms nothing is subtracted
    const auto hc = center(hops(HopPattern::kPalindromic, 12, 28e9, 2e9)).schedule;
    const auto Jc = per_path_fim(moments(hc, true), pg, wf, kSpeedOfLight);
    Mat5 f = Jc.full;
    f.topRightCorner<3, 2>().setZero();
    f.bottomLeftCorner<2, 3>().setZero();
    CHECK(eliminate_amplitude(f) == f.topLeftCorner<3, 3>());
  }

  TEST_CASE("raw and centered reduced information are congruent") {
    const auto raw = hops(HopPattern::kPermuted, 10, 1e6, 3e5, 8);
    const auto cs = center(raw);
    const auto pg = path_geometry(Vec2(-700, 500), Vec2(900, -100), false, Vec2(300, 200), kSpeedOfLight);
    WaveformSpec wf;
    wf.beta = 2e4;
    const Mat3 J_raw = per_path_fim(moments(raw), pg, wf, kSpeedOfLight, FimMode::kRaw).reduced;
    const Mat3 J_c = per_path_fim(moments(cs.schedule, true), pg, wf, kSpeedOfLight).reduced;
    const Mat3 T = centering_jacobian(cs.mean_time, pg.g, kSpeedOfLight);
    CHECK(oracle::rel_frobenius(J_raw, T.transpose() * J_c * T) < 1e-9);
  }

  TEST_CASE("path weights reproduce the reduced per-path FIM") {
    const auto hc = center(hops(HopPattern::kPermuted, 12, 28e9, 2e9, 5)).schedule;
    const auto m = moments(hc, true);
    const auto pg = path_geometry(Vec2(1000, 0), Vec2(1000, 0), true, Vec2(300, 200), kSpeedOfLight);
    WaveformSpec wf;
    wf.beta = 48e6;
    const auto w = path_weights(m, wf, kSpeedOfLight);
    const Mat3 red = per_path_fim(m, pg, wf, kSpeedOfLight).reduced;
    const Mat2 vv = w.w_v * pg.g * pg.g.transpose();
    CHECK((red.bottomRightCorner<2, 2>() - vv).norm() <= 1e-12 * vv.norm());
    CHECK(red(0, 0) == Approx(w.w_tau).epsilon(1e-12));
    const Eigen::RowVector2d cross = w.w_cross * pg.g.transpose();
    CHECK((red.block<1, 2>(0, 1) - cross).norm() <= 1e-9 * cross.norm());
    CHECK(w.w_tau >= 0.0);
    CHECK(w.w_v >= 0.0);

    const auto pal = moments(center(hops(HopPattern::kPalindromic, 12, 28e9, 2e9)).schedule, true);
    for (bool printed : {false, true}) {
      const auto wp = path_weights(pal, wf, kSpeedOfLight, {.printed_coupling = printed});
      CHECK(wp.w_cross * wp.w_cross <= 1e-20 * wp.w_tau * wp.w_v);
    }

    WaveformSpec flat;
    const auto single = moments(center(hops(HopPattern::kLinear, 6, 28e9, 0.0)).schedule, true);
    CHECK(path_weights(single, flat, kSpeedOfLight).w_tau == 0.0);

    CHECK_THROWS_AS(path_weights(moments(hops(HopPattern::kLinear, 6, 28e9, 1e9)), wf, kSpeedOfLight), NotCentered);
  }

  TEST_CASE("eta FIM assembly") {
    const auto hc = center(hops(HopPattern::kPermuted, 12, 28e9, 2e9, 2)).schedule;
    const auto m = moments(hc, true);
    WaveformSpec wf;
    wf.beta = 48e6;
    const auto pg = path_geometry(Vec2(1000, 0), Vec2(1000, 0), true, Vec2(300, 200), kSpeedOfLight);
    const std::vector<PathWeights> w1{path_weights(m, wf, kSpeedOfLight)};
    const std::vector<PathGeometry> g1{pg};
    const MatX J1 = assemble_eta_fim(w1, g1);
    const Mat3 red = per_path_fim(m, pg, wf, kSpeedOfLight).reduced;
    CHECK(oracle::rel_frobenius(J1, red) < 1e-9);

    const std::vector<PathWeights> w2{w1[0], w1[0]};
    const std::vector<PathGeometry> g2{pg, pg};
    const MatX J2 = assemble_eta_fim(w2, g2);
    CHECK((J2.bottomRightCorner<2, 2>() - 2.0 * J1.bottomRightCorner<2, 2>()).norm() <=
          1e-15 * J1.bottomRightCorner<2, 2>().norm());
    CHECK(J2(0, 1) == 0.0);
    CHECK_THROWS_AS(assemble_eta_fim(w2, g1), DimensionMismatch);
  }

  TEST_CASE("disjoint carriers decouple paths") {
    // two paths observed separately, stacked into one parameter vector
    const auto h1 = center(hops(HopPattern::kLinear, 6, 1.0e6, 1e5)).schedule;
    const auto h2 = center(hops(HopPattern::kLinear, 6, 1.5e6, 1e5)).schedule;
    const Vec2 g1(1.3, -0.4), g2(-0.2, 1.8);
    const double c = kSpeedOfLight;
    const MeanFunction mean = [&](const VecX& e) {
      const Vec2 v(e[2], e[3]);
      CVector out(12);
      out.head(6) = std::complex<double>(e[4], e[5]) * steering_vector(h1, e[0], g1.dot(v), c);
      out.tail(6) = std::complex<double>(e[6], e[7]) * steering_vector(h2, e[1], g2.dot(v), c);
      return out;
    };
    VecX eta(8);
    eta << 2e-6, 3e-6, 20, 15, 1, 0, 0, 1;
    VecX steps(8);
    steps << 1e-9, 1e-9, 0.5, 0.5, 1e-4, 1e-4, 1e-4, 1e-4;
    const MatX J = numerical_fim(mean, eta, 1.0, steps);
    CHECK(std::abs(J(0, 1)) <= 1e-6 * std::sqrt(J(0, 0) * J(1, 1)));
    for (int i : {4, 5})
      for (int j : {6, 7}) CHECK(std::abs(J(i, j)) <= 1e-6 * std::sqrt(J(i, i) * J(j, j)));
  }

  TEST_CASE("numerical FIM of a linear model is exact and symmetric") {
    const auto h = hops(HopPattern::kPermuted, 12, 1e6, 2e5, 1);
    const CVector phi = steering_vector(h, 1e-6, 3.0, kSpeedOfLight);
    const MeanFunction mean = [&](const VecX& e) { return CVector(std::complex<double>(e[0], e[1]) * phi); };
    VecX eta(2);
    eta << 0.3, -1.1;
    for (double step : {1e-6, 1e-2, 10.0}) {
      const MatX J = numerical_fim(mean, eta, 0.5, VecX::Constant(2, step));
      CHECK(J(0, 0) == Approx(2.0 * 12 / 0.5).epsilon(1e-9));
      CHECK(J(1, 1) == Approx(2.0 * 12 / 0.5).epsilon(1e-9));
      CHECK(std::abs(J(0, 1)) < 1e-9);
      CHECK(J(0, 1) == J(1, 0));
    }
  }

  TEST_CASE("oversized finite-difference step is reported") {
    const auto h = center(hops(HopPattern::kLinear, 8, 1e6, 2e5)).schedule;
    const MeanFunction mean = [&](const VecX& e) { return steering_vector(h, e[0], 0.0, kSpeedOfLight); };
    VecX eta(1);
    eta << 1e-6;
    CHECK_THROWS_AS(numerical_fim(mean, eta, 1.0, VecX::Constant(1, 2e-6)), StepTooLarge);
  }

  TEST_CASE("chain rule: both routes agree") {
    for (auto pattern : {HopPattern::kLinear, HopPattern::kPermuted, HopPattern::kPalindromic}) {
      const auto sc = network(ring_multistatic(), hops(pattern, 12, 28e9, 2e9, 4), 48e6);
      const auto net = network_fim(sc);
      const Mat4 direct = state_fim_from_sums(net.sums, sc.layout.c);
      const Mat4 chained = chain_to_state(net.eta_fim, delay_jacobian(sc.layout, sc.target.position));
      // compare blocks on their own scale
      for (int bi = 0; bi < 2; ++bi)
        for (int bj = 0; bj < 2; ++bj) {
          const Mat2 a = direct.block<2, 2>(2 * bi, 2 * bj), b = chained.block<2, 2>(2 * bi, 2 * bj);
          CHECK((a - b).norm() <= 1e-10 * std::max(a.norm(), 1e-300));
        }
    }
  }

  TEST_CASE("single path on the x axis is rank deficient") {
    NetworkLayout l;
    l.tx_positions = l.rx_positions = {Vec2(-1000, 0)};
    l.mode = PairingMode::kMonostatic;
    Scenario sc = network(l, hops(HopPattern::kPalindromic, 12, 28e9, 2e9), 48e6);
    sc.target.position = Vec2(500, 0);
    const auto net = network_fim(sc);
    CHECK(net.sums.G_x(0, 0) == Approx(4.0 * net.weights[0].w_tau));
    CHECK(net.sums.G_x(1, 1) == 0.0);
    CHECK_THROWS_AS(crlb(net.sums, l.c), SingularGeometry);
  }

  TEST_CASE("monostatic sums carry the factor four") {
    const auto sc = network(uniform_circle_monostatic(5, 1000), hops(HopPattern::kPermuted, 12, 28e9, 2e9, 3), 48e6);
    const auto net = network_fim(sc);
    Mat2 ref = Mat2::Zero();
    for (std::size_t l = 0; l < 5; ++l) ref += net.weights[l].w_tau * net.geometries[l].u_t * net.geometries[l].u_t.transpose();
    CHECK((net.sums.G_x - 4.0 * ref).norm() <= 1e-13 * ref.norm());
  }

  TEST_CASE("closed-form bound against direct inversion") {
    for (auto pattern : {HopPattern::kPermuted, HopPattern::kPalindromic}) {
      const auto sc = network(ring_multistatic(), hops(pattern, 12, 28e9, 2e9, 9), 48e6);
      const auto net = network_fim(sc);
      const auto b = crlb(net.sums, sc.layout.c);
      const Eigen::MatrixXd ref = oracle::scaled_inverse(state_fim_from_sums(net.sums, sc.layout.c));
      CHECK(oracle::rel_frobenius(b.pos_block, ref.topLeftCorner(2, 2)) < 1e-10);
      CHECK(oracle::rel_frobenius(b.vel_block, ref.bottomRightCorner(2, 2)) < 1e-10);
      CHECK(oracle::rel_frobenius(b.cov_bound.topRightCorner<2, 2>(), ref.topRightCorner(2, 2)) < 1e-8);
      CHECK(b.pos_trace == Approx(b.pos_block.trace()));
      CHECK(oracle::min_eigenvalue(b.pos_block - b.pos_uncoupled) >= -1e-9 * b.pos_block.norm());
      CHECK(oracle::min_eigenvalue(b.vel_block - b.vel_uncoupled) >= -1e-9 * b.vel_block.norm());
      if (pattern == HopPattern::kPalindromic) {
        CHECK((b.pos_block - b.pos_uncoupled).norm() < 1e-9 * b.pos_block.norm());
        CHECK((b.vel_block - b.vel_uncoupled).norm() < 1e-9 * b.vel_block.norm());
      }
    }
  }

  TEST_CASE("linear hops: position flat and velocity worsening with span") {
    // strong delay/velocity coupling of linearly stepped carriers
    double prev_vel = 0.0;
    double first_pos = 0.0;
    for (double span : {50e6, 200e6, 1000e6, 2000e6}) {
      const auto sc = network(ring_multistatic(), hops(HopPattern::kLinear, 12, 28e9, span), 48e6);
      const auto b = crlb(sc);
      if (first_pos == 0.0) first_pos = b.pos_trace;
      CHECK(b.vel_trace > prev_vel);
      CHECK(b.pos_trace == Approx(first_pos).epsilon(0.05));
      prev_vel = b.vel_trace;
    }
  }

  TEST_CASE("bounds scale inversely with SNR") {
    const auto a = network(ring_multistatic(), hops(HopPattern::kPermuted, 12, 28e9, 2e9, 4), 48e6, 10.0);
    Scenario b = a;
    for (auto& wf : b.waveforms) wf.noise_var /= 2.0;
    const auto ra = crlb(a), rb = crlb(b);
    CHECK(rb.pos_trace == Approx(ra.pos_trace / 2).epsilon(1e-12));
    CHECK(rb.vel_trace == Approx(ra.vel_trace / 2).epsilon(1e-12));
  }

  TEST_CASE("data-averaged bound") {
    const auto sc = network(uniform_circle_monostatic(5, 1000), hops(HopPattern::kPermuted, 8, 1e6, 2e5, 3), 0.0);
    OfdmSpec cm;
    cm.constellation = Constellation::kConstantModulus;
    const auto flat = data_averaged_crlb(cm, sc, 7, 3);
    CHECK(flat.mean_beta == Approx(flat_comb_beta(1024, 1.62e3)).epsilon(1e-12));
    CHECK(oracle::rel_frobenius(flat.averaged.cov_bound, flat.deterministic.cov_bound) < 1e-9);

    OfdmSpec qam;
    const auto d = data_averaged_crlb(qam, sc, 200, 11);
    CHECK(std::abs(d.averaged.pos_trace - d.deterministic.pos_trace) < 0.02 * d.deterministic.pos_trace);
    CHECK(std::abs(d.averaged.vel_trace - d.deterministic.vel_trace) < 0.02 * d.deterministic.vel_trace);
    // inverse of the mean FIM never exceeds the mean of the inverses
    const Mat4 gap = d.mean_of_bounds - d.averaged.cov_bound;
    const Eigen::Vector4d s = d.averaged.cov_bound.diagonal().cwiseSqrt().cwiseInverse();
    CHECK(oracle::min_eigenvalue(s.asDiagonal() * gap * s.asDiagonal()) >= -1e-9);
  }

  TEST_CASE("2x2 helpers") {
    Mat2 m;
    m << 4, 1, 1, 3;
    CHECK((inverse_2x2(m) * m - Mat2::Identity()).norm() < 1e-15);
    CHECK(condition_number(Mat2::Identity()) == Approx(1.0));
    Mat2 s;
    s << 1, 0, 0, 1e-13;
    CHECK_THROWS_AS(inverse_2x2(s), SingularGeometry);
  }
}
