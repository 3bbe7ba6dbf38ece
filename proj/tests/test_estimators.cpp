#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "isac/errors.hpp"
#include "isac/estimators.hpp"
#include "isac/fisher.hpp"

using namespace isac;
using doctest::Approx;

namespace {

struct Noiseless {
  NetworkLayout layout;
  TargetState truth{Vec2(300, 200), Vec2(20, 15)};
  std::vector<HopSchedule> schedules;
  std::vector<WaveformSpec> waveforms;
  std::vector<SlowTimeObservation> obs;
};

Noiseless make(HopPattern pattern, double f0, double span, std::size_t nodes = 5, double noise_var = 1e-30) {
  Noiseless n;
  n.layout = uniform_circle_monostatic(nodes, 1000);
  ScheduleSpec s;
  s.pattern = pattern;
  s.pulses = 12;
  s.f0 = f0;
  s.span = span;
  s.seed = 11;
  const auto h = center(make_schedule(s)).schedule;
  for (std::size_t l = 0; l < nodes; ++l) {
    n.schedules.push_back(h);
    WaveformSpec wf;
    wf.alpha = std::polar(1.0, 0.9 * static_cast<double>(l) + 0.1);
    wf.noise_var = noise_var;
    n.waveforms.push_back(wf);
  }
  n.obs = synthesize(n.layout, n.truth, n.schedules, n.waveforms, 17);
  return n;
}

Noiseless scaled() { return make(HopPattern::kPermuted, 0.9e9, 10e6); }

SearchBox scaled_box() {
  SearchBox b;
  b.lo << 252.7, 153.1, -28.4, -36.2;
  b.hi << 349.9, 251.3, 67.5, 63.8;
  b.target_pos = b.target_vel = 0.01;
  return b;
}

}  // namespace

TEST_SUITE("estimators") {
  TEST_CASE("concentrated objective at truth and under phase rotation") {
    const auto n = make(HopPattern::kPalindromic, 28e9, 2e9);
    const double at_truth =
        concentrated_objective(n.obs, n.schedules, n.layout, n.truth.position, n.truth.velocity);
    CHECK(at_truth == Approx(5.0 * 12.0).epsilon(1e-10));

    auto rotated = n.obs;
    for (std::size_t l = 0; l < rotated.size(); ++l) rotated[l].samples *= std::polar(1.0, 1.7 * l);
    CHECK(concentrated_objective(rotated, n.schedules, n.layout, n.truth.position, n.truth.velocity) ==
          Approx(at_truth).epsilon(1e-12));

    const double off = concentrated_objective(n.obs, n.schedules, n.layout, n.truth.position + Vec2(10, 0),
                                              n.truth.velocity);
    CHECK(off < at_truth);
  }

  TEST_CASE("grid MLE recovers the noiseless truth within one final cell") {
    const auto n = scaled();
    const SearchBox box = scaled_box();
    std::vector<double> levels;
    const auto est = mle_estimate(n.obs, n.schedules, n.layout, box, &levels);
    Vec4 cell = (box.hi - box.lo) / (box.coarse - 1);
    for (int i = 1; i < est.iterations; ++i) cell /= box.refine;
    CHECK(est.converged);
    CHECK(static_cast<int>(levels.size()) == est.iterations);
    CHECK(std::abs(est.position.x() - 300) <= cell[0]);
    CHECK(std::abs(est.position.y() - 200) <= cell[1]);
    CHECK(std::abs(est.velocity.x() - 20) <= cell[2]);
    CHECK(std::abs(est.velocity.y() - 15) <= cell[3]);
    for (std::size_t i = 1; i < levels.size(); ++i) CHECK(levels[i] >= levels[i - 1]);

    // deterministic for fixed inputs
    const auto again = mle_estimate(n.obs, n.schedules, n.layout, box);
    CHECK(again.position == est.position);
    CHECK(again.velocity == est.velocity);
  }

  TEST_CASE("single-path geometry still returns a converged estimate") {
    auto n = make(HopPattern::kPermuted, 0.9e9, 10e6, 1);
    auto box = scaled_box();
    box.target_pos = box.target_vel = 1.0;
    const auto est = mle_estimate(n.obs, n.schedules, n.layout, box);
    CHECK(est.converged);
    CHECK(std::isfinite(est.objective));
  }

  TEST_CASE("invalid boxes") {
    SearchBox b = scaled_box();
    b.hi[2] = b.lo[2];
    CHECK_THROWS_AS(b.validate(), EmptyBox);
    b = scaled_box();
    b.refine = 1;
    CHECK_THROWS_AS(b.validate(), EmptyBox);
    CHECK_NOTHROW(SearchBox::around(TargetState{}, 1, 1).validate());
  }

  TEST_CASE("GLRT objective") {
    const auto n = scaled();
    const auto pg = path_geometries(n.layout, n.truth.position)[0];
    const double r = pg.g.dot(n.truth.velocity);
    const CVector& y = n.obs[0].samples;
    const double peak = glrt_objective(y, n.schedules[0], pg.tau, r, n.layout.c);
    CHECK(peak == Approx(12.0).epsilon(1e-10));
    for (double dt : {-2e-9, 1e-9, 5e-9})
      for (double dr : {-0.5, 0.0, 0.5})
        if (dt != 0.0 || dr != 0.0) CHECK(glrt_objective(y, n.schedules[0], pg.tau + dt, r + dr, n.layout.c) < peak);

    CHECK(glrt_objective(CVector::Zero(12), n.schedules[0], pg.tau, r, n.layout.c) == 0.0);

    // commensurate carriers alias in delay by 1 / (carrier gap)
    ScheduleSpec lin;
    lin.pulses = 12;
    lin.f0 = 0.9e9;
    lin.span = 11e6;
    const auto h = center(make_schedule(lin)).schedule;
    const CVector yl = steering_vector(h, 3e-6, 0.0, n.layout.c);
    CHECK(glrt_objective(yl, h, 3e-6 + 1.0 / 1e6, 0.0, n.layout.c) == Approx(12.0).epsilon(1e-9));
  }

  TEST_CASE("Stage A recovers a noiseless path within one refined cell") {
    const auto n = scaled();
    const auto geoms = path_geometries(n.layout, n.truth.position);
    StageAConfig cfg;
    cfg.refinements = 3;
    for (std::size_t l = 0; l < 5; ++l) {
      const double r = geoms[l].g.dot(n.truth.velocity);
      const auto w = default_window(n.schedules[l], geoms[l].tau + 3e-9, r - 0.7, n.layout.c, cfg);
      const auto est = stage_a(n.obs[l], n.schedules[l], n.waveforms[l], w, n.layout.c, cfg);
      const double shrink = std::pow(4.0, cfg.refinements - 1);
      CHECK(std::abs(est.tau - geoms[l].tau) <= w.tau_step / shrink);
      CHECK(std::abs(est.radial_speed - r) <= w.r_step / shrink);
      CHECK(est.path_index == l);
      CHECK(est.info.determinant() > 0.0);
      // compare in units where the information has a unit diagonal
      const Eigen::Vector2d s = est.info.diagonal().cwiseSqrt();
      const Mat2 prod = (s.asDiagonal() * est.cov * s.asDiagonal()) *
                        (s.cwiseInverse().asDiagonal() * est.info * s.cwiseInverse().asDiagonal());
      CHECK((prod - Mat2::Identity()).norm() < 1e-9);
    }
  }

  TEST_CASE("Stage A information structure") {
    ScheduleSpec s;
    s.pattern = HopPattern::kPalindromic;
    s.pulses = 12;
    s.f0 = 0.9e9;
    s.span = 10e6;
    const auto m = moments(center(make_schedule(s)).schedule, true);
    const Mat2 info = stage_a_information(m, 1.0, 0.1, kSpeedOfLight);
    CHECK(std::abs(info(0, 1)) <= 1e-12 * std::sqrt(info(0, 0) * info(1, 1)));
    CHECK(info.determinant() > 0.0);

    s.pattern = HopPattern::kPermuted;
    s.seed = 4;
    const Mat2 full = stage_a_information(moments(center(make_schedule(s)).schedule, true), 1.0, 0.1, kSpeedOfLight);
    CHECK(full(0, 1) == full(1, 0));
    CHECK(full.determinant() > 0.0);
    CHECK_THROWS_AS(stage_a_information(moments(make_schedule(s)), 1.0, 0.1, kSpeedOfLight), NotCentered);
  }

  TEST_CASE("Stage A reports a peak on the window edge") {
    const auto n = scaled();
    const auto pg = path_geometries(n.layout, n.truth.position)[0];
    const double r = pg.g.dot(n.truth.velocity);
    auto w = default_window(n.schedules[0], pg.tau, r, n.layout.c);
    // a narrow window on the flank of the main lobe
    w.tau_center = pg.tau + 0.3 / 10e6;
    w.tau_half = 0.2 / 10e6;
    CHECK_THROWS_AS(stage_a(n.obs[0], n.schedules[0], n.waveforms[0], w, n.layout.c), WindowMiss);
  }

  TEST_CASE("Stage B converges from an offset prior on exact inputs") {
    const auto n = scaled();
    const auto geoms = path_geometries(n.layout, n.truth.position);
    std::vector<PerPathEstimate> est;
    for (std::size_t l = 0; l < 5; ++l) {
      PerPathEstimate e;
      e.tau = geoms[l].tau;
      e.radial_speed = geoms[l].g.dot(n.truth.velocity);
      e.info = stage_a_information(moments(n.schedules[l], true), 1.0, 0.01, n.layout.c);
      e.cov = inverse_2x2(e.info, INFINITY);
      e.path_index = l;
      est.push_back(e);
    }
    StateEstimate prior;
    prior.position = n.truth.position + Vec2(50, 0) * std::cos(0.6) + Vec2(0, 50) * std::sin(0.6);
    prior.velocity = n.truth.velocity + Vec2(5 * std::cos(2.0), 5 * std::sin(2.0));
    const auto out = stage_b(est, n.layout, prior);
    CHECK(out.converged);
    CHECK((out.position - n.truth.position).norm() < 1e-6);
    CHECK((out.velocity - n.truth.velocity).norm() < 1e-6);
    CHECK(stage_b_cost(est, n.layout, out.position, out.velocity) <=
          stage_b_cost(est, n.layout, prior.position, prior.velocity));

    const std::vector<PerPathEstimate> one{est[0]};
    CHECK_THROWS_AS(stage_b(one, n.layout, prior), InsufficientPaths);
  }

  TEST_CASE("two-stage estimator end to end") {
    const auto n = make(HopPattern::kPermuted, 0.9e9, 10e6, 5, sigma_from_snr(30, 1.0, 1.0));
    StageAConfig cfg;
    cfg.refinements = 3;
    const auto res = tsif(n.obs, n.schedules, n.waveforms, n.layout, n.truth, cfg);
    CHECK_FALSE(res.failed);
    CHECK(res.outages == 0);
    CHECK(res.paths.size() == 5);
    CHECK((res.estimate.position - n.truth.position).norm() < 1.0);
    CHECK((res.estimate.velocity - n.truth.velocity).norm() < 1.0);
  }
}
