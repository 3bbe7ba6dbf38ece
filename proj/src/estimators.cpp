#include "isac/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "isac/errors.hpp"
#include "isac/fisher.hpp"

namespace isac {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Per-path data laid out for fast objective evaluation.
struct PathModel {
  Vec2 tx;
  Vec2 rx;
  bool colocated = false;
  std::vector<double> fd;  // delay-phase carriers
  std::vector<double> kz;  // F_p t_p / c
  const CVector* y = nullptr;
};

std::vector<double> doppler_factors(const HopSchedule& s, double c) {
  std::vector<double> kz(s.size());
  for (std::size_t p = 0; p < s.size(); ++p) kz[p] = s.physical_carrier(p) * s.pulse_times[p] / c;
  return kz;
}

// |sum_p conj(phi_p) y_p|^2 / P.
double matched_power(const std::vector<double>& fd, const std::vector<double>& kz, const CVector& y, double tau,
                     double r) {
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t p = 0; p < fd.size(); ++p) {
    const double phase = kTwoPi * (fd[p] * tau - kz[p] * r);
    acc += std::complex<double>(std::cos(phase), std::sin(phase)) * y[static_cast<Eigen::Index>(p)];
  }
  return std::norm(acc) / static_cast<double>(fd.size());
}

std::vector<PathModel> build_models(std::span<const SlowTimeObservation> obs, std::span<const HopSchedule> schedules,
                                    const NetworkLayout& layout) {
  const std::size_t L = layout.path_count();
  if (obs.size() != L || schedules.size() != L)
    throw DimensionMismatch("estimator: observations/schedules do not match the path count");
  std::vector<PathModel> models(L);
  for (std::size_t l = 0; l < L; ++l) {
    const auto [k, n] = layout.path_nodes(l);
    auto& m = models[l];
    m.tx = layout.tx_positions[k];
    m.rx = layout.rx_positions[n];
    m.colocated = layout.mode == PairingMode::kMonostatic;
    m.fd = schedules[l].carriers;
    m.kz = doppler_factors(schedules[l], layout.c);
    m.y = &obs[l].samples;
    if (static_cast<std::size_t>(m.y->size()) != m.fd.size())
      throw DimensionMismatch("estimator: observation " + std::to_string(l) + " has the wrong length");
  }
  return models;
}

double model_objective(const std::vector<PathModel>& models, const Vec2& x, const Vec2& v, double c) {
  double total = 0.0;
  for (const auto& m : models) {
    const PathGeometry pg = path_geometry(m.tx, m.rx, m.colocated, x, c);
    total += matched_power(m.fd, m.kz, *m.y, pg.tau, pg.g.dot(v));
  }
  return total;
}

struct Candidate {
  Vec4 theta;
  double value;
};

// Best `keep` candidates, skipping any that is an immediate grid neighbour of one already kept.
std::vector<Candidate> select_top(std::vector<Candidate> all, int keep, const Vec4& spacing) {
  std::stable_sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) { return a.value > b.value; });
  std::vector<Candidate> out;
  for (const auto& cand : all) {
    if (static_cast<int>(out.size()) >= keep) break;
    bool near = false;
    for (const auto& kept : out) {
      const Vec4 d = ((cand.theta - kept.theta).array().abs() / spacing.array()).matrix();
      if (d.maxCoeff() < 1.5) {
        near = true;
        break;
      }
    }
    if (!near) out.push_back(cand);
  }
  return out;
}

}  // namespace

SearchBox SearchBox::around(const TargetState& center, double pos_half, double vel_half) {
  SearchBox box;
  const Vec4 c(center.position.x(), center.position.y(), center.velocity.x(), center.velocity.y());
  const Vec4 half(pos_half, pos_half, vel_half, vel_half);
  box.lo = c - half;
  box.hi = c + half;
  return box;
}

void SearchBox::validate() const {
  for (int i = 0; i < 4; ++i) {
    if (!(hi[i] > lo[i]) || !std::isfinite(hi[i] - lo[i]))
      throw EmptyBox("search box axis " + std::to_string(i) + " has no interior");
  }
  if (coarse < 2) throw EmptyBox("search box needs at least two coarse points per axis");
  if (refine < 2) throw EmptyBox("refine factor must be at least 2");
  if (keep_top < 1) throw EmptyBox("keep_top must be at least 1");
  if (!(target_pos > 0.0) || !(target_vel > 0.0)) throw EmptyBox("target resolutions must be positive");
}

double concentrated_objective(std::span<const SlowTimeObservation> obs, std::span<const HopSchedule> schedules,
                              const NetworkLayout& layout, const Vec2& position, const Vec2& velocity) {
  return model_objective(build_models(obs, schedules, layout), position, velocity, layout.c);
}

StateEstimate mle_estimate(std::span<const SlowTimeObservation> obs, std::span<const HopSchedule> schedules,
                           const NetworkLayout& layout, const SearchBox& box, std::vector<double>* level_best) {
  box.validate();
  const auto models = build_models(obs, schedules, layout);
  const double c = layout.c;
  const auto eval = [&](const Vec4& th) {
    return model_objective(models, th.head<2>(), th.tail<2>(), c);
  };

  const int n = box.coarse;
  Vec4 spacing = (box.hi - box.lo) / static_cast<double>(n - 1);
  std::vector<Candidate> all;
  all.reserve(static_cast<std::size_t>(n) * n * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int m = 0; m < n; ++m) {
          const Vec4 th = box.lo + Vec4(i, j, k, m).cwiseProduct(spacing);
          all.push_back({th, eval(th)});
        }
  std::vector<Candidate> kept = select_top(std::move(all), box.keep_top, spacing);
  int levels = 1;
  if (level_best) level_best->assign(1, kept.front().value);

  const auto fine_enough = [&] { return spacing[0] <= box.target_pos && spacing[1] <= box.target_pos &&
                                        spacing[2] <= box.target_vel && spacing[3] <= box.target_vel; };
  const int r = box.refine;
  for (int level = 0; level < 64 && !fine_enough(); ++level) {
    spacing /= static_cast<double>(r);
    std::vector<Candidate> next;
    for (const auto& cand : kept) {
      for (int i = -r; i <= r; ++i)
        for (int j = -r; j <= r; ++j)
          for (int k = -r; k <= r; ++k)
            for (int m = -r; m <= r; ++m) {
              const Vec4 th = cand.theta + Vec4(i, j, k, m).cwiseProduct(spacing);
              if ((th.array() < box.lo.array()).any() || (th.array() > box.hi.array()).any()) continue;
              next.push_back({th, (i | j | k | m) == 0 ? cand.value : eval(th)});
            }
    }
    kept = select_top(std::move(next), box.keep_top, spacing);
    ++levels;
    if (level_best) level_best->push_back(kept.front().value);
  }

  StateEstimate est;
  est.position = kept.front().theta.head<2>();
  est.velocity = kept.front().theta.tail<2>();
  est.objective = kept.front().value;
  est.iterations = levels;
  est.converged = true;
  return est;
}

double glrt_objective(const CVector& y, const HopSchedule& schedule, double tau, double radial_speed, double c) {
  if (static_cast<std::size_t>(y.size()) != schedule.size())
    throw DimensionMismatch("glrt_objective: observation length differs from the schedule");
  return matched_power(schedule.carriers, doppler_factors(schedule, c), y, tau, radial_speed);
}

StageAWindow default_window(const HopSchedule& schedule, double tau, double radial_speed, double c,
                            const StageAConfig& cfg) {
  const auto P = static_cast<double>(schedule.size());
  std::vector<double> sorted = schedule.carriers;
  std::sort(sorted.begin(), sorted.end());
  const double span = sorted.back() - sorted.front();
  if (!(span > 0.0)) throw BadSchedule("stage A needs a nonzero synthesized span");
  // Smallest gap between distinct carriers sets the delay ambiguity period.
  double gap = span;
  for (std::size_t p = 1; p < sorted.size(); ++p) {
    const double d = sorted[p] - sorted[p - 1];
    if (d > 1e-9 * span) gap = std::min(gap, d);
  }
  double f_max = 0.0;
  for (std::size_t p = 0; p < schedule.size(); ++p) f_max = std::max(f_max, std::abs(schedule.physical_carrier(p)));
  const double t_syn = schedule.synthesized_time();
  const double pri = t_syn / (P - 1.0);

  StageAWindow w;
  w.tau_center = tau;
  w.r_center = radial_speed;
  w.tau_step = 1.0 / (cfg.oversample * span);
  w.r_step = c / (cfg.oversample * f_max * t_syn);
  w.tau_half = cfg.window_scale * 0.5 / gap;
  w.r_half = cfg.window_scale * 0.5 * c / (f_max * pri);
  return w;
}

Mat2 stage_a_information(const ScheduleMoments& m, double gain_energy, double noise_var, double c) {
  if (!m.is_centered()) throw NotCentered("stage A information needs a centered schedule");
  const double K = 8.0 * std::numbers::pi * std::numbers::pi * gain_energy / noise_var;
  const double P = m.S0;
  const double A = K * P * m.var_f;
  const double B = K * P / c * m.cov_f_z;
  const double D = K * P * m.var_z / (c * c);
  Mat2 info;
  info << A, -B, -B, D;
  return info;
}

PerPathEstimate stage_a(const SlowTimeObservation& y, const HopSchedule& schedule, const WaveformSpec& wf,
                        const StageAWindow& window, double c, const StageAConfig& cfg) {
  const std::size_t P = schedule.size();
  if (static_cast<std::size_t>(y.samples.size()) != P)
    throw DimensionMismatch("stage_a: observation length differs from the schedule");
  const auto kz = doppler_factors(schedule, c);
  const auto& fd = schedule.carriers;

  const int nt = static_cast<int>(std::ceil(window.tau_half / window.tau_step));
  const int nr = static_cast<int>(std::ceil(window.r_half / window.r_step));
  const int Nt = 2 * nt + 1;
  const int Nr = 2 * nr + 1;

  // Separable phases: exp(j 2 pi f tau_i) and exp(-j 2 pi kz r_j).
  Eigen::MatrixXcd A(Nt, static_cast<Eigen::Index>(P));
  Eigen::MatrixXcd B(static_cast<Eigen::Index>(P), Nr);
  for (int i = 0; i < Nt; ++i) {
    const double tau = window.tau_center + (i - nt) * window.tau_step;
    for (std::size_t p = 0; p < P; ++p) A(i, static_cast<Eigen::Index>(p)) = std::polar(1.0, kTwoPi * fd[p] * tau);
  }
  for (int j = 0; j < Nr; ++j) {
    const double r = window.r_center + (j - nr) * window.r_step;
    for (std::size_t p = 0; p < P; ++p)
      B(static_cast<Eigen::Index>(p), j) = std::polar(1.0, -kTwoPi * kz[p] * r) * y.samples[static_cast<Eigen::Index>(p)];
  }
  const Eigen::MatrixXd surface = (A * B).cwiseAbs2() / static_cast<double>(P);

  Eigen::Index bi = 0;
  Eigen::Index bj = 0;
  surface.maxCoeff(&bi, &bj);
  if (bi == 0 || bj == 0 || bi == Nt - 1 || bj == Nr - 1)
    throw WindowMiss("stage A peak on the window boundary for path " + std::to_string(y.path_index));

  const auto vertex = [](double fm, double f0, double fp) {
    const double denom = fm - 2.0 * f0 + fp;
    if (!(denom < 0.0)) return 0.0;
    return std::clamp(0.5 * (fm - fp) / denom, -1.0, 1.0);
  };

  double tau = window.tau_center + static_cast<double>(bi - nt) * window.tau_step;
  double r = window.r_center + static_cast<double>(bj - nr) * window.r_step;
  tau += vertex(surface(bi - 1, bj), surface(bi, bj), surface(bi + 1, bj)) * window.tau_step;
  r += vertex(surface(bi, bj - 1), surface(bi, bj), surface(bi, bj + 1)) * window.r_step;

  double ht = window.tau_step;
  double hr = window.r_step;
  for (int pass = 1; pass < cfg.refinements; ++pass) {
    ht /= 4.0;
    hr /= 4.0;
    const double f0 = matched_power(fd, kz, y.samples, tau, r);
    const double dt = vertex(matched_power(fd, kz, y.samples, tau - ht, r), f0,
                             matched_power(fd, kz, y.samples, tau + ht, r));
    tau += dt * ht;
    const double g0 = matched_power(fd, kz, y.samples, tau, r);
    const double dr = vertex(matched_power(fd, kz, y.samples, tau, r - hr), g0,
                             matched_power(fd, kz, y.samples, tau, r + hr));
    r += dr * hr;
  }

  // |phi^H y / P|^2 estimates |alpha|^2 E_s.
  const double gain_energy = matched_power(fd, kz, y.samples, tau, r) / static_cast<double>(P);

  PerPathEstimate est;
  est.tau = tau;
  est.radial_speed = r;
  est.path_index = y.path_index;
  est.info = stage_a_information(moments(schedule), gain_energy, wf.noise_var, c);
  est.cov = inverse_2x2(est.info, std::numeric_limits<double>::infinity());
  return est;
}

namespace {

struct FusionTerm {
  Eigen::Matrix<double, 2, 4> H;
  Vec2 e;
  Mat2 W;
};

// Residuals in (range sum [m], radial speed [m/s]) with matching weights.
std::vector<FusionTerm> fusion_terms(std::span<const PerPathEstimate> estimates, const NetworkLayout& layout,
                                     const Vec2& x, const Vec2& v) {
  const double c = layout.c;
  std::vector<FusionTerm> terms;
  terms.reserve(estimates.size());
  for (const auto& est : estimates) {
    const auto [k, n] = layout.path_nodes(est.path_index);
    const PathGeometry pg = path_geometry(layout.tx_positions[k], layout.rx_positions[n],
                                          layout.mode == PairingMode::kMonostatic, x, c);
    FusionTerm t;
    t.e << c * est.tau - (pg.range_t + pg.range_r), est.radial_speed - pg.g.dot(v);
    t.H.setZero();
    t.H.block<1, 2>(0, 0) = pg.g.transpose();
    t.H.block<1, 2>(1, 0) = v.transpose() * geometry_gradient_jacobian(pg);
    t.H.block<1, 2>(1, 2) = pg.g.transpose();
    t.W << est.info(0, 0) / (c * c), est.info(0, 1) / c, est.info(1, 0) / c, est.info(1, 1);
    terms.push_back(t);
  }
  return terms;
}

double terms_cost(const std::vector<FusionTerm>& terms) {
  double cost = 0.0;
  for (const auto& t : terms) cost += t.e.dot(t.W * t.e);
  return cost;
}

}  // namespace

double stage_b_cost(std::span<const PerPathEstimate> estimates, const NetworkLayout& layout, const Vec2& position,
                    const Vec2& velocity) {
  return terms_cost(fusion_terms(estimates, layout, position, velocity));
}

StateEstimate stage_b(std::span<const PerPathEstimate> estimates, const NetworkLayout& layout,
                      const StateEstimate& prior, const GaussNewtonConfig& cfg) {
  if (estimates.size() < 2)
    throw InsufficientPaths("stage B needs at least two path estimates, got " + std::to_string(estimates.size()));

  const Vec4 scale(cfg.pos_scale, cfg.pos_scale, cfg.vel_scale, cfg.vel_scale);
  Vec4 theta(prior.position.x(), prior.position.y(), prior.velocity.x(), prior.velocity.y());
  auto terms = fusion_terms(estimates, layout, theta.head<2>(), theta.tail<2>());
  double cost = terms_cost(terms);

  StateEstimate out;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    out.iterations = it + 1;
    Eigen::Matrix4d N = Eigen::Matrix4d::Zero();
    Vec4 b = Vec4::Zero();
    for (const auto& t : terms) {
      N += t.H.transpose() * t.W * t.H;
      b += t.H.transpose() * t.W * t.e;
    }
    // Solve in scaled coordinates theta = scale .* s.
    const Eigen::Matrix4d Ns = scale.asDiagonal() * N * scale.asDiagonal();
    const Vec4 bs = scale.cwiseProduct(b);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(Ns, Eigen::EigenvaluesOnly);
    const double lmax = eig.eigenvalues().maxCoeff();
    const double lmin = eig.eigenvalues().minCoeff();
    double mu = (lmin <= 0.0 || lmax / lmin > cfg.damping_condition) ? lmax / cfg.damping_condition : 0.0;

    bool accepted = false;
    Vec4 step_s = Vec4::Zero();
    double new_cost = cost;
    std::vector<FusionTerm> new_terms;
    for (int attempt = 0; attempt < 12; ++attempt) {
      step_s = (Ns + mu * Eigen::Matrix4d::Identity()).ldlt().solve(bs);
      const Vec4 cand = theta + scale.cwiseProduct(step_s);
      try {
        new_terms = fusion_terms(estimates, layout, cand.head<2>(), cand.tail<2>());
        new_cost = terms_cost(new_terms);
      } catch (const DegenerateGeometry&) {
        new_cost = std::numeric_limits<double>::infinity();
      }
      if (new_cost <= cost) {
        theta = cand;
        accepted = true;
        break;
      }
      mu = std::max(mu * 10.0, 1e-6 * lmax);
    }

    const double step_norm = step_s.norm();
    if (!accepted) {
      out.converged = step_norm < cfg.step_tol || cost < 1e-18;
      break;
    }
    const double decrease = (cost - new_cost) / std::max(cost, std::numeric_limits<double>::min());
    terms = std::move(new_terms);
    cost = new_cost;
    if (step_norm < cfg.step_tol && (decrease < cfg.cost_tol || cost < 1e-18)) {
      out.converged = true;
      break;
    }
  }
  out.position = theta.head<2>();
  out.velocity = theta.tail<2>();
  out.objective = cost;
  return out;
}

TsifResult tsif(std::span<const SlowTimeObservation> obs, std::span<const HopSchedule> schedules,
                std::span<const WaveformSpec> waveforms, const NetworkLayout& layout, const TargetState& prior,
                const StageAConfig& stage_a_cfg, const GaussNewtonConfig& gn_cfg) {
  const std::size_t L = layout.path_count();
  if (obs.size() != L || schedules.size() != L || waveforms.size() != L)
    throw DimensionMismatch("tsif: inputs do not match the path count");
  const auto geoms = path_geometries(layout, prior.position);

  TsifResult res;
  for (std::size_t l = 0; l < L; ++l) {
    const auto window =
        default_window(schedules[l], geoms[l].tau, geoms[l].g.dot(prior.velocity), layout.c, stage_a_cfg);
    try {
      auto est = stage_a(obs[l], schedules[l], waveforms[l], window, layout.c, stage_a_cfg);
      est.path_index = l;
      res.paths.push_back(est);
    } catch (const WindowMiss&) {
      ++res.outages;
    }
  }

  StateEstimate start;
  start.position = prior.position;
  start.velocity = prior.velocity;
  if (res.paths.size() < 2) {
    res.failed = true;
    res.estimate = start;
    return res;
  }
  res.estimate = stage_b(res.paths, layout, start, gn_cfg);
  return res;
}

}  // namespace isac
