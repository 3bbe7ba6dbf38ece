#include "isac/experiments.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ostream>
#include <string>

#include "isac/errors.hpp"
#include "isac/parallel.hpp"
#include "isac/rng.hpp"

namespace isac {

NetworkLayout LayoutSpec::build(double c) const {
  if (mode == PairingMode::kMonostatic) return uniform_circle_monostatic(tx_count, radius, phase, c);
  NetworkLayout layout = concentric_rings_multistatic(tx_count, rx_count, radius, rx_radius, rx_phase, c);
  if (phase != 0.0) layout = rotated(layout, phase);
  return layout;
}

std::map<std::string, LayoutSpec> default_layouts() {
  LayoutSpec multi;
  multi.mode = PairingMode::kMultistatic;
  multi.tx_count = 3;
  multi.rx_count = 3;
  LayoutSpec mono5;
  LayoutSpec mono3;
  mono3.tx_count = 3;
  mono3.rx_count = 3;
  return {{"multistatic", multi}, {"monostatic", mono5}, {"monostatic3", mono3}};
}

const char* estimator_name(EstimatorKind kind) { return kind == EstimatorKind::kMle ? "mle" : "tsif"; }

const char* sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kBandwidth:
      return "bandwidth";
    case SweepAxis::kPulses:
      return "pulses";
    case SweepAxis::kJoint:
      return "joint";
  }
  return "bandwidth";
}

const LayoutSpec& ExperimentConfig::layout(const std::string& name) const {
  const auto it = layouts.find(name);
  if (it == layouts.end()) throw ConfigError("unknown layout '" + name + "'");
  return it->second;
}

void ExperimentConfig::validate() const {
  for (const auto& [name, spec] : layouts) {
    if (spec.tx_count < 1) throw ConfigError("layouts." + name + ".tx_count must be at least 1");
    if (spec.mode == PairingMode::kMultistatic && spec.rx_count < 1)
      throw ConfigError("layouts." + name + ".rx_count must be at least 1");
    if (!(spec.radius > 0.0) || !(spec.rx_radius > 0.0)) throw ConfigError("layouts." + name + ".radius must be positive");
  }
  layout(scenario.layout);
  for (const auto& n : sweep.layouts) layout(n);
  for (const auto& n : heatmap.layouts) layout(n);
  if (!(scenario.c > 0.0)) throw ConfigError("scenario.c must be positive");
  if (scenario.schedule.pulses < 2) throw ConfigError("schedule.pulses must be at least 2");
  if (!(scenario.schedule.pri > 0.0)) throw ConfigError("schedule.pri must be positive");
  if (!(scenario.schedule.span >= 0.0)) throw ConfigError("schedule.span must be nonnegative");
  if (!(scenario.beta >= 0.0)) throw ConfigError("waveform.beta must be nonnegative");
  if (!(scenario.energy > 0.0)) throw ConfigError("waveform.energy must be positive");
  if (!(scenario.gain > 0.0)) throw ConfigError("waveform.gain must be positive");
  if (mc.trials < 1) throw ConfigError("experiment.trials must be at least 1");
  if (mc.snr_db.empty()) throw ConfigError("experiment.snr_db must not be empty");
  if (mc.estimators.empty()) throw ConfigError("experiment.estimators must not be empty");
  if (sweep.spans.empty() || sweep.pulses.empty()) throw ConfigError("sweep axes must not be empty");
  if (heatmap.points < 2) throw ConfigError("heatmap.points must be at least 2");
  if (!(heatmap.extent > 0.0)) throw ConfigError("heatmap.extent must be positive");
  if (ofdm.draws < 1) throw ConfigError("ofdm.draws must be at least 1");
  if (workers < 1) throw ConfigError("workers must be at least 1");
}

Scenario build_scenario(const ExperimentConfig& cfg, const std::string& layout_name, double snr_db,
                        std::uint64_t phase_seed, int pulses, double span) {
  const auto& sc = cfg.scenario;
  Scenario s;
  s.layout = cfg.layout(layout_name).build(sc.c);
  s.target = sc.target;
  const std::size_t L = s.layout.path_count();

  ScheduleSpec spec = sc.schedule;
  spec.pulses = pulses;
  spec.span = span;
  const HopSchedule shared = center(make_schedule(spec)).schedule;
  s.schedules.reserve(L);
  for (std::size_t l = 0; l < L; ++l) {
    if (sc.per_path_hops && spec.pattern == HopPattern::kPermuted) {
      ScheduleSpec own = spec;
      own.seed = derive_seed(spec.seed, {l});
      s.schedules.push_back(center(make_schedule(own)).schedule);
    } else {
      s.schedules.push_back(shared);
    }
  }

  Rng rng(phase_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t l = 0; l < L; ++l) {
    WaveformSpec wf;
    wf.alpha = std::polar(sc.gain, 2.0 * std::numbers::pi * unit(rng));
    wf.energy = sc.energy;
    wf.beta = sc.beta;
    wf.noise_var = sigma_from_snr(snr_db, wf.alpha, wf.energy);
    s.waveforms.push_back(wf);
  }
  return s;
}

Scenario build_scenario(const ExperimentConfig& cfg, const std::string& layout_name, double snr_db,
                        std::uint64_t phase_seed) {
  return build_scenario(cfg, layout_name, snr_db, phase_seed, cfg.scenario.schedule.pulses,
                        cfg.scenario.schedule.span);
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void write_csv(const ResultTable& table, std::ostream& os) {
  os << "experiment,estimator";
  for (const auto& col : table.sweep_cols) os << ',' << col;
  os << ",mse_pos,mse_vel,crlb_pos,crlb_vel,outage_rate,trials,seed\n";
  for (const auto& r : table.rows) {
    os << r.experiment << ',' << r.estimator;
    for (const auto& v : r.sweep) os << ',' << v;
    os << ',' << format_number(r.mse_pos) << ',' << format_number(r.mse_vel) << ',' << format_number(r.crlb_pos)
       << ',' << format_number(r.crlb_vel) << ',' << format_number(r.outage_rate) << ',' << r.trials << ','
       << r.seed << '\n';
  }
}

void write_coverage_csv(const std::vector<CoverageResult>& coverage, double threshold, std::ostream& os) {
  os << "layout,threshold,evaluated,covered,skipped,coverage\n";
  for (const auto& c : coverage)
    os << c.layout << ',' << format_number(threshold) << ',' << c.evaluated << ',' << c.covered << ',' << c.skipped
       << ',' << format_number(c.fraction) << '\n';
}

namespace {

struct TrialOutcome {
  double err_pos = kNaN;
  double err_vel = kNaN;
  std::size_t path_outages = 0;
  bool failed = false;
  double seconds = 0.0;
};

double elapsed(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

ResultTable mse_vs_snr(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& mc = cfg.mc;
  const std::size_t n_snr = mc.snr_db.size();
  const auto trials = static_cast<std::size_t>(mc.trials);
  const std::size_t n_est = mc.estimators.size();
  const TargetState truth = cfg.scenario.target;

  SearchBox box = mc.box;
  if (mc.box_around_truth) {
    const SearchBox around = SearchBox::around(truth, mc.pos_half, mc.vel_half);
    box.lo = around.lo;
    box.hi = around.hi;
  }
  const TargetState prior = mc.prior_is_truth ? truth : mc.prior;

  std::vector<TrialOutcome> outcomes(n_snr * trials * n_est);
  parallel_for(n_snr * trials, cfg.workers, [&](std::size_t job) {
    const std::size_t si = job / trials;
    const std::size_t t = job % trials;
    const std::uint64_t trial_seed = derive_seed(cfg.seed, {si, t});
    const Scenario sc = build_scenario(cfg, cfg.scenario.layout, mc.snr_db[si], derive_seed(trial_seed, {1}));
    const auto obs = synthesize(sc, derive_seed(trial_seed, {2}));
    for (std::size_t e = 0; e < n_est; ++e) {
      TrialOutcome& out = outcomes[job * n_est + e];
      const auto start = std::chrono::steady_clock::now();
      try {
        StateEstimate est;
        if (mc.estimators[e] == EstimatorKind::kMle) {
          est = mle_estimate(obs, sc.schedules, sc.layout, box);
        } else {
          const auto res = tsif(obs, sc.schedules, sc.waveforms, sc.layout, prior, mc.stage_a, mc.gauss_newton);
          out.path_outages = res.outages;
          out.failed = res.failed;
          est = res.estimate;
        }
        if (!out.failed) {
          out.err_pos = (est.position - truth.position).squaredNorm();
          out.err_vel = (est.velocity - truth.velocity).squaredNorm();
        }
      } catch (const Error&) {
        out.failed = true;
      }
      out.seconds = elapsed(start);
    }
  });

  ResultTable table;
  table.sweep_cols = {"layout", "snr_db"};
  for (std::size_t si = 0; si < n_snr; ++si) {
    const Scenario nominal = build_scenario(cfg, cfg.scenario.layout, mc.snr_db[si], derive_seed(cfg.seed, {si}));
    double crlb_pos = kNaN;
    double crlb_vel = kNaN;
    try {
      const auto bound = crlb(nominal);
      crlb_pos = bound.pos_trace;
      crlb_vel = bound.vel_trace;
    } catch (const SingularGeometry&) {
    }
    const auto L = static_cast<double>(nominal.path_count());
    for (std::size_t e = 0; e < n_est; ++e) {
      double sum_pos = 0.0;
      double sum_vel = 0.0;
      double seconds = 0.0;
      std::size_t used = 0;
      std::size_t failed = 0;
      std::size_t path_outages = 0;
      for (std::size_t t = 0; t < trials; ++t) {
        const auto& o = outcomes[(si * trials + t) * n_est + e];
        seconds += o.seconds;
        path_outages += o.path_outages;
        if (o.failed) {
          ++failed;
          continue;
        }
        sum_pos += o.err_pos;
        sum_vel += o.err_vel;
        ++used;
      }
      ResultRow row;
      row.experiment = "mse_vs_snr";
      row.estimator = estimator_name(mc.estimators[e]);
      row.sweep = {cfg.scenario.layout, format_number(mc.snr_db[si])};
      if (used > 0) {
        row.mse_pos = sum_pos / static_cast<double>(used);
        row.mse_vel = sum_vel / static_cast<double>(used);
      }
      row.crlb_pos = crlb_pos;
      row.crlb_vel = crlb_vel;
      row.outage_rate = mc.estimators[e] == EstimatorKind::kTsif
                            ? static_cast<double>(path_outages) / (static_cast<double>(trials) * L)
                            : static_cast<double>(failed) / static_cast<double>(trials);
      row.trials = mc.trials;
      row.seed = cfg.seed;
      row.wall_time = seconds;
      table.rows.push_back(row);
    }
  }
  return table;
}

ResultTable crlb_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& sw = cfg.sweep;
  struct Point {
    std::string layout;
    int pulses;
    double span;
  };
  std::vector<Point> points;
  for (const auto& name : sw.layouts) {
    switch (sw.axis) {
      case SweepAxis::kBandwidth:
        for (double s : sw.spans) points.push_back({name, cfg.scenario.schedule.pulses, s});
        break;
      case SweepAxis::kPulses:
        for (int p : sw.pulses) points.push_back({name, p, cfg.scenario.schedule.span});
        break;
      case SweepAxis::kJoint:
        for (int p : sw.pulses)
          for (double s : sw.spans) points.push_back({name, p, s});
        break;
    }
  }

  std::vector<ResultRow> rows(points.size());
  parallel_for(points.size(), cfg.workers, [&](std::size_t i) {
    const auto& pt = points[i];
    ResultRow& row = rows[i];
    row.experiment = "crlb_sweep";
    row.sweep = {pt.layout, format_number(pt.span), std::to_string(pt.pulses)};
    row.seed = cfg.seed;
    const auto start = std::chrono::steady_clock::now();
    try {
      const Scenario sc = build_scenario(cfg, pt.layout, cfg.scenario.snr_db, derive_seed(cfg.seed, {i}), pt.pulses,
                                         pt.span);
      const auto bound = crlb(sc);
      row.estimator = "crlb";
      row.crlb_pos = bound.pos_trace;
      row.crlb_vel = bound.vel_trace;
    } catch (const SingularGeometry&) {
      row.estimator = "singular";
    }
    row.wall_time = elapsed(start);
  });

  ResultTable table;
  table.sweep_cols = {"layout", "span_hz", "pulses"};
  table.rows = std::move(rows);
  return table;
}

HeatmapResult crlb_heatmap(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& hm = cfg.heatmap;
  const int n = hm.points;
  const double step = 2.0 * hm.extent / (n - 1);
  const auto cells = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);

  HeatmapResult result;
  result.table.sweep_cols = {"layout", "x", "y"};
  for (std::size_t li = 0; li < hm.layouts.size(); ++li) {
    const std::string& name = hm.layouts[li];
    Scenario base = build_scenario(cfg, name, cfg.scenario.snr_db, derive_seed(cfg.seed, {li}));
    if (hm.rotation != 0.0) base.layout = rotated(base.layout, hm.rotation);

    std::vector<ResultRow> rows(cells);
    parallel_for(cells, cfg.workers, [&](std::size_t idx) {
      const Vec2 x(-hm.extent + static_cast<double>(idx / static_cast<std::size_t>(n)) * step,
                   -hm.extent + static_cast<double>(idx % static_cast<std::size_t>(n)) * step);
      ResultRow& row = rows[idx];
      row.experiment = "heatmap";
      row.sweep = {name, format_number(x.x()), format_number(x.y())};
      row.seed = cfg.seed;
      bool on_node = false;
      for (const auto& p : base.layout.tx_positions) on_node = on_node || (p - x).norm() < kDegenerateDistance;
      for (const auto& p : base.layout.rx_positions) on_node = on_node || (p - x).norm() < kDegenerateDistance;
      if (on_node) {
        row.estimator = "skipped";
        return;
      }
      Scenario sc = base;
      sc.target.position = x;
      try {
        const auto bound = crlb(sc);
        row.estimator = "crlb";
        row.crlb_pos = bound.pos_trace;
        row.crlb_vel = bound.vel_trace;
      } catch (const SingularGeometry&) {
        row.estimator = "singular";
      } catch (const DegenerateGeometry&) {
        row.estimator = "skipped";
      }
    });

    CoverageResult cov;
    cov.layout = name;
    for (const auto& row : rows) {
      if (row.estimator == "skipped") {
        ++cov.skipped;
        continue;
      }
      ++cov.evaluated;
      if (row.crlb_pos < hm.threshold) ++cov.covered;
    }
    cov.fraction = cov.evaluated ? static_cast<double>(cov.covered) / static_cast<double>(cov.evaluated) : 0.0;
    result.coverage.push_back(cov);
    for (auto& r : rows) result.table.rows.push_back(std::move(r));
  }
  return result;
}

BetaOfdmResult beta_ofdm(const ExperimentConfig& cfg) {
  cfg.validate();
  const Scenario sc = build_scenario(cfg, cfg.scenario.layout, cfg.scenario.snr_db, derive_seed(cfg.seed, {0}));
  BetaOfdmResult out;
  out.bound = data_averaged_crlb(cfg.ofdm.ofdm, sc, cfg.ofdm.draws, derive_seed(cfg.seed, {1}));

  out.table.sweep_cols = {"layout", "mean_beta_hz", "draws"};
  const auto add = [&](const char* estimator, const CrlbResult& r) {
    ResultRow row;
    row.experiment = "beta_ofdm";
    row.estimator = estimator;
    row.sweep = {cfg.scenario.layout, format_number(out.bound.mean_beta), std::to_string(cfg.ofdm.draws)};
    row.crlb_pos = r.pos_trace;
    row.crlb_vel = r.vel_trace;
    row.trials = cfg.ofdm.draws;
    row.seed = cfg.seed;
    out.table.rows.push_back(row);
  };
  add("data_averaged", out.bound.averaged);
  add("deterministic", out.bound.deterministic);
  return out;
}

FimCheckResult fim_check(const ExperimentConfig& cfg) {
  cfg.validate();
  const Scenario sc = build_scenario(cfg, cfg.scenario.layout, cfg.scenario.snr_db, derive_seed(cfg.seed, {0}));
  const auto geoms = path_geometries(sc.layout, sc.target.position);
  const double c = sc.layout.c;

  FimCheckResult out;
  for (std::size_t l = 0; l < sc.path_count(); ++l) {
    const HopSchedule& sched = sc.schedules[l];
    const WaveformSpec& wf = sc.waveforms[l];
    const Vec2 g = geoms[l].g;
    const auto analytic = per_path_fim(moments(sched), geoms[l], wf, c).full;

    // Two equal-power fast-time tones at +/- beta carry rms bandwidth beta.
    const MeanFunction mean = [&](const VecX& eta) {
      const std::complex<double> a(eta[3], eta[4]);
      const CVector phi = steering_vector(sched, eta[0], g.dot(Vec2(eta[1], eta[2])), c);
      CVector mu(2 * phi.size());
      const double amp = std::sqrt(wf.energy / 2.0);
      for (Eigen::Index p = 0; p < phi.size(); ++p) {
        for (int q = 0; q < 2; ++q) {
          const double f = q == 0 ? -wf.beta : wf.beta;
          mu[2 * p + q] = a * amp * phi[p] * std::polar(1.0, -2.0 * std::numbers::pi * f * eta[0]);
        }
      }
      return mu;
    };
    VecX eta(5);
    eta << geoms[l].tau, sc.target.velocity.x(), sc.target.velocity.y(), wf.alpha.real(), wf.alpha.imag();
    VecX steps(5);
    steps << cfg.fim.tau_step, cfg.fim.vel_step, cfg.fim.vel_step, cfg.fim.gain_step, cfg.fim.gain_step;
    const MatX numeric = numerical_fim(mean, eta, wf.noise_var, steps);
    const double err = (numeric - analytic).norm() / numeric.norm();
    out.path_errors.push_back(err);
    out.max_error = std::max(out.max_error, err);
  }
  return out;
}

}  // namespace isac
