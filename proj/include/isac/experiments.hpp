#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "isac/estimators.hpp"
#include "isac/fisher.hpp"
#include "isac/geometry.hpp"
#include "isac/schedule.hpp"
#include "isac/signal.hpp"
#include "isac/waveform.hpp"

namespace isac {

/// Node placement on circles: monostatic layouts use `tx_count` colocated
/// nodes, multistatic layouts a transmitter ring and a receiver ring.
struct LayoutSpec {
  PairingMode mode = PairingMode::kMonostatic;
  std::size_t tx_count = 5;
  std::size_t rx_count = 5;
  double radius = 1000.0;
  double rx_radius = 1000.0;
  double phase = 0.0;
  double rx_phase = std::numbers::pi / 3.0;

  NetworkLayout build(double c) const;
};

/// Built-in layouts: "multistatic" (3 x 3 rings), "monostatic" (5 nodes), "monostatic3".
std::map<std::string, LayoutSpec> default_layouts();

struct ScenarioSpec {
  std::string layout = "monostatic";
  double c = kSpeedOfLight;
  TargetState target{Vec2(300.0, 200.0), Vec2(20.0, 15.0)};
  ScheduleSpec schedule;
  /// Give every path its own permutation seed (kPermuted only).
  bool per_path_hops = false;
  double beta = 48e6;
  double energy = 1.0;
  double gain = 1.0;  ///< |alpha|
  double snr_db = 20.0;
};

enum class EstimatorKind { kMle, kTsif };

const char* estimator_name(EstimatorKind kind);

struct MonteCarloSpec {
  std::vector<double> snr_db{-10.0, 0.0, 10.0, 20.0, 30.0};
  int trials = 200;
  std::vector<EstimatorKind> estimators{EstimatorKind::kMle, EstimatorKind::kTsif};
  /// Grid settings; lo/hi are ignored when `box_around_truth` is set.
  SearchBox box;
  bool box_around_truth = true;
  double pos_half = 50.0;
  double vel_half = 50.0;
  StageAConfig stage_a;
  GaussNewtonConfig gauss_newton;
  /// Stage A prior; the true state when unset.
  bool prior_is_truth = true;
  TargetState prior;
};

enum class SweepAxis { kBandwidth, kPulses, kJoint };

const char* sweep_axis_name(SweepAxis axis);

struct SweepSpec {
  SweepAxis axis = SweepAxis::kBandwidth;
  std::vector<double> spans{50e6, 100e6, 200e6, 500e6, 1000e6, 1500e6, 2000e6};
  std::vector<int> pulses{4, 8, 12, 16, 24, 32, 48, 64};
  std::vector<std::string> layouts{"multistatic", "monostatic"};
};

struct HeatmapSpec {
  double extent = 2000.0;
  int points = 41;
  double threshold = 2e-5;
  std::vector<std::string> layouts{"monostatic3", "monostatic"};
  double rotation = 0.0;
};

struct OfdmRunSpec {
  OfdmSpec ofdm;
  int draws = 200;
};

struct FimCheckSpec {
  double tau_step = 1e-9;
  double vel_step = 0.5;
  double gain_step = 1e-4;
};

struct ExperimentConfig {
  ScenarioSpec scenario;
  std::map<std::string, LayoutSpec> layouts = default_layouts();
  MonteCarloSpec mc;
  SweepSpec sweep;
  HeatmapSpec heatmap;
  OfdmRunSpec ofdm;
  FimCheckSpec fim;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out_dir = ".";
  std::string prefix;

  /// Throws ConfigError naming the offending setting.
  void validate() const;
  const LayoutSpec& layout(const std::string& name) const;
};

/// Scenario at the given SNR: centered schedules, unit-modulus gains scaled by
/// `gain` with uniform phases drawn from `phase_seed`.
Scenario build_scenario(const ExperimentConfig& cfg, const std::string& layout_name, double snr_db,
                        std::uint64_t phase_seed);

/// Same hop settings with a different pulse count and span.
Scenario build_scenario(const ExperimentConfig& cfg, const std::string& layout_name, double snr_db,
                        std::uint64_t phase_seed, int pulses, double span);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ResultRow {
  std::string experiment;
  std::string estimator;
  std::vector<std::string> sweep;
  double mse_pos = kNaN;
  double mse_vel = kNaN;
  double crlb_pos = kNaN;
  double crlb_vel = kNaN;
  double outage_rate = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
  double wall_time = 0.0;  ///< not written to CSV
};

struct ResultTable {
  std::vector<std::string> sweep_cols;
  std::vector<ResultRow> rows;
};

/// Shortest round-trip formatting; "nan" / "inf" / "-inf" for non-finite values.
std::string format_number(double x);

/// experiment, estimator, <sweep cols>, mse_pos, mse_vel, crlb_pos, crlb_vel, outage_rate, trials, seed
void write_csv(const ResultTable& table, std::ostream& os);

/// Per SNR point and estimator: MSE over trials next to the analytic bound.
/// Trial seeds are derive_seed(seed, {snr index, trial}). For TSIF,
/// outage_rate counts Stage A window misses per path estimate; trials with
/// fewer than two surviving paths are left out of the MSE.
ResultTable mse_vs_snr(const ExperimentConfig& cfg);

/// Bound traces over span, pulse count or both, for every sweep layout.
ResultTable crlb_sweep(const ExperimentConfig& cfg);

struct CoverageResult {
  std::string layout;
  std::size_t evaluated = 0;
  std::size_t covered = 0;
  std::size_t skipped = 0;
  double fraction = 0.0;
};

struct HeatmapResult {
  ResultTable table;
  std::vector<CoverageResult> coverage;
};

/// Position-bound trace on a square grid; grid points on a node are skipped.
HeatmapResult crlb_heatmap(const ExperimentConfig& cfg);

void write_coverage_csv(const std::vector<CoverageResult>& coverage, double threshold, std::ostream& os);

struct BetaOfdmResult {
  ResultTable table;
  DataAveragedCrlb bound;
};

BetaOfdmResult beta_ofdm(const ExperimentConfig& cfg);

struct FimCheckResult {
  std::vector<double> path_errors;  ///< relative Frobenius error per path
  double max_error = 0.0;
};

/// Analytic per-path 5 x 5 FIM against the finite-difference oracle for every
/// path of the scenario. The oracle mean includes two fast-time tones at
/// +/- beta so the bandwidth term is exercised.
FimCheckResult fim_check(const ExperimentConfig& cfg);

}  // namespace isac
