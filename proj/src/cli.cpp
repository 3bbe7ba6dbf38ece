#include "isac/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "isac/config.hpp"
#include "isac/errors.hpp"
#include "isac/experiments.hpp"

namespace isac::cli {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config;
  std::string out;
  std::string seed;
  int workers = 0;
  int trials = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "configuration file (key = value lines or JSON)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "master seed (overrides config and ISAC_LAB_SEED)");
  cmd->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--trials", o.trials, "Monte Carlo trials per point")->check(CLI::PositiveNumber);
}

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used, 0);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || text.front() == '-')
    throw ConfigError(what + ": '" + text + "' is not an unsigned 64-bit seed");
  return v;
}

ExperimentConfig resolve(const CommonOptions& o) {
  LoadedConfig loaded;
  if (!o.config.empty()) loaded = load_config_file(o.config);
  ExperimentConfig cfg = loaded.config;
  if (!o.seed.empty()) {
    cfg.seed = parse_seed(o.seed, "--seed");
  } else if (!loaded.keys.count("experiment.seed")) {
    if (const char* env = std::getenv("ISAC_LAB_SEED"); env && *env) cfg.seed = parse_seed(env, "ISAC_LAB_SEED");
  }
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (o.workers > 0) cfg.workers = o.workers;
  if (o.trials > 0) cfg.mc.trials = o.trials;
  cfg.validate();
  return cfg;
}

fs::path output_path(const ExperimentConfig& cfg, const std::string& name) {
  return fs::path(cfg.out_dir) / (cfg.prefix + name);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw Error("write failed for '" + path.string() + "'");
}

// CSV plus the effective configuration beside it.
void emit(const ExperimentConfig& cfg, const std::string& stem, const ResultTable& table, std::ostream& out) {
  std::ostringstream csv;
  write_csv(table, csv);
  const fs::path path = output_path(cfg, stem + ".csv");
  write_text(path, csv.str());
  write_text(output_path(cfg, stem + "_run_manifest.cfg"), dump_config(cfg));
  out << "wrote " << path.string() << " (" << table.rows.size() << " rows)\n";
}

int cmd_crlb_sweep(const ExperimentConfig& cfg, std::ostream& out) {
  emit(cfg, "crlb_sweep", crlb_sweep(cfg), out);
  return kOk;
}

int cmd_mse_vs_snr(const ExperimentConfig& cfg, std::ostream& out) {
  const auto table = mse_vs_snr(cfg);
  emit(cfg, "mse_vs_snr", table, out);
  for (const auto& r : table.rows)
    out << r.estimator << " snr=" << r.sweep[1] << " mse_pos=" << format_number(r.mse_pos)
        << " crlb_pos=" << format_number(r.crlb_pos) << " mse_vel=" << format_number(r.mse_vel)
        << " crlb_vel=" << format_number(r.crlb_vel) << " outage=" << format_number(r.outage_rate) << '\n';
  return kOk;
}

int cmd_heatmap(const ExperimentConfig& cfg, std::ostream& out) {
  const auto res = crlb_heatmap(cfg);
  emit(cfg, "heatmap", res.table, out);
  std::ostringstream csv;
  write_coverage_csv(res.coverage, cfg.heatmap.threshold, csv);
  write_text(output_path(cfg, "heatmap_coverage.csv"), csv.str());
  for (const auto& c : res.coverage)
    out << "coverage " << c.layout << ": " << format_number(c.fraction) << " (" << c.covered << "/" << c.evaluated
        << ", " << c.skipped << " skipped)\n";
  return kOk;
}

int cmd_beta_ofdm(const ExperimentConfig& cfg, std::ostream& out) {
  const auto res = beta_ofdm(cfg);
  emit(cfg, "beta_ofdm", res.table, out);
  const auto& b = res.bound;
  out << "mean beta: " << format_number(b.mean_beta) << " Hz over " << b.draws << " draws\n"
      << "data-averaged pos/vel trace: " << format_number(b.averaged.pos_trace) << " / "
      << format_number(b.averaged.vel_trace) << '\n'
      << "deterministic pos/vel trace: " << format_number(b.deterministic.pos_trace) << " / "
      << format_number(b.deterministic.vel_trace) << '\n';
  return kOk;
}

int cmd_fim_check(const ExperimentConfig& cfg, std::ostream& out) {
  constexpr double kTolerance = 1e-3;
  const auto res = fim_check(cfg);
  for (std::size_t l = 0; l < res.path_errors.size(); ++l)
    out << "path " << l << ": relative Frobenius error " << format_number(res.path_errors[l]) << '\n';
  out << "max relative Frobenius error: " << format_number(res.max_error) << '\n';
  return res.max_error <= kTolerance ? kOk : kRuntimeError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Space-time-frequency ISAC bounds and estimators", "isac-lab"};
  app.require_subcommand(1);
  CommonOptions opts;

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const ExperimentConfig&, std::ostream&);
  };
  const Command commands[] = {
      {"crlb-sweep", "bound traces over span / pulse count", cmd_crlb_sweep},
      {"mse-vs-snr", "Monte Carlo MSE of the estimators against the bound", cmd_mse_vs_snr},
      {"heatmap", "position bound over a grid and coverage below a threshold", cmd_heatmap},
      {"fim-check", "analytic per-path FIM against the finite-difference oracle", cmd_fim_check},
      {"beta-ofdm", "data-averaged bound over OFDM symbol draws", cmd_beta_ofdm},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, opts);
    subs.emplace_back(sub, &c);
  }
  CLI::App* version = app.add_subcommand("version", "print the version");

  std::vector<std::string> argv_store{"isac-lab"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "isac-lab: " << e.what() << '\n';
    return kConfigError;
  }

  if (version->parsed()) {
    out << "isac-lab " << ISAC_LAB_VERSION << '\n';
    return kOk;
  }

  ExperimentConfig cfg;
  try {
    cfg = resolve(opts);
  } catch (const ConfigError& e) {
    err << "isac-lab: config error: " << e.what() << '\n';
    return kConfigError;
  }

  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    try {
      return cmd->fn(cfg, out);
    } catch (const ConfigError& e) {
      err << "isac-lab: config error: " << e.what() << '\n';
      return kConfigError;
    } catch (const std::exception& e) {
      err << "isac-lab: " << cmd->name << " failed: " << e.what() << '\n';
      return kRuntimeError;
    }
  }
  return kConfigError;
}

}  // namespace isac::cli
