#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "isac/cli.hpp"
#include "isac/config.hpp"
#include "isac/errors.hpp"
#include "isac/experiments.hpp"
#include "isac/fisher.hpp"
#include "isac/geometry.hpp"
#include "isac/schedule.hpp"
#include "isac/waveform.hpp"

namespace py = pybind11;
using namespace isac;

namespace {

py::list table_rows(const ResultTable& t) {
  py::list rows;
  for (const auto& r : t.rows) {
    py::dict d;
    d["experiment"] = r.experiment;
    d["estimator"] = r.estimator;
    for (std::size_t i = 0; i < t.sweep_cols.size(); ++i) d[py::str(t.sweep_cols[i])] = r.sweep[i];
    d["mse_pos"] = r.mse_pos;
    d["mse_vel"] = r.mse_vel;
    d["crlb_pos"] = r.crlb_pos;
    d["crlb_vel"] = r.crlb_vel;
    d["outage_rate"] = r.outage_rate;
    d["trials"] = r.trials;
    d["seed"] = r.seed;
    rows.append(d);
  }
  return rows;
}

std::string table_csv(const ResultTable& t) {
  std::ostringstream os;
  write_csv(t, os);
  return os.str();
}

// Long-running experiments release the GIL.
HopPattern pattern_from(const std::string& s) {
  if (s == "linear") return HopPattern::kLinear;
  if (s == "permuted") return HopPattern::kPermuted;
  if (s == "palindromic") return HopPattern::kPalindromic;
  if (s == "custom") return HopPattern::kCustom;
  throw ConfigError("unknown hop pattern '" + s + "'");
}

template <class F>
auto unlocked(F&& f) {
  py::gil_scoped_release release;
  return f();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Space-time-frequency ISAC bounds and estimators";
  m.attr("__version__") = ISAC_LAB_VERSION;
  m.attr("SPEED_OF_LIGHT") = kSpeedOfLight;

  py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DegenerateGeometry>(m, "DegenerateGeometry");
  py::register_exception<SingularGeometry>(m, "SingularGeometry");

  py::class_<PathGeometry>(m, "PathGeometry")
      .def_readonly("u_t", &PathGeometry::u_t)
      .def_readonly("u_r", &PathGeometry::u_r)
      .def_readonly("g", &PathGeometry::g)
      .def_readonly("tau", &PathGeometry::tau)
      .def_readonly("range_t", &PathGeometry::range_t)
      .def_readonly("range_r", &PathGeometry::range_r);

  m.def("path_geometry", &path_geometry, py::arg("tx"), py::arg("rx"), py::arg("colocated"), py::arg("position"),
        py::arg("c") = kSpeedOfLight);

  m.def(
      "make_schedule",
      [](const std::string& pattern, int pulses, double pri, double f0, double span, std::uint64_t seed,
         std::vector<double> carriers, bool centered) {
        ScheduleSpec s;
        s.pattern = pattern_from(pattern);
        s.pulses = pulses;
        s.pri = pri;
        s.f0 = f0;
        s.span = span;
        s.seed = seed;
        s.carriers = std::move(carriers);
        HopSchedule h = make_schedule(s);
        if (centered) h = center(h).schedule;
        py::dict d;
        d["pulse_times"] = h.pulse_times;
        d["carriers"] = h.carriers;
        d["time_offset"] = h.time_offset;
        d["carrier_offset"] = h.carrier_offset;
        return d;
      },
      py::arg("pattern") = "linear", py::arg("pulses") = 12, py::arg("pri") = 1e-3, py::arg("f0") = 28e9,
      py::arg("span") = 2e9, py::arg("seed") = 0, py::arg("carriers") = std::vector<double>{},
      py::arg("centered") = false);

  m.def("effective_bandwidth", [](std::vector<double> f, std::vector<double> p) { return effective_bandwidth(f, p); },
        py::arg("frequencies"), py::arg("density"));
  m.def("flat_comb_beta", &flat_comb_beta, py::arg("subcarriers"), py::arg("spacing"));
  m.def("sigma_from_snr", [](double snr_db, double gain, double energy) { return sigma_from_snr(snr_db, gain, energy); },
        py::arg("snr_db"), py::arg("gain") = 1.0, py::arg("energy") = 1.0);

  py::class_<ExperimentConfig>(m, "Config")
      .def(py::init<>())
      .def_static("from_file", [](const std::string& path) { return load_config_file(path).config; })
      .def_static("from_text", [](const std::string& text) { return parse_config(text).config; })
      .def("dump", &dump_config)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("workers", &ExperimentConfig::workers)
      .def_property(
          "trials", [](const ExperimentConfig& c) { return c.mc.trials; },
          [](ExperimentConfig& c, int t) { c.mc.trials = t; })
      .def_property(
          "snr_db", [](const ExperimentConfig& c) { return c.mc.snr_db; },
          [](ExperimentConfig& c, std::vector<double> s) { c.mc.snr_db = std::move(s); });

  m.def(
      "bound",
      [](const ExperimentConfig& cfg, const std::string& layout) {
        const std::string name = layout.empty() ? cfg.scenario.layout : layout;
        const auto b = crlb(build_scenario(cfg, name, cfg.scenario.snr_db, derive_seed(cfg.seed, {0})));
        py::dict d;
        d["cov"] = Eigen::Matrix4d(b.cov_bound);
        d["pos_trace"] = b.pos_trace;
        d["vel_trace"] = b.vel_trace;
        return d;
      },
      py::arg("config"), py::arg("layout") = "", "Bound of the configured scenario as a dict.");

  m.def("crlb_sweep", [](const ExperimentConfig& c) { return table_rows(unlocked([&] { return crlb_sweep(c); })); });
  m.def("mse_vs_snr", [](const ExperimentConfig& c) { return table_rows(unlocked([&] { return mse_vs_snr(c); })); });
  m.def("heatmap", [](const ExperimentConfig& c) {
    const auto res = unlocked([&] { return crlb_heatmap(c); });
    py::dict cov;
    for (const auto& x : res.coverage) cov[py::str(x.layout)] = x.fraction;
    return py::make_tuple(table_rows(res.table), cov);
  });
  m.def("beta_ofdm", [](const ExperimentConfig& c) { return table_rows(unlocked([&] { return beta_ofdm(c).table; })); });
  m.def("fim_check", [](const ExperimentConfig& c) { return unlocked([&] { return fim_check(c).max_error; }); });
  m.def("crlb_sweep_csv", [](const ExperimentConfig& c) { return table_csv(crlb_sweep(c)); });

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = unlocked([&] { return cli::run(args, out, err); });
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run an isac-lab command; returns (exit code, stdout, stderr).");
}
