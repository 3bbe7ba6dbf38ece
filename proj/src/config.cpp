#include "isac/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "json.hpp"

#include "isac/errors.hpp"

namespace isac {

namespace {

using json = nlohmann::json;

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const json&)> set;
  /// Null when the setting is implied by another one and should not be dumped.
  std::function<json(const ExperimentConfig&)> get;
};

Vec2 to_vec2(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 2) throw ConfigError("expected a two-element array");
  return {v[0], v[1]};
}

json from_vec2(const Vec2& v) { return json::array({v.x(), v.y()}); }

HopPattern pattern_from(const std::string& s) {
  if (s == "linear") return HopPattern::kLinear;
  if (s == "permuted") return HopPattern::kPermuted;
  if (s == "palindromic") return HopPattern::kPalindromic;
  if (s == "custom") return HopPattern::kCustom;
  throw ConfigError("unknown hop pattern '" + s + "'");
}

std::string pattern_name(HopPattern p) {
  switch (p) {
    case HopPattern::kLinear:
      return "linear";
    case HopPattern::kPermuted:
      return "permuted";
    case HopPattern::kPalindromic:
      return "palindromic";
    case HopPattern::kCustom:
      return "custom";
  }
  return "linear";
}

Constellation constellation_from(const std::string& s) {
  if (s == "qam16") return Constellation::kQam16;
  if (s == "qpsk") return Constellation::kQpsk;
  if (s == "constant_modulus") return Constellation::kConstantModulus;
  throw ConfigError("unknown constellation '" + s + "'");
}

std::string constellation_name(Constellation c) {
  switch (c) {
    case Constellation::kQam16:
      return "qam16";
    case Constellation::kQpsk:
      return "qpsk";
    case Constellation::kConstantModulus:
      return "constant_modulus";
  }
  return "qam16";
}

SweepAxis axis_from(const std::string& s) {
  if (s == "bandwidth") return SweepAxis::kBandwidth;
  if (s == "pulses") return SweepAxis::kPulses;
  if (s == "joint") return SweepAxis::kJoint;
  throw ConfigError("unknown sweep axis '" + s + "'");
}

EstimatorKind estimator_from(const std::string& s) {
  if (s == "mle") return EstimatorKind::kMle;
  if (s == "tsif") return EstimatorKind::kTsif;
  throw ConfigError("unknown estimator '" + s + "'");
}

PairingMode mode_from(const std::string& s) {
  if (s == "monostatic") return PairingMode::kMonostatic;
  if (s == "multistatic") return PairingMode::kMultistatic;
  throw ConfigError("unknown layout mode '" + s + "'");
}

template <class T, class M>
Field scalar(std::string key, M member) {
  return {std::move(key), [member](ExperimentConfig& c, const json& j) { member(c) = j.get<T>(); },
          [member](const ExperimentConfig& c) { return json(member(const_cast<ExperimentConfig&>(c))); }};
}

#define ISAC_FIELD(T, key, expr) scalar<T>(key, [](ExperimentConfig& c) -> auto& { return expr; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(ISAC_FIELD(std::string, "scenario.layout", c.scenario.layout));
    f.push_back(ISAC_FIELD(double, "scenario.c", c.scenario.c));
    f.push_back({"scenario.target.position",
                 [](ExperimentConfig& c, const json& j) { c.scenario.target.position = to_vec2(j); },
                 [](const ExperimentConfig& c) { return from_vec2(c.scenario.target.position); }});
    f.push_back({"scenario.target.velocity",
                 [](ExperimentConfig& c, const json& j) { c.scenario.target.velocity = to_vec2(j); },
                 [](const ExperimentConfig& c) { return from_vec2(c.scenario.target.velocity); }});
    f.push_back(ISAC_FIELD(double, "scenario.snr_db", c.scenario.snr_db));

    f.push_back({"schedule.pattern",
                 [](ExperimentConfig& c, const json& j) { c.scenario.schedule.pattern = pattern_from(j.get<std::string>()); },
                 [](const ExperimentConfig& c) { return json(pattern_name(c.scenario.schedule.pattern)); }});
    f.push_back(ISAC_FIELD(int, "schedule.pulses", c.scenario.schedule.pulses));
    f.push_back(ISAC_FIELD(double, "schedule.pri", c.scenario.schedule.pri));
    f.push_back(ISAC_FIELD(double, "schedule.f0", c.scenario.schedule.f0));
    f.push_back(ISAC_FIELD(double, "schedule.span", c.scenario.schedule.span));
    f.push_back(ISAC_FIELD(std::uint64_t, "schedule.seed", c.scenario.schedule.seed));
    f.push_back(ISAC_FIELD(std::vector<double>, "schedule.carriers", c.scenario.schedule.carriers));
    f.push_back(ISAC_FIELD(bool, "schedule.per_path", c.scenario.per_path_hops));

    f.push_back(ISAC_FIELD(double, "waveform.beta", c.scenario.beta));
    f.push_back(ISAC_FIELD(double, "waveform.energy", c.scenario.energy));
    f.push_back(ISAC_FIELD(double, "waveform.gain", c.scenario.gain));

    f.push_back(ISAC_FIELD(std::uint64_t, "experiment.seed", c.seed));
    f.push_back(ISAC_FIELD(int, "experiment.trials", c.mc.trials));
    f.push_back(ISAC_FIELD(std::vector<double>, "experiment.snr_db", c.mc.snr_db));
    f.push_back({"experiment.estimators",
                 [](ExperimentConfig& c, const json& j) {
                   c.mc.estimators.clear();
                   for (const auto& s : j.get<std::vector<std::string>>()) c.mc.estimators.push_back(estimator_from(s));
                 },
                 [](const ExperimentConfig& c) {
                   json a = json::array();
                   for (auto e : c.mc.estimators) a.push_back(estimator_name(e));
                   return a;
                 }});
    f.push_back(ISAC_FIELD(int, "experiment.workers", c.workers));

    const auto box_part = [](std::string key, int offset) {
      return Field{std::move(key),
                   [offset](ExperimentConfig& c, const json& j) {
                     const Vec2 v = to_vec2(j);
                     Vec4& target = offset >= 4 ? c.mc.box.hi : c.mc.box.lo;
                     target.segment<2>(offset % 4) = v;
                     c.mc.box_around_truth = false;
                   },
                   [offset](const ExperimentConfig& c) {
                     if (c.mc.box_around_truth) return json();
                     const Vec4& src = offset >= 4 ? c.mc.box.hi : c.mc.box.lo;
                     return from_vec2(src.segment<2>(offset % 4));
                   }};
    };
    f.push_back(box_part("search.position_lo", 0));
    f.push_back(box_part("search.velocity_lo", 2));
    f.push_back(box_part("search.position_hi", 4));
    f.push_back(box_part("search.velocity_hi", 6));
    f.push_back(ISAC_FIELD(double, "search.pos_half", c.mc.pos_half));
    f.push_back(ISAC_FIELD(double, "search.vel_half", c.mc.vel_half));
    f.push_back(ISAC_FIELD(int, "search.coarse", c.mc.box.coarse));
    f.push_back(ISAC_FIELD(int, "search.refine", c.mc.box.refine));
    f.push_back(ISAC_FIELD(double, "search.target_pos", c.mc.box.target_pos));
    f.push_back(ISAC_FIELD(double, "search.target_vel", c.mc.box.target_vel));
    f.push_back(ISAC_FIELD(int, "search.keep_top", c.mc.box.keep_top));

    f.push_back(ISAC_FIELD(double, "stage_a.window_scale", c.mc.stage_a.window_scale));
    f.push_back(ISAC_FIELD(double, "stage_a.oversample", c.mc.stage_a.oversample));
    f.push_back(ISAC_FIELD(int, "stage_a.refinements", c.mc.stage_a.refinements));
    f.push_back(ISAC_FIELD(int, "stage_b.max_iterations", c.mc.gauss_newton.max_iterations));
    f.push_back(ISAC_FIELD(double, "stage_b.step_tol", c.mc.gauss_newton.step_tol));
    f.push_back(ISAC_FIELD(double, "stage_b.cost_tol", c.mc.gauss_newton.cost_tol));
    f.push_back(ISAC_FIELD(double, "stage_b.damping_condition", c.mc.gauss_newton.damping_condition));
    f.push_back(ISAC_FIELD(double, "stage_b.pos_scale", c.mc.gauss_newton.pos_scale));
    f.push_back(ISAC_FIELD(double, "stage_b.vel_scale", c.mc.gauss_newton.vel_scale));

    f.push_back({"tsif.prior_position",
                 [](ExperimentConfig& c, const json& j) {
                   c.mc.prior.position = to_vec2(j);
                   c.mc.prior_is_truth = false;
                 },
                 [](const ExperimentConfig& c) { return c.mc.prior_is_truth ? json() : from_vec2(c.mc.prior.position); }});
    f.push_back({"tsif.prior_velocity",
                 [](ExperimentConfig& c, const json& j) {
                   c.mc.prior.velocity = to_vec2(j);
                   c.mc.prior_is_truth = false;
                 },
                 [](const ExperimentConfig& c) { return c.mc.prior_is_truth ? json() : from_vec2(c.mc.prior.velocity); }});

    f.push_back({"sweep.axis", [](ExperimentConfig& c, const json& j) { c.sweep.axis = axis_from(j.get<std::string>()); },
                 [](const ExperimentConfig& c) { return json(sweep_axis_name(c.sweep.axis)); }});
    f.push_back(ISAC_FIELD(std::vector<double>, "sweep.spans", c.sweep.spans));
    f.push_back(ISAC_FIELD(std::vector<int>, "sweep.pulses", c.sweep.pulses));
    f.push_back(ISAC_FIELD(std::vector<std::string>, "sweep.layouts", c.sweep.layouts));

    f.push_back(ISAC_FIELD(double, "heatmap.extent", c.heatmap.extent));
    f.push_back(ISAC_FIELD(int, "heatmap.points", c.heatmap.points));
    f.push_back(ISAC_FIELD(double, "heatmap.threshold", c.heatmap.threshold));
    f.push_back(ISAC_FIELD(std::vector<std::string>, "heatmap.layouts", c.heatmap.layouts));
    f.push_back(ISAC_FIELD(double, "heatmap.rotation", c.heatmap.rotation));

    f.push_back(ISAC_FIELD(int, "ofdm.subcarriers", c.ofdm.ofdm.subcarriers));
    f.push_back(ISAC_FIELD(double, "ofdm.spacing", c.ofdm.ofdm.spacing));
    f.push_back({"ofdm.constellation",
                 [](ExperimentConfig& c, const json& j) {
                   c.ofdm.ofdm.constellation = constellation_from(j.get<std::string>());
                 },
                 [](const ExperimentConfig& c) { return json(constellation_name(c.ofdm.ofdm.constellation)); }});
    f.push_back(ISAC_FIELD(std::vector<bool>, "ofdm.active", c.ofdm.ofdm.active));
    f.push_back(ISAC_FIELD(int, "ofdm.draws", c.ofdm.draws));

    f.push_back(ISAC_FIELD(double, "fim.tau_step", c.fim.tau_step));
    f.push_back(ISAC_FIELD(double, "fim.vel_step", c.fim.vel_step));
    f.push_back(ISAC_FIELD(double, "fim.gain_step", c.fim.gain_step));

    f.push_back(ISAC_FIELD(std::string, "output.dir", c.out_dir));
    f.push_back(ISAC_FIELD(std::string, "output.prefix", c.prefix));
    return f;
  }();
  return table;
}

#undef ISAC_FIELD

// layouts.<name>.<field>
bool set_layout_key(ExperimentConfig& cfg, const std::string& key, const json& value) {
  const std::string head = "layouts.";
  if (key.rfind(head, 0) != 0) return false;
  const auto dot = key.rfind('.');
  if (dot <= head.size()) throw ConfigError("layout key needs the form layouts.<name>.<field>");
  const std::string name = key.substr(head.size(), dot - head.size());
  const std::string field = key.substr(dot + 1);
  auto [it, inserted] = cfg.layouts.try_emplace(name, LayoutSpec{});
  LayoutSpec& spec = it->second;
  if (field == "mode") {
    spec.mode = mode_from(value.get<std::string>());
  } else if (field == "count") {
    spec.tx_count = spec.rx_count = value.get<std::size_t>();
  } else if (field == "tx_count") {
    spec.tx_count = value.get<std::size_t>();
  } else if (field == "rx_count") {
    spec.rx_count = value.get<std::size_t>();
  } else if (field == "radius") {
    spec.radius = value.get<double>();
  } else if (field == "rx_radius") {
    spec.rx_radius = value.get<double>();
  } else if (field == "phase") {
    spec.phase = value.get<double>();
  } else if (field == "rx_phase") {
    spec.rx_phase = value.get<double>();
  } else {
    if (inserted) cfg.layouts.erase(it);
    throw ConfigError("unknown key");
  }
  return true;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
  for (const auto& [k, v] : j.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      flatten(v, key, out);
    } else {
      out.emplace_back(key, v);
    }
  }
}

void apply(LoadedConfig& loaded, const std::string& key, const json& value, const std::string& where) {
  try {
    if (!set_layout_key(loaded.config, key, value)) {
      const auto& table = fields();
      const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
      if (it == table.end()) throw ConfigError("unknown key");
      it->set(loaded.config, value);
    }
  } catch (const json::exception& e) {
    throw ConfigError(where + ": key '" + key + "': " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": key '" + key + "': " + e.what());
  }
  loaded.keys.insert(key);
}

}  // namespace

LoadedConfig parse_config(const std::string& text, const std::string& origin) {
  LoadedConfig loaded;
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    json root;
    try {
      root = json::parse(body);
    } catch (const json::parse_error& e) {
      throw ConfigError(origin + ": invalid JSON: " + e.what());
    }
    std::vector<std::pair<std::string, json>> entries;
    flatten(root, "", entries);
    for (const auto& [k, v] : entries) apply(loaded, k, v, origin);
  } else {
    std::istringstream in(text);
    std::string line;
    std::string section;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      const std::string where = origin + ":" + std::to_string(number);
      const std::string s = trim(strip_comment(line));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') throw ConfigError(where + ": unterminated section header");
        section = trim(s.substr(1, s.size() - 2));
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
      const std::string key = trim(s.substr(0, eq));
      if (key.empty()) throw ConfigError(where + ": empty key");
      apply(loaded, section.empty() ? key : section + "." + key, parse_value(trim(s.substr(eq + 1))), where);
    }
  }
  const auto all_or_none = [&](std::initializer_list<const char*> group) {
    std::size_t n = 0;
    for (const char* k : group) n += loaded.keys.count(k);
    if (n != 0 && n != group.size()) {
      std::string names;
      for (const char* k : group) names += std::string(names.empty() ? "" : ", ") + k;
      throw ConfigError(origin + ": keys " + names + " must be given together");
    }
  };
  all_or_none({"search.position_lo", "search.position_hi", "search.velocity_lo", "search.velocity_hi"});
  all_or_none({"tsif.prior_position", "tsif.prior_velocity"});
  try {
    loaded.config.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return loaded;
}

LoadedConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string dump_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  for (const auto& f : fields()) {
    const json v = f.get(cfg);
    if (v.is_null()) continue;
    os << f.key << " = " << v.dump() << '\n';
  }
  for (const auto& [name, spec] : cfg.layouts) {
    const std::string p = "layouts." + name + ".";
    os << p << "mode = " << json(spec.mode == PairingMode::kMonostatic ? "monostatic" : "multistatic").dump() << '\n';
    os << p << "tx_count = " << spec.tx_count << '\n';
    os << p << "rx_count = " << spec.rx_count << '\n';
    os << p << "radius = " << json(spec.radius).dump() << '\n';
    os << p << "rx_radius = " << json(spec.rx_radius).dump() << '\n';
    os << p << "phase = " << json(spec.phase).dump() << '\n';
    os << p << "rx_phase = " << json(spec.rx_phase).dump() << '\n';
  }
  return os.str();
}

}  // namespace isac
