// rovi: command-line front end for the rovikit shared library.
//
// Subcommands: rates, propagate, broaden, fit, spectrum. Options resolve as
// defaults < config file < flags. Every run writes a manifest.json with the
// resolved options, a hash over them, and the physical constants in use, so
// a run can be reproduced byte for byte.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rovikit.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

int exit_code_for(rovi_status status) {
  switch (status) {
    case ROVI_OK: return kExitOk;
    case ROVI_ERR_INVALID_ARGUMENT:
    case ROVI_ERR_CONFIG: return kExitConfig;
    case ROVI_ERR_NUMERIC: return kExitNumeric;
    case ROVI_ERR_IO: return kExitIo;
  }
  return kExitNumeric;
}

struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& message) {
  throw CliError{code, message};
}

void check(rovi_status status, const std::string& what) {
  if (status != ROVI_OK)
    fail(exit_code_for(status), what + ": " + rovi_last_error());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

// ---------- config file ----------

struct ConfigEntry {
  std::string value;
  int line = 0;
};

struct Config {
  // section -> key -> entry; [ladder X] sections keep their argument in the key
  std::map<std::string, std::map<std::string, ConfigEntry>> sections;
  std::vector<std::pair<std::string, std::map<std::string, ConfigEntry>>> ladders;

  const ConfigEntry* find(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    if (s == sections.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(kExitIo, "cannot open config '" + path + "'");
  Config cfg;
  std::string line, section;
  std::map<std::string, ConfigEntry>* bucket = nullptr;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        fail(kExitConfig, path + ":" + std::to_string(line_no) + ": unterminated section");
      section = trim(t.substr(1, t.size() - 2));
      if (section.rfind("ladder ", 0) == 0) {
        cfg.ladders.emplace_back(trim(section.substr(7)),
                                 std::map<std::string, ConfigEntry>{});
        bucket = &cfg.ladders.back().second;
      } else {
        bucket = &cfg.sections[section];
      }
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos || !bucket)
      fail(kExitConfig, path + ":" + std::to_string(line_no) + ": expected key = value");
    (*bucket)[trim(t.substr(0, eq))] = {trim(t.substr(eq + 1)), line_no};
  }
  return cfg;
}

double to_double(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    fail(kExitConfig, "bad numeric value for " + what + ": '" + s + "'");
  return v;
}

int to_int(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size())
    fail(kExitConfig, "bad integer value for " + what + ": '" + s + "'");
  return static_cast<int>(v);
}

// one resolvable option: flag wins, then config, then default
template <typename T>
T resolve(const CLI::Option* flag, const T& flag_value, const Config& cfg,
          const std::string& section, const std::string& key, const T& fallback);

template <>
double resolve<double>(const CLI::Option* flag, const double& flag_value, const Config& cfg,
                       const std::string& section, const std::string& key,
                       const double& fallback) {
  if (flag && flag->count() > 0) return flag_value;
  if (const auto* e = cfg.find(section, key)) return to_double(e->value, key);
  return fallback;
}

template <>
int resolve<int>(const CLI::Option* flag, const int& flag_value, const Config& cfg,
                 const std::string& section, const std::string& key, const int& fallback) {
  if (flag && flag->count() > 0) return flag_value;
  if (const auto* e = cfg.find(section, key)) return to_int(e->value, key);
  return fallback;
}

template <>
std::string resolve<std::string>(const CLI::Option* flag, const std::string& flag_value,
                                 const Config& cfg, const std::string& section,
                                 const std::string& key, const std::string& fallback) {
  if (flag && flag->count() > 0) return flag_value;
  if (const auto* e = cfg.find(section, key)) return e->value;
  return fallback;
}

template <>
bool resolve<bool>(const CLI::Option* flag, const bool& flag_value, const Config& cfg,
                   const std::string& section, const std::string& key,
                   const bool& fallback) {
  if (flag && flag->count() > 0) return flag_value;
  if (const auto* e = cfg.find(section, key))
    return e->value == "1" || e->value == "true" || e->value == "on";
  return fallback;
}

// ---------- shared run state ----------

struct LadderFlag {
  std::string label;
  double b = 0.0, d = 0.0, origin = 0.0;
};

LadderFlag parse_ladder(const std::string& text) {
  // "LABEL:B,D,origin"
  const auto colon = text.find(':');
  if (colon == std::string::npos) fail(kExitConfig, "bad --ladder '" + text + "'");
  LadderFlag l;
  l.label = trim(text.substr(0, colon));
  std::stringstream ss(text.substr(colon + 1));
  std::string field;
  std::vector<double> vals;
  while (std::getline(ss, field, ',')) vals.push_back(to_double(trim(field), "--ladder"));
  if (l.label.empty() || vals.size() != 3) fail(kExitConfig, "bad --ladder '" + text + "'");
  l.b = vals[0];
  l.d = vals[1];
  l.origin = vals[2];
  return l;
}

struct Common {
  std::string config_path;
  double pressure = 1.0;
  double temperature = 296.0;
  int jmax = 100;
  std::string out_dir = ".";
  std::string format = "csv";
  std::string channels_path;
  std::string levels_path;
  std::vector<std::string> ladder_flags;

  CLI::Option* pressure_opt = nullptr;
  CLI::Option* temperature_opt = nullptr;
  CLI::Option* jmax_opt = nullptr;
  CLI::Option* out_dir_opt = nullptr;
  CLI::Option* format_opt = nullptr;
  CLI::Option* channels_opt = nullptr;
  CLI::Option* levels_opt = nullptr;

  Config cfg;
  std::map<std::string, std::string> resolved;  // for the manifest
  std::vector<std::string> inputs;

  void add_flags(CLI::App* app) {
    app->add_option("--config", config_path, "sectioned key-value config file");
    pressure_opt = app->add_option("--pressure-atm", pressure, "pressure in atm");
    temperature_opt = app->add_option("--temperature-k", temperature, "temperature in K");
    jmax_opt = app->add_option("--jmax", jmax, "rigid-rotor ladder J_max");
    out_dir_opt = app->add_option("--out-dir", out_dir, "output directory");
    format_opt = app->add_option("--format", format, "table format: csv or json")
                     ->check(CLI::IsMember({"csv", "json"}));
    channels_opt = app->add_option("--channels", channels_path, "channel config file");
    levels_opt = app->add_option("--levels", levels_path, "level table (vib,J,energy_cm1)");
    app->add_option("--ladder", ladder_flags,
                    "rigid-rotor ladder LABEL:B,D,origin (repeatable)");
  }

  void finish(const std::string& workflow) {
    if (!config_path.empty()) {
      cfg = load_config(config_path);
      inputs.push_back(config_path);
    }
    pressure = resolve(pressure_opt, pressure, cfg, "physics", "pressure_atm", pressure);
    temperature =
        resolve(temperature_opt, temperature, cfg, "physics", "temperature_k", temperature);
    jmax = resolve(jmax_opt, jmax, cfg, "physics", "jmax", jmax);
    out_dir = resolve(out_dir_opt, out_dir, cfg, "io", "out_dir", out_dir);
    format = resolve(format_opt, format, cfg, "io", "format", format);
    channels_path =
        resolve(channels_opt, channels_path, cfg, "channels", "file", channels_path);
    levels_path = resolve(levels_opt, levels_path, cfg, "basis", "table", levels_path);

    if (pressure < 0.0) fail(kExitConfig, "pressure must be >= 0");
    if (temperature <= 0.0) fail(kExitConfig, "temperature must be > 0");
    if (jmax < 0) fail(kExitConfig, "jmax must be >= 0");

    resolved["workflow"] = workflow;
    resolved["pressure_atm"] = fmt(pressure);
    resolved["temperature_k"] = fmt(temperature);
    resolved["jmax"] = std::to_string(jmax);
    resolved["format"] = format;
  }

  rovi_basis* make_basis() {
    rovi_basis* basis = nullptr;
    if (!levels_path.empty()) {
      check(rovi_basis_load(levels_path.c_str(), &basis), "loading level table");
      inputs.push_back(levels_path);
      resolved["basis"] = "table:" + levels_path;
      return basis;
    }
    std::vector<LadderFlag> ladders;
    for (const auto& text : ladder_flags) ladders.push_back(parse_ladder(text));
    if (ladders.empty()) {
      for (const auto& [label, entries] : cfg.ladders) {
        LadderFlag l;
        l.label = label;
        const auto get = [&](const char* key) -> double {
          const auto it = entries.find(key);
          if (it == entries.end())
            fail(kExitConfig, "ladder '" + label + "' is missing '" + std::string(key) + "'");
          return to_double(it->second.value, key);
        };
        l.b = get("B");
        const auto it_d = entries.find("D");
        l.d = it_d == entries.end() ? 0.0 : to_double(it_d->second.value, "D");
        l.origin = get("origin");
        ladders.push_back(l);
      }
    }
    if (ladders.empty()) {
      // acetylene-like surrogate polyad, documented in the README
      ladders.push_back({"G1", 1.17664, 1.6276e-6, 3281.90});
      ladders.push_back({"G2", 1.17664, 1.6276e-6, 3294.84});
    }
    std::vector<rovi_ladder_spec> specs;
    std::string desc;
    for (const auto& l : ladders) {
      specs.push_back({l.label.c_str(), l.b, l.d, l.origin, jmax});
      desc += (desc.empty() ? "" : ";") + l.label + ":" + fmt(l.b) + "," + fmt(l.d) + "," +
              fmt(l.origin);
    }
    check(rovi_basis_create_rigid(specs.data(), static_cast<int>(specs.size()), &basis),
          "building rigid-rotor basis");
    resolved["basis"] = "rigid:" + desc;
    return basis;
  }

  rovi_channel_set* make_channels() {
    if (channels_path.empty())
      fail(kExitConfig, "a channel config is required (--channels or [channels] file=...)");
    rovi_channel_set* channels = nullptr;
    check(rovi_channels_load(channels_path.c_str(), &channels), "loading channel config");
    inputs.push_back(channels_path);
    resolved["channels"] = channels_path;
    return channels;
  }
};

// ---------- output helpers ----------

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

void write_table(const Table& table, const std::string& path, const std::string& format) {
  std::ofstream out(path);
  if (!out) fail(kExitIo, "cannot write '" + path + "'");
  if (format == "csv") {
    for (std::size_t c = 0; c < table.columns.size(); ++c)
      out << (c ? "," : "") << table.columns[c];
    out << "\n";
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
      out << "\n";
    }
  } else {
    json rows = json::array();
    for (const auto& row : table.rows) {
      json obj;
      for (std::size_t c = 0; c < row.size(); ++c) obj[table.columns[c]] = row[c];
      rows.push_back(std::move(obj));
    }
    out << rows.dump(1) << "\n";
  }
  if (!out) fail(kExitIo, "write failed for '" + path + "'");
}

std::string table_filename(const std::string& stem, const std::string& format) {
  return stem + (format == "csv" ? ".csv" : ".json");
}

uint64_t fnv1a64(const std::string& text) {
  uint64_t hash = 1469598103934665603ull;
  for (const unsigned char ch : text) {
    hash ^= ch;
    hash *= 1099511628211ull;
  }
  return hash;
}

void write_manifest(const Common& common, const std::vector<std::string>& outputs) {
  std::string canonical;
  for (const auto& [key, value] : common.resolved) canonical += key + "=" + value + "\n";
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical)));

  rovi_constants_info c;
  rovi_constants(&c);

  json manifest;
  manifest["tool"] = "rovi";
  manifest["version"] = rovi_version();
  manifest["config_hash"] = hash_hex;
  manifest["options"] = common.resolved;
  manifest["inputs"] = common.inputs;
  manifest["outputs"] = outputs;
  manifest["constants"] = {
      {"k_boltzmann_cm1_per_k", c.k_boltzmann_cm1_per_k},
      {"speed_of_light_cm_per_s", c.speed_of_light_cm_per_s},
      {"two_pi_c", c.two_pi_c},
      {"loschmidt_cm3_atm", c.loschmidt_cm3_atm},
      {"reference_temperature_k", c.reference_temperature_k},
      {"absorption_prefactor_d2_cm2", c.absorption_prefactor_d2_cm2},
  };

  const std::string path = common.out_dir + "/manifest.json";
  std::ofstream out(path);
  if (!out) fail(kExitIo, "cannot write '" + path + "'");
  out << manifest.dump(1) << "\n";
}

struct LevelRef {
  std::string vib;
  int j = 0;
};

std::vector<LevelRef> parse_level_list(const std::string& text) {
  std::vector<LevelRef> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const std::string t = trim(field);
    const auto colon = t.find(':');
    if (colon == std::string::npos) fail(kExitConfig, "bad level reference '" + t + "'");
    out.push_back({trim(t.substr(0, colon)), to_int(trim(t.substr(colon + 1)), "level J")});
  }
  return out;
}

// ---------- workflows ----------

int run_rates(Common& common) {
  rovi_basis* basis = common.make_basis();
  rovi_channel_set* channels = common.make_channels();

  rovi_rate_matrix* theta = nullptr;
  check(rovi_rate_matrix_build(basis, channels, common.temperature, common.pressure, &theta),
        "building rate matrix");
  const char* warnings = nullptr;
  rovi_rate_matrix_warnings(theta, &warnings);
  if (warnings && warnings[0]) std::fprintf(stderr, "warning: %s\n", warnings);

  int dim = 0;
  rovi_rate_matrix_dim(theta, &dim);

  Table table;
  table.columns = {"source_vib", "source_J", "target_vib", "target_J", "theta_cm1"};
  for (int j = 0; j < dim; ++j) {
    rovi_level_info src;
    check(rovi_basis_level(basis, j, &src), "reading basis");
    for (int i = 0; i < dim; ++i) {
      double value = 0.0;
      check(rovi_rate_matrix_get(theta, i, j, &value), "reading rate matrix");
      if (value == 0.0) continue;
      rovi_level_info dst;
      check(rovi_basis_level(basis, i, &dst), "reading basis");
      table.rows.push_back({src.vib, std::to_string(src.j), dst.vib,
                            std::to_string(dst.j), fmt(value)});
    }
  }

  const std::string out = common.out_dir + "/" + table_filename("rates", common.format);
  write_table(table, out, common.format);
  write_manifest(common, {out});

  rovi_rate_matrix_free(theta);
  rovi_channels_free(channels);
  rovi_basis_free(basis);
  return kExitOk;
}

int run_propagate(Common& common, const std::string& initial, double t_max_ps, int t_points,
                  const std::string& select, const std::string& dissipator,
                  const std::string& binary_out) {
  if (t_points < 2) fail(kExitConfig, "t_points must be >= 2");
  if (t_max_ps <= 0.0) fail(kExitConfig, "t_max_ps must be > 0");
  const rovi_dissipator form = dissipator == "geometric" ? ROVI_DISSIPATOR_GEOMETRIC_MEAN
                                                         : ROVI_DISSIPATOR_DIRECT;
  if (dissipator != "geometric" && dissipator != "direct")
    fail(kExitConfig, "dissipator must be 'direct' or 'geometric'");

  common.resolved["initial"] = initial;
  common.resolved["t_max_ps"] = fmt(t_max_ps);
  common.resolved["t_points"] = std::to_string(t_points);
  common.resolved["dissipator"] = dissipator;
  if (!select.empty()) common.resolved["select"] = select;

  rovi_basis* basis = common.make_basis();
  rovi_channel_set* channels = common.make_channels();
  rovi_rate_matrix* theta = nullptr;
  check(rovi_rate_matrix_build(basis, channels, common.temperature, common.pressure, &theta),
        "building rate matrix");
  const char* warnings = nullptr;
  rovi_rate_matrix_warnings(theta, &warnings);
  if (warnings && warnings[0]) std::fprintf(stderr, "warning: %s\n", warnings);

  int dim = 0;
  rovi_rate_matrix_dim(theta, &dim);

  const auto initial_ref = parse_level_list(initial);
  if (initial_ref.size() != 1) fail(kExitConfig, "--initial expects one VIB:J reference");
  int start = -1;
  check(rovi_basis_index_of(basis, initial_ref[0].vib.c_str(), initial_ref[0].j, &start),
        "resolving initial level");
  if (start < 0)
    fail(kExitConfig, "initial level " + initial + " is not in the basis");

  std::vector<int> selected;
  std::vector<std::string> selected_names;
  if (select.empty()) {
    for (int i = 0; i < dim; ++i) {
      rovi_level_info info;
      check(rovi_basis_level(basis, i, &info), "reading basis");
      selected.push_back(i);
      selected_names.push_back(std::string(info.vib) + ":" + std::to_string(info.j));
    }
  } else {
    for (const auto& ref : parse_level_list(select)) {
      int index = -1;
      check(rovi_basis_index_of(basis, ref.vib.c_str(), ref.j, &index), "resolving level");
      if (index < 0)
        fail(kExitConfig, "selected level " + ref.vib + ":" + std::to_string(ref.j) +
                              " is not in the basis");
      selected.push_back(index);
      selected_names.push_back(ref.vib + ":" + std::to_string(ref.j));
    }
  }

  std::vector<double> p0(static_cast<std::size_t>(dim), 0.0);
  p0[static_cast<std::size_t>(start)] = 1.0;
  std::vector<double> grid(static_cast<std::size_t>(t_points));
  for (int k = 0; k < t_points; ++k)
    grid[static_cast<std::size_t>(k)] = t_max_ps * 1e-12 * k / (t_points - 1);

  std::vector<double> traj(static_cast<std::size_t>(t_points) * dim);
  check(rovi_propagate_populations(theta, p0.data(), grid.data(), t_points, form,
                                   traj.data()),
        "propagating populations");

  Table table;
  table.columns.push_back("t_ps");
  for (const auto& name : selected_names) table.columns.push_back("pop[" + name + "]");
  for (int k = 0; k < t_points; ++k) {
    std::vector<std::string> row{fmt(grid[static_cast<std::size_t>(k)] * 1e12)};
    for (const int index : selected)
      row.push_back(fmt(traj[static_cast<std::size_t>(k) * dim + index]));
    table.rows.push_back(std::move(row));
  }

  const std::string out = common.out_dir + "/" + table_filename("trajectory", common.format);
  write_table(table, out, common.format);
  std::vector<std::string> outputs{out};

  if (!binary_out.empty()) {
    // full-state dump: little-endian 64-bit floats, row-major [t_points][dim]
    std::FILE* f = std::fopen(binary_out.c_str(), "wb");
    if (!f) fail(kExitIo, "cannot write '" + binary_out + "'");
    const std::size_t written = std::fwrite(traj.data(), sizeof(double), traj.size(), f);
    std::fclose(f);
    if (written != traj.size()) fail(kExitIo, "short write to '" + binary_out + "'");
    outputs.push_back(binary_out);
    common.resolved["binary_out"] = binary_out;
  }

  write_manifest(common, outputs);

  rovi_rate_matrix_free(theta);
  rovi_channels_free(channels);
  rovi_basis_free(basis);
  return kExitOk;
}

int run_broaden(Common& common, const std::string& lines_path, int m_min, int m_max) {
  rovi_basis* basis = common.make_basis();
  rovi_channel_set* channels = common.make_channels();

  Table table;
  std::string stem;
  if (!lines_path.empty()) {
    rovi_line_list* lines = nullptr;
    check(rovi_lines_load(lines_path.c_str(), basis, &lines), "loading line list");
    common.inputs.push_back(lines_path);
    common.resolved["lines"] = lines_path;
    int n = 0;
    rovi_lines_size(lines, &n);
    std::vector<double> gamma(static_cast<std::size_t>(n));
    check(rovi_line_broadening(lines, channels, common.temperature, gamma.data()),
          "computing line broadening");
    table.columns = {"line", "nu0_cm1", "branch", "m", "gamma_cm1_atm1"};
    for (int i = 0; i < n; ++i) {
      rovi_line_info info;
      check(rovi_lines_get(lines, i, &info), "reading line");
      table.rows.push_back({std::to_string(i), fmt(info.nu0_cm1),
                            std::string(1, info.branch), std::to_string(info.m_abs),
                            fmt(gamma[static_cast<std::size_t>(i)])});
    }
    rovi_lines_free(lines);
    stem = "line_broadening";
  } else {
    if (m_min < 1 || m_max < m_min) fail(kExitConfig, "need 1 <= m_min <= m_max");
    common.resolved["m_min"] = std::to_string(m_min);
    common.resolved["m_max"] = std::to_string(m_max);
    // one curve per vib with outgoing channels
    std::vector<std::string> vibs;
    {
      int n_levels = 0;
      rovi_basis_size(basis, &n_levels);
      for (int i = 0; i < n_levels; ++i) {
        rovi_level_info info;
        check(rovi_basis_level(basis, i, &info), "reading basis");
        if (std::find(vibs.begin(), vibs.end(), info.vib) == vibs.end())
          vibs.emplace_back(info.vib);
      }
    }
    const int count = m_max - m_min + 1;
    std::vector<std::vector<double>> curves;
    std::vector<std::string> curve_labels;
    for (const auto& vib : vibs) {
      std::vector<double> curve(static_cast<std::size_t>(count));
      const rovi_status status = rovi_broadening_curve(
          basis, channels, vib.c_str(), m_min, m_max, common.temperature, curve.data());
      if (status == ROVI_ERR_CONFIG) continue;  // vib without outgoing channels
      check(status, "computing broadening curve for " + vib);
      curves.push_back(std::move(curve));
      curve_labels.push_back(vib);
    }
    if (curves.empty()) fail(kExitConfig, "no vib in the basis has outgoing channels");
    table.columns.push_back("m");
    for (const auto& label : curve_labels)
      table.columns.push_back("gamma[" + label + "]_cm1_atm1");
    for (int k = 0; k < count; ++k) {
      std::vector<std::string> row{std::to_string(m_min + k)};
      for (const auto& curve : curves) row.push_back(fmt(curve[static_cast<std::size_t>(k)]));
      table.rows.push_back(std::move(row));
    }
    stem = "broadening";
  }

  const std::string out = common.out_dir + "/" + table_filename(stem, common.format);
  write_table(table, out, common.format);
  write_manifest(common, {out});

  rovi_channels_free(channels);
  rovi_basis_free(basis);
  return kExitOk;
}

int run_fit(Common& common, const std::string& observations_path, const std::string& law,
            bool no_average, bool independent, bool uniform_weights, int max_iterations,
            double init_k0, double init_eta, double init_beta, bool has_init) {
  if (observations_path.empty()) fail(kExitConfig, "--observations is required");
  if (law != "egl" && law != "epgl") fail(kExitConfig, "law must be 'egl' or 'epgl'");

  common.resolved["observations"] = observations_path;
  common.resolved["law"] = law;
  common.resolved["average"] = no_average ? "0" : "1";
  common.resolved["tie_parameters"] = independent ? "0" : "1";
  common.resolved["weighted"] = uniform_weights ? "0" : "1";
  common.resolved["max_iterations"] = std::to_string(max_iterations);

  rovi_basis* basis = common.make_basis();
  rovi_channel_set* topology = common.make_channels();

  rovi_observations* raw = nullptr;
  check(rovi_observations_load(observations_path.c_str(), &raw), "loading observations");
  common.inputs.push_back(observations_path);

  rovi_observations* obs = raw;
  if (!no_average) {
    rovi_observations* averaged = nullptr;
    check(rovi_observations_average_by_m(raw, &averaged), "averaging observations");
    obs = averaged;
  }

  rovi_fit_options options;
  rovi_fit_options_default(&options);
  options.tie_parameters = independent ? 0 : 1;
  options.weighted = uniform_weights ? 0 : 1;
  options.max_iterations = max_iterations;
  if (has_init) {
    options.has_initial_guess = 1;
    options.initial_k0 = init_k0;
    options.initial_eta = init_eta;
    options.initial_beta = init_beta;
    common.resolved["initial_guess"] =
        fmt(init_k0) + "," + fmt(init_eta) + "," + fmt(init_beta);
  }

  rovi_fit_result* fit = nullptr;
  const rovi_status status =
      rovi_fit_gap_law(obs, law == "epgl" ? ROVI_LAW_EPGL : ROVI_LAW_EGL, basis, topology,
                       common.temperature, &options, &fit);
  if (status != ROVI_OK && !fit)
    fail(exit_code_for(status), std::string("fit failed: ") + rovi_last_error());
  if (status != ROVI_OK)
    std::fprintf(stderr, "warning: %s (best-so-far result written)\n", rovi_last_error());

  const char* json_text = nullptr;
  check(rovi_fit_result_json(fit, &json_text), "serializing fit result");
  const std::string out = common.out_dir + "/fit.json";
  {
    std::ofstream f(out);
    if (!f) fail(kExitIo, "cannot write '" + out + "'");
    f << json_text << "\n";
  }
  write_manifest(common, {out});

  rovi_fit_result_free(fit);
  if (obs != raw) rovi_observations_free(obs);
  rovi_observations_free(raw);
  rovi_channels_free(topology);
  rovi_basis_free(basis);
  return status == ROVI_OK ? kExitOk : exit_code_for(status);
}

int run_spectrum(Common& common, const std::string& lines_path,
                 const std::string& gamma_file, double q_partition, double nu_min,
                 double nu_max, int nu_points, const std::string& normalization,
                 bool resolvent) {
  if (lines_path.empty()) fail(kExitConfig, "--lines is required");
  if (!(q_partition > 0.0)) fail(kExitConfig, "q_partition must be > 0");
  if (!(nu_max > nu_min) || nu_points < 2)
    fail(kExitConfig, "need nu_min < nu_max and nu_points >= 2");

  rovi_normalization norm = ROVI_NORM_SPIN_WEIGHTED_CLASSES;
  if (normalization == "class") norm = ROVI_NORM_PER_PARITY_CLASS;
  else if (normalization == "global") norm = ROVI_NORM_GLOBAL;
  else if (normalization != "weighted")
    fail(kExitConfig, "normalization must be class, global or weighted");

  common.resolved["lines"] = lines_path;
  common.resolved["q_partition"] = fmt(q_partition);
  common.resolved["nu_min"] = fmt(nu_min);
  common.resolved["nu_max"] = fmt(nu_max);
  common.resolved["nu_points"] = std::to_string(nu_points);
  common.resolved["normalization"] = normalization;
  common.resolved["resolvent"] = resolvent ? "1" : "0";
  if (!gamma_file.empty()) common.resolved["gamma_file"] = gamma_file;

  rovi_basis* basis = common.make_basis();

  rovi_line_list* lines = nullptr;
  check(rovi_lines_load(lines_path.c_str(), basis, &lines), "loading line list");
  common.inputs.push_back(lines_path);
  int n_lines = 0;
  rovi_lines_size(lines, &n_lines);

  std::vector<double> gamma(static_cast<std::size_t>(n_lines));
  std::vector<double> shift;
  if (!gamma_file.empty()) {
    // per-line table: gamma_cm1_atm1[,shift_cm1_atm1]
    std::ifstream in(gamma_file);
    if (!in) fail(kExitIo, "cannot open '" + gamma_file + "'");
    common.inputs.push_back(gamma_file);
    std::string line;
    std::vector<std::vector<double>> rows;
    bool header_seen = false;
    while (std::getline(in, line)) {
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      if (!header_seen) {
        header_seen = true;  // header names are fixed by convention
        continue;
      }
      std::stringstream ss(t);
      std::string field;
      std::vector<double> vals;
      while (std::getline(ss, field, ',')) vals.push_back(to_double(trim(field), "gamma"));
      rows.push_back(std::move(vals));
    }
    if (static_cast<int>(rows.size()) != n_lines)
      fail(kExitConfig, "gamma file has " + std::to_string(rows.size()) + " rows for " +
                            std::to_string(n_lines) + " lines");
    bool any_shift = false;
    for (const auto& r : rows) any_shift = any_shift || r.size() > 1;
    if (any_shift) shift.resize(static_cast<std::size_t>(n_lines), 0.0);
    for (int i = 0; i < n_lines; ++i) {
      gamma[static_cast<std::size_t>(i)] = rows[static_cast<std::size_t>(i)].at(0);
      if (any_shift && rows[static_cast<std::size_t>(i)].size() > 1)
        shift[static_cast<std::size_t>(i)] = rows[static_cast<std::size_t>(i)][1];
    }
  } else {
    rovi_channel_set* channels = common.make_channels();
    check(rovi_line_broadening(lines, channels, common.temperature, gamma.data()),
          "computing line broadening");
    rovi_channels_free(channels);
  }

  int n_levels = 0;
  rovi_basis_size(basis, &n_levels);
  std::vector<double> pops(static_cast<std::size_t>(n_levels));
  check(rovi_boltzmann_populations(basis, common.temperature, norm, pops.data()),
        "computing populations");

  std::vector<double> grid(static_cast<std::size_t>(nu_points));
  for (int k = 0; k < nu_points; ++k)
    grid[static_cast<std::size_t>(k)] = nu_min + (nu_max - nu_min) * k / (nu_points - 1);

  std::vector<double> alpha(static_cast<std::size_t>(nu_points));
  check(rovi_spectrum(lines, gamma.data(), shift.empty() ? nullptr : shift.data(),
                      pops.data(), grid.data(), nu_points, common.pressure,
                      common.temperature, q_partition, resolvent ? 1 : 0, alpha.data()),
        "computing spectrum");

  Table table;
  table.columns = {"nu_cm1", "alpha_cm1"};
  for (int k = 0; k < nu_points; ++k)
    table.rows.push_back({fmt(grid[static_cast<std::size_t>(k)]),
                          fmt(alpha[static_cast<std::size_t>(k)])});
  const std::string out = common.out_dir + "/" + table_filename("spectrum", common.format);
  write_table(table, out, common.format);

  // sidecar with the exact constants entering the absorption formula
  rovi_constants_info c;
  rovi_constants(&c);
  json sidecar;
  sidecar["pressure_atm"] = common.pressure;
  sidecar["temperature_k"] = common.temperature;
  sidecar["partition_sum"] = q_partition;
  sidecar["n_lines"] = n_lines;
  sidecar["constants"] = {
      {"absorption_prefactor_d2_cm2", c.absorption_prefactor_d2_cm2},
      {"loschmidt_cm3_atm", c.loschmidt_cm3_atm},
      {"reference_temperature_k", c.reference_temperature_k},
      {"k_boltzmann_cm1_per_k", c.k_boltzmann_cm1_per_k},
  };
  const std::string side = common.out_dir + "/spectrum_meta.json";
  {
    std::ofstream f(side);
    if (!f) fail(kExitIo, "cannot write '" + side + "'");
    f << sidecar.dump(1) << "\n";
  }

  write_manifest(common, {out, side});

  rovi_lines_free(lines);
  rovi_basis_free(basis);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"collisional rotational energy transfer and pressure-broadened spectra"};
  app.require_subcommand(1);

  auto* rates = app.add_subcommand("rates", "build and emit a state-to-state rate matrix");
  Common c_rates;
  c_rates.add_flags(rates);

  auto* propagate =
      app.add_subcommand("propagate", "field-free population dynamics from one level");
  Common c_prop;
  c_prop.add_flags(propagate);
  std::string initial = "G2:12", select, dissipator = "direct", binary_out;
  double t_max_ps = 1000.0;
  int t_points = 501;
  auto* initial_opt = propagate->add_option("--initial", initial, "initial level VIB:J");
  auto* tmax_opt = propagate->add_option("--t-max-ps", t_max_ps, "time horizon in ps");
  auto* tpoints_opt = propagate->add_option("--t-points", t_points, "grid points");
  auto* select_opt =
      propagate->add_option("--select", select, "levels to emit, VIB:J comma-separated");
  auto* diss_opt = propagate->add_option("--dissipator", dissipator,
                                         "dissipator form: direct or geometric");
  propagate->add_option("--binary-out", binary_out,
                        "optional full-state dump (little-endian doubles, row-major)");

  auto* broaden = app.add_subcommand("broaden", "broadening coefficients from channel sums");
  Common c_broaden;
  c_broaden.add_flags(broaden);
  std::string broaden_lines;
  int m_min = 1, m_max = 34;
  auto* blines_opt = broaden->add_option("--lines", broaden_lines,
                                         "per-line mode: line list to broaden");
  auto* mmin_opt = broaden->add_option("--m-min", m_min, "curve mode: first m");
  auto* mmax_opt = broaden->add_option("--m-max", m_max, "curve mode: last m");

  auto* fit = app.add_subcommand("fit", "fit gap-law parameters to broadening data");
  Common c_fit;
  c_fit.add_flags(fit);
  std::string observations, law = "egl";
  bool no_average = false, independent = false, uniform = false;
  int max_iterations = 200;
  double init_k0 = 0.0, init_eta = 0.0, init_beta = 0.0;
  auto* obs_opt = fit->add_option("--observations", observations,
                                  "table m,gamma_cm1_atm1[,sigma[,tag]]");
  auto* law_opt = fit->add_option("--law", law, "egl or epgl");
  fit->add_flag("--no-average", no_average, "skip per-m averaging");
  fit->add_flag("--independent", independent, "separate parameter sets per eigenstate");
  fit->add_flag("--uniform-weights", uniform, "uniform instead of 1/sigma^2 weights");
  auto* iter_opt = fit->add_option("--max-iterations", max_iterations, "iteration budget");
  auto* k0_opt = fit->add_option("--init-k0", init_k0, "initial K0");
  auto* eta_opt = fit->add_option("--init-eta", init_eta, "initial eta");
  auto* beta_opt = fit->add_option("--init-beta", init_beta, "initial beta");

  auto* spectrum = app.add_subcommand("spectrum", "pressure-broadened absorption spectrum");
  Common c_spec;
  c_spec.add_flags(spectrum);
  std::string spec_lines, gamma_file, normalization = "weighted";
  double q_partition = 412.45, nu_min = 0.0, nu_max = 0.0;
  int nu_points = 2001;
  auto* slines_opt = spectrum->add_option("--lines", spec_lines, "line list file");
  auto* gfile_opt = spectrum->add_option("--gamma-file", gamma_file,
                                         "per-line gamma[,shift] table (else --channels)");
  auto* q_opt = spectrum->add_option("--q-partition", q_partition, "partition sum Q(T)");
  auto* numin_opt = spectrum->add_option("--nu-min", nu_min, "grid start, cm^-1");
  auto* numax_opt = spectrum->add_option("--nu-max", nu_max, "grid end, cm^-1");
  auto* nupts_opt = spectrum->add_option("--nu-points", nu_points, "grid points");
  auto* norm_opt = spectrum->add_option("--normalization", normalization,
                                        "population tag: class, global or weighted");
  bool force_resolvent = false;
  spectrum->add_flag("--resolvent", force_resolvent, "force the resolvent path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (rates->parsed()) {
      c_rates.finish("rates");
      return run_rates(c_rates);
    }
    if (propagate->parsed()) {
      c_prop.finish("propagate");
      const auto& cfg = c_prop.cfg;
      initial = resolve(initial_opt, initial, cfg, "propagate", "initial", initial);
      t_max_ps = resolve(tmax_opt, t_max_ps, cfg, "propagate", "t_max_ps", t_max_ps);
      t_points = resolve(tpoints_opt, t_points, cfg, "propagate", "t_points", t_points);
      select = resolve(select_opt, select, cfg, "propagate", "select", select);
      dissipator = resolve(diss_opt, dissipator, cfg, "propagate", "dissipator", dissipator);
      return run_propagate(c_prop, initial, t_max_ps, t_points, select, dissipator,
                           binary_out);
    }
    if (broaden->parsed()) {
      c_broaden.finish("broaden");
      const auto& cfg = c_broaden.cfg;
      broaden_lines = resolve(blines_opt, broaden_lines, cfg, "broaden", "lines",
                              broaden_lines);
      m_min = resolve(mmin_opt, m_min, cfg, "broaden", "m_min", m_min);
      m_max = resolve(mmax_opt, m_max, cfg, "broaden", "m_max", m_max);
      return run_broaden(c_broaden, broaden_lines, m_min, m_max);
    }
    if (fit->parsed()) {
      c_fit.finish("fit");
      const auto& cfg = c_fit.cfg;
      observations = resolve(obs_opt, observations, cfg, "fit", "observations", observations);
      law = resolve(law_opt, law, cfg, "fit", "law", law);
      max_iterations =
          resolve(iter_opt, max_iterations, cfg, "fit", "max_iterations", max_iterations);
      const bool has_init = k0_opt->count() > 0 || eta_opt->count() > 0 ||
                            beta_opt->count() > 0;
      if (has_init && (k0_opt->count() == 0 || eta_opt->count() == 0))
        fail(kExitConfig, "an initial guess needs at least --init-k0 and --init-eta");
      return run_fit(c_fit, observations, law, no_average, independent, uniform,
                     max_iterations, init_k0, init_eta, init_beta, has_init);
    }
    if (spectrum->parsed()) {
      c_spec.finish("spectrum");
      const auto& cfg = c_spec.cfg;
      spec_lines = resolve(slines_opt, spec_lines, cfg, "spectrum", "lines", spec_lines);
      gamma_file = resolve(gfile_opt, gamma_file, cfg, "spectrum", "gamma_file", gamma_file);
      q_partition = resolve(q_opt, q_partition, cfg, "spectrum", "q_partition", q_partition);
      nu_min = resolve(numin_opt, nu_min, cfg, "spectrum", "nu_min", nu_min);
      nu_max = resolve(numax_opt, nu_max, cfg, "spectrum", "nu_max", nu_max);
      nu_points = resolve(nupts_opt, nu_points, cfg, "spectrum", "nu_points", nu_points);
      normalization =
          resolve(norm_opt, normalization, cfg, "spectrum", "normalization", normalization);
      return run_spectrum(c_spec, spec_lines, gamma_file, q_partition, nu_min, nu_max,
                          nu_points, normalization, force_resolvent);
    }
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return e.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  }
  return kExitConfig;
}
