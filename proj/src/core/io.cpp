#include "core/io.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "core/error.hpp"

namespace rovi {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& s, const std::string& path, int line_no,
                    const std::string& what) {
  const std::string t = trim(s);
  if (t.empty())
    throw io_error(path + ":" + std::to_string(line_no) + ": empty " + what);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    throw io_error(path + ":" + std::to_string(line_no) + ": bad " + what + " '" + t + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& path, int line_no,
              const std::string& what) {
  const std::string t = trim(s);
  char* end = nullptr;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size())
    throw io_error(path + ":" + std::to_string(line_no) + ": bad " + what + " '" + t + "'");
  return static_cast<int>(v);
}

struct CsvRow {
  int line_no;
  std::vector<std::string> fields;
};

// Reads a comma-separated table, returning the header fields and data rows.
std::pair<std::vector<std::string>, std::vector<CsvRow>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::vector<std::string> header;
  std::vector<CsvRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (header.empty())
      header = split_csv(t);
    else
      rows.push_back({line_no, split_csv(t)});
  }
  if (header.empty()) throw io_error(path + ": missing header line");
  return {header, rows};
}

void expect_header(const std::vector<std::string>& header,
                   const std::vector<std::string>& expected, const std::string& path,
                   std::size_t min_fields) {
  bool ok = header.size() >= min_fields && header.size() <= expected.size();
  for (std::size_t i = 0; ok && i < header.size(); ++i) ok = header[i] == expected[i];
  if (!ok) {
    std::string want;
    for (std::size_t i = 0; i < expected.size(); ++i)
      want += (i ? "," : "") + expected[i];
    throw io_error(path + ": unexpected header (expected '" + want + "')");
  }
}

struct IniEntry {
  std::string key;
  std::string value;
  int line_no;
};

struct IniSection {
  std::string name;  // text inside the brackets
  int line_no;
  std::vector<IniEntry> entries;
};

std::vector<IniSection> read_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::vector<IniSection> sections;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw config_error(path + ":" + std::to_string(line_no) + ": unterminated section");
      sections.push_back({trim(t.substr(1, t.size() - 2)), line_no, {}});
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw config_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    if (sections.empty())
      throw config_error(path + ":" + std::to_string(line_no) + ": entry outside a section");
    sections.back().entries.push_back(
        {trim(t.substr(0, eq)), trim(t.substr(eq + 1)), line_no});
  }
  return sections;
}

}  // namespace

std::vector<RoviLevel> read_level_table(const std::string& path) {
  const auto [header, rows] = read_csv(path);
  expect_header(header, {"vib", "J", "energy_cm1"}, path, 3);
  std::vector<RoviLevel> out;
  out.reserve(rows.size());
  for (const CsvRow& row : rows) {
    if (row.fields.size() != 3)
      throw io_error(path + ":" + std::to_string(row.line_no) + ": expected 3 fields");
    RoviLevel lv;
    lv.vib = row.fields[0];
    lv.j = parse_int(row.fields[1], path, row.line_no, "J");
    lv.energy_cm1 = parse_double(row.fields[2], path, row.line_no, "energy");
    if (lv.j < 0)
      throw io_error(path + ":" + std::to_string(row.line_no) + ": J must be >= 0");
    lv.parity = parity_of(lv.j);
    out.push_back(std::move(lv));
  }
  if (out.empty()) throw io_error(path + ": no levels");
  return out;
}

LineList read_line_list(const std::string& path, std::shared_ptr<const LevelBasis> basis) {
  if (!basis) throw invalid_argument_error("read_line_list: null basis");
  const auto [header, rows] = read_csv(path);
  expect_header(header, {"lower_vib", "lower_J", "upper_vib", "upper_J", "nu0_cm1", "dipole_D"},
                path, 6);
  LineList list;
  list.basis = basis;
  for (const CsvRow& row : rows) {
    if (row.fields.size() != 6)
      throw io_error(path + ":" + std::to_string(row.line_no) + ": expected 6 fields");
    const int jl = parse_int(row.fields[1], path, row.line_no, "lower_J");
    const int ju = parse_int(row.fields[3], path, row.line_no, "upper_J");
    const int lower = basis->index_of(row.fields[0], jl);
    const int upper = basis->index_of(row.fields[2], ju);
    if (lower < 0 || upper < 0)
      throw io_error(path + ":" + std::to_string(row.line_no) +
                     ": line references a level that is not in the basis");
    const double nu0 = parse_double(row.fields[4], path, row.line_no, "nu0");
    const double dip = parse_double(row.fields[5], path, row.line_no, "dipole");
    try {
      list.lines.push_back(make_line(*basis, lower, upper, nu0, dip));
    } catch (const Error& e) {
      throw io_error(path + ":" + std::to_string(row.line_no) + ": " + e.what());
    }
  }
  if (list.lines.empty()) throw io_error(path + ": no lines");
  return list;
}

std::vector<BroadeningObservation> read_observations(const std::string& path) {
  const auto [header, rows] = read_csv(path);
  expect_header(header, {"m", "gamma_cm1_atm1", "sigma", "tag"}, path, 2);
  std::vector<BroadeningObservation> out;
  for (const CsvRow& row : rows) {
    if (row.fields.size() < 2 || row.fields.size() > header.size())
      throw io_error(path + ":" + std::to_string(row.line_no) + ": bad field count");
    BroadeningObservation o;
    o.m_abs = parse_int(row.fields[0], path, row.line_no, "m");
    o.gamma = parse_double(row.fields[1], path, row.line_no, "gamma");
    if (o.m_abs < 1)
      throw io_error(path + ":" + std::to_string(row.line_no) + ": m must be >= 1");
    if (!(o.gamma > 0.0))
      throw io_error(path + ":" + std::to_string(row.line_no) + ": gamma must be > 0");
    if (row.fields.size() >= 3 && !trim(row.fields[2]).empty()) {
      o.sigma = parse_double(row.fields[2], path, row.line_no, "sigma");
      if (!(o.sigma > 0.0))
        throw io_error(path + ":" + std::to_string(row.line_no) + ": sigma must be > 0");
    } else {
      o.sigma = 0.05 * o.gamma;  // reported measurement-precision upper limit
    }
    if (row.fields.size() >= 4) o.source = row.fields[3];
    out.push_back(std::move(o));
  }
  if (out.empty()) throw io_error(path + ": no observations");
  return out;
}

ChannelSet read_channel_config(const std::string& path) {
  const auto sections = read_ini(path);
  std::vector<ChannelSpec> channels;
  for (const IniSection& sec : sections) {
    if (sec.name.rfind("channel", 0) != 0)
      throw config_error(path + ":" + std::to_string(sec.line_no) +
                         ": unknown section '[" + sec.name + "]' (expected [channel NAME])");
    ChannelSpec c;
    c.name = trim(sec.name.substr(7));
    if (c.name.empty())
      throw config_error(path + ":" + std::to_string(sec.line_no) +
                         ": channel section needs a name");

    std::optional<double> k0, eta, beta, weight, k0_dj2, eta_dj2, beta_dj2;
    std::optional<std::string> law;
    for (const IniEntry& e : sec.entries) {
      if (e.key == "from") c.from_vib = e.value;
      else if (e.key == "to") c.to_vib = e.value;
      else if (e.key == "law") law = e.value;
      else if (e.key == "K0") k0 = parse_double(e.value, path, e.line_no, "K0");
      else if (e.key == "eta") eta = parse_double(e.value, path, e.line_no, "eta");
      else if (e.key == "beta") beta = parse_double(e.value, path, e.line_no, "beta");
      else if (e.key == "weight") weight = parse_double(e.value, path, e.line_no, "weight");
      else if (e.key == "K0_dj2") k0_dj2 = parse_double(e.value, path, e.line_no, "K0_dj2");
      else if (e.key == "eta_dj2") eta_dj2 = parse_double(e.value, path, e.line_no, "eta_dj2");
      else if (e.key == "beta_dj2")
        beta_dj2 = parse_double(e.value, path, e.line_no, "beta_dj2");
      else
        throw config_error(path + ":" + std::to_string(e.line_no) + ": unknown key '" +
                           e.key + "'");
    }

    const int line = sec.line_no;
    const auto need = [&](bool ok, const std::string& what) {
      if (!ok)
        throw config_error(path + ":" + std::to_string(line) + ": channel '" + c.name +
                           "' is missing " + what);
    };
    need(!c.from_vib.empty(), "'from'");
    need(!c.to_vib.empty(), "'to'");
    need(law.has_value(), "'law'");
    need(k0.has_value(), "'K0'");
    need(eta.has_value(), "'eta'");

    if (*law == "egl") c.params.kind = GapLawKind::Egl;
    else if (*law == "epgl") c.params.kind = GapLawKind::Epgl;
    else
      throw config_error(path + ":" + std::to_string(line) + ": law must be egl or epgl");
    if (c.params.kind == GapLawKind::Epgl) need(beta.has_value(), "'beta'");
    else if (beta)
      throw config_error(path + ":" + std::to_string(line) + ": beta is only valid for epgl");

    c.params.k0 = *k0;
    c.params.eta = *eta;
    c.params.beta = beta.value_or(0.0);
    c.weight = weight.value_or(1.0);
    if (k0_dj2 || eta_dj2 || beta_dj2) {
      GapLawParams p2 = c.params;
      if (k0_dj2) p2.k0 = *k0_dj2;
      if (eta_dj2) p2.eta = *eta_dj2;
      if (beta_dj2) p2.beta = *beta_dj2;
      c.params_dj2 = p2;
    }
    channels.push_back(std::move(c));
  }
  try {
    return ChannelSet(std::move(channels));
  } catch (const Error& e) {
    throw config_error(path + ": " + e.what());
  }
}

}  // namespace rovi
