#include "core/gaplaws.hpp"

#include <cmath>
#include <map>

#include "core/constants.hpp"
#include "core/error.hpp"

namespace rovi {

namespace {

void validate_params(const GapLawParams& p, const std::string& where) {
  if (!(p.k0 > 0.0) || !std::isfinite(p.k0))
    throw config_error(where + ": K0 must be positive and finite");
  if (!std::isfinite(p.eta)) throw config_error(where + ": eta must be finite");
  if (p.kind == GapLawKind::Epgl && !std::isfinite(p.beta))
    throw config_error(where + ": beta must be finite");
}

}  // namespace

ChannelSet::ChannelSet(std::vector<ChannelSpec> channels) : channels_(std::move(channels)) {
  if (channels_.empty()) throw config_error("channel set must not be empty");

  std::map<std::string, std::vector<const ChannelSpec*>> by_from;
  for (const ChannelSpec& c : channels_) {
    if (c.from_vib.empty() || c.to_vib.empty())
      throw config_error("channel '" + c.name + "': vib labels must not be empty");
    if (!(c.weight >= 0.0 && c.weight <= 1.0))
      throw config_error("channel '" + c.name + "': weight must lie in [0, 1]");
    validate_params(c.params, "channel '" + c.name + "'");
    if (c.params_dj2) validate_params(*c.params_dj2, "channel '" + c.name + "' (|dJ|=2)");
    by_from[c.from_vib].push_back(&c);
  }

  // weight rule per source vib: sum to 1, or all exactly 1
  for (const auto& [from, group] : by_from) {
    double sum = 0.0;
    bool all_unit = true;
    for (const ChannelSpec* c : group) {
      sum += c->weight;
      all_unit = all_unit && c->weight == 1.0;
    }
    if (!all_unit && std::abs(sum - 1.0) > 1e-9)
      throw config_error("channel weights for source vib '" + from +
                         "' sum to " + std::to_string(sum) +
                         "; they must sum to 1 (or all equal 1)");
  }

  // R1..R4 taxonomy: intra channels keep the vib, inter channels change it,
  // and the named pairs must be mutually consistent.
  const ChannelSpec* named[5] = {nullptr, nullptr, nullptr, nullptr, nullptr};
  for (const ChannelSpec& c : channels_) {
    if (c.name.size() == 2 && c.name[0] == 'R' && c.name[1] >= '1' && c.name[1] <= '4') {
      const int k = c.name[1] - '0';
      if (named[k])
        throw config_error("duplicate channel name '" + c.name + "'");
      named[k] = &c;
      const bool intra = (k == 3 || k == 4);
      if (intra && c.from_vib != c.to_vib)
        throw config_error("channel '" + c.name + "' must stay within one vib");
      if (!intra && c.from_vib == c.to_vib)
        throw config_error("channel '" + c.name + "' must connect two vibs");
    }
  }
  if (named[1] && named[2] &&
      (named[1]->from_vib != named[2]->to_vib || named[1]->to_vib != named[2]->from_vib))
    throw config_error("channels R1 and R2 must be mutually inverse");
  if (named[1] && named[3] && named[3]->from_vib != named[1]->from_vib)
    throw config_error("channel R3 must act within R1's source vib");
  if (named[2] && named[4] && named[4]->from_vib != named[2]->from_vib)
    throw config_error("channel R4 must act within R2's source vib");
}

std::vector<const ChannelSpec*> ChannelSet::outgoing(const std::string& from_vib) const {
  std::vector<const ChannelSpec*> out;
  for (const ChannelSpec& c : channels_)
    if (c.from_vib == from_vib) out.push_back(&c);
  return out;
}

bool ChannelSet::has_outgoing(const std::string& from_vib) const {
  for (const ChannelSpec& c : channels_)
    if (c.from_vib == from_vib) return true;
  return false;
}

double egl_rate(const GapLawParams& p, double e_low_cm1, double e_high_cm1,
                double temperature_k) {
  if (!std::isfinite(e_low_cm1) || !std::isfinite(e_high_cm1))
    throw invalid_argument_error("egl_rate: energies must be finite");
  if (!(temperature_k > 0.0)) throw invalid_argument_error("egl_rate: T must be > 0");
  if (e_high_cm1 < e_low_cm1)
    throw invalid_argument_error("egl_rate: E_high < E_low (caller must orient energies)");
  // the reduced gap x is formed exactly as in epgl_rate so that the two laws
  // agree bitwise when the power factor is 1
  const double x =
      (e_high_cm1 - e_low_cm1) / constants::thermal_energy_cm1(temperature_k);
  return p.k0 * std::exp(-p.eta * x);
}

double epgl_rate(const GapLawParams& p, double e_low_cm1, double e_high_cm1,
                 double temperature_k) {
  if (!std::isfinite(e_low_cm1) || !std::isfinite(e_high_cm1))
    throw invalid_argument_error("epgl_rate: energies must be finite");
  if (!(temperature_k > 0.0)) throw invalid_argument_error("epgl_rate: T must be > 0");
  if (e_high_cm1 < e_low_cm1)
    throw invalid_argument_error("epgl_rate: E_high < E_low (caller must orient energies)");
  const double gap = e_high_cm1 - e_low_cm1;
  if (gap == 0.0)
    throw numeric_error("epgl_rate: zero energy gap (power term singular)");
  const double x = gap / constants::thermal_energy_cm1(temperature_k);
  return p.k0 * std::pow(x, -p.beta) * std::exp(-p.eta * x);
}

double gap_law_rate(const GapLawParams& p, double e_low_cm1, double e_high_cm1,
                    double temperature_k) {
  return p.kind == GapLawKind::Egl ? egl_rate(p, e_low_cm1, e_high_cm1, temperature_k)
                                   : epgl_rate(p, e_low_cm1, e_high_cm1, temperature_k);
}

double downward_rate(double k_up, int j_low, int j_high, double e_low_cm1,
                     double e_high_cm1, double temperature_k) {
  if (!std::isfinite(k_up) || !std::isfinite(e_low_cm1) || !std::isfinite(e_high_cm1))
    throw invalid_argument_error("downward_rate: inputs must be finite");
  if (j_low < 0 || j_high < 0)
    throw invalid_argument_error("downward_rate: J must be >= 0");
  if (!(temperature_k > 0.0))
    throw invalid_argument_error("downward_rate: T must be > 0");
  const double kt = constants::thermal_energy_cm1(temperature_k);
  const double g = (2.0 * j_low + 1.0) / (2.0 * j_high + 1.0);
  return g * std::exp((e_high_cm1 - e_low_cm1) / kt) * k_up;
}

RateMatrix build_rate_matrix(std::shared_ptr<const LevelBasis> basis,
                             const ChannelSet& channels, double temperature_k,
                             double pressure_atm) {
  if (!basis) throw invalid_argument_error("build_rate_matrix: null basis");
  if (!(temperature_k > 0.0))
    throw invalid_argument_error("build_rate_matrix: T must be > 0");
  if (!(pressure_atm >= 0.0) || !std::isfinite(pressure_atm))
    throw invalid_argument_error("build_rate_matrix: P must be >= 0 and finite");

  for (const std::string& vib : basis->vibs())
    if (!channels.has_outgoing(vib))
      throw config_error("no outgoing channel defined for vib '" + vib + "'");

  // channel lookup by (from, to)
  std::map<std::pair<std::string, std::string>, std::vector<const ChannelSpec*>> route;
  for (const ChannelSpec& c : channels.channels())
    route[{c.from_vib, c.to_vib}].push_back(&c);

  const auto n = static_cast<Eigen::Index>(basis->size());
  RateMatrix rm;
  rm.theta = Eigen::MatrixXd::Zero(n, n);
  rm.basis = basis;
  rm.temperature_k = temperature_k;
  rm.pressure_atm = pressure_atm;
  rm.pressure_scaled = true;
  if (pressure_atm > 1.0)
    rm.warnings.push_back("pressure above 1 atm: the linear theta = P k scaling "
                          "may need a collision-frequency correction");

  const auto& lv = basis->levels();
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      if ((lv[a].j - lv[b].j) % 2 != 0) continue;  // ortho<->para forbidden

      // orient the pair by energy; ties ordered by basis index
      Eigen::Index lo = a, hi = b;
      if (lv[b].energy_cm1 < lv[a].energy_cm1) std::swap(lo, hi);

      auto it = route.find({lv[lo].vib, lv[hi].vib});
      if (it == route.end()) continue;

      const int abs_dj = std::abs(lv[hi].j - lv[lo].j);
      for (const ChannelSpec* c : it->second) {
        const GapLawParams& p = c->params_for(abs_dj);
        const double k_up = gap_law_rate(p, lv[lo].energy_cm1, lv[hi].energy_cm1,
                                         temperature_k);
        const double k_dn = downward_rate(k_up, lv[lo].j, lv[hi].j, lv[lo].energy_cm1,
                                          lv[hi].energy_cm1, temperature_k);
        rm.theta(hi, lo) += pressure_atm * c->weight * k_up;
        rm.theta(lo, hi) += pressure_atm * c->weight * k_dn;
      }
    }
  }
  return rm;
}

RateMatrix build_rate_matrix_per_atm(std::shared_ptr<const LevelBasis> basis,
                                     const ChannelSet& channels, double temperature_k) {
  RateMatrix rm = build_rate_matrix(std::move(basis), channels, temperature_k, 1.0);
  rm.pressure_scaled = false;
  rm.warnings.clear();
  return rm;
}

}  // namespace rovi
