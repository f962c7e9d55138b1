#include "core/lineshape.hpp"

#include <cmath>
#include <string>

#include "core/constants.hpp"
#include "core/error.hpp"
#include "core/threads.hpp"

namespace rovi {

SpectralLine make_line(const LevelBasis& basis, int lower, int upper, double nu0_cm1,
                       double dipole_d) {
  const int n = static_cast<int>(basis.size());
  if (lower < 0 || upper < 0 || lower >= n || upper >= n)
    throw invalid_argument_error("make_line: level index out of range");
  if (!(nu0_cm1 > 0.0))
    throw invalid_argument_error("make_line: line position must be > 0");
  if (!std::isfinite(dipole_d))
    throw invalid_argument_error("make_line: dipole must be finite");

  const int jl = basis.level(lower).j;
  const int ju = basis.level(upper).j;
  const int dj = ju - jl;

  SpectralLine line;
  line.lower = lower;
  line.upper = upper;
  line.nu0_cm1 = nu0_cm1;
  line.dipole_d = dipole_d;
  switch (dj) {
    case 1:
      line.branch = Branch::R;
      line.m_abs = jl + 1;
      break;
    case 0:
      line.branch = Branch::Q;
      line.m_abs = jl;
      break;
    case -1:
      line.branch = Branch::P;
      line.m_abs = jl;
      break;
    default:
      throw invalid_argument_error("make_line: dJ must be -1, 0 or +1 (got " +
                                   std::to_string(dj) + ")");
  }
  return line;
}

RelaxationMatrix build_diagonal_relaxation(const std::vector<double>& gamma,
                                           const std::optional<std::vector<double>>& shifts) {
  if (shifts && shifts->size() != gamma.size())
    throw invalid_argument_error("build_diagonal_relaxation: length mismatch");
  const auto n = static_cast<Eigen::Index>(gamma.size());
  RelaxationMatrix rm;
  rm.w = Eigen::MatrixXcd::Zero(n, n);
  rm.diagonal_only = true;
  for (Eigen::Index l = 0; l < n; ++l) {
    const double g = gamma[static_cast<std::size_t>(l)];
    if (!(g >= 0.0) || !std::isfinite(g))
      throw invalid_argument_error("build_diagonal_relaxation: gamma must be >= 0");
    const double d = shifts ? (*shifts)[static_cast<std::size_t>(l)] : 0.0;
    rm.w(l, l) = std::complex<double>(g, -d);
  }
  return rm;
}

double channel_outflow_sum(const ChannelSpec& channel, const LevelBasis& basis,
                           int j_from, double temperature_k) {
  const int from = basis.index_of(channel.from_vib, j_from);
  if (from < 0)
    throw config_error("channel_outflow_sum: level (" + channel.from_vib + ", J=" +
                       std::to_string(j_from) + ") not in basis");
  if (!basis.has_vib(channel.to_vib))
    throw config_error("channel_outflow_sum: target vib '" + channel.to_vib +
                       "' not in basis");

  const double e_from = basis.level(static_cast<std::size_t>(from)).energy_cm1;
  const int j_hi = basis.j_max(channel.to_vib);
  double total = 0.0;
  for (int jp = j_from % 2; jp <= j_hi; jp += 2) {  // |dJ| even
    if (channel.to_vib == channel.from_vib && jp == j_from) continue;
    const int target = basis.index_of(channel.to_vib, jp);
    const double e_to = basis.level(static_cast<std::size_t>(target)).energy_cm1;
    const GapLawParams& p = channel.params_for(std::abs(jp - j_from));
    if (e_to >= e_from) {
      total += gap_law_rate(p, e_from, e_to, temperature_k);
    } else {
      const double k_up = gap_law_rate(p, e_to, e_from, temperature_k);
      total += downward_rate(k_up, jp, j_from, e_to, e_from, temperature_k);
    }
  }
  return total;
}

double broadening_from_rates(const SpectralLine& line, const ChannelSet& channels,
                             const LevelBasis& basis, double temperature_k) {
  const std::string& upper_vib = basis.level(static_cast<std::size_t>(line.upper)).vib;
  const auto outgoing = channels.outgoing(upper_vib);
  if (outgoing.empty())
    throw config_error("broadening_from_rates: no channels defined for upper vib '" +
                       upper_vib + "'");
  const int j_upper = basis.level(static_cast<std::size_t>(line.upper)).j;
  double gamma = 0.0;
  for (const ChannelSpec* c : outgoing)
    gamma += c->weight * channel_outflow_sum(*c, basis, j_upper, temperature_k);
  return gamma;
}

double full_fano_broadening(const SpectralLine& line, const RateMatrix& ground_rates,
                            const ChannelSet& excited_channels, const LevelBasis& basis,
                            double temperature_k) {
  if (ground_rates.pressure_scaled)
    throw invalid_argument_error(
        "full_fano_broadening: ground rates must be per-pressure (cm^-1 atm^-1)");
  if (!ground_rates.basis)
    throw invalid_argument_error("full_fano_broadening: ground rate matrix has no basis");

  const RoviLevel& lo = basis.level(static_cast<std::size_t>(line.lower));
  const int gi = ground_rates.basis->index_of(lo.vib, lo.j);
  if (gi < 0)
    throw invalid_argument_error("full_fano_broadening: line's lower level (" + lo.vib +
                                 ", J=" + std::to_string(lo.j) +
                                 ") not in the ground rate basis");
  const double lower_sum = ground_rates.theta.col(gi).sum();
  const double upper_sum = broadening_from_rates(line, excited_channels, basis, temperature_k);
  return 0.5 * (lower_sum + upper_sum);
}

double radiation_factor(double nu_cm1, double temperature_k) {
  return 1.0 - std::exp(-nu_cm1 / constants::thermal_energy_cm1(temperature_k));
}

SpectrumGrid spectrum(const LineList& lines, const RelaxationMatrix& w,
                      const PopulationVector& populations, const Eigen::VectorXd& nu_grid,
                      double pressure_atm, double temperature_k, double partition_sum,
                      bool force_resolvent) {
  const auto n_lines = static_cast<Eigen::Index>(lines.lines.size());
  if (!lines.basis) throw invalid_argument_error("spectrum: line list has no basis");
  if (w.w.rows() != n_lines || w.w.cols() != n_lines)
    throw invalid_argument_error("spectrum: relaxation matrix size mismatch");
  if (populations.values.size() != static_cast<Eigen::Index>(lines.basis->size()))
    throw invalid_argument_error("spectrum: population vector size mismatch");
  if (!(partition_sum > 0.0)) throw invalid_argument_error("spectrum: Q must be > 0");
  if (!(temperature_k > 0.0)) throw invalid_argument_error("spectrum: T must be > 0");
  if (!(pressure_atm >= 0.0)) throw invalid_argument_error("spectrum: P must be >= 0");
  for (Eigen::Index k = 1; k < nu_grid.size(); ++k)
    if (!(nu_grid[k] > nu_grid[k - 1]))
      throw invalid_argument_error("spectrum: grid must be strictly increasing");

  // rho_l d_l and d_l over the line space
  Eigen::VectorXd weight(n_lines), dip(n_lines);
  for (Eigen::Index l = 0; l < n_lines; ++l) {
    const SpectralLine& ln = lines.lines[static_cast<std::size_t>(l)];
    weight[l] = populations.values[ln.lower] * ln.dipole_d;
    dip[l] = ln.dipole_d;
  }

  const double scale = constants::absorption_prefactor_d2_cm2 *
                       constants::loschmidt_cm3_atm * constants::reference_temperature_k /
                       (partition_sum * temperature_k) / std::numbers::pi;

  // reject grid points on top of zero-width poles
  for (Eigen::Index l = 0; l < n_lines; ++l) {
    const double g = pressure_atm * w.w(l, l).real();
    if (g != 0.0) continue;
    const double center =
        lines.lines[static_cast<std::size_t>(l)].nu0_cm1 - pressure_atm * w.w(l, l).imag();
    for (Eigen::Index k = 0; k < nu_grid.size(); ++k)
      if (std::abs(nu_grid[k] - center) < 1e-9)
        throw numeric_error("spectrum: grid point " + std::to_string(nu_grid[k]) +
                            " cm^-1 lies on a zero-width pole");
  }

  SpectrumGrid out;
  out.nu_cm1 = nu_grid;
  out.alpha_cm1 = Eigen::VectorXd::Zero(nu_grid.size());
  out.pressure_atm = pressure_atm;
  out.temperature_k = temperature_k;

  if (w.diagonal_only && !force_resolvent) {
    // sum of Lorentzians; W_ll = gamma - i delta shifts the center to
    // nu0 + P delta and sets the HWHM to P gamma
    parallel_for(static_cast<std::size_t>(nu_grid.size()), [&](std::size_t k) {
      const double nu = nu_grid[static_cast<Eigen::Index>(k)];
      double s = 0.0;
      for (Eigen::Index l = 0; l < n_lines; ++l) {
        const SpectralLine& ln = lines.lines[static_cast<std::size_t>(l)];
        const double g = pressure_atm * w.w(l, l).real();
        const double center = ln.nu0_cm1 - pressure_atm * w.w(l, l).imag();
        const double det = nu - center;
        s += weight[l] * dip[l] * g / (det * det + g * g);
      }
      out.alpha_cm1[static_cast<Eigen::Index>(k)] =
          scale * radiation_factor(nu, temperature_k) * nu * s;
    });
    return out;
  }

  // general path: one complex solve per grid point
  const std::complex<double> im(0.0, 1.0);
  Eigen::VectorXd centers(n_lines);
  for (Eigen::Index l = 0; l < n_lines; ++l)
    centers[l] = lines.lines[static_cast<std::size_t>(l)].nu0_cm1;

  parallel_for(static_cast<std::size_t>(nu_grid.size()), [&](std::size_t k) {
    const double nu = nu_grid[static_cast<Eigen::Index>(k)];
    Eigen::MatrixXcd m = -im * pressure_atm * w.w;
    for (Eigen::Index l = 0; l < n_lines; ++l) m(l, l) += nu - centers[l];
    const Eigen::VectorXcd x = m.partialPivLu().solve(weight.cast<std::complex<double>>());
    if (!x.allFinite())
      throw numeric_error("spectrum: singular resolvent at grid point " +
                          std::to_string(nu) + " cm^-1");
    const std::complex<double> contraction = dip.cast<std::complex<double>>().dot(x);
    out.alpha_cm1[static_cast<Eigen::Index>(k)] =
        scale * radiation_factor(nu, temperature_k) * nu * contraction.imag();
  });
  return out;
}

}  // namespace rovi
