#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <optional>
#include <vector>

#include "core/gaplaws.hpp"
#include "core/levels.hpp"

namespace rovi {

enum class Branch { P, Q, R };

struct SpectralLine {
  int lower = -1;        // index into the basis
  int upper = -1;
  double nu0_cm1 = 0.0;  // line position
  double dipole_d = 0.0; // transition dipole, Debye
  Branch branch = Branch::R;
  int m_abs = 0;         // J_lower + 1 for R lines, J_lower for P and Q
};

// Derives branch and |m| from the level pair; dJ must be -1, 0 or +1.
SpectralLine make_line(const LevelBasis& basis, int lower, int upper, double nu0_cm1,
                       double dipole_d);

struct LineList {
  std::shared_ptr<const LevelBasis> basis;
  std::vector<SpectralLine> lines;
};

// Line-space relaxation matrix, cm^-1 atm^-1. Diagonal convention
// W_ll = gamma_l - i delta_l: a positive shift moves the line to higher
// wavenumber. Off-diagonal entries can only come from ingested data.
struct RelaxationMatrix {
  Eigen::MatrixXcd w;
  bool diagonal_only = true;
};

RelaxationMatrix build_diagonal_relaxation(const std::vector<double>& gamma,
                                           const std::optional<std::vector<double>>& shifts);

// Total transfer frequency out of (src vib, j_from) through one channel:
// sum over final J in the channel target vib (|dJ| even, same level excluded),
// upward terms from the channel law, downward from detailed balance.
double channel_outflow_sum(const ChannelSpec& channel, const LevelBasis& basis,
                           int j_from, double temperature_k);

// Broadening coefficient of a line from the upper level's transfer channels:
// gamma = sum_c weight_c * channel_outflow_sum_c. cm^-1 atm^-1.
double broadening_from_rates(const SpectralLine& line, const ChannelSet& channels,
                             const LevelBasis& basis, double temperature_k);

// Half-sum form: gamma = 1/2 (lower-level outflow + upper-level outflow).
// ground_rates must be per-pressure (cm^-1 atm^-1).
double full_fano_broadening(const SpectralLine& line, const RateMatrix& ground_rates,
                            const ChannelSet& excited_channels, const LevelBasis& basis,
                            double temperature_k);

struct SpectrumGrid {
  Eigen::VectorXd nu_cm1;
  Eigen::VectorXd alpha_cm1;
  double pressure_atm = 1.0;
  double temperature_k = 296.0;
};

// [1 - exp(-h c nu / kB T)] with nu in cm^-1.
double radiation_factor(double nu_cm1, double temperature_k);

// Absorption coefficient over a wavenumber grid:
//   alpha(nu) = A (n_L T0 / (Q T)) [1 - exp(-nu/kT)] nu (1/pi)
//               sum_{l l'} rho_l d_l d_l' Im{[nu I - L_a - i P W]^-1}_{l' l}
// with A the absorption prefactor and rho_l the population of the line's
// lower level. Diagonal W uses the analytically equivalent Lorentzian sum
// unless force_resolvent is set; both paths agree to rounding.
SpectrumGrid spectrum(const LineList& lines, const RelaxationMatrix& w,
                      const PopulationVector& populations, const Eigen::VectorXd& nu_grid,
                      double pressure_atm, double temperature_k, double partition_sum,
                      bool force_resolvent = false);

}  // namespace rovi
