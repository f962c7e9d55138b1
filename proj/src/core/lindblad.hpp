#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "core/gaplaws.hpp"

namespace rovi {

// The dissipator expanded from the phenomenological jump operators
// sqrt(theta_ij)|i><j|. DirectExpansion is the standard Lindblad result
// (gain theta_nk rho_kk, loss sum_j theta_jn rho_nn). GeometricMean replaces
// every theta product entry by sqrt(theta_nk theta_kn); the two coincide only
// for symmetric theta and the geometric form does not relax to Boltzmann.
enum class DissipatorForm { DirectExpansion, GeometricMean };

struct DensityState {
  Eigen::VectorXd populations;
  std::optional<Eigen::MatrixXcd> coherences;  // Hermitian, zero diagonal
  double time_s = 0.0;
};

// Sampled field amplitude; linear interpolation between samples, zero outside.
// dipole_cm1(i, j) is the coupling mu_ij in cm^-1 per unit field amplitude.
struct FieldTrace {
  Eigen::VectorXd times_s;
  Eigen::VectorXd amplitudes;
  Eigen::MatrixXd dipole_cm1;

  double amplitude_at(double t) const;
};

// d(populations)/dt in 1/s for a pressure-scaled rate matrix. The returned
// vector sums to zero (total population conservation).
Eigen::VectorXd population_rhs(const RateMatrix& theta, const Eigen::VectorXd& populations,
                               DissipatorForm form = DissipatorForm::DirectExpansion);

// Coherence decay rate (1/s) of rho_nm: half the sum of the total outflow
// frequencies of n and m.
double coherence_decay_rate(const RateMatrix& theta, int n, int m,
                            DissipatorForm form = DissipatorForm::DirectExpansion);

// Rate generator G (1/s) with G p = population_rhs(p).
Eigen::MatrixXd population_generator(const RateMatrix& theta,
                                     DissipatorForm form = DissipatorForm::DirectExpansion);

struct PropagateOptions {
  DissipatorForm form = DissipatorForm::DirectExpansion;
  double rtol = 1e-9;
  double atol = 1e-12;
  long max_steps = 2000000;  // ODE path budget; exceeding it is an error
};

// Field-free population propagation through the exact matrix exponential of
// the rate generator. t_grid must be strictly increasing, starting at or
// after state0.time. Returns one state per grid point.
std::vector<DensityState> propagate_populations(const DensityState& state0,
                                                const RateMatrix& theta,
                                                const std::vector<double>& t_grid_s,
                                                const PropagateOptions& opts = {});

// Full density-matrix propagation (adaptive Dormand-Prince 5(4)):
//   drho/dt = -i[H(t), rho] + dissipator,
// with H(t) = two_pi_c (diag(E) - mu eps(t)) in rad/s. Used when coherences
// are tracked or a field is present.
std::vector<DensityState> propagate_density(const DensityState& state0,
                                            const RateMatrix& theta,
                                            const Eigen::VectorXd& level_energies_cm1,
                                            const std::optional<FieldTrace>& field,
                                            const std::vector<double>& t_grid_s,
                                            const PropagateOptions& opts = {});

// Dispatches to the exact path for population-only, field-free states and to
// the ODE path otherwise.
std::vector<DensityState> propagate(const DensityState& state0, const RateMatrix& theta,
                                    const Eigen::VectorXd& level_energies_cm1,
                                    const std::optional<FieldTrace>& field,
                                    const std::vector<double>& t_grid_s,
                                    const PropagateOptions& opts = {});

}  // namespace rovi
