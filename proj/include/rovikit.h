/*
 * rovikit -- collision-induced rotational population transfer and
 * pressure-broadened lineshapes for linear molecules.
 *
 * C interface over the C++ core: opaque handles, integer status codes. Every
 * function returns ROVI_OK on success; on failure rovi_last_error() gives a
 * thread-local message describing the most recent failing call.
 *
 * Unit conventions: energies and line positions in cm^-1, kinetic constants
 * and broadening coefficients in cm^-1 atm^-1, pressure in atm, temperature
 * in K, time in s, dipoles in Debye.
 */

#ifndef ROVIKIT_H
#define ROVIKIT_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rovi_status {
  ROVI_OK = 0,
  ROVI_ERR_INVALID_ARGUMENT = 1,
  ROVI_ERR_CONFIG = 2,
  ROVI_ERR_NUMERIC = 3,
  ROVI_ERR_IO = 4
} rovi_status;

typedef enum rovi_law { ROVI_LAW_EGL = 0, ROVI_LAW_EPGL = 1 } rovi_law;

typedef enum rovi_parity { ROVI_PARITY_PARA = 0, ROVI_PARITY_ORTHO = 1 } rovi_parity;

/* Population normalization tags: per parity class (each class sums to 1),
 * global (grand sum 1, ortho carries nuclear-spin weight 3), or
 * spin-weighted classes (each class normalized then scaled by 3/1, grand
 * total 4). */
typedef enum rovi_normalization {
  ROVI_NORM_PER_PARITY_CLASS = 0,
  ROVI_NORM_GLOBAL = 1,
  ROVI_NORM_SPIN_WEIGHTED_CLASSES = 2
} rovi_normalization;

/* Dissipator expansion of the phenomenological jump operators. The direct
 * expansion is the default; the geometric-mean form reproduces the
 * symmetrized variant for comparison only (it does not relax to Boltzmann).
 */
typedef enum rovi_dissipator {
  ROVI_DISSIPATOR_DIRECT = 0,
  ROVI_DISSIPATOR_GEOMETRIC_MEAN = 1
} rovi_dissipator;

typedef struct rovi_basis rovi_basis;
typedef struct rovi_channel_set rovi_channel_set;
typedef struct rovi_rate_matrix rovi_rate_matrix;
typedef struct rovi_line_list rovi_line_list;
typedef struct rovi_observations rovi_observations;
typedef struct rovi_fit_result rovi_fit_result;

const char* rovi_version(void);

/* Thread-local message for the most recent failing call on this thread. */
const char* rovi_last_error(void);

typedef struct rovi_constants_info {
  double k_boltzmann_cm1_per_k;
  double speed_of_light_cm_per_s;
  double two_pi_c;                  /* rate[1/s] = two_pi_c * theta[cm^-1] */
  double loschmidt_cm3_atm;
  double reference_temperature_k;
  double absorption_prefactor_d2_cm2;
} rovi_constants_info;

void rovi_constants(rovi_constants_info* out);

/* ---------------- level basis ---------------- */

typedef struct rovi_ladder_spec {
  const char* vib;      /* vibrational-eigenstate tag */
  double b_cm1;         /* rotational constant */
  double d_cm1;         /* centrifugal distortion, >= 0 */
  double origin_cm1;    /* vibrational origin */
  int j_max;
} rovi_ladder_spec;

/* E(J) = origin + B J(J+1) - D [J(J+1)]^2 per ladder, J = 0..j_max. */
rovi_status rovi_basis_create_rigid(const rovi_ladder_spec* ladders, int n_ladders,
                                    rovi_basis** out);

/* Level table `vib,J,energy_cm1` ('#' comments). */
rovi_status rovi_basis_load(const char* path, rovi_basis** out);

void rovi_basis_free(rovi_basis* basis);

rovi_status rovi_basis_size(const rovi_basis* basis, int* out);

typedef struct rovi_level_info {
  const char* vib;      /* owned by the basis handle */
  int j;
  double energy_cm1;
  rovi_parity parity;
} rovi_level_info;

rovi_status rovi_basis_level(const rovi_basis* basis, int index, rovi_level_info* out);

/* Sets *out to the level index, or -1 when (vib, J) is absent. */
rovi_status rovi_basis_index_of(const rovi_basis* basis, const char* vib, int j, int* out);

/* out must hold rovi_basis_size doubles. */
rovi_status rovi_boltzmann_populations(const rovi_basis* basis, double temperature_k,
                                       rovi_normalization normalization, double* out);

/* ---------------- gap laws and channels ---------------- */

/* k(high<-low) = K0 exp(-eta dE / kB T), dE = e_high - e_low >= 0. */
rovi_status rovi_egl_rate(double k0, double eta, double e_low_cm1, double e_high_cm1,
                          double temperature_k, double* out);

/* k(high<-low) = K0 (dE/kB T)^-beta exp(-eta dE / kB T); dE = 0 is an error. */
rovi_status rovi_epgl_rate(double k0, double eta, double beta, double e_low_cm1,
                           double e_high_cm1, double temperature_k, double* out);

/* k(low<-high) = (2J_low+1)/(2J_high+1) exp(dE / kB T) k_up. */
rovi_status rovi_downward_rate(double k_up, int j_low, int j_high, double e_low_cm1,
                               double e_high_cm1, double temperature_k, double* out);

typedef struct rovi_channel_def {
  const char* name;       /* "R1".."R4" or a free tag */
  const char* from_vib;
  const char* to_vib;
  double weight;          /* in [0,1]; per source vib the weights sum to 1,
                             or all equal 1 (measured-constants mode) */
  rovi_law law;
  double k0;              /* cm^-1 atm^-1 */
  double eta;
  double beta;            /* used when law == ROVI_LAW_EPGL */
  int has_dj2_override;   /* nonzero: separate parameters at |dJ| == 2 */
  double k0_dj2;
  double eta_dj2;
  double beta_dj2;
} rovi_channel_def;

rovi_status rovi_channels_create(const rovi_channel_def* channels, int n_channels,
                                 rovi_channel_set** out);

/* Sectioned key-value file, one [channel NAME] per channel. */
rovi_status rovi_channels_load(const char* path, rovi_channel_set** out);

void rovi_channels_free(rovi_channel_set* channels);

rovi_status rovi_channels_size(const rovi_channel_set* channels, int* out);

/* ---------------- rate matrices ---------------- */

/* theta(i, j) = P * weight * k(i<-j): upward rates from the channel gap law,
 * downward from detailed balance; |dJ|-odd pairs stay zero. Units cm^-1. */
rovi_status rovi_rate_matrix_build(const rovi_basis* basis,
                                   const rovi_channel_set* channels, double temperature_k,
                                   double pressure_atm, rovi_rate_matrix** out);

/* Same construction without pressure scaling (entries in cm^-1 atm^-1);
 * required by rovi_full_fano_broadening but not usable for propagation. */
rovi_status rovi_rate_matrix_build_per_atm(const rovi_basis* basis,
                                           const rovi_channel_set* channels,
                                           double temperature_k, rovi_rate_matrix** out);

void rovi_rate_matrix_free(rovi_rate_matrix* theta);

rovi_status rovi_rate_matrix_dim(const rovi_rate_matrix* theta, int* out);

rovi_status rovi_rate_matrix_get(const rovi_rate_matrix* theta, int i, int j, double* out);

/* Row-major n*n copy. */
rovi_status rovi_rate_matrix_data(const rovi_rate_matrix* theta, double* out);

/* Newline-joined warnings, or an empty string; owned by the handle. */
rovi_status rovi_rate_matrix_warnings(const rovi_rate_matrix* theta, const char** out);

/* ---------------- population dynamics ---------------- */

/* d populations / dt in 1/s; sums to zero. */
rovi_status rovi_population_rhs(const rovi_rate_matrix* theta, const double* populations,
                                rovi_dissipator form, double* out);

/* Coherence decay rate of rho_nm in 1/s (n != m). */
rovi_status rovi_coherence_decay_rate(const rovi_rate_matrix* theta, int n, int m,
                                      rovi_dissipator form, double* out);

/* Exact field-free propagation: out holds n_times * n populations, row-major
 * (one row per grid time). t_grid_s must be strictly increasing from 0. */
rovi_status rovi_propagate_populations(const rovi_rate_matrix* theta, const double* p0,
                                       const double* t_grid_s, int n_times,
                                       rovi_dissipator form, double* out);

/* ---------------- lines and spectra ---------------- */

/* Line table `lower_vib,lower_J,upper_vib,upper_J,nu0_cm1,dipole_D`. */
rovi_status rovi_lines_load(const char* path, const rovi_basis* basis,
                            rovi_line_list** out);

void rovi_lines_free(rovi_line_list* lines);

rovi_status rovi_lines_size(const rovi_line_list* lines, int* out);

typedef struct rovi_line_info {
  int lower;            /* basis index */
  int upper;
  double nu0_cm1;
  double dipole_d;
  char branch;          /* 'P', 'Q' or 'R' */
  int m_abs;
} rovi_line_info;

rovi_status rovi_lines_get(const rovi_line_list* lines, int index, rovi_line_info* out);

/* Per-line broadening coefficient (cm^-1 atm^-1) from the upper level's
 * transfer channels: gamma = sum_c w_c sum_f' k_c(f' <- f). */
rovi_status rovi_line_broadening(const rovi_line_list* lines,
                                 const rovi_channel_set* channels,
                                 double temperature_k, double* gamma_out);

/* gamma(m) for upper levels J = m_min..m_max of upper_vib; out holds
 * m_max - m_min + 1 values. */
rovi_status rovi_broadening_curve(const rovi_basis* basis,
                                  const rovi_channel_set* channels, const char* upper_vib,
                                  int m_min, int m_max, double temperature_k, double* out);

/* Half-sum broadening: gamma = 1/2 (lower-level outflow from ground_rates +
 * upper-level channel sums). ground_rates must be per-pressure (see
 * rovi_rate_matrix_build_per_atm) over a basis that holds the lines' lower
 * levels. */
rovi_status rovi_full_fano_broadening(const rovi_line_list* lines,
                                      const rovi_rate_matrix* ground_rates,
                                      const rovi_channel_set* excited_channels,
                                      double temperature_k, double* gamma_out);

/* Absorption coefficient (cm^-1) over a strictly increasing grid. gamma and
 * shift (optional, may be NULL) are per-line diagonal relaxation data in
 * cm^-1 atm^-1; a positive shift moves a line to higher wavenumber.
 * populations holds one value per basis level (the lower-level population
 * rho_l is looked up per line). Diagonal relaxation uses the analytic
 * Lorentzian sum; force_resolvent != 0 switches to the resolvent path. */
rovi_status rovi_spectrum(const rovi_line_list* lines, const double* gamma,
                          const double* shift, const double* populations,
                          const double* nu_grid, int n_grid, double pressure_atm,
                          double temperature_k, double partition_sum, int force_resolvent,
                          double* alpha_out);

/* As rovi_spectrum, with a dense complex relaxation matrix (row-major n*n
 * real and imaginary parts, n = number of lines) for ingested line-mixing
 * data. Always uses the resolvent path. */
rovi_status rovi_spectrum_dense(const rovi_line_list* lines, const double* w_re,
                                const double* w_im, const double* populations,
                                const double* nu_grid, int n_grid, double pressure_atm,
                                double temperature_k, double partition_sum,
                                double* alpha_out);

/* ---------------- broadening observations and fits ---------------- */

/* sigma == NULL or sigma[i] <= 0 applies the 5% precision rule. tags may be
 * NULL (all untagged); a tag naming a fitted eigenstate label restricts the
 * observation to that curve. */
rovi_status rovi_observations_create(const int* m, const double* gamma,
                                     const double* sigma, const char* const* tags, int n,
                                     rovi_observations** out);

/* Text table `m,gamma_cm1_atm1,sigma[,tag]`; missing sigma -> 5% rule. */
rovi_status rovi_observations_load(const char* path, rovi_observations** out);

void rovi_observations_free(rovi_observations* observations);

rovi_status rovi_observations_size(const rovi_observations* observations, int* out);

rovi_status rovi_observations_get(const rovi_observations* observations, int index, int* m,
                                  double* gamma, double* sigma);

/* One observation per (m, tag): mean gamma, mean sigma / sqrt(n). */
rovi_status rovi_observations_average_by_m(const rovi_observations* observations,
                                           rovi_observations** out);

typedef struct rovi_fit_options {
  int tie_parameters;    /* nonzero: one shared set for all eigenstate labels */
  int weighted;          /* nonzero: 1/sigma^2 weights; zero: uniform */
  int max_iterations;
  int has_initial_guess;
  double initial_k0;
  double initial_eta;
  double initial_beta;
} rovi_fit_options;

/* Fills *out with defaults (tied, weighted, 200 iterations). */
void rovi_fit_options_default(rovi_fit_options* out);

typedef struct rovi_gap_law_fit {
  rovi_law law;
  double k0, eta, beta;
  double sigma_k0, sigma_eta, sigma_beta;
} rovi_gap_law_fit;

/* Least-squares fit of the channel-sum broadening model. The channel set
 * supplies the topology and weights; its parameter values seed nothing (use
 * options for the initial guess). On non-convergence the best state reached
 * is still returned together with ROVI_ERR_NUMERIC. */
rovi_status rovi_fit_gap_law(const rovi_observations* observations, rovi_law law,
                             const rovi_basis* basis, const rovi_channel_set* topology,
                             double temperature_k, const rovi_fit_options* options,
                             rovi_fit_result** out);

void rovi_fit_result_free(rovi_fit_result* result);

rovi_status rovi_fit_result_params(const rovi_fit_result* result, const char* vib,
                                   rovi_gap_law_fit* out);

typedef struct rovi_fit_stats {
  double rms_cm1_atm1;
  double initial_rms_cm1_atm1;
  double chi2;
  double chi2_reduced;
  int iterations;
  int converged;
  int boundary_warning;
  int n_residuals;
} rovi_fit_stats;

rovi_status rovi_fit_result_stats(const rovi_fit_result* result, rovi_fit_stats* out);

/* JSON document with parameters, uncertainties, rms and the residual table;
 * owned by the handle. */
rovi_status rovi_fit_result_json(const rovi_fit_result* result, const char** out);

/* Model curve gamma(m) for the fitted parameters of upper_vib over
 * m = m_min..m_max, using the topology's channels and weights. */
rovi_status rovi_fit_result_curve(const rovi_fit_result* result, const rovi_basis* basis,
                                  const rovi_channel_set* topology, const char* upper_vib,
                                  int m_min, int m_max, double temperature_k, double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ROVIKIT_H */
