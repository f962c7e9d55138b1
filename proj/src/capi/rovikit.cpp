#include "rovikit.h"

#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "core/constants.hpp"
#include "core/error.hpp"
#include "core/fitting.hpp"
#include "core/gaplaws.hpp"
#include "core/io.hpp"
#include "core/levels.hpp"
#include "core/lindblad.hpp"
#include "core/lineshape.hpp"

namespace {

thread_local std::string g_last_error;

rovi_status to_status(rovi::Error::Code code) {
  switch (code) {
    case rovi::Error::Code::InvalidArgument: return ROVI_ERR_INVALID_ARGUMENT;
    case rovi::Error::Code::Config: return ROVI_ERR_CONFIG;
    case rovi::Error::Code::Numeric: return ROVI_ERR_NUMERIC;
    case rovi::Error::Code::Io: return ROVI_ERR_IO;
  }
  return ROVI_ERR_NUMERIC;
}

template <typename Fn>
rovi_status guarded(Fn&& fn) {
  try {
    fn();
    return ROVI_OK;
  } catch (const rovi::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ROVI_ERR_NUMERIC;
  }
}

rovi_status fail_null(const char* what) {
  g_last_error = std::string(what) + ": null argument";
  return ROVI_ERR_INVALID_ARGUMENT;
}

rovi::DissipatorForm to_form(rovi_dissipator f) {
  return f == ROVI_DISSIPATOR_GEOMETRIC_MEAN ? rovi::DissipatorForm::GeometricMean
                                             : rovi::DissipatorForm::DirectExpansion;
}

rovi::GapLawKind to_kind(rovi_law law) {
  return law == ROVI_LAW_EPGL ? rovi::GapLawKind::Epgl : rovi::GapLawKind::Egl;
}

}  // namespace

struct rovi_basis {
  std::shared_ptr<const rovi::LevelBasis> impl;
};

struct rovi_channel_set {
  std::shared_ptr<const rovi::ChannelSet> impl;
};

struct rovi_rate_matrix {
  rovi::RateMatrix impl;
  std::string warnings_joined;
};

struct rovi_line_list {
  rovi::LineList impl;
};

struct rovi_observations {
  std::vector<rovi::BroadeningObservation> impl;
};

struct rovi_fit_result {
  rovi::FitResult impl;
  std::string json;
};

extern "C" {

const char* rovi_version(void) { return rovi::constants::version; }

const char* rovi_last_error(void) { return g_last_error.c_str(); }

void rovi_constants(rovi_constants_info* out) {
  if (!out) return;
  out->k_boltzmann_cm1_per_k = rovi::constants::k_boltzmann_cm1_per_k;
  out->speed_of_light_cm_per_s = rovi::constants::speed_of_light_cm_per_s;
  out->two_pi_c = rovi::constants::two_pi_c;
  out->loschmidt_cm3_atm = rovi::constants::loschmidt_cm3_atm;
  out->reference_temperature_k = rovi::constants::reference_temperature_k;
  out->absorption_prefactor_d2_cm2 = rovi::constants::absorption_prefactor_d2_cm2;
}

rovi_status rovi_basis_create_rigid(const rovi_ladder_spec* ladders, int n_ladders,
                                    rovi_basis** out) {
  if (!ladders || !out || n_ladders <= 0) return fail_null("rovi_basis_create_rigid");
  return guarded([&] {
    std::vector<rovi::RoviLevel> levels;
    for (int i = 0; i < n_ladders; ++i) {
      const rovi_ladder_spec& s = ladders[i];
      if (!s.vib) throw rovi::invalid_argument_error("ladder vib label is null");
      auto part = rovi::build_rigid_rotor_ladder(s.b_cm1, s.d_cm1, s.origin_cm1, s.vib,
                                                 s.j_max);
      levels.insert(levels.end(), part.begin(), part.end());
    }
    *out = new rovi_basis{std::make_shared<rovi::LevelBasis>(std::move(levels))};
  });
}

rovi_status rovi_basis_load(const char* path, rovi_basis** out) {
  if (!path || !out) return fail_null("rovi_basis_load");
  return guarded([&] {
    auto levels = rovi::read_level_table(path);
    *out = new rovi_basis{std::make_shared<rovi::LevelBasis>(std::move(levels))};
  });
}

void rovi_basis_free(rovi_basis* basis) { delete basis; }

rovi_status rovi_basis_size(const rovi_basis* basis, int* out) {
  if (!basis || !out) return fail_null("rovi_basis_size");
  *out = static_cast<int>(basis->impl->size());
  return ROVI_OK;
}

rovi_status rovi_basis_level(const rovi_basis* basis, int index, rovi_level_info* out) {
  if (!basis || !out) return fail_null("rovi_basis_level");
  return guarded([&] {
    if (index < 0 || index >= static_cast<int>(basis->impl->size()))
      throw rovi::invalid_argument_error("rovi_basis_level: index out of range");
    const rovi::RoviLevel& lv = basis->impl->level(static_cast<std::size_t>(index));
    out->vib = lv.vib.c_str();
    out->j = lv.j;
    out->energy_cm1 = lv.energy_cm1;
    out->parity = lv.parity == rovi::Parity::Ortho ? ROVI_PARITY_ORTHO : ROVI_PARITY_PARA;
  });
}

rovi_status rovi_basis_index_of(const rovi_basis* basis, const char* vib, int j, int* out) {
  if (!basis || !vib || !out) return fail_null("rovi_basis_index_of");
  *out = basis->impl->index_of(vib, j);
  return ROVI_OK;
}

rovi_status rovi_boltzmann_populations(const rovi_basis* basis, double temperature_k,
                                       rovi_normalization normalization, double* out) {
  if (!basis || !out) return fail_null("rovi_boltzmann_populations");
  return guarded([&] {
    rovi::Normalization norm = rovi::Normalization::PerParityClass;
    if (normalization == ROVI_NORM_GLOBAL) norm = rovi::Normalization::Global;
    if (normalization == ROVI_NORM_SPIN_WEIGHTED_CLASSES)
      norm = rovi::Normalization::SpinWeightedClasses;
    const auto pop = rovi::boltzmann_populations(*basis->impl, temperature_k, norm);
    std::memcpy(out, pop.values.data(), sizeof(double) * pop.values.size());
  });
}

rovi_status rovi_egl_rate(double k0, double eta, double e_low_cm1, double e_high_cm1,
                          double temperature_k, double* out) {
  if (!out) return fail_null("rovi_egl_rate");
  return guarded([&] {
    rovi::GapLawParams p;
    p.kind = rovi::GapLawKind::Egl;
    p.k0 = k0;
    p.eta = eta;
    *out = rovi::egl_rate(p, e_low_cm1, e_high_cm1, temperature_k);
  });
}

rovi_status rovi_epgl_rate(double k0, double eta, double beta, double e_low_cm1,
                           double e_high_cm1, double temperature_k, double* out) {
  if (!out) return fail_null("rovi_epgl_rate");
  return guarded([&] {
    rovi::GapLawParams p;
    p.kind = rovi::GapLawKind::Epgl;
    p.k0 = k0;
    p.eta = eta;
    p.beta = beta;
    *out = rovi::epgl_rate(p, e_low_cm1, e_high_cm1, temperature_k);
  });
}

rovi_status rovi_downward_rate(double k_up, int j_low, int j_high, double e_low_cm1,
                               double e_high_cm1, double temperature_k, double* out) {
  if (!out) return fail_null("rovi_downward_rate");
  return guarded([&] {
    *out = rovi::downward_rate(k_up, j_low, j_high, e_low_cm1, e_high_cm1, temperature_k);
  });
}

namespace {

rovi::ChannelSpec to_channel(const rovi_channel_def& d) {
  rovi::ChannelSpec c;
  if (!d.name || !d.from_vib || !d.to_vib)
    throw rovi::invalid_argument_error("channel definition has a null string");
  c.name = d.name;
  c.from_vib = d.from_vib;
  c.to_vib = d.to_vib;
  c.weight = d.weight;
  c.params.kind = to_kind(d.law);
  c.params.k0 = d.k0;
  c.params.eta = d.eta;
  c.params.beta = d.beta;
  if (d.has_dj2_override) {
    rovi::GapLawParams p2 = c.params;
    p2.k0 = d.k0_dj2;
    p2.eta = d.eta_dj2;
    p2.beta = d.beta_dj2;
    c.params_dj2 = p2;
  }
  return c;
}

}  // namespace

rovi_status rovi_channels_create(const rovi_channel_def* channels, int n_channels,
                                 rovi_channel_set** out) {
  if (!channels || !out || n_channels <= 0) return fail_null("rovi_channels_create");
  return guarded([&] {
    std::vector<rovi::ChannelSpec> specs;
    specs.reserve(static_cast<std::size_t>(n_channels));
    for (int i = 0; i < n_channels; ++i) specs.push_back(to_channel(channels[i]));
    *out = new rovi_channel_set{std::make_shared<rovi::ChannelSet>(std::move(specs))};
  });
}

rovi_status rovi_channels_load(const char* path, rovi_channel_set** out) {
  if (!path || !out) return fail_null("rovi_channels_load");
  return guarded([&] {
    *out = new rovi_channel_set{
        std::make_shared<rovi::ChannelSet>(rovi::read_channel_config(path))};
  });
}

void rovi_channels_free(rovi_channel_set* channels) { delete channels; }

rovi_status rovi_channels_size(const rovi_channel_set* channels, int* out) {
  if (!channels || !out) return fail_null("rovi_channels_size");
  *out = static_cast<int>(channels->impl->size());
  return ROVI_OK;
}

rovi_status rovi_rate_matrix_build(const rovi_basis* basis,
                                   const rovi_channel_set* channels, double temperature_k,
                                   double pressure_atm, rovi_rate_matrix** out) {
  if (!basis || !channels || !out) return fail_null("rovi_rate_matrix_build");
  return guarded([&] {
    auto* rm = new rovi_rate_matrix;
    try {
      rm->impl = rovi::build_rate_matrix(basis->impl, *channels->impl, temperature_k,
                                         pressure_atm);
    } catch (...) {
      delete rm;
      throw;
    }
    for (const auto& w : rm->impl.warnings) {
      if (!rm->warnings_joined.empty()) rm->warnings_joined += '\n';
      rm->warnings_joined += w;
    }
    *out = rm;
  });
}

rovi_status rovi_rate_matrix_build_per_atm(const rovi_basis* basis,
                                           const rovi_channel_set* channels,
                                           double temperature_k, rovi_rate_matrix** out) {
  if (!basis || !channels || !out) return fail_null("rovi_rate_matrix_build_per_atm");
  return guarded([&] {
    auto* rm = new rovi_rate_matrix;
    try {
      rm->impl = rovi::build_rate_matrix_per_atm(basis->impl, *channels->impl, temperature_k);
    } catch (...) {
      delete rm;
      throw;
    }
    *out = rm;
  });
}

void rovi_rate_matrix_free(rovi_rate_matrix* theta) { delete theta; }

rovi_status rovi_rate_matrix_dim(const rovi_rate_matrix* theta, int* out) {
  if (!theta || !out) return fail_null("rovi_rate_matrix_dim");
  *out = static_cast<int>(theta->impl.theta.rows());
  return ROVI_OK;
}

rovi_status rovi_rate_matrix_get(const rovi_rate_matrix* theta, int i, int j, double* out) {
  if (!theta || !out) return fail_null("rovi_rate_matrix_get");
  return guarded([&] {
    const auto n = theta->impl.theta.rows();
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw rovi::invalid_argument_error("rovi_rate_matrix_get: index out of range");
    *out = theta->impl.theta(i, j);
  });
}

rovi_status rovi_rate_matrix_data(const rovi_rate_matrix* theta, double* out) {
  if (!theta || !out) return fail_null("rovi_rate_matrix_data");
  const auto& m = theta->impl.theta;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i * m.cols() + j] = m(i, j);
  return ROVI_OK;
}

rovi_status rovi_rate_matrix_warnings(const rovi_rate_matrix* theta, const char** out) {
  if (!theta || !out) return fail_null("rovi_rate_matrix_warnings");
  *out = theta->warnings_joined.c_str();
  return ROVI_OK;
}

rovi_status rovi_population_rhs(const rovi_rate_matrix* theta, const double* populations,
                                rovi_dissipator form, double* out) {
  if (!theta || !populations || !out) return fail_null("rovi_population_rhs");
  return guarded([&] {
    const auto n = theta->impl.theta.rows();
    Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(populations, n);
    const Eigen::VectorXd d = rovi::population_rhs(theta->impl, p, to_form(form));
    std::memcpy(out, d.data(), sizeof(double) * static_cast<std::size_t>(n));
  });
}

rovi_status rovi_coherence_decay_rate(const rovi_rate_matrix* theta, int n, int m,
                                      rovi_dissipator form, double* out) {
  if (!theta || !out) return fail_null("rovi_coherence_decay_rate");
  return guarded([&] { *out = rovi::coherence_decay_rate(theta->impl, n, m, to_form(form)); });
}

rovi_status rovi_propagate_populations(const rovi_rate_matrix* theta, const double* p0,
                                       const double* t_grid_s, int n_times,
                                       rovi_dissipator form, double* out) {
  if (!theta || !p0 || !t_grid_s || !out || n_times <= 0)
    return fail_null("rovi_propagate_populations");
  return guarded([&] {
    const auto n = theta->impl.theta.rows();
    rovi::DensityState s0;
    s0.populations = Eigen::Map<const Eigen::VectorXd>(p0, n);
    s0.time_s = 0.0;
    std::vector<double> grid(t_grid_s, t_grid_s + n_times);
    rovi::PropagateOptions opts;
    opts.form = to_form(form);
    const auto traj = rovi::propagate_populations(s0, theta->impl, grid, opts);
    for (std::size_t k = 0; k < traj.size(); ++k)
      std::memcpy(out + k * static_cast<std::size_t>(n), traj[k].populations.data(),
                  sizeof(double) * static_cast<std::size_t>(n));
  });
}

rovi_status rovi_lines_load(const char* path, const rovi_basis* basis,
                            rovi_line_list** out) {
  if (!path || !basis || !out) return fail_null("rovi_lines_load");
  return guarded([&] {
    *out = new rovi_line_list{rovi::read_line_list(path, basis->impl)};
  });
}

void rovi_lines_free(rovi_line_list* lines) { delete lines; }

rovi_status rovi_lines_size(const rovi_line_list* lines, int* out) {
  if (!lines || !out) return fail_null("rovi_lines_size");
  *out = static_cast<int>(lines->impl.lines.size());
  return ROVI_OK;
}

rovi_status rovi_lines_get(const rovi_line_list* lines, int index, rovi_line_info* out) {
  if (!lines || !out) return fail_null("rovi_lines_get");
  return guarded([&] {
    if (index < 0 || index >= static_cast<int>(lines->impl.lines.size()))
      throw rovi::invalid_argument_error("rovi_lines_get: index out of range");
    const rovi::SpectralLine& ln = lines->impl.lines[static_cast<std::size_t>(index)];
    out->lower = ln.lower;
    out->upper = ln.upper;
    out->nu0_cm1 = ln.nu0_cm1;
    out->dipole_d = ln.dipole_d;
    out->branch = ln.branch == rovi::Branch::P ? 'P' : (ln.branch == rovi::Branch::Q ? 'Q' : 'R');
    out->m_abs = ln.m_abs;
  });
}

rovi_status rovi_line_broadening(const rovi_line_list* lines,
                                 const rovi_channel_set* channels, double temperature_k,
                                 double* gamma_out) {
  if (!lines || !channels || !gamma_out) return fail_null("rovi_line_broadening");
  return guarded([&] {
    for (std::size_t i = 0; i < lines->impl.lines.size(); ++i)
      gamma_out[i] = rovi::broadening_from_rates(lines->impl.lines[i], *channels->impl,
                                                 *lines->impl.basis, temperature_k);
  });
}

rovi_status rovi_broadening_curve(const rovi_basis* basis,
                                  const rovi_channel_set* channels, const char* upper_vib,
                                  int m_min, int m_max, double temperature_k, double* out) {
  if (!basis || !channels || !upper_vib || !out) return fail_null("rovi_broadening_curve");
  return guarded([&] {
    if (m_min < 0 || m_max < m_min)
      throw rovi::invalid_argument_error("rovi_broadening_curve: bad m range");
    const auto outgoing = channels->impl->outgoing(upper_vib);
    if (outgoing.empty())
      throw rovi::config_error(std::string("rovi_broadening_curve: no channels for '") +
                               upper_vib + "'");
    for (int m = m_min; m <= m_max; ++m) {
      double gamma = 0.0;
      for (const rovi::ChannelSpec* c : outgoing)
        gamma += c->weight * rovi::channel_outflow_sum(*c, *basis->impl, m, temperature_k);
      out[m - m_min] = gamma;
    }
  });
}

rovi_status rovi_full_fano_broadening(const rovi_line_list* lines,
                                      const rovi_rate_matrix* ground_rates,
                                      const rovi_channel_set* excited_channels,
                                      double temperature_k, double* gamma_out) {
  if (!lines || !ground_rates || !excited_channels || !gamma_out)
    return fail_null("rovi_full_fano_broadening");
  return guarded([&] {
    for (std::size_t i = 0; i < lines->impl.lines.size(); ++i)
      gamma_out[i] = rovi::full_fano_broadening(lines->impl.lines[i], ground_rates->impl,
                                                *excited_channels->impl, *lines->impl.basis,
                                                temperature_k);
  });
}

namespace {

rovi::PopulationVector wrap_populations(const double* populations, std::size_t n) {
  rovi::PopulationVector pv;
  pv.values = Eigen::Map<const Eigen::VectorXd>(populations, static_cast<Eigen::Index>(n));
  return pv;
}

}  // namespace

rovi_status rovi_spectrum(const rovi_line_list* lines, const double* gamma,
                          const double* shift, const double* populations,
                          const double* nu_grid, int n_grid, double pressure_atm,
                          double temperature_k, double partition_sum, int force_resolvent,
                          double* alpha_out) {
  if (!lines || !gamma || !populations || !nu_grid || !alpha_out || n_grid <= 0)
    return fail_null("rovi_spectrum");
  return guarded([&] {
    const std::size_t nl = lines->impl.lines.size();
    std::vector<double> g(gamma, gamma + nl);
    std::optional<std::vector<double>> d;
    if (shift) d = std::vector<double>(shift, shift + nl);
    const auto w = rovi::build_diagonal_relaxation(g, d);
    const auto pv = wrap_populations(populations, lines->impl.basis->size());
    const Eigen::VectorXd grid = Eigen::Map<const Eigen::VectorXd>(nu_grid, n_grid);
    const auto spec = rovi::spectrum(lines->impl, w, pv, grid, pressure_atm, temperature_k,
                                     partition_sum, force_resolvent != 0);
    std::memcpy(alpha_out, spec.alpha_cm1.data(), sizeof(double) * static_cast<std::size_t>(n_grid));
  });
}

rovi_status rovi_spectrum_dense(const rovi_line_list* lines, const double* w_re,
                                const double* w_im, const double* populations,
                                const double* nu_grid, int n_grid, double pressure_atm,
                                double temperature_k, double partition_sum,
                                double* alpha_out) {
  if (!lines || !w_re || !w_im || !populations || !nu_grid || !alpha_out || n_grid <= 0)
    return fail_null("rovi_spectrum_dense");
  return guarded([&] {
    const auto n = static_cast<Eigen::Index>(lines->impl.lines.size());
    rovi::RelaxationMatrix w;
    w.w.resize(n, n);
    w.diagonal_only = false;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        w.w(i, j) = std::complex<double>(w_re[i * n + j], w_im[i * n + j]);
    const auto pv = wrap_populations(populations, lines->impl.basis->size());
    const Eigen::VectorXd grid = Eigen::Map<const Eigen::VectorXd>(nu_grid, n_grid);
    const auto spec = rovi::spectrum(lines->impl, w, pv, grid, pressure_atm, temperature_k,
                                     partition_sum, true);
    std::memcpy(alpha_out, spec.alpha_cm1.data(), sizeof(double) * static_cast<std::size_t>(n_grid));
  });
}

rovi_status rovi_observations_create(const int* m, const double* gamma,
                                     const double* sigma, const char* const* tags, int n,
                                     rovi_observations** out) {
  if (!m || !gamma || !out || n <= 0) return fail_null("rovi_observations_create");
  return guarded([&] {
    std::vector<rovi::BroadeningObservation> obs;
    obs.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      rovi::BroadeningObservation o;
      o.m_abs = m[i];
      o.gamma = gamma[i];
      o.sigma = (sigma && sigma[i] > 0.0) ? sigma[i] : 0.05 * gamma[i];
      if (tags && tags[i]) o.source = tags[i];
      obs.push_back(std::move(o));
    }
    *out = new rovi_observations{std::move(obs)};
  });
}

rovi_status rovi_observations_load(const char* path, rovi_observations** out) {
  if (!path || !out) return fail_null("rovi_observations_load");
  return guarded([&] { *out = new rovi_observations{rovi::read_observations(path)}; });
}

void rovi_observations_free(rovi_observations* observations) { delete observations; }

rovi_status rovi_observations_size(const rovi_observations* observations, int* out) {
  if (!observations || !out) return fail_null("rovi_observations_size");
  *out = static_cast<int>(observations->impl.size());
  return ROVI_OK;
}

rovi_status rovi_observations_get(const rovi_observations* observations, int index, int* m,
                                  double* gamma, double* sigma) {
  if (!observations) return fail_null("rovi_observations_get");
  return guarded([&] {
    if (index < 0 || index >= static_cast<int>(observations->impl.size()))
      throw rovi::invalid_argument_error("rovi_observations_get: index out of range");
    const auto& o = observations->impl[static_cast<std::size_t>(index)];
    if (m) *m = o.m_abs;
    if (gamma) *gamma = o.gamma;
    if (sigma) *sigma = o.sigma;
  });
}

rovi_status rovi_observations_average_by_m(const rovi_observations* observations,
                                           rovi_observations** out) {
  if (!observations || !out) return fail_null("rovi_observations_average_by_m");
  return guarded([&] {
    *out = new rovi_observations{rovi::average_by_m(observations->impl)};
  });
}

void rovi_fit_options_default(rovi_fit_options* out) {
  if (!out) return;
  out->tie_parameters = 1;
  out->weighted = 1;
  out->max_iterations = 200;
  out->has_initial_guess = 0;
  out->initial_k0 = 0.0;
  out->initial_eta = 0.0;
  out->initial_beta = 0.0;
}

rovi_status rovi_fit_gap_law(const rovi_observations* observations, rovi_law law,
                             const rovi_basis* basis, const rovi_channel_set* topology,
                             double temperature_k, const rovi_fit_options* options,
                             rovi_fit_result** out) {
  if (!observations || !basis || !topology || !out) return fail_null("rovi_fit_gap_law");
  rovi_fit_options defaults;
  rovi_fit_options_default(&defaults);
  const rovi_fit_options& o = options ? *options : defaults;

  rovi::FitOptions fo;
  fo.tie_parameters = o.tie_parameters != 0;
  fo.weighted = o.weighted != 0;
  fo.max_iterations = o.max_iterations;
  if (o.has_initial_guess) {
    rovi::GapLawParams g;
    g.kind = to_kind(law);
    g.k0 = o.initial_k0;
    g.eta = o.initial_eta;
    g.beta = o.initial_beta;
    fo.initial_guess = g;
  }

  try {
    auto result = rovi::fit_gap_law(observations->impl, to_kind(law), *basis->impl,
                                    *topology->impl, temperature_k, fo);
    auto* handle = new rovi_fit_result;
    handle->json = rovi::fit_result_to_json(result);
    handle->impl = std::move(result);
    *out = handle;
    return ROVI_OK;
  } catch (const rovi::FitError& e) {
    // non-convergence still yields the best state reached
    auto* handle = new rovi_fit_result;
    handle->json = rovi::fit_result_to_json(e.best_result);
    handle->impl = e.best_result;
    *out = handle;
    g_last_error = e.what();
    return ROVI_ERR_NUMERIC;
  } catch (const rovi::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ROVI_ERR_NUMERIC;
  }
}

void rovi_fit_result_free(rovi_fit_result* result) { delete result; }

rovi_status rovi_fit_result_params(const rovi_fit_result* result, const char* vib,
                                   rovi_gap_law_fit* out) {
  if (!result || !vib || !out) return fail_null("rovi_fit_result_params");
  return guarded([&] {
    const auto it = result->impl.params.find(vib);
    if (it == result->impl.params.end())
      throw rovi::invalid_argument_error(std::string("no fitted parameters for '") + vib +
                                         "'");
    const rovi::GapLawParams& p = it->second;
    out->law = p.kind == rovi::GapLawKind::Epgl ? ROVI_LAW_EPGL : ROVI_LAW_EGL;
    out->k0 = p.k0;
    out->eta = p.eta;
    out->beta = p.beta;
    out->sigma_k0 = p.sigma_k0.value_or(0.0);
    out->sigma_eta = p.sigma_eta.value_or(0.0);
    out->sigma_beta = p.sigma_beta.value_or(0.0);
  });
}

rovi_status rovi_fit_result_stats(const rovi_fit_result* result, rovi_fit_stats* out) {
  if (!result || !out) return fail_null("rovi_fit_result_stats");
  const rovi::FitResult& r = result->impl;
  out->rms_cm1_atm1 = r.rms;
  out->initial_rms_cm1_atm1 = r.initial_rms;
  out->chi2 = r.chi2;
  out->chi2_reduced = r.chi2_reduced;
  out->iterations = r.iterations;
  out->converged = r.converged ? 1 : 0;
  out->boundary_warning = r.boundary_warning ? 1 : 0;
  out->n_residuals = static_cast<int>(r.residuals.size());
  return ROVI_OK;
}

rovi_status rovi_fit_result_json(const rovi_fit_result* result, const char** out) {
  if (!result || !out) return fail_null("rovi_fit_result_json");
  *out = result->json.c_str();
  return ROVI_OK;
}

rovi_status rovi_fit_result_curve(const rovi_fit_result* result, const rovi_basis* basis,
                                  const rovi_channel_set* topology, const char* upper_vib,
                                  int m_min, int m_max, double temperature_k, double* out) {
  if (!result || !basis || !topology || !upper_vib || !out)
    return fail_null("rovi_fit_result_curve");
  return guarded([&] {
    const auto it = result->impl.params.find(upper_vib);
    if (it == result->impl.params.end())
      throw rovi::invalid_argument_error(std::string("no fitted parameters for '") +
                                         upper_vib + "'");
    std::map<std::string, rovi::GapLawParams> one{{upper_vib, it->second}};
    const auto curves = rovi::predict_broadening_curve(one, *basis->impl, *topology->impl,
                                                       temperature_k, m_min, m_max);
    const auto& curve = curves.at(upper_vib);
    std::memcpy(out, curve.data(), sizeof(double) * curve.size());
  });
}

} /* extern "C" */
