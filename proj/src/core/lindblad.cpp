#include "core/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <unsupported/Eigen/MatrixFunctions>

#include "core/constants.hpp"
#include "core/error.hpp"

namespace rovi {

namespace {

using Eigen::Index;

Eigen::MatrixXd effective_theta(const RateMatrix& theta, DissipatorForm form) {
  if (form == DissipatorForm::DirectExpansion) return theta.theta;
  return theta.theta.cwiseProduct(theta.theta.transpose()).cwiseSqrt();
}

void require_scaled(const RateMatrix& theta, const char* who) {
  if (!theta.pressure_scaled)
    throw invalid_argument_error(std::string(who) +
                                 ": rate matrix must be pressure-scaled (cm^-1)");
}

void check_grid(const std::vector<double>& t_grid_s, double t0) {
  if (t_grid_s.empty()) throw invalid_argument_error("propagate: empty time grid");
  double prev = t_grid_s.front();
  if (prev < t0 - 1e-300)
    throw invalid_argument_error("propagate: grid starts before the initial time");
  for (std::size_t i = 1; i < t_grid_s.size(); ++i) {
    if (!(t_grid_s[i] > prev))
      throw invalid_argument_error("propagate: time grid must be strictly increasing");
    prev = t_grid_s[i];
  }
}

}  // namespace

double FieldTrace::amplitude_at(double t) const {
  const Index n = times_s.size();
  if (n == 0 || t < times_s[0] || t > times_s[n - 1]) return 0.0;
  // grids are short; linear scan is fine for the sizes used here
  Index k = 0;
  while (k + 1 < n && times_s[k + 1] < t) ++k;
  if (k + 1 >= n) return amplitudes[n - 1];
  const double f = (t - times_s[k]) / (times_s[k + 1] - times_s[k]);
  return amplitudes[k] + f * (amplitudes[k + 1] - amplitudes[k]);
}

Eigen::MatrixXd population_generator(const RateMatrix& theta, DissipatorForm form) {
  require_scaled(theta, "population_generator");
  const Eigen::MatrixXd th = effective_theta(theta, form);
  Eigen::MatrixXd g = constants::two_pi_c * th;
  g.diagonal().setZero();
  const Eigen::VectorXd outflow = g.colwise().sum();
  g.diagonal() = -outflow;
  return g;
}

Eigen::VectorXd population_rhs(const RateMatrix& theta, const Eigen::VectorXd& populations,
                               DissipatorForm form) {
  require_scaled(theta, "population_rhs");
  if (populations.size() != theta.theta.rows())
    throw invalid_argument_error("population_rhs: dimension mismatch");
  const Eigen::MatrixXd th = effective_theta(theta, form);
  Eigen::VectorXd gain = constants::two_pi_c * (th * populations);
  // remove the diagonal contribution and subtract the outflow
  for (Index i = 0; i < populations.size(); ++i)
    gain[i] -= constants::two_pi_c * th(i, i) * populations[i];
  Eigen::VectorXd loss(populations.size());
  for (Index i = 0; i < populations.size(); ++i) {
    double s = 0.0;
    for (Index j = 0; j < populations.size(); ++j)
      if (j != i) s += th(j, i);
    loss[i] = constants::two_pi_c * s * populations[i];
  }
  return gain - loss;
}

double coherence_decay_rate(const RateMatrix& theta, int n, int m, DissipatorForm form) {
  require_scaled(theta, "coherence_decay_rate");
  const Index dim = theta.theta.rows();
  if (n < 0 || m < 0 || n >= dim || m >= dim)
    throw invalid_argument_error("coherence_decay_rate: index out of range");
  if (n == m)
    throw invalid_argument_error("coherence_decay_rate: n and m must differ");
  const Eigen::MatrixXd th = effective_theta(theta, form);
  double s = 0.0;
  for (Index j = 0; j < dim; ++j) s += th(j, m) + th(j, n);
  return 0.5 * constants::two_pi_c * s;
}

std::vector<DensityState> propagate_populations(const DensityState& state0,
                                                const RateMatrix& theta,
                                                const std::vector<double>& t_grid_s,
                                                const PropagateOptions& opts) {
  require_scaled(theta, "propagate_populations");
  if (state0.populations.size() != theta.theta.rows())
    throw invalid_argument_error("propagate_populations: dimension mismatch");
  check_grid(t_grid_s, state0.time_s);

  const Eigen::MatrixXd g = population_generator(theta, opts.form);

  std::vector<DensityState> out;
  out.reserve(t_grid_s.size());

  // exact per-step propagators, cached by step length (uniform grids reuse one)
  std::map<double, Eigen::MatrixXd> step_cache;
  Eigen::VectorXd p = state0.populations;
  double t = state0.time_s;
  for (double tk : t_grid_s) {
    const double dt = tk - t;
    if (dt > 0.0) {
      auto it = step_cache.find(dt);
      if (it == step_cache.end()) {
        Eigen::MatrixXd e = (g * dt).exp();
        it = step_cache.emplace(dt, std::move(e)).first;
      }
      p = it->second * p;
      t = tk;
    }
    const double floor = p.minCoeff();
    if (floor < -1e-9)
      throw numeric_error("propagate_populations: population " + std::to_string(floor) +
                          " below -1e-9 at t = " + std::to_string(tk) + " s");
    DensityState s;
    s.populations = p;
    s.time_s = tk;
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

// Dormand-Prince 5(4) over complex density matrices.
struct Rk45 {
  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                          a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                          a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                          a65 = -5103.0 / 18656.0;
  static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                          b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                          e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
};

}  // namespace

std::vector<DensityState> propagate_density(const DensityState& state0,
                                            const RateMatrix& theta,
                                            const Eigen::VectorXd& level_energies_cm1,
                                            const std::optional<FieldTrace>& field,
                                            const std::vector<double>& t_grid_s,
                                            const PropagateOptions& opts) {
  require_scaled(theta, "propagate_density");
  const Index n = theta.theta.rows();
  if (state0.populations.size() != n || level_energies_cm1.size() != n)
    throw invalid_argument_error("propagate_density: dimension mismatch");
  if (field && (field->dipole_cm1.rows() != n || field->dipole_cm1.cols() != n))
    throw invalid_argument_error("propagate_density: dipole matrix dimension mismatch");
  if (field) {
    for (Index k = 1; k < field->times_s.size(); ++k)
      if (!(field->times_s[k] > field->times_s[k - 1]))
        throw invalid_argument_error("propagate_density: field time grid must increase");
  }
  check_grid(t_grid_s, state0.time_s);
  if (state0.coherences &&
      (state0.coherences->rows() != n || state0.coherences->cols() != n))
    throw invalid_argument_error("propagate_density: coherence matrix dimension mismatch");

  const Eigen::MatrixXd th = effective_theta(theta, opts.form);
  const Eigen::VectorXd outflow = [&] {
    Eigen::VectorXd o(n);
    for (Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (Index j = 0; j < n; ++j)
        if (j != i) s += th(j, i);
      o[i] = s;
    }
    return o;
  }();

  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
  rho.diagonal() = state0.populations.cast<std::complex<double>>();
  if (state0.coherences) {
    const Eigen::MatrixXcd& c = *state0.coherences;
    if ((c - c.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
      throw invalid_argument_error("propagate_density: coherence matrix not Hermitian");
    rho += c - Eigen::MatrixXcd(c.diagonal().asDiagonal());
  }

  const std::complex<double> im(0.0, 1.0);
  const auto rhs = [&](double t, const Eigen::MatrixXcd& r) -> Eigen::MatrixXcd {
    Eigen::MatrixXcd d(n, n);
    // dissipator
    for (Index a = 0; a < n; ++a) {
      double gain = 0.0;
      for (Index k = 0; k < n; ++k)
        if (k != a) gain += th(a, k) * r(k, k).real();
      d(a, a) = constants::two_pi_c * (gain - outflow[a] * r(a, a).real());
      for (Index b = 0; b < n; ++b) {
        if (a == b) continue;
        d(a, b) = -0.5 * constants::two_pi_c * (outflow[a] + outflow[b]) * r(a, b);
      }
    }
    // Hamiltonian commutator (rad/s); H = two_pi_c (diag(E) - mu eps(t))
    Eigen::MatrixXcd h =
        (constants::two_pi_c * level_energies_cm1).cast<std::complex<double>>().asDiagonal();
    if (field) {
      const double eps = field->amplitude_at(t);
      if (eps != 0.0)
        h -= (constants::two_pi_c * eps) * field->dipole_cm1.cast<std::complex<double>>();
    }
    d -= im * (h * r - r * h);
    return d;
  };

  std::vector<DensityState> out;
  out.reserve(t_grid_s.size());

  double t = state0.time_s;
  const double t_end = t_grid_s.back();
  double h_step = std::max((t_end - t) * 1e-4, 1e-18);
  long steps = 0;
  std::size_t next = 0;

  const auto emit = [&](double t_point, const Eigen::MatrixXcd& r) {
    DensityState s;
    s.time_s = t_point;
    s.populations = r.diagonal().real();
    Eigen::MatrixXcd c = r;
    c.diagonal().setZero();
    s.coherences = std::move(c);
    out.push_back(std::move(s));
    ++next;
  };

  if (t_grid_s[0] == t) emit(t, rho);
  Eigen::MatrixXcd k1 = rhs(t, rho);
  while (next < t_grid_s.size()) {
    if (++steps > opts.max_steps)
      throw numeric_error("propagate_density: step budget exhausted at t = " +
                          std::to_string(t) + " s (last good time)");
    // do not step past the next output point
    bool lands_on_grid = false;
    double h = h_step;
    if (t + h >= t_grid_s[next]) {
      h = t_grid_s[next] - t;
      lands_on_grid = true;
    }
    const Eigen::MatrixXcd k2 = rhs(t + Rk45::a21 * h, rho + h * (Rk45::a21 * k1));
    const Eigen::MatrixXcd k3 =
        rhs(t + 0.3 * h, rho + h * (Rk45::a31 * k1 + Rk45::a32 * k2));
    const Eigen::MatrixXcd k4 =
        rhs(t + 0.8 * h, rho + h * (Rk45::a41 * k1 + Rk45::a42 * k2 + Rk45::a43 * k3));
    const Eigen::MatrixXcd k5 = rhs(
        t + 8.0 / 9.0 * h,
        rho + h * (Rk45::a51 * k1 + Rk45::a52 * k2 + Rk45::a53 * k3 + Rk45::a54 * k4));
    const Eigen::MatrixXcd k6 =
        rhs(t + h, rho + h * (Rk45::a61 * k1 + Rk45::a62 * k2 + Rk45::a63 * k3 +
                              Rk45::a64 * k4 + Rk45::a65 * k5));
    const Eigen::MatrixXcd y5 = rho + h * (Rk45::b1 * k1 + Rk45::b3 * k3 + Rk45::b4 * k4 +
                                           Rk45::b5 * k5 + Rk45::b6 * k6);
    const Eigen::MatrixXcd k7 = rhs(t + h, y5);
    const Eigen::MatrixXcd err_m = h * (Rk45::e1 * k1 + Rk45::e3 * k3 + Rk45::e4 * k4 +
                                        Rk45::e5 * k5 + Rk45::e6 * k6 + Rk45::e7 * k7);

    const double scale =
        opts.atol + opts.rtol * std::max(rho.cwiseAbs().maxCoeff(), y5.cwiseAbs().maxCoeff());
    const double err = err_m.cwiseAbs().maxCoeff() / scale;

    if (err <= 1.0) {
      t = lands_on_grid ? t_grid_s[next] : t + h;
      rho = y5;
      k1 = k7;  // FSAL
      const double floor = rho.diagonal().real().minCoeff();
      if (floor < -1e-9)
        throw numeric_error("propagate_density: population " + std::to_string(floor) +
                            " below -1e-9 at t = " + std::to_string(t) + " s");
      if (lands_on_grid) emit(t, rho);
    }
    const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    h_step = h * std::clamp(grow, 0.2, 5.0);
    if (!(h_step > 0.0) || !std::isfinite(h_step))
      throw numeric_error("propagate_density: step size underflow at t = " +
                          std::to_string(t) + " s (last good time)");
  }
  return out;
}

std::vector<DensityState> propagate(const DensityState& state0, const RateMatrix& theta,
                                    const Eigen::VectorXd& level_energies_cm1,
                                    const std::optional<FieldTrace>& field,
                                    const std::vector<double>& t_grid_s,
                                    const PropagateOptions& opts) {
  if (!state0.coherences && !field)
    return propagate_populations(state0, theta, t_grid_s, opts);
  return propagate_density(state0, theta, level_energies_cm1, field, t_grid_s, opts);
}

}  // namespace rovi
