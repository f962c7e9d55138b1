#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "core/constants.hpp"
#include "core/error.hpp"
#include "core/lindblad.hpp"
#include "test_helpers.hpp"

using namespace rovi;

namespace {

RateMatrix raw_theta(const Eigen::MatrixXd& th) {
  RateMatrix rm;
  rm.theta = th;
  rm.pressure_scaled = true;
  rm.temperature_k = 296.0;
  rm.pressure_atm = 1.0;
  return rm;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
  return out;
}

}  // namespace

TEST_CASE("population_rhs") {
  SUBCASE("all-zero theta gives the zero vector") {
    const auto rm = raw_theta(Eigen::MatrixXd::Zero(4, 4));
    const Eigen::VectorXd d = population_rhs(rm, Eigen::VectorXd::Constant(4, 0.25));
    CHECK(d.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("two-level symmetric flow") {
    Eigen::MatrixXd th = Eigen::MatrixXd::Zero(2, 2);
    th(0, 1) = th(1, 0) = 0.02;  // cm^-1
    const auto rm = raw_theta(th);
    Eigen::VectorXd p(2);
    p << 1.0, 0.0;
    const Eigen::VectorXd d = population_rhs(rm, p);
    const double rate = constants::two_pi_c * 0.02;
    CHECK(d[0] == doctest::Approx(-rate).epsilon(1e-14));
    CHECK(d[1] == doctest::Approx(rate).epsilon(1e-14));
  }

  SUBCASE("Boltzmann input is stationary (detailed-balance fixed point)") {
    const auto basis = testutil::polyad_basis(30);
    const auto rm = build_rate_matrix(basis, testutil::measured_channels(), 296.0, 1.0);
    const auto eq = boltzmann_populations(*basis, 296.0, Normalization::Global);
    const Eigen::VectorXd d = population_rhs(rm, eq.values);
    const double scale = constants::two_pi_c * rm.theta.maxCoeff();
    CHECK(d.cwiseAbs().maxCoeff() / scale < 1e-12);
  }

  SUBCASE("derivative sums to zero") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 0.05);
    Eigen::MatrixXd th = Eigen::MatrixXd::Zero(7, 7).unaryExpr([&](double) { return u(rng); });
    th.diagonal().setZero();
    const auto rm = raw_theta(th);
    Eigen::VectorXd p(7);
    for (int i = 0; i < 7; ++i) p[i] = u(rng);
    const Eigen::VectorXd d = population_rhs(rm, p);
    CHECK(std::abs(d.sum()) <= 1e-13 * d.cwiseAbs().maxCoeff());
  }

  SUBCASE("dimension mismatch rejected") {
    const auto rm = raw_theta(Eigen::MatrixXd::Zero(3, 3));
    CHECK_THROWS_AS(population_rhs(rm, Eigen::VectorXd::Zero(4)), Error);
  }
}

TEST_CASE("coherence_decay_rate") {
  SUBCASE("all-zero theta") {
    const auto rm = raw_theta(Eigen::MatrixXd::Zero(3, 3));
    CHECK(coherence_decay_rate(rm, 0, 2) == 0.0);
  }
  SUBCASE("two-level") {
    Eigen::MatrixXd th = Eigen::MatrixXd::Zero(2, 2);
    th(0, 1) = th(1, 0) = 0.01;
    const auto rm = raw_theta(th);
    CHECK(coherence_decay_rate(rm, 0, 1) ==
          doctest::Approx(constants::two_pi_c * 0.01).epsilon(1e-14));
  }
  SUBCASE("random 5-level equals the half-sum oracle") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 0.08);
    Eigen::MatrixXd th(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) th(i, j) = i == j ? 0.0 : u(rng);
    const auto rm = raw_theta(th);
    for (int n = 0; n < 5; ++n)
      for (int m = 0; m < 5; ++m) {
        if (n == m) continue;
        double oracle = 0.0;  // brute-force summation
        for (int j = 0; j < 5; ++j) oracle += th(j, m) + th(j, n);
        oracle *= 0.5 * constants::two_pi_c;
        CHECK(coherence_decay_rate(rm, n, m) == doctest::Approx(oracle).epsilon(1e-13));
        CHECK(coherence_decay_rate(rm, n, m) == coherence_decay_rate(rm, m, n));
      }
  }
  SUBCASE("n == m rejected") {
    const auto rm = raw_theta(Eigen::MatrixXd::Zero(3, 3));
    CHECK_THROWS_AS(coherence_decay_rate(rm, 1, 1), Error);
  }
}

TEST_CASE("geometric-mean dissipator variant") {
  Eigen::MatrixXd th(2, 2);
  th << 0.0, 0.03, 0.01, 0.0;  // asymmetric
  const auto rm = raw_theta(th);
  Eigen::VectorXd p(2);
  p << 0.25, 0.75;

  const Eigen::VectorXd direct = population_rhs(rm, p, DissipatorForm::DirectExpansion);
  const Eigen::VectorXd geometric = population_rhs(rm, p, DissipatorForm::GeometricMean);
  CHECK(direct[0] != geometric[0]);

  // geometric means sqrt(0.03 * 0.01) both ways
  const double g = constants::two_pi_c * std::sqrt(0.03 * 0.01);
  CHECK(geometric[0] == doctest::Approx(g * p[1] - g * p[0]).epsilon(1e-13));

  SUBCASE("forms coincide for symmetric theta") {
    Eigen::MatrixXd sym(2, 2);
    sym << 0.0, 0.02, 0.02, 0.0;
    const auto rms = raw_theta(sym);
    const Eigen::VectorXd a = population_rhs(rms, p, DissipatorForm::DirectExpansion);
    const Eigen::VectorXd b = population_rhs(rms, p, DissipatorForm::GeometricMean);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-18);
  }

  SUBCASE("Boltzmann distribution is not stationary under the geometric form") {
    const auto basis = testutil::polyad_basis(12);
    const auto rate = build_rate_matrix(basis, testutil::measured_channels(), 296.0, 1.0);
    const auto eq = boltzmann_populations(*basis, 296.0, Normalization::Global);
    const Eigen::VectorXd d = population_rhs(rate, eq.values, DissipatorForm::GeometricMean);
    const double scale = constants::two_pi_c * rate.theta.maxCoeff();
    CHECK(d.cwiseAbs().maxCoeff() / scale > 1e-6);
  }
}

TEST_CASE("propagate_populations: trace, positivity, parity confinement") {
  const auto basis = testutil::polyad_basis(40);
  const auto rm = build_rate_matrix(basis, testutil::measured_channels(), 296.0, 1.0);

  DensityState s0;
  s0.populations = Eigen::VectorXd::Zero(basis->size());
  s0.populations[basis->index_of("G2", 12)] = 1.0;

  const auto grid = linspace(0.0, 1e-9, 101);
  const auto traj = propagate_populations(s0, rm, grid);
  REQUIRE(traj.size() == grid.size());

  double ortho0 = 0.0, para0 = 1.0;
  for (const auto& state : traj) {
    CHECK(std::abs(state.populations.sum() - 1.0) < 1e-8);
    CHECK(state.populations.minCoeff() > -1e-9);
    double ortho = 0.0, para = 0.0;
    for (int i = 0; i < static_cast<int>(basis->size()); ++i)
      (basis->level(i).parity == Parity::Ortho ? ortho : para) += state.populations[i];
    CHECK(std::abs(ortho - ortho0) < 1e-10);
    CHECK(std::abs(para - para0) < 1e-10);
  }
}

TEST_CASE("propagate_populations: equilibrium is a fixed point") {
  const auto basis = testutil::polyad_basis(40);
  const auto rm = build_rate_matrix(basis, testutil::measured_channels(), 296.0, 1.0);
  DensityState s0;
  s0.populations = boltzmann_populations(*basis, 296.0, Normalization::Global).values;
  const auto traj = propagate_populations(s0, rm, linspace(0.0, 1e-9, 21));
  for (const auto& state : traj)
    CHECK((state.populations - s0.populations).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("propagate_populations: semigroup property") {
  const auto basis = testutil::polyad_basis(20);
  const auto rm = build_rate_matrix(basis, testutil::measured_channels(), 296.0, 1.0);
  DensityState s0;
  s0.populations = Eigen::VectorXd::Zero(basis->size());
  s0.populations[basis->index_of("G2", 8)] = 1.0;

  const double t1 = 3.7e-11, t2 = 1.1e-10;
  const auto direct = propagate_populations(s0, rm, {t1, t2});
  DensityState mid;
  mid.populations = direct[0].populations;
  mid.time_s = t1;
  const auto resumed = propagate_populations(mid, rm, {t2});
  CHECK((resumed[0].populations - direct[1].populations).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("propagate_populations: relaxation timescale and dJ=+-2 propensity") {
  const auto basis = testutil::polyad_basis(100);
  const auto rm = build_rate_matrix(basis, testutil::measured_channels(), 296.0, 1.0);
  const int src = basis->index_of("G2", 12);

  DensityState s0;
  s0.populations = Eigen::VectorXd::Zero(basis->size());
  s0.populations[src] = 1.0;

  const auto grid = linspace(0.0, 1e-9, 501);
  const auto traj = propagate_populations(s0, rm, grid);

  // initial-state decay crosses 0.1 on the ~100 ps decade
  int cross = -1;
  for (int k = 0; k < static_cast<int>(traj.size()); ++k)
    if (traj[k].populations[src] < 0.1) {
      cross = k;
      break;
    }
  REQUIRE(cross > 0);
  CHECK(grid[cross] > 50e-12);
  CHECK(grid[cross] < 250e-12);

  // the dJ = +-2 neighbours inside G2 peak before any other G2 level
  const auto argmax_time = [&](int level) {
    int best = 0;
    for (int k = 1; k < static_cast<int>(traj.size()); ++k)
      if (traj[k].populations[level] > traj[best].populations[level]) best = k;
    return grid[best];
  };
  const double t10 = argmax_time(basis->index_of("G2", 10));
  const double t14 = argmax_time(basis->index_of("G2", 14));
  for (int j = 0; j <= 100; j += 2) {
    if (j == 10 || j == 12 || j == 14) continue;
    const double tj = argmax_time(basis->index_of("G2", j));
    CHECK(t10 < tj);
    CHECK(t14 < tj);
  }

  SUBCASE("decay of the relaxing component is exponential over its first decade") {
    // the population relaxes towards the para-class Boltzmann value, so the
    // log-linearity of the decay applies to p(t) - p_eq; the per-class
    // normalization makes the para components sum to 1, matching the
    // all-para trajectory
    const auto eq = boltzmann_populations(*basis, 296.0, Normalization::PerParityClass);
    const double p_inf = eq.values[src];
    std::vector<double> xs, ys;
    const double start = 1.0 - p_inf;
    for (int k = 0; k < static_cast<int>(traj.size()); ++k) {
      const double shifted = traj[k].populations[src] - p_inf;
      if (shifted < 0.1 * start) break;
      xs.push_back(grid[k]);
      ys.push_back(std::log(shifted));
    }
    REQUIRE(xs.size() > 10);
    // least-squares line and R^2
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
      syy += ys[i] * ys[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double mean_y = sy / n;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double fit = slope * xs[i] + intercept;
      ss_res += (ys[i] - fit) * (ys[i] - fit);
      ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
    }
    CHECK(1.0 - ss_res / ss_tot > 0.999);
    CHECK(slope < 0.0);
  }
}

TEST_CASE("propagate_populations: long-time limit is the per-class Boltzmann") {
  const auto basis = testutil::polyad_basis(100);
  const auto rm = build_rate_matrix(basis, testutil::measured_channels(), 296.0, 1.0);
  DensityState s0;
  s0.populations = Eigen::VectorXd::Zero(basis->size());
  s0.populations[basis->index_of("G2", 12)] = 1.0;

  const auto traj = propagate_populations(s0, rm, {5e-9});
  const auto eq = boltzmann_populations(*basis, 296.0, Normalization::PerParityClass);
  double max_diff = 0.0;
  for (int i = 0; i < static_cast<int>(basis->size()); ++i) {
    if (basis->level(i).parity == Parity::Para)
      max_diff = std::max(max_diff, std::abs(traj[0].populations[i] - eq.values[i]));
    else
      CHECK(traj[0].populations[i] < 1e-20);
  }
  CHECK(max_diff < 1e-3);
}

TEST_CASE("propagate_density: closed system keeps populations, rotates coherences") {
  const auto rm = raw_theta(Eigen::MatrixXd::Zero(2, 2));
  Eigen::VectorXd energies(2);
  energies << 0.0, 10.0;  // cm^-1

  DensityState s0;
  s0.populations = Eigen::VectorXd::Constant(2, 0.5);
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(2, 2);
  c(0, 1) = std::complex<double>(0.5, 0.0);
  c(1, 0) = std::conj(c(0, 1));
  s0.coherences = c;

  const auto grid = linspace(0.0, 2e-11, 21);
  const auto traj = propagate_density(s0, rm, energies, std::nullopt, grid);
  REQUIRE(traj.size() == grid.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    CHECK(traj[k].populations[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(traj[k].populations[1] == doctest::Approx(0.5).epsilon(1e-8));
    const std::complex<double> rho01 = (*traj[k].coherences)(0, 1);
    CHECK(std::abs(rho01) == doctest::Approx(0.5).epsilon(1e-7));
    // rho_01(t) = rho_01(0) exp(-i two_pi_c (E_0 - E_1) t)
    const double phase = -constants::two_pi_c * (0.0 - 10.0) * grid[k];
    CHECK(rho01.real() == doctest::Approx(0.5 * std::cos(phase)).epsilon(1e-6));
    CHECK(rho01.imag() == doctest::Approx(0.5 * std::sin(phase)).epsilon(1e-6));
  }
}

TEST_CASE("propagate_density: field-free populations match the exact path") {
  const auto basis = testutil::polyad_basis(6);
  const auto rm = build_rate_matrix(basis, testutil::measured_channels(), 296.0, 1.0);
  DensityState s0;
  s0.populations = Eigen::VectorXd::Zero(basis->size());
  s0.populations[basis->index_of("G2", 2)] = 1.0;

  Eigen::VectorXd energies(basis->size());
  for (int i = 0; i < static_cast<int>(basis->size()); ++i)
    energies[i] = basis->level(i).energy_cm1;

  const auto grid = linspace(0.0, 2e-10, 5);
  const auto exact = propagate_populations(s0, rm, grid);
  const auto ode = propagate_density(s0, rm, energies, std::nullopt, grid);
  for (std::size_t k = 0; k < grid.size(); ++k)
    CHECK((exact[k].populations - ode[k].populations).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("propagate_density: resonant two-level drive oscillates populations") {
  // degenerate levels, constant field: H = -two_pi_c mu eps sigma_x, so the
  // initially populated level follows cos^2(two_pi_c mu eps t)
  const auto rm = raw_theta(Eigen::MatrixXd::Zero(2, 2));
  Eigen::VectorXd energies = Eigen::VectorXd::Zero(2);

  FieldTrace field;
  field.times_s = Eigen::VectorXd::LinSpaced(2, 0.0, 1.0);
  field.amplitudes = Eigen::VectorXd::Constant(2, 1.0);
  field.dipole_cm1 = Eigen::MatrixXd::Zero(2, 2);
  field.dipole_cm1(0, 1) = field.dipole_cm1(1, 0) = 1e-3;

  DensityState s0;
  s0.populations = Eigen::VectorXd::Zero(2);
  s0.populations[0] = 1.0;
  s0.coherences = Eigen::MatrixXcd::Zero(2, 2);

  const double v = constants::two_pi_c * 1e-3;  // rad/s
  const auto grid = linspace(0.0, 1.5 * std::numbers::pi / v, 16);
  const auto traj = propagate_density(s0, rm, energies, field, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double expect = std::cos(v * grid[k]) * std::cos(v * grid[k]);
    CHECK(traj[k].populations[0] == doctest::Approx(expect).epsilon(5e-6));
  }
}

TEST_CASE("propagate_density: exhausted step budget reports last good time") {
  const auto basis = testutil::polyad_basis(4);
  const auto rm = build_rate_matrix(basis, testutil::measured_channels(), 296.0, 1.0);
  DensityState s0;
  s0.populations = Eigen::VectorXd::Zero(basis->size());
  s0.populations[0] = 1.0;
  Eigen::VectorXd energies(basis->size());
  for (int i = 0; i < static_cast<int>(basis->size()); ++i)
    energies[i] = basis->level(i).energy_cm1;

  PropagateOptions opts;
  opts.max_steps = 3;
  CHECK_THROWS_WITH_AS(
      propagate_density(s0, rm, energies, std::nullopt, linspace(0.0, 1e-9, 5), opts),
      doctest::Contains("last good time"), Error);
}

TEST_CASE("propagate dispatch and grid validation") {
  const auto rm = raw_theta(Eigen::MatrixXd::Zero(2, 2));
  DensityState s0;
  s0.populations = Eigen::VectorXd::Constant(2, 0.5);
  Eigen::VectorXd energies = Eigen::VectorXd::Zero(2);

  CHECK_THROWS_AS(propagate(s0, rm, energies, std::nullopt, {}), Error);
  CHECK_THROWS_AS(propagate(s0, rm, energies, std::nullopt, {1e-12, 1e-12}), Error);

  // populations-only, field-free goes through the exact path and keeps
  // populations constant under zero rates
  const auto traj = propagate(s0, rm, energies, std::nullopt, {1e-12, 2e-12});
  CHECK(traj.size() == 2);
  CHECK(traj[1].populations[0] == 0.5);
}
