#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/gaplaws.hpp"
#include "core/levels.hpp"

namespace rovi {

struct BroadeningObservation {
  int m_abs = 0;
  double gamma = 0.0;   // cm^-1 atm^-1, HWHM
  double sigma = 0.0;   // cm^-1 atm^-1
  std::string source;   // free tag; a fitted eigenstate label restricts the
                        // observation to that curve, empty means both
};

// One observation per (m, source tag): gamma is the arithmetic mean, sigma
// the mean member sigma divided by sqrt(n). Output sorted by (m, tag).
std::vector<BroadeningObservation> average_by_m(
    const std::vector<BroadeningObservation>& observations);

struct FitOptions {
  bool tie_parameters = true;  // one shared set for all eigenstate labels
  bool weighted = true;        // 1/sigma^2 residual weights; false = uniform
  int max_iterations = 200;
  std::optional<GapLawParams> initial_guess;  // default: K0 = mean(gamma)/10,
                                              // eta = 1.5, beta = 0.3
};

struct FitResult {
  GapLawKind law = GapLawKind::Egl;
  bool tied = true;
  std::vector<std::string> labels;             // sorted eigenstate labels
  std::map<std::string, GapLawParams> params;  // includes 1-sigma uncertainties
  Eigen::MatrixXd covariance;  // physical parameters, blocks in label order
                               // (one block when tied): [K0, eta(, beta)]
  Eigen::MatrixXd jacobian;    // weighted residual Jacobian at the solution,
                               // columns over [ln K0, eta(, beta)] per block
  Eigen::VectorXd residuals;   // unweighted model - data per residual row
  std::vector<std::pair<int, std::string>> residual_keys;  // (m, label) per row
  double rms = 0.0;            // sqrt(mean residual^2), cm^-1 atm^-1
  double initial_rms = 0.0;
  double chi2 = 0.0;           // weighted sum of squares at the solution
  double chi2_reduced = 0.0;
  int iterations = 0;
  bool converged = false;
  bool boundary_warning = false;  // K0 driven to the lower bound
};

// Non-convergence carries the best state reached.
class FitError : public Error {
 public:
  FitError(const std::string& msg, FitResult best)
      : Error(Code::Numeric, msg), best_result(std::move(best)) {}
  FitResult best_result;
};

// Weighted least squares of the channel-sum broadening model against the
// observations, one parameter set per eigenstate label (a label is a source
// vib of the topology), optimized over [ln K0, eta(, beta)] by damped
// Gauss-Newton with a numerical Jacobian. The model value for m is the
// weighted channel outflow of the upper level (label, J = m).
FitResult fit_gap_law(const std::vector<BroadeningObservation>& observations,
                      GapLawKind law, const LevelBasis& basis, const ChannelSet& topology,
                      double temperature_k, const FitOptions& options = {});

// The exact model curve used inside fit_gap_law, for each label, over
// m = m_min..m_max.
std::map<std::string, std::vector<double>> predict_broadening_curve(
    const std::map<std::string, GapLawParams>& params_by_label, const LevelBasis& basis,
    const ChannelSet& topology, double temperature_k, int m_min, int m_max);

std::string fit_result_to_json(const FitResult& result);

}  // namespace rovi
