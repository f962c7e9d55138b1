#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/levels.hpp"

namespace rovi {

enum class GapLawKind { Egl, Epgl };

struct GapLawParams {
  GapLawKind kind = GapLawKind::Egl;
  double k0 = 0.0;     // cm^-1 atm^-1
  double eta = 0.0;    // dimensionless
  double beta = 0.0;   // dimensionless, Epgl only
  std::optional<double> sigma_k0;
  std::optional<double> sigma_eta;
  std::optional<double> sigma_beta;
};

// One collisional transfer channel. The gap law describes the upward
// (energy-absorbing) direction; downward rates follow from detailed balance.
// params_dj2, when present, replaces params for |dJ| == 2 pairs.
struct ChannelSpec {
  std::string name;       // "R1".."R4" or a free tag
  std::string from_vib;
  std::string to_vib;
  double weight = 1.0;
  GapLawParams params;
  std::optional<GapLawParams> params_dj2;

  const GapLawParams& params_for(int abs_dj) const {
    return (abs_dj == 2 && params_dj2) ? *params_dj2 : params;
  }
};

// Validated channel collection. Weights grouped by from_vib must either sum
// to 1 (split-model configurations) or all equal 1 (measured-constants
// configurations where each channel carries its own full-strength law).
class ChannelSet {
 public:
  explicit ChannelSet(std::vector<ChannelSpec> channels);

  const std::vector<ChannelSpec>& channels() const { return channels_; }
  std::size_t size() const { return channels_.size(); }
  std::vector<const ChannelSpec*> outgoing(const std::string& from_vib) const;
  bool has_outgoing(const std::string& from_vib) const;

 private:
  std::vector<ChannelSpec> channels_;
};

// k(high<-low) = K0 exp(-eta (E_high-E_low) / kB T)
double egl_rate(const GapLawParams& p, double e_low_cm1, double e_high_cm1,
                double temperature_k);

// k(high<-low) = K0 ((E_high-E_low)/kB T)^-beta exp(-eta (E_high-E_low)/kB T);
// the power term is singular at zero gap, which is rejected.
double epgl_rate(const GapLawParams& p, double e_low_cm1, double e_high_cm1,
                 double temperature_k);

// dispatch on p.kind
double gap_law_rate(const GapLawParams& p, double e_low_cm1, double e_high_cm1,
                    double temperature_k);

// k(low<-high) = (2J_low+1)/(2J_high+1) exp((E_high-E_low)/kB T) k(high<-low)
double downward_rate(double k_up, int j_low, int j_high, double e_low_cm1,
                     double e_high_cm1, double temperature_k);

// Dense matrix of transition frequencies. theta(i, j) is the frequency of the
// i <- j transfer. Units are cm^-1 when pressure_scaled (theta = P w k),
// cm^-1 atm^-1 otherwise.
struct RateMatrix {
  Eigen::MatrixXd theta;
  std::shared_ptr<const LevelBasis> basis;
  double temperature_k = 296.0;
  double pressure_atm = 1.0;
  bool pressure_scaled = true;
  std::vector<std::string> warnings;
};

// For every |dJ|-even level pair the upward rate comes from the channel with
// (from = lower level's vib, to = upper level's vib); the downward rate from
// detailed balance. Pairs without such a channel stay zero, but every vib in
// the basis must have at least one outgoing channel.
RateMatrix build_rate_matrix(std::shared_ptr<const LevelBasis> basis,
                             const ChannelSet& channels, double temperature_k,
                             double pressure_atm);

// Same construction before pressure scaling: theta holds the kinetic
// constants w k in cm^-1 atm^-1 and pressure_scaled is false.
RateMatrix build_rate_matrix_per_atm(std::shared_ptr<const LevelBasis> basis,
                                     const ChannelSet& channels, double temperature_k);

}  // namespace rovi
