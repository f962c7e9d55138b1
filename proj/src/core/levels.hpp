#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace rovi {

enum class Parity { Para = 0, Ortho = 1 };

// 12C2H2 convention: odd J is ortho, even J is para.
inline Parity parity_of(int j) { return (j % 2 != 0) ? Parity::Ortho : Parity::Para; }

struct RoviLevel {
  std::string vib;        // vibrational-eigenstate tag ("ground", "G1", "G2", ...)
  int j = 0;              // rotational quantum number
  double energy_cm1 = 0.0;
  Parity parity = Parity::Para;
};

// Validated, immutable level basis. Within each vib tag, J must run 0..Jmax
// without gaps and the energies must be finite and strictly increasing in J.
class LevelBasis {
 public:
  explicit LevelBasis(std::vector<RoviLevel> levels);

  std::size_t size() const { return levels_.size(); }
  const std::vector<RoviLevel>& levels() const { return levels_; }
  const RoviLevel& level(std::size_t i) const { return levels_.at(i); }

  // -1 when (vib, J) is not in the basis.
  int index_of(const std::string& vib, int j) const;
  bool has_vib(const std::string& vib) const;
  int j_max(const std::string& vib) const;  // -1 when vib absent
  const std::vector<std::string>& vibs() const { return vibs_; }

 private:
  std::vector<RoviLevel> levels_;
  std::map<std::pair<std::string, int>, int> index_;
  std::vector<std::string> vibs_;           // insertion order
  std::map<std::string, int> j_max_;
};

// E(J) = origin + B J(J+1) - D [J(J+1)]^2, parity assigned from J.
std::vector<RoviLevel> build_rigid_rotor_ladder(double b_cm1, double d_cm1,
                                                double vib_origin_cm1,
                                                const std::string& vib_label, int j_max);

enum class Normalization {
  PerParityClass,       // each parity class sums to 1
  Global,               // grand sum 1, ortho carries nuclear-spin weight 3
  SpinWeightedClasses,  // each class normalized to 1 then scaled by its spin
                        // weight (ortho 3, para 1); grand total is 4
};

struct PopulationVector {
  Eigen::VectorXd values;
  Normalization normalization = Normalization::PerParityClass;
};

// Per-level weight (2J+1) exp(-E/kT), normalized per the tag. Class weights
// 3 (ortho) and 1 (para) enter for Global and SpinWeightedClasses.
PopulationVector boltzmann_populations(const LevelBasis& basis, double temperature_k,
                                       Normalization normalization);

}  // namespace rovi
