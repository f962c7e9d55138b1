#include "core/levels.hpp"

#include <algorithm>
#include <cmath>

#include "core/constants.hpp"
#include "core/error.hpp"

namespace rovi {

LevelBasis::LevelBasis(std::vector<RoviLevel> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw invalid_argument_error("level basis must not be empty");

  for (std::size_t i = 0; i < levels_.size(); ++i) {
    const RoviLevel& lv = levels_[i];
    if (lv.vib.empty()) throw invalid_argument_error("level has empty vib label");
    if (lv.j < 0) throw invalid_argument_error("level has negative J");
    if (!std::isfinite(lv.energy_cm1))
      throw invalid_argument_error("non-finite energy for (" + lv.vib + ", J=" +
                                   std::to_string(lv.j) + ")");
    if (lv.parity != parity_of(lv.j))
      throw invalid_argument_error("parity inconsistent with J for (" + lv.vib +
                                   ", J=" + std::to_string(lv.j) + ")");
    auto [it, inserted] = index_.emplace(std::make_pair(lv.vib, lv.j), static_cast<int>(i));
    if (!inserted)
      throw invalid_argument_error("duplicate level (" + lv.vib + ", J=" +
                                   std::to_string(lv.j) + ")");
    if (j_max_.find(lv.vib) == j_max_.end()) {
      vibs_.push_back(lv.vib);
      j_max_[lv.vib] = lv.j;
    } else {
      j_max_[lv.vib] = std::max(j_max_[lv.vib], lv.j);
    }
  }

  // contiguity and monotonicity per vib
  for (const auto& vib : vibs_) {
    const int jmax = j_max_[vib];
    double prev = 0.0;
    for (int j = 0; j <= jmax; ++j) {
      auto it = index_.find(std::make_pair(vib, j));
      if (it == index_.end())
        throw invalid_argument_error("vib '" + vib + "' has a gap at J=" +
                                     std::to_string(j) + " (J must span 0..Jmax)");
      const double e = levels_[it->second].energy_cm1;
      if (j > 0 && !(e > prev))
        throw invalid_argument_error("energies not strictly increasing with J in vib '" +
                                     vib + "' at J=" + std::to_string(j));
      prev = e;
    }
  }
}

int LevelBasis::index_of(const std::string& vib, int j) const {
  auto it = index_.find(std::make_pair(vib, j));
  return it == index_.end() ? -1 : it->second;
}

bool LevelBasis::has_vib(const std::string& vib) const {
  return j_max_.find(vib) != j_max_.end();
}

int LevelBasis::j_max(const std::string& vib) const {
  auto it = j_max_.find(vib);
  return it == j_max_.end() ? -1 : it->second;
}

std::vector<RoviLevel> build_rigid_rotor_ladder(double b_cm1, double d_cm1,
                                                double vib_origin_cm1,
                                                const std::string& vib_label, int j_max) {
  if (!std::isfinite(b_cm1) || !std::isfinite(d_cm1) || !std::isfinite(vib_origin_cm1))
    throw invalid_argument_error("rigid rotor constants must be finite");
  if (b_cm1 <= 0.0) throw invalid_argument_error("rotational constant B must be > 0");
  if (d_cm1 < 0.0) throw invalid_argument_error("centrifugal constant D must be >= 0");
  if (j_max < 0) throw invalid_argument_error("J_max must be >= 0");

  std::vector<RoviLevel> out;
  out.reserve(static_cast<std::size_t>(j_max) + 1);
  for (int j = 0; j <= j_max; ++j) {
    const double x = static_cast<double>(j) * (j + 1);
    RoviLevel lv;
    lv.vib = vib_label;
    lv.j = j;
    lv.energy_cm1 = vib_origin_cm1 + b_cm1 * x - d_cm1 * x * x;
    lv.parity = parity_of(j);
    out.push_back(std::move(lv));
  }
  return out;
}

PopulationVector boltzmann_populations(const LevelBasis& basis, double temperature_k,
                                       Normalization normalization) {
  if (!(temperature_k > 0.0))
    throw invalid_argument_error("temperature must be > 0 K");

  const double kt = constants::thermal_energy_cm1(temperature_k);
  const std::size_t n = basis.size();

  // shift by the class minimum to avoid underflow at large J
  double e_min = basis.level(0).energy_cm1;
  for (std::size_t i = 1; i < n; ++i)
    e_min = std::min(e_min, basis.level(i).energy_cm1);

  Eigen::VectorXd w(n);
  double sum_ortho = 0.0, sum_para = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const RoviLevel& lv = basis.level(i);
    const double wi = (2.0 * lv.j + 1.0) * std::exp(-(lv.energy_cm1 - e_min) / kt);
    w[static_cast<Eigen::Index>(i)] = wi;
    (lv.parity == Parity::Ortho ? sum_ortho : sum_para) += wi;
  }

  PopulationVector pop;
  pop.normalization = normalization;
  pop.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));

  for (std::size_t i = 0; i < n; ++i) {
    const bool ortho = basis.level(i).parity == Parity::Ortho;
    const double class_sum = ortho ? sum_ortho : sum_para;
    const double wi = w[static_cast<Eigen::Index>(i)];
    double v = 0.0;
    switch (normalization) {
      case Normalization::PerParityClass:
        v = wi / class_sum;
        break;
      case Normalization::Global:
        v = (ortho ? 3.0 : 1.0) * wi / (3.0 * sum_ortho + sum_para);
        break;
      case Normalization::SpinWeightedClasses:
        v = (ortho ? 3.0 : 1.0) * wi / class_sum;
        break;
    }
    pop.values[static_cast<Eigen::Index>(i)] = v;
  }
  return pop;
}

}  // namespace rovi
