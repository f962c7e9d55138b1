#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/fitting.hpp"
#include "core/gaplaws.hpp"
#include "core/levels.hpp"
#include "core/lineshape.hpp"

namespace rovi {

// Text table `vib,J,energy_cm1`; '#' starts a comment line.
std::vector<RoviLevel> read_level_table(const std::string& path);

// Text table `lower_vib,lower_J,upper_vib,upper_J,nu0_cm1,dipole_D`; all
// referenced levels must exist in the basis.
LineList read_line_list(const std::string& path, std::shared_ptr<const LevelBasis> basis);

// Text table `m,gamma_cm1_atm1,sigma` with optional `tag` column; a missing
// or empty sigma applies the 5% measurement-precision rule.
std::vector<BroadeningObservation> read_observations(const std::string& path);

// Sectioned key-value file, one `[channel NAME]` section per channel with
// keys from/to/law/K0/eta[/beta]/weight and optional |dJ|=2 overrides
// K0_dj2/eta_dj2[/beta_dj2]. Strict: unknown or missing keys are errors with
// line numbers.
ChannelSet read_channel_config(const std::string& path);

}  // namespace rovi
