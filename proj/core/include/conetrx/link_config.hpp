#pragma once

#include <cstdint>

#include "conetrx/tensor.hpp"

namespace conetrx {

struct PilotConfig {
  int symbol_index = 2;  // OFDM symbol carrying pilots
  int spacing = 2;       // pilots on every spacing-th subcarrier
};

/// Static description of one uplink: grid geometry, numerology, modulation
/// and the channel parameter ranges samples are drawn from.
struct LinkConfig {
  int T = 14;  // OFDM symbols per TTI
  int F = 64;  // subcarriers
  int N = 2;   // receive antennas
  int mod_order = 64;
  double subcarrier_spacing_hz = 30e3;
  double carrier_freq_hz = 3.5e9;
  double cp_fraction = 0.07;  // cyclic prefix overhead relative to the useful symbol
  PilotConfig pilot;
  double delay_spread_min_s = 1e-9;
  double delay_spread_max_s = 1.5e-6;
  double speed_min_mps = 0.0;
  double speed_max_mps = 15.0;
  uint64_t seed = 1;

  double symbol_duration_s() const { return (1.0 + cp_fraction) / subcarrier_spacing_hz; }
  double cp_duration_s() const { return cp_fraction / subcarrier_spacing_hz; }

  void validate() const {
    require(T >= 1 && F >= 1 && N >= 1, "link config needs positive grid dims");
    require(mod_order == 4 || mod_order == 16 || mod_order == 64,
            "modulation order must be a power of 4 (4, 16 or 64), got " + std::to_string(mod_order));
    require(pilot.spacing >= 1 && F >= pilot.spacing, "pilot spacing must fit the subcarrier count");
    require(pilot.symbol_index >= 0 && pilot.symbol_index < T, "pilot symbol index out of range");
    require(subcarrier_spacing_hz > 0 && carrier_freq_hz > 0, "numerology must be positive");
    require(delay_spread_min_s > 0 && delay_spread_max_s >= delay_spread_min_s, "bad delay spread range");
    require(speed_min_mps >= 0 && speed_max_mps >= speed_min_mps, "bad speed range");
  }
};

}  // namespace conetrx
