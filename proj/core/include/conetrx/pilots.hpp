#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "conetrx/link_config.hpp"

namespace conetrx {

/// Fixed pilot layout and values for a link configuration. Pilots occupy
/// one OFDM symbol on every spacing-th subcarrier; values are QPSK symbols
/// from a fixed seeded sequence, identical across samples and runs.
struct PilotPattern {
  int T = 0, F = 0;
  std::vector<uint8_t> mask;                  // [T*F], 1 at pilot REs
  std::vector<std::complex<double>> values;   // [T*F], 0 off-pilot
  int count = 0;

  bool at(int t, int f) const { return mask[static_cast<size_t>(t * F + f)] != 0; }
  std::complex<double> value(int t, int f) const { return values[static_cast<size_t>(t * F + f)]; }
};

PilotPattern pilot_pattern(const LinkConfig& cfg);

}  // namespace conetrx
