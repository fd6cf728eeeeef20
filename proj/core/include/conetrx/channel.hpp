#pragma once

#include <complex>
#include <vector>

#include "conetrx/link_config.hpp"
#include "conetrx/rng.hpp"

namespace conetrx {

/// One tapped-delay-line link realization: per-RE frequency response plus
/// the tap-domain metadata it was synthesized from.
struct TdlLink {
  std::vector<std::complex<double>> grid;  // [T,F,N]
  std::vector<double> tap_delays_s;
  std::vector<double> tap_powers;
  double doppler_hz = 0.0;
};

/// User and interferer responses for one TTI. Tap metadata refers to the
/// user link.
struct ChannelRealization {
  std::vector<std::complex<double>> h;  // [T,F,N]
  std::vector<std::complex<double>> g;  // [T,F,N], empty without interferer
  std::vector<double> tap_delays_s;
  std::vector<double> tap_powers;
  double doppler_hz = 0.0;
};

inline size_t grid_idx(const LinkConfig& cfg, int t, int f, int a) {
  return static_cast<size_t>((t * cfg.F + f) * cfg.N + a);
}

/// Exponential power-delay profile on the 1/(F*delta_f) delay grid, decay
/// solved so the profile's RMS delay spread matches the request; per-tap
/// Rayleigh processes evolve across OFDM symbols under a Jakes Doppler
/// spectrum (sum of sinusoids), constant within a symbol.
TdlLink tdl_channel(double delay_spread_s, double speed_mps, const LinkConfig& cfg, Rng& rng);

/// Exposed for tests: normalized tap powers for a given decay target.
std::vector<double> tdl_tap_powers(double delay_spread_s, double tap_spacing_s, int n_taps);

}  // namespace conetrx
