#include "conetrx/channel.hpp"

#include <cmath>

namespace conetrx {

namespace {

constexpr int kTaps = 16;
constexpr int kSinusoids = 20;
constexpr double kLightSpeed = 299792458.0;

double rms_delay_spread(const std::vector<double>& powers, double spacing) {
  double m1 = 0.0, m2 = 0.0;
  for (size_t l = 0; l < powers.size(); ++l) {
    double tau = static_cast<double>(l) * spacing;
    m1 += powers[l] * tau;
    m2 += powers[l] * tau * tau;
  }
  double v = m2 - m1 * m1;
  return v > 0 ? std::sqrt(v) : 0.0;
}

std::vector<double> powers_for_decay(double beta, double spacing, int n) {
  std::vector<double> p(static_cast<size_t>(n));
  double sum = 0.0;
  for (int l = 0; l < n; ++l) {
    p[static_cast<size_t>(l)] = std::exp(-static_cast<double>(l) * spacing / beta);
    sum += p[static_cast<size_t>(l)];
  }
  for (auto& v : p) v /= sum;
  return p;
}

}  // namespace

std::vector<double> tdl_tap_powers(double delay_spread_s, double tap_spacing_s, int n_taps) {
  // rms(beta) is monotone increasing; bisect in log space. Targets beyond
  // the uniform-profile limit saturate at the upper end.
  double lo = std::log(1e-12), hi = std::log(1.0);
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double rms = rms_delay_spread(powers_for_decay(std::exp(mid), tap_spacing_s, n_taps), tap_spacing_s);
    if (rms < delay_spread_s)
      lo = mid;
    else
      hi = mid;
  }
  return powers_for_decay(std::exp(0.5 * (lo + hi)), tap_spacing_s, n_taps);
}

TdlLink tdl_channel(double delay_spread_s, double speed_mps, const LinkConfig& cfg, Rng& rng) {
  require(delay_spread_s >= cfg.delay_spread_min_s && delay_spread_s <= cfg.delay_spread_max_s,
          "delay spread outside configured range");
  require(speed_mps >= cfg.speed_min_mps && speed_mps <= cfg.speed_max_mps, "speed outside configured range");

  const double spacing = 1.0 / (static_cast<double>(cfg.F) * cfg.subcarrier_spacing_hz);
  TdlLink link;
  link.tap_powers = tdl_tap_powers(delay_spread_s, spacing, kTaps);
  link.tap_delays_s.resize(kTaps);
  for (int l = 0; l < kTaps; ++l) link.tap_delays_s[static_cast<size_t>(l)] = l * spacing;
  link.doppler_hz = speed_mps * cfg.carrier_freq_hz / kLightSpeed;

  const double wd = 2.0 * Rng::kPi * link.doppler_hz;
  const double tsym = cfg.symbol_duration_s();
  const double amp = 1.0 / std::sqrt(static_cast<double>(kSinusoids));

  // Per (antenna, tap) Rayleigh process: 20 equal-power sinusoids with
  // random arrival angles and phases, sampled once per OFDM symbol.
  std::vector<std::complex<double>> taps(static_cast<size_t>(cfg.T * kTaps * cfg.N));
  for (int a = 0; a < cfg.N; ++a) {
    for (int l = 0; l < kTaps; ++l) {
      double omega[kSinusoids], phase[kSinusoids];
      for (int s = 0; s < kSinusoids; ++s) {
        omega[s] = wd * std::cos(2.0 * Rng::kPi * rng.uniform());
        phase[s] = 2.0 * Rng::kPi * rng.uniform();
      }
      const double scale = amp * std::sqrt(link.tap_powers[static_cast<size_t>(l)]);
      for (int t = 0; t < cfg.T; ++t) {
        double time = t * tsym;
        double re = 0.0, im = 0.0;
        for (int s = 0; s < kSinusoids; ++s) {
          double arg = omega[s] * time + phase[s];
          re += std::cos(arg);
          im += std::sin(arg);
        }
        taps[static_cast<size_t>((t * kTaps + l) * cfg.N + a)] = {scale * re, scale * im};
      }
    }
  }

  // H[t,f,a] = sum_l a_l(t) * exp(-j 2 pi f df tau_l)
  std::vector<std::complex<double>> twiddle(static_cast<size_t>(cfg.F * kTaps));
  for (int f = 0; f < cfg.F; ++f)
    for (int l = 0; l < kTaps; ++l) {
      double arg = -2.0 * Rng::kPi * f * cfg.subcarrier_spacing_hz * link.tap_delays_s[static_cast<size_t>(l)];
      twiddle[static_cast<size_t>(f * kTaps + l)] = {std::cos(arg), std::sin(arg)};
    }

  link.grid.assign(static_cast<size_t>(cfg.T * cfg.F * cfg.N), {0.0, 0.0});
  for (int t = 0; t < cfg.T; ++t)
    for (int f = 0; f < cfg.F; ++f)
      for (int a = 0; a < cfg.N; ++a) {
        std::complex<double> acc{0.0, 0.0};
        for (int l = 0; l < kTaps; ++l)
          acc += taps[static_cast<size_t>((t * kTaps + l) * cfg.N + a)] *
                 twiddle[static_cast<size_t>(f * kTaps + l)];
        link.grid[grid_idx(cfg, t, f, a)] = acc;
      }
  return link;
}

}  // namespace conetrx
