#include "conetrx/pilots.hpp"

#include "conetrx/qam.hpp"
#include "conetrx/rng.hpp"

namespace conetrx {

namespace {
// Pilot values depend on this constant alone, never on the sample stream.
constexpr uint64_t kPilotSeed = 0x50494C4F54ull;  // "PILOT"
}  // namespace

PilotPattern pilot_pattern(const LinkConfig& cfg) {
  cfg.validate();
  PilotPattern p;
  p.T = cfg.T;
  p.F = cfg.F;
  p.mask.assign(static_cast<size_t>(cfg.T * cfg.F), 0);
  p.values.assign(static_cast<size_t>(cfg.T * cfg.F), {0.0, 0.0});

  Rng rng(kPilotSeed);
  const int t = cfg.pilot.symbol_index;
  for (int f = 0; f < cfg.F; f += cfg.pilot.spacing) {
    uint8_t bits[2] = {static_cast<uint8_t>(rng.bit()), static_cast<uint8_t>(rng.bit())};
    size_t idx = static_cast<size_t>(t * cfg.F + f);
    p.mask[idx] = 1;
    p.values[idx] = qam_map(bits, 4);
    ++p.count;
  }
  return p;
}

}  // namespace conetrx
