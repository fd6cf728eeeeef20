#include "conetrx/qam.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <string>

namespace conetrx {

int qam_bits_per_symbol(int order) {
  switch (order) {
    case 4: return 2;
    case 16: return 4;
    case 64: return 6;
    default:
      throw std::invalid_argument("modulation order must be 4, 16 or 64, got " + std::to_string(order));
  }
}

namespace {

// Per-axis Gray amplitude from the axis bit pattern (3GPP-style labeling).
double axis_level(const uint8_t* b, int nbits) {
  double s0 = 1.0 - 2.0 * b[0];
  if (nbits == 1) return s0;
  double s1 = 1.0 - 2.0 * b[1];
  if (nbits == 2) return s0 * (2.0 - s1);
  double s2 = 1.0 - 2.0 * b[2];
  return s0 * (4.0 - s1 * (2.0 - s2));
}

double norm_factor(int order) {
  switch (order) {
    case 4: return std::sqrt(2.0);
    case 16: return std::sqrt(10.0);
    default: return std::sqrt(42.0);
  }
}

}  // namespace

std::complex<double> qam_map(const uint8_t* bits, int order) {
  const int b = qam_bits_per_symbol(order);
  const int half = b / 2;
  uint8_t ib[3], qb[3];
  for (int i = 0; i < half; ++i) {
    ib[i] = bits[2 * i];
    qb[i] = bits[2 * i + 1];
  }
  const double inv = 1.0 / norm_factor(order);
  return {axis_level(ib, half) * inv, axis_level(qb, half) * inv};
}

const std::vector<std::complex<double>>& qam_constellation(int order) {
  static std::vector<std::complex<double>> tables[3];
  static std::once_flag once[3];
  int slot = order == 4 ? 0 : order == 16 ? 1 : 2;
  qam_bits_per_symbol(order);  // validates
  std::call_once(once[slot], [order, slot] {
    const int b = qam_bits_per_symbol(order);
    auto& tab = tables[slot];
    tab.resize(static_cast<size_t>(order));
    for (int label = 0; label < order; ++label) {
      uint8_t bits[6];
      for (int i = 0; i < b; ++i) bits[i] = static_cast<uint8_t>((label >> (b - 1 - i)) & 1);
      tab[static_cast<size_t>(label)] = qam_map(bits, order);
    }
  });
  return tables[slot];
}

void qam_hard_demap(std::complex<double> x, int order, uint8_t* bits) {
  const auto& tab = qam_constellation(order);
  const int b = qam_bits_per_symbol(order);
  int best = 0;
  double best_d = std::norm(x - tab[0]);
  for (int i = 1; i < order; ++i) {
    double d = std::norm(x - tab[static_cast<size_t>(i)]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  for (int i = 0; i < b; ++i) bits[i] = static_cast<uint8_t>((best >> (b - 1 - i)) & 1);
}

}  // namespace conetrx
