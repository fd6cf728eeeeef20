#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace conetrx {

/// Gray-labeled square QAM with unit average constellation energy. Bit
/// convention: even-indexed bits drive the in-phase axis, odd-indexed bits
/// the quadrature axis; bit value 0 maps to the positive outer half of each
/// axis, so QPSK bits (0,0) land on (1+j)/sqrt(2).
int qam_bits_per_symbol(int order);

std::complex<double> qam_map(const uint8_t* bits, int order);

/// Nearest-point hard decision, inverse of qam_map on noiseless input.
void qam_hard_demap(std::complex<double> x, int order, uint8_t* bits);

/// All constellation points indexed by the MSB-first integer label of the
/// bit vector.
const std::vector<std::complex<double>>& qam_constellation(int order);

}  // namespace conetrx
