#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "conetrx/tensor.hpp"

namespace conetrx {

enum class BlockKind { rb, mrb };
enum class ConvKind { standard, depthwise_separable };
enum class NormKind { batch, layer };
enum class FusionOp { mul, add, concat };

/// One residual block. RB is the preactivation block
/// BN-ReLU-Conv-BN-ReLU-Conv with an identity skip (1x1 projection when the
/// channel count changes); MRB drops the initial BN.
struct BlockSpec {
  BlockKind kind = BlockKind::rb;
  int filters = 64;
  int kernel = 3;
  ConvKind conv = ConvKind::standard;
};

/// A single subnet: input conv + ReLU, a block chain, and (for nets that
/// emit soft bits) an output conv whose filter count equals the bits per
/// symbol. Support nets set output_bits = 0.
struct NetSpec {
  int in_channels = 6;
  int input_filters = 64;
  std::vector<BlockSpec> blocks;
  int output_bits = 6;
  int kernel = 3;
};

/// Where a support net's activations enter the main net: after main block
/// `main_block`, combining with support `support_id`'s current activation
/// via `op`, followed by a normalization layer.
struct FusionPoint {
  int main_block = 0;
  int support_id = 0;
  FusionOp op = FusionOp::mul;
  NormKind norm = NormKind::batch;
};

struct CoNetSpec {
  NetSpec main;
  std::vector<NetSpec> supports;
  std::vector<FusionPoint> fusion;
  bool bidirectional = false;

  void validate() const;
};

struct ParamReport {
  int64_t total_learnable = 0;
  std::vector<std::pair<std::string, int64_t>> breakdown;
  int sequential_conv_depth = 0;
};

// ---------------------------------------------------------------------------
// Canonical templates. DeepRx: input conv + RB chain + output conv. CoNet:
// main + support MRB chains with a fusion point after every main block
// (restricted to `fusion_points` when given).
// ---------------------------------------------------------------------------

NetSpec deeprx_template(int width, int blocks, int in_channels, int bits,
                        ConvKind conv = ConvKind::standard, int kernel = 3);

CoNetSpec conet_template(int width, int main_blocks, const std::vector<int>& support_blocks, FusionOp op,
                         NormKind norm, bool bidirectional, int in_channels, int bits,
                         ConvKind conv = ConvKind::standard, int kernel = 3,
                         const std::vector<int>& fusion_points = {});

/// Parsed form of the network-spec file (JSON). Holds the template family
/// and its knobs so the filter-width solver can rescale it.
struct SpecFile {
  std::string family = "deeprx";  // "deeprx" | "conet"
  int width = 64;
  int blocks = 4;                     // deeprx chain length
  int main_blocks = 4;                // conet
  std::vector<int> support_blocks = {4};
  ConvKind conv = ConvKind::standard;
  int kernel = 3;
  FusionOp fusion_op = FusionOp::mul;
  NormKind fusion_norm = NormKind::batch;
  std::vector<int> fusion_points;     // empty: after every block
  bool bidirectional = false;
  int in_channels = 6;
  int bits = 6;
  int64_t target_params = 0;          // >0: solve width for this budget

  bool is_conet() const { return family == "conet"; }
  NetSpec to_deeprx() const;
  CoNetSpec to_conet() const;
  SpecFile with_width(int w) const {
    SpecFile c = *this;
    c.width = w;
    return c;
  }
};

SpecFile parse_spec_file_json(const std::string& text);
SpecFile load_spec_file(const std::string& path);
std::string spec_file_to_json(const SpecFile& spec);

const char* to_string(FusionOp op);
const char* to_string(NormKind k);
const char* to_string(ConvKind k);

}  // namespace conetrx
