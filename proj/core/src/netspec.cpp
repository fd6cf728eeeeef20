#include "conetrx/netspec.hpp"

#include <fstream>
#include <sstream>

#include "conetrx/network.hpp"
#include "json.hpp"

namespace conetrx {

using nlohmann::json;

void CoNetSpec::validate() const {
  require(!supports.empty(), "conet spec needs at least one support net");
  require(!main.blocks.empty(), "conet main net needs at least one block");
  for (const auto& s : supports) {
    require(!s.blocks.empty(), "support net needs at least one block");
    require(s.in_channels == main.in_channels, "main and support nets share the input grid");
  }
  auto support_ch_at = [&](int id, int stage) {
    const auto& blocks = supports[static_cast<size_t>(id)].blocks;
    size_t k = std::min(static_cast<size_t>(stage), blocks.size() - 1);
    return blocks[k].filters;
  };
  for (size_t i = 0; i < fusion.size(); ++i) {
    const FusionPoint& fp = fusion[i];
    require(fp.main_block >= 0 && fp.main_block < static_cast<int>(main.blocks.size()),
            "fusion point " + std::to_string(i) + " references main block " + std::to_string(fp.main_block) +
                " outside [0," + std::to_string(main.blocks.size()) + ")");
    require(fp.support_id >= 0 && fp.support_id < static_cast<int>(supports.size()),
            "fusion point " + std::to_string(i) + " references unknown support net");
    if (fp.op != FusionOp::concat) {
      int mch = main.blocks[static_cast<size_t>(fp.main_block)].filters;
      int sch = support_ch_at(fp.support_id, fp.main_block);
      require(mch == sch, "fusion point " + std::to_string(i) + " (" + to_string(fp.op) +
                              ") requires equal channel counts, main " + std::to_string(mch) + " vs support " +
                              std::to_string(sch));
    }
  }
}

NetSpec deeprx_template(int width, int blocks, int in_channels, int bits, ConvKind conv, int kernel) {
  require(width >= 1 && blocks >= 1, "deeprx template needs width >= 1 and blocks >= 1");
  NetSpec spec;
  spec.in_channels = in_channels;
  spec.input_filters = width;
  spec.blocks.assign(static_cast<size_t>(blocks), BlockSpec{BlockKind::rb, width, kernel, conv});
  spec.output_bits = bits;
  spec.kernel = kernel;
  return spec;
}

CoNetSpec conet_template(int width, int main_blocks, const std::vector<int>& support_blocks, FusionOp op,
                         NormKind norm, bool bidirectional, int in_channels, int bits, ConvKind conv,
                         int kernel, const std::vector<int>& fusion_points) {
  require(width >= 1 && main_blocks >= 1 && !support_blocks.empty(), "bad conet template arguments");
  CoNetSpec spec;
  spec.main.in_channels = in_channels;
  spec.main.input_filters = width;
  spec.main.blocks.assign(static_cast<size_t>(main_blocks), BlockSpec{BlockKind::mrb, width, kernel, conv});
  spec.main.output_bits = bits;
  spec.main.kernel = kernel;
  for (int nb : support_blocks) {
    require(nb >= 1, "support net needs at least one block");
    NetSpec s;
    s.in_channels = in_channels;
    s.input_filters = width;
    s.blocks.assign(static_cast<size_t>(nb), BlockSpec{BlockKind::mrb, width, kernel, conv});
    s.output_bits = 0;
    s.kernel = kernel;
    spec.supports.push_back(std::move(s));
  }
  spec.bidirectional = bidirectional;
  std::vector<int> points = fusion_points;
  if (points.empty())
    for (int k = 0; k < main_blocks; ++k) points.push_back(k);
  for (int k : points)
    for (size_t m = 0; m < spec.supports.size(); ++m)
      spec.fusion.push_back(FusionPoint{k, static_cast<int>(m), op, norm});
  return spec;
}

// ---------------------------------------------------------------------------
// Reports and solver.
// ---------------------------------------------------------------------------

namespace {

ParamReport report_from(const Network<float>& net) {
  ParamReport rep;
  rep.breakdown = net.breakdown();
  for (const auto& [name, n] : rep.breakdown) rep.total_learnable += n;
  rep.sequential_conv_depth = net.conv_depth();
  return rep;
}

}  // namespace

ParamReport param_count(const NetSpec& spec) { return report_from(build_net<float>(spec)); }

ParamReport param_count(const CoNetSpec& spec) { return report_from(build_conet<float>(spec)); }

SolveResult solve_filters(const std::function<int64_t(int)>& count_at_width, int64_t target, double tol,
                          int max_width) {
  require(target > 0, "target parameter count must be positive");
  const int64_t at_min = count_at_width(1);
  require(target >= at_min, "target " + std::to_string(target) + " is below the minimal net (" +
                                std::to_string(at_min) + " params at width 1)");

  // Counts are monotone in width; bisect to the bracketing pair.
  int lo = 1, hi = max_width;
  if (count_at_width(hi) < target) {
    SolveResult r;
    r.diagnostic = "target " + std::to_string(target) + " exceeds the count at max width " +
                   std::to_string(max_width);
    return r;
  }
  while (hi - lo > 1) {
    int mid = lo + (hi - lo) / 2;
    if (count_at_width(mid) < target)
      lo = mid;
    else
      hi = mid;
  }

  SolveResult r;
  r.lo_width = lo;
  r.lo_params = count_at_width(lo);
  r.hi_width = hi;
  r.hi_params = count_at_width(hi);
  const double err_lo = std::abs(static_cast<double>(r.lo_params - target)) / static_cast<double>(target);
  const double err_hi = std::abs(static_cast<double>(r.hi_params - target)) / static_cast<double>(target);
  const double best = std::min(err_lo, err_hi);
  if (best <= tol) {
    r.found = true;
    r.width = err_lo <= err_hi ? r.lo_width : r.hi_width;
    r.params = err_lo <= err_hi ? r.lo_params : r.hi_params;
  } else {
    std::ostringstream os;
    os << "no integer width within " << tol * 100 << "% of " << target << ": width " << r.lo_width << " -> "
       << r.lo_params << " params, width " << r.hi_width << " -> " << r.hi_params << " params";
    r.diagnostic = os.str();
  }
  return r;
}

SolveResult solve_spec_width(const SpecFile& file, int64_t target, double tol) {
  auto count = [&file](int w) {
    SpecFile f = file.with_width(w);
    return f.is_conet() ? param_count(f.to_conet()).total_learnable : param_count(f.to_deeprx()).total_learnable;
  };
  return solve_filters(count, target, tol);
}

// ---------------------------------------------------------------------------
// Spec-file JSON.
// ---------------------------------------------------------------------------

const char* to_string(FusionOp op) {
  switch (op) {
    case FusionOp::mul: return "mul";
    case FusionOp::add: return "add";
    case FusionOp::concat: return "concat";
  }
  return "?";
}

const char* to_string(NormKind k) { return k == NormKind::batch ? "bn" : "ln"; }

const char* to_string(ConvKind k) { return k == ConvKind::standard ? "standard" : "depthwise"; }

namespace {

FusionOp fusion_op_from(const std::string& s) {
  if (s == "mul") return FusionOp::mul;
  if (s == "add") return FusionOp::add;
  if (s == "concat") return FusionOp::concat;
  throw std::invalid_argument("unknown fusion op '" + s + "' (expected mul|add|concat)");
}

NormKind norm_from(const std::string& s) {
  if (s == "bn") return NormKind::batch;
  if (s == "ln") return NormKind::layer;
  throw std::invalid_argument("unknown norm kind '" + s + "' (expected bn|ln)");
}

ConvKind conv_from(const std::string& s) {
  if (s == "standard") return ConvKind::standard;
  if (s == "depthwise") return ConvKind::depthwise_separable;
  throw std::invalid_argument("unknown conv kind '" + s + "' (expected standard|depthwise)");
}

}  // namespace

NetSpec SpecFile::to_deeprx() const { return deeprx_template(width, blocks, in_channels, bits, conv, kernel); }

CoNetSpec SpecFile::to_conet() const {
  return conet_template(width, main_blocks, support_blocks, fusion_op, fusion_norm, bidirectional, in_channels,
                        bits, conv, kernel, fusion_points);
}

SpecFile parse_spec_file_json(const std::string& text) {
  json j = json::parse(text);
  SpecFile f;
  f.family = j.value("template", "deeprx");
  require(f.family == "deeprx" || f.family == "conet", "spec template must be deeprx or conet");
  f.width = j.value("width", f.width);
  f.blocks = j.value("blocks", f.blocks);
  f.main_blocks = j.value("main_blocks", f.main_blocks);
  if (j.contains("support_blocks")) {
    f.support_blocks.clear();
    if (j["support_blocks"].is_array())
      for (const auto& v : j["support_blocks"]) f.support_blocks.push_back(v.get<int>());
    else
      f.support_blocks.push_back(j["support_blocks"].get<int>());
  }
  f.conv = conv_from(j.value("conv", "standard"));
  f.kernel = j.value("kernel", f.kernel);
  f.fusion_op = fusion_op_from(j.value("fusion_op", "mul"));
  f.fusion_norm = norm_from(j.value("fusion_norm", "bn"));
  if (j.contains("fusion_points"))
    for (const auto& v : j["fusion_points"]) f.fusion_points.push_back(v.get<int>());
  f.bidirectional = j.value("bidirectional", false);
  f.in_channels = j.value("in_channels", f.in_channels);
  f.bits = j.value("bits", f.bits);
  f.target_params = j.value("target_params", static_cast<int64_t>(0));
  return f;
}

SpecFile load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open net spec file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec_file_json(ss.str());
}

std::string spec_file_to_json(const SpecFile& f) {
  json j;
  j["template"] = f.family;
  j["width"] = f.width;
  if (f.is_conet()) {
    j["main_blocks"] = f.main_blocks;
    j["support_blocks"] = f.support_blocks;
    j["fusion_op"] = to_string(f.fusion_op);
    j["fusion_norm"] = to_string(f.fusion_norm);
    if (!f.fusion_points.empty()) j["fusion_points"] = f.fusion_points;
    j["bidirectional"] = f.bidirectional;
  } else {
    j["blocks"] = f.blocks;
  }
  j["conv"] = to_string(f.conv);
  j["kernel"] = f.kernel;
  j["in_channels"] = f.in_channels;
  j["bits"] = f.bits;
  if (f.target_params > 0) j["target_params"] = f.target_params;
  return j.dump(2);
}

}  // namespace conetrx
