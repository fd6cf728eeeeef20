#pragma once

#include <functional>
#include <future>
#include <map>
#include <string>
#include <vector>

#include "conetrx/kernels.hpp"
#include "conetrx/netspec.hpp"
#include "conetrx/norms.hpp"
#include "conetrx/rng.hpp"
#include "conetrx/tensor.hpp"

namespace conetrx {

enum class LayerOp { input, conv, dwconv, relu, batch_norm, layer_norm, add, mul, concat };

struct GraphNode {
  LayerOp op{};
  int in0 = -1, in1 = -1;
  int w = -1, b = -1;                                // conv tensors
  int gamma = -1, beta = -1, rmean = -1, rvar = -1;  // norm tensors
  int bn_flag = -1;
  int out_channels = 0;
};

template <typename T>
struct NamedParam {
  std::string name;
  Tensor<T> value;
  bool learnable = true;
};

template <typename T>
struct ForwardCache {
  std::vector<Tensor<T>> out;
  std::vector<NormStats<T>> stats;
};

/// Fixed-vocabulary layer graph with analytic backward. Nodes are appended
/// in topological order by the builders; forward walks them in order and
/// backward in reverse, accumulating parameter gradients. No taping — the
/// graph is static after construction.
template <typename T>
class Network {
 public:
  // -- construction -----------------------------------------------------
  int add_input(int channels) {
    require(input_node_ < 0, "network already has an input node");
    input_node_ = push(GraphNode{LayerOp::input, -1, -1, -1, -1, -1, -1, -1, -1, -1, channels});
    in_channels_ = channels;
    return input_node_;
  }

  int add_conv(int in, const std::string& name, int kernel, int cin, int cout, bool bias) {
    check_in(in, cin);
    GraphNode n{LayerOp::conv, in, -1, -1, -1, -1, -1, -1, -1, -1, cout};
    n.w = push_param(name + ".w", Tensor<T>({kernel, kernel, cin, cout}), true);
    if (bias) n.b = push_param(name + ".b", Tensor<T>({cout}), true);
    return push(n);
  }

  int add_dwconv(int in, const std::string& name, int kernel, int c, bool bias) {
    check_in(in, c);
    GraphNode n{LayerOp::dwconv, in, -1, -1, -1, -1, -1, -1, -1, -1, c};
    n.w = push_param(name + ".w", Tensor<T>({kernel, kernel, c, 1}), true);
    if (bias) n.b = push_param(name + ".b", Tensor<T>({c}), true);
    return push(n);
  }

  int add_relu(int in) {
    GraphNode n{LayerOp::relu, in, -1, -1, -1, -1, -1, -1, -1, -1, nodes_[static_cast<size_t>(in)].out_channels};
    return push(n);
  }

  int add_norm(int in, NormKind kind, const std::string& name, int channels) {
    check_in(in, channels);
    GraphNode n{};
    n.op = kind == NormKind::batch ? LayerOp::batch_norm : LayerOp::layer_norm;
    n.in0 = in;
    n.out_channels = channels;
    n.gamma = push_param(name + ".g", Tensor<T>({channels}, T(1)), true);
    n.beta = push_param(name + ".s", Tensor<T>({channels}), true);
    if (kind == NormKind::batch) {
      n.rmean = push_param(name + ".rm", Tensor<T>({channels}), false);
      n.rvar = push_param(name + ".rv", Tensor<T>({channels}, T(1)), false);
      n.bn_flag = static_cast<int>(bn_ready_.size());
      bn_ready_.push_back(0);
      bn_flag_names_.push_back(name + ".rm");
    }
    return push(n);
  }

  int add_binary(LayerOp op, int a, int b) {
    require(op == LayerOp::add || op == LayerOp::mul, "add_binary takes add or mul");
    int ca = nodes_[static_cast<size_t>(a)].out_channels;
    int cb = nodes_[static_cast<size_t>(b)].out_channels;
    require(ca == cb, "elementwise fusion requires equal channel counts, got " + std::to_string(ca) + " and " +
                          std::to_string(cb));
    GraphNode n{op, a, b, -1, -1, -1, -1, -1, -1, -1, ca};
    return push(n);
  }

  int add_concat(int a, int b) {
    int ca = nodes_[static_cast<size_t>(a)].out_channels;
    int cb = nodes_[static_cast<size_t>(b)].out_channels;
    GraphNode n{LayerOp::concat, a, b, -1, -1, -1, -1, -1, -1, -1, ca + cb};
    return push(n);
  }

  void set_output(int node) { output_node_ = node; }

  // -- parameters --------------------------------------------------------
  void init_params(Rng& rng) {
    for (size_t i = 0; i < params_.size(); ++i) {
      // Conv weights: fan-in-scaled uniform. Everything else keeps its
      // construction value (bias/shift 0, gain 1, running stats 0/1).
      const GraphNode* owner = weight_owner(static_cast<int>(i));
      if (owner == nullptr) continue;
      Tensor<T>& w = params_[i].value;
      int64_t fan_in = owner->op == LayerOp::conv ? w.dim(0) * w.dim(1) * w.dim(2) : w.dim(0) * w.dim(1);
      double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      for (auto& v : w.vec()) v = static_cast<T>(rng.uniform(-bound, bound));
    }
    for (auto& f : bn_ready_) f = 0;
  }

  /// Marks every batch norm as ready with identity statistics. Lets an
  /// untrained network run in eval mode (benchmarks, shape tests).
  void seed_norm_stats() {
    for (auto& node : nodes_) {
      if (node.op != LayerOp::batch_norm) continue;
      params_[static_cast<size_t>(node.rmean)].value.fill(T(0));
      params_[static_cast<size_t>(node.rvar)].value.fill(T(1));
      bn_ready_[static_cast<size_t>(node.bn_flag)] = 1;
    }
  }

  std::vector<NamedParam<T>>& params() { return params_; }
  const std::vector<NamedParam<T>>& params() const { return params_; }
  std::vector<Tensor<T>>& grads() { return grads_; }

  int find_param(const std::string& name) const {
    for (size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name == name) return static_cast<int>(i);
    return -1;
  }

  void zero_grads() {
    grads_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
      if (!grads_[i].same_shape(params_[i].value)) grads_[i] = Tensor<T>::zeros_like(params_[i].value);
      else grads_[i].fill(T(0));
    }
  }

  // -- execution -----------------------------------------------------------
  /// Node overrides replace a node's computed output with a constant fill;
  /// used to force support activations to ones/zeros in fusion-identity
  /// checks.
  Tensor<T> forward(const Tensor<T>& x, NormMode mode, ForwardCache<T>* cache = nullptr,
                    const std::map<int, T>* overrides = nullptr) {
    require(output_node_ >= 0 && input_node_ >= 0, "network has no input/output");
    require(act_dims(x).c == in_channels_, "network expects " + std::to_string(in_channels_) +
                                               " input channels, got " + x.shape_str());
    ForwardCache<T> local;
    ForwardCache<T>& c = cache != nullptr ? *cache : local;
    c.out.assign(nodes_.size(), Tensor<T>());
    c.stats.assign(nodes_.size(), NormStats<T>());
    c.out[static_cast<size_t>(input_node_)] = x;
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
      if (i != input_node_) compute_node(i, c, mode);
      if (overrides != nullptr) {
        auto it = overrides->find(i);
        if (it != overrides->end()) c.out[static_cast<size_t>(i)].fill(it->second);
      }
    }
    return c.out[static_cast<size_t>(output_node_)];
  }

  /// Stage-parallel forward: main and support block subgraphs of the same
  /// stage run concurrently. Eval mode only (train-mode batch norm mutates
  /// running statistics). Falls back to sequential execution when no stage
  /// metadata is present.
  Tensor<T> forward_concurrent(const Tensor<T>& x, NormMode mode) {
    require(mode == NormMode::eval, "concurrent forward is eval-mode only");
    if (stage_ranges.empty()) return forward(x, mode);
    ForwardCache<T> c;
    c.out.assign(nodes_.size(), Tensor<T>());
    c.stats.assign(nodes_.size(), NormStats<T>());
    c.out[static_cast<size_t>(input_node_)] = x;
    int next = 0;
    auto run_range = [&](int b, int e) {
      for (int i = b; i < e; ++i)
        if (i != input_node_) compute_node(i, c, mode);
    };
    for (const auto& st : stage_ranges) {
      run_range(next, st.a_begin);
      if (st.a_end > st.a_begin && st.b_end > st.b_begin) {
        auto fut = std::async(std::launch::async, [&] { run_range(st.a_begin, st.a_end); });
        run_range(st.b_begin, st.b_end);
        fut.get();
      } else {
        run_range(st.a_begin, st.b_end);
      }
      run_range(st.b_end, st.tail_end);
      next = st.tail_end;
    }
    run_range(next, static_cast<int>(nodes_.size()));
    return c.out[static_cast<size_t>(output_node_)];
  }

  /// Reverse pass. Accumulates parameter gradients (call zero_grads first)
  /// and returns the gradient with respect to the network input.
  Tensor<T> backward(const Tensor<T>& dout, const ForwardCache<T>& cache) {
    require(output_node_ >= 0, "network has no output");
    if (grads_.size() != params_.size()) zero_grads();
    std::vector<Tensor<T>> gbuf(nodes_.size());
    gbuf[static_cast<size_t>(output_node_)] = dout;

    auto accumulate = [&](int node, Tensor<T>&& g) {
      Tensor<T>& slot = gbuf[static_cast<size_t>(node)];
      if (slot.numel() == 0) {
        slot = std::move(g);
        return;
      }
      T* d = slot.data();
      const T* s = g.data();
      for (int64_t i = 0; i < slot.numel(); ++i) d[i] += s[i];
    };
    auto add_param_grad = [&](int pidx, const Tensor<T>& g) {
      T* d = grads_[static_cast<size_t>(pidx)].data();
      const T* s = g.data();
      for (int64_t i = 0; i < g.numel(); ++i) d[i] += s[i];
    };

    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      const GraphNode& n = nodes_[static_cast<size_t>(i)];
      if (n.op == LayerOp::input) continue;
      Tensor<T>& g = gbuf[static_cast<size_t>(i)];
      if (g.numel() == 0) continue;  // node does not influence the output
      const Tensor<T>& in0 = cache.out[static_cast<size_t>(n.in0)];
      switch (n.op) {
        case LayerOp::conv: {
          auto cg = conv2d_backward(in0, params_[static_cast<size_t>(n.w)].value, n.b >= 0, g);
          add_param_grad(n.w, cg.dweight);
          if (n.b >= 0) add_param_grad(n.b, *cg.dbias);
          accumulate(n.in0, std::move(cg.dinput));
          break;
        }
        case LayerOp::dwconv: {
          auto cg = depthwise_conv2d_backward(in0, params_[static_cast<size_t>(n.w)].value, n.b >= 0, g);
          add_param_grad(n.w, cg.dweight);
          if (n.b >= 0) add_param_grad(n.b, *cg.dbias);
          accumulate(n.in0, std::move(cg.dinput));
          break;
        }
        case LayerOp::relu:
          accumulate(n.in0, relu_backward(in0, g));
          break;
        case LayerOp::batch_norm: {
          auto ng = batch_norm_backward(in0, params_[static_cast<size_t>(n.gamma)].value,
                                        cache.stats[static_cast<size_t>(i)], bn_eps_, g);
          add_param_grad(n.gamma, ng.dgamma);
          add_param_grad(n.beta, ng.dbeta);
          accumulate(n.in0, std::move(ng.dx));
          break;
        }
        case LayerOp::layer_norm: {
          auto ng = layer_norm_backward(in0, params_[static_cast<size_t>(n.gamma)].value,
                                        cache.stats[static_cast<size_t>(i)], ln_eps_, g);
          add_param_grad(n.gamma, ng.dgamma);
          add_param_grad(n.beta, ng.dbeta);
          accumulate(n.in0, std::move(ng.dx));
          break;
        }
        case LayerOp::add: {
          accumulate(n.in1, Tensor<T>(g));
          accumulate(n.in0, std::move(Tensor<T>(g)));
          break;
        }
        case LayerOp::mul: {
          auto bg = elementwise_backward(EwOp::mul, in0, cache.out[static_cast<size_t>(n.in1)], g);
          accumulate(n.in0, std::move(bg.da));
          accumulate(n.in1, std::move(bg.db));
          break;
        }
        case LayerOp::concat: {
          auto bg = concat_channels_backward(in0, cache.out[static_cast<size_t>(n.in1)], g);
          accumulate(n.in0, std::move(bg.da));
          accumulate(n.in1, std::move(bg.db));
          break;
        }
        case LayerOp::input:
          break;
      }
    }
    Tensor<T>& din = gbuf[static_cast<size_t>(input_node_)];
    if (din.numel() == 0) din = Tensor<T>::zeros_like(cache.out[static_cast<size_t>(input_node_)]);
    return din;
  }

  // -- reports ---------------------------------------------------------------
  int64_t learnable_count() const {
    int64_t n = 0;
    for (const auto& p : params_)
      if (p.learnable) n += p.value.numel();
    return n;
  }

  std::vector<std::pair<std::string, int64_t>> breakdown() const {
    std::vector<std::pair<std::string, int64_t>> out;
    for (const auto& p : params_)
      if (p.learnable) out.emplace_back(p.name, p.value.numel());
    return out;
  }

  /// Longest chain of convolution layers on any input-to-output path.
  int conv_depth() const {
    std::vector<int> d(nodes_.size(), 0);
    for (size_t i = 0; i < nodes_.size(); ++i) {
      const GraphNode& n = nodes_[i];
      int best = 0;
      if (n.in0 >= 0) best = std::max(best, d[static_cast<size_t>(n.in0)]);
      if (n.in1 >= 0) best = std::max(best, d[static_cast<size_t>(n.in1)]);
      d[i] = best + ((n.op == LayerOp::conv || n.op == LayerOp::dwconv) ? 1 : 0);
    }
    return d[static_cast<size_t>(output_node_)];
  }

  int input_channels() const { return in_channels_; }
  int output_channels() const { return nodes_[static_cast<size_t>(output_node_)].out_channels; }
  int n_nodes() const { return static_cast<int>(nodes_.size()); }
  const std::vector<GraphNode>& nodes() const { return nodes_; }

  std::vector<uint8_t>& bn_ready() { return bn_ready_; }
  const std::vector<std::string>& bn_flag_names() const { return bn_flag_names_; }

  // CoNet metadata (filled by build_conet).
  struct FusionMeta {
    int fused_node = -1;
    int support_operand_node = -1;
    int norm_node = -1;
  };
  std::vector<FusionMeta> fusion_meta;

  struct StageRanges {
    int a_begin = 0, a_end = 0;  // support blocks of this stage
    int b_begin = 0, b_end = 0;  // main block of this stage
    int tail_end = 0;            // fusion nodes
  };
  std::vector<StageRanges> stage_ranges;

 private:
  int push(GraphNode n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int push_param(std::string name, Tensor<T> t, bool learnable) {
    require(find_param(name) < 0, "duplicate parameter name " + name);
    params_.push_back(NamedParam<T>{std::move(name), std::move(t), learnable});
    return static_cast<int>(params_.size()) - 1;
  }

  void check_in(int in, int expected_channels) {
    require(in >= 0 && in < static_cast<int>(nodes_.size()), "bad input node index");
    int have = nodes_[static_cast<size_t>(in)].out_channels;
    require(have == expected_channels, "layer expects " + std::to_string(expected_channels) +
                                           " input channels but upstream node provides " + std::to_string(have));
  }

  const GraphNode* weight_owner(int pidx) const {
    for (const auto& n : nodes_)
      if (n.w == pidx) return &n;
    return nullptr;
  }

  void compute_node(int i, ForwardCache<T>& c, NormMode mode) {
    GraphNode& n = nodes_[static_cast<size_t>(i)];
    const Tensor<T>& a = c.out[static_cast<size_t>(n.in0)];
    Tensor<T>& out = c.out[static_cast<size_t>(i)];
    switch (n.op) {
      case LayerOp::conv:
        out = conv2d(a, params_[static_cast<size_t>(n.w)].value,
                     n.b >= 0 ? &params_[static_cast<size_t>(n.b)].value : nullptr);
        break;
      case LayerOp::dwconv:
        out = depthwise_conv2d(a, params_[static_cast<size_t>(n.w)].value,
                               n.b >= 0 ? &params_[static_cast<size_t>(n.b)].value : nullptr);
        break;
      case LayerOp::relu:
        out = relu(a);
        break;
      case LayerOp::batch_norm: {
        bool ready = bn_ready_[static_cast<size_t>(n.bn_flag)] != 0;
        out = batch_norm(a, params_[static_cast<size_t>(n.gamma)].value, params_[static_cast<size_t>(n.beta)].value,
                         params_[static_cast<size_t>(n.rmean)].value, params_[static_cast<size_t>(n.rvar)].value,
                         ready, mode, bn_eps_, bn_momentum_, &c.stats[static_cast<size_t>(i)]);
        bn_ready_[static_cast<size_t>(n.bn_flag)] = ready ? 1 : 0;
        break;
      }
      case LayerOp::layer_norm:
        out = layer_norm(a, params_[static_cast<size_t>(n.gamma)].value, params_[static_cast<size_t>(n.beta)].value,
                         ln_eps_, &c.stats[static_cast<size_t>(i)]);
        break;
      case LayerOp::add:
        out = elementwise(EwOp::add, a, c.out[static_cast<size_t>(n.in1)]);
        break;
      case LayerOp::mul:
        out = elementwise(EwOp::mul, a, c.out[static_cast<size_t>(n.in1)]);
        break;
      case LayerOp::concat:
        out = concat_channels(a, c.out[static_cast<size_t>(n.in1)]);
        break;
      case LayerOp::input:
        break;
    }
  }

  std::vector<GraphNode> nodes_;
  std::vector<NamedParam<T>> params_;
  std::vector<Tensor<T>> grads_;
  std::vector<uint8_t> bn_ready_;
  std::vector<std::string> bn_flag_names_;
  int input_node_ = -1, output_node_ = -1;
  int in_channels_ = 0;
  double bn_eps_ = 1e-5;
  double bn_momentum_ = 0.99;
  double ln_eps_ = 1e-5;
};

// ---------------------------------------------------------------------------
// Builders.
// ---------------------------------------------------------------------------

namespace detail {

/// A conv stage honoring the bias convention: no bias when the stage is
/// immediately followed by a batch norm. Depthwise-separable stages emit a
/// depthwise node plus a 1x1 pointwise conv (two conv layers on the path).
template <typename T>
int conv_stage(Network<T>& net, int in, const std::string& name, int kernel, int cin, int cout, bool bias,
               ConvKind kind) {
  if (kind == ConvKind::standard) return net.add_conv(in, name, kernel, cin, cout, bias);
  int dw = net.add_dwconv(in, name + ".dw", kernel, cin, bias);
  return net.add_conv(dw, name + ".pw", 1, cin, cout, bias);
}

template <typename T>
void append_block(Network<T>& net, int& cur, int& cur_ch, const BlockSpec& blk, const std::string& prefix) {
  const int f = blk.filters;
  int pre = cur;
  int t = cur;
  if (blk.kind == BlockKind::rb) t = net.add_norm(t, NormKind::batch, prefix + ".n1", cur_ch);
  t = net.add_relu(t);
  t = conv_stage(net, t, prefix + ".c1", blk.kernel, cur_ch, f, /*bias=*/false, blk.conv);
  t = net.add_norm(t, NormKind::batch, prefix + ".n2", f);
  t = net.add_relu(t);
  t = conv_stage(net, t, prefix + ".c2", blk.kernel, f, f, /*bias=*/true, blk.conv);
  int skip = cur_ch == f ? pre : net.add_conv(pre, prefix + ".proj", 1, cur_ch, f, /*bias=*/true);
  cur = net.add_binary(LayerOp::add, t, skip);
  cur_ch = f;
}

}  // namespace detail

/// Single-subnet network (DeepRx baseline and fusion-identity references).
template <typename T>
Network<T> build_net(const NetSpec& spec, const std::string& prefix = "main") {
  require(!spec.blocks.empty(), "net spec needs at least one block");
  Network<T> net;
  int in = net.add_input(spec.in_channels);
  int cur = net.add_relu(net.add_conv(in, prefix + ".in", spec.kernel, spec.in_channels, spec.input_filters, true));
  int ch = spec.input_filters;
  for (size_t k = 0; k < spec.blocks.size(); ++k)
    detail::append_block(net, cur, ch, spec.blocks[k], prefix + ".b" + std::to_string(k));
  require(spec.output_bits > 0, "top-level net needs an output conv (output_bits > 0)");
  int out = net.add_conv(cur, prefix + ".out", spec.kernel, ch, spec.output_bits, true);
  net.set_output(out);
  return net;
}

/// CoNet: main + support subnets over a shared input, fused per spec. Every
/// fusion is main-block-output (x) support-activation -> op -> norm; the
/// support activation itself continues unchanged (two inputs, two outputs
/// per component). Bidirectional mode adds the previous stage's main output
/// into the next support block's input.
template <typename T>
Network<T> build_conet(const CoNetSpec& spec) {
  spec.validate();
  const int m_count = static_cast<int>(spec.supports.size());
  Network<T> net;
  int in = net.add_input(spec.main.in_channels);
  int mcur =
      net.add_relu(net.add_conv(in, "main.in", spec.main.kernel, spec.main.in_channels, spec.main.input_filters, true));
  int mch = spec.main.input_filters;
  std::vector<int> scur(static_cast<size_t>(m_count)), sch(static_cast<size_t>(m_count));
  for (int m = 0; m < m_count; ++m) {
    const NetSpec& s = spec.supports[static_cast<size_t>(m)];
    scur[static_cast<size_t>(m)] =
        net.add_relu(net.add_conv(in, "sup" + std::to_string(m) + ".in", s.kernel, s.in_channels, s.input_filters, true));
    sch[static_cast<size_t>(m)] = s.input_filters;
  }

  size_t max_stages = spec.main.blocks.size();
  for (const auto& s : spec.supports) max_stages = std::max(max_stages, s.blocks.size());

  int prev_main_out = -1;
  for (size_t k = 0; k < max_stages; ++k) {
    typename Network<T>::StageRanges st;
    st.a_begin = net.n_nodes();
    for (int m = 0; m < m_count; ++m) {
      const NetSpec& s = spec.supports[static_cast<size_t>(m)];
      if (k >= s.blocks.size()) continue;
      int sin = scur[static_cast<size_t>(m)];
      if (spec.bidirectional && prev_main_out >= 0) {
        require(sch[static_cast<size_t>(m)] == mch,
                "bidirectional feedback needs equal main/support channels at stage " + std::to_string(k));
        sin = net.add_binary(LayerOp::add, sin, prev_main_out);
      }
      int ch = sch[static_cast<size_t>(m)];
      detail::append_block(net, sin, ch, s.blocks[k], "sup" + std::to_string(m) + ".b" + std::to_string(k));
      scur[static_cast<size_t>(m)] = sin;
      sch[static_cast<size_t>(m)] = ch;
    }
    st.a_end = net.n_nodes();
    st.b_begin = st.a_end;
    if (k < spec.main.blocks.size())
      detail::append_block(net, mcur, mch, spec.main.blocks[k], "main.b" + std::to_string(k));
    st.b_end = net.n_nodes();

    for (size_t fi = 0; fi < spec.fusion.size(); ++fi) {
      const FusionPoint& fp = spec.fusion[fi];
      if (fp.main_block != static_cast<int>(k)) continue;
      int operand = scur[static_cast<size_t>(fp.support_id)];
      int och = sch[static_cast<size_t>(fp.support_id)];
      std::string fname = "fuse" + std::to_string(fi);
      int fused;
      if (fp.op == FusionOp::concat) {
        require(och > 0, "fusion with uninitialized support");
        int cc = net.add_concat(mcur, operand);
        fused = net.add_conv(cc, fname + ".restore", 1, mch + och, mch, /*bias=*/false);
      } else {
        require(och == mch, "fusion point " + std::to_string(fi) + " needs equal channels, main " +
                                std::to_string(mch) + " vs support " + std::to_string(och));
        fused = net.add_binary(fp.op == FusionOp::mul ? LayerOp::mul : LayerOp::add, mcur, operand);
      }
      int norm = net.add_norm(fused, fp.norm, fname + ".n", mch);
      net.fusion_meta.push_back({fused, operand, norm});
      mcur = norm;
    }
    st.tail_end = net.n_nodes();
    net.stage_ranges.push_back(st);
    prev_main_out = mcur;
  }

  int out = net.add_conv(mcur, "main.out", spec.main.kernel, mch, spec.main.output_bits, true);
  net.set_output(out);
  return net;
}

/// The matched main-only reference: the CoNet's main path with the fusion
/// replaced by its norm layer alone. Parameter names coincide with the
/// CoNet's main-path subset so values can be copied across.
template <typename T>
Network<T> build_reference_main(const CoNetSpec& spec) {
  spec.validate();
  Network<T> net;
  int in = net.add_input(spec.main.in_channels);
  int cur =
      net.add_relu(net.add_conv(in, "main.in", spec.main.kernel, spec.main.in_channels, spec.main.input_filters, true));
  int ch = spec.main.input_filters;
  for (size_t k = 0; k < spec.main.blocks.size(); ++k) {
    detail::append_block(net, cur, ch, spec.main.blocks[k], "main.b" + std::to_string(k));
    for (size_t fi = 0; fi < spec.fusion.size(); ++fi) {
      const FusionPoint& fp = spec.fusion[fi];
      if (fp.main_block != static_cast<int>(k)) continue;
      require(fp.op != FusionOp::concat, "reference network is defined for mul/add fusion only");
      cur = net.add_norm(cur, fp.norm, "fuse" + std::to_string(fi) + ".n", ch);
    }
  }
  int out = net.add_conv(cur, "main.out", spec.main.kernel, ch, spec.main.output_bits, true);
  net.set_output(out);
  return net;
}

/// Copies every parameter of `dst` from the identically named parameter of
/// `src`. Missing names throw.
template <typename T>
void copy_params_by_name(Network<T>& dst, const Network<T>& src) {
  for (auto& p : dst.params()) {
    int idx = src.find_param(p.name);
    require(idx >= 0, "source network lacks parameter " + p.name);
    const auto& sp = src.params()[static_cast<size_t>(idx)];
    require(sp.value.same_shape(p.value), "parameter shape mismatch for " + p.name);
    p.value = sp.value;
  }
}

// ---------------------------------------------------------------------------
// Parameter reports and the filter-width solver.
// ---------------------------------------------------------------------------

ParamReport param_count(const NetSpec& spec);
ParamReport param_count(const CoNetSpec& spec);

struct SolveResult {
  bool found = false;
  int width = 0;
  int64_t params = 0;
  int lo_width = 0, hi_width = 0;
  int64_t lo_params = 0, hi_params = 0;
  std::string diagnostic;
};

/// Integer search over a monotone width -> parameter-count map. Returns the
/// width whose count lies within `tol` of `target`, or the two bracketing
/// widths with a diagnostic when no integer width reaches the tolerance.
SolveResult solve_filters(const std::function<int64_t(int)>& count_at_width, int64_t target, double tol = 0.01,
                          int max_width = 4096);

SolveResult solve_spec_width(const SpecFile& file, int64_t target, double tol = 0.01);

// Checkpoint io (single precision on disk).
void save_checkpoint(const Network<float>& net, const std::string& path);
void load_checkpoint(Network<float>& net, const std::string& path);

}  // namespace conetrx
