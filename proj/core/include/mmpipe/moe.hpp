#pragma once

#include <cstdint>
#include <vector>

// Mixture-of-experts routing math: top-k gating with renormalized combine
// weights, the load-balance and router z auxiliary losses, sparse-layer
// placement, and dense-to-MoE parameter estimation. Forward math only; no
// training, capacity factors, or token dropping.

namespace mmpipe::moe {

struct MoEConfig {
  int num_experts = 64;
  int top_k = 2;
  int every_n_layers = 2;
  double lb_coeff = 0.01;
  double z_coeff = 0.001;
};

using LogitMatrix = std::vector<std::vector<double>>;  // T x E

struct TokenRoute {
  std::vector<int> experts;     // k indices, ascending by gate rank
  std::vector<double> weights;  // renormalized top-k probabilities, sum 1
};

struct RouterOutput {
  std::vector<TokenRoute> tokens;
  std::vector<double> dispatch_fraction;  // f: per-expert share of slots
  std::vector<double> mean_gate_prob;     // P: per-expert mean softmax prob

  int num_experts() const { return static_cast<int>(dispatch_fraction.size()); }
};

/// Full softmax per token, then the k largest probabilities (ties broken by
/// lower expert index) renormalized to sum 1. f_i counts both assignments of
/// a token, normalized by k*T. Throws NonFinite on NaN/Inf logits.
RouterOutput route_topk(const LogitMatrix& logits, int k);

struct AuxLoss {
  double raw = 0.0;
  double scaled = 0.0;
};

/// raw = E * sum_i f_i * P_i; exactly 1.0 under perfect balance.
AuxLoss load_balance_loss(const RouterOutput& out, double coeff = 0.01);

/// raw = mean over tokens of logsumexp(logits_t)^2.
AuxLoss router_z_loss(const LogitMatrix& logits, double coeff = 0.001);

/// Zero-based indices of layers converted to sparse: the last layer of each
/// group of every_n (index % every_n == every_n - 1).
std::vector<int> plan_layers(int num_layers, int every_n);

struct ModelDims {
  std::int64_t d_model = 0;
  std::int64_t d_ff = 0;
  int num_layers = 0;
  std::int64_t attn_params_per_layer = 0;
  std::int64_t embed_params = 0;
  bool ffn_bias = false;
};

struct LayerParams {
  int layer = 0;
  bool sparse = false;
  std::int64_t attn = 0;
  std::int64_t ffn = 0;   // all experts
  std::int64_t gate = 0;  // router linear, E * d_model
};

struct ParamEstimate {
  std::int64_t dense_total = 0;
  std::int64_t moe_total = 0;
  std::vector<int> converted_layers;
  std::vector<LayerParams> breakdown;
};

/// ffn_per_layer = 2 * d_model * d_ff (+ biases when configured); converting
/// a layer adds (E-1) expert copies plus an E x d_model gate.
ParamEstimate estimate_params(const ModelDims& dims, const MoEConfig& cfg);

}  // namespace mmpipe::moe
