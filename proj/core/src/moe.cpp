#include "mmpipe/moe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mmpipe/errors.hpp"

namespace mmpipe::moe {

namespace {

std::vector<double> softmax_row(const std::vector<double>& logits) {
  double max_logit = -std::numeric_limits<double>::infinity();
  for (const double v : logits) max_logit = std::max(max_logit, v);
  std::vector<double> p(logits.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - max_logit);
    denom += p[i];
  }
  for (double& v : p) v /= denom;
  return p;
}

void check_finite(const LogitMatrix& logits) {
  if (logits.empty() || logits.front().empty()) {
    throw InvalidParams("logit matrix must be non-empty");
  }
  const std::size_t e = logits.front().size();
  for (const auto& row : logits) {
    if (row.size() != e) throw InvalidParams("ragged logit matrix");
    for (const double v : row) {
      if (!std::isfinite(v)) throw NonFinite("logits contain NaN or Inf");
    }
  }
}

}  // namespace

RouterOutput route_topk(const LogitMatrix& logits, int k) {
  check_finite(logits);
  const int num_experts = static_cast<int>(logits.front().size());
  if (k < 1 || k > num_experts) {
    throw InvalidParams("k must lie in [1, num_experts]");
  }
  const auto t_count = logits.size();

  RouterOutput out;
  out.tokens.reserve(t_count);
  out.dispatch_fraction.assign(static_cast<std::size_t>(num_experts), 0.0);
  out.mean_gate_prob.assign(static_cast<std::size_t>(num_experts), 0.0);

  for (const auto& row : logits) {
    const std::vector<double> p = softmax_row(row);
    for (int e = 0; e < num_experts; ++e) {
      out.mean_gate_prob[static_cast<std::size_t>(e)] +=
          p[static_cast<std::size_t>(e)];
    }

    // Sort expert indices by probability desc, lower index first on ties.
    std::vector<int> order(static_cast<std::size_t>(num_experts));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return p[static_cast<std::size_t>(a)] > p[static_cast<std::size_t>(b)];
    });

    TokenRoute route;
    double selected_mass = 0.0;
    for (int r = 0; r < k; ++r) {
      route.experts.push_back(order[static_cast<std::size_t>(r)]);
      selected_mass += p[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
    }
    for (const int e : route.experts) {
      route.weights.push_back(p[static_cast<std::size_t>(e)] / selected_mass);
      out.dispatch_fraction[static_cast<std::size_t>(e)] += 1.0;
    }
    out.tokens.push_back(std::move(route));
  }

  const double slot_norm = 1.0 / (static_cast<double>(k) *
                                  static_cast<double>(t_count));
  for (double& f : out.dispatch_fraction) f *= slot_norm;
  for (double& m : out.mean_gate_prob) m /= static_cast<double>(t_count);
  return out;
}

AuxLoss load_balance_loss(const RouterOutput& out, double coeff) {
  const int e = out.num_experts();
  if (e == 0) throw InvalidParams("empty router output");
  double dot = 0.0;
  for (int i = 0; i < e; ++i) {
    dot += out.dispatch_fraction[static_cast<std::size_t>(i)] *
           out.mean_gate_prob[static_cast<std::size_t>(i)];
  }
  const double raw = static_cast<double>(e) * dot;
  return {raw, coeff * raw};
}

AuxLoss router_z_loss(const LogitMatrix& logits, double coeff) {
  check_finite(logits);
  double total = 0.0;
  for (const auto& row : logits) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (const double v : row) max_logit = std::max(max_logit, v);
    double sum = 0.0;
    for (const double v : row) sum += std::exp(v - max_logit);
    const double lse = max_logit + std::log(sum);
    total += lse * lse;
  }
  const double raw = total / static_cast<double>(logits.size());
  return {raw, coeff * raw};
}

std::vector<int> plan_layers(int num_layers, int every_n) {
  if (num_layers < 1 || every_n < 1) {
    throw InvalidParams("num_layers and every_n must be >= 1");
  }
  std::vector<int> converted;
  for (int i = every_n - 1; i < num_layers; i += every_n) {
    converted.push_back(i);
  }
  return converted;
}

ParamEstimate estimate_params(const ModelDims& dims, const MoEConfig& cfg) {
  if (dims.d_model <= 0 || dims.d_ff <= 0 || dims.num_layers <= 0 ||
      dims.attn_params_per_layer < 0 || dims.embed_params < 0) {
    throw InvalidParams("model dims must be positive");
  }
  if (cfg.num_experts < 1) throw InvalidParams("num_experts must be >= 1");

  const std::int64_t ffn_per_layer =
      2 * dims.d_model * dims.d_ff +
      (dims.ffn_bias ? dims.d_ff + dims.d_model : 0);
  const std::int64_t gate_per_layer =
      static_cast<std::int64_t>(cfg.num_experts) * dims.d_model;

  ParamEstimate est;
  est.converted_layers = plan_layers(dims.num_layers, cfg.every_n_layers);

  est.dense_total = dims.embed_params;
  for (int layer = 0; layer < dims.num_layers; ++layer) {
    est.dense_total += dims.attn_params_per_layer + ffn_per_layer;
  }

  est.moe_total = est.dense_total;
  std::size_t next_converted = 0;
  for (int layer = 0; layer < dims.num_layers; ++layer) {
    LayerParams lp;
    lp.layer = layer;
    lp.attn = dims.attn_params_per_layer;
    lp.ffn = ffn_per_layer;
    if (next_converted < est.converted_layers.size() &&
        est.converted_layers[next_converted] == layer) {
      ++next_converted;
      lp.sparse = true;
      lp.ffn = ffn_per_layer * cfg.num_experts;
      lp.gate = gate_per_layer;
      est.moe_total += (cfg.num_experts - 1) * ffn_per_layer + gate_per_layer;
    }
    est.breakdown.push_back(lp);
  }
  return est;
}

}  // namespace mmpipe::moe
