#pragma once

// A small hyperbolic graph network of stacked residual blocks. For node i:
//   y_j  = HL_l(h_j^{l-1})                          (per node)
//   z_i  = centroid{ y_j : j in N(i) + {i} }         (optional aggregation)
//   h_i^l = [scale](h_i^{l-1} (+) z_i)
// trained with full-batch gradient descent on a synthetic hierarchy whose
// points are connected by a symmetric kNN graph. Logits are the first
// `classes` space-like components of h^L.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "grad.hpp"
#include "hl.hpp"
#include "lorentz.hpp"
#include "residual.hpp"

namespace lresnet {

enum class ResidualMethod { lresnet, pt, ts, sa, none };

inline const char* to_string(ResidualMethod m) noexcept {
  switch (m) {
    case ResidualMethod::lresnet: return "lresnet";
    case ResidualMethod::pt: return "pt";
    case ResidualMethod::ts: return "ts";
    case ResidualMethod::sa: return "sa";
    default: return "none";
  }
}

inline ResidualMethod parse_residual_method(const std::string& s) {
  if (s == "lresnet") return ResidualMethod::lresnet;
  if (s == "pt") return ResidualMethod::pt;
  if (s == "ts") return ResidualMethod::ts;
  if (s == "sa") return ResidualMethod::sa;
  if (s == "none") return ResidualMethod::none;
  throw error("unknown residual method '" + s + "'");
}

struct ResidualBlockConfig {
  ResidualMethod method = ResidualMethod::lresnet;
  ResidualWeights weights{1.0, 0.25};  // lresnet and ts only; w_y is the initial value
  std::optional<ScaleFactor> scale = ScaleFactor(2.0);
};

struct ResidualBlock {
  HLLayer layer;
  ResidualMethod method = ResidualMethod::lresnet;
  double w_x = 1.0;
  double w_y = 1.0;  // trained for lresnet
  std::optional<ScaleFactor> scale;
};

struct Net {
  Curvature curvature{-1.0};
  std::size_t dim = 0;
  std::size_t classes = 0;
  bool aggregate = true;
  std::vector<ResidualBlock> blocks;
};

struct NetConfig {
  std::size_t dim = 3;
  std::size_t classes = 3;
  std::size_t layers = 4;
  ResidualBlockConfig block;
  Activation activation = Activation::tanh;
  bool aggregate = true;
};

// HL weights N(0, 1/n_in); w_x, w_y and scale from the block config.
template <class Rng>
Net make_net(Rng& rng, Curvature k, const NetConfig& cfg) {
  if (cfg.classes < 1 || cfg.classes > cfg.dim) throw dimension_error("make_net: need 1 <= classes <= dim");
  Net net{k, cfg.dim, cfg.classes, cfg.aggregate, {}};
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    net.blocks.push_back(ResidualBlock{make_hl_layer(rng, cfg.dim, cfg.dim, cfg.activation), cfg.block.method,
                                       cfg.block.weights.w_x(), cfg.block.weights.w_y(), cfg.block.scale});
  }
  return net;
}

// Neighbour lists, excluding the node itself.
using Graph = std::vector<std::vector<std::size_t>>;

// Symmetric k-nearest-neighbour graph under the Lorentzian distance.
inline Graph knn_graph(const LorentzBatch<double>& pts, std::size_t k) {
  const std::size_t m = pts.rows();
  Graph g(m);
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < m; ++i) {
    d.clear();
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      const double v = 2.0 / pts.curvature().value() -
                       2.0 * detail::inner(pts.row_ptr(i), pts.row_ptr(j), pts.stride());
      d.emplace_back(v, j);
    }
    const std::size_t kk = std::min(k, d.size());
    std::partial_sort(d.begin(), d.begin() + kk, d.end());
    for (std::size_t t = 0; t < kk; ++t) {
      g[i].push_back(d[t].second);
      g[d[t].second].push_back(i);
    }
  }
  for (auto& nb : g) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return g;
}

struct ForwardTrace {
  // Index [l][i]: layer l (0 = input for h), node i.
  std::vector<std::vector<LorentzPoint<double>>> h;  // L+1 layers
  std::vector<std::vector<LorentzPoint<double>>> y;  // HL outputs, per block
  std::vector<std::vector<LorentzPoint<double>>> z;  // aggregated, per block
  std::vector<std::vector<LorentzPoint<double>>> m;  // residual output before scaling
  std::vector<std::vector<double>> logits;           // per node
};

namespace detail {

inline LorentzPoint<double> residual_apply(const ResidualBlock& b, const LorentzPoint<double>& x,
                                           const LorentzPoint<double>& y) {
  switch (b.method) {
    case ResidualMethod::lresnet: return lresnet_add(x, y, ResidualWeights(b.w_x, b.w_y));
    case ResidualMethod::pt: return pt_add(x, y);
    case ResidualMethod::ts: return ts_add(x, y, b.w_x, std::abs(b.w_y));
    case ResidualMethod::sa: return space_add(x, y);
    default: return y;
  }
}

inline bool all_finite(const LorentzPoint<double>& p) {
  return std::all_of(p.begin(), p.end(), [](double v) { return std::isfinite(v); });
}

// Ambient-coordinate evaluation of a baseline residual op, for FD Jacobians.
inline std::vector<double> residual_raw(const ResidualBlock& b, Curvature k, std::span<const double> x,
                                        std::span<const double> y) {
  const std::size_t n1 = x.size();
  std::vector<double> out(n1), tmp(n1);
  const auto o = origin<double>(k, n1 - 1);
  const double taylor = Tolerances<double>::defaults().taylor_switch;
  if (b.method == ResidualMethod::pt) {
    pt_add_raw(x.data(), y.data(), out.data(), o.begin(), tmp.data(), n1, k.value(), taylor);
  } else {
    ts_add_raw(x.data(), y.data(), out.data(), o.begin(), tmp.data(), n1, b.w_x, std::abs(b.w_y), k.value(), taylor);
  }
  return out;
}

inline std::vector<double> aggregate_sum(const std::vector<LorentzPoint<double>>& y, const Graph* g, std::size_t i) {
  std::vector<double> u(y[i].begin(), y[i].end());
  if (g) {
    for (std::size_t j : (*g)[i]) {
      for (std::size_t d = 0; d < u.size(); ++d) u[d] += y[j][d];
    }
  }
  return u;
}

}  // namespace detail

// Runs every node of `x` through the net. `graph` may be null (or the net may
// have aggregation disabled), in which case nodes are independent.
inline ForwardTrace forward_batch(const Net& net, const LorentzBatch<double>& x, const Graph* graph) {
  if (x.dim() != net.dim) {
    throw dimension_error("forward: input dim " + std::to_string(x.dim()) + ", net dim " + std::to_string(net.dim));
  }
  if (graph && graph->size() != x.rows()) throw dimension_error("forward: graph size does not match batch");
  const Graph* g = net.aggregate ? graph : nullptr;
  const std::size_t m = x.rows();
  ForwardTrace tr;
  tr.h.emplace_back();
  for (std::size_t i = 0; i < m; ++i) tr.h[0].push_back(x.point(i));
  for (std::size_t l = 0; l < net.blocks.size(); ++l) {
    const auto& b = net.blocks[l];
    const auto& prev = tr.h[l];
    std::vector<LorentzPoint<double>> ys, zs, ms, hs;
    ys.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      ys.push_back(hl_forward(b.layer, prev[i]));
      if (!detail::all_finite(ys.back())) {
        throw training_error("non-finite HL output at layer " + std::to_string(l + 1) + ", node " + std::to_string(i));
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (g) {
        const auto u = detail::aggregate_sum(ys, g, i);
        if (!std::all_of(u.begin(), u.end(), [](double v) { return std::isfinite(v); })) {
          throw training_error("non-finite aggregate at layer " + std::to_string(l + 1) + ", node " +
                               std::to_string(i));
        }
        try {
          zs.push_back(renormalize(u, net.curvature));
        } catch (const error& e) {
          throw training_error("layer " + std::to_string(l + 1) + ", node " + std::to_string(i) + ": " + e.what());
        }
      } else {
        zs.push_back(ys[i]);
      }
      try {
        ms.push_back(detail::residual_apply(b, prev[i], zs.back()));
      } catch (const degenerate_pair_error&) {
        throw;
      } catch (const error& e) {
        throw training_error("layer " + std::to_string(l + 1) + ", node " + std::to_string(i) + ": " + e.what());
      }
      hs.push_back(b.scale ? scale(ms.back(), *b.scale) : ms.back());
      if (!detail::all_finite(hs.back())) {
        throw training_error("non-finite activation at layer " + std::to_string(l + 1) + ", node " +
                             std::to_string(i));
      }
    }
    tr.y.push_back(std::move(ys));
    tr.z.push_back(std::move(zs));
    tr.m.push_back(std::move(ms));
    tr.h.push_back(std::move(hs));
  }
  for (const auto& p : tr.h.back()) tr.logits.emplace_back(p.begin() + 1, p.begin() + 1 + net.classes);
  return tr;
}

struct SingleTrace {
  std::vector<double> logits;
  std::vector<LorentzPoint<double>> h;  // h[0] = input, h[l] after block l
};

// One isolated input (no neighbours).
inline SingleTrace forward(const Net& net, const LorentzPoint<double>& x) {
  const LorentzBatch<double> b(x.curvature(), x.dim(), std::vector<double>(x.begin(), x.end()));
  auto tr = forward_batch(net, b, nullptr);
  SingleTrace out{std::move(tr.logits.front()), {}};
  for (auto& layer : tr.h) out.h.push_back(std::move(layer.front()));
  return out;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] = std::exp(logits[i] - mx));
  for (auto& v : p) v /= s;
  return p;
}

struct SyntheticHierarchyParams {
  std::size_t classes = 3;  // children of the root; class = top-level subtree
  std::size_t branching = 3;
  std::size_t depth = 3;
  std::size_t points = 600;
  std::size_t dim = 3;
  double spread = 4.0;  // offset std of a level-l node from its parent is spread * l / depth
  double noise = 0.2;   // per-point jitter around its node
  std::size_t neighbours = 5;
  std::uint64_t seed = 1;
};

struct SyntheticHierarchyDataset {
  LorentzBatch<double> points;
  std::vector<int> labels;
  Graph graph;
  SyntheticHierarchyParams params;
};

// Balanced tree rooted at o with `classes` top-level children, then
// `branching` children per node down to `depth`. A node's space coordinates
// are its parent's plus Gaussian noise scaled by its level. Points are drawn
// class-balanced from nodes of their class subtree plus jitter and lifted
// onto the hyperboloid.
inline SyntheticHierarchyDataset make_synthetic_hierarchy(const SyntheticHierarchyParams& p, Curvature k) {
  if (p.classes < 1 || p.depth < 1 || p.points < 1 || p.dim < 1) throw error("synthetic hierarchy: empty configuration");
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const double levels = double(p.depth);
  std::vector<std::vector<std::vector<double>>> nodes(p.classes);
  for (std::size_t c = 0; c < p.classes; ++c) {
    std::vector<double> top(p.dim);
    for (auto& v : top) v = p.spread * g(rng) / levels;
    std::vector<std::vector<double>> frontier{top};
    nodes[c].push_back(top);
    for (std::size_t level = 2; level <= p.depth; ++level) {
      std::vector<std::vector<double>> next;
      for (const auto& parent : frontier) {
        for (std::size_t b = 0; b < p.branching; ++b) {
          auto child = parent;
          for (auto& v : child) v += p.spread * double(level) / levels * g(rng);
          next.push_back(child);
          nodes[c].push_back(std::move(child));
        }
      }
      frontier = std::move(next);
    }
  }
  std::vector<double> data;
  data.reserve(p.points * (p.dim + 1));
  std::vector<int> labels;
  std::vector<double> s(p.dim), row(p.dim + 1);
  for (std::size_t i = 0; i < p.points; ++i) {
    const std::size_t c = i % p.classes;
    std::uniform_int_distribution<std::size_t> pick(0, nodes[c].size() - 1);
    const auto& node = nodes[c][pick(rng)];
    for (std::size_t d = 0; d < p.dim; ++d) s[d] = node[d] + p.noise * g(rng);
    detail::lift_raw(s.data(), row.data(), p.dim, k.value());
    data.insert(data.end(), row.begin(), row.end());
    labels.push_back(int(c));
  }
  LorentzBatch<double> pts(k, p.dim, std::move(data));
  Graph graph = knn_graph(pts, p.neighbours);
  return {std::move(pts), std::move(labels), std::move(graph), p};
}

// Pointers to every trainable scalar, in a fixed order: each block's HL
// weights row-major, then its w_y when the block is an lresnet block.
inline std::vector<double*> parameters(Net& net) {
  std::vector<double*> ps;
  for (auto& b : net.blocks) {
    for (auto& w : b.layer.weight.data()) ps.push_back(&w);
    if (b.method == ResidualMethod::lresnet) ps.push_back(&b.w_y);
  }
  return ps;
}

struct LossAndGradient {
  double loss = 0;
  double accuracy = 0;
  std::vector<double> gradient;  // aligned with parameters(net)
};

// Mean cross-entropy over all nodes and its gradient w.r.t. parameters(net).
// Gradients through pt/ts residual ops use central differences (step 1e-6);
// everything else uses the analytic products from grad.hpp.
inline LossAndGradient loss_and_gradient(const Net& net, const SyntheticHierarchyDataset& data,
                                         bool with_gradient = true) {
  const std::size_t m = data.points.rows();
  const Graph* g = net.aggregate ? &data.graph : nullptr;
  const auto tr = forward_batch(net, data.points, g);
  LossAndGradient out;
  std::size_t nparams = 0;
  for (const auto& b : net.blocks) nparams += b.layer.weight.data().size() + (b.method == ResidualMethod::lresnet);
  std::size_t correct = 0;
  const std::size_t n1 = net.dim + 1;
  std::vector<std::vector<double>> gh(m, std::vector<double>(n1, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    const auto p = softmax(tr.logits[i]);
    const auto label = std::size_t(data.labels[i]);
    out.loss -= std::log(std::max(p[label], 1e-300));
    if (std::size_t(std::max_element(p.begin(), p.end()) - p.begin()) == label) ++correct;
    for (std::size_t c = 0; c < net.classes; ++c) gh[i][c + 1] = (p[c] - (c == label ? 1.0 : 0.0)) / double(m);
  }
  out.loss /= double(m);
  out.accuracy = double(correct) / double(m);
  if (!with_gradient) return out;

  out.gradient.assign(nparams, 0.0);
  std::size_t off = nparams;
  for (std::size_t l = net.blocks.size(); l-- > 0;) {
    const auto& b = net.blocks[l];
    const std::size_t nw = b.layer.weight.data().size();
    off -= nw + (b.method == ResidualMethod::lresnet);
    std::vector<std::vector<double>> gprev(m, std::vector<double>(n1, 0.0)), gz(m);
    for (std::size_t i = 0; i < m; ++i) {
      const auto& hprev = tr.h[l][i];
      const auto& z = tr.z[l][i];
      const auto& mo = tr.m[l][i];
      const std::vector<double> gm = b.scale ? scale_vjp(mo, *b.scale, gh[i]) : gh[i];
      switch (b.method) {
        case ResidualMethod::none:
          gz[i] = gm;
          break;
        case ResidualMethod::lresnet: {
          auto v = lresnet_vjp(hprev, z, ResidualWeights(b.w_x, b.w_y), gm);
          gprev[i] = std::move(v.g_x);
          gz[i] = std::move(v.g_y);
          out.gradient[off + nw] += v.g_wy;
          break;
        }
        case ResidualMethod::sa: {
          const auto gs = lift_vjp(mo.coords(), gm);
          gz[i].assign(n1, 0.0);
          for (std::size_t d = 0; d < gs.size(); ++d) gprev[i][d + 1] = gz[i][d + 1] = gs[d];
          break;
        }
        default: {
          const auto k = net.curvature;
          const auto jx = fd_oracle(
              [&](std::span<const double> xx) { return detail::residual_raw(b, k, xx, z.coords()); }, hprev.coords(),
              1e-6);
          const auto jy = fd_oracle(
              [&](std::span<const double> yy) { return detail::residual_raw(b, k, hprev.coords(), yy); }, z.coords(),
              1e-6);
          gprev[i] = jx.apply_transposed(gm);
          gz[i] = jy.apply_transposed(gm);
          break;
        }
      }
    }
    // Through the aggregation: z_i = normalize(sum_{j in N(i)+i} y_j).
    std::vector<std::vector<double>> gy(m, std::vector<double>(n1, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
      if (!g) {
        gy[i] = gz[i];
        continue;
      }
      const auto u = detail::aggregate_sum(tr.y[l], g, i);
      const auto gu = normalize_jacobian(u, net.curvature).apply_transposed(gz[i]);
      for (std::size_t d = 0; d < n1; ++d) gy[i][d] += gu[d];
      for (std::size_t j : (*g)[i]) {
        for (std::size_t d = 0; d < n1; ++d) gy[j][d] += gu[d];
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      const auto hv = hl_vjp(b.layer, tr.h[l][i], gy[i]);
      const auto wd = hv.g_weight.data();
      for (std::size_t j = 0; j < nw; ++j) out.gradient[off + j] += wd[j];
      for (std::size_t d = 0; d < n1; ++d) gprev[i][d] += hv.g_x[d];
    }
    gh = std::move(gprev);
  }
  return out;
}

struct TrainConfig {
  std::size_t epochs = 200;
  double lr = 0.5;
};

struct EpochRecord {
  std::size_t epoch;
  double loss;
  double accuracy;
};

struct TrainingCurve {
  std::vector<EpochRecord> epochs;
  bool monotone = true;  // loss never increased between consecutive epochs
  double final_accuracy = 0;
  double final_loss = 0;
};

// Full-batch gradient descent. Each record holds loss/accuracy of the
// parameters at the start of that epoch; final_* are after the last update.
inline TrainingCurve train(Net& net, const SyntheticHierarchyDataset& data, const TrainConfig& cfg) {
  if (data.points.rows() == 0) throw error("train: empty dataset");
  TrainingCurve curve;
  auto params = parameters(net);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto lg = loss_and_gradient(net, data);
    if (!std::isfinite(lg.loss)) throw training_error("non-finite loss at epoch " + std::to_string(e));
    if (!curve.epochs.empty() && lg.loss > curve.epochs.back().loss) curve.monotone = false;
    curve.epochs.push_back({e, lg.loss, lg.accuracy});
    for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= cfg.lr * lg.gradient[i];
  }
  const auto fin = loss_and_gradient(net, data, false);
  curve.final_loss = fin.loss;
  curve.final_accuracy = fin.accuracy;
  return curve;
}

// Mean squared Lorentzian distance over all pairs among the first `limit`
// nodes' final embeddings.
inline double mean_pairwise_distance(const Net& net, const SyntheticHierarchyDataset& data, std::size_t limit = 200) {
  const auto tr = forward_batch(net, data.points, &data.graph);
  const auto& emb = tr.h.back();
  const std::size_t m = std::min(limit, emb.size());
  double s = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      s += squared_lorentz_distance(emb[i], emb[j]);
      ++pairs;
    }
  }
  return pairs ? s / double(pairs) : 0.0;
}

struct OversmoothingRow {
  std::size_t depth;
  std::string method;
  double accuracy;
  double mean_pairwise_distance;
  bool nan = false;
  std::string diagnostic;
};

// For each depth trains the residual-connected net and the same net without
// residual connections, both from identical initial HL weights.
inline std::vector<OversmoothingRow> oversmoothing_diagnostic(const std::vector<std::size_t>& depths,
                                                             const ResidualBlockConfig& block,
                                                             const SyntheticHierarchyDataset& data,
                                                             const TrainConfig& tc, std::uint64_t seed,
                                                             Activation act = Activation::tanh) {
  if (!std::is_sorted(depths.begin(), depths.end())) throw error("oversmoothing_diagnostic: depths must be ascending");
  std::vector<OversmoothingRow> rows;
  const Curvature k = data.points.curvature();
  for (std::size_t depth : depths) {
    for (ResidualMethod method : {block.method, ResidualMethod::none}) {
      std::mt19937_64 rng(seed);
      ResidualBlockConfig bc = block;
      bc.method = method;
      Net net = make_net(rng, k, NetConfig{data.params.dim, data.params.classes, depth, bc, act, true});
      OversmoothingRow row{depth, to_string(method), 0.0, 0.0, false, {}};
      try {
        const auto curve = train(net, data, tc);
        row.accuracy = curve.final_accuracy;
        row.mean_pairwise_distance = mean_pairwise_distance(net, data);
        row.nan = !std::isfinite(row.mean_pairwise_distance);
      } catch (const training_error& e) {
        row.nan = true;
        row.accuracy = std::numeric_limits<double>::quiet_NaN();
        row.mean_pairwise_distance = std::numeric_limits<double>::quiet_NaN();
        row.diagnostic = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace lresnet
