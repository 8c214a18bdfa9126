#pragma once

// Action-selection policy: a small attention network trained with
// REINFORCE.
//
// Architecture: per-node linear embedding -> one multi-head self-attention
// block with a residual connection -> mean pooling over nodes -> concat with
// a fixed-length action/effect history -> two fully connected layers ->
// softmax over the operator catalog.
//
// Parameters live in one flat vector so the Adam update, checkpointing and
// finite-difference tests can treat the model as a plain function
// R^P -> distribution. All linear algebra is written out explicitly; the
// gradient of log pi(a|s) is computed analytically by the mirror-image
// backward pass below and is verified against central differences in the
// test suite.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "l2gls/errors.hpp"
#include "l2gls/instance.hpp"
#include "l2gls/rng.hpp"
#include "l2gls/solution.hpp"

namespace l2gls {

struct PolicyDims {
  int input_dim = 9;    // features per node
  int embed_dim = 64;   // D
  int heads = 4;
  int hidden_dim = 128; // width of the first FC layer
  int history_len = 8;  // H most recent (action, effect) pairs
  int num_actions = 4;

  int history_dim() const { return history_len * (num_actions + 1); }
  int concat_dim() const { return embed_dim + history_dim(); }

  void check() const {
    if (input_dim < 1 || embed_dim < 1 || heads < 1 || hidden_dim < 1 || history_len < 0 ||
        num_actions < 1)
      throw std::invalid_argument("PolicyDims: all dimensions must be positive");
    if (embed_dim % heads != 0)
      throw std::invalid_argument("PolicyDims: embed_dim must be divisible by heads");
  }
};

// Number of features per node for each problem kind: coordinates of the node
// and its two tour neighbors, the three incident/opposite leg lengths, plus
// demand and free-capacity ratios for CVRP.
inline int feature_dim(Kind kind) { return kind == Kind::TSP ? 9 : 11; }

inline PolicyDims default_policy_dims(Kind kind, int num_actions) {
  PolicyDims d;
  d.input_dim = feature_dim(kind);
  d.num_actions = num_actions;
  return d;
}

// ---------------------------------------------------------------------------
// State features

struct StateFeatures {
  int n = 0;
  int feat_dim = 0;
  std::vector<double> rows;     // n * feat_dim, row-major
  std::vector<double> history;  // history_len * (num_actions + 1)
};

// Sliding window of recent decisions. Each entry is the chosen action index
// and its observed effect: +1 if the step reduced the true cost, -1
// otherwise.
class ActionHistory {
 public:
  explicit ActionHistory(int capacity) : capacity_(capacity) {}

  void record(int action, int effect) {
    items_.push_front({action, effect});
    if (static_cast<int>(items_.size()) > capacity_) items_.pop_back();
  }

  // Layout per slot (most recent first): one-hot action (num_actions wide)
  // followed by the effect. Slots beyond the recorded history are zero.
  std::vector<double> encode(int num_actions) const {
    std::vector<double> out(static_cast<std::size_t>(capacity_) * (num_actions + 1), 0.0);
    for (int h = 0; h < static_cast<int>(items_.size()); ++h) {
      const auto [action, effect] = items_[h];
      if (action >= 0 && action < num_actions)
        out[static_cast<std::size_t>(h) * (num_actions + 1) + action] = 1.0;
      out[static_cast<std::size_t>(h) * (num_actions + 1) + num_actions] = effect;
    }
    return out;
  }

  int capacity() const { return capacity_; }

 private:
  int capacity_;
  std::deque<std::pair<int, int>> items_;
};

inline StateFeatures extract_features(const RoutingInstance& inst, const Solution& sol,
                                      std::vector<double> history) {
  StateFeatures f;
  f.n = inst.size();
  f.feat_dim = feature_dim(inst.kind);
  f.rows.resize(static_cast<std::size_t>(f.n) * f.feat_dim);
  f.history = std::move(history);

  auto fill_row = [&](NodeId i, NodeId pred, NodeId succ, double* row) {
    row[0] = inst.coords[i].x;
    row[1] = inst.coords[i].y;
    row[2] = inst.coords[pred].x;
    row[3] = inst.coords[pred].y;
    row[4] = inst.coords[succ].x;
    row[5] = inst.coords[succ].y;
    row[6] = inst.dist(pred, i);
    row[7] = inst.dist(i, succ);
    row[8] = inst.dist(pred, succ);
  };

  if (inst.kind == Kind::TSP) {
    const Tour& t = sol.tour();
    const int n = f.n;
    for (NodeId i = 0; i < n; ++i) {
      const int p = t.pos[i];
      fill_row(i, t.order[(p + n - 1) % n], t.order[(p + 1) % n], &f.rows[i * 9]);
    }
    return f;
  }

  const RouteSet& rs = sol.routes();
  const double cap = static_cast<double>(inst.capacity);
  for (NodeId i = 0; i < f.n; ++i) {
    double* row = &f.rows[static_cast<std::size_t>(i) * 11];
    if (i == kDepot) {
      // The depot belongs to every route and none; it is its own neighbor.
      fill_row(i, i, i, row);
      row[9] = 0.0;
      row[10] = 1.0;
      continue;
    }
    const int r = rs.node_route[i];
    const int p = rs.node_pos[i];
    const auto& route = rs.routes[r];
    const NodeId pred = p > 0 ? route[p - 1] : kDepot;
    const NodeId succ = p + 1 < static_cast<int>(route.size()) ? route[p + 1] : kDepot;
    fill_row(i, pred, succ, row);
    row[9] = inst.demands[i] / cap;
    row[10] = (rs.capacity - rs.route_load[r]) / cap;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Policy network

class Policy {
 public:
  Policy(PolicyDims dims, std::uint64_t seed) : dims_(dims) {
    dims_.check();
    compute_offsets();
    theta_.assign(param_count_, 0.0);
    adam_m_.assign(param_count_, 0.0);
    adam_v_.assign(param_count_, 0.0);
    init_params(seed);
  }

  const PolicyDims& dims() const { return dims_; }
  std::vector<double>& params() { return theta_; }
  const std::vector<double>& params() const { return theta_; }
  std::size_t param_count() const { return param_count_; }
  std::uint64_t adam_step() const { return adam_t_; }

  std::vector<double> forward(const StateFeatures& f) const {
    Workspace ws;
    run_forward(f, ws);
    return ws.probs;
  }

  // Adds coeff * d(log pi(action | f))/d(theta) into grad (sized like
  // params()) and returns log pi(action | f).
  double accumulate_logprob_grad(const StateFeatures& f, int action, double coeff,
                                 std::vector<double>& grad) const {
    if (grad.size() != param_count_)
      throw std::invalid_argument("accumulate_logprob_grad: gradient buffer has wrong size");
    if (action < 0 || action >= dims_.num_actions)
      throw std::invalid_argument("accumulate_logprob_grad: action out of range");
    Workspace ws;
    run_forward(f, ws);
    run_backward(f, ws, action, coeff, grad);
    return std::log(ws.probs[action]);
  }

  // One Adam step in the ascent direction of grad.
  void adam_ascent(const std::vector<double>& grad, double lr) {
    if (grad.size() != param_count_)
      throw std::invalid_argument("adam_ascent: gradient has wrong size");
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++adam_t_;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(adam_t_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(adam_t_));
    for (std::size_t i = 0; i < param_count_; ++i) {
      adam_m_[i] = beta1 * adam_m_[i] + (1.0 - beta1) * grad[i];
      adam_v_[i] = beta2 * adam_v_[i] + (1.0 - beta2) * grad[i] * grad[i];
      theta_[i] += lr * (adam_m_[i] / c1) / (std::sqrt(adam_v_[i] / c2) + eps);
    }
  }

  // -------------------------------------------------------------------------
  // Checkpointing: magic, version, dims, then parameters as little-endian
  // IEEE doubles in flat order.

  static constexpr char kMagic[8] = {'L', '2', 'G', 'L', 'S', 'P', 'O', 'L'};
  static constexpr std::uint32_t kVersion = 1;

  void save(std::ostream& out) const {
    out.write(kMagic, 8);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(dims_.input_dim));
    write_u32(out, static_cast<std::uint32_t>(dims_.embed_dim));
    write_u32(out, static_cast<std::uint32_t>(dims_.heads));
    write_u32(out, static_cast<std::uint32_t>(dims_.hidden_dim));
    write_u32(out, static_cast<std::uint32_t>(dims_.history_len));
    write_u32(out, static_cast<std::uint32_t>(dims_.num_actions));
    write_u64(out, static_cast<std::uint64_t>(param_count_));
    for (double v : theta_) write_f64(out, v);
    if (!out) throw std::runtime_error("checkpoint write failed");
  }

  void save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    save(out);
  }

  static Policy load(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
      throw ParseError("not a policy checkpoint (bad magic)");
    const std::uint32_t version = read_u32(in);
    if (version != kVersion)
      throw UnsupportedFormat("unsupported checkpoint version: " + std::to_string(version));
    PolicyDims d;
    d.input_dim = static_cast<int>(read_u32(in));
    d.embed_dim = static_cast<int>(read_u32(in));
    d.heads = static_cast<int>(read_u32(in));
    d.hidden_dim = static_cast<int>(read_u32(in));
    d.history_len = static_cast<int>(read_u32(in));
    d.num_actions = static_cast<int>(read_u32(in));
    d.check();
    Policy p(d, 0);
    const std::uint64_t count = read_u64(in);
    if (count != p.param_count_)
      throw ParseError("checkpoint parameter count " + std::to_string(count) +
                       " does not match dimensions");
    for (std::size_t i = 0; i < p.param_count_; ++i) p.theta_[i] = read_f64(in);
    if (!in) throw ParseError("truncated policy checkpoint");
    return p;
  }

  static Policy load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    return load(in);
  }

 private:
  // Flat parameter order.
  enum Block { WEmb, BEmb, WQ, WK, WV, WO, W1, B1, W2, B2, kNumBlocks };

  void compute_offsets() {
    const int in = dims_.input_dim, d = dims_.embed_dim, f1 = dims_.hidden_dim;
    const int cz = dims_.concat_dim(), na = dims_.num_actions;
    const std::size_t sizes[kNumBlocks] = {
        static_cast<std::size_t>(in) * d, static_cast<std::size_t>(d),
        static_cast<std::size_t>(d) * d,  static_cast<std::size_t>(d) * d,
        static_cast<std::size_t>(d) * d,  static_cast<std::size_t>(d) * d,
        static_cast<std::size_t>(cz) * f1, static_cast<std::size_t>(f1),
        static_cast<std::size_t>(f1) * na, static_cast<std::size_t>(na)};
    std::size_t off = 0;
    for (int b = 0; b < kNumBlocks; ++b) {
      offset_[b] = off;
      off += sizes[b];
    }
    param_count_ = off;
  }

  const double* block(Block b) const { return theta_.data() + offset_[b]; }
  double* gblock(std::vector<double>& g, Block b) const { return g.data() + offset_[b]; }

  // Weights start uniform in +-1/sqrt(fan_in); biases and the entire output
  // layer start at zero so the initial action distribution is uniform.
  void init_params(std::uint64_t seed) {
    SplitMix64 rng(seed);
    auto fill = [&](Block blk, int fan_in, std::size_t count) {
      const double r = 1.0 / std::sqrt(static_cast<double>(fan_in));
      double* w = theta_.data() + offset_[blk];
      for (std::size_t i = 0; i < count; ++i) w[i] = (2.0 * rng.next_double() - 1.0) * r;
    };
    const int in = dims_.input_dim, d = dims_.embed_dim, cz = dims_.concat_dim();
    fill(WEmb, in, static_cast<std::size_t>(in) * d);
    fill(WQ, d, static_cast<std::size_t>(d) * d);
    fill(WK, d, static_cast<std::size_t>(d) * d);
    fill(WV, d, static_cast<std::size_t>(d) * d);
    fill(WO, d, static_cast<std::size_t>(d) * d);
    fill(W1, cz, static_cast<std::size_t>(cz) * dims_.hidden_dim);
    // BEmb, B1, W2, B2 stay zero.
  }

  struct Workspace {
    std::vector<double> E, Q, K, V, C;  // n x D
    std::vector<double> attn;           // heads x n x n
    std::vector<double> z;              // concat_dim
    std::vector<double> pre1, h1;       // hidden_dim
    std::vector<double> logits, probs;  // num_actions
  };

  void check_features(const StateFeatures& f) const {
    if (f.n < 1) throw std::invalid_argument("policy forward: empty feature set");
    if (f.feat_dim != dims_.input_dim)
      throw std::invalid_argument("policy forward: feature dim " + std::to_string(f.feat_dim) +
                                  " does not match input dim " +
                                  std::to_string(dims_.input_dim));
    if (f.rows.size() != static_cast<std::size_t>(f.n) * f.feat_dim)
      throw std::invalid_argument("policy forward: feature matrix has wrong size");
    if (f.history.size() != static_cast<std::size_t>(dims_.history_dim()))
      throw std::invalid_argument("policy forward: history vector has wrong size");
  }

  void run_forward(const StateFeatures& f, Workspace& ws) const {
    check_features(f);
    const int n = f.n, in = dims_.input_dim, d = dims_.embed_dim;
    const int heads = dims_.heads, dh = d / heads;
    const int f1 = dims_.hidden_dim, na = dims_.num_actions, cz = dims_.concat_dim();
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

    const double* w_emb = block(WEmb);
    const double* b_emb = block(BEmb);
    ws.E.assign(static_cast<std::size_t>(n) * d, 0.0);
    for (int i = 0; i < n; ++i) {
      const double* x = &f.rows[static_cast<std::size_t>(i) * in];
      double* e = &ws.E[static_cast<std::size_t>(i) * d];
      for (int k = 0; k < d; ++k) e[k] = b_emb[k];
      for (int k = 0; k < in; ++k) {
        const double xv = x[k];
        if (xv == 0.0) continue;
        const double* row = w_emb + static_cast<std::size_t>(k) * d;
        for (int j = 0; j < d; ++j) e[j] += xv * row[j];
      }
    }

    auto matmul_nd = [&](const std::vector<double>& a, Block wblk, std::vector<double>& out) {
      const double* w = block(wblk);
      out.assign(static_cast<std::size_t>(n) * d, 0.0);
      for (int i = 0; i < n; ++i) {
        const double* ai = &a[static_cast<std::size_t>(i) * d];
        double* oi = &out[static_cast<std::size_t>(i) * d];
        for (int k = 0; k < d; ++k) {
          const double av = ai[k];
          if (av == 0.0) continue;
          const double* row = w + static_cast<std::size_t>(k) * d;
          for (int j = 0; j < d; ++j) oi[j] += av * row[j];
        }
      }
    };
    matmul_nd(ws.E, WQ, ws.Q);
    matmul_nd(ws.E, WK, ws.K);
    matmul_nd(ws.E, WV, ws.V);

    ws.attn.assign(static_cast<std::size_t>(heads) * n * n, 0.0);
    ws.C.assign(static_cast<std::size_t>(n) * d, 0.0);
    std::vector<double> scores(n);
    for (int h = 0; h < heads; ++h) {
      const int col = h * dh;
      double* attn_h = &ws.attn[static_cast<std::size_t>(h) * n * n];
      for (int i = 0; i < n; ++i) {
        const double* qi = &ws.Q[static_cast<std::size_t>(i) * d + col];
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
          const double* kj = &ws.K[static_cast<std::size_t>(j) * d + col];
          double s = 0.0;
          for (int t = 0; t < dh; ++t) s += qi[t] * kj[t];
          s *= inv_sqrt_dh;
          scores[j] = s;
          mx = std::max(mx, s);
        }
        double total = 0.0;
        double* arow = attn_h + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
          arow[j] = std::exp(scores[j] - mx);
          total += arow[j];
        }
        double* ci = &ws.C[static_cast<std::size_t>(i) * d + col];
        for (int j = 0; j < n; ++j) {
          arow[j] /= total;
          const double* vj = &ws.V[static_cast<std::size_t>(j) * d + col];
          for (int t = 0; t < dh; ++t) ci[t] += arow[j] * vj[t];
        }
      }
    }

    // z = [mean_i (E + C * Wo)_i, history]
    ws.z.assign(cz, 0.0);
    const double* wo = block(WO);
    for (int i = 0; i < n; ++i) {
      const double* ei = &ws.E[static_cast<std::size_t>(i) * d];
      const double* ci = &ws.C[static_cast<std::size_t>(i) * d];
      for (int j = 0; j < d; ++j) ws.z[j] += ei[j];
      for (int k = 0; k < d; ++k) {
        const double cv = ci[k];
        if (cv == 0.0) continue;
        const double* row = wo + static_cast<std::size_t>(k) * d;
        for (int j = 0; j < d; ++j) ws.z[j] += cv * row[j];
      }
    }
    for (int j = 0; j < d; ++j) ws.z[j] /= n;
    for (int j = 0; j < dims_.history_dim(); ++j) ws.z[d + j] = f.history[j];

    const double* w1 = block(W1);
    const double* b1 = block(B1);
    ws.pre1.assign(f1, 0.0);
    for (int i = 0; i < f1; ++i) ws.pre1[i] = b1[i];
    for (int k = 0; k < cz; ++k) {
      const double zv = ws.z[k];
      if (zv == 0.0) continue;
      const double* row = w1 + static_cast<std::size_t>(k) * f1;
      for (int i = 0; i < f1; ++i) ws.pre1[i] += zv * row[i];
    }
    ws.h1 = ws.pre1;
    for (double& v : ws.h1) v = std::max(0.0, v);

    const double* w2 = block(W2);
    const double* b2 = block(B2);
    ws.logits.assign(na, 0.0);
    for (int j = 0; j < na; ++j) ws.logits[j] = b2[j];
    for (int k = 0; k < f1; ++k) {
      const double hv = ws.h1[k];
      if (hv == 0.0) continue;
      const double* row = w2 + static_cast<std::size_t>(k) * na;
      for (int j = 0; j < na; ++j) ws.logits[j] += hv * row[j];
    }
    double mx = ws.logits[0];
    for (double v : ws.logits) mx = std::max(mx, v);
    ws.probs.assign(na, 0.0);
    double total = 0.0;
    for (int j = 0; j < na; ++j) {
      ws.probs[j] = std::exp(ws.logits[j] - mx);
      total += ws.probs[j];
    }
    for (double& p : ws.probs) p /= total;
  }

  void run_backward(const StateFeatures& f, const Workspace& ws, int action, double coeff,
                    std::vector<double>& grad) const {
    const int n = f.n, in = dims_.input_dim, d = dims_.embed_dim;
    const int heads = dims_.heads, dh = d / heads;
    const int f1 = dims_.hidden_dim, na = dims_.num_actions, cz = dims_.concat_dim();
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

    // d log p[action] / d logits = onehot(action) - probs
    std::vector<double> dlogits(na);
    for (int j = 0; j < na; ++j) dlogits[j] = coeff * ((j == action ? 1.0 : 0.0) - ws.probs[j]);

    double* gw2 = gblock(grad, W2);
    double* gb2 = gblock(grad, B2);
    std::vector<double> dh1(f1, 0.0);
    const double* w2 = block(W2);
    for (int k = 0; k < f1; ++k) {
      const double hv = ws.h1[k];
      double acc = 0.0;
      const double* row = w2 + static_cast<std::size_t>(k) * na;
      double* grow = gw2 + static_cast<std::size_t>(k) * na;
      for (int j = 0; j < na; ++j) {
        grow[j] += hv * dlogits[j];
        acc += row[j] * dlogits[j];
      }
      dh1[k] = acc;
    }
    for (int j = 0; j < na; ++j) gb2[j] += dlogits[j];

    std::vector<double> dpre1(f1);
    for (int k = 0; k < f1; ++k) dpre1[k] = ws.pre1[k] > 0.0 ? dh1[k] : 0.0;

    double* gw1 = gblock(grad, W1);
    double* gb1 = gblock(grad, B1);
    std::vector<double> dz(cz, 0.0);
    const double* w1 = block(W1);
    for (int k = 0; k < cz; ++k) {
      const double zv = ws.z[k];
      const double* row = w1 + static_cast<std::size_t>(k) * f1;
      double* grow = gw1 + static_cast<std::size_t>(k) * f1;
      double acc = 0.0;
      for (int i = 0; i < f1; ++i) {
        grow[i] += zv * dpre1[i];
        acc += row[i] * dpre1[i];
      }
      dz[k] = acc;
    }
    for (int i = 0; i < f1; ++i) gb1[i] += dpre1[i];

    // Pooling: dR[i][j] = dz[j] / n for every node i. Residual splits dR
    // into the direct embedding path and the attention-output path.
    std::vector<double> dg(d);
    for (int j = 0; j < d; ++j) dg[j] = dz[j] / n;

    std::vector<double> dE(static_cast<std::size_t>(n) * d, 0.0);
    for (int i = 0; i < n; ++i) {
      double* dei = &dE[static_cast<std::size_t>(i) * d];
      for (int j = 0; j < d; ++j) dei[j] += dg[j];
    }

    // dC = dO * Wo^T; dWo += C^T * dO, with dO[i][:] = dg.
    const double* wo = block(WO);
    double* gwo = gblock(grad, WO);
    std::vector<double> dC(static_cast<std::size_t>(n) * d, 0.0);
    for (int i = 0; i < n; ++i) {
      const double* ci = &ws.C[static_cast<std::size_t>(i) * d];
      double* dci = &dC[static_cast<std::size_t>(i) * d];
      for (int k = 0; k < d; ++k) {
        const double* row = wo + static_cast<std::size_t>(k) * d;
        double* grow = gwo + static_cast<std::size_t>(k) * d;
        double acc = 0.0;
        for (int j = 0; j < d; ++j) {
          acc += row[j] * dg[j];
          grow[j] += ci[k] * dg[j];
        }
        dci[k] = acc;
      }
    }

    std::vector<double> dQ(static_cast<std::size_t>(n) * d, 0.0);
    std::vector<double> dK(static_cast<std::size_t>(n) * d, 0.0);
    std::vector<double> dV(static_cast<std::size_t>(n) * d, 0.0);
    std::vector<double> dA(n), dS(n);
    for (int h = 0; h < heads; ++h) {
      const int col = h * dh;
      const double* attn_h = &ws.attn[static_cast<std::size_t>(h) * n * n];
      for (int i = 0; i < n; ++i) {
        const double* arow = attn_h + static_cast<std::size_t>(i) * n;
        const double* dci = &dC[static_cast<std::size_t>(i) * d + col];
        // dA[i][j] = sum_t dC[i][t] V[j][t]; dV[j] += A[i][j] * dC[i]
        double dot = 0.0;
        for (int j = 0; j < n; ++j) {
          const double* vj = &ws.V[static_cast<std::size_t>(j) * d + col];
          double* dvj = &dV[static_cast<std::size_t>(j) * d + col];
          double acc = 0.0;
          for (int t = 0; t < dh; ++t) {
            acc += dci[t] * vj[t];
            dvj[t] += arow[j] * dci[t];
          }
          dA[j] = acc;
          dot += acc * arow[j];
        }
        // Softmax row backward, with the 1/sqrt(dh) score scaling folded in.
        for (int j = 0; j < n; ++j) dS[j] = arow[j] * (dA[j] - dot) * inv_sqrt_dh;
        double* dqi = &dQ[static_cast<std::size_t>(i) * d + col];
        const double* qi = &ws.Q[static_cast<std::size_t>(i) * d + col];
        for (int j = 0; j < n; ++j) {
          const double s = dS[j];
          if (s == 0.0) continue;
          const double* kj = &ws.K[static_cast<std::size_t>(j) * d + col];
          double* dkj = &dK[static_cast<std::size_t>(j) * d + col];
          for (int t = 0; t < dh; ++t) {
            dqi[t] += s * kj[t];
            dkj[t] += s * qi[t];
          }
        }
      }
    }

    // Projections: dE += dX * W^T and gW += E^T * dX for X in {Q, K, V}.
    auto backprop_projection = [&](const std::vector<double>& dX, Block wblk) {
      const double* w = block(wblk);
      double* gw = gblock(grad, wblk);
      for (int i = 0; i < n; ++i) {
        const double* dxi = &dX[static_cast<std::size_t>(i) * d];
        const double* ei = &ws.E[static_cast<std::size_t>(i) * d];
        double* dei = &dE[static_cast<std::size_t>(i) * d];
        for (int k = 0; k < d; ++k) {
          const double* row = w + static_cast<std::size_t>(k) * d;
          double* grow = gw + static_cast<std::size_t>(k) * d;
          const double ev = ei[k];
          double acc = 0.0;
          for (int j = 0; j < d; ++j) {
            acc += row[j] * dxi[j];
            grow[j] += ev * dxi[j];
          }
          dei[k] += acc;
        }
      }
    };
    backprop_projection(dQ, WQ);
    backprop_projection(dK, WK);
    backprop_projection(dV, WV);

    double* gwe = gblock(grad, WEmb);
    double* gbe = gblock(grad, BEmb);
    for (int i = 0; i < n; ++i) {
      const double* x = &f.rows[static_cast<std::size_t>(i) * in];
      const double* dei = &dE[static_cast<std::size_t>(i) * d];
      for (int k = 0; k < in; ++k) {
        const double xv = x[k];
        if (xv == 0.0) continue;
        double* grow = gwe + static_cast<std::size_t>(k) * d;
        for (int j = 0; j < d; ++j) grow[j] += xv * dei[j];
      }
      for (int j = 0; j < d; ++j) gbe[j] += dei[j];
    }
  }

  static void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
  }
  static void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
  }
  static void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(out, bits);
  }
  static std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  static std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  static double read_f64(std::istream& in) {
    const std::uint64_t bits = read_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  PolicyDims dims_;
  std::vector<double> theta_;
  std::vector<double> adam_m_, adam_v_;
  std::uint64_t adam_t_ = 0;
  std::size_t offset_[kNumBlocks] = {};
  std::size_t param_count_ = 0;
};

// ---------------------------------------------------------------------------
// Action sampling and rewards

// Epsilon-greedy sampling: with probability epsilon a uniformly random
// action, otherwise a draw from the policy distribution.
inline int sample_action(const std::vector<double>& probs, double epsilon, SplitMix64& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("sample_action: epsilon must be in [0, 1]");
  if (probs.empty()) throw std::invalid_argument("sample_action: empty distribution");
  if (epsilon > 0.0 && rng.next_double() < epsilon)
    return rng.next_int(0, static_cast<int>(probs.size()) - 1);
  return sample_categorical(probs, rng);
}

// +1 when the step strictly reduced the true cost, -1 otherwise.
inline double reward_binary(double prev_cost, double new_cost) {
  return new_cost < prev_cost - 1e-12 ? 1.0 : -1.0;
}

// Total true-cost reduction over an improvement phase, shared by every
// action taken during the phase.
inline double reward_advantage(double phase_first_cost, double phase_final_cost) {
  return phase_first_cost - phase_final_cost;
}

// ---------------------------------------------------------------------------
// REINFORCE

struct TrajectorySample {
  StateFeatures state;
  int action = 0;
  double reward = 0.0;
  double logprob = 0.0;
};

using Trajectory = std::vector<TrajectorySample>;

// One policy-gradient ascent step on
//   (1/T) sum_t (r_t - baseline) * grad log pi(a_t | s_t).
inline void reinforce_update(Policy& policy, const Trajectory& traj, double baseline,
                             double learning_rate = 0.001) {
  if (traj.empty()) return;
  std::vector<double> grad(policy.param_count(), 0.0);
  const double inv_t = 1.0 / static_cast<double>(traj.size());
  for (const TrajectorySample& s : traj) {
    const double coeff = (s.reward - baseline) * inv_t;
    policy.accumulate_logprob_grad(s.state, s.action, coeff, grad);
  }
  for (double g : grad) {
    if (!std::isfinite(g)) throw TrainingDiverged("non-finite policy gradient");
  }
  policy.adam_ascent(grad, learning_rate);
  for (double v : policy.params()) {
    if (!std::isfinite(v)) throw TrainingDiverged("non-finite policy parameters after update");
  }
}

}  // namespace l2gls
