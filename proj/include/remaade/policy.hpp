#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "remaade/mathutil.hpp"
#include "remaade/param_store.hpp"
#include "remaade/rng.hpp"
#include "remaade/search_space.hpp"

namespace remaade {

enum class PolicyKind { kMaade, kIid };

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kMaade;
  int d = 36;     // embedding dimension
  int d_ff = 36;  // feed-forward hidden width
  int M = 1;      // stacked block count
};

// Autoregressive policy over action strings. The maade kind is a two-stream
// masked additive-attention density estimator:
//
//   stream 1 (query): q_i^(0) = Q[i], sees only preceding keys
//   stream 2 (key):   k_i^(0) = Q[i] + V_fam[a_i], sees preceding keys and itself
//   block:            x^(m+1) = PosFF(x^(m) + Attn(query=x^(m), keys=k^(m)))
//   PosFF(x)          = W2 tanh(W1 x + b1) + b2
//   Attn score        e_j = wa . tanh(Wq q + Wk k_j + ba), weights softmax(e),
//                     output sum_j alpha_j k_j (keys double as values)
//
// Both streams share block parameters. No positional encoding: conditioning is
// on the *set* of (hyperparameter, value) pairs seen so far. Attention over an
// empty key set returns the zero vector. Per-hyperparameter affine heads map
// the final query-stream vector h to logits.
//
// The iid kind keeps only the head biases: P(a) = prod_i softmax(b^i)[a_i].
class Policy {
 public:
  struct BlockIds {
    int Wq, Wk, ba, wa;  // attention: Wq,Wk d x d; ba,wa d
    int W1, b1, W2, b2;  // posff: W1 d_ff x d; b1 d_ff; W2 d x d_ff; b2 d
  };
  struct Layout {
    int query = -1;              // [N, d]
    std::vector<int> value_fam;  // per family, [D_f, d]
    std::vector<BlockIds> blocks;
    std::vector<int> head_w;  // per hyperparameter, [D_i, d]
    std::vector<int> head_b;  // per hyperparameter, [D_i]
  };

  Policy(SearchSpace space, PolicyConfig cfg, Rng& rng)
      : space_(std::move(space)), cfg_(cfg) {
    if (cfg_.d < 1 || cfg_.d_ff < 1) throw std::invalid_argument("Policy: d and d_ff must be >= 1");
    if (cfg_.M < 1) throw std::invalid_argument("Policy: M must be >= 1");
    const int n = space_.n();
    if (cfg_.kind == PolicyKind::kMaade) {
      layout_.query = params_.add("query", {n, cfg_.d});
      for (int f = 0; f < space_.num_families(); ++f)
        layout_.value_fam.push_back(
            params_.add("value_fam" + std::to_string(f), {space_.family_dim(f), cfg_.d}));
      for (int m = 0; m < cfg_.M; ++m) {
        const std::string p = "block" + std::to_string(m) + ".";
        BlockIds b;
        b.Wq = params_.add(p + "attn.Wq", {cfg_.d, cfg_.d});
        b.Wk = params_.add(p + "attn.Wk", {cfg_.d, cfg_.d});
        b.ba = params_.add(p + "attn.ba", {cfg_.d});
        b.wa = params_.add(p + "attn.wa", {cfg_.d});
        b.W1 = params_.add(p + "posff.W1", {cfg_.d_ff, cfg_.d});
        b.b1 = params_.add(p + "posff.b1", {cfg_.d_ff});
        b.W2 = params_.add(p + "posff.W2", {cfg_.d, cfg_.d_ff});
        b.b2 = params_.add(p + "posff.b2", {cfg_.d});
        layout_.blocks.push_back(b);
      }
    }
    for (int i = 0; i < n; ++i) {
      const std::string p = "head" + std::to_string(i) + ".";
      if (cfg_.kind == PolicyKind::kMaade)
        layout_.head_w.push_back(params_.add(p + "W", {space_.dim(i), cfg_.d}));
      layout_.head_b.push_back(params_.add(p + "b", {space_.dim(i)}));
    }
    params_.freeze();
    init_weights(rng);
  }

  const SearchSpace& space() const { return space_; }
  const PolicyConfig& config() const { return cfg_; }
  const Layout& layout() const { return layout_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Logits for hyperparameter i given context vector h; log-softmaxed.
  std::vector<double> cond_log_probs(std::span<const double> h, int i) const {
    if (i < 0 || i >= space_.n())
      throw std::invalid_argument("cond_log_probs: unknown hyperparameter index " +
                                  std::to_string(i));
    const int di = space_.dim(i);
    std::vector<double> logits(static_cast<std::size_t>(di));
    auto bias = params_.values(layout_.head_b[static_cast<std::size_t>(i)]);
    if (cfg_.kind == PolicyKind::kIid) {
      for (int j = 0; j < di; ++j) logits[static_cast<std::size_t>(j)] = bias[static_cast<std::size_t>(j)];
    } else {
      if (static_cast<int>(h.size()) != cfg_.d)
        throw std::invalid_argument("cond_log_probs: context vector must be d-dimensional");
      auto W = params_.values(layout_.head_w[static_cast<std::size_t>(i)]);
      matvec(W, di, cfg_.d, h, logits);
      for (int j = 0; j < di; ++j) logits[static_cast<std::size_t>(j)] += bias[static_cast<std::size_t>(j)];
    }
    return log_softmax(logits);
  }

 private:
  void init_weights(Rng& rng) {
    // Weights Gaussian(0, 1/sqrt(d)), biases zero. Fill order follows tensor
    // creation order so a fixed seed reproduces parameters exactly.
    const double sigma = 1.0 / std::sqrt(static_cast<double>(cfg_.d));
    auto fill = [&](int id) {
      for (double& w : params_.values(id)) w = sigma * rng.normal();
    };
    if (cfg_.kind == PolicyKind::kMaade) {
      fill(layout_.query);
      for (int id : layout_.value_fam) fill(id);
      for (const auto& b : layout_.blocks) {
        fill(b.Wq);
        fill(b.Wk);
        fill(b.wa);
        fill(b.W1);
        fill(b.W2);
      }
      for (int id : layout_.head_w) fill(id);
    }
    // head biases stay zero: the initial iid policy is uniform
  }

  SearchSpace space_;
  PolicyConfig cfg_;
  ParamStore params_;
  Layout layout_;
};

// Retained activations for one (order, string) forward pass. Built
// incrementally: push_target() yields the conditional log-probs of the next
// order position, commit_value() fixes the sampled/observed value and extends
// the key stream. backward() replays the whole tape in reverse with arbitrary
// per-step logit seeds, which covers log-prob, entropy and advantage-weighted
// gradients with one mechanism.
class StringTape {
 public:
  struct AttnRec {
    int nk = 0;
    std::vector<double> u;      // nk x d, tanh preactivations already mapped
    std::vector<double> alpha;  // nk
    std::vector<double> out;    // d
  };
  struct PosffRec {
    std::vector<double> x;   // block input + attention output (d)
    std::vector<double> h1;  // tanh(W1 x + b1) (d_ff)
  };
  struct BlockRec {
    AttnRec attn;
    PosffRec ff;
  };
  struct StepRec {
    int hp = -1;                          // hyperparameter index z_t
    std::vector<std::vector<double>> q;   // M+1 levels, d each; q[M] is h
    std::vector<BlockRec> blocks;         // M
    std::vector<double> logp;             // conditional log-probs, D_hp
  };

  StringTape(const Policy& pol, std::vector<int> order)
      : pol_(&pol), order_(std::move(order)) {
    const int n = pol.space().n();
    if (static_cast<int>(order_.size()) != n)
      throw std::invalid_argument("StringTape: order length must equal N");
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (int v : order_) {
      if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)])
        throw std::invalid_argument("StringTape: order is not a permutation");
      seen[static_cast<std::size_t>(v)] = 1;
    }
    if (pol.config().kind == PolicyKind::kMaade)
      klevel_.resize(static_cast<std::size_t>(pol.config().M));
    kblocks_.resize(klevel_.empty() ? 0 : klevel_.size() - 1);
  }

  int n() const { return static_cast<int>(order_.size()); }
  int committed() const { return static_cast<int>(values_.size()); }
  const std::vector<int>& order() const { return order_; }
  const std::vector<int>& values() const { return values_; }

  // Conditional log-probs for the next order position given the committed
  // prefix. Computes and retains the query stream.
  const std::vector<double>& push_target() {
    const int t = committed();
    if (t >= n()) throw std::logic_error("StringTape: all positions already targeted");
    if (static_cast<int>(steps_.size()) != t)
      throw std::logic_error("StringTape: push_target before committing previous value");
    const Policy& pol = *pol_;
    const int hp = order_[static_cast<std::size_t>(t)];
    StepRec step;
    step.hp = hp;
    if (pol.config().kind == PolicyKind::kIid) {
      auto bias = pol.params().values(pol.layout().head_b[static_cast<std::size_t>(hp)]);
      std::vector<double> logits(bias.begin(), bias.end());
      step.logp = log_softmax(logits);
      steps_.push_back(std::move(step));
      return steps_.back().logp;
    }
    const auto& cfg = pol.config();
    const auto& lay = pol.layout();
    const auto& ps = pol.params();
    step.q.resize(static_cast<std::size_t>(cfg.M) + 1);
    step.blocks.resize(static_cast<std::size_t>(cfg.M));
    auto qrow = ps.values(lay.query).subspan(
        static_cast<std::size_t>(hp) * static_cast<std::size_t>(cfg.d),
        static_cast<std::size_t>(cfg.d));
    step.q[0].assign(qrow.begin(), qrow.end());
    for (int m = 0; m < cfg.M; ++m) {
      step.q[static_cast<std::size_t>(m) + 1].resize(static_cast<std::size_t>(cfg.d));
      block_forward(m, step.q[static_cast<std::size_t>(m)],
                    klevel_[static_cast<std::size_t>(m)], t,
                    step.blocks[static_cast<std::size_t>(m)],
                    step.q[static_cast<std::size_t>(m) + 1]);
    }
    const int di = pol.space().dim(hp);
    std::vector<double> logits(static_cast<std::size_t>(di));
    auto W = ps.values(lay.head_w[static_cast<std::size_t>(hp)]);
    auto b = ps.values(lay.head_b[static_cast<std::size_t>(hp)]);
    matvec(W, di, cfg.d, step.q[static_cast<std::size_t>(cfg.M)], logits);
    for (int j = 0; j < di; ++j) logits[static_cast<std::size_t>(j)] += b[static_cast<std::size_t>(j)];
    step.logp = log_softmax(logits);
    steps_.push_back(std::move(step));
    return steps_.back().logp;
  }

  // Fixes the value at the current order position and extends the key stream.
  void commit_value(int value) {
    const int t = committed();
    if (static_cast<int>(steps_.size()) != t + 1)
      throw std::logic_error("StringTape: commit_value without a pushed target");
    const Policy& pol = *pol_;
    const int hp = order_[static_cast<std::size_t>(t)];
    if (value < 0 || value >= pol.space().dim(hp))
      throw std::invalid_argument("StringTape: value out of range for hyperparameter " +
                                  std::to_string(hp));
    values_.push_back(value);
    if (pol.config().kind == PolicyKind::kIid) return;
    const auto& cfg = pol.config();
    const auto& lay = pol.layout();
    const auto& ps = pol.params();
    const std::size_t d = static_cast<std::size_t>(cfg.d);
    // k^(0) = Q[hp] + V_fam[value]
    auto qrow = ps.values(lay.query).subspan(static_cast<std::size_t>(hp) * d, d);
    const int fam = pol.space().family(hp);
    auto vrow = ps.values(lay.value_fam[static_cast<std::size_t>(fam)])
                    .subspan(static_cast<std::size_t>(value) * d, d);
    auto& k0 = klevel_[0];
    const std::size_t base = k0.size();
    k0.resize(base + d);
    for (std::size_t c = 0; c < d; ++c) k0[base + c] = qrow[c] + vrow[c];
    // key stream attends to itself as well, so append before updating
    std::vector<double> cur(k0.begin() + static_cast<std::ptrdiff_t>(base), k0.end());
    for (int m = 0; m + 1 < cfg.M; ++m) {
      kblocks_[static_cast<std::size_t>(m)].emplace_back();
      std::vector<double> next(d);
      block_forward(m, cur, klevel_[static_cast<std::size_t>(m)], t + 1,
                    kblocks_[static_cast<std::size_t>(m)].back(), next);
      auto& kl = klevel_[static_cast<std::size_t>(m) + 1];
      kl.insert(kl.end(), next.begin(), next.end());
      cur = std::move(next);
    }
  }

  const StepRec& step(int t) const { return steps_.at(static_cast<std::size_t>(t)); }

  double total_log_prob() const {
    if (committed() != n() || static_cast<int>(steps_.size()) != n())
      throw std::logic_error("StringTape: total_log_prob requires a complete pass");
    double s = 0.0;
    for (int t = 0; t < n(); ++t)
      s += steps_[static_cast<std::size_t>(t)]
               .logp[static_cast<std::size_t>(values_[static_cast<std::size_t>(t)])];
    return s;
  }

  // Accumulates scale * d(sum_t seeds[t] . logits_t)/d(theta) into grad.
  // Seeds are gradients w.r.t. the pre-softmax logits of each step.
  void backward(const std::vector<std::vector<double>>& logit_seeds, ParamStore& grad,
                double scale = 1.0) const {
    const Policy& pol = *pol_;
    if (static_cast<int>(logit_seeds.size()) != static_cast<int>(steps_.size()))
      throw std::invalid_argument("StringTape::backward: one seed per pushed step required");
    const auto& lay = pol.layout();
    if (pol.config().kind == PolicyKind::kIid) {
      for (std::size_t t = 0; t < steps_.size(); ++t) {
        auto db = grad.values(lay.head_b[static_cast<std::size_t>(steps_[t].hp)]);
        axpy(db, logit_seeds[t], scale);
      }
      return;
    }
    const auto& cfg = pol.config();
    const std::size_t d = static_cast<std::size_t>(cfg.d);
    // dk accumulators mirror the key-stream levels actually materialized
    std::vector<std::vector<double>> dkl(klevel_.size());
    for (std::size_t m = 0; m < klevel_.size(); ++m) dkl[m].assign(klevel_[m].size(), 0.0);

    for (int t = static_cast<int>(steps_.size()) - 1; t >= 0; --t) {
      const StepRec& st = steps_[static_cast<std::size_t>(t)];
      const int di = pol.space().dim(st.hp);
      const auto& seed = logit_seeds[static_cast<std::size_t>(t)];
      if (static_cast<int>(seed.size()) != di)
        throw std::invalid_argument("StringTape::backward: seed size mismatch at step " +
                                    std::to_string(t));
      // head
      auto dW = grad.values(lay.head_w[static_cast<std::size_t>(st.hp)]);
      auto db = grad.values(lay.head_b[static_cast<std::size_t>(st.hp)]);
      const auto& h = st.q[static_cast<std::size_t>(cfg.M)];
      std::vector<double> scaled_seed(seed.size());
      for (std::size_t j = 0; j < seed.size(); ++j) scaled_seed[j] = scale * seed[j];
      outer_acc(dW, scaled_seed, h);
      axpy(db, scaled_seed);
      std::vector<double> dq(d, 0.0);
      matvec_t_acc(pol.params().values(lay.head_w[static_cast<std::size_t>(st.hp)]), di,
                   cfg.d, scaled_seed, dq);
      // query stream
      for (int m = cfg.M - 1; m >= 0; --m) {
        std::vector<double> din(d, 0.0);
        block_backward(m, st.q[static_cast<std::size_t>(m)],
                       klevel_[static_cast<std::size_t>(m)],
                       st.blocks[static_cast<std::size_t>(m)], dq, din,
                       dkl[static_cast<std::size_t>(m)], grad);
        dq = std::move(din);
      }
      auto dQ = grad.values(lay.query)
                    .subspan(static_cast<std::size_t>(st.hp) * d, d);
      axpy(dQ, dq);
    }

    // key stream, top level down
    for (int m = static_cast<int>(klevel_.size()) - 1; m >= 1; --m) {
      const int npos = static_cast<int>(klevel_[static_cast<std::size_t>(m)].size() / d);
      for (int pos = npos - 1; pos >= 0; --pos) {
        std::span<const double> kin{
            klevel_[static_cast<std::size_t>(m - 1)].data() + static_cast<std::size_t>(pos) * d, d};
        std::span<const double> dnext{
            dkl[static_cast<std::size_t>(m)].data() + static_cast<std::size_t>(pos) * d, d};
        std::vector<double> din(d, 0.0);
        block_backward(m - 1, kin, klevel_[static_cast<std::size_t>(m - 1)],
                       kblocks_[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(pos)],
                       dnext, din, dkl[static_cast<std::size_t>(m - 1)], grad);
        std::span<double> acc{dkl[static_cast<std::size_t>(m - 1)].data() +
                                  static_cast<std::size_t>(pos) * d, d};
        axpy(acc, din);
      }
    }

    // embeddings
    if (!dkl.empty()) {
      const int npos = static_cast<int>(dkl[0].size() / d);
      for (int pos = 0; pos < npos; ++pos) {
        const int hp = order_[static_cast<std::size_t>(pos)];
        const int val = values_[static_cast<std::size_t>(pos)];
        std::span<const double> dk0{dkl[0].data() + static_cast<std::size_t>(pos) * d, d};
        auto dQ = grad.values(lay.query).subspan(static_cast<std::size_t>(hp) * d, d);
        axpy(dQ, dk0);
        const int fam = pol.space().family(hp);
        auto dV = grad.values(lay.value_fam[static_cast<std::size_t>(fam)])
                      .subspan(static_cast<std::size_t>(val) * d, d);
        axpy(dV, dk0);
      }
    }
  }

 private:
  // One simplified-transformer application: out = PosFF(in + Attn(in, keys)).
  // keys is the flattened level-m stream; nk entries participate.
  void block_forward(int m, std::span<const double> in, const std::vector<double>& keys,
                     int nk, BlockRec& rec, std::span<double> out) {
    const Policy& pol = *pol_;
    const auto& cfg = pol.config();
    const auto& ids = pol.layout().blocks[static_cast<std::size_t>(m)];
    const auto& ps = pol.params();
    const std::size_t d = static_cast<std::size_t>(cfg.d);
    rec.attn.nk = nk;
    rec.attn.out.assign(d, 0.0);
    if (nk > 0) {
      auto Wq = ps.values(ids.Wq);
      auto Wk = ps.values(ids.Wk);
      auto ba = ps.values(ids.ba);
      auto wa = ps.values(ids.wa);
      std::vector<double> g(d);
      matvec(Wq, cfg.d, cfg.d, in, g);
      rec.attn.u.assign(static_cast<std::size_t>(nk) * d, 0.0);
      std::vector<double> scores(static_cast<std::size_t>(nk));
      std::vector<double> wkk(d);
      for (int j = 0; j < nk; ++j) {
        std::span<const double> kj{keys.data() + static_cast<std::size_t>(j) * d, d};
        matvec(Wk, cfg.d, cfg.d, kj, wkk);
        double e = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          const double u = std::tanh(g[c] + wkk[c] + ba[c]);
          rec.attn.u[static_cast<std::size_t>(j) * d + c] = u;
          e += wa[c] * u;
        }
        scores[static_cast<std::size_t>(j)] = e;
      }
      rec.attn.alpha = softmax(scores);
      for (int j = 0; j < nk; ++j) {
        std::span<const double> kj{keys.data() + static_cast<std::size_t>(j) * d, d};
        axpy(rec.attn.out, kj, rec.attn.alpha[static_cast<std::size_t>(j)]);
      }
    }
    rec.ff.x.resize(d);
    for (std::size_t c = 0; c < d; ++c) rec.ff.x[c] = in[c] + rec.attn.out[c];
    auto W1 = ps.values(ids.W1);
    auto b1 = ps.values(ids.b1);
    auto W2 = ps.values(ids.W2);
    auto b2 = ps.values(ids.b2);
    rec.ff.h1.resize(static_cast<std::size_t>(cfg.d_ff));
    matvec(W1, cfg.d_ff, cfg.d, rec.ff.x, rec.ff.h1);
    for (int r = 0; r < cfg.d_ff; ++r)
      rec.ff.h1[static_cast<std::size_t>(r)] =
          std::tanh(rec.ff.h1[static_cast<std::size_t>(r)] + b1[static_cast<std::size_t>(r)]);
    matvec(W2, cfg.d, cfg.d_ff, rec.ff.h1, out);
    for (std::size_t c = 0; c < d; ++c) out[c] += b2[c];
  }

  // Reverse of block_forward. din accumulates d/d(in); dkeys accumulates
  // d/d(keys) for the first rec.attn.nk entries; grad collects parameters.
  void block_backward(int m, std::span<const double> in, const std::vector<double>& keys,
                      const BlockRec& rec, std::span<const double> dout,
                      std::vector<double>& din, std::vector<double>& dkeys,
                      ParamStore& grad) const {
    const Policy& pol = *pol_;
    const auto& cfg = pol.config();
    const auto& ids = pol.layout().blocks[static_cast<std::size_t>(m)];
    const auto& ps = pol.params();
    const std::size_t d = static_cast<std::size_t>(cfg.d);
    // posff
    auto dW2 = grad.values(ids.W2);
    auto db2 = grad.values(ids.b2);
    outer_acc(dW2, dout, rec.ff.h1);
    axpy(db2, dout);
    std::vector<double> dh1(static_cast<std::size_t>(cfg.d_ff), 0.0);
    matvec_t_acc(ps.values(ids.W2), cfg.d, cfg.d_ff, dout, dh1);
    for (int r = 0; r < cfg.d_ff; ++r) {
      const double h = rec.ff.h1[static_cast<std::size_t>(r)];
      dh1[static_cast<std::size_t>(r)] *= 1.0 - h * h;
    }
    auto dW1 = grad.values(ids.W1);
    auto db1 = grad.values(ids.b1);
    outer_acc(dW1, dh1, rec.ff.x);
    axpy(db1, dh1);
    std::vector<double> dx(d, 0.0);
    matvec_t_acc(ps.values(ids.W1), cfg.d_ff, cfg.d, dh1, dx);
    // x = in + attn.out
    axpy(din, dx);
    const int nk = rec.attn.nk;
    if (nk == 0) return;
    // attention
    auto Wq = ps.values(ids.Wq);
    auto Wk = ps.values(ids.Wk);
    auto wa = ps.values(ids.wa);
    std::vector<double> dalpha(static_cast<std::size_t>(nk));
    for (int j = 0; j < nk; ++j) {
      std::span<const double> kj{keys.data() + static_cast<std::size_t>(j) * d, d};
      dalpha[static_cast<std::size_t>(j)] = dot(dx, kj);
      std::span<double> dkj{dkeys.data() + static_cast<std::size_t>(j) * d, d};
      axpy(dkj, dx, rec.attn.alpha[static_cast<std::size_t>(j)]);
    }
    double sum = 0.0;
    for (int j = 0; j < nk; ++j)
      sum += rec.attn.alpha[static_cast<std::size_t>(j)] * dalpha[static_cast<std::size_t>(j)];
    auto dWq = grad.values(ids.Wq);
    auto dWk = grad.values(ids.Wk);
    auto dba = grad.values(ids.ba);
    auto dwa = grad.values(ids.wa);
    std::vector<double> dg(d, 0.0);
    std::vector<double> dz(d);
    for (int j = 0; j < nk; ++j) {
      const double de =
          rec.attn.alpha[static_cast<std::size_t>(j)] * (dalpha[static_cast<std::size_t>(j)] - sum);
      std::span<const double> uj{rec.attn.u.data() + static_cast<std::size_t>(j) * d, d};
      std::span<const double> kj{keys.data() + static_cast<std::size_t>(j) * d, d};
      for (std::size_t c = 0; c < d; ++c) {
        dwa[c] += de * uj[c];
        dz[c] = de * wa[c] * (1.0 - uj[c] * uj[c]);
      }
      outer_acc(dWk, dz, kj);
      std::span<double> dkj{dkeys.data() + static_cast<std::size_t>(j) * d, d};
      matvec_t_acc(Wk, cfg.d, cfg.d, dz, dkj);
      axpy(dba, dz);
      axpy({dg.data(), d}, dz);
    }
    outer_acc(dWq, dg, in);
    matvec_t_acc(Wq, cfg.d, cfg.d, dg, {din.data(), d});
  }

  const Policy* pol_;
  std::vector<int> order_;
  std::vector<int> values_;
  std::vector<StepRec> steps_;
  std::vector<std::vector<double>> klevel_;              // levels 0..M-1, flattened pos*d
  std::vector<std::vector<BlockRec>> kblocks_;           // levels 1..M-1 provenance
};

inline std::vector<int> identity_order(int n) {
  std::vector<int> z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = i;
  return z;
}

// Context vector for the target at order position t (1-based) given the values
// at order positions 1..t-1.
inline std::vector<double> forward_context(const Policy& pol, const std::vector<int>& order,
                                           const std::vector<int>& prefix_values, int t) {
  if (t < 1 || t > pol.space().n())
    throw std::invalid_argument("forward_context: t out of range");
  if (static_cast<int>(prefix_values.size()) != t - 1)
    throw std::invalid_argument("forward_context: prefix must hold t-1 values");
  StringTape tape(pol, order);
  for (int u = 0; u < t - 1; ++u) {
    tape.push_target();
    tape.commit_value(prefix_values[static_cast<std::size_t>(u)]);
  }
  tape.push_target();
  if (pol.config().kind == PolicyKind::kIid) return {};
  return tape.step(t - 1).q[static_cast<std::size_t>(pol.config().M)];
}

struct SampleResult {
  ActionString values;
  double log_prob = 0.0;
};

inline SampleResult sample_string(const Policy& pol, const std::vector<int>& order, Rng& rng) {
  StringTape tape(pol, order);
  const int n = pol.space().n();
  ActionString s(static_cast<std::size_t>(n), 0);
  for (int t = 0; t < n; ++t) {
    const auto& logp = tape.push_target();
    std::vector<double> probs(logp.size());
    for (std::size_t j = 0; j < logp.size(); ++j) probs[j] = std::exp(logp[j]);
    const int v = rng.categorical(probs);
    s[static_cast<std::size_t>(tape.order()[static_cast<std::size_t>(t)])] = v;
    tape.commit_value(v);
  }
  return {std::move(s), tape.total_log_prob()};
}

inline SampleResult sample_valid_string(const Policy& pol, const std::vector<int>& order,
                                        Rng& rng, int max_attempts = 1000) {
  if (max_attempts < 1) throw std::invalid_argument("sample_valid_string: max_attempts >= 1");
  for (int a = 0; a < max_attempts; ++a) {
    SampleResult r = sample_string(pol, order, rng);
    if (is_valid(pol.space(), r.values)) return r;
  }
  throw std::runtime_error("sample_valid_string: no valid string in " +
                           std::to_string(max_attempts) + " attempts");
}

// Builds the full tape for a known string; shared by log_prob and gradients.
inline StringTape make_tape(const Policy& pol, const ActionString& s,
                            const std::vector<int>& order) {
  pol.space().check_shape(s);
  StringTape tape(pol, order);
  for (int t = 0; t < pol.space().n(); ++t) {
    tape.push_target();
    tape.commit_value(s[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])]);
  }
  return tape;
}

inline double log_prob(const Policy& pol, const ActionString& s, const std::vector<int>& order) {
  return make_tape(pol, s, order).total_log_prob();
}

// Seeds d(log softmax[a])/d(logits) = onehot(a) - p for every step.
inline std::vector<std::vector<double>> log_prob_seeds(const StringTape& tape) {
  std::vector<std::vector<double>> seeds(static_cast<std::size_t>(tape.n()));
  for (int t = 0; t < tape.n(); ++t) {
    const auto& logp = tape.step(t).logp;
    auto& s = seeds[static_cast<std::size_t>(t)];
    s.resize(logp.size());
    for (std::size_t j = 0; j < logp.size(); ++j) s[j] = -std::exp(logp[j]);
    s[static_cast<std::size_t>(tape.values()[static_cast<std::size_t>(t)])] += 1.0;
  }
  return seeds;
}

inline ParamStore grad_log_prob(const Policy& pol, const ActionString& s,
                                const std::vector<int>& order) {
  StringTape tape = make_tape(pol, s, order);
  ParamStore grad = pol.params().zeros_like();
  tape.backward(log_prob_seeds(tape), grad);
  return grad;
}

}  // namespace remaade
