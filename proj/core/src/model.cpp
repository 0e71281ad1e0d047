#include "sgt/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json_util.hpp"

namespace sgt {
namespace {

constexpr double kLnEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
constexpr double kInitStd = 0.02;
constexpr std::uint64_t kInitStream = 0x1217;

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
struct LayerCache {
  Mat<S> x_in, a, q, k, v, ctx, x_mid, b, h_pre, h_act;
  Mat<S> mu1, rs1, mu2, rs2;      // [T×1] per-row stats
  std::vector<Mat<S>> probs;      // per head, [T×T], zero above the diagonal
};

template <typename S>
struct ForwardCache {
  std::vector<LayerCache<S>> layers;
  Mat<S> x_last, f, muf, rsf;
};

template <typename S>
void layernorm_fwd(const Mat<S>& x, const Mat<S>& g, const Mat<S>& b,
                   Mat<S>& y, Mat<S>& mu, Mat<S>& rstd) {
  mu = x.rowwise().mean();
  Mat<S> xc = x.colwise() - mu.col(0);
  rstd = ((xc.array().square().rowwise().mean() + static_cast<S>(kLnEps))
              .rsqrt())
             .matrix();
  y = (((xc.array().colwise() * rstd.col(0).array()).rowwise() *
        g.row(0).array())
           .rowwise() +
       b.row(0).array())
          .matrix();
}

// dy -> dx; accumulates dg, db.
template <typename S>
void layernorm_bwd(const Mat<S>& x, const Mat<S>& g, const Mat<S>& mu,
                   const Mat<S>& rstd, const Mat<S>& dy, Mat<S>& dx,
                   Mat<S>& dg, Mat<S>& db) {
  const auto xhat =
      ((x.array().colwise() - mu.col(0).array()).colwise() *
       rstd.col(0).array())
          .eval();
  dg.row(0).array() += (dy.array() * xhat).colwise().sum();
  db.row(0).array() += dy.array().colwise().sum();
  const auto dxhat = (dy.array().rowwise() * g.row(0).array()).eval();
  const auto m1 = dxhat.rowwise().mean().eval();
  const auto m2 = (dxhat * xhat).rowwise().mean().eval();
  dx = (((dxhat.colwise() - m1) - (xhat.colwise() * m2)).colwise() *
        rstd.col(0).array())
           .matrix();
}

template <typename S>
void gelu_fwd(const Mat<S>& x, Mat<S>& y) {
  const auto u =
      (static_cast<S>(kGeluC) *
       (x.array() + static_cast<S>(kGeluA) * x.array().cube()))
          .eval();
  y = (static_cast<S>(0.5) * x.array() * (S(1) + u.tanh())).matrix();
}

template <typename S>
void gelu_bwd(const Mat<S>& x, const Mat<S>& dy, Mat<S>& dx) {
  const auto u =
      (static_cast<S>(kGeluC) *
       (x.array() + static_cast<S>(kGeluA) * x.array().cube()))
          .eval();
  const auto t = u.tanh().eval();
  const auto du = (static_cast<S>(kGeluC) *
                   (S(1) + S(3) * static_cast<S>(kGeluA) * x.array().square()))
                      .eval();
  dx = (dy.array() *
        (static_cast<S>(0.5) * (S(1) + t) +
         static_cast<S>(0.5) * x.array() * (S(1) - t.square()) * du))
           .matrix();
}

// Forward over one unpadded id sequence; fills the cache when given.
template <typename S>
Mat<S> forward_impl(const ModelConfig& cfg, const TParams<S>& p,
                    const int* ids, int T, ForwardCache<S>* cache) {
  const int d = cfg.hidden_size;
  const int H = cfg.num_heads;
  const int hd = cfg.head_dim();
  const S inv_sqrt = static_cast<S>(1.0 / std::sqrt(static_cast<double>(hd)));

  Mat<S> x(T, d);
  for (int t = 0; t < T; ++t)
    x.row(t) = p.tok_emb.row(ids[t]) + p.pos_emb.row(t);

  if (cache) cache->layers.resize(static_cast<std::size_t>(cfg.num_layers));

  Mat<S> a, q, k, v, ctx, scores, b, h_pre, h_act, mu, rs;
  for (int l = 0; l < cfg.num_layers; ++l) {
    const auto& layer = p.layers[static_cast<std::size_t>(l)];
    LayerCache<S>* lc = cache ? &cache->layers[static_cast<std::size_t>(l)]
                              : nullptr;
    if (lc) lc->x_in = x;

    layernorm_fwd(x, layer.ln1_g, layer.ln1_b, a, mu, rs);
    if (lc) {
      lc->a = a;
      lc->mu1 = mu;
      lc->rs1 = rs;
    }

    q.noalias() = a * layer.wq;
    q.array().rowwise() += layer.bq.row(0).array();
    k.noalias() = a * layer.wk;
    k.array().rowwise() += layer.bk.row(0).array();
    v.noalias() = a * layer.wv;
    v.array().rowwise() += layer.bv.row(0).array();

    ctx.resize(T, d);
    if (lc) lc->probs.resize(static_cast<std::size_t>(H));
    for (int h = 0; h < H; ++h) {
      const auto qh = q.middleCols(h * hd, hd);
      const auto kh = k.middleCols(h * hd, hd);
      const auto vh = v.middleCols(h * hd, hd);
      scores.resize(T, T);
      scores.noalias() = qh * kh.transpose();
      scores *= inv_sqrt;
      // Causal prefix softmax, row by row.
      for (int i = 0; i < T; ++i) {
        auto seg = scores.row(i).head(i + 1);
        const S m = seg.maxCoeff();
        seg.array() = (seg.array() - m).exp();
        seg /= seg.sum();
        if (i + 1 < T) scores.row(i).tail(T - i - 1).setZero();
      }
      ctx.middleCols(h * hd, hd).noalias() = scores * vh;
      if (lc) lc->probs[static_cast<std::size_t>(h)] = scores;
    }
    if (lc) {
      lc->q = q;
      lc->k = k;
      lc->v = v;
      lc->ctx = ctx;
    }

    x.noalias() += ctx * layer.wo;
    x.array().rowwise() += layer.bo.row(0).array();
    if (lc) lc->x_mid = x;

    layernorm_fwd(x, layer.ln2_g, layer.ln2_b, b, mu, rs);
    if (lc) {
      lc->b = b;
      lc->mu2 = mu;
      lc->rs2 = rs;
    }

    h_pre.noalias() = b * layer.w1;
    h_pre.array().rowwise() += layer.b1.row(0).array();
    gelu_fwd(h_pre, h_act);
    if (lc) {
      lc->h_pre = h_pre;
      lc->h_act = h_act;
    }

    x.noalias() += h_act * layer.w2;
    x.array().rowwise() += layer.b2.row(0).array();
  }

  Mat<S> f;
  layernorm_fwd(x, p.lnf_g, p.lnf_b, f, mu, rs);
  if (cache) {
    cache->x_last = x;
    cache->f = f;
    cache->muf = mu;
    cache->rsf = rs;
  }
  Mat<S> logits(T, cfg.vocab_size);
  logits.noalias() = f * p.head_w;
  return logits;
}

// Reverse pass matching forward_impl; accumulates into grads.
template <typename S>
void backward_impl(const ModelConfig& cfg, const TParams<S>& p,
                   const int* ids, int T, const ForwardCache<S>& cache,
                   const Mat<S>& dlogits, TParams<S>& g) {
  const int d = cfg.hidden_size;
  const int H = cfg.num_heads;
  const int hd = cfg.head_dim();
  const S inv_sqrt = static_cast<S>(1.0 / std::sqrt(static_cast<double>(hd)));

  g.head_w.noalias() += cache.f.transpose() * dlogits;
  Mat<S> df(T, d);
  df.noalias() = dlogits * p.head_w.transpose();

  Mat<S> dx;
  layernorm_bwd(cache.x_last, p.lnf_g, cache.muf, cache.rsf, df, dx, g.lnf_g,
                g.lnf_b);

  Mat<S> dh_act, dh_pre, db_, dxm, dctx, dq, dk, dv, da, dxi;
  for (int l = cfg.num_layers - 1; l >= 0; --l) {
    const auto& layer = p.layers[static_cast<std::size_t>(l)];
    auto& gl = g.layers[static_cast<std::size_t>(l)];
    const auto& lc = cache.layers[static_cast<std::size_t>(l)];

    // MLP: x_out = x_mid + gelu(LN2(x_mid)·w1 + b1)·w2 + b2, dx = dx_out.
    dh_act.noalias() = dx * layer.w2.transpose();
    gl.w2.noalias() += lc.h_act.transpose() * dx;
    gl.b2.row(0).array() += dx.array().colwise().sum();
    gelu_bwd(lc.h_pre, dh_act, dh_pre);
    gl.w1.noalias() += lc.b.transpose() * dh_pre;
    gl.b1.row(0).array() += dh_pre.array().colwise().sum();
    db_.noalias() = dh_pre * layer.w1.transpose();
    layernorm_bwd(lc.x_mid, layer.ln2_g, lc.mu2, lc.rs2, db_, dxm, gl.ln2_g,
                  gl.ln2_b);
    dxm += dx;  // residual

    // Attention: x_mid = x_in + (heads(LN1(x_in)))·wo + bo, dxm flows back.
    dctx.noalias() = dxm * layer.wo.transpose();
    gl.wo.noalias() += lc.ctx.transpose() * dxm;
    gl.bo.row(0).array() += dxm.array().colwise().sum();

    dq.setZero(T, d);
    dk.setZero(T, d);
    dv.setZero(T, d);
    for (int h = 0; h < H; ++h) {
      const auto& P = lc.probs[static_cast<std::size_t>(h)];
      const auto kh = lc.k.middleCols(h * hd, hd);
      const auto qh = lc.q.middleCols(h * hd, hd);
      const auto vh = lc.v.middleCols(h * hd, hd);
      const auto dch = dctx.middleCols(h * hd, hd);

      Mat<S> dP(T, T);
      dP.noalias() = dch * vh.transpose();
      dv.middleCols(h * hd, hd).noalias() += P.transpose() * dch;

      // Softmax backward; masked entries have P = 0, so dS stays 0 there.
      Mat<S> dS =
          (P.array() *
           (dP.array().colwise() -
            (dP.array() * P.array()).rowwise().sum()))
              .matrix();
      dq.middleCols(h * hd, hd).noalias() += dS * kh * inv_sqrt;
      dk.middleCols(h * hd, hd).noalias() += dS.transpose() * qh * inv_sqrt;
    }

    gl.wq.noalias() += lc.a.transpose() * dq;
    gl.bq.row(0).array() += dq.array().colwise().sum();
    gl.wk.noalias() += lc.a.transpose() * dk;
    gl.bk.row(0).array() += dk.array().colwise().sum();
    gl.wv.noalias() += lc.a.transpose() * dv;
    gl.bv.row(0).array() += dv.array().colwise().sum();

    da.noalias() = dq * layer.wq.transpose();
    da.noalias() += dk * layer.wk.transpose();
    da.noalias() += dv * layer.wv.transpose();

    layernorm_bwd(lc.x_in, layer.ln1_g, lc.mu1, lc.rs1, da, dxi, gl.ln1_g,
                  gl.ln1_b);
    dx = dxm + dxi;
  }

  for (int t = 0; t < T; ++t) {
    g.tok_emb.row(ids[t]) += dx.row(t);
    g.pos_emb.row(t) += dx.row(t);
  }
}

template <typename S>
Mat<S> zero_mat(long rows, long cols) {
  return Mat<S>::Zero(rows, cols);
}

int row_length(const TrainBatch& b, int r) {
  const int* in = b.input.data() + static_cast<std::ptrdiff_t>(r) * b.width;
  int len = 0;
  while (len < b.width && in[len] != Vocabulary::kPad) ++len;
  return len;
}

void check_batch(const ModelConfig& cfg, const TrainBatch& b) {
  if (b.rows <= 0 || b.width <= 0)
    fail(ErrorCode::EmptyInput, "empty TrainBatch");
  if (b.width > cfg.context_length)
    fail(ErrorCode::ContextOverflow,
         "batch width " + std::to_string(b.width) + " > context_length " +
             std::to_string(cfg.context_length));
  const std::size_t n = static_cast<std::size_t>(b.rows) * b.width;
  if (b.input.size() != n || b.target.size() != n || b.mask.size() != n)
    fail(ErrorCode::ShapeMismatch, "TrainBatch arrays disagree with rows×width");
}

// Shared driver for loss and loss+gradients.
template <typename S>
double loss_driver(const ModelConfig& cfg, const TParams<S>& p,
                   const TrainBatch& b, TParams<S>* grads) {
  cfg.validate();
  check_batch(cfg, b);
  long total_mask = 0;
  for (const auto m : b.mask) total_mask += m;
  if (total_mask == 0)
    fail(ErrorCode::EmptyMask, "no supervised positions in batch");

  const double inv_m = 1.0 / static_cast<double>(total_mask);
  double total = 0.0;
  ForwardCache<S> cache;
  Mat<S> dlogits;
  for (int r = 0; r < b.rows; ++r) {
    const int T = row_length(b, r);
    if (T == 0) continue;
    const int* ids = b.input.data() + static_cast<std::ptrdiff_t>(r) * b.width;
    const int* tgt = b.target.data() + static_cast<std::ptrdiff_t>(r) * b.width;
    const std::uint8_t* mask =
        b.mask.data() + static_cast<std::ptrdiff_t>(r) * b.width;

    cache.layers.clear();
    const Mat<S> logits =
        forward_impl(cfg, p, ids, T, grads ? &cache : nullptr);
    if (grads) dlogits = zero_mat<S>(T, cfg.vocab_size);

    for (int t = 0; t < T; ++t) {
      if (!mask[t]) continue;
      if (tgt[t] < 0 || tgt[t] >= cfg.vocab_size)
        fail(ErrorCode::ShapeMismatch, "target id out of vocabulary");
      // Log-softmax in double for the loss value.
      const auto row = logits.row(t);
      const S zmax = row.maxCoeff();
      double sum = 0.0;
      for (int w = 0; w < cfg.vocab_size; ++w)
        sum += std::exp(static_cast<double>(row[w] - zmax));
      const double lse = std::log(sum) + static_cast<double>(zmax);
      total += (lse - static_cast<double>(row[tgt[t]])) * inv_m;

      if (grads) {
        auto drow = dlogits.row(t);
        drow.array() = (row.array() - zmax).exp();
        drow /= drow.sum();
        drow[tgt[t]] -= S(1);
        drow *= static_cast<S>(inv_m);
      }
    }
    if (grads) backward_impl(cfg, p, ids, T, cache, dlogits, *grads);
  }
  // Positions beyond any mask contribute nothing; masked rows of dlogits are
  // zero, so padded-width batches and trimmed batches agree bit for bit.
  return total;
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size < 1) fail(ErrorCode::ShapeMismatch, "vocab_size must be >= 1");
  if (context_length < 8)
    fail(ErrorCode::ShapeMismatch, "context_length must be >= 8");
  if (hidden_size < 1 || num_heads < 1 || num_layers < 1 ||
      feedforward_multiplier < 1)
    fail(ErrorCode::ShapeMismatch, "model dimensions must be positive");
  if (hidden_size % num_heads != 0)
    fail(ErrorCode::ShapeMismatch, "hidden_size not divisible by num_heads");
  if (batch_size < 1) fail(ErrorCode::ShapeMismatch, "batch_size must be >= 1");
}

ModelConfig desk_config(int vocab_size) {
  ModelConfig cfg;
  cfg.vocab_size = vocab_size;
  cfg.context_length = 256;
  cfg.hidden_size = 128;
  cfg.num_heads = 4;
  cfg.num_layers = 4;
  return cfg;
}

ModelConfig paper_config(int vocab_size) {
  ModelConfig cfg;
  cfg.vocab_size = vocab_size;
  cfg.context_length = 1024;
  cfg.hidden_size = 768;
  cfg.num_heads = 12;
  cfg.num_layers = 12;
  return cfg;
}

bool is_decayed_param(const std::string& name) {
  const auto dot = name.rfind('.');
  const std::string leaf = dot == std::string::npos ? name : name.substr(dot + 1);
  return !leaf.empty() && leaf.front() == 'w';
}

template <typename S>
TParams<S> init_params(const ModelConfig& cfg) {
  cfg.validate();
  const int d = cfg.hidden_size;
  const int ff = cfg.ff_dim();

  TParams<S> p;
  p.layers.resize(static_cast<std::size_t>(cfg.num_layers));
  p.tok_emb.resize(cfg.vocab_size, d);
  p.pos_emb.resize(cfg.context_length, d);
  for (auto& l : p.layers) {
    l.ln1_g = Mat<S>::Ones(1, d);
    l.ln1_b = zero_mat<S>(1, d);
    l.wq.resize(d, d);
    l.bq = zero_mat<S>(1, d);
    l.wk.resize(d, d);
    l.bk = zero_mat<S>(1, d);
    l.wv.resize(d, d);
    l.bv = zero_mat<S>(1, d);
    l.wo.resize(d, d);
    l.bo = zero_mat<S>(1, d);
    l.ln2_g = Mat<S>::Ones(1, d);
    l.ln2_b = zero_mat<S>(1, d);
    l.w1.resize(d, ff);
    l.b1 = zero_mat<S>(1, ff);
    l.w2.resize(ff, d);
    l.b2 = zero_mat<S>(1, d);
  }
  p.lnf_g = Mat<S>::Ones(1, d);
  p.lnf_b = zero_mat<S>(1, d);
  p.head_w = zero_mat<S>(d, cfg.vocab_size);  // uniform logits at init

  Rng rng(derive_seed(cfg.seed, kInitStream));
  const auto fill_normal = [&rng](Mat<S>& m) {
    for (long r = 0; r < m.rows(); ++r)
      for (long c = 0; c < m.cols(); ++c)
        m(r, c) = static_cast<S>(rng.normal() * kInitStd);
  };
  fill_normal(p.tok_emb);
  fill_normal(p.pos_emb);
  for (auto& l : p.layers) {
    fill_normal(l.wq);
    fill_normal(l.wk);
    fill_normal(l.wv);
    fill_normal(l.wo);
    fill_normal(l.w1);
    fill_normal(l.w2);
  }
  return p;
}

template <typename S>
TParams<S> zeros_like(const TParams<S>& params) {
  TParams<S> z = params;
  z.visit([](const std::string&, Mat<S>& m) { m.setZero(); });
  return z;
}

TrainBatch make_train_batch(const std::vector<TokenSequence>& seqs, int width,
                            SupervisionMode mode) {
  if (seqs.empty()) fail(ErrorCode::EmptyInput, "no sequences");
  TrainBatch b;
  b.rows = static_cast<int>(seqs.size());
  b.width = width;
  const std::size_t n = static_cast<std::size_t>(b.rows) * width;
  b.input.assign(n, Vocabulary::kPad);
  b.target.assign(n, Vocabulary::kPad);
  b.mask.assign(n, 0);
  for (int r = 0; r < b.rows; ++r) {
    const auto& s = seqs[static_cast<std::size_t>(r)];
    const int L = static_cast<int>(s.size());
    if (L > width)
      fail(ErrorCode::ContextOverflow, "sequence length " + std::to_string(L) +
                                           " > batch width " +
                                           std::to_string(width));
    const std::size_t base = static_cast<std::size_t>(r) * width;
    for (int t = 0; t < L; ++t) b.input[base + t] = s.ids[static_cast<std::size_t>(t)];
    for (int t = 0; t + 1 < L; ++t) {
      const int y = s.ids[static_cast<std::size_t>(t) + 1];
      b.target[base + t] = y;
      const bool supervise =
          mode == SupervisionMode::FullToken
              ? y != Vocabulary::kPad
              : s.roles[static_cast<std::size_t>(t) + 1] == TokenRole::Predicate;
      b.mask[base + t] = supervise ? 1 : 0;
    }
    // Inference-format row (ends with an open [BOQ]..[SEP] query): the query
    // content is given, not predicted, so full-token mode leaves every
    // position inside the frame before [SEP] unsupervised.
    if (mode == SupervisionMode::FullToken && L >= 2 &&
        s.ids[static_cast<std::size_t>(L) - 1] == Vocabulary::kSep) {
      int boq = -1;
      for (int t = L - 2; t >= 0; --t)
        if (s.ids[static_cast<std::size_t>(t)] == Vocabulary::kBoq) {
          boq = t;
          break;
        }
      if (boq >= 0)
        for (int t = boq; t + 1 < L; ++t) b.mask[base + t] = 0;
    }
  }
  return b;
}

template <typename S>
typename TParams<S>::Mat forward(const ModelConfig& cfg, const TParams<S>& p,
                                 const std::vector<int>& ids) {
  cfg.validate();
  if (static_cast<int>(ids.size()) > cfg.context_length)
    fail(ErrorCode::ContextOverflow,
         std::to_string(ids.size()) + " tokens > context_length " +
             std::to_string(cfg.context_length));
  if (ids.empty()) fail(ErrorCode::EmptyInput, "empty id sequence");
  for (int id : ids)
    if (id < 0 || id >= cfg.vocab_size)
      fail(ErrorCode::ShapeMismatch, "token id out of vocabulary");
  return forward_impl<S>(cfg, p, ids.data(), static_cast<int>(ids.size()),
                         nullptr);
}

template <typename S>
double loss(const ModelConfig& cfg, const TParams<S>& p, const TrainBatch& b) {
  return loss_driver<S>(cfg, p, b, nullptr);
}

template <typename S>
bool same_shapes(const TParams<S>& a, const TParams<S>& b) {
  if (a.layers.size() != b.layers.size()) return false;
  std::vector<std::pair<long, long>> da, db;
  const auto dims = [](const TParams<S>& t,
                       std::vector<std::pair<long, long>>& out) {
    t.visit([&out](const std::string&, const Mat<S>& m) {
      out.emplace_back(m.rows(), m.cols());
    });
  };
  dims(a, da);
  dims(b, db);
  return da == db;
}

template <typename S>
double loss_and_gradients(const ModelConfig& cfg, const TParams<S>& p,
                          const TrainBatch& b, TParams<S>& grads) {
  // Zero in place when grads is already shaped like p so callers may keep
  // pointers into it across steps; (re)build it otherwise.
  if (same_shapes(p, grads))
    grads.visit([](const std::string&, Mat<S>& m) { m.setZero(); });
  else
    grads = zeros_like(p);
  return loss_driver<S>(cfg, p, b, &grads);
}

std::vector<std::pair<int, double>> top_p_candidates(
    const std::vector<double>& dist, double top_p) {
  if (dist.empty()) fail(ErrorCode::EmptyInput, "empty distribution");
  if (top_p <= 0.0 || top_p > 1.0)
    fail(ErrorCode::ShapeMismatch, "top_p must be in (0, 1]");
  std::vector<int> order(dist.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&dist](int a, int b) {
    if (dist[static_cast<std::size_t>(a)] != dist[static_cast<std::size_t>(b)])
      return dist[static_cast<std::size_t>(a)] >
             dist[static_cast<std::size_t>(b)];
    return a < b;  // ties by ascending index
  });
  std::vector<std::pair<int, double>> kept;
  double cum = 0.0;
  for (int idx : order) {
    kept.emplace_back(idx, dist[static_cast<std::size_t>(idx)]);
    cum += dist[static_cast<std::size_t>(idx)];
    if (cum > top_p) break;
  }
  double norm = 0.0;
  for (const auto& [idx, p] : kept) norm += p;
  if (norm <= 0.0) fail(ErrorCode::EmptyInput, "distribution sums to zero");
  for (auto& [idx, p] : kept) p /= norm;
  return kept;
}

Draw sample_top_p(const std::vector<double>& dist, double top_p,
                  double temperature, Rng& rng) {
  if (temperature <= 0.0)
    fail(ErrorCode::ShapeMismatch, "temperature must be positive");
  std::vector<double> tempered = dist;
  if (temperature != 1.0) {
    double sum = 0.0;
    for (auto& p : tempered) {
      p = p > 0.0 ? std::pow(p, 1.0 / temperature) : 0.0;
      sum += p;
    }
    if (sum <= 0.0) fail(ErrorCode::EmptyInput, "distribution sums to zero");
    for (auto& p : tempered) p /= sum;
  }
  const auto kept = top_p_candidates(tempered, top_p);
  const double u = rng.uniform();
  double cum = 0.0;
  int chosen = kept.back().first;
  for (const auto& [idx, p] : kept) {
    cum += p;
    if (u < cum) {
      chosen = idx;
      break;
    }
  }
  return Draw{chosen, dist[static_cast<std::size_t>(chosen)]};
}

int sample_top_p(const std::vector<double>& dist, const SamplerConfig& cfg) {
  Rng rng(cfg.seed);
  return sample_top_p(dist, cfg.top_p, cfg.temperature, rng).index;
}

namespace {

void write_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
void write_pod(std::ostream& out, T value) {
  write_bytes(out, &value, sizeof(value));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(value));
  if (!in) fail(ErrorCode::FormatError, "checkpoint truncated");
  return value;
}

nlohmann::json config_to_json(const ModelConfig& cfg) {
  nlohmann::json j;
  j["vocab_size"] = cfg.vocab_size;
  j["context_length"] = cfg.context_length;
  j["hidden_size"] = cfg.hidden_size;
  j["num_heads"] = cfg.num_heads;
  j["num_layers"] = cfg.num_layers;
  j["feedforward_multiplier"] = cfg.feedforward_multiplier;
  j["learning_rate"] = cfg.learning_rate;
  j["weight_decay"] = cfg.weight_decay;
  j["batch_size"] = cfg.batch_size;
  j["max_epochs"] = cfg.max_epochs;
  j["patience"] = cfg.patience;
  j["supervision_mode"] =
      cfg.supervision_mode == SupervisionMode::FullToken ? "full_token"
                                                         : "predicate_only";
  j["seed"] = cfg.seed;
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.vocab_size = j.at("vocab_size").get<int>();
  cfg.context_length = j.at("context_length").get<int>();
  cfg.hidden_size = j.at("hidden_size").get<int>();
  cfg.num_heads = j.at("num_heads").get<int>();
  cfg.num_layers = j.at("num_layers").get<int>();
  cfg.feedforward_multiplier = j.at("feedforward_multiplier").get<int>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.weight_decay = j.at("weight_decay").get<double>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.max_epochs = j.at("max_epochs").get<int>();
  cfg.patience = j.at("patience").get<int>();
  cfg.supervision_mode =
      j.at("supervision_mode").get<std::string>() == "predicate_only"
          ? SupervisionMode::PredicateOnly
          : SupervisionMode::FullToken;
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  ckpt.config.validate();
  write_bytes(out, kCheckpointMagic, sizeof(kCheckpointMagic));
  write_pod(out, kCheckpointVersion);

  nlohmann::json header;
  header["config"] = config_to_json(ckpt.config);
  header["schema"] = schema_to_json_obj(ckpt.schema);
  header["max_instances"] = ckpt.max_instances;
  const std::string header_text = header.dump();
  write_pod(out, static_cast<std::uint64_t>(header_text.size()));
  write_bytes(out, header_text.data(), header_text.size());

  std::uint64_t count = 0;
  ckpt.params.visit([&count](const std::string&, const ModelParams::Mat&) {
    ++count;
  });
  write_pod(out, count);
  ckpt.params.visit([&out](const std::string& name,
                           const ModelParams::Mat& m) {
    write_pod(out, static_cast<std::uint32_t>(name.size()));
    write_bytes(out, name.data(), name.size());
    write_pod(out, static_cast<std::uint32_t>(2));
    write_pod(out, static_cast<std::uint64_t>(m.rows()));
    write_pod(out, static_cast<std::uint64_t>(m.cols()));
    write_bytes(out, m.data(), sizeof(float) * static_cast<std::size_t>(m.size()));
  });
  if (!out) fail(ErrorCode::IoError, "short write while saving checkpoint");
}

Checkpoint load_checkpoint(std::istream& in) {
  char magic[4] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    fail(ErrorCode::FormatError, "bad checkpoint magic");
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    fail(ErrorCode::VersionMismatch,
         "checkpoint version " + std::to_string(version) + ", expected " +
             std::to_string(kCheckpointVersion));

  const auto header_len = read_pod<std::uint64_t>(in);
  if (header_len > (1u << 20))
    fail(ErrorCode::FormatError, "unreasonable header length");
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!in) fail(ErrorCode::FormatError, "checkpoint truncated in header");

  Checkpoint ckpt;
  try {
    const auto header = nlohmann::json::parse(header_text);
    ckpt.config = config_from_json(header.at("config"));
    ckpt.schema = schema_from_json_obj(header.at("schema"));
    ckpt.max_instances = header.at("max_instances").get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("checkpoint header: ") + e.what());
  }
  ckpt.config.validate();

  // Expected shapes come from the config; every named array must match.
  ckpt.params = init_params<float>(ckpt.config);
  std::map<std::string, ModelParams::Mat*> slots;
  ckpt.params.visit([&slots](const std::string& name, ModelParams::Mat& m) {
    slots[name] = &m;
  });

  const auto count = read_pod<std::uint64_t>(in);
  if (count != slots.size())
    fail(ErrorCode::ShapeMismatch,
         "checkpoint has " + std::to_string(count) + " arrays, expected " +
             std::to_string(slots.size()));
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint32_t>(in);
    if (name_len > 4096) fail(ErrorCode::FormatError, "unreasonable name");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) fail(ErrorCode::FormatError, "checkpoint truncated in name");
    const auto it = slots.find(name);
    if (it == slots.end())
      fail(ErrorCode::ShapeMismatch, "unexpected array '" + name + "'");
    const auto ndim = read_pod<std::uint32_t>(in);
    if (ndim != 2)
      fail(ErrorCode::FormatError, "array '" + name + "' must be 2-D");
    const auto rows = read_pod<std::uint64_t>(in);
    const auto cols = read_pod<std::uint64_t>(in);
    ModelParams::Mat& m = *it->second;
    if (rows != static_cast<std::uint64_t>(m.rows()) ||
        cols != static_cast<std::uint64_t>(m.cols()))
      fail(ErrorCode::ShapeMismatch,
           "array '" + name + "' is " + std::to_string(rows) + "x" +
               std::to_string(cols) + ", config implies " +
               std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(float) *
                                         static_cast<std::size_t>(m.size())));
    if (!in) fail(ErrorCode::FormatError, "checkpoint truncated in data");
    slots.erase(it);
  }
  if (!slots.empty())
    fail(ErrorCode::ShapeMismatch,
         "checkpoint missing array '" + slots.begin()->first + "'");
  return ckpt;
}

template TParams<float> init_params<float>(const ModelConfig&);
template TParams<double> init_params<double>(const ModelConfig&);
template TParams<float> zeros_like<float>(const TParams<float>&);
template TParams<double> zeros_like<double>(const TParams<double>&);
template TParams<float>::Mat forward<float>(const ModelConfig&,
                                            const TParams<float>&,
                                            const std::vector<int>&);
template TParams<double>::Mat forward<double>(const ModelConfig&,
                                              const TParams<double>&,
                                              const std::vector<int>&);
template double loss<float>(const ModelConfig&, const TParams<float>&,
                            const TrainBatch&);
template double loss<double>(const ModelConfig&, const TParams<double>&,
                             const TrainBatch&);
template double loss_and_gradients<float>(const ModelConfig&,
                                          const TParams<float>&,
                                          const TrainBatch&, TParams<float>&);
template double loss_and_gradients<double>(const ModelConfig&,
                                           const TParams<double>&,
                                           const TrainBatch&,
                                           TParams<double>&);

}  // namespace sgt
