#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sgt/error.hpp"
#include "sgt/rng.hpp"
#include "sgt/scenegraph.hpp"
#include "sgt/tokenizer.hpp"

namespace sgt {

enum class SupervisionMode { FullToken, PredicateOnly };

struct ModelConfig {
  int vocab_size = 0;
  int context_length = 1024;
  int hidden_size = 768;
  int num_heads = 12;
  int num_layers = 12;
  int feedforward_multiplier = 4;
  double learning_rate = 5e-4;
  double weight_decay = 1e-2;
  int batch_size = 16;
  int max_epochs = 50;
  int patience = 5;  // early-stopping epochs without holdout improvement
  SupervisionMode supervision_mode = SupervisionMode::FullToken;
  std::uint64_t seed = 0;

  void validate() const;
  int head_dim() const { return hidden_size / num_heads; }
  int ff_dim() const { return hidden_size * feedforward_multiplier; }
};

ModelConfig desk_config(int vocab_size);
ModelConfig paper_config(int vocab_size);

// Pre-LN decoder-only transformer: learned token + absolute positional
// embeddings, per-layer {LN, causal multi-head attention, LN, GELU MLP},
// final LN, then a bias-free projection to vocabulary logits. The projection
// is zero-initialized so a fresh model emits the uniform distribution.
template <typename S>
struct TParams {
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  struct Layer {
    Mat ln1_g, ln1_b;
    Mat wq, bq, wk, bk, wv, bv, wo, bo;
    Mat ln2_g, ln2_b;
    Mat w1, b1, w2, b2;
  };

  Mat tok_emb;  // [vocab × hidden]
  Mat pos_emb;  // [context × hidden]
  std::vector<Layer> layers;
  Mat lnf_g, lnf_b;
  Mat head_w;  // [hidden × vocab], no bias

  // Stable name → matrix enumeration (checkpoint order, optimizer order).
  template <typename F>
  void visit(F&& f) {
    f("tok_emb", tok_emb);
    f("pos_emb", pos_emb);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const std::string p = "layers." + std::to_string(i) + ".";
      auto& l = layers[i];
      f(p + "ln1.gamma", l.ln1_g);
      f(p + "ln1.beta", l.ln1_b);
      f(p + "attn.wq", l.wq);
      f(p + "attn.bq", l.bq);
      f(p + "attn.wk", l.wk);
      f(p + "attn.bk", l.bk);
      f(p + "attn.wv", l.wv);
      f(p + "attn.bv", l.bv);
      f(p + "attn.wo", l.wo);
      f(p + "attn.bo", l.bo);
      f(p + "ln2.gamma", l.ln2_g);
      f(p + "ln2.beta", l.ln2_b);
      f(p + "mlp.w1", l.w1);
      f(p + "mlp.b1", l.b1);
      f(p + "mlp.w2", l.w2);
      f(p + "mlp.b2", l.b2);
    }
    f("final_ln.gamma", lnf_g);
    f("final_ln.beta", lnf_b);
    f("head.w", head_w);
  }
  template <typename F>
  void visit(F&& f) const {
    const_cast<TParams*>(this)->visit(
        [&f](const std::string& name, const Mat& m) { f(name, m); });
  }
};

using ModelParams = TParams<float>;
using ModelParamsF64 = TParams<double>;

// Weight decay applies to true weight matrices only (component after the last
// '.' starts with 'w'); never to biases, LayerNorm parameters, or embeddings.
bool is_decayed_param(const std::string& name);

template <typename S>
TParams<S> init_params(const ModelConfig& cfg);

template <typename S>
TParams<S> zeros_like(const TParams<S>& params);

// Shifted-target supervision over padded rows. Canonical batches have
// width = context_length; any width ≥ the longest row is accepted (the padded
// tail is masked out, so narrower batches compute identical values).
struct TrainBatch {
  int rows = 0;
  int width = 0;
  std::vector<int> input;           // rows × width
  std::vector<int> target;          // rows × width; PAD where unsupervised
  std::vector<std::uint8_t> mask;   // 1 = position contributes to the loss
};

TrainBatch make_train_batch(const std::vector<TokenSequence>& seqs, int width,
                            SupervisionMode mode);

template <typename S>
typename TParams<S>::Mat forward(const ModelConfig& cfg, const TParams<S>& p,
                                 const std::vector<int>& ids);

template <typename S>
double loss(const ModelConfig& cfg, const TParams<S>& p, const TrainBatch& b);

// Exact reverse-mode gradients of `loss`; accumulates into `grads` (which is
// reshaped/zeroed first). Returns the loss.
template <typename S>
double loss_and_gradients(const ModelConfig& cfg, const TParams<S>& p,
                          const TrainBatch& b, TParams<S>& grads);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double holdout_loss = 0.0;
  double lr = 0.0;
};

struct TrainingLog {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;  // 1-based; -1 when no holdout
  bool stopped_early = false;

  std::string to_csv() const;  // header: epoch,train_loss,holdout_loss,lr
};

struct TrainResult {
  ModelParams params;
  TrainingLog log;
};

// AdamW (decoupled weight decay) with per-step cosine decay of the learning
// rate to 0 over max_epochs, early stopping on holdout loss (patience epochs,
// best parameters returned). Deterministic given cfg.seed.
TrainResult train(const ModelConfig& cfg, const Vocabulary& vocab,
                  const std::vector<SceneGraph>& corpus,
                  const std::vector<SceneGraph>& holdout);

// Softmax at the position after the query's [SEP], restricted to the relation
// block and renormalized. context = quintuple frames without [EOS]; a single
// trailing [EOS] is tolerated and trimmed.
std::vector<double> predict_relation_distribution(const ModelConfig& cfg,
                                                  const ModelParams& p,
                                                  const Vocabulary& vocab,
                                                  const TokenSequence& context,
                                                  const TokenSequence& query);

struct SamplerConfig {
  double top_p = 0.7;
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

// Smallest descending-probability prefix (ties by ascending index) with
// cumulative probability > top_p, renormalized within the prefix.
std::vector<std::pair<int, double>> top_p_candidates(
    const std::vector<double>& dist, double top_p);

struct Draw {
  int index = -1;
  double confidence = 0.0;  // probability under the pre-sampling distribution
};

// Temperature reweights dist (p_i^(1/τ), renormalized) before truncation.
Draw sample_top_p(const std::vector<double>& dist, double top_p,
                  double temperature, Rng& rng);
int sample_top_p(const std::vector<double>& dist, const SamplerConfig& cfg);

inline constexpr char kCheckpointMagic[4] = {'S', 'G', 'T', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Self-contained model file: magic, version, JSON header (config + schema +
// max_instances), then named little-endian float32 arrays with shapes.
struct Checkpoint {
  ModelConfig config;
  ModelParams params;
  Schema schema;
  int max_instances = 16;
};

void save_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint load_checkpoint(std::istream& in);

}  // namespace sgt
