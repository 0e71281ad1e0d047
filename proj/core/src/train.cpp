#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "sgt/model.hpp"

namespace sgt {
namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.95;
constexpr double kAdamEps = 1e-8;
constexpr std::uint64_t kEpochStreamBase = 0x1000;

std::vector<TokenSequence> encode_all(const Vocabulary& vocab,
                                      const std::vector<SceneGraph>& graphs,
                                      int context_length) {
  std::vector<TokenSequence> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs)
    out.push_back(encode_graph(vocab, g, context_length, /*pad=*/false));
  return out;
}

int max_width(const std::vector<TokenSequence>& seqs, const std::size_t* idx,
              std::size_t count) {
  std::size_t w = 0;
  for (std::size_t i = 0; i < count; ++i)
    w = std::max(w, seqs[idx ? idx[i] : i].size());
  return static_cast<int>(w);
}

long supervised_count(const TrainBatch& b) {
  long n = 0;
  for (const auto m : b.mask) n += m;
  return n;
}

}  // namespace

std::string TrainingLog::to_csv() const {
  std::ostringstream out;
  out << "epoch,train_loss,holdout_loss,lr\n";
  out << std::setprecision(10);
  for (const auto& e : epochs)
    out << e.epoch << ',' << e.train_loss << ',' << e.holdout_loss << ','
        << e.lr << '\n';
  return out.str();
}

TrainResult train(const ModelConfig& cfg, const Vocabulary& vocab,
                  const std::vector<SceneGraph>& corpus,
                  const std::vector<SceneGraph>& holdout) {
  cfg.validate();
  if (cfg.vocab_size != vocab.size())
    fail(ErrorCode::ShapeMismatch,
         "config vocab_size " + std::to_string(cfg.vocab_size) +
             " != vocabulary size " + std::to_string(vocab.size()));
  if (corpus.empty()) fail(ErrorCode::EmptyInput, "empty training corpus");

  const auto train_seqs = encode_all(vocab, corpus, cfg.context_length);
  const auto holdout_seqs = encode_all(vocab, holdout, cfg.context_length);
  const SupervisionMode mode = cfg.supervision_mode;

  TrainBatch holdout_batch;
  if (!holdout_seqs.empty())
    holdout_batch = make_train_batch(
        holdout_seqs, max_width(holdout_seqs, nullptr, holdout_seqs.size()),
        mode);

  const std::size_t n = train_seqs.size();
  const std::size_t batches_per_epoch =
      (n + static_cast<std::size_t>(cfg.batch_size) - 1) /
      static_cast<std::size_t>(cfg.batch_size);
  const long total_steps =
      static_cast<long>(batches_per_epoch) * std::max(1, cfg.max_epochs);

  ModelParams params = init_params<float>(cfg);
  ModelParams m_state = zeros_like(params);
  ModelParams v_state = zeros_like(params);
  ModelParams grads = zeros_like(params);

  // Stable flattened views; visit order fixes the update order.
  struct Slot {
    ModelParams::Mat* p;
    ModelParams::Mat* g;
    ModelParams::Mat* m;
    ModelParams::Mat* v;
    bool decay;
  };
  std::vector<Slot> slots;
  {
    std::vector<std::pair<std::string, ModelParams::Mat*>> ps, gs, ms, vs;
    const auto collect = [](ModelParams& t,
                            std::vector<std::pair<std::string, ModelParams::Mat*>>& out) {
      t.visit([&out](const std::string& name, ModelParams::Mat& m) {
        out.emplace_back(name, &m);
      });
    };
    collect(params, ps);
    collect(grads, gs);
    collect(m_state, ms);
    collect(v_state, vs);
    for (std::size_t i = 0; i < ps.size(); ++i)
      slots.push_back(Slot{ps[i].second, gs[i].second, ms[i].second,
                           vs[i].second, is_decayed_param(ps[i].first)});
  }

  TrainResult result;
  ModelParams best_params = params;
  double best_holdout = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int epochs_since_best = 0;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  long step = 0;  // completed optimizer steps
  std::vector<TokenSequence> slice;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, kEpochStreamBase +
                                              static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    long epoch_count = 0;
    double last_lr = 0.0;
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t count =
          std::min(n - start, static_cast<std::size_t>(cfg.batch_size));
      slice.clear();
      for (std::size_t i = 0; i < count; ++i)
        slice.push_back(train_seqs[order[start + i]]);
      const TrainBatch batch = make_train_batch(
          slice, max_width(train_seqs, order.data() + start, count), mode);

      const double batch_loss = loss_and_gradients(cfg, params, batch, grads);
      if (!std::isfinite(batch_loss))
        fail(ErrorCode::NonFiniteLoss,
             "training loss is not finite at step " + std::to_string(step + 1));
      const long batch_sup = supervised_count(batch);
      epoch_loss += batch_loss * static_cast<double>(batch_sup);
      epoch_count += batch_sup;

      const double lr =
          cfg.learning_rate * 0.5 *
          (1.0 + std::cos(M_PI * static_cast<double>(step) /
                          static_cast<double>(total_steps)));
      last_lr = lr;
      ++step;
      const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (auto& s : slots) {
        auto p = s.p->array();
        auto g = s.g->array();
        auto m = s.m->array();
        auto v = s.v->array();
        m = static_cast<float>(kBeta1) * m + static_cast<float>(1.0 - kBeta1) * g;
        v = static_cast<float>(kBeta2) * v +
            static_cast<float>(1.0 - kBeta2) * g.square();
        // Decoupled decay: applied to the raw parameter, not the gradient.
        if (s.decay && cfg.weight_decay != 0.0)
          p -= static_cast<float>(lr * cfg.weight_decay) * p;
        p -= (static_cast<float>(lr) * (m / static_cast<float>(bc1))) /
             ((v / static_cast<float>(bc2)).sqrt() + static_cast<float>(kAdamEps));
      }
    }

    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.train_loss = epoch_count > 0
                           ? epoch_loss / static_cast<double>(epoch_count)
                           : 0.0;
    stats.lr = last_lr;

    if (!holdout_seqs.empty()) {
      stats.holdout_loss = loss(cfg, params, holdout_batch);
      if (!std::isfinite(stats.holdout_loss))
        fail(ErrorCode::NonFiniteLoss, "holdout loss is not finite");
      if (stats.holdout_loss < best_holdout) {
        best_holdout = stats.holdout_loss;
        best_epoch = epoch + 1;
        best_params = params;
        epochs_since_best = 0;
      } else {
        ++epochs_since_best;
      }
    }
    result.log.epochs.push_back(stats);

    if (!holdout_seqs.empty() && cfg.patience > 0 &&
        epochs_since_best >= cfg.patience) {
      result.log.stopped_early = true;
      break;
    }
  }

  result.log.best_epoch = best_epoch;
  result.params = holdout_seqs.empty() ? std::move(params)
                                       : std::move(best_params);
  return result;
}

std::vector<double> predict_relation_distribution(const ModelConfig& cfg,
                                                  const ModelParams& p,
                                                  const Vocabulary& vocab,
                                                  const TokenSequence& context,
                                                  const TokenSequence& query) {
  std::vector<int> ids = context.ids;
  if (!ids.empty() && ids.back() == Vocabulary::kEos) ids.pop_back();
  if (query.size() < 1 || query.ids.back() != Vocabulary::kSep)
    fail(ErrorCode::FramingError, "query must end with [SEP]");
  ids.insert(ids.end(), query.ids.begin(), query.ids.end());

  const auto logits = forward(cfg, p, ids);
  const auto row = logits.row(logits.rows() - 1);

  // Softmax over the full vocabulary in double, then restrict + renormalize.
  float zmax = row[0];
  for (int i = 1; i < cfg.vocab_size; ++i) zmax = std::max(zmax, row[i]);
  std::vector<double> probs(static_cast<std::size_t>(cfg.vocab_size));
  double sum = 0.0;
  for (int i = 0; i < cfg.vocab_size; ++i) {
    probs[static_cast<std::size_t>(i)] =
        std::exp(static_cast<double>(row[i] - zmax));
    sum += probs[static_cast<std::size_t>(i)];
  }

  const int begin = vocab.relation_begin();
  const int count = vocab.relation_count();
  std::vector<double> rel(static_cast<std::size_t>(count));
  double rel_sum = 0.0;
  for (int i = 0; i < count; ++i) {
    rel[static_cast<std::size_t>(i)] =
        probs[static_cast<std::size_t>(begin + i)] / sum;
    rel_sum += rel[static_cast<std::size_t>(i)];
  }
  if (rel_sum <= 0.0)
    fail(ErrorCode::NonFiniteLoss, "relation probabilities vanished");
  for (auto& v : rel) v /= rel_sum;
  return rel;
}

}  // namespace sgt
