#include "noisyst/model.hpp"

#include <cmath>
#include <cstring>

#include "noisyst/errors.hpp"
#include "noisyst/rng.hpp"

namespace noisyst {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;
using ConstVecMap = Eigen::Map<const VectorXd>;
using VecMap = Eigen::Map<VectorXd>;

const char* const kParamNames[] = {"embedding",  "enc_weight", "enc_bias",
                                   "dec_weight", "dec_bias",   "out_weight",
                                   "out_bias"};

std::vector<std::vector<std::size_t>> param_shapes(const ModelConfig& c) {
  const std::size_t gates = 4 * c.hidden_dim;
  const std::size_t in = c.embed_dim + c.hidden_dim;
  return {{c.vocab_size, c.embed_dim}, {gates, in}, {gates},
          {gates, in},                 {gates},     {c.vocab_size, c.hidden_dim},
          {c.vocab_size}};
}

ConstRowMap as_matrix(const Tensor& t) {
  return ConstRowMap(t.data.data(), static_cast<Eigen::Index>(t.rows()),
                     static_cast<Eigen::Index>(t.cols()));
}
RowMap as_matrix(Tensor& t) {
  return RowMap(t.data.data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}
ConstVecMap as_vector(const Tensor& t) {
  return ConstVecMap(t.data.data(), static_cast<Eigen::Index>(t.data.size()));
}
VecMap as_vector(Tensor& t) {
  return VecMap(t.data.data(), static_cast<Eigen::Index>(t.data.size()));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct CellCache {
  MatrixXd x, h_prev, c_prev;
  MatrixXd i, f, g, o;
  MatrixXd c_new, tanh_c;
};

// One LSTM step on a batch of column vectors.
void cell_forward(const Tensor& weight, const Tensor& bias, CellCache& k,
                  MatrixXd& h_out, MatrixXd& c_out) {
  const auto w = as_matrix(weight);
  const Eigen::Index e = k.x.rows();
  const Eigen::Index h = k.h_prev.rows();
  MatrixXd z = w.leftCols(e) * k.x + w.rightCols(h) * k.h_prev;
  z.colwise() += as_vector(bias);
  k.i = z.topRows(h).unaryExpr(&sigmoid);
  k.f = z.middleRows(h, h).unaryExpr(&sigmoid);
  k.g = z.middleRows(2 * h, h).array().tanh();
  k.o = z.bottomRows(h).unaryExpr(&sigmoid);
  k.c_new = k.f.cwiseProduct(k.c_prev) + k.i.cwiseProduct(k.g);
  k.tanh_c = k.c_new.array().tanh();
  h_out = k.o.cwiseProduct(k.tanh_c);
  c_out = k.c_new;
}

// Backpropagates gradients w.r.t. (h_new, c_new) of one step. Accumulates
// weight/bias gradients; returns gradients w.r.t. x, h_prev, c_prev.
void cell_backward(const Tensor& weight, const CellCache& k,
                   const MatrixXd& dh, const MatrixXd& dc_in, Tensor& dweight,
                   Tensor& dbias, MatrixXd& dx, MatrixXd& dh_prev,
                   MatrixXd& dc_prev) {
  const auto w = as_matrix(weight);
  const Eigen::Index e = k.x.rows();
  const Eigen::Index h = k.h_prev.rows();
  const Eigen::Index b = k.x.cols();

  MatrixXd dc = dc_in.array() +
                dh.array() * k.o.array() * (1.0 - k.tanh_c.array().square());
  MatrixXd dz(4 * h, b);
  dz.topRows(h) = dc.array() * k.g.array() * k.i.array() * (1.0 - k.i.array());
  dz.middleRows(h, h) =
      dc.array() * k.c_prev.array() * k.f.array() * (1.0 - k.f.array());
  dz.middleRows(2 * h, h) =
      dc.array() * k.i.array() * (1.0 - k.g.array().square());
  dz.bottomRows(h) =
      dh.array() * k.tanh_c.array() * k.o.array() * (1.0 - k.o.array());

  auto dw = as_matrix(dweight);
  dw.leftCols(e).noalias() += dz * k.x.transpose();
  dw.rightCols(h).noalias() += dz * k.h_prev.transpose();
  as_vector(dbias) += dz.rowwise().sum();

  dx.noalias() = w.leftCols(e).transpose() * dz;
  dh_prev.noalias() = w.rightCols(h).transpose() * dz;
  dc_prev = dc.cwiseProduct(k.f);
}

// Inverted dropout mask (entries 0 or 1/(1-rate)).
MatrixXd dropout_mask(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                      double rate) {
  MatrixXd m(rows, cols);
  const double keep = 1.0 / (1.0 - rate);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      m(r, c) = rng.uniform() < rate ? 0.0 : keep;
    }
  }
  return m;
}

void log_softmax_inplace(Eigen::Ref<VectorXd> v) {
  const double mx = v.maxCoeff();
  const double lse = mx + std::log((v.array() - mx).exp().sum());
  v.array() -= lse;
}

// Forward graph with everything needed by the backward pass.
struct Graph {
  const ModelParams& params;
  const Batch& batch;
  bool dropout = false;

  std::vector<CellCache> enc;
  std::vector<MatrixXd> enc_valid;  // 1 x B, 1.0 where t < length
  std::vector<MatrixXd> enc_drop_x;
  MatrixXd enc_drop_h;
  MatrixXd enc_h, enc_c;

  std::vector<CellCache> dec;
  std::vector<MatrixXd> dec_drop_x, dec_drop_out;
  std::vector<MatrixXd> dec_hidden;  // after output dropout
  std::vector<MatrixXd> dec_logp;    // V x B

  Graph(const ModelParams& p, const Batch& b, bool train_mode)
      : params(p), batch(b) {
    dropout = train_mode && p.config.dropout_rate > 0.0;
  }

  MatrixXd embed(const std::vector<TokenId>& ids) const {
    const auto emb = as_matrix(params[ParamId::kEmbedding]);
    MatrixXd x(emb.cols(), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t b = 0; b < ids.size(); ++b) {
      x.col(static_cast<Eigen::Index>(b)) =
          emb.row(ids[b]).transpose();
    }
    return x;
  }

  TokenId decoder_input(std::size_t b, std::size_t t) const {
    if (t == 0) return kBos;
    return t - 1 < batch.target_lengths[b] ? batch.target_at(b, t - 1) : kPad;
  }
  TokenId decoder_output(std::size_t b, std::size_t t) const {
    if (t < batch.target_lengths[b]) return batch.target_at(b, t);
    return t == batch.target_lengths[b] ? kEos : kPad;
  }

  LossResult run() {
    const auto& cfg = params.config;
    const std::size_t bsz = batch.size;
    const auto B = static_cast<Eigen::Index>(bsz);
    const auto H = static_cast<Eigen::Index>(cfg.hidden_dim);
    const auto E = static_cast<Eigen::Index>(cfg.embed_dim);
    const auto V = static_cast<Eigen::Index>(cfg.vocab_size);
    Rng rng(batch.dropout_seed);
    const double rate = cfg.dropout_rate;

    MatrixXd h = MatrixXd::Zero(H, B);
    MatrixXd c = MatrixXd::Zero(H, B);
    enc.resize(batch.source_width);
    enc_valid.resize(batch.source_width);
    if (dropout) enc_drop_x.resize(batch.source_width);
    std::vector<TokenId> ids(bsz);
    for (std::size_t t = 0; t < batch.source_width; ++t) {
      MatrixXd valid(1, B);
      for (std::size_t b = 0; b < bsz; ++b) {
        ids[b] = batch.source_at(b, t);
        valid(0, static_cast<Eigen::Index>(b)) =
            t < batch.source_lengths[b] ? 1.0 : 0.0;
      }
      CellCache& k = enc[t];
      k.x = embed(ids);
      if (dropout) {
        enc_drop_x[t] = dropout_mask(rng, E, B, rate);
        k.x = k.x.cwiseProduct(enc_drop_x[t]);
      }
      k.h_prev = h;
      k.c_prev = c;
      MatrixXd h_new, c_new;
      cell_forward(params[ParamId::kEncWeight], params[ParamId::kEncBias], k,
                   h_new, c_new);
      const auto m = valid.replicate(H, 1).array();
      h = (m * h_new.array() + (1.0 - m) * h.array()).matrix();
      c = (m * c_new.array() + (1.0 - m) * c.array()).matrix();
      enc_valid[t] = std::move(valid);
    }
    enc_h = h;
    enc_c = c;
    if (dropout) {
      enc_drop_h = dropout_mask(rng, H, B, rate);
      h = h.cwiseProduct(enc_drop_h);
    }

    const std::size_t steps = batch.target_width + 1;
    dec.resize(steps);
    dec_hidden.resize(steps);
    dec_logp.resize(steps);
    if (dropout) {
      dec_drop_x.resize(steps);
      dec_drop_out.resize(steps);
    }
    const auto w_out = as_matrix(params[ParamId::kOutWeight]);
    const auto b_out = as_vector(params[ParamId::kOutBias]);
    LossResult result;
    result.token_logprobs.resize(bsz);
    const double eps = cfg.label_smoothing;
    const double uniform_mass = eps / static_cast<double>(V);
    double total = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t b = 0; b < bsz; ++b) ids[b] = decoder_input(b, t);
      CellCache& k = dec[t];
      k.x = embed(ids);
      if (dropout) {
        dec_drop_x[t] = dropout_mask(rng, E, B, rate);
        k.x = k.x.cwiseProduct(dec_drop_x[t]);
      }
      k.h_prev = h;
      k.c_prev = c;
      cell_forward(params[ParamId::kDecWeight], params[ParamId::kDecBias], k, h,
                   c);
      MatrixXd hd = h;
      if (dropout) {
        dec_drop_out[t] = dropout_mask(rng, H, B, rate);
        hd = hd.cwiseProduct(dec_drop_out[t]);
      }
      MatrixXd logits = w_out * hd;
      logits.colwise() += b_out;
      for (Eigen::Index b = 0; b < B; ++b) log_softmax_inplace(logits.col(b));
      for (std::size_t b = 0; b < bsz; ++b) {
        if (t > batch.target_lengths[b]) continue;
        const auto col = logits.col(static_cast<Eigen::Index>(b));
        const TokenId y = decoder_output(b, t);
        const double nll = -col(y);
        const double smooth = -col.sum();
        total += (1.0 - eps) * nll + uniform_mass * smooth;
        result.token_logprobs[b].push_back(col(y));
        ++result.tokens;
      }
      dec_hidden[t] = std::move(hd);
      dec_logp[t] = std::move(logits);
    }
    result.loss = total / static_cast<double>(result.tokens);
    return result;
  }

  Gradients backward(std::size_t tokens) const {
    const auto& cfg = params.config;
    const std::size_t bsz = batch.size;
    const auto B = static_cast<Eigen::Index>(bsz);
    const auto H = static_cast<Eigen::Index>(cfg.hidden_dim);
    const auto V = static_cast<Eigen::Index>(cfg.vocab_size);
    Gradients g = zero_gradients(params);
    const auto w_out = as_matrix(params[ParamId::kOutWeight]);
    auto dw_out = as_matrix(g[ParamId::kOutWeight]);
    auto db_out = as_vector(g[ParamId::kOutBias]);
    auto demb = as_matrix(g[ParamId::kEmbedding]);
    const double eps = cfg.label_smoothing;
    const double uniform_mass = eps / static_cast<double>(V);
    const double scale = 1.0 / static_cast<double>(tokens);

    auto scatter_embedding = [&](const MatrixXd& dx, const MatrixXd* mask,
                                 auto token_of) {
      for (std::size_t b = 0; b < bsz; ++b) {
        const auto col = static_cast<Eigen::Index>(b);
        if (mask) {
          demb.row(token_of(b)) +=
              dx.col(col).cwiseProduct(mask->col(col)).transpose();
        } else {
          demb.row(token_of(b)) += dx.col(col).transpose();
        }
      }
    };

    MatrixXd dh = MatrixXd::Zero(H, B);
    MatrixXd dc = MatrixXd::Zero(H, B);
    MatrixXd dx, dh_prev, dc_prev;
    for (std::size_t t = dec.size(); t-- > 0;) {
      MatrixXd dlogits = MatrixXd::Zero(V, B);
      for (std::size_t b = 0; b < bsz; ++b) {
        if (t > batch.target_lengths[b]) continue;
        const auto col = static_cast<Eigen::Index>(b);
        dlogits.col(col) = dec_logp[t].col(col).array().exp() - uniform_mass;
        dlogits(decoder_output(b, t), col) -= 1.0 - eps;
        dlogits.col(col) *= scale;
      }
      dw_out.noalias() += dlogits * dec_hidden[t].transpose();
      db_out += dlogits.rowwise().sum();
      MatrixXd dhd = w_out.transpose() * dlogits;
      if (dropout) dhd = dhd.cwiseProduct(dec_drop_out[t]);
      dh += dhd;
      cell_backward(params[ParamId::kDecWeight], dec[t], dh, dc,
                    g[ParamId::kDecWeight], g[ParamId::kDecBias], dx, dh_prev,
                    dc_prev);
      scatter_embedding(dx, dropout ? &dec_drop_x[t] : nullptr,
                        [&](std::size_t b) { return decoder_input(b, t); });
      dh = std::move(dh_prev);
      dc = std::move(dc_prev);
    }

    if (dropout) dh = dh.cwiseProduct(enc_drop_h);
    for (std::size_t t = enc.size(); t-- > 0;) {
      const auto m = enc_valid[t].replicate(H, 1).array();
      MatrixXd dh_new = (m * dh.array()).matrix();
      MatrixXd dc_new = (m * dc.array()).matrix();
      cell_backward(params[ParamId::kEncWeight], enc[t], dh_new, dc_new,
                    g[ParamId::kEncWeight], g[ParamId::kEncBias], dx, dh_prev,
                    dc_prev);
      dh = (dh_prev.array() + (1.0 - m) * dh.array()).matrix();
      dc = (dc_prev.array() + (1.0 - m) * dc.array()).matrix();
      scatter_embedding(dx, dropout ? &enc_drop_x[t] : nullptr,
                        [&](std::size_t b) { return batch.source_at(b, t); });
    }
    return g;
  }
};

void check_batch(const ModelParams& params, const Batch& batch) {
  if (batch.size == 0) throw ConfigError("empty batch");
  if (batch.source.size() != batch.size * batch.source_width ||
      batch.target.size() != batch.size * batch.target_width ||
      batch.source_lengths.size() != batch.size ||
      batch.target_lengths.size() != batch.size) {
    throw ConfigError("batch matrices inconsistent with batch size");
  }
  const auto vocab = static_cast<TokenId>(params.config.vocab_size);
  for (TokenId t : batch.source) {
    if (t < 0 || t >= vocab) throw ConfigError("source token outside vocabulary");
  }
  for (TokenId t : batch.target) {
    if (t < 0 || t >= vocab) throw ConfigError("target token outside vocabulary");
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size < kNumReserved + 1) {
    throw ConfigError("vocab_size must exceed the reserved token count");
  }
  if (embed_dim < 1 || hidden_dim < 1) throw ConfigError("dims must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate must be in [0, 1)");
  }
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw ConfigError("label_smoothing must be in [0, 1)");
  }
  if (max_decode_len < 1) throw ConfigError("max_decode_len must be >= 1");
}

std::size_t ModelParams::num_values() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.data.size();
  return n;
}

void ModelParams::validate() const {
  const auto shapes = param_shapes(config);
  if (tensors.size() != shapes.size()) {
    throw ConfigError("expected " + std::to_string(shapes.size()) +
                      " parameter arrays, got " +
                      std::to_string(tensors.size()));
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const Tensor& t = tensors[i];
    std::size_t n = 1;
    for (auto d : shapes[i]) n *= d;
    if (t.name != kParamNames[i] || t.shape != shapes[i] || t.data.size() != n) {
      throw ConfigError("parameter array '" + t.name +
                        "' does not match the model config");
    }
    for (double v : t.data) {
      if (!std::isfinite(v)) {
        throw NumericError("non-finite entry in parameter array '" + t.name +
                           "'");
      }
    }
  }
}

std::uint64_t ModelParams::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tensors) {
    for (double v : t.data) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      h = mix_seed(h, bits);
    }
  }
  return h;
}

double Gradients::global_norm() const {
  double s = 0.0;
  for (const auto& t : tensors) {
    for (double v : t.data) s += v * v;
  }
  return std::sqrt(s);
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  Rng rng(seed);
  const double a = 1.0 / std::sqrt(static_cast<double>(config.hidden_dim));
  const auto shapes = param_shapes(config);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    Tensor t{kParamNames[i], shapes[i], {}};
    std::size_t n = 1;
    for (auto d : shapes[i]) n *= d;
    t.data.resize(n);
    for (double& v : t.data) v = (2.0 * rng.uniform() - 1.0) * a;
    p.tensors.push_back(std::move(t));
  }
  return p;
}

Gradients zero_gradients(const ModelParams& params) {
  Gradients g;
  g.tensors.reserve(params.tensors.size());
  for (const auto& t : params.tensors) {
    g.tensors.push_back(Tensor{t.name, t.shape,
                               std::vector<double>(t.data.size(), 0.0)});
  }
  return g;
}

Batch Batch::from_examples(std::span<const ParallelExample> examples,
                           std::uint64_t dropout_seed) {
  Batch batch;
  batch.size = examples.size();
  batch.dropout_seed = dropout_seed;
  for (const auto& ex : examples) {
    if (ex.source.empty()) throw UsageError("empty source sequence in batch");
    batch.source_width = std::max(batch.source_width, ex.source.size());
    batch.target_width = std::max(batch.target_width, ex.target.size());
  }
  batch.source.assign(batch.size * batch.source_width, kPad);
  batch.target.assign(batch.size * batch.target_width, kPad);
  for (std::size_t b = 0; b < batch.size; ++b) {
    const auto& ex = examples[b];
    std::copy(ex.source.begin(), ex.source.end(),
              batch.source.begin() + static_cast<std::ptrdiff_t>(b * batch.source_width));
    std::copy(ex.target.begin(), ex.target.end(),
              batch.target.begin() + static_cast<std::ptrdiff_t>(b * batch.target_width));
    batch.source_lengths.push_back(ex.source.size());
    batch.target_lengths.push_back(ex.target.size());
  }
  return batch;
}

LossResult forward_loss(const ModelParams& params, const Batch& batch,
                        bool train_mode) {
  check_batch(params, batch);
  Graph graph(params, batch, train_mode);
  return graph.run();
}

LossAndGrad loss_and_grad(const ModelParams& params, const Batch& batch,
                          bool train_mode) {
  check_batch(params, batch);
  Graph graph(params, batch, train_mode);
  LossAndGrad out;
  out.loss = graph.run();
  out.grads = graph.backward(out.loss.tokens);
  for (const auto& t : out.grads.tensors) {
    for (double v : t.data) {
      if (!std::isfinite(v)) {
        throw NumericError("non-finite gradient in '" + t.name + "'");
      }
    }
  }
  return out;
}

Gradients grad(const ModelParams& params, const Batch& batch, bool train_mode) {
  return loss_and_grad(params, batch, train_mode).grads;
}

namespace {

void single_step(const ModelParams& params, ParamId weight, ParamId bias,
                 TokenId input, const RecurrentState& in, RecurrentState& out) {
  const auto emb = as_matrix(params[ParamId::kEmbedding]);
  CellCache k;
  k.x = emb.row(input).transpose();
  k.h_prev = in.h;
  k.c_prev = in.c;
  MatrixXd h, c;
  cell_forward(params[weight], params[bias], k, h, c);
  out.h = h.col(0);
  out.c = c.col(0);
}

}  // namespace

RecurrentState encode_source(const ModelParams& params, const Sequence& source) {
  const auto H = static_cast<Eigen::Index>(params.config.hidden_dim);
  RecurrentState state{VectorXd::Zero(H), VectorXd::Zero(H)};
  for (TokenId t : source) {
    RecurrentState next;
    single_step(params, ParamId::kEncWeight, ParamId::kEncBias, t, state, next);
    state = std::move(next);
  }
  return state;
}

RecurrentState decoder_step(const ModelParams& params,
                            const RecurrentState& state, TokenId input,
                            Eigen::VectorXd& logprobs) {
  RecurrentState next;
  single_step(params, ParamId::kDecWeight, ParamId::kDecBias, input, state,
              next);
  logprobs = as_matrix(params[ParamId::kOutWeight]) * next.h +
             as_vector(params[ParamId::kOutBias]);
  log_softmax_inplace(logprobs);
  return next;
}

double score_sequence(const ModelParams& params, const Sequence& source,
                      const Sequence& target) {
  const ParallelExample ex{source, target};
  const Batch batch = Batch::from_examples(std::span(&ex, 1), 0);
  const LossResult r = forward_loss(params, batch, false);
  double total = 0.0;
  for (double lp : r.token_logprobs[0]) total += lp;
  return total;
}

}  // namespace noisyst
