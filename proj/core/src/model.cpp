#include "codcl/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "codcl/rng.hpp"

namespace codcl {

void ModelConfig::validate() const {
  if (embed_dim == 0 || hidden_dim == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (time_dim == 0 && !disable_time_encoding) {
    throw ConfigError("time_dim must be positive unless time encoding is disabled");
  }
  if (recent_neighbors == 0) throw ConfigError("recent_neighbors must be >= 1");
  if (!(bn_epsilon > 0.0)) throw ConfigError("bn_epsilon must be positive");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) {
    throw ConfigError("bn_momentum must lie in (0, 1]");
  }
}

void TrainConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (patience < 0) throw ConfigError("patience must be >= 0");
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  // log(1 + e^x) without overflow; equals -log(sigmoid(-x)).
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

namespace {

const char* tensor_name(TensorId id) {
  switch (id) {
    case kTimeFreq: return "time_freq";
    case kTimePhase: return "time_phase";
    case kBackboneW1: return "backbone_w1";
    case kBackboneB1: return "backbone_b1";
    case kBackboneW2: return "backbone_w2";
    case kBackboneB2: return "backbone_b2";
    case kHeadW1: return "head_w1";
    case kHeadB1: return "head_b1";
    case kHeadGamma: return "head_gamma";
    case kHeadBeta: return "head_beta";
    case kHeadW2: return "head_w2";
    case kHeadB2: return "head_b2";
    default: throw Error("bad tensor id");
  }
}

const char* buffer_name(BufferId id) {
  switch (id) {
    case kRunningMean: return "bn_running_mean";
    case kRunningVar: return "bn_running_var";
    default: throw Error("bad buffer id");
  }
}

Tensor make_tensor(TensorId id, std::vector<std::size_t> shape) {
  Tensor t;
  t.name = tensor_name(id);
  t.shape = std::move(shape);
  std::size_t numel = 1;
  for (std::size_t s : t.shape) numel *= s;
  t.data.assign(numel, 0.0);
  return t;
}

// Linear-layer helpers over 2-D tensors (shape = {rows, cols}).
Vec tensor_matvec(const Tensor& w, std::span<const double> x) {
  const std::size_t rows = w.shape[0], cols = w.shape[1];
  Vec y(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* row = w.data.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

void tensor_matvec_transpose_add(const Tensor& w, std::span<const double> x, Vec& y) {
  const std::size_t rows = w.shape[0], cols = w.shape[1];
  for (std::size_t r = 0; r < rows; ++r) {
    const double xr = x[r];
    const double* row = w.data.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) y[c] += xr * row[c];
  }
}

void tensor_outer_add(Tensor& gw, std::span<const double> a, std::span<const double> b) {
  const std::size_t rows = gw.shape[0], cols = gw.shape[1];
  for (std::size_t r = 0; r < rows; ++r) {
    const double ar = a[r];
    double* row = gw.data.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += ar * b[c];
  }
}

void vec_add(Vec& acc, std::span<const double> x) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
}

}  // namespace

ModelParameters make_empty_parameters(const ModelConfig& config) {
  config.validate();
  ModelParameters p;
  p.config_ = config;
  const std::size_t din = config.input_dim();
  const std::size_t h = config.hidden_dim;
  const std::size_t e = config.embed_dim;
  const std::size_t dt = config.time_dim;
  p.tensors_.resize(kTensorCount);
  p.tensors_[kTimeFreq] = make_tensor(kTimeFreq, {dt});
  p.tensors_[kTimePhase] = make_tensor(kTimePhase, {dt});
  p.tensors_[kBackboneW1] = make_tensor(kBackboneW1, {h, din});
  p.tensors_[kBackboneB1] = make_tensor(kBackboneB1, {h});
  p.tensors_[kBackboneW2] = make_tensor(kBackboneW2, {e, h});
  p.tensors_[kBackboneB2] = make_tensor(kBackboneB2, {e});
  p.tensors_[kHeadW1] = make_tensor(kHeadW1, {e, e});
  p.tensors_[kHeadB1] = make_tensor(kHeadB1, {e});
  p.tensors_[kHeadGamma] = make_tensor(kHeadGamma, {e});
  p.tensors_[kHeadBeta] = make_tensor(kHeadBeta, {e});
  p.tensors_[kHeadW2] = make_tensor(kHeadW2, {e});
  p.tensors_[kHeadB2] = make_tensor(kHeadB2, {1});
  p.buffers_.resize(kBufferCount);
  for (int b = 0; b < kBufferCount; ++b) {
    Tensor t;
    t.name = buffer_name(static_cast<BufferId>(b));
    t.shape = {e};
    t.data.assign(e, b == kRunningVar ? 1.0 : 0.0);
    p.buffers_[b] = std::move(t);
  }
  return p;
}

ModelParameters ModelParameters::initialized(const ModelConfig& config,
                                             std::uint64_t seed) {
  ModelParameters p = make_empty_parameters(config);
  auto fill_uniform = [&](TensorId id, std::size_t fan_in) {
    Tensor& t = p.tensor(id);
    std::mt19937_64 gen(mix_seed(seed, static_cast<std::uint64_t>(id) + 101));
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(1, fan_in)));
    for (double& x : t.data) x = uniform_range(gen, -bound, bound);
  };
  fill_uniform(kTimeFreq, 1);
  fill_uniform(kBackboneW1, config.input_dim());
  fill_uniform(kBackboneW2, config.hidden_dim);
  fill_uniform(kHeadW1, config.embed_dim);
  fill_uniform(kHeadW2, config.embed_dim);
  std::fill(p.tensor(kHeadGamma).data.begin(), p.tensor(kHeadGamma).data.end(), 1.0);
  return p;
}

bool ModelParameters::same_shapes(const ModelParameters& other) const {
  for (int i = 0; i < kTensorCount; ++i) {
    if (tensors_[i].shape != other.tensors_[i].shape) return false;
  }
  return true;
}

Gradients::Gradients(const ModelParameters& params) {
  tensors.reserve(kTensorCount);
  for (const Tensor& t : params.tensors()) {
    Tensor g;
    g.name = t.name;
    g.shape = t.shape;
    g.data.assign(t.data.size(), 0.0);
    tensors.push_back(std::move(g));
  }
}

void Gradients::zero() {
  for (Tensor& t : tensors) std::fill(t.data.begin(), t.data.end(), 0.0);
}

namespace {

/// Cached forward state of one backbone evaluation.
struct EmbedCache {
  Vec input;    // [x_self | neighbor mean | time encoding]
  Vec hidden;   // tanh activations
  Vec sin_arg;  // sin(freq * dt + phase), for the time-encoding gradient
  double dt = 0.0;
  Vec h;        // output embedding
};

void embed_forward(const ModelParameters& params, const TemporalGraph& graph, NodeId u,
                   Time t, EmbedCache& cache) {
  const ModelConfig& cfg = params.config();
  if (graph.feature_dim() != cfg.feature_dim) {
    throw Error("model configured for feature dim " + std::to_string(cfg.feature_dim) +
                " but graph provides " + std::to_string(graph.feature_dim()));
  }
  const std::size_t d = cfg.feature_dim;
  const std::size_t dt_dim = cfg.time_dim;
  cache.input.assign(cfg.input_dim(), 0.0);

  const auto x_self = graph.node_features(u);
  std::copy(x_self.begin(), x_self.end(), cache.input.begin());

  // Mean features over the K most recent events strictly before t.
  const auto adj = graph.adjacency(u);
  auto end = std::lower_bound(adj.begin(), adj.end(), t,
                              [](const AdjacencyEntry& e, Time value) {
                                return e.timestamp < value;
                              });
  const std::size_t history = static_cast<std::size_t>(end - adj.begin());
  const std::size_t take = std::min(history, cfg.recent_neighbors);
  cache.dt = 0.0;
  if (take > 0) {
    for (std::size_t i = history - take; i < history; ++i) {
      const auto xf = graph.node_features(adj[i].other);
      for (std::size_t c = 0; c < d; ++c) cache.input[d + c] += xf[c];
    }
    for (std::size_t c = 0; c < d; ++c) {
      cache.input[d + c] /= static_cast<double>(take);
    }
    cache.dt = t - adj[history - 1].timestamp;
  }

  cache.sin_arg.assign(dt_dim, 0.0);
  if (!cfg.disable_time_encoding) {
    const Vec& freq = params.tensor(kTimeFreq).data;
    const Vec& phase = params.tensor(kTimePhase).data;
    for (std::size_t j = 0; j < dt_dim; ++j) {
      const double arg = freq[j] * cache.dt + phase[j];
      cache.input[2 * d + j] = std::cos(arg);
      cache.sin_arg[j] = std::sin(arg);
    }
  }

  cache.hidden = tensor_matvec(params.tensor(kBackboneW1), cache.input);
  vec_add(cache.hidden, params.tensor(kBackboneB1).data);
  for (double& x : cache.hidden) x = std::tanh(x);
  cache.h = tensor_matvec(params.tensor(kBackboneW2), cache.hidden);
  vec_add(cache.h, params.tensor(kBackboneB2).data);
}

void embed_backward(const ModelParameters& params, const EmbedCache& cache,
                    std::span<const double> dh, Gradients& grads) {
  const ModelConfig& cfg = params.config();
  tensor_outer_add(grads.tensors[kBackboneW2], dh, cache.hidden);
  vec_add(grads.tensors[kBackboneB2].data, dh);

  Vec da1(cfg.hidden_dim, 0.0);
  tensor_matvec_transpose_add(params.tensor(kBackboneW2), dh, da1);
  for (std::size_t i = 0; i < da1.size(); ++i) {
    da1[i] *= 1.0 - cache.hidden[i] * cache.hidden[i];
  }
  tensor_outer_add(grads.tensors[kBackboneW1], da1, cache.input);
  vec_add(grads.tensors[kBackboneB1].data, da1);

  if (!cfg.disable_time_encoding) {
    Vec din(cfg.input_dim(), 0.0);
    tensor_matvec_transpose_add(params.tensor(kBackboneW1), da1, din);
    const std::size_t offset = 2 * cfg.feature_dim;
    Vec& g_freq = grads.tensors[kTimeFreq].data;
    Vec& g_phase = grads.tensors[kTimePhase].data;
    for (std::size_t j = 0; j < cfg.time_dim; ++j) {
      const double d_arg = -cache.sin_arg[j] * din[offset + j];
      g_freq[j] += d_arg * cache.dt;
      g_phase[j] += d_arg;
    }
  }
}

/// Cached forward state of the predictor head over a row batch.
struct HeadCache {
  std::vector<Vec> z;     // inputs
  std::vector<Vec> r;     // residual pre-normalization
  std::vector<Vec> xhat;  // normalized
  std::vector<Vec> act;   // tanh activations
  Vec mean, var, inv_std; // batch statistics (training mode)
  Vec scores;
};

void head_forward_train(const ModelParameters& params, std::vector<Vec> rows,
                        HeadCache& cache) {
  const ModelConfig& cfg = params.config();
  const std::size_t e = cfg.embed_dim;
  const std::size_t n = rows.size();
  cache.z = std::move(rows);
  cache.r.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec y = tensor_matvec(params.tensor(kHeadW1), cache.z[i]);
    vec_add(y, params.tensor(kHeadB1).data);
    vec_add(y, cache.z[i]);  // residual: input added to the layer output
    cache.r[i] = std::move(y);
  }
  cache.mean.assign(e, 0.0);
  cache.var.assign(e, 0.0);
  for (const Vec& r : cache.r) vec_add(cache.mean, r);
  for (double& m : cache.mean) m /= static_cast<double>(n);
  for (const Vec& r : cache.r) {
    for (std::size_t c = 0; c < e; ++c) {
      const double d = r[c] - cache.mean[c];
      cache.var[c] += d * d;
    }
  }
  for (double& v : cache.var) v /= static_cast<double>(n);
  cache.inv_std.resize(e);
  for (std::size_t c = 0; c < e; ++c) {
    cache.inv_std[c] = 1.0 / std::sqrt(cache.var[c] + cfg.bn_epsilon);
  }

  const Vec& gamma = params.tensor(kHeadGamma).data;
  const Vec& beta = params.tensor(kHeadBeta).data;
  const Vec& w2 = params.tensor(kHeadW2).data;
  const double b2 = params.tensor(kHeadB2).data[0];
  cache.xhat.resize(n);
  cache.act.resize(n);
  cache.scores.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    cache.xhat[i].resize(e);
    cache.act[i].resize(e);
    double s = b2;
    for (std::size_t c = 0; c < e; ++c) {
      const double xh = (cache.r[i][c] - cache.mean[c]) * cache.inv_std[c];
      cache.xhat[i][c] = xh;
      const double a = std::tanh(gamma[c] * xh + beta[c]);
      cache.act[i][c] = a;
      s += w2[c] * a;
    }
    cache.scores[i] = s;
    if (!std::isfinite(s)) {
      throw Error("non-finite predictor score at batch row " + std::to_string(i));
    }
  }
}

void head_backward_train(const ModelParameters& params, const HeadCache& cache,
                         std::span<const double> dscores, Gradients& grads,
                         std::vector<Vec>& dz) {
  const ModelConfig& cfg = params.config();
  const std::size_t e = cfg.embed_dim;
  const std::size_t n = cache.z.size();
  const Vec& gamma = params.tensor(kHeadGamma).data;
  const Vec& w2 = params.tensor(kHeadW2).data;

  std::vector<Vec> dxhat(n, Vec(e, 0.0));
  Vec& g_gamma = grads.tensors[kHeadGamma].data;
  Vec& g_beta = grads.tensors[kHeadBeta].data;
  Vec& g_w2 = grads.tensors[kHeadW2].data;
  for (std::size_t i = 0; i < n; ++i) {
    const double ds = dscores[i];
    grads.tensors[kHeadB2].data[0] += ds;
    for (std::size_t c = 0; c < e; ++c) {
      const double a = cache.act[i][c];
      g_w2[c] += ds * a;
      const double dn = ds * w2[c] * (1.0 - a * a);
      g_gamma[c] += dn * cache.xhat[i][c];
      g_beta[c] += dn;
      dxhat[i][c] = dn * gamma[c];
    }
  }

  // Batch-normalization backward with batch statistics.
  Vec mean_dxhat(e, 0.0), mean_dxhat_xhat(e, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < e; ++c) {
      mean_dxhat[c] += dxhat[i][c];
      mean_dxhat_xhat[c] += dxhat[i][c] * cache.xhat[i][c];
    }
  }
  for (std::size_t c = 0; c < e; ++c) {
    mean_dxhat[c] /= static_cast<double>(n);
    mean_dxhat_xhat[c] /= static_cast<double>(n);
  }

  dz.assign(n, Vec(e, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    Vec dr(e);
    for (std::size_t c = 0; c < e; ++c) {
      dr[c] = cache.inv_std[c] *
              (dxhat[i][c] - mean_dxhat[c] - cache.xhat[i][c] * mean_dxhat_xhat[c]);
    }
    tensor_outer_add(grads.tensors[kHeadW1], dr, cache.z[i]);
    vec_add(grads.tensors[kHeadB1].data, dr);
    // Residual: dz gets the direct path plus the linear path.
    vec_add(dz[i], dr);
    tensor_matvec_transpose_add(params.tensor(kHeadW1), dr, dz[i]);
  }
}

struct CosineGrad {
  double value = 0.0;
  bool defined = false;  // false when either norm is zero (gradient is 0)
  double inv_na = 0.0, inv_nb = 0.0;
};

CosineGrad cosine_with_grad(std::span<const double> a, std::span<const double> b) {
  CosineGrad out;
  const double na = norm2(a), nb = norm2(b);
  if (na == 0.0 || nb == 0.0) return out;
  out.value = dot(a, b) / (na * nb);
  out.defined = true;
  out.inv_na = 1.0 / na;
  out.inv_nb = 1.0 / nb;
  return out;
}

void cosine_backward(std::span<const double> a, std::span<const double> b,
                     const CosineGrad& c, double upstream, Vec& da, Vec& db) {
  if (!c.defined || upstream == 0.0) return;
  for (std::size_t i = 0; i < a.size(); ++i) {
    da[i] += upstream * (b[i] * c.inv_na * c.inv_nb - c.value * a[i] * c.inv_na * c.inv_na);
    db[i] += upstream * (a[i] * c.inv_na * c.inv_nb - c.value * b[i] * c.inv_nb * c.inv_nb);
  }
}

struct ForwardState {
  // One embed instance per role; cf roles only when covered.
  std::vector<EmbedCache> instances;
  std::vector<int> idx_u, idx_v, idx_neg, idx_cfu, idx_cfv;  // -1 when absent
  std::vector<Vec> z_pos, z_neg, z_cf;
  std::vector<std::size_t> covered;  // batch indices with a counterfactual
  HeadCache head;
  LossBreakdown losses;
  // Contrastive caches per covered element.
  std::vector<CosineGrad> c_pos_cf, c_pos_neg, c_neg_cf;
  std::vector<double> p1, p2;  // softmax over the two denominator terms
};

LossBreakdown forward_batch(const ModelParameters& params, const TemporalGraph& graph,
                            std::span<const TrainExample> batch, const TrainConfig& config,
                            ForwardState& fs) {
  config.validate();
  const std::size_t b = batch.size();
  const bool use_cf = !config.disable_counterfactual;
  const double alpha = use_cf ? config.alpha : 1.0;

  fs.idx_u.assign(b, -1);
  fs.idx_v.assign(b, -1);
  fs.idx_neg.assign(b, -1);
  fs.idx_cfu.assign(b, -1);
  fs.idx_cfv.assign(b, -1);
  fs.instances.clear();
  // History gathering inside embed_forward is strict (timestamp < t), so the
  // query event itself never leaks into its own embedding.
  auto add_instance = [&](NodeId node, Time t) {
    fs.instances.emplace_back();
    embed_forward(params, graph, node, t, fs.instances.back());
    return static_cast<int>(fs.instances.size() - 1);
  };
  fs.covered.clear();
  for (std::size_t i = 0; i < b; ++i) {
    const TrainExample& ex = batch[i];
    fs.idx_u[i] = add_instance(ex.u, ex.t);
    fs.idx_v[i] = add_instance(ex.v, ex.t);
    fs.idx_neg[i] = add_instance(ex.neg_v, ex.t);
    if (use_cf && ex.has_cf) {
      fs.idx_cfu[i] = add_instance(ex.cf_u, ex.t);
      fs.idx_cfv[i] = add_instance(ex.cf_v, ex.t);
      fs.covered.push_back(i);
    }
  }

  fs.z_pos.resize(b);
  fs.z_neg.resize(b);
  fs.z_cf.assign(b, {});
  for (std::size_t i = 0; i < b; ++i) {
    fs.z_pos[i] = hadamard(fs.instances[fs.idx_u[i]].h, fs.instances[fs.idx_v[i]].h);
    fs.z_neg[i] = hadamard(fs.instances[fs.idx_u[i]].h, fs.instances[fs.idx_neg[i]].h);
    if (fs.idx_cfu[i] >= 0) {
      fs.z_cf[i] = hadamard(fs.instances[fs.idx_cfu[i]].h, fs.instances[fs.idx_cfv[i]].h);
    }
  }

  // Head rows: positives, negatives, then counterfactual rows when they are
  // scored directly (contrastive term ablated).
  std::vector<Vec> rows;
  rows.reserve(2 * b + fs.covered.size());
  for (std::size_t i = 0; i < b; ++i) rows.push_back(fs.z_pos[i]);
  for (std::size_t i = 0; i < b; ++i) rows.push_back(fs.z_neg[i]);
  const bool score_cf_rows = use_cf && config.disable_contrastive;
  if (score_cf_rows) {
    for (std::size_t i : fs.covered) rows.push_back(fs.z_cf[i]);
  }
  if (!rows.empty()) head_forward_train(params, std::move(rows), fs.head);

  LossBreakdown out;
  for (std::size_t i = 0; i < b; ++i) {
    out.factual += softplus(-fs.head.scores[i]) + softplus(fs.head.scores[b + i]);
  }
  if (b > 0) out.factual /= static_cast<double>(b);

  const std::size_t n_cov = fs.covered.size();
  fs.c_pos_cf.assign(b, {});
  fs.c_pos_neg.assign(b, {});
  fs.c_neg_cf.assign(b, {});
  fs.p1.assign(b, 0.0);
  fs.p2.assign(b, 0.0);
  if (use_cf && n_cov > 0) {
    if (config.disable_contrastive) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n_cov; ++k) {
        const std::size_t i = fs.covered[k];
        const double s = fs.head.scores[2 * b + k];
        acc += batch[i].cf_observed ? softplus(-s) : softplus(s);
      }
      out.contrastive = acc / static_cast<double>(n_cov);
    } else {
      double acc = 0.0;
      for (std::size_t i : fs.covered) {
        fs.c_pos_cf[i] = cosine_with_grad(fs.z_pos[i], fs.z_cf[i]);
        fs.c_pos_neg[i] = cosine_with_grad(fs.z_pos[i], fs.z_neg[i]);
        fs.c_neg_cf[i] = cosine_with_grad(fs.z_neg[i], fs.z_cf[i]);
        const double a1 = fs.c_pos_cf[i].value / config.tau;
        const double a2 = fs.c_pos_neg[i].value / config.tau;
        const double numerator =
            (batch[i].cf_observed ? fs.c_pos_cf[i].value : fs.c_neg_cf[i].value) /
            config.tau;
        const double m = std::max(a1, a2);
        const double lse = m + std::log(std::exp(a1 - m) + std::exp(a2 - m));
        fs.p1[i] = std::exp(a1 - lse);
        fs.p2[i] = std::exp(a2 - lse);
        acc += -numerator + lse;
      }
      out.contrastive = acc / static_cast<double>(n_cov);
    }
  }

  out.total = alpha * out.factual + (1.0 - alpha) * out.contrastive;
  fs.losses = out;
  return out;
}

}  // namespace

Vec embed(NodeId u, Time t, const TemporalGraph& graph, const ModelParameters& params) {
  EmbedCache cache;
  embed_forward(params, graph, u, t, cache);
  return cache.h;
}

Vec edge_representation(std::span<const double> h_u, std::span<const double> h_v) {
  if (h_u.size() != h_v.size()) {
    throw Error("edge_representation: embedding dimensions differ");
  }
  return hadamard(h_u, h_v);
}

double predict_score(std::span<const double> z, const ModelParameters& params) {
  const ModelConfig& cfg = params.config();
  if (z.size() != cfg.embed_dim) throw Error("predict_score: bad input dimension");
  Vec r = tensor_matvec(params.tensor(kHeadW1), z);
  vec_add(r, params.tensor(kHeadB1).data);
  for (std::size_t c = 0; c < r.size(); ++c) r[c] += z[c];
  const Vec& mean = params.buffer(kRunningMean).data;
  const Vec& var = params.buffer(kRunningVar).data;
  const Vec& gamma = params.tensor(kHeadGamma).data;
  const Vec& beta = params.tensor(kHeadBeta).data;
  const Vec& w2 = params.tensor(kHeadW2).data;
  double s = params.tensor(kHeadB2).data[0];
  for (std::size_t c = 0; c < r.size(); ++c) {
    const double xh = (r[c] - mean[c]) / std::sqrt(var[c] + cfg.bn_epsilon);
    s += w2[c] * std::tanh(gamma[c] * xh + beta[c]);
  }
  if (!std::isfinite(s)) throw Error("non-finite predictor score");
  return s;
}

double factual_loss(std::span<const double> pos_scores,
                    std::span<const double> neg_scores) {
  if (pos_scores.size() != neg_scores.size()) {
    throw Error("factual_loss: score lists differ in length");
  }
  if (pos_scores.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < pos_scores.size(); ++i) {
    acc += softplus(-pos_scores[i]) + softplus(neg_scores[i]);
  }
  return acc / static_cast<double>(pos_scores.size());
}

double contrastive_loss(std::span<const ContrastiveItem> items, double tau) {
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
  if (items.empty()) return 0.0;
  double acc = 0.0;
  for (const ContrastiveItem& item : items) {
    const double c1 = cosine(item.z_pos, item.z_cf);
    const double c2 = cosine(item.z_pos, item.z_neg);
    const double numerator = (item.cf_observed ? c1 : cosine(item.z_neg, item.z_cf)) / tau;
    const double a1 = c1 / tau;
    const double a2 = c2 / tau;
    const double m = std::max(a1, a2);
    acc += -numerator + m + std::log(std::exp(a1 - m) + std::exp(a2 - m));
  }
  return acc / static_cast<double>(items.size());
}

double total_loss(double factual, double contrastive, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  return alpha * factual + (1.0 - alpha) * contrastive;
}

LossBreakdown compute_loss(const ModelParameters& params, const TemporalGraph& graph,
                           std::span<const TrainExample> batch,
                           const TrainConfig& config) {
  ForwardState fs;
  return forward_batch(params, graph, batch, config, fs);
}

LossBreakdown compute_gradients(const ModelParameters& params, const TemporalGraph& graph,
                                std::span<const TrainExample> batch,
                                const TrainConfig& config, Gradients& out,
                                BatchNormStats* bn_stats) {
  ForwardState fs;
  const LossBreakdown losses = forward_batch(params, graph, batch, config, fs);
  out.zero();
  const std::size_t b = batch.size();
  if (b == 0) return losses;

  const bool use_cf = !config.disable_counterfactual;
  const double alpha = use_cf ? config.alpha : 1.0;
  const std::size_t n_cov = fs.covered.size();
  const std::size_t n_rows = fs.head.scores.size();

  if (bn_stats != nullptr) {
    bn_stats->mean = fs.head.mean;
    bn_stats->rows = n_rows;
    bn_stats->var_unbiased = fs.head.var;
    if (n_rows > 1) {
      const double correction =
          static_cast<double>(n_rows) / static_cast<double>(n_rows - 1);
      for (double& v : bn_stats->var_unbiased) v *= correction;
    }
  }

  // d(total)/d(score) for every head row.
  Vec dscores(n_rows, 0.0);
  const double w_f = alpha / static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    dscores[i] = -w_f * sigmoid(-fs.head.scores[i]);
    dscores[b + i] = w_f * sigmoid(fs.head.scores[b + i]);
  }
  const double w_c =
      (use_cf && n_cov > 0) ? (1.0 - alpha) / static_cast<double>(n_cov) : 0.0;
  if (use_cf && config.disable_contrastive) {
    for (std::size_t k = 0; k < n_cov; ++k) {
      const std::size_t i = fs.covered[k];
      const double s = fs.head.scores[2 * b + k];
      dscores[2 * b + k] =
          batch[i].cf_observed ? -w_c * sigmoid(-s) : w_c * sigmoid(s);
    }
  }

  std::vector<Vec> dzrows;
  head_backward_train(params, fs.head, dscores, out, dzrows);

  const std::size_t e = params.config().embed_dim;
  std::vector<Vec> dz_pos(b, Vec(e, 0.0));
  std::vector<Vec> dz_neg(b, Vec(e, 0.0));
  std::vector<Vec> dz_cf(b);
  for (std::size_t i = 0; i < b; ++i) {
    dz_pos[i] = dzrows[i];
    dz_neg[i] = dzrows[b + i];
  }
  for (std::size_t k = 0; k < n_cov; ++k) {
    const std::size_t i = fs.covered[k];
    dz_cf[i].assign(e, 0.0);
    if (use_cf && config.disable_contrastive) {
      dz_cf[i] = dzrows[2 * b + k];
    }
  }

  if (use_cf && !config.disable_contrastive && n_cov > 0) {
    for (std::size_t i : fs.covered) {
      const double inv_tau = 1.0 / config.tau;
      const double d_c1 =
          w_c * inv_tau * (fs.p1[i] - (batch[i].cf_observed ? 1.0 : 0.0));
      const double d_c2 = w_c * inv_tau * fs.p2[i];
      const double d_c3 = batch[i].cf_observed ? 0.0 : -w_c * inv_tau;
      cosine_backward(fs.z_pos[i], fs.z_cf[i], fs.c_pos_cf[i], d_c1, dz_pos[i], dz_cf[i]);
      cosine_backward(fs.z_pos[i], fs.z_neg[i], fs.c_pos_neg[i], d_c2, dz_pos[i],
                      dz_neg[i]);
      cosine_backward(fs.z_neg[i], fs.z_cf[i], fs.c_neg_cf[i], d_c3, dz_neg[i], dz_cf[i]);
    }
  }

  // Edge representations back to node embeddings, then through the backbone.
  std::vector<Vec> dh(fs.instances.size(), Vec(e, 0.0));
  for (std::size_t i = 0; i < b; ++i) {
    const Vec& hu = fs.instances[fs.idx_u[i]].h;
    const Vec& hv = fs.instances[fs.idx_v[i]].h;
    const Vec& hn = fs.instances[fs.idx_neg[i]].h;
    for (std::size_t c = 0; c < e; ++c) {
      dh[fs.idx_u[i]][c] += dz_pos[i][c] * hv[c] + dz_neg[i][c] * hn[c];
      dh[fs.idx_v[i]][c] += dz_pos[i][c] * hu[c];
      dh[fs.idx_neg[i]][c] += dz_neg[i][c] * hu[c];
    }
    if (fs.idx_cfu[i] >= 0 && !dz_cf[i].empty()) {
      const Vec& hcu = fs.instances[fs.idx_cfu[i]].h;
      const Vec& hcv = fs.instances[fs.idx_cfv[i]].h;
      for (std::size_t c = 0; c < e; ++c) {
        dh[fs.idx_cfu[i]][c] += dz_cf[i][c] * hcv[c];
        dh[fs.idx_cfv[i]][c] += dz_cf[i][c] * hcu[c];
      }
    }
  }
  for (std::size_t m = 0; m < fs.instances.size(); ++m) {
    embed_backward(params, fs.instances[m], dh[m], out);
  }

  for (const Tensor& t : out.tensors) {
    for (double g : t.data) {
      if (!std::isfinite(g)) throw Error("non-finite gradient in tensor " + t.name);
    }
  }
  return losses;
}

AdamOptimizer::AdamOptimizer(const ModelParameters& params, const TrainConfig& config)
    : rate_(config.learning_rate),
      beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      epsilon_(config.adam_epsilon) {
  for (const Tensor& t : params.tensors()) {
    first_moment_.emplace_back(t.data.size(), 0.0);
    second_moment_.emplace_back(t.data.size(), 0.0);
  }
}

void AdamOptimizer::step(ModelParameters& params, const Gradients& grads) {
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (int i = 0; i < kTensorCount; ++i) {
    Vec& p = params.tensor(static_cast<TensorId>(i)).data;
    const Vec& g = grads.tensors[i].data;
    Vec& m = first_moment_[i];
    Vec& v = second_moment_[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
      p[k] -= rate_ * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + epsilon_);
    }
  }
}

LossBreakdown train_step(ModelParameters& params, AdamOptimizer& optimizer,
                         const TemporalGraph& graph, std::span<const TrainExample> batch,
                         const TrainConfig& config) {
  Gradients grads(params);
  BatchNormStats stats;
  const LossBreakdown losses =
      compute_gradients(params, graph, batch, config, grads, &stats);
  if (stats.rows > 1) {
    Vec& mean = params.buffer(kRunningMean).data;
    Vec& var = params.buffer(kRunningVar).data;
    const double m = params.config().bn_momentum;
    for (std::size_t c = 0; c < mean.size(); ++c) {
      mean[c] = (1.0 - m) * mean[c] + m * stats.mean[c];
      var[c] = (1.0 - m) * var[c] + m * stats.var_unbiased[c];
    }
  }
  optimizer.step(params, grads);
  return losses;
}

}  // namespace codcl
