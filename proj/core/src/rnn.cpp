#include "vdlab/rnn.hpp"

#include <algorithm>
#include <cmath>

#include "vdlab/errors.hpp"
#include "vdlab/rng.hpp"
#include "vdlab/util.hpp"

namespace vdlab {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

LstmDir lstm_dir_zero(int in_dim, int hidden) {
  LstmDir d;
  d.in_dim = in_dim;
  d.hidden = hidden;
  d.w.assign(static_cast<std::size_t>(4 * hidden) * (in_dim + hidden), 0.0);
  d.b.assign(static_cast<std::size_t>(4 * hidden), 0.0);
  return d;
}

void lstm_dir_init(LstmDir& d, Rng& rng) {
  const double scale = std::sqrt(1.0 / (d.in_dim + d.hidden));
  for (double& v : d.w) v = rng.normal() * scale;
  // Forget gate bias starts at 1 so early training does not flush state.
  for (int j = 0; j < d.hidden; ++j) d.b[static_cast<std::size_t>(d.hidden + j)] = 1.0;
}

// Cached activations for one direction over T frames.
struct DirCache {
  // All [T][hidden]: post-activation gates, cell, tanh(cell).
  std::vector<double> gi, gf, gg, go, c, tc, h;
};

// Runs one direction; `reversed` walks the frames back to front but stores
// h at the true frame index.
void lstm_run(const LstmDir& d, const Matrix& x, bool reversed, DirCache& cache) {
  const std::size_t T = x.rows();
  const int H = d.hidden;
  const int in = d.in_dim;
  cache.gi.assign(T * H, 0.0);
  cache.gf.assign(T * H, 0.0);
  cache.gg.assign(T * H, 0.0);
  cache.go.assign(T * H, 0.0);
  cache.c.assign(T * H, 0.0);
  cache.tc.assign(T * H, 0.0);
  cache.h.assign(T * H, 0.0);

  std::vector<double> h_prev(H, 0.0), c_prev(H, 0.0), z(4 * H);
  for (std::size_t step = 0; step < T; ++step) {
    const std::size_t t = reversed ? T - 1 - step : step;
    const double* xt = x.row(t);
    for (int j = 0; j < 4 * H; ++j) {
      const double* w = d.w.data() + static_cast<std::size_t>(j) * (in + H);
      double acc = d.b[static_cast<std::size_t>(j)];
      for (int k = 0; k < in; ++k) acc += w[k] * xt[k];
      for (int k = 0; k < H; ++k) acc += w[in + k] * h_prev[static_cast<std::size_t>(k)];
      z[static_cast<std::size_t>(j)] = acc;
    }
    for (int j = 0; j < H; ++j) {
      const double i_g = sigmoid(z[static_cast<std::size_t>(j)]);
      const double f_g = sigmoid(z[static_cast<std::size_t>(H + j)]);
      const double g_g = std::tanh(z[static_cast<std::size_t>(2 * H + j)]);
      const double o_g = sigmoid(z[static_cast<std::size_t>(3 * H + j)]);
      const double c_new = f_g * c_prev[static_cast<std::size_t>(j)] + i_g * g_g;
      const double tc = std::tanh(c_new);
      const std::size_t ofs = t * H + static_cast<std::size_t>(j);
      cache.gi[ofs] = i_g;
      cache.gf[ofs] = f_g;
      cache.gg[ofs] = g_g;
      cache.go[ofs] = o_g;
      cache.c[ofs] = c_new;
      cache.tc[ofs] = tc;
      cache.h[ofs] = o_g * tc;
      c_prev[static_cast<std::size_t>(j)] = c_new;
      h_prev[static_cast<std::size_t>(j)] = cache.h[ofs];
    }
  }
}

// BPTT for one direction. dh[t*H + j] is the loss gradient on this
// direction's h output. Accumulates weight/bias gradients into gdir and the
// gradient w.r.t. the layer input into dx (T x in_dim).
void lstm_backward(const LstmDir& d, const Matrix& x, bool reversed, const DirCache& cache,
                   const std::vector<double>& dh, LstmDir& gdir, Matrix& dx) {
  const std::size_t T = x.rows();
  const int H = d.hidden;
  const int in = d.in_dim;

  std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), dz(4 * H);
  for (std::size_t step = 0; step < T; ++step) {
    // Reverse of the processing order.
    const std::size_t t = reversed ? step : T - 1 - step;
    const std::size_t prev_t = reversed ? t + 1 : t - 1;  // in processing order
    const bool has_prev = reversed ? (t + 1 < T) : (t > 0);

    for (int j = 0; j < H; ++j) {
      const std::size_t ofs = t * H + static_cast<std::size_t>(j);
      const double dht = dh[ofs] + dh_next[static_cast<std::size_t>(j)];
      const double i_g = cache.gi[ofs];
      const double f_g = cache.gf[ofs];
      const double g_g = cache.gg[ofs];
      const double o_g = cache.go[ofs];
      const double tc = cache.tc[ofs];
      const double c_prev =
          has_prev ? cache.c[prev_t * H + static_cast<std::size_t>(j)] : 0.0;

      const double d_o = dht * tc;
      const double dc = dht * o_g * (1.0 - tc * tc) + dc_next[static_cast<std::size_t>(j)];
      const double d_i = dc * g_g;
      const double d_f = dc * c_prev;
      const double d_g = dc * i_g;

      dz[static_cast<std::size_t>(j)] = d_i * i_g * (1.0 - i_g);
      dz[static_cast<std::size_t>(H + j)] = d_f * f_g * (1.0 - f_g);
      dz[static_cast<std::size_t>(2 * H + j)] = d_g * (1.0 - g_g * g_g);
      dz[static_cast<std::size_t>(3 * H + j)] = d_o * o_g * (1.0 - o_g);
      dc_next[static_cast<std::size_t>(j)] = dc * f_g;
    }

    const double* xt = x.row(t);
    const double* h_prev =
        has_prev ? cache.h.data() + prev_t * H : nullptr;
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    double* dxt = dx.row(t);
    for (int j = 0; j < 4 * H; ++j) {
      const double dzj = dz[static_cast<std::size_t>(j)];
      if (dzj == 0.0) continue;
      double* gw = gdir.w.data() + static_cast<std::size_t>(j) * (in + H);
      const double* w = d.w.data() + static_cast<std::size_t>(j) * (in + H);
      gdir.b[static_cast<std::size_t>(j)] += dzj;
      for (int k = 0; k < in; ++k) {
        gw[k] += dzj * xt[k];
        dxt[k] += dzj * w[k];
      }
      if (has_prev) {
        for (int k = 0; k < H; ++k) {
          gw[in + k] += dzj * h_prev[k];
          dh_next[static_cast<std::size_t>(k)] += dzj * w[in + k];
        }
      }
    }
  }
}

}  // namespace

RnnModel rnn_zero(const RnnConfig& config) {
  if (config.hidden.empty()) throw ValueError("rnn: need at least one layer");
  if (config.input_dim <= 0 || config.window <= 0) {
    throw ValueError("rnn: bad input_dim/window");
  }
  RnnModel model;
  model.config = config;
  int in_dim = config.input_dim;
  for (int h : config.hidden) {
    if (h <= 0) throw ValueError("rnn: hidden sizes must be positive");
    BiLstmLayer layer;
    layer.fwd = lstm_dir_zero(in_dim, h);
    layer.bwd = lstm_dir_zero(in_dim, h);
    model.layers.push_back(std::move(layer));
    in_dim = 2 * h;
  }
  model.out_w.assign(static_cast<std::size_t>(in_dim), 0.0);
  model.out_b = 0.0;
  return model;
}

RnnModel rnn_init(const RnnConfig& config) {
  RnnModel model = rnn_zero(config);
  Rng rng(config.seed);
  for (auto& layer : model.layers) {
    lstm_dir_init(layer.fwd, rng);
    lstm_dir_init(layer.bwd, rng);
  }
  const double scale = std::sqrt(1.0 / static_cast<double>(model.out_w.size()));
  for (double& v : model.out_w) v = rng.normal() * scale;
  return model;
}

namespace {

struct ForwardState {
  std::vector<Matrix> layer_inputs;          // input to each layer (and beyond)
  std::vector<DirCache> fwd_cache, bwd_cache;
  std::vector<double> probs;
};

void rnn_run(const RnnModel& model, const Matrix& frames, ForwardState& state) {
  if (frames.cols() != static_cast<std::size_t>(model.config.input_dim)) {
    throw ValueError(strfmt("rnn: input has %zu dims, model expects %d", frames.cols(),
                            model.config.input_dim));
  }
  const std::size_t T = frames.rows();
  state.layer_inputs.clear();
  state.fwd_cache.assign(model.layers.size(), {});
  state.bwd_cache.assign(model.layers.size(), {});
  state.layer_inputs.push_back(frames);

  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const BiLstmLayer& layer = model.layers[l];
    lstm_run(layer.fwd, state.layer_inputs[l], false, state.fwd_cache[l]);
    lstm_run(layer.bwd, state.layer_inputs[l], true, state.bwd_cache[l]);
    const int H = layer.fwd.hidden;
    Matrix concat(T, static_cast<std::size_t>(2 * H));
    for (std::size_t t = 0; t < T; ++t) {
      double* dst = concat.row(t);
      const double* hf = state.fwd_cache[l].h.data() + t * H;
      const double* hb = state.bwd_cache[l].h.data() + t * H;
      std::copy(hf, hf + H, dst);
      std::copy(hb, hb + H, dst + H);
    }
    state.layer_inputs.push_back(std::move(concat));
  }

  const Matrix& top = state.layer_inputs.back();
  state.probs.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double* row = top.row(t);
    double acc = model.out_b;
    for (std::size_t k = 0; k < model.out_w.size(); ++k) acc += model.out_w[k] * row[k];
    state.probs[t] = sigmoid(acc);
  }
}

}  // namespace

std::vector<double> rnn_forward(const RnnModel& model, const Matrix& frames) {
  ForwardState state;
  rnn_run(model, frames, state);
  return state.probs;
}

RnnGradients rnn_gradients_zero(const RnnModel& model) {
  RnnGradients g;
  for (const auto& layer : model.layers) {
    BiLstmLayer zero;
    zero.fwd = lstm_dir_zero(layer.fwd.in_dim, layer.fwd.hidden);
    zero.bwd = lstm_dir_zero(layer.bwd.in_dim, layer.bwd.hidden);
    g.layers.push_back(std::move(zero));
  }
  g.out_w.assign(model.out_w.size(), 0.0);
  g.out_b = 0.0;
  return g;
}

double rnn_loss_and_gradients(const RnnModel& model, const Matrix& frames,
                              const std::vector<double>& targets,
                              const std::vector<double>& weights, RnnGradients* grads) {
  const std::size_t T = frames.rows();
  if (targets.size() != T || weights.size() != T) {
    throw ValueError("rnn_loss_and_gradients: target/weight length mismatch");
  }
  ForwardState state;
  rnn_run(model, frames, state);

  double weight_sum = 0.0;
  for (double w : weights) weight_sum += w;
  if (weight_sum <= 0.0) return 0.0;

  const double eps = 1e-12;
  double loss = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    if (weights[t] == 0.0) continue;
    const double p = state.probs[t];
    loss -= weights[t] * (targets[t] * std::log(p + eps) +
                          (1.0 - targets[t]) * std::log(1.0 - p + eps));
  }
  loss /= weight_sum;
  if (grads == nullptr) return loss;

  // d loss / d out_z per frame.
  const Matrix& top = state.layer_inputs.back();
  std::vector<double> d_top(top.rows() * top.cols(), 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    if (weights[t] == 0.0) continue;
    const double dz = weights[t] * (state.probs[t] - targets[t]) / weight_sum;
    grads->out_b += dz;
    const double* row = top.row(t);
    double* dt = d_top.data() + t * top.cols();
    for (std::size_t k = 0; k < model.out_w.size(); ++k) {
      grads->out_w[k] += dz * row[k];
      dt[k] += dz * model.out_w[k];
    }
  }

  // Backprop through the stack.
  std::vector<double> d_concat = std::move(d_top);
  for (int l = static_cast<int>(model.layers.size()) - 1; l >= 0; --l) {
    const BiLstmLayer& layer = model.layers[static_cast<std::size_t>(l)];
    const Matrix& x = state.layer_inputs[static_cast<std::size_t>(l)];
    const int H = layer.fwd.hidden;

    std::vector<double> dh_fwd(T * H), dh_bwd(T * H);
    for (std::size_t t = 0; t < T; ++t) {
      const double* src = d_concat.data() + t * static_cast<std::size_t>(2 * H);
      std::copy(src, src + H, dh_fwd.data() + t * H);
      std::copy(src + H, src + 2 * H, dh_bwd.data() + t * H);
    }

    Matrix dx(T, x.cols());
    lstm_backward(layer.fwd, x, false, state.fwd_cache[static_cast<std::size_t>(l)], dh_fwd,
                  grads->layers[static_cast<std::size_t>(l)].fwd, dx);
    lstm_backward(layer.bwd, x, true, state.bwd_cache[static_cast<std::size_t>(l)], dh_bwd,
                  grads->layers[static_cast<std::size_t>(l)].bwd, dx);
    d_concat.assign(dx.data().begin(), dx.data().end());
  }
  return loss;
}

namespace {

double gradient_norm(const RnnGradients& g) {
  double acc = g.out_b * g.out_b;
  for (double v : g.out_w) acc += v * v;
  for (const auto& layer : g.layers) {
    for (double v : layer.fwd.w) acc += v * v;
    for (double v : layer.fwd.b) acc += v * v;
    for (double v : layer.bwd.w) acc += v * v;
    for (double v : layer.bwd.b) acc += v * v;
  }
  return std::sqrt(acc);
}

void scale_gradients(RnnGradients& g, double s) {
  g.out_b *= s;
  for (double& v : g.out_w) v *= s;
  for (auto& layer : g.layers) {
    for (double& v : layer.fwd.w) v *= s;
    for (double& v : layer.fwd.b) v *= s;
    for (double& v : layer.bwd.w) v *= s;
    for (double& v : layer.bwd.b) v *= s;
  }
}

void momentum_step(std::vector<double>& w, std::vector<double>& vel,
                   const std::vector<double>& g, double lr, double momentum) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    vel[i] = momentum * vel[i] - lr * g[i];
    w[i] += vel[i];
  }
}

Matrix window_features(const RnnWindowRef& ref, int window, int input_dim) {
  Matrix out(static_cast<std::size_t>(window), static_cast<std::size_t>(input_dim));
  const std::size_t len = std::min(ref.len, static_cast<std::size_t>(window));
  for (std::size_t t = 0; t < len; ++t) {
    const double* src = ref.features->row(ref.t0 + t);
    std::copy(src, src + input_dim, out.row(t));
  }
  return out;  // remaining rows stay zero (padding)
}

}  // namespace

RnnModel rnn_train(const std::vector<RnnWindowRef>& windows, const RnnConfig& config,
                   const RnnTrainConfig& train) {
  if (windows.empty()) throw ValueError("rnn_train: no training windows");
  RnnModel model = rnn_init(config);
  RnnGradients vel = rnn_gradients_zero(model);

  double lr = train.learning_rate;
  long iteration = 0;
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    Rng rng = Rng::derive(train.seed, static_cast<std::uint64_t>(epoch) + 1);
    std::vector<std::size_t> order(windows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    // Per-epoch class balance: majority-class frames are kept with the
    // probability that equalizes the expected class mass.
    std::size_t pos = 0, total = 0;
    for (const auto& w : windows) {
      const std::size_t len = std::min(w.len, static_cast<std::size_t>(config.window));
      for (std::size_t t = 0; t < len; ++t) pos += (*w.labels)[w.t0 + t];
      total += len;
    }
    const std::size_t neg = total - pos;
    double keep_pos = 1.0, keep_neg = 1.0;
    if (train.balance_classes && pos > 0 && neg > 0) {
      if (pos > neg) {
        keep_pos = static_cast<double>(neg) / static_cast<double>(pos);
      } else {
        keep_neg = static_cast<double>(pos) / static_cast<double>(neg);
      }
    }

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(train.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(train.batch_size));
      RnnGradients grads = rnn_gradients_zero(model);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const RnnWindowRef& ref = windows[order[k]];
        const Matrix feats = window_features(ref, config.window, config.input_dim);
        std::vector<double> targets(static_cast<std::size_t>(config.window), 0.0);
        std::vector<double> wts(static_cast<std::size_t>(config.window), 0.0);
        const std::size_t len = std::min(ref.len, static_cast<std::size_t>(config.window));
        for (std::size_t t = 0; t < len; ++t) {
          const bool label = (*ref.labels)[ref.t0 + t] != 0;
          targets[t] = label ? 1.0 : 0.0;
          const double keep = label ? keep_pos : keep_neg;
          wts[t] = (keep >= 1.0 || rng.uniform() < keep) ? 1.0 : 0.0;
        }
        batch_loss += rnn_loss_and_gradients(model, feats, targets, wts, &grads);
      }
      ++iteration;
      if (!std::isfinite(batch_loss)) {
        throw Error(strfmt("rnn_train: non-finite loss at iteration %ld", iteration));
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      scale_gradients(grads, inv);
      const double norm = gradient_norm(grads);
      if (norm > config.clip_norm && norm > 0.0) {
        scale_gradients(grads, config.clip_norm / norm);
      }
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        momentum_step(model.layers[l].fwd.w, vel.layers[l].fwd.w, grads.layers[l].fwd.w, lr,
                      train.momentum);
        momentum_step(model.layers[l].fwd.b, vel.layers[l].fwd.b, grads.layers[l].fwd.b, lr,
                      train.momentum);
        momentum_step(model.layers[l].bwd.w, vel.layers[l].bwd.w, grads.layers[l].bwd.w, lr,
                      train.momentum);
        momentum_step(model.layers[l].bwd.b, vel.layers[l].bwd.b, grads.layers[l].bwd.b, lr,
                      train.momentum);
      }
      momentum_step(model.out_w, vel.out_w, grads.out_w, lr, train.momentum);
      vel.out_b = train.momentum * vel.out_b - lr * grads.out_b;
      model.out_b += vel.out_b;
    }
    lr *= train.lr_decay;
  }
  return model;
}

std::vector<double> rnn_predict_track(const RnnModel& model, const Matrix& features,
                                      int hop) {
  if (hop < 1) throw ValueError("rnn_predict_track: hop must be >= 1");
  const std::size_t n = features.rows();
  const std::size_t window = static_cast<std::size_t>(model.config.window);

  std::vector<std::size_t> starts;
  if (n <= window) {
    starts.push_back(0);
  } else {
    for (std::size_t t0 = 0; t0 + window <= n; t0 += static_cast<std::size_t>(hop)) {
      starts.push_back(t0);
    }
    if (starts.back() + window < n) starts.push_back(n - window);
  }

  std::vector<double> sum(n, 0.0);
  std::vector<double> count(n, 0.0);
  for (std::size_t t0 : starts) {
    const std::size_t len = std::min(window, n - t0);
    Matrix slice(window, features.cols());
    for (std::size_t t = 0; t < len; ++t) {
      const double* src = features.row(t0 + t);
      std::copy(src, src + features.cols(), slice.row(t));
    }
    const std::vector<double> probs = rnn_forward(model, slice);
    for (std::size_t t = 0; t < len; ++t) {
      sum[t0 + t] += probs[t];
      count[t0 + t] += 1.0;
    }
  }
  for (std::size_t t = 0; t < n; ++t) sum[t] = count[t] > 0.0 ? sum[t] / count[t] : 0.5;
  return sum;
}

}  // namespace vdlab
