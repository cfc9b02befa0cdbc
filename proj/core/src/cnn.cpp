#include "vdlab/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vdlab/errors.hpp"
#include "vdlab/rng.hpp"
#include "vdlab/util.hpp"

namespace vdlab {

namespace {

constexpr int kKernel = 3;
constexpr int kPool = 3;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double bce_loss(double p, double y) {
  const double eps = 1e-12;
  return -(y * std::log(p + eps) + (1.0 - y) * std::log(1.0 - p + eps));
}

inline std::size_t at(int c, int h, int w, int H, int W) {
  return (static_cast<std::size_t>(c) * H + h) * W + w;
}

// Valid 3x3 convolution of `in` [in_c][H][W] into `out` [out_c][H-2][W-2].
void conv_forward(const std::vector<double>& in, int in_c, int H, int W,
                  const CnnModel::ConvLayer& layer, std::vector<double>& out) {
  const int oh = H - kKernel + 1;
  const int ow = W - kKernel + 1;
  out.assign(static_cast<std::size_t>(layer.out_c) * oh * ow, 0.0);
  for (int oc = 0; oc < layer.out_c; ++oc) {
    const double bias = layer.b[static_cast<std::size_t>(oc)];
    for (int y = 0; y < oh; ++y) {
      double* dst = out.data() + at(oc, y, 0, oh, ow);
      for (int x = 0; x < ow; ++x) dst[x] = bias;
    }
    for (int ic = 0; ic < in_c; ++ic) {
      const double* wbase =
          layer.w.data() + (static_cast<std::size_t>(oc) * in_c + ic) * kKernel * kKernel;
      for (int ky = 0; ky < kKernel; ++ky) {
        for (int kx = 0; kx < kKernel; ++kx) {
          const double wv = wbase[ky * kKernel + kx];
          for (int y = 0; y < oh; ++y) {
            const double* src = in.data() + at(ic, y + ky, kx, H, W);
            double* dst = out.data() + at(oc, y, 0, oh, ow);
            for (int x = 0; x < ow; ++x) dst[x] += wv * src[x];
          }
        }
      }
    }
  }
}

void maxpool_forward(const std::vector<double>& in, int c, int H, int W,
                     std::vector<double>& out, std::vector<int>& argmax) {
  const int oh = H / kPool;
  const int ow = W / kPool;
  out.resize(static_cast<std::size_t>(c) * oh * ow);
  argmax.resize(out.size());
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double best = -std::numeric_limits<double>::infinity();
        int best_idx = -1;
        for (int dy = 0; dy < kPool; ++dy) {
          for (int dx = 0; dx < kPool; ++dx) {
            const int idx = static_cast<int>(at(ch, y * kPool + dy, x * kPool + dx, H, W));
            if (in[static_cast<std::size_t>(idx)] > best) {
              best = in[static_cast<std::size_t>(idx)];
              best_idx = idx;
            }
          }
        }
        const std::size_t o = at(ch, y, x, oh, ow);
        out[o] = best;
        argmax[o] = best_idx;
      }
    }
  }
}

struct CnnCache {
  std::vector<std::vector<double>> stage_in;  // input activation of each conv layer
  std::vector<std::vector<double>> conv_z;    // pre-ReLU output of each conv layer
  std::vector<std::vector<double>> stage_out; // post conv+relu(+pool) activation
  std::vector<std::vector<int>> pool_argmax;  // empty when no pool at that layer
  std::vector<double> dense_z, dense_a;
  double out_z = 0.0;
  double prob = 0.0;
};

double forward_impl(const CnnModel& model, const std::vector<double>& input,
                    CnnCache* cache) {
  const CnnShapes& shapes = model.shapes;
  if (input.size() != static_cast<std::size_t>(model.config.input_bins) *
                          model.config.input_frames) {
    throw ValueError(strfmt("cnn_forward: input size %zu != %d x %d", input.size(),
                            model.config.input_bins, model.config.input_frames));
  }

  std::vector<double> act = input;
  int c = 1, H = model.config.input_bins, W = model.config.input_frames;
  std::vector<double> z, pooled;
  std::vector<int> argmax;

  for (std::size_t l = 0; l < model.conv.size(); ++l) {
    if (cache) cache->stage_in.push_back(act);
    conv_forward(act, c, H, W, model.conv[l], z);
    if (cache) cache->conv_z.push_back(z);
    for (double& v : z) v = v > 0.0 ? v : 0.0;  // ReLU
    c = shapes.after_conv[l].c;
    H = shapes.after_conv[l].h;
    W = shapes.after_conv[l].w;
    if (model.has_pool(static_cast<int>(l) + 1)) {
      maxpool_forward(z, c, H, W, pooled, argmax);
      act = pooled;
      if (cache) cache->pool_argmax.push_back(argmax);
      H = shapes.after_stage[l].h;
      W = shapes.after_stage[l].w;
    } else {
      act = z;
      if (cache) cache->pool_argmax.emplace_back();
    }
    if (cache) cache->stage_out.push_back(act);
  }

  // Dense head.
  const int units = model.config.dense_units;
  std::vector<double> dense_z(static_cast<std::size_t>(units));
  for (int u = 0; u < units; ++u) {
    const double* w = model.dense_w.data() + static_cast<std::size_t>(u) * shapes.flat;
    double acc = model.dense_b[static_cast<std::size_t>(u)];
    for (int i = 0; i < shapes.flat; ++i) acc += w[i] * act[static_cast<std::size_t>(i)];
    dense_z[static_cast<std::size_t>(u)] = acc;
  }
  std::vector<double> dense_a = dense_z;
  for (double& v : dense_a) v = v > 0.0 ? v : 0.0;

  double out_z = model.out_b;
  for (int u = 0; u < units; ++u) {
    out_z += model.out_w[static_cast<std::size_t>(u)] * dense_a[static_cast<std::size_t>(u)];
  }
  const double prob = sigmoid(out_z);

  if (cache) {
    cache->dense_z = std::move(dense_z);
    cache->dense_a = std::move(dense_a);
    cache->out_z = out_z;
    cache->prob = prob;
  }
  return prob;
}

}  // namespace

CnnShapes cnn_plan(const CnnConfig& config) {
  if (config.conv_channels.empty()) throw ValueError("cnn: need at least one conv layer");
  if (config.dense_units <= 0) throw ValueError("cnn: dense_units must be positive");
  CnnShapes shapes;
  int c = 1, h = config.input_bins, w = config.input_frames;
  for (std::size_t l = 0; l < config.conv_channels.size(); ++l) {
    h -= kKernel - 1;
    w -= kKernel - 1;
    c = config.conv_channels[l];
    if (h <= 0 || w <= 0 || c <= 0) {
      throw ValueError(strfmt("cnn: shape collapsed at conv layer %zu (%dx%d)", l + 1, h, w));
    }
    shapes.after_conv.push_back({c, h, w});
    const bool pool = std::find(config.pool_after.begin(), config.pool_after.end(),
                                static_cast<int>(l) + 1) != config.pool_after.end();
    if (pool) {
      h /= kPool;
      w /= kPool;
      if (h <= 0 || w <= 0) {
        throw ValueError(strfmt("cnn: shape collapsed at pool after layer %zu", l + 1));
      }
    }
    shapes.after_stage.push_back({c, h, w});
  }
  shapes.flat = c * h * w;
  return shapes;
}

bool CnnModel::has_pool(int conv_index_1based) const {
  return std::find(config.pool_after.begin(), config.pool_after.end(), conv_index_1based) !=
         config.pool_after.end();
}

CnnModel cnn_zero(const CnnConfig& config) {
  CnnModel model;
  model.config = config;
  model.shapes = cnn_plan(config);
  int in_c = 1;
  for (int out_c : config.conv_channels) {
    CnnModel::ConvLayer layer;
    layer.in_c = in_c;
    layer.out_c = out_c;
    layer.w.assign(static_cast<std::size_t>(out_c) * in_c * kKernel * kKernel, 0.0);
    layer.b.assign(static_cast<std::size_t>(out_c), 0.0);
    model.conv.push_back(std::move(layer));
    in_c = out_c;
  }
  model.dense_w.assign(static_cast<std::size_t>(config.dense_units) * model.shapes.flat, 0.0);
  model.dense_b.assign(static_cast<std::size_t>(config.dense_units), 0.0);
  model.out_w.assign(static_cast<std::size_t>(config.dense_units), 0.0);
  model.out_b = 0.0;
  return model;
}

CnnModel cnn_init(const CnnConfig& config) {
  CnnModel model = cnn_zero(config);
  Rng rng(config.seed);
  for (auto& layer : model.conv) {
    const double scale = std::sqrt(2.0 / (layer.in_c * kKernel * kKernel));
    for (double& v : layer.w) v = rng.normal() * scale;
  }
  const double dense_scale = std::sqrt(2.0 / model.shapes.flat);
  for (double& v : model.dense_w) v = rng.normal() * dense_scale;
  const double out_scale = std::sqrt(1.0 / config.dense_units);
  for (double& v : model.out_w) v = rng.normal() * out_scale;
  return model;
}

double cnn_forward(const CnnModel& model, const std::vector<double>& input) {
  return forward_impl(model, input, nullptr);
}

CnnGradients cnn_gradients_zero(const CnnModel& model) {
  CnnGradients g;
  for (const auto& layer : model.conv) {
    CnnModel::ConvLayer zero = layer;
    std::fill(zero.w.begin(), zero.w.end(), 0.0);
    std::fill(zero.b.begin(), zero.b.end(), 0.0);
    g.conv.push_back(std::move(zero));
  }
  g.dense_w.assign(model.dense_w.size(), 0.0);
  g.dense_b.assign(model.dense_b.size(), 0.0);
  g.out_w.assign(model.out_w.size(), 0.0);
  g.out_b = 0.0;
  return g;
}

double cnn_loss_and_gradients(const CnnModel& model, const std::vector<double>& input,
                              double target, CnnGradients* grads) {
  CnnCache cache;
  forward_impl(model, input, &cache);
  const double loss = bce_loss(cache.prob, target);
  if (grads == nullptr) return loss;

  const CnnShapes& shapes = model.shapes;
  const int units = model.config.dense_units;

  // Sigmoid + BCE collapses to (p - y) at the output pre-activation.
  const double d_out_z = cache.prob - target;
  grads->out_b += d_out_z;
  std::vector<double> d_dense_a(static_cast<std::size_t>(units));
  for (int u = 0; u < units; ++u) {
    grads->out_w[static_cast<std::size_t>(u)] +=
        d_out_z * cache.dense_a[static_cast<std::size_t>(u)];
    d_dense_a[static_cast<std::size_t>(u)] = d_out_z * model.out_w[static_cast<std::size_t>(u)];
  }

  const std::vector<double>& flat_act = cache.stage_out.back();
  std::vector<double> d_flat(static_cast<std::size_t>(shapes.flat), 0.0);
  for (int u = 0; u < units; ++u) {
    const double dz =
        cache.dense_z[static_cast<std::size_t>(u)] > 0.0 ? d_dense_a[static_cast<std::size_t>(u)] : 0.0;
    if (dz == 0.0) continue;
    grads->dense_b[static_cast<std::size_t>(u)] += dz;
    double* gw = grads->dense_w.data() + static_cast<std::size_t>(u) * shapes.flat;
    const double* w = model.dense_w.data() + static_cast<std::size_t>(u) * shapes.flat;
    for (int i = 0; i < shapes.flat; ++i) {
      gw[i] += dz * flat_act[static_cast<std::size_t>(i)];
      d_flat[static_cast<std::size_t>(i)] += dz * w[i];
    }
  }

  // Walk the conv stages backwards.
  std::vector<double> d_stage = std::move(d_flat);
  for (int l = static_cast<int>(model.conv.size()) - 1; l >= 0; --l) {
    const auto& conv_shape = shapes.after_conv[static_cast<std::size_t>(l)];
    std::vector<double> d_conv_act;
    if (model.has_pool(l + 1)) {
      // Scatter pooled gradients back to the argmax positions.
      d_conv_act.assign(static_cast<std::size_t>(conv_shape.size()), 0.0);
      const auto& argmax = cache.pool_argmax[static_cast<std::size_t>(l)];
      for (std::size_t i = 0; i < argmax.size(); ++i) {
        d_conv_act[static_cast<std::size_t>(argmax[i])] += d_stage[i];
      }
    } else {
      d_conv_act = std::move(d_stage);
    }

    const std::vector<double>& z = cache.conv_z[static_cast<std::size_t>(l)];
    for (std::size_t i = 0; i < d_conv_act.size(); ++i) {
      if (z[i] <= 0.0) d_conv_act[i] = 0.0;  // ReLU
    }

    const auto& layer = model.conv[static_cast<std::size_t>(l)];
    const std::vector<double>& in_act = cache.stage_in[static_cast<std::size_t>(l)];
    const int in_h = (l == 0) ? model.config.input_bins
                              : shapes.after_stage[static_cast<std::size_t>(l - 1)].h;
    const int in_w = (l == 0) ? model.config.input_frames
                              : shapes.after_stage[static_cast<std::size_t>(l - 1)].w;
    const int oh = conv_shape.h;
    const int ow = conv_shape.w;

    std::vector<double> d_in(in_act.size(), 0.0);
    auto& glayer = grads->conv[static_cast<std::size_t>(l)];
    for (int oc = 0; oc < layer.out_c; ++oc) {
      double bias_acc = 0.0;
      const double* dz_base = d_conv_act.data() + at(oc, 0, 0, oh, ow);
      for (int i = 0; i < oh * ow; ++i) bias_acc += dz_base[i];
      glayer.b[static_cast<std::size_t>(oc)] += bias_acc;

      for (int ic = 0; ic < layer.in_c; ++ic) {
        const std::size_t wofs =
            (static_cast<std::size_t>(oc) * layer.in_c + ic) * kKernel * kKernel;
        for (int ky = 0; ky < kKernel; ++ky) {
          for (int kx = 0; kx < kKernel; ++kx) {
            const double wv = layer.w[wofs + static_cast<std::size_t>(ky * kKernel + kx)];
            double wgrad = 0.0;
            for (int y = 0; y < oh; ++y) {
              const double* dz = d_conv_act.data() + at(oc, y, 0, oh, ow);
              const double* src = in_act.data() + at(ic, y + ky, kx, in_h, in_w);
              double* dst = d_in.data() + at(ic, y + ky, kx, in_h, in_w);
              for (int x = 0; x < ow; ++x) {
                wgrad += dz[x] * src[x];
                dst[x] += dz[x] * wv;
              }
            }
            glayer.w[wofs + static_cast<std::size_t>(ky * kKernel + kx)] += wgrad;
          }
        }
      }
    }
    d_stage = std::move(d_in);
  }
  return loss;
}

void cnn_extract_window(const Matrix& mel, std::size_t t0, int bins, int frames,
                        std::vector<double>& out) {
  if (mel.cols() != static_cast<std::size_t>(bins)) {
    throw ValueError("cnn_extract_window: mel band count mismatch");
  }
  if (t0 + frames > mel.rows()) throw ValueError("cnn_extract_window: window out of range");
  out.resize(static_cast<std::size_t>(bins) * frames);
  for (int h = 0; h < bins; ++h) {
    for (int w = 0; w < frames; ++w) {
      out[static_cast<std::size_t>(h) * frames + w] = mel(t0 + w, static_cast<std::size_t>(h));
    }
  }
}

namespace {

void apply_update(std::vector<double>& w, std::vector<double>& vel,
                  const std::vector<double>& g, double lr, double momentum, double inv_batch) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    vel[i] = momentum * vel[i] - lr * g[i] * inv_batch;
    w[i] += vel[i];
  }
}

}  // namespace

CnnModel cnn_train(const std::vector<CnnWindowRef>& windows, const CnnConfig& config,
                   const CnnTrainConfig& train) {
  if (windows.empty()) throw ValueError("cnn_train: no training windows");
  CnnModel model = cnn_init(config);

  // Momentum state mirrors the gradient layout.
  CnnGradients vel = cnn_gradients_zero(model);
  double vel_out_b = 0.0;

  std::vector<std::size_t> pos_idx, neg_idx;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    (windows[i].label ? pos_idx : neg_idx).push_back(i);
  }
  if (pos_idx.empty() || neg_idx.empty()) {
    throw ValueError("cnn_train: training data has a single class");
  }

  std::vector<double> input;
  double lr = train.learning_rate;
  long iteration = 0;
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    Rng rng = Rng::derive(train.seed, static_cast<std::uint64_t>(epoch) + 1);
    std::vector<std::size_t> order;
    if (train.balance_classes) {
      // Undersample the majority class for this epoch.
      std::vector<std::size_t> pos = pos_idx, neg = neg_idx;
      rng.shuffle(pos);
      rng.shuffle(neg);
      const std::size_t n = std::min(pos.size(), neg.size());
      order.reserve(2 * n);
      order.insert(order.end(), pos.begin(), pos.begin() + static_cast<long>(n));
      order.insert(order.end(), neg.begin(), neg.begin() + static_cast<long>(n));
    } else {
      order.resize(windows.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    }
    rng.shuffle(order);

    for (std::size_t start = 0; start < order.size(); start += train.batch_size) {
      const std::size_t end = std::min(order.size(), start + train.batch_size);
      CnnGradients grads = cnn_gradients_zero(model);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const CnnWindowRef& wref = windows[order[k]];
        cnn_extract_window(*wref.mel, wref.t0, config.input_bins, config.input_frames, input);
        batch_loss += cnn_loss_and_gradients(model, input, wref.label ? 1.0 : 0.0, &grads);
      }
      ++iteration;
      if (!std::isfinite(batch_loss)) {
        throw Error(strfmt("cnn_train: non-finite loss at iteration %ld", iteration));
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t l = 0; l < model.conv.size(); ++l) {
        apply_update(model.conv[l].w, vel.conv[l].w, grads.conv[l].w, lr, train.momentum, inv);
        apply_update(model.conv[l].b, vel.conv[l].b, grads.conv[l].b, lr, train.momentum, inv);
      }
      apply_update(model.dense_w, vel.dense_w, grads.dense_w, lr, train.momentum, inv);
      apply_update(model.dense_b, vel.dense_b, grads.dense_b, lr, train.momentum, inv);
      apply_update(model.out_w, vel.out_w, grads.out_w, lr, train.momentum, inv);
      vel_out_b = train.momentum * vel_out_b - lr * grads.out_b * inv;
      model.out_b += vel_out_b;
    }
    lr *= train.lr_decay;
  }
  return model;
}

std::vector<double> cnn_predict_track(const CnnModel& model, const Matrix& mel, int stride) {
  const int frames = model.config.input_frames;
  const std::size_t n = mel.rows();
  if (n < static_cast<std::size_t>(frames)) {
    throw ValueError(strfmt("cnn_predict_track: track has %zu frames, window needs %d", n,
                            frames));
  }
  if (stride < 1) throw ValueError("cnn_predict_track: stride must be >= 1");

  const std::size_t n_starts = n - frames + 1;
  std::vector<std::size_t> starts;
  for (std::size_t t0 = 0; t0 < n_starts; t0 += static_cast<std::size_t>(stride)) {
    starts.push_back(t0);
  }
  if (starts.back() != n_starts - 1) starts.push_back(n_starts - 1);

  std::vector<double> window_prob(starts.size());
  std::vector<double> input;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    cnn_extract_window(mel, starts[i], model.config.input_bins, frames, input);
    window_prob[i] = cnn_forward(model, input);
  }

  // Every frame takes the probability of the window whose center is nearest.
  const std::size_t half = static_cast<std::size_t>(frames) / 2;
  std::vector<double> out(n);
  std::size_t w = 0;
  auto center_dist = [&](std::size_t wi, std::size_t t) {
    const std::size_t c = starts[wi] + half;
    return c > t ? c - t : t - c;
  };
  for (std::size_t t = 0; t < n; ++t) {
    while (w + 1 < starts.size() && center_dist(w + 1, t) <= center_dist(w, t)) ++w;
    out[t] = window_prob[w];
  }
  return out;
}

}  // namespace vdlab
