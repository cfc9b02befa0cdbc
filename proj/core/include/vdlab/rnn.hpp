#pragma once

#include <cstdint>
#include <vector>

#include "vdlab/matrix.hpp"

namespace vdlab {

// Stacked bi-directional LSTM with a shared per-frame sigmoid output.
struct RnnConfig {
  int input_dim = 80;  // h/p mel concatenation: 2 x n_mels
  std::vector<int> hidden = {30, 20, 40};
  int window = 218;  // frames per training window
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
};

// One direction of one layer. Gate order i, f, g, o; weight rows hold the
// input block first, then the recurrent block.
struct LstmDir {
  int in_dim = 0;
  int hidden = 0;
  std::vector<double> w;  // [4*hidden][in_dim + hidden]
  std::vector<double> b;  // [4*hidden]
};

struct BiLstmLayer {
  LstmDir fwd, bwd;
};

struct RnnModel {
  RnnConfig config;
  std::vector<BiLstmLayer> layers;
  std::vector<double> out_w;  // [2 * hidden.back()]
  double out_b = 0.0;
};

RnnModel rnn_zero(const RnnConfig& config);
RnnModel rnn_init(const RnnConfig& config);

// Per-frame probabilities for `frames` rows of features. Any length is
// accepted; training windows are zero-padded to config.window by callers.
std::vector<double> rnn_forward(const RnnModel& model, const Matrix& frames);

struct RnnGradients {
  std::vector<BiLstmLayer> layers;
  std::vector<double> out_w;
  double out_b = 0.0;
};

RnnGradients rnn_gradients_zero(const RnnModel& model);

// Weighted per-frame binary cross-entropy (weights 0 mask frames out),
// normalized by the total weight. Gradients are accumulated into `grads`.
double rnn_loss_and_gradients(const RnnModel& model, const Matrix& frames,
                              const std::vector<double>& targets,
                              const std::vector<double>& weights, RnnGradients* grads);

struct RnnTrainConfig {
  int epochs = 4;
  int batch_size = 4;  // windows per update
  double learning_rate = 0.05;
  double momentum = 0.9;
  double lr_decay = 0.7;
  bool balance_classes = true;
  std::uint64_t seed = 1;
};

// A window of `len` rows starting at t0 of a per-track feature matrix;
// shorter-than-window slices are zero-padded and masked.
struct RnnWindowRef {
  const Matrix* features = nullptr;
  const std::vector<std::uint8_t>* labels = nullptr;
  std::size_t t0 = 0;
  std::size_t len = 0;
};

RnnModel rnn_train(const std::vector<RnnWindowRef>& windows, const RnnConfig& config,
                   const RnnTrainConfig& train);

// Overlap-averaged per-frame probabilities over the whole track; windows
// start every `hop` frames and the final window is aligned to the end.
std::vector<double> rnn_predict_track(const RnnModel& model, const Matrix& features,
                                      int hop);

}  // namespace vdlab
