#pragma once

#include <cstdint>
#include <vector>

#include "vdlab/dsp.hpp"
#include "vdlab/matrix.hpp"

namespace vdlab {

// 3x3 valid convolutions with ReLU, 3x3 max-pooling after the layers listed
// in pool_after (1-based), then a ReLU dense layer and a single sigmoid unit.
struct CnnConfig {
  int input_bins = 80;    // mel bands
  int input_frames = 115; // window length in frames
  std::vector<int> conv_channels = {32, 32, 64, 64};
  std::vector<int> pool_after = {2, 4};
  int dense_units = 128;
  std::uint64_t seed = 1;
};

struct CnnShapes {
  struct Stage {
    int c = 0, h = 0, w = 0;
    int size() const { return c * h * w; }
  };
  std::vector<Stage> after_conv;   // post conv+relu, pre pool
  std::vector<Stage> after_stage;  // post optional pool
  int flat = 0;
};

// Validates the shape chain; throws if any dimension collapses.
CnnShapes cnn_plan(const CnnConfig& config);

struct CnnModel {
  CnnConfig config;
  CnnShapes shapes;

  struct ConvLayer {
    int in_c = 0, out_c = 0;
    std::vector<double> w;  // [out_c][in_c][3][3]
    std::vector<double> b;  // [out_c]
  };
  std::vector<ConvLayer> conv;
  std::vector<double> dense_w;  // [dense_units][flat]
  std::vector<double> dense_b;  // [dense_units]
  std::vector<double> out_w;    // [dense_units]
  double out_b = 0.0;

  bool has_pool(int conv_index_1based) const;
};

// Zero model (all weights zero) with the right shapes.
CnnModel cnn_zero(const CnnConfig& config);

// He-initialized weights from the config seed.
CnnModel cnn_init(const CnnConfig& config);

// `input` is channel-major [1][input_bins][input_frames].
double cnn_forward(const CnnModel& model, const std::vector<double>& input);

// Mirrors the model's weight storage.
struct CnnGradients {
  std::vector<CnnModel::ConvLayer> conv;
  std::vector<double> dense_w, dense_b, out_w;
  double out_b = 0.0;
};

CnnGradients cnn_gradients_zero(const CnnModel& model);

// Binary cross-entropy loss and its gradients for one window.
double cnn_loss_and_gradients(const CnnModel& model, const std::vector<double>& input,
                              double target, CnnGradients* grads);

struct CnnTrainConfig {
  int epochs = 6;
  int batch_size = 32;
  double learning_rate = 0.02;
  double momentum = 0.9;
  double lr_decay = 0.7;  // multiplied in per epoch
  bool balance_classes = true;
  std::uint64_t seed = 1;
};

// A training window: `frames` rows of a mel matrix starting at t0; the
// label belongs to the window's center frame.
struct CnnWindowRef {
  const Matrix* mel = nullptr;  // n_frames x n_mels
  std::size_t t0 = 0;
  std::uint8_t label = 0;
};

void cnn_extract_window(const Matrix& mel, std::size_t t0, int bins, int frames,
                        std::vector<double>& out);

// Mini-batch SGD with momentum on cross-entropy; majority class
// undersampled per epoch. Deterministic given the seed.
CnnModel cnn_train(const std::vector<CnnWindowRef>& windows, const CnnConfig& config,
                   const CnnTrainConfig& train);

// Per-frame probabilities for a whole mel track. Each window predicts its
// center frame; windows start every `stride` frames and frames between
// window centers take the nearest center's value.
std::vector<double> cnn_predict_track(const CnnModel& model, const Matrix& mel,
                                      int stride = 1);

}  // namespace vdlab
