#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vdlab/audio_io.hpp"
#include "vdlab/cnn.hpp"
#include "vdlab/config.hpp"
#include "vdlab/eval.hpp"
#include "vdlab/features.hpp"
#include "vdlab/forest.hpp"
#include "vdlab/hpss.hpp"
#include "vdlab/postprocess.hpp"
#include "vdlab/rnn.hpp"
#include "vdlab/stressgen.hpp"

namespace vdlab {

// ---------------------------------------------------------------------------
// Per-pipeline configuration, resolved from the experiment config file.

struct FePipelineConfig {
  FeatureConfig features;
  ContextMode context = ContextMode::kDelta;
  int context_radius = 38;  // +/- frames, 1.1 s at 70 fps
  ForestParams forest;
  double threshold = 0.5;
  double smooth_ms = 800.0;
};

struct CnnPipelineConfig {
  int sample_rate = 22050;
  int fft_size = 1024;
  int hop = 315;
  int n_mels = 80;
  double mel_fmin = 0.0;
  double mel_fmax = 11025.0;
  double power_floor = 1e-10;
  CnnConfig cnn;
  CnnTrainConfig train;
  int train_stride = 5;    // frames between training window starts
  int predict_stride = 1;  // frames between inference windows
  double threshold = 0.5;
  double smooth_ms = 800.0;
};

struct RnnPipelineConfig {
  int sample_rate = 22050;
  DoubleStageConfig hpss;
  int n_mels = 40;
  double mel_fmin = 0.0;
  double mel_fmax = 11025.0;
  double power_floor = 1e-10;
  RnnConfig rnn;  // input_dim = 2 * n_mels
  RnnTrainConfig train;
  int train_hop = 109;
  int predict_hop = 109;
  double threshold = 0.5;
  double smooth_ms = 800.0;
};

FePipelineConfig fe_pipeline_config(const Config& config);
CnnPipelineConfig cnn_pipeline_config(const Config& config);
RnnPipelineConfig rnn_pipeline_config(const Config& config);

// ---------------------------------------------------------------------------
// Trained pipeline models (feature recipe + classifier + post-filter).

struct FePipelineModel {
  FePipelineConfig config;
  Standardizer standardizer;
  ForestModel forest;
};

struct CnnPipelineModel {
  CnnPipelineConfig config;
  CnnModel cnn;
};

struct RnnPipelineModel {
  RnnPipelineConfig config;
  RnnModel rnn;
};

// ---------------------------------------------------------------------------
// Feature extraction per pipeline.

// 116 base features with temporal context appended (not standardized).
Matrix fe_classifier_input(const AudioClip& clip, const FePipelineConfig& config,
                           double* frame_rate = nullptr);

MelSpectrogram cnn_input(const AudioClip& clip, const CnnPipelineConfig& config);

struct RnnInput {
  Matrix rows;  // n_frames x (2 * n_mels): harmonic then percussive mel
  double frame_rate = 0.0;
};

RnnInput rnn_input(const AudioClip& clip, const RnnPipelineConfig& config);

// ---------------------------------------------------------------------------
// Corpus-driven training. Track audio is loaded from `dir` and label files
// are converted to frames at each pipeline's own frame grid.

FePipelineModel train_fe_pipeline(const std::string& dir,
                                  const std::vector<CorpusTrack>& tracks,
                                  const FePipelineConfig& config, int jobs);

CnnPipelineModel train_cnn_pipeline(const std::string& dir,
                                    const std::vector<CorpusTrack>& tracks,
                                    const CnnPipelineConfig& config, int jobs);

RnnPipelineModel train_rnn_pipeline(const std::string& dir,
                                    const std::vector<CorpusTrack>& tracks,
                                    const RnnPipelineConfig& config, int jobs);

// ---------------------------------------------------------------------------
// Prediction: probabilities plus post-processed labels.

PredictionTrack predict_fe(const FePipelineModel& model, const AudioClip& clip);
PredictionTrack predict_cnn(const CnnPipelineModel& model, const AudioClip& clip);
PredictionTrack predict_rnn(const RnnPipelineModel& model, const AudioClip& clip);

// ---------------------------------------------------------------------------
// Model files.

void save_fe_model(const std::string& path, const FePipelineModel& model);
void save_cnn_model(const std::string& path, const CnnPipelineModel& model);
void save_rnn_model(const std::string& path, const RnnPipelineModel& model);

FePipelineModel load_fe_model(const std::string& path);
CnnPipelineModel load_cnn_model(const std::string& path);
RnnPipelineModel load_rnn_model(const std::string& path);

// Dispatches on the container's kind field.
struct AnyModel {
  std::shared_ptr<FePipelineModel> fe;
  std::shared_ptr<CnnPipelineModel> cnn;
  std::shared_ptr<RnnPipelineModel> rnn;

  std::string kind() const;
};

AnyModel load_any_model(const std::string& path);
PredictionTrack predict_any(const AnyModel& model, const AudioClip& clip);

// ---------------------------------------------------------------------------
// Misc plumbing shared by CLI and tests.

AudioClip load_clip_resampled(const std::string& path, int target_rate);

// Prediction CSV: `time_s,probability,label`, one row per frame.
void write_prediction_csv(const std::string& path, const PredictionTrack& track);
PredictionTrack read_prediction_csv(const std::string& path);

std::vector<StemPair> load_stem_pairs(const std::string& dir,
                                      const std::vector<CorpusTrack>& tracks,
                                      int target_rate);

NamedPredictor make_named_predictor(const std::string& name, const AnyModel& model);

}  // namespace vdlab
