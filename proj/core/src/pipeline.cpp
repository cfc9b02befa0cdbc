#include "vdlab/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "vdlab/errors.hpp"
#include "vdlab/log.hpp"
#include "vdlab/model_io.hpp"
#include "vdlab/parallel.hpp"
#include "vdlab/util.hpp"

namespace vdlab {

namespace {

using nlohmann::json;

std::vector<int> int_list(const Config& config, const std::string& key,
                          const std::vector<int>& fallback) {
  std::vector<double> fallback_d(fallback.begin(), fallback.end());
  std::vector<int> out;
  for (double v : config.get_double_list(key, fallback_d)) out.push_back(static_cast<int>(v));
  return out;
}

}  // namespace

FePipelineConfig fe_pipeline_config(const Config& c) {
  FePipelineConfig p;
  p.features.sample_rate = c.get_int("dsp.sample_rate", p.features.sample_rate);
  p.features.fft_size = c.get_int("dsp.fft_size", p.features.fft_size);
  p.features.hop = c.get_int("dsp.hop", p.features.hop);
  p.features.bins_per_semitone = c.get_int("fe.bins_per_semitone", p.features.bins_per_semitone);
  p.features.log_fmin = c.get_double("fe.log_fmin", p.features.log_fmin);
  p.features.log_fmax = c.get_double("fe.log_fmax", p.features.log_fmax);
  p.features.n_bands = c.get_int("fe.n_bands", p.features.n_bands);
  p.features.band_overlap = c.get_double("fe.band_overlap", p.features.band_overlap);
  p.features.max_lag = c.get_int("fe.max_lag", p.features.max_lag);
  p.features.n_mels = c.get_int("fe.n_mels", p.features.n_mels);
  p.features.mel_fmin = c.get_double("fe.mel_fmin", p.features.mel_fmin);
  p.features.mel_fmax = c.get_double("fe.mel_fmax", p.features.mel_fmax);
  p.features.n_mfcc = c.get_int("fe.n_mfcc", p.features.n_mfcc);
  p.features.delta_span = c.get_int("fe.delta_span", p.features.delta_span);
  p.features.vocal_variance_window =
      c.get_int("fe.vocal_variance_window", p.features.vocal_variance_window);
  p.context = context_mode_from_string(c.get_string("fe.context", "delta"));
  p.context_radius = c.get_int("fe.context_radius", p.context_radius);
  p.forest.n_trees = c.get_int("fe.n_trees", p.forest.n_trees);
  p.forest.max_depth = c.get_int("fe.max_depth", p.forest.max_depth);
  p.forest.min_leaf = c.get_int("fe.min_leaf", p.forest.min_leaf);
  p.forest.feature_subsample = c.get_int("fe.feature_subsample", p.forest.feature_subsample);
  p.forest.seed = c.get_uint64("seed", p.forest.seed);
  p.threshold = c.get_double("postprocess.threshold", p.threshold);
  p.smooth_ms = c.get_double("postprocess.smooth_ms", p.smooth_ms);
  return p;
}

CnnPipelineConfig cnn_pipeline_config(const Config& c) {
  CnnPipelineConfig p;
  p.sample_rate = c.get_int("dsp.sample_rate", p.sample_rate);
  p.fft_size = c.get_int("dsp.fft_size", p.fft_size);
  p.hop = c.get_int("dsp.hop", p.hop);
  p.n_mels = c.get_int("cnn.n_mels", p.n_mels);
  p.mel_fmin = c.get_double("cnn.mel_fmin", p.mel_fmin);
  p.mel_fmax = c.get_double("cnn.mel_fmax", p.mel_fmax);
  p.cnn.input_bins = p.n_mels;
  p.cnn.input_frames = c.get_int("cnn.window_frames", p.cnn.input_frames);
  p.cnn.conv_channels = int_list(c, "cnn.channels", p.cnn.conv_channels);
  p.cnn.pool_after = int_list(c, "cnn.pool_after", p.cnn.pool_after);
  p.cnn.dense_units = c.get_int("cnn.dense_units", p.cnn.dense_units);
  p.cnn.seed = c.get_uint64("seed", p.cnn.seed);
  p.train.epochs = c.get_int("cnn.epochs", p.train.epochs);
  p.train.batch_size = c.get_int("cnn.batch_size", p.train.batch_size);
  p.train.learning_rate = c.get_double("cnn.learning_rate", p.train.learning_rate);
  p.train.momentum = c.get_double("cnn.momentum", p.train.momentum);
  p.train.lr_decay = c.get_double("cnn.lr_decay", p.train.lr_decay);
  p.train.balance_classes = c.get_bool("cnn.balance_classes", p.train.balance_classes);
  p.train.seed = c.get_uint64("seed", p.train.seed);
  p.train_stride = c.get_int("cnn.train_stride", p.train_stride);
  p.predict_stride = c.get_int("cnn.predict_stride", p.predict_stride);
  p.threshold = c.get_double("postprocess.threshold", p.threshold);
  p.smooth_ms = c.get_double("postprocess.smooth_ms", p.smooth_ms);
  return p;
}

RnnPipelineConfig rnn_pipeline_config(const Config& c) {
  RnnPipelineConfig p;
  p.sample_rate = c.get_int("dsp.sample_rate", p.sample_rate);
  p.hpss.stage1_fft = c.get_int("rnn.stage1_fft", p.hpss.stage1_fft);
  p.hpss.stage1_hop = c.get_int("rnn.stage1_hop", p.hpss.stage1_hop);
  p.hpss.stage2_fft = c.get_int("rnn.stage2_fft", p.hpss.stage2_fft);
  p.hpss.stage2_hop = c.get_int("dsp.hop", p.hpss.stage2_hop);
  p.hpss.harm_window = c.get_int("rnn.harm_window", p.hpss.harm_window);
  p.hpss.perc_window = c.get_int("rnn.perc_window", p.hpss.perc_window);
  p.hpss.power = c.get_double("rnn.mask_power", p.hpss.power);
  p.n_mels = c.get_int("rnn.n_mels", p.n_mels);
  p.mel_fmin = c.get_double("rnn.mel_fmin", p.mel_fmin);
  p.mel_fmax = c.get_double("rnn.mel_fmax", p.mel_fmax);
  p.rnn.input_dim = 2 * p.n_mels;
  p.rnn.hidden = int_list(c, "rnn.hidden", p.rnn.hidden);
  p.rnn.window = c.get_int("rnn.window_frames", p.rnn.window);
  p.rnn.clip_norm = c.get_double("rnn.clip_norm", p.rnn.clip_norm);
  p.rnn.seed = c.get_uint64("seed", p.rnn.seed);
  p.train.epochs = c.get_int("rnn.epochs", p.train.epochs);
  p.train.batch_size = c.get_int("rnn.batch_size", p.train.batch_size);
  p.train.learning_rate = c.get_double("rnn.learning_rate", p.train.learning_rate);
  p.train.momentum = c.get_double("rnn.momentum", p.train.momentum);
  p.train.lr_decay = c.get_double("rnn.lr_decay", p.train.lr_decay);
  p.train.balance_classes = c.get_bool("rnn.balance_classes", p.train.balance_classes);
  p.train.seed = c.get_uint64("seed", p.train.seed);
  p.train_hop = c.get_int("rnn.train_hop", p.train_hop);
  p.predict_hop = c.get_int("rnn.predict_hop", p.predict_hop);
  p.threshold = c.get_double("postprocess.threshold", p.threshold);
  p.smooth_ms = c.get_double("postprocess.smooth_ms", p.smooth_ms);
  return p;
}

Matrix fe_classifier_input(const AudioClip& clip, const FePipelineConfig& config,
                           double* frame_rate) {
  const FeatureMatrix features = assemble_features(clip, config.features);
  if (frame_rate != nullptr) *frame_rate = features.frame_rate;
  return add_context(features.rows, config.context, config.context_radius);
}

MelSpectrogram cnn_input(const AudioClip& clip, const CnnPipelineConfig& config) {
  const Spectrogram spec = stft(clip, config.fft_size, config.hop);
  const MelFilterbank bank = mel_filterbank(config.n_mels, config.mel_fmin, config.mel_fmax,
                                            config.fft_size, config.sample_rate);
  return mel_spectrogram(spec, bank, config.power_floor);
}

RnnInput rnn_input(const AudioClip& clip, const RnnPipelineConfig& config) {
  const DoubleStageOutput split = double_stage_hpss(clip, config.hpss);
  const MelFilterbank bank = mel_filterbank(config.n_mels, config.mel_fmin, config.mel_fmax,
                                            config.hpss.stage2_fft, config.sample_rate);
  const MelSpectrogram h = mel_spectrogram(split.vocal_enhanced, bank, config.power_floor);
  const MelSpectrogram p = mel_spectrogram(split.percussive, bank, config.power_floor);

  RnnInput out;
  out.frame_rate = h.frame_rate;
  out.rows = Matrix(h.n_frames(), 2 * h.n_mels());
  for (std::size_t t = 0; t < h.n_frames(); ++t) {
    double* dst = out.rows.row(t);
    std::copy(h.values.row(t), h.values.row(t) + h.n_mels(), dst);
    std::copy(p.values.row(t), p.values.row(t) + p.n_mels(), dst + h.n_mels());
  }
  return out;
}

AudioClip load_clip_resampled(const std::string& path, int target_rate) {
  AudioClip clip = read_wav(path);
  if (clip.sample_rate != target_rate) clip = resample(clip, target_rate);
  return clip;
}

namespace {

FrameLabels track_labels(const std::string& dir, const CorpusTrack& track,
                         double frame_rate, std::size_t n_frames) {
  const LabelTrack lab = parse_lab(dir + "/" + track.lab_file, {"sing", "vocal"});
  return labels_to_frames(lab, frame_rate, n_frames);
}

}  // namespace

FePipelineModel train_fe_pipeline(const std::string& dir,
                                  const std::vector<CorpusTrack>& tracks,
                                  const FePipelineConfig& config, int jobs) {
  if (tracks.empty()) throw ValueError("train_fe_pipeline: no tracks");

  std::vector<Matrix> per_track(tracks.size());
  std::vector<FrameLabels> per_labels(tracks.size());
  parallel_for(tracks.size(), jobs, [&](std::size_t i) {
    const AudioClip clip =
        load_clip_resampled(dir + "/" + tracks[i].mix_wav, config.features.sample_rate);
    double frame_rate = 0.0;
    per_track[i] = fe_classifier_input(clip, config, &frame_rate);
    per_labels[i] = track_labels(dir, tracks[i], frame_rate, per_track[i].rows());
  });

  std::size_t total = 0;
  for (const Matrix& m : per_track) total += m.rows();
  Matrix rows(total, per_track[0].cols());
  std::vector<std::uint8_t> labels(total);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < per_track.size(); ++i) {
    std::copy(per_track[i].data().begin(), per_track[i].data().end(),
              rows.data().begin() + static_cast<long>(offset * rows.cols()));
    std::copy(per_labels[i].labels.begin(), per_labels[i].labels.end(),
              labels.begin() + static_cast<long>(offset));
    offset += per_track[i].rows();
  }

  FePipelineModel model;
  model.config = config;
  model.standardizer.fit(rows);
  model.standardizer.apply(rows);
  model.forest = forest_train(rows, labels, config.forest, jobs);
  return model;
}

CnnPipelineModel train_cnn_pipeline(const std::string& dir,
                                    const std::vector<CorpusTrack>& tracks,
                                    const CnnPipelineConfig& config, int jobs) {
  if (tracks.empty()) throw ValueError("train_cnn_pipeline: no tracks");
  std::vector<Matrix> mels(tracks.size());
  std::vector<FrameLabels> labels(tracks.size());
  parallel_for(tracks.size(), jobs, [&](std::size_t i) {
    const AudioClip clip =
        load_clip_resampled(dir + "/" + tracks[i].mix_wav, config.sample_rate);
    MelSpectrogram mel = cnn_input(clip, config);
    labels[i] = track_labels(dir, tracks[i], mel.frame_rate, mel.n_frames());
    mels[i] = std::move(mel.values);
  });

  const int window = config.cnn.input_frames;
  const std::size_t center = static_cast<std::size_t>(window) / 2;
  std::vector<CnnWindowRef> windows;
  for (std::size_t i = 0; i < mels.size(); ++i) {
    if (mels[i].rows() < static_cast<std::size_t>(window)) {
      log_warn(strfmt("cnn training: track %s shorter than one window, skipped",
                      tracks[i].id.c_str()));
      continue;
    }
    for (std::size_t t0 = 0; t0 + window <= mels[i].rows();
         t0 += static_cast<std::size_t>(config.train_stride)) {
      windows.push_back({&mels[i], t0, labels[i].labels[t0 + center]});
    }
  }

  CnnPipelineModel model;
  model.config = config;
  model.cnn = cnn_train(windows, config.cnn, config.train);
  return model;
}

RnnPipelineModel train_rnn_pipeline(const std::string& dir,
                                    const std::vector<CorpusTrack>& tracks,
                                    const RnnPipelineConfig& config, int jobs) {
  if (tracks.empty()) throw ValueError("train_rnn_pipeline: no tracks");
  std::vector<Matrix> inputs(tracks.size());
  std::vector<std::vector<std::uint8_t>> labels(tracks.size());
  parallel_for(tracks.size(), jobs, [&](std::size_t i) {
    const AudioClip clip =
        load_clip_resampled(dir + "/" + tracks[i].mix_wav, config.sample_rate);
    RnnInput input = rnn_input(clip, config);
    labels[i] = track_labels(dir, tracks[i], input.frame_rate, input.rows.rows()).labels;
    inputs[i] = std::move(input.rows);
  });

  std::vector<RnnWindowRef> windows;
  const std::size_t window = static_cast<std::size_t>(config.rnn.window);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::size_t n = inputs[i].rows();
    for (std::size_t t0 = 0; t0 < n; t0 += static_cast<std::size_t>(config.train_hop)) {
      const std::size_t len = std::min(window, n - t0);
      windows.push_back({&inputs[i], &labels[i], t0, len});
      if (t0 + window >= n) break;
    }
  }

  RnnPipelineModel model;
  model.config = config;
  model.rnn = rnn_train(windows, config.rnn, config.train);
  return model;
}

PredictionTrack predict_fe(const FePipelineModel& model, const AudioClip& clip) {
  double frame_rate = 0.0;
  Matrix rows = fe_classifier_input(clip, model.config, &frame_rate);
  model.standardizer.apply(rows);
  PredictionTrack track;
  track.frame_rate = frame_rate;
  track.probabilities = forest_predict(model.forest, rows);
  return postprocess(track, model.config.threshold, model.config.smooth_ms);
}

PredictionTrack predict_cnn(const CnnPipelineModel& model, const AudioClip& clip) {
  const MelSpectrogram mel = cnn_input(clip, model.config);
  PredictionTrack track;
  track.frame_rate = mel.frame_rate;
  track.probabilities = cnn_predict_track(model.cnn, mel.values, model.config.predict_stride);
  return postprocess(track, model.config.threshold, model.config.smooth_ms);
}

PredictionTrack predict_rnn(const RnnPipelineModel& model, const AudioClip& clip) {
  const RnnInput input = rnn_input(clip, model.config);
  PredictionTrack track;
  track.frame_rate = input.frame_rate;
  track.probabilities = rnn_predict_track(model.rnn, input.rows, model.config.predict_hop);
  return postprocess(track, model.config.threshold, model.config.smooth_ms);
}

// ---------------------------------------------------------------------------
// Serialization.

namespace {

json fe_config_json(const FePipelineConfig& p) {
  json j;
  j["sample_rate"] = p.features.sample_rate;
  j["fft_size"] = p.features.fft_size;
  j["hop"] = p.features.hop;
  j["bins_per_semitone"] = p.features.bins_per_semitone;
  j["log_fmin"] = p.features.log_fmin;
  j["log_fmax"] = p.features.log_fmax;
  j["n_bands"] = p.features.n_bands;
  j["band_overlap"] = p.features.band_overlap;
  j["max_lag"] = p.features.max_lag;
  j["n_mels"] = p.features.n_mels;
  j["mel_fmin"] = p.features.mel_fmin;
  j["mel_fmax"] = p.features.mel_fmax;
  j["n_mfcc"] = p.features.n_mfcc;
  j["delta_span"] = p.features.delta_span;
  j["vocal_variance_window"] = p.features.vocal_variance_window;
  j["context"] = to_string(p.context);
  j["context_radius"] = p.context_radius;
  j["n_trees"] = p.forest.n_trees;
  j["max_depth"] = p.forest.max_depth;
  j["min_leaf"] = p.forest.min_leaf;
  j["feature_subsample"] = p.forest.feature_subsample;
  j["seed"] = p.forest.seed;
  j["threshold"] = p.threshold;
  j["smooth_ms"] = p.smooth_ms;
  return j;
}

FePipelineConfig fe_config_from_json(const json& j) {
  FePipelineConfig p;
  p.features.sample_rate = j.at("sample_rate");
  p.features.fft_size = j.at("fft_size");
  p.features.hop = j.at("hop");
  p.features.bins_per_semitone = j.at("bins_per_semitone");
  p.features.log_fmin = j.at("log_fmin");
  p.features.log_fmax = j.at("log_fmax");
  p.features.n_bands = j.at("n_bands");
  p.features.band_overlap = j.at("band_overlap");
  p.features.max_lag = j.at("max_lag");
  p.features.n_mels = j.at("n_mels");
  p.features.mel_fmin = j.at("mel_fmin");
  p.features.mel_fmax = j.at("mel_fmax");
  p.features.n_mfcc = j.at("n_mfcc");
  p.features.delta_span = j.at("delta_span");
  p.features.vocal_variance_window = j.at("vocal_variance_window");
  p.context = context_mode_from_string(j.at("context"));
  p.context_radius = j.at("context_radius");
  p.forest.n_trees = j.at("n_trees");
  p.forest.max_depth = j.at("max_depth");
  p.forest.min_leaf = j.at("min_leaf");
  p.forest.feature_subsample = j.at("feature_subsample");
  p.forest.seed = j.at("seed");
  p.threshold = j.at("threshold");
  p.smooth_ms = j.at("smooth_ms");
  return p;
}

json cnn_config_json(const CnnPipelineConfig& p) {
  json j;
  j["sample_rate"] = p.sample_rate;
  j["fft_size"] = p.fft_size;
  j["hop"] = p.hop;
  j["n_mels"] = p.n_mels;
  j["mel_fmin"] = p.mel_fmin;
  j["mel_fmax"] = p.mel_fmax;
  j["window_frames"] = p.cnn.input_frames;
  j["channels"] = p.cnn.conv_channels;
  j["pool_after"] = p.cnn.pool_after;
  j["dense_units"] = p.cnn.dense_units;
  j["seed"] = p.cnn.seed;
  j["predict_stride"] = p.predict_stride;
  j["threshold"] = p.threshold;
  j["smooth_ms"] = p.smooth_ms;
  return j;
}

CnnPipelineConfig cnn_config_from_json(const json& j) {
  CnnPipelineConfig p;
  p.sample_rate = j.at("sample_rate");
  p.fft_size = j.at("fft_size");
  p.hop = j.at("hop");
  p.n_mels = j.at("n_mels");
  p.mel_fmin = j.at("mel_fmin");
  p.mel_fmax = j.at("mel_fmax");
  p.cnn.input_bins = p.n_mels;
  p.cnn.input_frames = j.at("window_frames");
  p.cnn.conv_channels = j.at("channels").get<std::vector<int>>();
  p.cnn.pool_after = j.at("pool_after").get<std::vector<int>>();
  p.cnn.dense_units = j.at("dense_units");
  p.cnn.seed = j.at("seed");
  p.predict_stride = j.at("predict_stride");
  p.threshold = j.at("threshold");
  p.smooth_ms = j.at("smooth_ms");
  return p;
}

json rnn_config_json(const RnnPipelineConfig& p) {
  json j;
  j["sample_rate"] = p.sample_rate;
  j["stage1_fft"] = p.hpss.stage1_fft;
  j["stage1_hop"] = p.hpss.stage1_hop;
  j["stage2_fft"] = p.hpss.stage2_fft;
  j["stage2_hop"] = p.hpss.stage2_hop;
  j["harm_window"] = p.hpss.harm_window;
  j["perc_window"] = p.hpss.perc_window;
  j["mask_power"] = p.hpss.power;
  j["n_mels"] = p.n_mels;
  j["mel_fmin"] = p.mel_fmin;
  j["mel_fmax"] = p.mel_fmax;
  j["hidden"] = p.rnn.hidden;
  j["window_frames"] = p.rnn.window;
  j["clip_norm"] = p.rnn.clip_norm;
  j["seed"] = p.rnn.seed;
  j["predict_hop"] = p.predict_hop;
  j["threshold"] = p.threshold;
  j["smooth_ms"] = p.smooth_ms;
  return j;
}

RnnPipelineConfig rnn_config_from_json(const json& j) {
  RnnPipelineConfig p;
  p.sample_rate = j.at("sample_rate");
  p.hpss.stage1_fft = j.at("stage1_fft");
  p.hpss.stage1_hop = j.at("stage1_hop");
  p.hpss.stage2_fft = j.at("stage2_fft");
  p.hpss.stage2_hop = j.at("stage2_hop");
  p.hpss.harm_window = j.at("harm_window");
  p.hpss.perc_window = j.at("perc_window");
  p.hpss.power = j.at("mask_power");
  p.n_mels = j.at("n_mels");
  p.mel_fmin = j.at("mel_fmin");
  p.mel_fmax = j.at("mel_fmax");
  p.rnn.input_dim = 2 * p.n_mels;
  p.rnn.hidden = j.at("hidden").get<std::vector<int>>();
  p.rnn.window = j.at("window_frames");
  p.rnn.clip_norm = j.at("clip_norm");
  p.rnn.seed = j.at("seed");
  p.predict_hop = j.at("predict_hop");
  p.threshold = j.at("threshold");
  p.smooth_ms = j.at("smooth_ms");
  return p;
}

}  // namespace

void save_fe_model(const std::string& path, const FePipelineModel& model) {
  ModelContainer c;
  c.kind = kModelKindForest;
  json j = fe_config_json(model.config);
  j["n_features"] = model.forest.n_features;
  c.params_json = j.dump();
  c.blobs.emplace_back("standardizer_mean", model.standardizer.mean);
  c.blobs.emplace_back("standardizer_std", model.standardizer.stdev);
  std::vector<double> sizes;
  std::vector<double> nodes;
  for (const DecisionTree& tree : model.forest.trees) {
    sizes.push_back(static_cast<double>(tree.nodes.size()));
    for (const TreeNode& n : tree.nodes) {
      nodes.push_back(n.feature);
      nodes.push_back(n.threshold);
      nodes.push_back(n.left);
      nodes.push_back(n.right);
      nodes.push_back(n.prob);
    }
  }
  c.blobs.emplace_back("tree_sizes", std::move(sizes));
  c.blobs.emplace_back("tree_nodes", std::move(nodes));
  write_model_container(path, c);
}

FePipelineModel load_fe_model(const std::string& path) {
  const ModelContainer c = read_model_container(path);
  if (c.kind != kModelKindForest) throw ParseError("not a forest model: " + path);
  const json j = json::parse(c.params_json);
  FePipelineModel model;
  model.config = fe_config_from_json(j);
  model.standardizer.mean = c.blob("standardizer_mean");
  model.standardizer.stdev = c.blob("standardizer_std");
  model.forest.params = model.config.forest;
  model.forest.n_features = j.at("n_features");
  const std::vector<double>& sizes = c.blob("tree_sizes");
  const std::vector<double>& nodes = c.blob("tree_nodes");
  std::size_t offset = 0;
  for (double size : sizes) {
    DecisionTree tree;
    for (std::size_t i = 0; i < static_cast<std::size_t>(size); ++i) {
      TreeNode n;
      n.feature = static_cast<int>(nodes.at(offset++));
      n.threshold = nodes.at(offset++);
      n.left = static_cast<int>(nodes.at(offset++));
      n.right = static_cast<int>(nodes.at(offset++));
      n.prob = nodes.at(offset++);
      tree.nodes.push_back(n);
    }
    model.forest.trees.push_back(std::move(tree));
  }
  return model;
}

void save_cnn_model(const std::string& path, const CnnPipelineModel& model) {
  ModelContainer c;
  c.kind = kModelKindCnn;
  c.params_json = cnn_config_json(model.config).dump();
  for (std::size_t l = 0; l < model.cnn.conv.size(); ++l) {
    c.blobs.emplace_back(strfmt("conv%zu_w", l), model.cnn.conv[l].w);
    c.blobs.emplace_back(strfmt("conv%zu_b", l), model.cnn.conv[l].b);
  }
  c.blobs.emplace_back("dense_w", model.cnn.dense_w);
  c.blobs.emplace_back("dense_b", model.cnn.dense_b);
  c.blobs.emplace_back("out_w", model.cnn.out_w);
  c.blobs.emplace_back("out_b", std::vector<double>{model.cnn.out_b});
  write_model_container(path, c);
}

CnnPipelineModel load_cnn_model(const std::string& path) {
  const ModelContainer c = read_model_container(path);
  if (c.kind != kModelKindCnn) throw ParseError("not a cnn model: " + path);
  CnnPipelineModel model;
  model.config = cnn_config_from_json(json::parse(c.params_json));
  model.cnn = cnn_zero(model.config.cnn);
  for (std::size_t l = 0; l < model.cnn.conv.size(); ++l) {
    model.cnn.conv[l].w = c.blob(strfmt("conv%zu_w", l));
    model.cnn.conv[l].b = c.blob(strfmt("conv%zu_b", l));
  }
  model.cnn.dense_w = c.blob("dense_w");
  model.cnn.dense_b = c.blob("dense_b");
  model.cnn.out_w = c.blob("out_w");
  model.cnn.out_b = c.blob("out_b").at(0);
  return model;
}

void save_rnn_model(const std::string& path, const RnnPipelineModel& model) {
  ModelContainer c;
  c.kind = kModelKindRnn;
  c.params_json = rnn_config_json(model.config).dump();
  for (std::size_t l = 0; l < model.rnn.layers.size(); ++l) {
    c.blobs.emplace_back(strfmt("l%zu_fwd_w", l), model.rnn.layers[l].fwd.w);
    c.blobs.emplace_back(strfmt("l%zu_fwd_b", l), model.rnn.layers[l].fwd.b);
    c.blobs.emplace_back(strfmt("l%zu_bwd_w", l), model.rnn.layers[l].bwd.w);
    c.blobs.emplace_back(strfmt("l%zu_bwd_b", l), model.rnn.layers[l].bwd.b);
  }
  c.blobs.emplace_back("out_w", model.rnn.out_w);
  c.blobs.emplace_back("out_b", std::vector<double>{model.rnn.out_b});
  write_model_container(path, c);
}

RnnPipelineModel load_rnn_model(const std::string& path) {
  const ModelContainer c = read_model_container(path);
  if (c.kind != kModelKindRnn) throw ParseError("not an rnn model: " + path);
  RnnPipelineModel model;
  model.config = rnn_config_from_json(json::parse(c.params_json));
  model.rnn = rnn_zero(model.config.rnn);
  for (std::size_t l = 0; l < model.rnn.layers.size(); ++l) {
    model.rnn.layers[l].fwd.w = c.blob(strfmt("l%zu_fwd_w", l));
    model.rnn.layers[l].fwd.b = c.blob(strfmt("l%zu_fwd_b", l));
    model.rnn.layers[l].bwd.w = c.blob(strfmt("l%zu_bwd_w", l));
    model.rnn.layers[l].bwd.b = c.blob(strfmt("l%zu_bwd_b", l));
  }
  model.rnn.out_w = c.blob("out_w");
  model.rnn.out_b = c.blob("out_b").at(0);
  return model;
}

std::string AnyModel::kind() const {
  if (fe) return "fe";
  if (cnn) return "cnn";
  if (rnn) return "rnn";
  return "none";
}

AnyModel load_any_model(const std::string& path) {
  AnyModel model;
  switch (model_container_kind(path)) {
    case kModelKindForest:
      model.fe = std::make_shared<FePipelineModel>(load_fe_model(path));
      break;
    case kModelKindCnn:
      model.cnn = std::make_shared<CnnPipelineModel>(load_cnn_model(path));
      break;
    case kModelKindRnn:
      model.rnn = std::make_shared<RnnPipelineModel>(load_rnn_model(path));
      break;
    default:
      throw ParseError("unknown model kind in " + path);
  }
  return model;
}

PredictionTrack predict_any(const AnyModel& model, const AudioClip& clip) {
  if (model.fe) return predict_fe(*model.fe, clip);
  if (model.cnn) return predict_cnn(*model.cnn, clip);
  if (model.rnn) return predict_rnn(*model.rnn, clip);
  throw ValueError("predict_any: empty model");
}

void write_prediction_csv(const std::string& path, const PredictionTrack& track) {
  std::string out = "time_s,probability,label\n";
  for (std::size_t i = 0; i < track.probabilities.size(); ++i) {
    out += strfmt("%.6f,%.6f,%d", (static_cast<double>(i) + 0.5) / track.frame_rate,
                  track.probabilities[i], track.labels.empty() ? 0 : track.labels[i]);
    out += "\n";
  }
  write_text_file(path, out);
}

PredictionTrack read_prediction_csv(const std::string& path) {
  const std::string text = read_text_file(path);
  PredictionTrack track;
  std::vector<double> times;
  int lineno = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || lineno == 1) continue;
    const auto parts = split(line, ',');
    if (parts.size() != 3) {
      throw ParseError(strfmt("%s:%d: expected time_s,probability,label", path.c_str(), lineno));
    }
    times.push_back(std::stod(parts[0]));
    track.probabilities.push_back(std::stod(parts[1]));
    track.labels.push_back(static_cast<std::uint8_t>(std::stoi(parts[2]) != 0));
  }
  if (times.size() < 2) throw ParseError("prediction csv needs at least two frames: " + path);
  track.frame_rate = 1.0 / (times[1] - times[0]);
  // Snap to an integer rate when rounding noise is all that is off.
  const double rounded = std::round(track.frame_rate);
  if (std::abs(track.frame_rate - rounded) < 1e-3) track.frame_rate = rounded;
  return track;
}

std::vector<StemPair> load_stem_pairs(const std::string& dir,
                                      const std::vector<CorpusTrack>& tracks,
                                      int target_rate) {
  std::vector<StemPair> stems(tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    stems[i].id = tracks[i].id;
    stems[i].vocal = load_clip_resampled(dir + "/" + tracks[i].vocal_wav, target_rate);
    stems[i].instrumental = load_clip_resampled(dir + "/" + tracks[i].accomp_wav, target_rate);
    stems[i].truth = parse_lab(dir + "/" + tracks[i].lab_file, {"sing", "vocal"});
  }
  return stems;
}

NamedPredictor make_named_predictor(const std::string& name, const AnyModel& model) {
  return {name, [model](const AudioClip& clip) {
            const PredictionTrack track = predict_any(model, clip);
            FrameLabels labels;
            labels.frame_rate = track.frame_rate;
            labels.labels = track.labels;
            return labels;
          }};
}

}  // namespace vdlab
