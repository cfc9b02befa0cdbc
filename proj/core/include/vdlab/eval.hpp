#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vdlab/audio_io.hpp"
#include "vdlab/matrix.hpp"
#include "vdlab/stressgen.hpp"

namespace vdlab {

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& other) {
    tp += other.tp;
    fp += other.fp;
    tn += other.tn;
    fn += other.fn;
    return *this;
  }
};

// Frame-wise comparison; lengths and rates must already agree.
ConfusionCounts confusion(const FrameLabels& pred, const FrameLabels& truth);

// All values are percentages. A ratio with a zero denominator is absent
// rather than zero.
struct MetricsReport {
  std::optional<double> accuracy, recall, precision, f_measure, fpr, fnr;
};

MetricsReport metrics(const ConfusionCounts& counts);

// Fixed emission order: Acc, Recall, Precision, F-measure, FPR, FNR.
std::vector<std::pair<std::string, std::optional<double>>> metrics_rows(
    const MetricsReport& report);

struct SongEval {
  std::string song;
  ConfusionCounts counts;
  MetricsReport report;
};

struct PerSongReport {
  std::vector<SongEval> songs;  // sorted by accuracy, lowest first
  ConfusionCounts pooled;
  MetricsReport micro;  // metrics of the pooled counts
  MetricsReport macro;  // unweighted mean over songs
};

PerSongReport per_song_report(
    const std::vector<std::tuple<std::string, FrameLabels, FrameLabels>>& tracks);

void write_per_song_csv(const std::string& path, const PerSongReport& report);
void write_metrics_json(const std::string& path, const PerSongReport& report,
                        const std::string& system_name);

// One 7x8 accuracy grid per formant condition; rows are rates ascending,
// columns deviations ascending.
struct HeatmapGrid {
  std::vector<std::string> formants;
  std::vector<double> rates;
  std::vector<double> deviations;
  std::vector<Matrix> cells;  // one matrix per formant

  double region_mean(double rate_lo, double rate_hi, double dev_lo, double dev_hi) const;
};

// Per-clip accuracy is the fraction of frames predicted nonvocal (the grid
// clips carry no voice). Missing predictions are reported by filename.
HeatmapGrid vibrato_heatmap(const std::vector<VibratoGridEntry>& manifest,
                            const std::map<std::string, FrameLabels>& predictions);

void write_heatmap_csv(const HeatmapGrid& grid, const std::string& dir,
                       const std::string& prefix);
// Plain (ASCII) portable graymap, 1.0 -> white, rate increasing upward.
void write_heatmap_pgm(const HeatmapGrid& grid, const std::string& dir,
                       const std::string& prefix, int cell_px = 24);

struct StemPair {
  std::string id;
  AudioClip vocal;
  AudioClip instrumental;
  LabelTrack truth;
};

// A detector under test: consumes a mixed clip, produces frame labels.
struct NamedPredictor {
  std::string name;
  std::function<FrameLabels(const AudioClip&)> predict;
};

struct SnrSweepRow {
  std::string model;
  double snr_db = 0.0;
  ConfusionCounts counts;
  std::optional<double> fpr, fnr;
  double error_rate = 0.0;  // (fp + fn) / total, percent
};

// Remixes every stem pair at every SNR level, runs every predictor and
// pools counts per (model, level).
std::vector<SnrSweepRow> snr_sweep(const std::vector<StemPair>& stems,
                                   const std::vector<NamedPredictor>& predictors,
                                   const std::vector<double>& snr_levels_db,
                                   double excerpt_seconds = 30.0, int jobs = 1);

void write_snr_sweep_csv(const std::string& path, const std::vector<SnrSweepRow>& rows);
void write_snr_sweep_json(const std::string& path, const std::vector<SnrSweepRow>& rows);

}  // namespace vdlab
