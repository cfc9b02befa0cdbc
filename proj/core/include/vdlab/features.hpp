#pragma once

#include <string>
#include <vector>

#include "vdlab/dsp.hpp"

namespace vdlab {

// Magnitudes resampled onto a geometric frequency axis; one semitone is
// bins_per_semitone columns, so a pitch shift is a column shift.
struct LogGrid {
  Matrix values;  // n_frames x n_log_bins
  double frame_rate = 0.0;
  int bins_per_semitone = 0;
  double fmin_hz = 0.0;
};

LogGrid log_resample(const Spectrogram& spec, int bins_per_semitone, double fmin,
                     double fmax);

// Overlapping bands over the log-frequency axis, ordered by low edge.
struct BandLayout {
  struct Band {
    int lo = 0;  // inclusive
    int hi = 0;  // exclusive
  };
  std::vector<Band> bands;
};

// n_bands bands of equal width covering [0, n_cols) exactly, consecutive
// bands overlapping by `overlap` of their width.
BandLayout make_band_layout(int n_cols, int n_bands, double overlap);

// Per band: the lag in [-max_lag, +max_lag] maximizing the zero-mean
// normalized cross-correlation between the current and previous frame.
// Ties break toward smaller |lag|, negative first; frame 0 is 0.
Matrix fluctogram(const LogGrid& grid, const BandLayout& layout, int max_lag);

// Geometric mean over arithmetic mean of band magnitudes (epsilon added).
Matrix spectral_flatness(const LogGrid& grid, const BandLayout& layout);

// Energy of the center half of the band over the band's total energy.
Matrix spectral_contraction(const LogGrid& grid, const BandLayout& layout);

// Variance of MFCC coefficients 1..5 over a centered window, edges
// replicated; one output column per coefficient.
Matrix vocal_variance(const Matrix& mfcc_rows, int window);

struct ColumnSlice {
  std::string name;
  std::size_t start = 0;
  std::size_t count = 0;
};

struct FeatureMatrix {
  Matrix rows;  // n_frames x 116
  double frame_rate = 0.0;
  std::vector<ColumnSlice> layout;
};

struct FeatureConfig {
  int sample_rate = 22050;
  int fft_size = 1024;
  int hop = 315;
  int bins_per_semitone = 10;
  double log_fmin = 164.0;
  double log_fmax = 10548.0;
  int n_bands = 17;
  double band_overlap = 0.5;
  int max_lag = 5;
  int n_mels = 40;
  double mel_fmin = 0.0;
  double mel_fmax = 11025.0;
  int n_mfcc = 30;
  int delta_span = 9;
  int vocal_variance_window = 11;
  double power_floor = 1e-10;
};

// The full per-frame stack: fluctogram 17, flatness 17, contraction 17,
// vocal variance 5, MFCC 30, delta MFCC 30 = 116 columns.
FeatureMatrix assemble_features(const AudioClip& clip, const FeatureConfig& config);

// Per-column standardization fitted on training rows.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stdev;

  void fit(const Matrix& rows);
  void apply(Matrix& rows) const;
  bool fitted() const { return !mean.empty(); }
};

enum class ContextMode { kNone, kDelta, kStack };

// Temporal context for the classifier input. kDelta appends per-column
// least-squares slopes over +/- radius frames (2x columns); kStack appends
// the rows at t - radius and t + radius (3x columns).
Matrix add_context(const Matrix& rows, ContextMode mode, int radius);

ContextMode context_mode_from_string(const std::string& name);
std::string to_string(ContextMode mode);

}  // namespace vdlab
