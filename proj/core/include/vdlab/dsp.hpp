#pragma once

#include <vector>

#include "vdlab/audio_io.hpp"
#include "vdlab/matrix.hpp"

namespace vdlab {

// Magnitude spectrogram, frames as rows.
struct Spectrogram {
  Matrix magnitudes;  // n_frames x n_bins
  double frame_rate = 0.0;
  double bin_hz = 0.0;

  std::size_t n_frames() const { return magnitudes.rows(); }
  std::size_t n_bins() const { return magnitudes.cols(); }
};

// Complex STFT kept around when a transform has to be undone again
// (HPSS inter-stage resynthesis keeps the input phase).
struct ComplexSpectrogram {
  Matrix re, im;  // n_frames x n_bins
  double frame_rate = 0.0;
  double bin_hz = 0.0;
  int fft_size = 0;
  int hop = 0;
  std::size_t n_samples = 0;
  int sample_rate = 0;

  Spectrogram magnitude() const;
};

struct MelSpectrogram {
  Matrix values;  // n_frames x n_mels, 10*log10 power
  double frame_rate = 0.0;
  std::vector<double> band_edges_hz;  // n_mels + 2 edges

  std::size_t n_frames() const { return values.rows(); }
  std::size_t n_mels() const { return values.cols(); }
};

struct MelFilterbank {
  Matrix weights;  // n_mels x n_bins
  std::vector<double> edges_hz;
};

enum class WindowKind { kHann };

// Frame t covers samples [t*hop, t*hop + fft_size); no padding, so
// n_frames = floor((n - fft_size) / hop) + 1.
Spectrogram stft(const AudioClip& clip, int fft_size, int hop,
                 WindowKind window = WindowKind::kHann);

ComplexSpectrogram stft_complex(const AudioClip& clip, int fft_size, int hop,
                                WindowKind window = WindowKind::kHann);

// Weighted overlap-add resynthesis with the analysis window.
AudioClip istft(const ComplexSpectrogram& spec);

double mel_from_hz(double hz);
double hz_from_mel(double mel);

// Triangular filters with centers equally spaced on the mel scale. Throws
// if any filter row would be all zero (n_mels too large for the FFT size).
MelFilterbank mel_filterbank(int n_mels, double fmin, double fmax, int fft_size,
                             int sample_rate);

// values = 10*log10(max(bank * magnitude^2, floor)).
MelSpectrogram mel_spectrogram(const Spectrogram& spec, const MelFilterbank& bank,
                               double power_floor = 1e-10);

// Orthonormal DCT-II of each mel frame; coefficients 0..n_coeffs-1.
Matrix mfcc(const MelSpectrogram& mel, int n_coeffs);

// Per-column least-squares slope over a centered window of `span` frames
// (odd, >= 3), edges replicated.
Matrix delta(const Matrix& rows, int span);

std::vector<double> median_filter_1d(const std::vector<double>& values, int window);

// Median over an axis-aligned time_window x freq_window neighborhood,
// edges replicated. Rows are time, columns frequency.
Matrix median_filter_2d(const Matrix& grid, int time_window, int freq_window);

struct BiquadCoeffs {
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;  // a0 normalized to 1
};

enum class BiquadKind { kBandpassResonator, kLowpass };

// Bandpass resonator: unit gain at the center frequency, `bandwidth_or_q`
// is the -3 dB bandwidth in Hz. Lowpass: `bandwidth_or_q` is Q.
BiquadCoeffs biquad_design(BiquadKind kind, double center_or_cutoff_hz,
                           double bandwidth_or_q, int sample_rate);

// True iff both poles are strictly inside the unit circle.
bool biquad_is_stable(const BiquadCoeffs& c);

std::vector<double> biquad_apply(const BiquadCoeffs& c, const std::vector<double>& x);

}  // namespace vdlab
