#include "vdlab/dsp.hpp"

#include <algorithm>
#include <cmath>

#include "vdlab/errors.hpp"
#include "vdlab/fft.hpp"
#include "vdlab/util.hpp"

namespace vdlab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

// Periodic Hann; sums to a constant under overlap-add at common hops.
std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(kTwoPi * i / n);
  }
  return w;
}

void check_stft_args(const AudioClip& clip, int fft_size, int hop) {
  if (!is_power_of_two(static_cast<std::size_t>(fft_size))) {
    throw ValueError("stft: fft_size must be a power of two");
  }
  if (hop <= 0 || hop > fft_size) {
    throw ValueError("stft: hop must be in (0, fft_size]");
  }
  if (clip.samples.size() < static_cast<std::size_t>(fft_size)) {
    throw ValueError(strfmt("stft: clip too short (%zu samples, need >= %d)",
                            clip.samples.size(), fft_size));
  }
  if (clip.sample_rate <= 0) throw ValueError("stft: clip has no sample rate");
}

}  // namespace

Spectrogram ComplexSpectrogram::magnitude() const {
  Spectrogram out;
  out.magnitudes = Matrix(re.rows(), re.cols());
  for (std::size_t t = 0; t < re.rows(); ++t) {
    for (std::size_t k = 0; k < re.cols(); ++k) {
      out.magnitudes(t, k) = std::hypot(re(t, k), im(t, k));
    }
  }
  out.frame_rate = frame_rate;
  out.bin_hz = bin_hz;
  return out;
}

ComplexSpectrogram stft_complex(const AudioClip& clip, int fft_size, int hop,
                                WindowKind window) {
  (void)window;  // only Hann
  check_stft_args(clip, fft_size, hop);
  const std::size_t n = clip.samples.size();
  const std::size_t n_frames = (n - fft_size) / hop + 1;
  const std::size_t n_bins = static_cast<std::size_t>(fft_size) / 2 + 1;
  const std::vector<double> win = hann_window(fft_size);

  ComplexSpectrogram out;
  out.re = Matrix(n_frames, n_bins);
  out.im = Matrix(n_frames, n_bins);
  out.frame_rate = static_cast<double>(clip.sample_rate) / hop;
  out.bin_hz = static_cast<double>(clip.sample_rate) / fft_size;
  out.fft_size = fft_size;
  out.hop = hop;
  out.n_samples = n;
  out.sample_rate = clip.sample_rate;

  std::vector<std::complex<double>> buf(fft_size);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const double* x = clip.samples.data() + t * hop;
    for (int i = 0; i < fft_size; ++i) buf[i] = std::complex<double>(x[i] * win[i], 0.0);
    fft_inplace(buf, false);
    for (std::size_t k = 0; k < n_bins; ++k) {
      out.re(t, k) = buf[k].real();
      out.im(t, k) = buf[k].imag();
    }
  }
  return out;
}

Spectrogram stft(const AudioClip& clip, int fft_size, int hop, WindowKind window) {
  return stft_complex(clip, fft_size, hop, window).magnitude();
}

AudioClip istft(const ComplexSpectrogram& spec) {
  if (spec.fft_size <= 0 || spec.hop <= 0 || spec.n_samples == 0) {
    throw ValueError("istft: spectrogram lacks resynthesis metadata");
  }
  const int fft_size = spec.fft_size;
  const std::size_t n_bins = spec.re.cols();
  const std::vector<double> win = hann_window(fft_size);

  AudioClip out;
  out.sample_rate = spec.sample_rate;
  out.samples.assign(spec.n_samples, 0.0);
  std::vector<double> wsum(spec.n_samples, 0.0);

  std::vector<std::complex<double>> buf(fft_size);
  for (std::size_t t = 0; t < spec.re.rows(); ++t) {
    // Rebuild the full conjugate-symmetric spectrum.
    for (std::size_t k = 0; k < n_bins; ++k) {
      buf[k] = std::complex<double>(spec.re(t, k), spec.im(t, k));
    }
    for (int k = 1; k < fft_size / 2; ++k) {
      buf[fft_size - k] = std::conj(buf[k]);
    }
    fft_inplace(buf, true);
    const std::size_t start = t * spec.hop;
    for (int i = 0; i < fft_size && start + i < spec.n_samples; ++i) {
      out.samples[start + i] += win[i] * buf[i].real();
      wsum[start + i] += win[i] * win[i];
    }
  }
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i] = wsum[i] > 1e-8 ? out.samples[i] / wsum[i] : 0.0;
  }
  return out;
}

double mel_from_hz(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double hz_from_mel(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(int n_mels, double fmin, double fmax, int fft_size,
                             int sample_rate) {
  if (n_mels <= 0) throw ValueError("mel_filterbank: n_mels must be positive");
  if (!(fmin >= 0.0) || !(fmin < fmax) || fmax > sample_rate / 2.0 + 1e-9) {
    throw ValueError("mel_filterbank: need 0 <= fmin < fmax <= sample_rate/2");
  }
  const std::size_t n_bins = static_cast<std::size_t>(fft_size) / 2 + 1;
  const double bin_hz = static_cast<double>(sample_rate) / fft_size;

  MelFilterbank bank;
  bank.edges_hz.resize(n_mels + 2);
  const double mel_lo = mel_from_hz(fmin);
  const double mel_hi = mel_from_hz(fmax);
  for (int i = 0; i < n_mels + 2; ++i) {
    bank.edges_hz[i] = hz_from_mel(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }

  bank.weights = Matrix(n_mels, n_bins);
  for (int m = 0; m < n_mels; ++m) {
    const double left = bank.edges_hz[m];
    const double center = bank.edges_hz[m + 1];
    const double right = bank.edges_hz[m + 2];
    double row_sum = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > left && f < center) {
        w = (f - left) / (center - left);
      } else if (f >= center && f < right) {
        w = (right - f) / (right - center);
      }
      bank.weights(m, k) = w;
      row_sum += w;
    }
    if (row_sum <= 0.0) {
      throw ValueError(strfmt(
          "mel_filterbank: band %d is empty; n_mels too large for fft_size %d", m, fft_size));
    }
  }
  return bank;
}

MelSpectrogram mel_spectrogram(const Spectrogram& spec, const MelFilterbank& bank,
                               double power_floor) {
  if (bank.weights.cols() != spec.n_bins()) {
    throw ValueError(strfmt("mel_spectrogram: filterbank has %zu bins, spectrogram %zu",
                            bank.weights.cols(), spec.n_bins()));
  }
  if (!(power_floor > 0.0)) throw ValueError("mel_spectrogram: floor must be positive");
  const std::size_t n_frames = spec.n_frames();
  const std::size_t n_bins = spec.n_bins();
  const std::size_t n_mels = bank.weights.rows();

  MelSpectrogram out;
  out.values = Matrix(n_frames, n_mels);
  out.frame_rate = spec.frame_rate;
  out.band_edges_hz = bank.edges_hz;

  std::vector<double> power(n_bins);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const double* mag = spec.magnitudes.row(t);
    for (std::size_t k = 0; k < n_bins; ++k) power[k] = mag[k] * mag[k];
    for (std::size_t m = 0; m < n_mels; ++m) {
      const double* w = bank.weights.row(m);
      double acc = 0.0;
      for (std::size_t k = 0; k < n_bins; ++k) acc += w[k] * power[k];
      out.values(t, m) = 10.0 * std::log10(std::max(acc, power_floor));
    }
  }
  return out;
}

Matrix mfcc(const MelSpectrogram& mel, int n_coeffs) {
  const std::size_t n_mels = mel.n_mels();
  if (n_coeffs <= 0 || static_cast<std::size_t>(n_coeffs) > n_mels) {
    throw ValueError("mfcc: need 0 < n_coeffs <= n_mels");
  }
  // Orthonormal DCT-II basis, n_coeffs x n_mels.
  Matrix basis(n_coeffs, n_mels);
  const double scale0 = std::sqrt(1.0 / n_mels);
  const double scale = std::sqrt(2.0 / n_mels);
  for (int k = 0; k < n_coeffs; ++k) {
    for (std::size_t n = 0; n < n_mels; ++n) {
      basis(k, n) = (k == 0 ? scale0 : scale) *
                    std::cos(kPi * (static_cast<double>(n) + 0.5) * k / n_mels);
    }
  }
  Matrix out(mel.n_frames(), n_coeffs);
  for (std::size_t t = 0; t < mel.n_frames(); ++t) {
    const double* frame = mel.values.row(t);
    for (int k = 0; k < n_coeffs; ++k) {
      const double* b = basis.row(k);
      double acc = 0.0;
      for (std::size_t n = 0; n < n_mels; ++n) acc += b[n] * frame[n];
      out(t, k) = acc;
    }
  }
  return out;
}

Matrix delta(const Matrix& rows, int span) {
  if (span < 3 || span % 2 == 0) throw ValueError("delta: span must be odd and >= 3");
  if (static_cast<std::size_t>(span) > rows.rows()) {
    throw ValueError(strfmt("delta: span %d exceeds track length %zu", span, rows.rows()));
  }
  const int h = span / 2;
  double denom = 0.0;
  for (int j = 1; j <= h; ++j) denom += 2.0 * j * j;

  const long n = static_cast<long>(rows.rows());
  Matrix out(rows.rows(), rows.cols());
  for (long t = 0; t < n; ++t) {
    for (std::size_t c = 0; c < rows.cols(); ++c) {
      double acc = 0.0;
      for (int j = -h; j <= h; ++j) {
        const long idx = std::clamp(t + j, 0L, n - 1);  // edge replication
        acc += j * rows(static_cast<std::size_t>(idx), c);
      }
      out(static_cast<std::size_t>(t), c) = acc / denom;
    }
  }
  return out;
}

std::vector<double> median_filter_1d(const std::vector<double>& values, int window) {
  if (window < 1 || window % 2 == 0) {
    throw ValueError("median_filter_1d: window must be odd and >= 1");
  }
  if (window == 1 || values.empty()) return values;
  const int h = window / 2;
  const long n = static_cast<long>(values.size());
  std::vector<double> out(values.size());
  std::vector<double> buf(window);
  for (long i = 0; i < n; ++i) {
    for (int j = -h; j <= h; ++j) {
      buf[j + h] = values[static_cast<std::size_t>(std::clamp(i + j, 0L, n - 1))];
    }
    std::nth_element(buf.begin(), buf.begin() + h, buf.end());
    out[static_cast<std::size_t>(i)] = buf[h];
  }
  return out;
}

Matrix median_filter_2d(const Matrix& grid, int time_window, int freq_window) {
  if (time_window < 1 || time_window % 2 == 0 || freq_window < 1 || freq_window % 2 == 0) {
    throw ValueError("median_filter_2d: windows must be odd and >= 1");
  }
  const long rows = static_cast<long>(grid.rows());
  const long cols = static_cast<long>(grid.cols());
  const int ht = time_window / 2;
  const int hf = freq_window / 2;
  Matrix out(grid.rows(), grid.cols());
  std::vector<double> buf(static_cast<std::size_t>(time_window) * freq_window);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      std::size_t idx = 0;
      for (int dt = -ht; dt <= ht; ++dt) {
        const long rr = std::clamp(r + dt, 0L, rows - 1);
        for (int df = -hf; df <= hf; ++df) {
          const long cc = std::clamp(c + df, 0L, cols - 1);
          buf[idx++] = grid(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
        }
      }
      auto mid = buf.begin() + static_cast<long>(buf.size() / 2);
      std::nth_element(buf.begin(), mid, buf.end());
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = *mid;
    }
  }
  return out;
}

BiquadCoeffs biquad_design(BiquadKind kind, double center_or_cutoff_hz,
                           double bandwidth_or_q, int sample_rate) {
  if (sample_rate <= 0) throw ValueError("biquad_design: bad sample rate");
  if (!(center_or_cutoff_hz > 0.0) || center_or_cutoff_hz >= sample_rate / 2.0) {
    throw ValueError(strfmt("biquad_design: frequency %g out of (0, %g)",
                            center_or_cutoff_hz, sample_rate / 2.0));
  }
  if (!(bandwidth_or_q > 0.0)) throw ValueError("biquad_design: bandwidth/Q must be positive");

  const double w0 = kTwoPi * center_or_cutoff_hz / sample_rate;
  const double cw = std::cos(w0);
  const double sw = std::sin(w0);

  BiquadCoeffs c;
  if (kind == BiquadKind::kBandpassResonator) {
    const double q = center_or_cutoff_hz / bandwidth_or_q;
    const double alpha = sw / (2.0 * q);
    const double a0 = 1.0 + alpha;
    c.b0 = alpha / a0;
    c.b1 = 0.0;
    c.b2 = -alpha / a0;
    c.a1 = -2.0 * cw / a0;
    c.a2 = (1.0 - alpha) / a0;
  } else {
    const double q = bandwidth_or_q;
    const double alpha = sw / (2.0 * q);
    const double a0 = 1.0 + alpha;
    c.b0 = (1.0 - cw) / 2.0 / a0;
    c.b1 = (1.0 - cw) / a0;
    c.b2 = (1.0 - cw) / 2.0 / a0;
    c.a1 = -2.0 * cw / a0;
    c.a2 = (1.0 - alpha) / a0;
  }
  if (!biquad_is_stable(c)) {
    throw ValueError("biquad_design: unstable design parameters");
  }
  return c;
}

bool biquad_is_stable(const BiquadCoeffs& c) {
  // Jury criterion for z^2 + a1 z + a2.
  return std::abs(c.a2) < 1.0 && std::abs(c.a1) < 1.0 + c.a2;
}

std::vector<double> biquad_apply(const BiquadCoeffs& c, const std::vector<double>& x) {
  // Transposed direct form II.
  std::vector<double> y(x.size());
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double out = c.b0 * x[i] + s1;
    s1 = c.b1 * x[i] - c.a1 * out + s2;
    s2 = c.b2 * x[i] - c.a2 * out;
    y[i] = out;
  }
  return y;
}

}  // namespace vdlab
