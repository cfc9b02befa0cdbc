#include "common/pitch_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "vdlab/errors.hpp"
#include "vdlab/fft.hpp"

namespace vdlab::testing {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

double interp_magnitude(const std::vector<double>& mag, double bin) {
  if (bin <= 0.0 || bin >= static_cast<double>(mag.size() - 1)) return 0.0;
  const std::size_t lo = static_cast<std::size_t>(bin);
  const double frac = bin - static_cast<double>(lo);
  return mag[lo] * (1.0 - frac) + mag[lo + 1] * frac;
}

struct SinusoidFit {
  double a = 0.0, b = 0.0, c = 0.0;
  double residual = 0.0;

  double amplitude() const { return std::hypot(a, b); }
};

SinusoidFit fit_sinusoid(const std::vector<double>& t, const std::vector<double>& s,
                         double rate) {
  // Least squares for a*sin(2*pi*r*t) + b*cos(2*pi*r*t) + c.
  double m[3][3] = {{0}};
  double v[3] = {0};
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double basis[3] = {std::sin(kTwoPi * rate * t[i]), std::cos(kTwoPi * rate * t[i]),
                             1.0};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r][c] += basis[r] * basis[c];
      v[r] += basis[r] * s[i];
    }
  }
  // Cramer's rule on the 3x3 normal equations.
  auto det3 = [](const double a[3][3]) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
           a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  const double d = det3(m);
  SinusoidFit fit;
  if (std::abs(d) < 1e-12) return fit;
  double mm[3][3];
  double sol[3];
  for (int col = 0; col < 3; ++col) {
    std::copy(&m[0][0], &m[0][0] + 9, &mm[0][0]);
    for (int r = 0; r < 3; ++r) mm[r][col] = v[r];
    sol[col] = det3(mm) / d;
  }
  fit.a = sol[0];
  fit.b = sol[1];
  fit.c = sol[2];
  double residual = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double model = fit.a * std::sin(kTwoPi * rate * t[i]) +
                         fit.b * std::cos(kTwoPi * rate * t[i]) + fit.c;
    residual += (s[i] - model) * (s[i] - model);
  }
  fit.residual = std::sqrt(residual / static_cast<double>(t.size()));
  return fit;
}

// Frame-wise log-f0 track via a harmonic-sum peak on a cents grid.
void track_f0(const AudioClip& clip, double f0, double max_dev_st, double window_s,
              std::vector<double>& times, std::vector<double>& semitones) {
  times.clear();
  semitones.clear();
  const int sr = clip.sample_rate;
  const std::size_t win = std::max<std::size_t>(64, static_cast<std::size_t>(window_s * sr));
  const std::size_t hop = static_cast<std::size_t>(0.005 * sr);
  const std::size_t skip = static_cast<std::size_t>(0.15 * sr);
  if (clip.samples.size() < 2 * skip + win) {
    throw ValueError("pitch oracle: clip too short");
  }
  const std::size_t nfft = next_pow2(4 * win);
  const double bin_hz = static_cast<double>(sr) / static_cast<double>(nfft);
  const double nyquist = sr / 2.0;

  const double band_cents = (max_dev_st + 0.5) * 100.0;
  const double step_cents = 2.0;
  const int n_cand = static_cast<int>(2.0 * band_cents / step_cents) + 1;

  const double f_top = f0 * std::pow(2.0, (max_dev_st + 0.5) / 12.0);
  const int n_harm = std::max(2, std::min(6, static_cast<int>(0.9 * nyquist / f_top)));

  std::vector<std::complex<double>> buf;
  std::vector<double> mag(nfft / 2 + 1);
  std::vector<double> score(static_cast<std::size_t>(n_cand));

  for (std::size_t start = skip; start + win + skip <= clip.samples.size(); start += hop) {
    buf.assign(nfft, {0.0, 0.0});
    for (std::size_t i = 0; i < win; ++i) {
      const double w = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) /
                                            static_cast<double>(win));
      buf[i] = {clip.samples[start + i] * w, 0.0};
    }
    fft_inplace(buf, false);
    for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(buf[k]);

    for (int ci = 0; ci < n_cand; ++ci) {
      const double cents = -band_cents + ci * step_cents;
      const double f = f0 * std::pow(2.0, cents / 1200.0);
      double s = 0.0;
      for (int k = 1; k <= n_harm; ++k) {
        s += interp_magnitude(mag, k * f / bin_hz) / k;
      }
      score[static_cast<std::size_t>(ci)] = s;
    }
    int best = 0;
    for (int ci = 1; ci < n_cand; ++ci) {
      if (score[static_cast<std::size_t>(ci)] > score[static_cast<std::size_t>(best)]) best = ci;
    }
    double delta = 0.0;
    if (best > 0 && best + 1 < n_cand) {
      const double sm = score[static_cast<std::size_t>(best - 1)];
      const double s0 = score[static_cast<std::size_t>(best)];
      const double sp = score[static_cast<std::size_t>(best + 1)];
      const double denom = sm - 2.0 * s0 + sp;
      if (std::abs(denom) > 1e-12) delta = 0.5 * (sm - sp) / denom;
      delta = std::clamp(delta, -1.0, 1.0);
    }
    const double cents = -band_cents + (best + delta) * step_cents;
    times.push_back((static_cast<double>(start) + win / 2.0) / sr);
    semitones.push_back(cents / 100.0);
  }
}

double estimate_rate(const std::vector<double>& times, const std::vector<double>& track) {
  // DFT peak of the detrended, Hann-weighted track.
  const std::size_t n = track.size();
  double mean = 0.0;
  for (double v : track) mean += v;
  mean /= static_cast<double>(n);

  const std::size_t nfft = next_pow2(8 * n);
  std::vector<std::complex<double>> buf(nfft, {0.0, 0.0});
  for (std::size_t i = 0; i < n; ++i) {
    const double w =
        0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n));
    buf[i] = {(track[i] - mean) * w, 0.0};
  }
  fft_inplace(buf, false);

  const double fs_track = 1.0 / (times[1] - times[0]);
  const double bin_hz = fs_track / static_cast<double>(nfft);
  const std::size_t lo = static_cast<std::size_t>(0.2 / bin_hz);
  const std::size_t hi = std::min(nfft / 2, static_cast<std::size_t>(15.0 / bin_hz));
  std::size_t best = lo;
  for (std::size_t k = lo; k <= hi; ++k) {
    if (std::abs(buf[k]) > std::abs(buf[best])) best = k;
  }
  double delta = 0.0;
  if (best > 0 && best + 1 < nfft / 2) {
    const double sm = std::abs(buf[best - 1]);
    const double s0 = std::abs(buf[best]);
    const double sp = std::abs(buf[best + 1]);
    const double denom = sm - 2.0 * s0 + sp;
    if (std::abs(denom) > 1e-12) delta = std::clamp(0.5 * (sm - sp) / denom, -1.0, 1.0);
  }
  return (static_cast<double>(best) + delta) * bin_hz;
}

}  // namespace

VibratoRecovery recover_vibrato(const AudioClip& clip, double f0, double max_dev_st) {
  std::vector<double> times, track;

  // First pass with a generic window to get the rate ballpark, second pass
  // with a window short enough not to average the modulation away.
  track_f0(clip, f0, max_dev_st, 0.04, times, track);
  double rate = estimate_rate(times, track);
  const double wanted_window = std::clamp(1.0 / (6.0 * std::max(rate, 0.5)), 0.012, 0.04);
  if (wanted_window < 0.039) {
    track_f0(clip, f0, max_dev_st, wanted_window, times, track);
    rate = estimate_rate(times, track);
  }

  // Refine the rate by minimizing the sinusoid-fit residual.
  double lo = rate * 0.85;
  double hi = rate * 1.15;
  for (int iter = 0; iter < 60; ++iter) {
    const double r1 = lo + (hi - lo) / 3.0;
    const double r2 = hi - (hi - lo) / 3.0;
    if (fit_sinusoid(times, track, r1).residual < fit_sinusoid(times, track, r2).residual) {
      hi = r2;
    } else {
      lo = r1;
    }
  }
  const double refined = 0.5 * (lo + hi);
  const SinusoidFit fit = fit_sinusoid(times, track, refined);

  VibratoRecovery out;
  out.rate_hz = refined;
  out.peak_dev_st = fit.amplitude();
  out.track_rms_st = fit.residual;
  return out;
}

}  // namespace vdlab::testing
