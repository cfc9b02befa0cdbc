#include "vdlab/features.hpp"

#include <algorithm>
#include <cmath>

#include "vdlab/errors.hpp"
#include "vdlab/util.hpp"

namespace vdlab {

namespace {

constexpr double kEps = 1e-12;

}  // namespace

LogGrid log_resample(const Spectrogram& spec, int bins_per_semitone, double fmin,
                     double fmax) {
  if (bins_per_semitone <= 0) throw ValueError("log_resample: bins_per_semitone must be > 0");
  const double nyquist = spec.bin_hz * static_cast<double>(spec.n_bins() - 1);
  if (!(fmin > 0.0) || !(fmin < fmax) || fmax > nyquist + 1e-6) {
    throw ValueError(strfmt("log_resample: need 0 < fmin < fmax <= %g", nyquist));
  }
  const double semitones = 12.0 * std::log2(fmax / fmin);
  const int n_cols = static_cast<int>(std::floor(semitones * bins_per_semitone)) + 1;
  if (n_cols < 2) throw ValueError("log_resample: target axis is empty");

  LogGrid out;
  out.values = Matrix(spec.n_frames(), static_cast<std::size_t>(n_cols));
  out.frame_rate = spec.frame_rate;
  out.bins_per_semitone = bins_per_semitone;
  out.fmin_hz = fmin;

  // Linear interpolation of each frame onto the geometric axis.
  std::vector<std::size_t> idx(n_cols);
  std::vector<double> frac(n_cols);
  for (int j = 0; j < n_cols; ++j) {
    const double f = fmin * std::pow(2.0, static_cast<double>(j) / (12.0 * bins_per_semitone));
    const double pos = f / spec.bin_hz;
    const auto lo = static_cast<std::size_t>(std::min(
        static_cast<double>(spec.n_bins() - 2), std::floor(pos)));
    idx[j] = lo;
    frac[j] = std::clamp(pos - static_cast<double>(lo), 0.0, 1.0);
  }
  for (std::size_t t = 0; t < spec.n_frames(); ++t) {
    const double* mag = spec.magnitudes.row(t);
    double* dst = out.values.row(t);
    for (int j = 0; j < n_cols; ++j) {
      dst[j] = mag[idx[j]] * (1.0 - frac[j]) + mag[idx[j] + 1] * frac[j];
    }
  }
  return out;
}

BandLayout make_band_layout(int n_cols, int n_bands, double overlap) {
  if (n_bands <= 0) throw ValueError("make_band_layout: n_bands must be positive");
  if (!(overlap >= 0.0) || !(overlap < 1.0)) {
    throw ValueError("make_band_layout: overlap must be in [0, 1)");
  }
  // width + (n_bands - 1) * stride = n_cols with stride = width * (1 - overlap).
  const double width = static_cast<double>(n_cols) /
                       (1.0 + (n_bands - 1) * (1.0 - overlap));
  BandLayout layout;
  layout.bands.resize(n_bands);
  for (int b = 0; b < n_bands; ++b) {
    const double lo = b * width * (1.0 - overlap);
    int ilo = static_cast<int>(std::floor(lo));
    int ihi = b + 1 == n_bands ? n_cols : static_cast<int>(std::floor(lo + width));
    ilo = std::clamp(ilo, 0, n_cols - 1);
    ihi = std::clamp(ihi, ilo + 1, n_cols);
    layout.bands[b] = {ilo, ihi};
  }
  return layout;
}

namespace {

void check_layout(const LogGrid& grid, const BandLayout& layout) {
  for (const auto& band : layout.bands) {
    if (band.lo < 0 || band.hi > static_cast<int>(grid.values.cols()) || band.lo >= band.hi) {
      throw ValueError("band layout does not fit the log grid");
    }
  }
}

// Pearson correlation between prev[i] and cur[i + lag] over the overlap.
double lag_correlation(const double* prev, const double* cur, int width, int lag) {
  const int lo = std::max(0, -lag);
  const int hi = std::min(width, width - lag);
  const int n = hi - lo;
  if (n < 2) return 0.0;
  double mean_p = 0.0, mean_c = 0.0;
  for (int i = lo; i < hi; ++i) {
    mean_p += prev[i];
    mean_c += cur[i + lag];
  }
  mean_p /= n;
  mean_c /= n;
  double cov = 0.0, var_p = 0.0, var_c = 0.0;
  for (int i = lo; i < hi; ++i) {
    const double dp = prev[i] - mean_p;
    const double dc = cur[i + lag] - mean_c;
    cov += dp * dc;
    var_p += dp * dp;
    var_c += dc * dc;
  }
  if (var_p < kEps || var_c < kEps) return 0.0;
  return cov / std::sqrt(var_p * var_c);
}

}  // namespace

Matrix fluctogram(const LogGrid& grid, const BandLayout& layout, int max_lag) {
  if (max_lag < 1) throw ValueError("fluctogram: max_lag must be >= 1");
  check_layout(grid, layout);
  const std::size_t n_frames = grid.values.rows();
  const std::size_t n_bands = layout.bands.size();

  // Tie-break order: smaller |lag| first, then negative.
  std::vector<int> lag_order;
  lag_order.push_back(0);
  for (int l = 1; l <= max_lag; ++l) {
    lag_order.push_back(-l);
    lag_order.push_back(+l);
  }

  Matrix out(n_frames, n_bands);
  for (std::size_t t = 1; t < n_frames; ++t) {
    const double* prev = grid.values.row(t - 1);
    const double* cur = grid.values.row(t);
    for (std::size_t b = 0; b < n_bands; ++b) {
      const auto& band = layout.bands[b];
      const int width = band.hi - band.lo;
      double best = -2.0;
      int best_lag = 0;
      for (int lag : lag_order) {
        const double corr = lag_correlation(prev + band.lo, cur + band.lo, width, lag);
        if (corr > best) {
          best = corr;
          best_lag = lag;
        }
      }
      out(t, b) = static_cast<double>(best_lag);
    }
  }
  return out;
}

Matrix spectral_flatness(const LogGrid& grid, const BandLayout& layout) {
  check_layout(grid, layout);
  Matrix out(grid.values.rows(), layout.bands.size());
  for (std::size_t t = 0; t < grid.values.rows(); ++t) {
    const double* row = grid.values.row(t);
    for (std::size_t b = 0; b < layout.bands.size(); ++b) {
      const auto& band = layout.bands[b];
      const int n = band.hi - band.lo;
      double log_sum = 0.0, sum = 0.0;
      for (int i = band.lo; i < band.hi; ++i) {
        const double v = row[i] + kEps;
        log_sum += std::log(v);
        sum += v;
      }
      out(t, b) = std::exp(log_sum / n) / (sum / n);
    }
  }
  return out;
}

Matrix spectral_contraction(const LogGrid& grid, const BandLayout& layout) {
  check_layout(grid, layout);
  Matrix out(grid.values.rows(), layout.bands.size());
  for (std::size_t t = 0; t < grid.values.rows(); ++t) {
    const double* row = grid.values.row(t);
    for (std::size_t b = 0; b < layout.bands.size(); ++b) {
      const auto& band = layout.bands[b];
      const int n = band.hi - band.lo;
      const int c_lo = band.lo + n / 4;
      const int c_hi = band.lo + n / 4 + n / 2;
      double total = 0.0, center = 0.0;
      for (int i = band.lo; i < band.hi; ++i) {
        const double e = row[i] * row[i];
        total += e;
        if (i >= c_lo && i < c_hi) center += e;
      }
      // Silence degenerates to the uniform value 0.5.
      out(t, b) = (center + kEps / 2.0) / (total + kEps);
    }
  }
  return out;
}

Matrix vocal_variance(const Matrix& mfcc_rows, int window) {
  if (window < 1 || window % 2 == 0) {
    throw ValueError("vocal_variance: window must be odd and >= 1");
  }
  if (static_cast<std::size_t>(window) > mfcc_rows.rows()) {
    throw ValueError("vocal_variance: window exceeds track length");
  }
  if (mfcc_rows.cols() < 6) {
    throw ValueError("vocal_variance: need MFCC coefficients 1..5");
  }
  const long n = static_cast<long>(mfcc_rows.rows());
  const int h = window / 2;
  Matrix out(mfcc_rows.rows(), 5);
  for (long t = 0; t < n; ++t) {
    for (int c = 0; c < 5; ++c) {
      const std::size_t col = static_cast<std::size_t>(c + 1);
      double sum = 0.0, sq = 0.0;
      for (int j = -h; j <= h; ++j) {
        const long idx = std::clamp(t + j, 0L, n - 1);
        const double v = mfcc_rows(static_cast<std::size_t>(idx), col);
        sum += v;
        sq += v * v;
      }
      const double mean = sum / window;
      out(static_cast<std::size_t>(t), static_cast<std::size_t>(c)) =
          std::max(0.0, sq / window - mean * mean);
    }
  }
  return out;
}

FeatureMatrix assemble_features(const AudioClip& clip, const FeatureConfig& config) {
  if (clip.duration_s() < 2.0) {
    throw ValueError(strfmt("assemble_features: clip too short (%.2f s, need >= 2 s)",
                            clip.duration_s()));
  }
  if (clip.sample_rate != config.sample_rate) {
    throw ValueError(strfmt("assemble_features: clip rate %d != configured %d",
                            clip.sample_rate, config.sample_rate));
  }

  const Spectrogram spec = stft(clip, config.fft_size, config.hop);
  const LogGrid grid =
      log_resample(spec, config.bins_per_semitone, config.log_fmin, config.log_fmax);
  const BandLayout layout = make_band_layout(static_cast<int>(grid.values.cols()),
                                             config.n_bands, config.band_overlap);

  const Matrix fluct = fluctogram(grid, layout, config.max_lag);
  const Matrix flat = spectral_flatness(grid, layout);
  const Matrix contr = spectral_contraction(grid, layout);

  const MelFilterbank bank = mel_filterbank(config.n_mels, config.mel_fmin, config.mel_fmax,
                                            config.fft_size, config.sample_rate);
  const MelSpectrogram mel = mel_spectrogram(spec, bank, config.power_floor);
  const Matrix coeffs = mfcc(mel, config.n_mfcc);
  const Matrix coeff_deltas = delta(coeffs, config.delta_span);
  const Matrix vv = vocal_variance(coeffs, config.vocal_variance_window);

  const std::size_t n_frames = spec.n_frames();
  const std::size_t n_bands = layout.bands.size();
  const std::size_t total = 3 * n_bands + 5 + 2 * static_cast<std::size_t>(config.n_mfcc);

  FeatureMatrix out;
  out.rows = Matrix(n_frames, total);
  out.frame_rate = spec.frame_rate;

  std::size_t offset = 0;
  auto append = [&](const std::string& name, const Matrix& block) {
    out.layout.push_back({name, offset, block.cols()});
    for (std::size_t t = 0; t < n_frames; ++t) {
      const double* src = block.row(t);
      double* dst = out.rows.row(t) + offset;
      std::copy(src, src + block.cols(), dst);
    }
    offset += block.cols();
  };
  append("fluctogram", fluct);
  append("flatness", flat);
  append("contraction", contr);
  append("vocal_variance", vv);
  append("mfcc", coeffs);
  append("delta_mfcc", coeff_deltas);

  for (double v : out.rows.data()) {
    if (!std::isfinite(v)) throw Error("assemble_features: non-finite feature value");
  }
  return out;
}

void Standardizer::fit(const Matrix& rows) {
  if (rows.rows() == 0) throw ValueError("Standardizer: empty matrix");
  mean.assign(rows.cols(), 0.0);
  stdev.assign(rows.cols(), 0.0);
  for (std::size_t t = 0; t < rows.rows(); ++t) {
    const double* r = rows.row(t);
    for (std::size_t c = 0; c < rows.cols(); ++c) mean[c] += r[c];
  }
  for (double& m : mean) m /= static_cast<double>(rows.rows());
  for (std::size_t t = 0; t < rows.rows(); ++t) {
    const double* r = rows.row(t);
    for (std::size_t c = 0; c < rows.cols(); ++c) {
      const double d = r[c] - mean[c];
      stdev[c] += d * d;
    }
  }
  for (double& s : stdev) {
    s = std::sqrt(s / static_cast<double>(rows.rows()));
    if (s < 1e-12) s = 1.0;  // constant column
  }
}

void Standardizer::apply(Matrix& rows) const {
  if (rows.cols() != mean.size()) {
    throw ValueError("Standardizer: column count mismatch");
  }
  for (std::size_t t = 0; t < rows.rows(); ++t) {
    double* r = rows.row(t);
    for (std::size_t c = 0; c < rows.cols(); ++c) {
      r[c] = (r[c] - mean[c]) / stdev[c];
    }
  }
}

Matrix add_context(const Matrix& rows, ContextMode mode, int radius) {
  if (mode == ContextMode::kNone) return rows;
  if (radius < 1) throw ValueError("add_context: radius must be >= 1");
  const long n = static_cast<long>(rows.rows());
  const std::size_t d = rows.cols();

  if (mode == ContextMode::kDelta) {
    // Least-squares slope over [-radius, +radius], edge replicated.
    double denom = 0.0;
    for (int j = 1; j <= radius; ++j) denom += 2.0 * j * j;
    Matrix out(rows.rows(), 2 * d);
    for (long t = 0; t < n; ++t) {
      double* dst = out.row(static_cast<std::size_t>(t));
      std::copy(rows.row(static_cast<std::size_t>(t)),
                rows.row(static_cast<std::size_t>(t)) + d, dst);
      for (std::size_t c = 0; c < d; ++c) {
        double acc = 0.0;
        for (int j = -radius; j <= radius; ++j) {
          const long idx = std::clamp(t + j, 0L, n - 1);
          acc += j * rows(static_cast<std::size_t>(idx), c);
        }
        dst[d + c] = acc / denom;
      }
    }
    return out;
  }

  // kStack: rows at t - radius and t + radius, edge replicated.
  Matrix out(rows.rows(), 3 * d);
  for (long t = 0; t < n; ++t) {
    double* dst = out.row(static_cast<std::size_t>(t));
    const long before = std::clamp(t - radius, 0L, n - 1);
    const long after = std::clamp(t + radius, 0L, n - 1);
    std::copy(rows.row(static_cast<std::size_t>(before)),
              rows.row(static_cast<std::size_t>(before)) + d, dst);
    std::copy(rows.row(static_cast<std::size_t>(t)),
              rows.row(static_cast<std::size_t>(t)) + d, dst + d);
    std::copy(rows.row(static_cast<std::size_t>(after)),
              rows.row(static_cast<std::size_t>(after)) + d, dst + 2 * d);
  }
  return out;
}

ContextMode context_mode_from_string(const std::string& name) {
  const std::string n = to_lower(name);
  if (n == "none") return ContextMode::kNone;
  if (n == "delta") return ContextMode::kDelta;
  if (n == "stack") return ContextMode::kStack;
  throw ValueError("unknown context mode '" + name + "' (none|delta|stack)");
}

std::string to_string(ContextMode mode) {
  switch (mode) {
    case ContextMode::kNone: return "none";
    case ContextMode::kDelta: return "delta";
    case ContextMode::kStack: return "stack";
  }
  return "none";
}

}  // namespace vdlab
