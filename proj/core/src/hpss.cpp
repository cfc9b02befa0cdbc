#include "vdlab/hpss.hpp"

#include <cmath>

#include "vdlab/errors.hpp"

namespace vdlab {

HpssOutput hpss(const Spectrogram& spec, int harm_window, int perc_window, double power) {
  if (harm_window < 1 || harm_window % 2 == 0 || perc_window < 1 || perc_window % 2 == 0) {
    throw ValueError("hpss: windows must be odd and >= 1");
  }
  if (!(power >= 1.0)) throw ValueError("hpss: mask power must be >= 1");

  const Matrix h_est = median_filter_2d(spec.magnitudes, harm_window, 1);
  const Matrix p_est = median_filter_2d(spec.magnitudes, 1, perc_window);

  HpssOutput out;
  out.harmonic.magnitudes = Matrix(spec.n_frames(), spec.n_bins());
  out.percussive.magnitudes = Matrix(spec.n_frames(), spec.n_bins());
  out.harmonic.frame_rate = out.percussive.frame_rate = spec.frame_rate;
  out.harmonic.bin_hz = out.percussive.bin_hz = spec.bin_hz;

  for (std::size_t t = 0; t < spec.n_frames(); ++t) {
    for (std::size_t k = 0; k < spec.n_bins(); ++k) {
      const double hp = std::pow(h_est(t, k), power);
      const double pp = std::pow(p_est(t, k), power);
      const double denom = hp + pp;
      const double mask_h = denom > 0.0 ? hp / denom : 0.5;
      const double x = spec.magnitudes(t, k);
      out.harmonic.magnitudes(t, k) = mask_h * x;
      out.percussive.magnitudes(t, k) = (1.0 - mask_h) * x;
    }
  }
  return out;
}

DoubleStageOutput double_stage_hpss(const AudioClip& clip, const DoubleStageConfig& config) {
  if (config.stage1_fft <= config.stage2_fft) {
    throw ValueError("double_stage_hpss: stage1_fft must exceed stage2_fft");
  }

  // Stage 1: fine frequency resolution. Voice moves across bins and looks
  // percussive here, so it is collected in P1.
  ComplexSpectrogram stage1 = stft_complex(clip, config.stage1_fft, config.stage1_hop);
  Spectrogram mag1 = stage1.magnitude();
  HpssOutput split1 = hpss(mag1, config.harm_window, config.perc_window, config.power);

  // Apply the percussive mask to the complex spectrum: the resynthesis
  // keeps the input phase.
  ComplexSpectrogram p1 = stage1;
  for (std::size_t t = 0; t < mag1.n_frames(); ++t) {
    for (std::size_t k = 0; k < mag1.n_bins(); ++k) {
      const double m = mag1.magnitudes(t, k);
      const double mask = m > 0.0 ? split1.percussive.magnitudes(t, k) / m : 0.0;
      p1.re(t, k) *= mask;
      p1.im(t, k) *= mask;
    }
  }
  AudioClip p1_clip = istft(p1);

  // Stage 2: coarse frequency resolution. Voice fits inside single bins and
  // looks harmonic, so H2 is the vocal-enhanced output.
  Spectrogram mag2 = stft(p1_clip, config.stage2_fft, config.stage2_hop);
  HpssOutput split2 = hpss(mag2, config.harm_window, config.perc_window, config.power);

  DoubleStageOutput out;
  out.vocal_enhanced = std::move(split2.harmonic);
  out.percussive = std::move(split2.percussive);
  return out;
}

}  // namespace vdlab
