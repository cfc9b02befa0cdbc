#pragma once

#include "vdlab/dsp.hpp"

namespace vdlab {

struct HpssOutput {
  Spectrogram harmonic;
  Spectrogram percussive;
};

// Median-filtering HPSS with soft masks. The time-axis median feeds the
// harmonic estimate, the frequency-axis median the percussive one;
// masks are H^p / (H^p + P^p) with 0/0 defined as 0.5.
HpssOutput hpss(const Spectrogram& spec, int harm_window, int perc_window,
                double power = 2.0);

struct DoubleStageConfig {
  int stage1_fft = 4096;  // fine frequency resolution: voice lands percussive
  int stage1_hop = 1024;
  int stage2_fft = 512;  // coarse resolution: voice lands harmonic
  int stage2_hop = 315;
  int harm_window = 17;
  int perc_window = 17;
  double power = 2.0;
};

struct DoubleStageOutput {
  Spectrogram vocal_enhanced;  // H2
  Spectrogram percussive;      // P2
};

// Stage 1 separates the input at high frequency resolution; its percussive
// part is resynthesized with the original phase and re-analyzed at low
// frequency resolution, where stage 2 splits it into a vocal-enhanced and a
// residual percussive spectrogram.
DoubleStageOutput double_stage_hpss(const AudioClip& clip, const DoubleStageConfig& config);

}  // namespace vdlab
