#pragma once

#include "vdlab/audio_io.hpp"

namespace vdlab::testing {

// Independent vibrato parameter recovery: tracks the fundamental with a
// harmonic-sum spectral peak per frame (parabolic-interpolated on a log
// frequency grid), then fits a sinusoid to the log-f0 track. Verifies the
// synthesis path without sharing any of its code.
struct VibratoRecovery {
  double rate_hz = 0.0;       // fitted modulation rate
  double peak_dev_st = 0.0;   // fitted peak excursion in semitones
  double track_rms_st = 0.0;  // residual of the sinusoid fit
};

// `f0` is the nominal carrier and `max_dev_st` bounds the search band; both
// are grid parameters, not measurements.
VibratoRecovery recover_vibrato(const AudioClip& clip, double f0, double max_dev_st);

}  // namespace vdlab::testing
