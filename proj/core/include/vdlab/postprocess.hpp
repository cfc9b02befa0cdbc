#pragma once

#include <cstdint>
#include <vector>

namespace vdlab {

struct PredictionTrack {
  double frame_rate = 0.0;
  std::vector<double> probabilities;       // each in [0, 1]
  std::vector<std::uint8_t> labels;        // after threshold + smoothing
};

// Nearest odd frame count to smooth_ms * frame_rate / 1000 (ties round up);
// never below 1.
int median_window_frames(double smooth_ms, double frame_rate);

// Binarize at `threshold`, then median-filter the labels over the window
// implied by smooth_ms. smooth_ms = 0 is pure thresholding.
PredictionTrack postprocess(const PredictionTrack& track, double threshold,
                            double smooth_ms);

}  // namespace vdlab
