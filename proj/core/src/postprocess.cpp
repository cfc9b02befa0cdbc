#include "vdlab/postprocess.hpp"

#include <cmath>

#include "vdlab/dsp.hpp"
#include "vdlab/errors.hpp"

namespace vdlab {

int median_window_frames(double smooth_ms, double frame_rate) {
  const double target = smooth_ms * frame_rate / 1000.0;
  if (target < 1.0) return 1;
  // 2*round((x-1)/2) + 1 is the nearest odd integer, ties away from zero.
  const long k = std::lround((target - 1.0) / 2.0);
  return static_cast<int>(2 * k + 1);
}

PredictionTrack postprocess(const PredictionTrack& track, double threshold,
                            double smooth_ms) {
  if (!(threshold > 0.0) || !(threshold < 1.0)) {
    throw ValueError("postprocess: threshold must be in (0, 1)");
  }
  if (!(track.frame_rate > 0.0)) throw ValueError("postprocess: missing frame rate");

  PredictionTrack out;
  out.frame_rate = track.frame_rate;
  out.probabilities = track.probabilities;

  std::vector<double> binary(track.probabilities.size());
  for (std::size_t i = 0; i < binary.size(); ++i) {
    binary[i] = track.probabilities[i] >= threshold ? 1.0 : 0.0;
  }
  const int window = median_window_frames(smooth_ms, track.frame_rate);
  if (window > 1 && binary.size() > 1) {
    binary = median_filter_1d(binary, window);
  }
  out.labels.resize(binary.size());
  for (std::size_t i = 0; i < binary.size(); ++i) {
    out.labels[i] = binary[i] >= 0.5 ? 1 : 0;
  }
  return out;
}

}  // namespace vdlab
