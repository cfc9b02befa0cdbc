#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace vdlab {

// Mono audio, nominal sample range [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// Half-open [start, end) interval carrying a vocal/nonvocal label.
struct LabelInterval {
  double start = 0.0;
  double end = 0.0;
  bool vocal = false;
};

// Sorted, non-overlapping intervals. Gaps are implicitly nonvocal.
struct LabelTrack {
  std::vector<LabelInterval> intervals;
};

// Frame-aligned boolean labels (true = vocal).
struct FrameLabels {
  double frame_rate = 0.0;  // frames per second
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
};

enum class WavEncoding { kPcm16, kFloat32 };

// PCM WAV reader: 16-bit int or 32-bit float, 1-2 channels. Stereo is
// downmixed by channel mean; integer samples are scaled by 1/32768.
AudioClip read_wav(const std::string& path);

void write_wav(const std::string& path, const AudioClip& clip,
               WavEncoding encoding = WavEncoding::kPcm16);

// Band-limited windowed-sinc resampler. `quality` is the number of sinc
// zero-crossings kept on each side of the kernel.
AudioClip resample(const AudioClip& clip, int target_rate, int quality = 16);

// Parses `start end label` lines. Labels found in vocal_aliases map to
// vocal, everything else to nonvocal; adjacent same-label intervals merge.
LabelTrack parse_lab(const std::string& path, const std::set<std::string>& vocal_aliases);

void write_lab(const std::string& path, const LabelTrack& track);

struct InstrumentActivation {
  std::string instrument;
  double start = 0.0;
  double end = 0.0;
};

// Union of the intervals whose instrument is in vocal_instruments.
LabelTrack activations_to_labels(const std::vector<InstrumentActivation>& activations,
                                 const std::set<std::string>& vocal_instruments);

// CSV `instrument,start,end` with a header row.
std::vector<InstrumentActivation> parse_activation_csv(const std::string& path);

// Frame i is vocal iff its center (i + 0.5) / frame_rate lies inside a
// vocal interval. Output length is exactly n_frames.
FrameLabels labels_to_frames(const LabelTrack& track, double frame_rate,
                             std::size_t n_frames);

}  // namespace vdlab
