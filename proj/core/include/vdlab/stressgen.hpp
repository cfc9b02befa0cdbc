#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vdlab/audio_io.hpp"
#include "vdlab/config.hpp"

namespace vdlab {

struct VibratoSpec {
  double f0 = 220.0;          // Hz
  double rate = 6.0;          // modulation rate, Hz
  double deviation = 1.0;     // peak excursion, semitones
  std::string formant = "none";  // none|a|e|i|o|u
  double duration = 4.0;      // seconds
  double lowpass_hz = 5000.0; // sawtooth band limit
};

struct FormantResonator {
  double center_hz = 0.0;
  double bandwidth_hz = 0.0;
  double gain = 1.0;
};

// Three parallel band-pass resonators per vowel.
struct FormantTable {
  std::map<std::string, std::array<FormantResonator, 3>> vowels;

  static FormantTable defaults();
  static FormantTable from_config(const Config& config);
};

// Band-limited sawtooth whose instantaneous frequency is
// f0 * 2^(deviation * sin(2*pi*rate*t) / 12), optionally shaped by the
// vowel's resonators, peak-normalized to 0.9. Deterministic, no seed.
AudioClip synth_vibrato(const VibratoSpec& spec, int sample_rate,
                        const FormantTable& formants = FormantTable::defaults());

inline const std::vector<double>& vibrato_grid_rates() {
  static const std::vector<double> rates = {0.5, 1, 2, 4, 6, 8, 10};
  return rates;
}

inline const std::vector<double>& vibrato_grid_deviations() {
  static const std::vector<double> devs = {0.01, 0.1, 0.3, 0.6, 1, 2, 4, 8};
  return devs;
}

inline const std::vector<std::string>& vibrato_grid_formants() {
  static const std::vector<std::string> formants = {"none", "a", "e", "i", "o", "u"};
  return formants;
}

struct VibratoGridEntry {
  std::string filename;
  double rate = 0.0;
  double deviation = 0.0;
  std::string formant;
};

// Emits 7 rates x 8 deviations x 6 formant conditions = 336 WAV clips plus
// manifest.csv (filename,rate,deviation,formant). All clips are nonvocal
// ground truth. Returns the manifest rows.
std::vector<VibratoGridEntry> gen_vibrato_grid(double duration, int sample_rate,
                                               const std::string& out_dir,
                                               const FormantTable& formants =
                                                   FormantTable::defaults(),
                                               int jobs = 1);

std::vector<VibratoGridEntry> read_vibrato_manifest(const std::string& path);
void write_vibrato_manifest(const std::string& path,
                            const std::vector<VibratoGridEntry>& entries);

struct SnrMixSpec {
  double target_snr_db = 0.0;
  double excerpt_seconds = 30.0;  // 0: keep full length
  bool normalize_on_clip = true;
};

struct SnrMixResult {
  AudioClip mix;
  double vocal_gain = 1.0;
  double achieved_snr_db = 0.0;
  bool clipped = false;
  double peak_scale = 1.0;  // applied to the whole mix when clipping
};

// Measures SNR over blocks where the vocal stem is active (above -60 dBFS),
// scales the vocal stem to hit the target and re-measures on the result.
SnrMixResult mix_at_snr(const AudioClip& vocal, const AudioClip& instrumental,
                        const SnrMixSpec& spec);

struct CorpusTrack {
  std::string id;
  std::string mix_wav, vocal_wav, accomp_wav, lab_file;
  double duration = 0.0;
  double vocal_fraction = 0.0;
};

struct CorpusConfig {
  int n_tracks = 40;
  double duration = 30.0;
  int sample_rate = 22050;
  std::uint64_t seed = 1;
  // Vocal-like segments: human-range vibrato.
  double vibrato_rate_lo = 5.5, vibrato_rate_hi = 8.0;
  double deviation_lo = 0.6, deviation_hi = 2.0;
  double f0_lo = 180.0, f0_hi = 330.0;
  double segment_lo = 1.0, segment_hi = 4.0;  // seconds, both vocal and gaps
  double vocal_gain_lo = 0.35, vocal_gain_hi = 1.0;
};

// Labeled synthetic corpus: instrumental bed (filtered noise, steady tones,
// click-train percussion) plus vocal-like FM segments. Emits per-track mix,
// vocal and accompaniment stems, a .lab annotation and manifest.csv.
std::vector<CorpusTrack> gen_synthetic_corpus(const CorpusConfig& config,
                                              const std::string& out_dir,
                                              const FormantTable& formants =
                                                  FormantTable::defaults(),
                                              int jobs = 1);

std::vector<CorpusTrack> read_corpus_manifest(const std::string& path);

}  // namespace vdlab
