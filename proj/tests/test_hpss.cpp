#include <doctest.h>

#include <cmath>

#include "common/test_helpers.hpp"
#include "vdlab/errors.hpp"
#include "vdlab/hpss.hpp"
#include "vdlab/stressgen.hpp"

using namespace vdlab;
using vdlab::testing::make_click_train;
using vdlab::testing::make_silence;
using vdlab::testing::make_sine;

namespace {

double total_power(const Spectrogram& s) {
  double acc = 0.0;
  for (double v : s.magnitudes.data()) acc += v * v;
  return acc;
}

// Fraction of `part` relative to `whole`, by spectrogram power.
double power_ratio(const Spectrogram& part, const Spectrogram& whole) {
  return total_power(part) / total_power(whole);
}

// Stem-projection oracle: per-bin soft attribution of an output spectrogram
// between two known stems analyzed at the same resolution.
double projected_energy(const Spectrogram& output, const Spectrogram& stem,
                        const Spectrogram& other) {
  double acc = 0.0;
  for (std::size_t t = 0; t < output.n_frames(); ++t) {
    for (std::size_t k = 0; k < output.n_bins(); ++k) {
      const double a = stem.magnitudes(t, k) * stem.magnitudes(t, k);
      const double b = other.magnitudes(t, k) * other.magnitudes(t, k);
      const double w = a + b > 0.0 ? a / (a + b) : 0.0;
      acc += w * output.magnitudes(t, k) * output.magnitudes(t, k);
    }
  }
  return acc;
}

}  // namespace

TEST_CASE("hpss masks are complementary and in range") {
  const AudioClip mix = make_sine(220.0, 2.0, 22050, 0.4);
  const Spectrogram spec = stft(mix, 1024, 315);
  const HpssOutput out = hpss(spec, 17, 17, 2.0);
  for (std::size_t t = 0; t < spec.n_frames(); ++t) {
    for (std::size_t k = 0; k < spec.n_bins(); ++k) {
      const double x = spec.magnitudes(t, k);
      const double h = out.harmonic.magnitudes(t, k);
      const double p = out.percussive.magnitudes(t, k);
      CHECK(h >= 0.0);
      CHECK(p >= 0.0);
      // Masks sum to one: components reassemble the input.
      CHECK(std::abs(h + p - x) <= 1e-6 * std::max(1.0, x));
    }
  }
}

TEST_CASE("hpss energy split never exceeds the input energy") {
  const AudioClip tone = make_sine(330.0, 1.5, 22050, 0.3);
  AudioClip mix = make_click_train(0.25, 1.5, 22050);
  for (std::size_t i = 0; i < mix.samples.size(); ++i) mix.samples[i] += tone.samples[i];
  const Spectrogram spec = stft(mix, 1024, 315);
  const HpssOutput out = hpss(spec, 17, 17, 2.0);
  CHECK(total_power(out.harmonic) + total_power(out.percussive) <=
        total_power(spec) * (1.0 + 1e-9));
}

TEST_CASE("hpss routes a stationary sine to the harmonic component") {
  const Spectrogram spec = stft(make_sine(220.0, 2.0, 22050, 0.5), 1024, 315);
  const HpssOutput out = hpss(spec, 17, 17, 2.0);
  CHECK(power_ratio(out.harmonic, spec) >= 0.90);
}

TEST_CASE("hpss routes a click train to the percussive component") {
  const Spectrogram spec = stft(make_click_train(0.3, 2.0, 22050), 1024, 315);
  const HpssOutput out = hpss(spec, 17, 17, 2.0);
  CHECK(power_ratio(out.percussive, spec) >= 0.90);
}

TEST_CASE("hpss rejects even windows") {
  const Spectrogram spec = stft(make_silence(1.0, 22050), 1024, 315);
  CHECK_THROWS_AS(hpss(spec, 16, 17, 2.0), ValueError);
  CHECK_THROWS_AS(hpss(spec, 17, 16, 2.0), ValueError);
  CHECK_THROWS_AS(hpss(spec, 17, 17, 0.5), ValueError);
}

TEST_CASE("double_stage_hpss on silence returns zeros") {
  const DoubleStageOutput out = double_stage_hpss(make_silence(2.0, 22050), {});
  for (double v : out.vocal_enhanced.magnitudes.data()) CHECK(v == 0.0);
  for (double v : out.percussive.magnitudes.data()) CHECK(v == 0.0);
}

TEST_CASE("double_stage_hpss rejects inverted stage resolutions") {
  DoubleStageConfig bad;
  bad.stage1_fft = 512;
  bad.stage2_fft = 4096;
  CHECK_THROWS_AS(double_stage_hpss(make_silence(2.0, 22050), bad), ValueError);
}

TEST_CASE("double-stage: FM vowel tone routes to H2, clicks to P2") {
  // Known stems: a vibrato vowel tone and a click train, mixed at 0 dB.
  VibratoSpec spec;
  spec.deviation = 1.0;
  spec.rate = 6.0;
  spec.formant = "a";
  spec.duration = 3.0;
  const AudioClip tone = synth_vibrato(spec, 22050);
  const AudioClip clicks = make_click_train(0.25, 3.0, 22050, 0.8);

  SnrMixSpec mix_spec;
  mix_spec.target_snr_db = 0.0;
  mix_spec.excerpt_seconds = 0.0;
  const SnrMixResult mixed = mix_at_snr(tone, clicks, mix_spec);

  const DoubleStageConfig config;
  const DoubleStageOutput out = double_stage_hpss(mixed.mix, config);

  // Analyze the scaled stems at stage-2 resolution for the projection.
  AudioClip tone_scaled = tone;
  for (double& v : tone_scaled.samples) v *= mixed.vocal_gain;
  if (mixed.clipped) {
    for (double& v : tone_scaled.samples) v *= mixed.peak_scale;
  }
  AudioClip clicks_scaled = clicks;
  if (mixed.clipped) {
    for (double& v : clicks_scaled.samples) v *= mixed.peak_scale;
  }
  const Spectrogram tone_spec = stft(tone_scaled, config.stage2_fft, config.stage2_hop);
  const Spectrogram click_spec = stft(clicks_scaled, config.stage2_fft, config.stage2_hop);

  const double tone_energy = total_power(tone_spec);
  const double click_energy = total_power(click_spec);
  const double tone_in_h2 = projected_energy(out.vocal_enhanced, tone_spec, click_spec);
  const double clicks_in_p2 = projected_energy(out.percussive, click_spec, tone_spec);

  CHECK(tone_in_h2 / tone_energy >= 0.60);
  CHECK(clicks_in_p2 / click_energy >= 0.60);
}

TEST_CASE("double-stage: a stationary sine is mostly removed from H2") {
  const AudioClip tone = make_sine(220.0, 3.0, 22050, 0.5);
  const DoubleStageConfig config;
  const DoubleStageOutput out = double_stage_hpss(tone, config);
  const Spectrogram ref = stft(tone, config.stage2_fft, config.stage2_hop);
  CHECK(total_power(out.vocal_enhanced) / total_power(ref) < 0.25);
}
