#include "vdlab/stressgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "vdlab/dsp.hpp"
#include "vdlab/errors.hpp"
#include "vdlab/parallel.hpp"
#include "vdlab/rng.hpp"
#include "vdlab/util.hpp"

namespace vdlab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void one_pole_lowpass(std::vector<double>& x, double cutoff_hz, int sample_rate) {
  const double a = 1.0 - std::exp(-kTwoPi * cutoff_hz / sample_rate);
  double y = 0.0;
  for (double& v : x) {
    y += a * (v - y);
    v = y;
  }
}

void peak_normalize(std::vector<double>& x, double peak) {
  double max_abs = 0.0;
  for (double v : x) max_abs = std::max(max_abs, std::abs(v));
  if (max_abs > 0.0) {
    const double g = peak / max_abs;
    for (double& v : x) v *= g;
  }
}

}  // namespace

FormantTable FormantTable::defaults() {
  // Classic average adult-male vowel formants; editable via config.
  FormantTable t;
  const double bw[3] = {80.0, 90.0, 120.0};
  const double gain[3] = {1.0, 0.5, 0.25};
  auto add = [&](const std::string& vowel, double f1, double f2, double f3) {
    const double centers[3] = {f1, f2, f3};
    std::array<FormantResonator, 3> row;
    for (int i = 0; i < 3; ++i) row[i] = {centers[i], bw[i], gain[i]};
    t.vowels[vowel] = row;
  };
  add("a", 730.0, 1090.0, 2440.0);
  add("e", 530.0, 1840.0, 2480.0);
  add("i", 270.0, 2290.0, 3010.0);
  add("o", 570.0, 840.0, 2410.0);
  add("u", 300.0, 870.0, 2240.0);
  return t;
}

FormantTable FormantTable::from_config(const Config& config) {
  FormantTable t = defaults();
  for (const std::string vowel : {"a", "e", "i", "o", "u"}) {
    const std::string key = "formants." + vowel;
    if (!config.has(key)) continue;
    std::array<FormantResonator, 3> row;
    const auto triples = split(config.get_string(key, ""), ',');
    if (triples.size() != 3) {
      throw ValueError("config key '" + key + "': expected three center:bandwidth:gain triples");
    }
    for (int i = 0; i < 3; ++i) {
      const auto fields = split(trim(triples[static_cast<std::size_t>(i)]), ':');
      if (fields.size() != 3) {
        throw ValueError("config key '" + key + "': expected center:bandwidth:gain");
      }
      row[static_cast<std::size_t>(i)] = {std::stod(fields[0]), std::stod(fields[1]),
                                          std::stod(fields[2])};
    }
    if (!(row[0].center_hz < row[1].center_hz && row[1].center_hz < row[2].center_hz)) {
      throw ValueError("config key '" + key + "': formants must be ordered F1 < F2 < F3");
    }
    t.vowels[vowel] = row;
  }
  return t;
}

AudioClip synth_vibrato(const VibratoSpec& spec, int sample_rate,
                        const FormantTable& formants) {
  if (!(spec.f0 > 0.0) || !(spec.rate > 0.0) || !(spec.deviation > 0.0)) {
    throw ValueError("synth_vibrato: f0, rate and deviation must be positive");
  }
  if (!(spec.duration > 0.0)) throw ValueError("synth_vibrato: duration must be positive");
  const double f_max = spec.f0 * std::pow(2.0, spec.deviation / 12.0);
  if (f_max >= spec.lowpass_hz) {
    throw ValueError(strfmt("synth_vibrato: peak frequency %.1f Hz reaches the %.1f Hz "
                            "low-pass cutoff", f_max, spec.lowpass_hz));
  }

  const std::array<FormantResonator, 3>* resonators = nullptr;
  if (spec.formant != "none") {
    auto it = formants.vowels.find(spec.formant);
    if (it == formants.vowels.end()) {
      throw ValueError("synth_vibrato: unknown formant '" + spec.formant + "'");
    }
    for (const FormantResonator& r : it->second) {
      if (r.center_hz >= sample_rate / 2.0) {
        throw ValueError(strfmt("synth_vibrato: formant center %.0f Hz above Nyquist",
                                r.center_hz));
      }
    }
    resonators = &it->second;
  }

  const std::size_t n = static_cast<std::size_t>(std::llround(spec.duration * sample_rate));
  // Keep the harmonic count fixed over the clip so partials never pop in or
  // out; the highest partial stays below the low-pass cutoff by design.
  const int n_harmonics = std::max(1, static_cast<int>(spec.lowpass_hz / f_max));

  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(n);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double freq =
        spec.f0 * std::pow(2.0, spec.deviation * std::sin(kTwoPi * spec.rate * t) / 12.0);
    phase += kTwoPi * freq / sample_rate;
    if (phase > kTwoPi) phase -= kTwoPi;
    double v = 0.0;
    for (int k = 1; k <= n_harmonics; ++k) {
      v += std::sin(k * phase) / k;
    }
    clip.samples[i] = v;
  }
  one_pole_lowpass(clip.samples, spec.lowpass_hz, sample_rate);

  if (resonators != nullptr) {
    std::vector<double> shaped(n, 0.0);
    for (const FormantResonator& r : *resonators) {
      const BiquadCoeffs coeffs = biquad_design(BiquadKind::kBandpassResonator, r.center_hz,
                                                r.bandwidth_hz, sample_rate);
      const std::vector<double> band = biquad_apply(coeffs, clip.samples);
      for (std::size_t i = 0; i < n; ++i) shaped[i] += r.gain * band[i];
    }
    clip.samples = std::move(shaped);
  }
  peak_normalize(clip.samples, 0.9);
  return clip;
}

std::vector<VibratoGridEntry> gen_vibrato_grid(double duration, int sample_rate,
                                               const std::string& out_dir,
                                               const FormantTable& formants, int jobs) {
  std::filesystem::create_directories(out_dir);
  std::vector<VibratoGridEntry> entries;
  for (const std::string& formant : vibrato_grid_formants()) {
    for (double rate : vibrato_grid_rates()) {
      for (double deviation : vibrato_grid_deviations()) {
        VibratoGridEntry e;
        e.rate = rate;
        e.deviation = deviation;
        e.formant = formant;
        e.filename = strfmt("vib_%s_r%g_d%g.wav", formant.c_str(), rate, deviation);
        entries.push_back(std::move(e));
      }
    }
  }

  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    const VibratoGridEntry& e = entries[i];
    VibratoSpec spec;
    spec.rate = e.rate;
    spec.deviation = e.deviation;
    spec.formant = e.formant;
    spec.duration = duration;
    const AudioClip clip = synth_vibrato(spec, sample_rate, formants);
    write_wav(out_dir + "/" + e.filename, clip);
  });

  write_vibrato_manifest(out_dir + "/manifest.csv", entries);
  return entries;
}

void write_vibrato_manifest(const std::string& path,
                            const std::vector<VibratoGridEntry>& entries) {
  std::string out = "filename,rate,deviation,formant\n";
  for (const VibratoGridEntry& e : entries) {
    out += strfmt("%s,%g,%g,%s\n", e.filename.c_str(), e.rate, e.deviation, e.formant.c_str());
  }
  write_text_file(path, out);
}

std::vector<VibratoGridEntry> read_vibrato_manifest(const std::string& path) {
  const std::string text = read_text_file(path);
  std::vector<VibratoGridEntry> entries;
  int lineno = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || lineno == 1) continue;
    const auto parts = split(line, ',');
    if (parts.size() != 4) {
      throw ParseError(strfmt("%s:%d: expected filename,rate,deviation,formant", path.c_str(),
                              lineno));
    }
    VibratoGridEntry e;
    e.filename = trim(parts[0]);
    e.rate = std::stod(parts[1]);
    e.deviation = std::stod(parts[2]);
    e.formant = trim(parts[3]);
    entries.push_back(std::move(e));
  }
  return entries;
}

namespace {

// Mean square per block plus the mask of blocks where the vocal stem is
// active (above -60 dBFS).
struct SnrMeasurement {
  double vocal_power = 0.0;
  double inst_power = 0.0;
  std::size_t active_blocks = 0;
};

SnrMeasurement measure_snr(const std::vector<double>& vocal,
                           const std::vector<double>& inst, int sample_rate) {
  const std::size_t block = static_cast<std::size_t>(std::max(1, sample_rate / 20));
  const double threshold = 1e-6;  // -60 dBFS in mean-square terms
  SnrMeasurement m;
  const std::size_t n = std::min(vocal.size(), inst.size());
  for (std::size_t start = 0; start + block <= n; start += block) {
    double v_ms = 0.0, i_ms = 0.0;
    for (std::size_t k = start; k < start + block; ++k) {
      v_ms += vocal[k] * vocal[k];
      i_ms += inst[k] * inst[k];
    }
    v_ms /= static_cast<double>(block);
    i_ms /= static_cast<double>(block);
    if (v_ms > threshold) {
      m.vocal_power += v_ms;
      m.inst_power += i_ms;
      ++m.active_blocks;
    }
  }
  if (m.active_blocks > 0) {
    m.vocal_power /= static_cast<double>(m.active_blocks);
    m.inst_power /= static_cast<double>(m.active_blocks);
  }
  return m;
}

}  // namespace

SnrMixResult mix_at_snr(const AudioClip& vocal, const AudioClip& instrumental,
                        const SnrMixSpec& spec) {
  if (vocal.sample_rate != instrumental.sample_rate) {
    throw ValueError("mix_at_snr: stems must share a sample rate");
  }
  std::size_t n = std::min(vocal.samples.size(), instrumental.samples.size());
  if (spec.excerpt_seconds > 0.0) {
    n = std::min(n, static_cast<std::size_t>(
                        std::llround(spec.excerpt_seconds * vocal.sample_rate)));
  }
  if (n == 0) throw ValueError("mix_at_snr: empty stems");

  std::vector<double> v(vocal.samples.begin(), vocal.samples.begin() + static_cast<long>(n));
  std::vector<double> a(instrumental.samples.begin(),
                        instrumental.samples.begin() + static_cast<long>(n));

  const SnrMeasurement before = measure_snr(v, a, vocal.sample_rate);
  if (before.active_blocks == 0 || before.vocal_power <= 0.0) {
    throw ValueError("mix_at_snr: vocal stem is silent, SNR undefined");
  }
  if (before.inst_power <= 0.0) {
    throw ValueError("mix_at_snr: instrumental stem is silent over the vocal region");
  }
  const double current_db = 10.0 * std::log10(before.vocal_power / before.inst_power);
  const double gain = std::pow(10.0, (spec.target_snr_db - current_db) / 20.0);

  SnrMixResult result;
  result.vocal_gain = gain;
  result.mix.sample_rate = vocal.sample_rate;
  result.mix.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] *= gain;
    result.mix.samples[i] = v[i] + a[i];
  }

  const SnrMeasurement after = measure_snr(v, a, vocal.sample_rate);
  result.achieved_snr_db = 10.0 * std::log10(after.vocal_power / after.inst_power);

  double peak = 0.0;
  for (double x : result.mix.samples) peak = std::max(peak, std::abs(x));
  if (peak > 1.0) {
    result.clipped = true;
    if (spec.normalize_on_clip) {
      result.peak_scale = 0.999 / peak;
      for (double& x : result.mix.samples) x *= result.peak_scale;
    }
  }
  return result;
}

namespace {

struct SegmentPlan {
  double start = 0.0;
  double length = 0.0;
};

// Alternating gap/segment layout whose vocal fraction lands in [0.3, 0.7].
std::vector<SegmentPlan> plan_segments(Rng& rng, const CorpusConfig& cfg) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<SegmentPlan> segments;
    double t = rng.uniform(0.3, cfg.segment_hi);  // leading gap
    double vocal_time = 0.0;
    while (true) {
      const double seg = rng.uniform(cfg.segment_lo, cfg.segment_hi);
      if (t + seg > cfg.duration - 0.1) break;
      segments.push_back({t, seg});
      vocal_time += seg;
      t += seg + rng.uniform(cfg.segment_lo, cfg.segment_hi);
      if (t >= cfg.duration) break;
    }
    const double fraction = vocal_time / cfg.duration;
    if (!segments.empty() && fraction >= 0.3 && fraction <= 0.7) return segments;
  }
  throw Error("gen_synthetic_corpus: could not lay out segments (duration too short?)");
}

void render_track(const CorpusConfig& cfg, const FormantTable& formants, std::uint64_t track,
                  const std::string& out_dir, CorpusTrack& out) {
  Rng rng = Rng::derive(cfg.seed, track);
  const int sr = cfg.sample_rate;
  const std::size_t n = static_cast<std::size_t>(std::llround(cfg.duration * sr));

  // Instrumental bed: filtered noise + steady tones + click train.
  std::vector<double> bed(n, 0.0);
  {
    const double noise_gain = rng.uniform(0.02, 0.06);
    std::vector<double> noise(n);
    for (double& v : noise) v = rng.uniform(-1.0, 1.0);
    one_pole_lowpass(noise, rng.uniform(800.0, 2500.0), sr);
    for (std::size_t i = 0; i < n; ++i) bed[i] += noise_gain * noise[i];

    const int n_tones = 2 + static_cast<int>(rng.index(3));
    for (int k = 0; k < n_tones; ++k) {
      const double freq = 100.0 * std::pow(20.0, rng.uniform());  // 100..2000 Hz
      const double amp = rng.uniform(0.03, 0.09);
      const double phase0 = rng.uniform(0.0, kTwoPi);
      for (std::size_t i = 0; i < n; ++i) {
        bed[i] += amp * std::sin(kTwoPi * freq * i / sr + phase0);
      }
    }

    const double click_period = rng.uniform(0.35, 0.8);
    const double click_amp = rng.uniform(0.25, 0.5);
    const std::size_t click_len = static_cast<std::size_t>(0.006 * sr);
    for (double t = rng.uniform(0.0, click_period); t < cfg.duration;
         t += click_period) {
      const std::size_t start = static_cast<std::size_t>(t * sr);
      for (std::size_t i = 0; i < click_len && start + i < n; ++i) {
        const double env = std::exp(-8.0 * static_cast<double>(i) / click_len);
        bed[start + i] += click_amp * env * rng.uniform(-1.0, 1.0);
      }
    }
  }

  // Vocal-like segments.
  std::vector<double> vocal(n, 0.0);
  const auto segments = plan_segments(rng, cfg);
  double vocal_time = 0.0;
  const auto& vowels = vibrato_grid_formants();  // reuse: entry 0 is "none"
  for (const SegmentPlan& seg : segments) {
    VibratoSpec spec;
    spec.f0 = rng.uniform(cfg.f0_lo, cfg.f0_hi);
    spec.rate = rng.uniform(cfg.vibrato_rate_lo, cfg.vibrato_rate_hi);
    spec.deviation = rng.uniform(cfg.deviation_lo, cfg.deviation_hi);
    spec.formant = vowels[1 + rng.index(vowels.size() - 1)];  // always a vowel
    spec.duration = seg.length;
    const double amp = rng.uniform(cfg.vocal_gain_lo, cfg.vocal_gain_hi);
    AudioClip voice = synth_vibrato(spec, sr, formants);

    const std::size_t fade = static_cast<std::size_t>(0.01 * sr);
    const std::size_t start = static_cast<std::size_t>(seg.start * sr);
    for (std::size_t i = 0; i < voice.samples.size() && start + i < n; ++i) {
      double env = 1.0;
      if (i < fade) env = 0.5 - 0.5 * std::cos(kTwoPi / 2.0 * i / fade);
      const std::size_t remaining = voice.samples.size() - 1 - i;
      if (remaining < fade) env = 0.5 - 0.5 * std::cos(kTwoPi / 2.0 * remaining / fade);
      vocal[start + i] += amp * env * voice.samples[i];
    }
    vocal_time += seg.length;
  }

  // Joint rescale keeps mix = vocal + accompaniment exact and unclipped.
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, std::abs(vocal[i] + bed[i]));
  if (peak > 0.99) {
    const double g = 0.99 / peak;
    for (std::size_t i = 0; i < n; ++i) {
      vocal[i] *= g;
      bed[i] *= g;
    }
  }

  AudioClip mix, vocal_clip, bed_clip;
  mix.sample_rate = vocal_clip.sample_rate = bed_clip.sample_rate = sr;
  mix.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) mix.samples[i] = vocal[i] + bed[i];
  vocal_clip.samples = std::move(vocal);
  bed_clip.samples = std::move(bed);

  LabelTrack labels;
  for (const SegmentPlan& seg : segments) {
    labels.intervals.push_back({seg.start, seg.start + seg.length, true});
  }

  out.id = strfmt("track_%03llu", static_cast<unsigned long long>(track));
  out.mix_wav = out.id + "_mix.wav";
  out.vocal_wav = out.id + "_vocal.wav";
  out.accomp_wav = out.id + "_accomp.wav";
  out.lab_file = out.id + ".lab";
  out.duration = cfg.duration;
  out.vocal_fraction = vocal_time / cfg.duration;

  write_wav(out_dir + "/" + out.mix_wav, mix);
  write_wav(out_dir + "/" + out.vocal_wav, vocal_clip);
  write_wav(out_dir + "/" + out.accomp_wav, bed_clip);
  write_lab(out_dir + "/" + out.lab_file, labels);
}

}  // namespace

std::vector<CorpusTrack> gen_synthetic_corpus(const CorpusConfig& config,
                                              const std::string& out_dir,
                                              const FormantTable& formants, int jobs) {
  if (config.n_tracks < 4) throw ValueError("gen_synthetic_corpus: need n_tracks >= 4");
  if (config.duration < 8.0) throw ValueError("gen_synthetic_corpus: duration too short");
  std::filesystem::create_directories(out_dir);

  std::vector<CorpusTrack> tracks(static_cast<std::size_t>(config.n_tracks));
  parallel_for(tracks.size(), jobs, [&](std::size_t i) {
    render_track(config, formants, i, out_dir, tracks[i]);
  });

  std::string manifest = "id,mix,vocal,accomp,lab,duration,vocal_fraction\n";
  for (const CorpusTrack& t : tracks) {
    manifest += strfmt("%s,%s,%s,%s,%s,%g,%.6f\n", t.id.c_str(), t.mix_wav.c_str(),
                       t.vocal_wav.c_str(), t.accomp_wav.c_str(), t.lab_file.c_str(),
                       t.duration, t.vocal_fraction);
  }
  write_text_file(out_dir + "/manifest.csv", manifest);
  return tracks;
}

std::vector<CorpusTrack> read_corpus_manifest(const std::string& path) {
  const std::string text = read_text_file(path);
  std::vector<CorpusTrack> tracks;
  int lineno = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || lineno == 1) continue;
    const auto parts = split(line, ',');
    if (parts.size() != 7) {
      throw ParseError(strfmt("%s:%d: expected 7 manifest columns", path.c_str(), lineno));
    }
    CorpusTrack t;
    t.id = trim(parts[0]);
    t.mix_wav = trim(parts[1]);
    t.vocal_wav = trim(parts[2]);
    t.accomp_wav = trim(parts[3]);
    t.lab_file = trim(parts[4]);
    t.duration = std::stod(parts[5]);
    t.vocal_fraction = std::stod(parts[6]);
    tracks.push_back(std::move(t));
  }
  return tracks;
}

}  // namespace vdlab
