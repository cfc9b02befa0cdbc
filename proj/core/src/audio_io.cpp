#include "vdlab/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "vdlab/errors.hpp"
#include "vdlab/util.hpp"

namespace vdlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void push_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void push_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

AudioClip read_wav(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("wav file not found: " + path);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open wav file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw ParseError("malformed RIFF header: " + path);
  }

  // Walk chunks for "fmt " and "data"; anything else is skipped.
  std::uint16_t format_tag = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_len = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    std::uint32_t chunk_len = read_u32(hdr + 4);
    std::size_t body = pos + 8;
    if (body + chunk_len > bytes.size()) {
      throw ParseError(strfmt("truncated chunk at offset %zu: %s", pos, path.c_str()));
    }
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw ParseError("fmt chunk too short: " + path);
      format_tag = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      sample_rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr) {
    throw ParseError("missing fmt/data chunk: " + path);
  }
  if (channels < 1 || channels > 2) {
    throw UnsupportedError(strfmt("unsupported channel count %u: %s", channels, path.c_str()));
  }
  if (sample_rate == 0) throw ParseError("zero sample rate: " + path);

  const bool pcm16 = (format_tag == 1 && bits == 16);
  const bool float32 = (format_tag == 3 && bits == 32);
  if (!pcm16 && !float32) {
    throw UnsupportedError(
        strfmt("unsupported encoding (format %u, %u bit): %s", format_tag, bits, path.c_str()));
  }

  const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t n_frames = data_len / frame_bytes;
  if (n_frames == 0) throw ParseError("empty data chunk: " + path);

  AudioClip clip;
  clip.sample_rate = static_cast<int>(sample_rate);
  clip.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (unsigned ch = 0; ch < channels; ++ch) {
      const unsigned char* p = data + i * frame_bytes + ch * bytes_per_sample;
      if (pcm16) {
        std::int16_t s;
        std::memcpy(&s, p, 2);
        acc += static_cast<double>(s) / 32768.0;
      } else {
        float f;
        std::memcpy(&f, p, 4);
        acc += static_cast<double>(f);
      }
    }
    clip.samples[i] = acc / channels;
  }
  return clip;
}

void write_wav(const std::string& path, const AudioClip& clip, WavEncoding encoding) {
  if (clip.sample_rate <= 0) throw ValueError("write_wav: sample_rate must be positive");
  if (clip.samples.empty()) throw ValueError("write_wav: empty clip");

  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::uint32_t data_len = static_cast<std::uint32_t>(clip.samples.size() * (bits / 8));

  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  push_u32(out, 36 + data_len);
  out += "WAVE";
  out += "fmt ";
  push_u32(out, 16);
  push_u16(out, pcm16 ? 1 : 3);
  push_u16(out, 1);  // mono
  push_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  push_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * (bits / 8));
  push_u16(out, bits / 8);
  push_u16(out, bits);
  out += "data";
  push_u32(out, data_len);

  if (pcm16) {
    for (double x : clip.samples) {
      long v = std::lround(x * 32768.0);
      v = std::clamp(v, -32768L, 32767L);
      push_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
    }
  } else {
    for (double x : clip.samples) {
      float f = static_cast<float>(x);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      push_u32(out, u);
    }
  }
  write_text_file(path, out);
}

AudioClip resample(const AudioClip& clip, int target_rate, int quality) {
  if (target_rate <= 0) throw ValueError("resample: target_rate must be positive");
  if (clip.sample_rate <= 0) throw ValueError("resample: clip has no sample rate");
  if (quality < 2) quality = 2;
  if (target_rate == clip.sample_rate) return clip;

  const std::size_t n_in = clip.samples.size();
  const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
  const std::size_t n_out =
      static_cast<std::size_t>(std::llround(static_cast<double>(n_in) * ratio));

  // Cutoff relative to the input Nyquist, pulled in slightly below the
  // theoretical limit to leave room for the window's transition band.
  const double cutoff = 0.97 * std::min(1.0, ratio);
  const double half_width = quality / cutoff;  // in input samples

  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out, 0.0);

  for (std::size_t m = 0; m < n_out; ++m) {
    const double center = static_cast<double>(m) / ratio;
    const long lo = static_cast<long>(std::ceil(center - half_width));
    const long hi = static_cast<long>(std::floor(center + half_width));
    double acc = 0.0;
    double wsum = 0.0;
    for (long k = std::max(0L, lo); k <= std::min(static_cast<long>(n_in) - 1, hi); ++k) {
      const double x = static_cast<double>(k) - center;
      const double sx = kPi * cutoff * x;
      const double sinc = std::abs(sx) < 1e-12 ? 1.0 : std::sin(sx) / sx;
      const double win = 0.5 + 0.5 * std::cos(kPi * x / half_width);  // Hann taper
      const double w = sinc * win;
      acc += w * clip.samples[static_cast<std::size_t>(k)];
      wsum += w;
    }
    out.samples[m] = wsum > 1e-12 ? acc / wsum : 0.0;
  }
  return out;
}

namespace {

// Merges touching same-label intervals and validates ordering.
LabelTrack finalize_track(std::vector<LabelInterval> intervals) {
  std::sort(intervals.begin(), intervals.end(),
            [](const LabelInterval& a, const LabelInterval& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < intervals.size(); ++i) {
    if (intervals[i].start < intervals[i - 1].end - 1e-12) {
      throw ParseError(strfmt("overlapping intervals at %.6f", intervals[i].start));
    }
  }
  LabelTrack track;
  for (const LabelInterval& iv : intervals) {
    if (!track.intervals.empty() && track.intervals.back().vocal == iv.vocal &&
        std::abs(track.intervals.back().end - iv.start) < 1e-9) {
      track.intervals.back().end = iv.end;
    } else {
      track.intervals.push_back(iv);
    }
  }
  return track;
}

}  // namespace

LabelTrack parse_lab(const std::string& path, const std::set<std::string>& vocal_aliases) {
  std::string text = read_text_file(path);
  std::vector<LabelInterval> intervals;
  int lineno = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    double start = 0.0, end = 0.0;
    char label[256];
    if (std::sscanf(line.c_str(), "%lf %lf %255s", &start, &end, label) != 3) {
      throw ParseError(strfmt("%s:%d: expected 'start end label'", path.c_str(), lineno));
    }
    if (!(start >= 0.0) || !(start < end)) {
      throw ParseError(strfmt("%s:%d: bad interval [%g, %g)", path.c_str(), lineno, start, end));
    }
    intervals.push_back({start, end, vocal_aliases.count(label) > 0});
  }
  try {
    return finalize_track(std::move(intervals));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_lab(const std::string& path, const LabelTrack& track) {
  std::string out;
  for (const LabelInterval& iv : track.intervals) {
    out += strfmt("%.6f %.6f %s\n", iv.start, iv.end, iv.vocal ? "sing" : "nosing");
  }
  write_text_file(path, out);
}

LabelTrack activations_to_labels(const std::vector<InstrumentActivation>& activations,
                                 const std::set<std::string>& vocal_instruments) {
  // Union of vocal intervals via boundary sweep; everything else is a gap.
  std::vector<std::pair<double, double>> vocal;
  for (const InstrumentActivation& a : activations) {
    if (!(a.start >= 0.0) || !(a.start < a.end)) {
      throw ParseError(strfmt("bad activation interval [%g, %g) for '%s'", a.start, a.end,
                              a.instrument.c_str()));
    }
    if (vocal_instruments.count(a.instrument) > 0) vocal.emplace_back(a.start, a.end);
  }
  std::sort(vocal.begin(), vocal.end());
  LabelTrack track;
  for (const auto& [s, e] : vocal) {
    if (!track.intervals.empty() && s <= track.intervals.back().end + 1e-12) {
      track.intervals.back().end = std::max(track.intervals.back().end, e);
    } else {
      track.intervals.push_back({s, e, true});
    }
  }
  return track;
}

std::vector<InstrumentActivation> parse_activation_csv(const std::string& path) {
  std::string text = read_text_file(path);
  std::vector<InstrumentActivation> out;
  int lineno = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty()) continue;
    if (lineno == 1) continue;  // header row
    auto parts = split(line, ',');
    if (parts.size() != 3) {
      throw ParseError(strfmt("%s:%d: expected 'instrument,start,end'", path.c_str(), lineno));
    }
    InstrumentActivation a;
    a.instrument = trim(parts[0]);
    try {
      a.start = std::stod(trim(parts[1]));
      a.end = std::stod(trim(parts[2]));
    } catch (const std::exception&) {
      throw ParseError(strfmt("%s:%d: non-numeric bounds", path.c_str(), lineno));
    }
    out.push_back(a);
  }
  return out;
}

FrameLabels labels_to_frames(const LabelTrack& track, double frame_rate,
                             std::size_t n_frames) {
  if (!(frame_rate > 0.0)) throw ValueError("labels_to_frames: frame_rate must be positive");
  if (n_frames == 0) throw ValueError("labels_to_frames: n_frames must be positive");
  FrameLabels out;
  out.frame_rate = frame_rate;
  out.labels.assign(n_frames, 0);
  std::size_t iv = 0;
  for (std::size_t i = 0; i < n_frames; ++i) {
    const double center = (static_cast<double>(i) + 0.5) / frame_rate;
    while (iv < track.intervals.size() && track.intervals[iv].end <= center) ++iv;
    if (iv < track.intervals.size() && track.intervals[iv].start <= center &&
        center < track.intervals[iv].end && track.intervals[iv].vocal) {
      out.labels[i] = 1;
    }
  }
  return out;
}

}  // namespace vdlab
