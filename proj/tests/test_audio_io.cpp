#include <doctest.h>

#include <cmath>
#include <complex>
#include <fstream>

#include "common/test_helpers.hpp"
#include "vdlab/audio_io.hpp"
#include "vdlab/errors.hpp"
#include "vdlab/fft.hpp"
#include "vdlab/rng.hpp"
#include "vdlab/util.hpp"

using namespace vdlab;
using vdlab::testing::TempDir;
using vdlab::testing::make_silence;
using vdlab::testing::make_sine;

namespace {

// Peak of the magnitude spectrum, used as an amplitude meter for resample
// checks: measures a sine without caring about phase shifts.
double sine_amplitude(const AudioClip& clip, double freq) {
  std::size_t n = 1;
  while (n * 2 <= clip.samples.size()) n *= 2;
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = {clip.samples[i], 0.0};
  fft_inplace(buf, false);
  const std::size_t bin =
      static_cast<std::size_t>(std::llround(freq * static_cast<double>(n) / clip.sample_rate));
  double best = 0.0;
  for (std::size_t k = bin > 2 ? bin - 2 : 0; k <= bin + 2 && k < n / 2; ++k) {
    best = std::max(best, std::abs(buf[k]));
  }
  // Hann-free rectangular frame: amplitude = 2 |X| / n.
  return 2.0 * best / static_cast<double>(n);
}

void write_raw_pcm16_stereo(const std::string& path, int sample_rate,
                            const std::vector<std::pair<std::int16_t, std::int16_t>>& frames) {
  std::string out;
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  auto u16 = [&](std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
  };
  const std::uint32_t data_len = static_cast<std::uint32_t>(frames.size() * 4);
  out += "RIFF";
  u32(36 + data_len);
  out += "WAVE";
  out += "fmt ";
  u32(16);
  u16(1);
  u16(2);
  u32(static_cast<std::uint32_t>(sample_rate));
  u32(static_cast<std::uint32_t>(sample_rate) * 4);
  u16(4);
  u16(16);
  out += "data";
  u32(data_len);
  for (const auto& [l, r] : frames) {
    u16(static_cast<std::uint16_t>(l));
    u16(static_cast<std::uint16_t>(r));
  }
  write_text_file(path, out);
}

}  // namespace

TEST_CASE("read_wav scales full-scale pcm16 to ~0.99997") {
  TempDir tmp;
  AudioClip clip;
  clip.sample_rate = 8000;
  clip.samples.assign(100, 32767.0 / 32768.0);
  write_wav(tmp.file("full.wav"), clip);
  const AudioClip in = read_wav(tmp.file("full.wav"));
  REQUIRE(in.samples.size() == 100);
  for (double s : in.samples) CHECK(s == doctest::Approx(0.99997).epsilon(1e-4));
}

TEST_CASE("read_wav downmixes stereo by channel mean") {
  TempDir tmp;
  std::vector<std::pair<std::int16_t, std::int16_t>> frames(50, {16384, -16384});
  write_raw_pcm16_stereo(tmp.file("st.wav"), 8000, frames);
  const AudioClip in = read_wav(tmp.file("st.wav"));
  REQUIRE(in.samples.size() == 50);
  for (double s : in.samples) CHECK(s == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("read_wav header consistency") {
  TempDir tmp;
  write_wav(tmp.file("sec.wav"), make_sine(440.0, 1.0, 44100));
  const AudioClip in = read_wav(tmp.file("sec.wav"));
  CHECK(in.sample_rate == 44100);
  CHECK(in.samples.size() == 44100);
}

TEST_CASE("read_wav reports distinct error kinds") {
  TempDir tmp;
  CHECK_THROWS_AS(read_wav(tmp.file("missing.wav")), IoError);

  write_text_file(tmp.file("garbage.wav"), "this is not a riff file at all");
  CHECK_THROWS_AS(read_wav(tmp.file("garbage.wav")), ParseError);

  // 8-bit PCM is a valid WAV we do not support.
  std::string out;
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  auto u16 = [&](std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
  };
  out += "RIFF";
  u32(36 + 4);
  out += "WAVE";
  out += "fmt ";
  u32(16);
  u16(1);
  u16(1);
  u32(8000);
  u32(8000);
  u16(1);
  u16(8);
  out += "data";
  u32(4);
  out += std::string(4, '\x40');
  write_text_file(tmp.file("u8.wav"), out);
  CHECK_THROWS_AS(read_wav(tmp.file("u8.wav")), UnsupportedError);
}

TEST_CASE("pcm16 wav round trip is bit exact") {
  TempDir tmp;
  Rng rng(3);
  AudioClip clip;
  clip.sample_rate = 22050;
  clip.samples.resize(4096);
  for (double& s : clip.samples) {
    s = static_cast<double>(static_cast<int>(rng.index(65536)) - 32768) / 32768.0;
  }
  write_wav(tmp.file("rt.wav"), clip);
  const AudioClip back = read_wav(tmp.file("rt.wav"));
  REQUIRE(back.samples.size() == clip.samples.size());
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    CHECK(back.samples[i] == clip.samples[i]);
  }
}

TEST_CASE("float32 wav reads back") {
  TempDir tmp;
  const AudioClip clip = make_sine(100.0, 0.1, 8000, 0.25);
  write_wav(tmp.file("f32.wav"), clip, WavEncoding::kFloat32);
  const AudioClip back = read_wav(tmp.file("f32.wav"));
  REQUIRE(back.samples.size() == clip.samples.size());
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    CHECK(back.samples[i] == doctest::Approx(clip.samples[i]).epsilon(1e-7));
  }
}

TEST_CASE("resample identity at equal rates") {
  const AudioClip clip = make_sine(440.0, 0.5, 22050);
  const AudioClip out = resample(clip, 22050);
  CHECK(out.samples == clip.samples);
}

TEST_CASE("resample 44100->22050 preserves a 1 kHz sine within 1%") {
  const AudioClip in = make_sine(1000.0, 2.0, 44100, 0.5);
  const AudioClip out = resample(in, 22050);
  CHECK(out.sample_rate == 22050);
  CHECK(std::abs(static_cast<double>(out.samples.size()) / 22050.0 - 2.0) <= 1.0 / 22050.0);
  const double amp_in = sine_amplitude(in, 1000.0);
  const double amp_out = sine_amplitude(out, 1000.0);
  CHECK(amp_out == doctest::Approx(amp_in).epsilon(0.01));
}

TEST_CASE("resample upsamples silence to the exact length") {
  const AudioClip out = resample(make_silence(2.0, 8000), 22050);
  CHECK(out.samples.size() == 44100);
  for (double s : out.samples) CHECK(s == 0.0);
}

TEST_CASE("resample rejects zero target rate") {
  CHECK_THROWS_AS(resample(make_silence(0.1, 8000), 0), ValueError);
}

TEST_CASE("parse_lab maps aliases and merges") {
  TempDir tmp;
  write_text_file(tmp.file("a.lab"), "0.000 12.345 sing\n");
  const LabelTrack t = parse_lab(tmp.file("a.lab"), {"sing"});
  REQUIRE(t.intervals.size() == 1);
  CHECK(t.intervals[0].start == 0.0);
  CHECK(t.intervals[0].end == doctest::Approx(12.345));
  CHECK(t.intervals[0].vocal);

  write_text_file(tmp.file("b.lab"), "0 1 nosing\n1 2 sing\n");
  const LabelTrack u = parse_lab(tmp.file("b.lab"), {"sing"});
  REQUIRE(u.intervals.size() == 2);
  CHECK_FALSE(u.intervals[0].vocal);
  CHECK(u.intervals[1].vocal);

  // Adjacent same-label intervals merge.
  write_text_file(tmp.file("c.lab"), "0 1 sing\n1 2 sing\n");
  CHECK(parse_lab(tmp.file("c.lab"), {"sing"}).intervals.size() == 1);
}

TEST_CASE("parse_lab reports bad lines with numbers") {
  TempDir tmp;
  write_text_file(tmp.file("bad.lab"), "0 1 sing\n3.0 2.0 sing\n");
  try {
    parse_lab(tmp.file("bad.lab"), {"sing"});
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }

  write_text_file(tmp.file("nan.lab"), "zero one sing\n");
  CHECK_THROWS_AS(parse_lab(tmp.file("nan.lab"), {"sing"}), ParseError);

  write_text_file(tmp.file("ovl.lab"), "0 2 sing\n1 3 nosing\n");
  CHECK_THROWS_AS(parse_lab(tmp.file("ovl.lab"), {"sing"}), ParseError);
}

TEST_CASE("activations_to_labels filters and unions") {
  const std::set<std::string> vocal = {"female singer", "male singer"};
  SUBCASE("set filtering") {
    const LabelTrack t = activations_to_labels(
        {{"female singer", 2.0, 5.0}, {"guitar", 0.0, 10.0}}, vocal);
    REQUIRE(t.intervals.size() == 1);
    CHECK(t.intervals[0].start == 2.0);
    CHECK(t.intervals[0].end == 5.0);
  }
  SUBCASE("overlap union") {
    const LabelTrack t = activations_to_labels(
        {{"female singer", 0.0, 2.0}, {"male singer", 1.0, 3.0}}, vocal);
    REQUIRE(t.intervals.size() == 1);
    CHECK(t.intervals[0].start == 0.0);
    CHECK(t.intervals[0].end == 3.0);
  }
  SUBCASE("empty input") {
    CHECK(activations_to_labels({}, vocal).intervals.empty());
  }
}

TEST_CASE("parse_activation_csv reads rows after header") {
  TempDir tmp;
  write_text_file(tmp.file("act.csv"),
                  "instrument,start,end\nfemale singer,2.0,5.0\nguitar,0,10\n");
  const auto rows = parse_activation_csv(tmp.file("act.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].instrument == "female singer");
  CHECK(rows[1].end == 10.0);
}

TEST_CASE("labels_to_frames uses the frame-center rule") {
  LabelTrack t;
  t.intervals.push_back({0.0, 1.0, true});
  const FrameLabels f = labels_to_frames(t, 10.0, 10);
  REQUIRE(f.size() == 10);
  for (std::uint8_t l : f.labels) CHECK(l == 1);

  LabelTrack tiny;
  tiny.intervals.push_back({0.0, 0.04, true});
  for (std::uint8_t l : labels_to_frames(tiny, 10.0, 10).labels) CHECK(l == 0);
}

TEST_CASE("labels_to_frames half-open boundary") {
  // Frame centers 0.05, 0.15, 0.25; the center exactly at the interval end
  // (0.15) falls outside the half-open interval.
  LabelTrack t;
  t.intervals.push_back({0.05, 0.15, true});
  const FrameLabels f = labels_to_frames(t, 10.0, 3);
  REQUIRE(f.size() == 3);
  CHECK(f.labels[0] == 1);
  CHECK(f.labels[1] == 0);
  CHECK(f.labels[2] == 0);
}

TEST_CASE("labels_to_frames output length is always n_frames") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    LabelTrack t;
    double pos = 0.0;
    for (int i = 0; i < 5; ++i) {
      const double start = pos + rng.uniform(0.0, 0.5);
      const double end = start + rng.uniform(0.01, 1.0);
      t.intervals.push_back({start, end, rng.uniform() < 0.5});
      pos = end;
    }
    const std::size_t n = 1 + rng.index(200);
    CHECK(labels_to_frames(t, 70.0, n).size() == n);
  }
}

TEST_CASE("labels_to_frames is monotone under interval growth") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const double start = rng.uniform(0.0, 2.0);
    const double end = start + rng.uniform(0.05, 1.0);
    LabelTrack small, big;
    small.intervals.push_back({start, end, true});
    big.intervals.push_back({std::max(0.0, start - rng.uniform(0.0, 0.5)),
                             end + rng.uniform(0.0, 0.5), true});
    const FrameLabels fs = labels_to_frames(small, 70.0, 300);
    const FrameLabels fb = labels_to_frames(big, 70.0, 300);
    for (std::size_t i = 0; i < fs.size(); ++i) {
      if (fs.labels[i]) CHECK(fb.labels[i]);
    }
  }
}
