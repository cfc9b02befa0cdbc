#include <doctest.h>

#include <cmath>
#include <complex>

#include "common/test_helpers.hpp"
#include "vdlab/dsp.hpp"
#include "vdlab/errors.hpp"
#include "vdlab/fft.hpp"
#include "vdlab/rng.hpp"

using namespace vdlab;
using vdlab::testing::make_silence;
using vdlab::testing::make_sine;

namespace {

// O(n^2) reference DFT.
std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = -2.0 * M_PI * static_cast<double>(k * t) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("fft matches the naive DFT") {
  Rng rng(5);
  for (std::size_t n : {8, 64, 256}) {
    std::vector<std::complex<double>> x(n);
    for (auto& v : x) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    std::vector<std::complex<double>> fast = x;
    fft_inplace(fast, false);
    const auto slow = naive_dft(x);
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(std::abs(fast[k] - slow[k]) < 1e-9 * static_cast<double>(n));
    }
  }
}

TEST_CASE("fft inverse round trip") {
  Rng rng(6);
  std::vector<std::complex<double>> x(128);
  for (auto& v : x) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  auto y = x;
  fft_inplace(y, false);
  fft_inplace(y, true);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) < 1e-12);
}

TEST_CASE("fft rejects non power of two") {
  std::vector<std::complex<double>> x(12);
  CHECK_THROWS_AS(fft_inplace(x, false), ValueError);
}

TEST_CASE("stft peak bin of a 220 Hz sine is round(220*1024/22050) = 10") {
  const Spectrogram spec = stft(make_sine(220.0, 1.0, 22050), 1024, 315);
  for (std::size_t t = 0; t < spec.n_frames(); ++t) {
    std::size_t argmax = 0;
    for (std::size_t k = 1; k < spec.n_bins(); ++k) {
      if (spec.magnitudes(t, k) > spec.magnitudes(t, argmax)) argmax = k;
    }
    CHECK(argmax == 10);
  }
}

TEST_CASE("stft of silence is all zero") {
  const Spectrogram spec = stft(make_silence(0.5, 22050), 1024, 315);
  for (double v : spec.magnitudes.data()) CHECK(v == 0.0);
}

TEST_CASE("stft frame count formula") {
  // floor((44100 - 1024) / 315) + 1 = 137.
  const Spectrogram spec = stft(make_silence(2.0, 22050), 1024, 315);
  CHECK(spec.n_frames() == 137);
  CHECK(spec.n_bins() == 513);
  CHECK(spec.frame_rate == doctest::Approx(70.0));
}

TEST_CASE("stft rejects short clips and bad hops") {
  CHECK_THROWS_AS(stft(make_silence(0.01, 22050), 1024, 315), ValueError);
  CHECK_THROWS_AS(stft(make_silence(1.0, 22050), 1000, 315), ValueError);
  CHECK_THROWS_AS(stft(make_silence(1.0, 22050), 1024, 0), ValueError);
}

TEST_CASE("istft reconstructs the interior of a clip") {
  const AudioClip in = make_sine(440.0, 1.0, 22050, 0.4);
  const ComplexSpectrogram spec = stft_complex(in, 1024, 256);
  const AudioClip out = istft(spec);
  REQUIRE(out.samples.size() == in.samples.size());
  // Interior samples covered by full window overlap reconstruct exactly.
  for (std::size_t i = 2048; i + 4096 < in.samples.size(); ++i) {
    CHECK(out.samples[i] == doctest::Approx(in.samples[i]).epsilon(1e-6));
  }
}

TEST_CASE("white-noise STFT power grows linearly with clip length") {
  Rng rng(17);
  std::vector<double> lengths = {1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> powers;
  for (double len : lengths) {
    AudioClip clip;
    clip.sample_rate = 22050;
    clip.samples.resize(static_cast<std::size_t>(len * 22050));
    for (double& s : clip.samples) s = rng.uniform(-1.0, 1.0);
    const Spectrogram spec = stft(clip, 1024, 315);
    double total = 0.0;
    for (double v : spec.magnitudes.data()) total += v * v;
    powers.push_back(total);
  }
  // Least-squares line fit; R^2 must exceed 0.99.
  const double n = static_cast<double>(lengths.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    sx += lengths[i];
    sy += powers[i];
    sxx += lengths[i] * lengths[i];
    sxy += lengths[i] * powers[i];
    syy += powers[i] * powers[i];
  }
  const double r_num = n * sxy - sx * sy;
  const double r2 = r_num * r_num / ((n * sxx - sx * sx) * (n * syy - sy * sy));
  CHECK(r2 > 0.99);
}

TEST_CASE("mel scale formula") {
  CHECK(mel_from_hz(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  CHECK(mel_from_hz(700.0) == doctest::Approx(781.18).epsilon(1e-4));
  CHECK(mel_from_hz(0.0) == 0.0);
  CHECK(hz_from_mel(mel_from_hz(1234.5)) == doctest::Approx(1234.5));
}

TEST_CASE("mel filterbank rows are triangular with one local maximum") {
  const MelFilterbank bank = mel_filterbank(40, 0.0, 11025.0, 1024, 22050);
  CHECK(bank.weights.rows() == 40);
  CHECK(bank.weights.cols() == 513);
  for (std::size_t m = 0; m < bank.weights.rows(); ++m) {
    int maxima = 0;
    for (std::size_t k = 1; k + 1 < bank.weights.cols(); ++k) {
      const double prev = bank.weights(m, k - 1);
      const double cur = bank.weights(m, k);
      const double next = bank.weights(m, k + 1);
      if (cur > prev && cur >= next) ++maxima;
      CHECK(cur >= 0.0);
    }
    CHECK(maxima == 1);
  }
}

TEST_CASE("mel filterbank rejects too many bands") {
  CHECK_THROWS_AS(mel_filterbank(400, 0.0, 11025.0, 1024, 22050), ValueError);
  CHECK_THROWS_AS(mel_filterbank(10, 5000.0, 4000.0, 1024, 22050), ValueError);
}

TEST_CASE("mel spectrogram floor and log law") {
  const MelFilterbank bank = mel_filterbank(40, 0.0, 11025.0, 1024, 22050);
  const Spectrogram zero = stft(make_silence(1.0, 22050), 1024, 315);
  const MelSpectrogram mz = mel_spectrogram(zero, bank, 1e-10);
  for (double v : mz.values.data()) CHECK(v == doctest::Approx(-100.0));

  Spectrogram spec = stft(make_sine(440.0, 1.0, 22050, 0.3), 1024, 315);
  const MelSpectrogram a = mel_spectrogram(spec, bank, 1e-10);
  for (double& v : spec.magnitudes.data()) v *= 10.0;
  const MelSpectrogram b = mel_spectrogram(spec, bank, 1e-10);
  for (std::size_t i = 0; i < a.values.data().size(); ++i) {
    if (a.values.data()[i] > -99.0) {  // above the floor
      CHECK(b.values.data()[i] - a.values.data()[i] == doctest::Approx(20.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("single active bin lights only the bands containing it") {
  const MelFilterbank bank = mel_filterbank(40, 0.0, 11025.0, 1024, 22050);
  Spectrogram spec;
  spec.magnitudes = Matrix(1, 513);
  spec.frame_rate = 70.0;
  spec.bin_hz = 22050.0 / 1024.0;
  const std::size_t active_bin = 100;
  spec.magnitudes(0, active_bin) = 1.0;
  const MelSpectrogram mel = mel_spectrogram(spec, bank, 1e-10);
  for (std::size_t m = 0; m < 40; ++m) {
    const bool touched = bank.weights(m, active_bin) > 0.0;
    if (touched) {
      CHECK(mel.values(0, m) > -100.0);
    } else {
      CHECK(mel.values(0, m) == doctest::Approx(-100.0));
    }
  }
}

TEST_CASE("mfcc of a spectrally flat frame is zero beyond c0") {
  MelSpectrogram mel;
  mel.values = Matrix(3, 40, 5.0);
  mel.frame_rate = 70.0;
  const Matrix coeffs = mfcc(mel, 30);
  CHECK(coeffs.cols() == 30);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(coeffs(t, 0) == doctest::Approx(5.0 * std::sqrt(40.0)));
    for (std::size_t k = 1; k < 30; ++k) CHECK(coeffs(t, k) == doctest::Approx(0.0));
  }
}

TEST_CASE("orthonormal DCT round trips random frames within 1e-9") {
  Rng rng(9);
  const int n_mels = 32;
  MelSpectrogram mel;
  mel.values = Matrix(8, n_mels);
  for (double& v : mel.values.data()) v = rng.uniform(-50.0, 10.0);
  const Matrix coeffs = mfcc(mel, n_mels);  // full basis
  // Inverse via the transpose of the same orthonormal basis.
  for (std::size_t t = 0; t < 8; ++t) {
    for (int n = 0; n < n_mels; ++n) {
      double acc = 0.0;
      for (int k = 0; k < n_mels; ++k) {
        const double scale = k == 0 ? std::sqrt(1.0 / n_mels) : std::sqrt(2.0 / n_mels);
        acc += coeffs(t, static_cast<std::size_t>(k)) * scale *
               std::cos(M_PI * (n + 0.5) * k / n_mels);
      }
      CHECK(std::abs(acc - mel.values(t, static_cast<std::size_t>(n))) < 1e-9);
    }
  }
}

TEST_CASE("delta of a linear track is the slope") {
  Matrix track(10, 2);
  for (std::size_t t = 0; t < 10; ++t) {
    track(t, 0) = static_cast<double>(t);
    track(t, 1) = 3.0;
  }
  const Matrix d = delta(track, 3);
  for (std::size_t t = 1; t + 1 < 10; ++t) {
    CHECK(d(t, 0) == doctest::Approx(1.0));
    CHECK(d(t, 1) == doctest::Approx(0.0));
  }
}

TEST_CASE("delta rejects bad spans") {
  Matrix track(4, 1);
  CHECK_THROWS_AS(delta(track, 4), ValueError);
  CHECK_THROWS_AS(delta(track, 5), ValueError);
}

TEST_CASE("median_filter_1d enumerated example with edge replication") {
  const std::vector<double> in = {1, 0, 1, 0, 1};
  const std::vector<double> out = median_filter_1d(in, 3);
  CHECK(out == std::vector<double>{1, 1, 0, 1, 1});
}

TEST_CASE("median_filter_1d window 1 is identity, constants unchanged") {
  const std::vector<double> in = {3, 1, 4, 1, 5};
  CHECK(median_filter_1d(in, 1) == in);
  const std::vector<double> c(7, 2.5);
  CHECK(median_filter_1d(c, 5) == c);
  CHECK_THROWS_AS(median_filter_1d(in, 4), ValueError);
}

TEST_CASE("median_filter_1d window 3 is idempotent on binary input") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> x(60);
    for (double& v : x) v = rng.uniform() < 0.5 ? 1.0 : 0.0;
    const auto once = median_filter_1d(x, 3);
    CHECK(median_filter_1d(once, 3) == once);
  }
}

TEST_CASE("median_filter_2d degenerates and removes spikes") {
  Matrix row(1, 5);
  for (std::size_t i = 0; i < 5; ++i) row(0, i) = static_cast<double>(i % 2);
  const Matrix f = median_filter_2d(row, 3, 1);
  const std::vector<double> expect = median_filter_1d(row.data(), 3);
  for (std::size_t i = 0; i < 5; ++i) CHECK(f(0, i) == expect[i]);

  Matrix grid(5, 5, 1.0);
  const Matrix g = median_filter_2d(grid, 3, 3);
  for (double v : g.data()) CHECK(v == 1.0);

  Matrix spike(5, 5, 1.0);
  spike(2, 2) = 100.0;
  const Matrix s = median_filter_2d(spike, 3, 1);
  CHECK(s(2, 2) == 1.0);
  CHECK_THROWS_AS(median_filter_2d(spike, 2, 1), ValueError);
}

namespace {

double biquad_response(const BiquadCoeffs& c, double freq, int sample_rate) {
  const std::complex<double> z = std::polar(1.0, -2.0 * M_PI * freq / sample_rate);
  const std::complex<double> num = c.b0 + c.b1 * z + c.b2 * z * z;
  const std::complex<double> den = 1.0 + c.a1 * z + c.a2 * z * z;
  return std::abs(num / den);
}

double steady_state_amplitude(const BiquadCoeffs& c, double freq, int sample_rate) {
  const AudioClip in = make_sine(freq, 1.0, sample_rate, 1.0);
  const std::vector<double> out = biquad_apply(c, in.samples);
  double peak = 0.0;
  for (std::size_t i = out.size() / 2; i < out.size(); ++i) {
    peak = std::max(peak, std::abs(out[i]));
  }
  return peak;
}

}  // namespace

TEST_CASE("bandpass resonator has unit gain at center") {
  const BiquadCoeffs c = biquad_design(BiquadKind::kBandpassResonator, 1000.0, 200.0, 22050);
  CHECK(biquad_response(c, 1000.0, 22050) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(steady_state_amplitude(c, 1000.0, 22050) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("bandpass resonator attenuates a 4 kHz tone below 0.25 at Q=5") {
  // bandwidth = center / Q = 200 Hz.
  const BiquadCoeffs c = biquad_design(BiquadKind::kBandpassResonator, 1000.0, 200.0, 22050);
  CHECK(biquad_response(c, 4000.0, 22050) < 0.25);
  CHECK(steady_state_amplitude(c, 4000.0, 22050) < 0.25);
}

TEST_CASE("lowpass preserves DC offset") {
  const BiquadCoeffs c = biquad_design(BiquadKind::kLowpass, 2000.0, 0.7071, 22050);
  CHECK(biquad_response(c, 0.0, 22050) == doctest::Approx(1.0).epsilon(1e-9));
  std::vector<double> dc(4000, 0.5);
  const std::vector<double> out = biquad_apply(c, dc);
  CHECK(out.back() == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("biquad designs are stable across the parameter range") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const double center = rng.uniform(20.0, 11000.0);
    const double bw = rng.uniform(10.0, 2000.0);
    const BiquadCoeffs c = biquad_design(BiquadKind::kBandpassResonator, center, bw, 22050);
    CHECK(biquad_is_stable(c));
    // Pole modulus directly: roots of z^2 + a1 z + a2.
    const std::complex<double> disc = std::sqrt(std::complex<double>(c.a1 * c.a1 - 4.0 * c.a2));
    const std::complex<double> r1 = (-c.a1 + disc) / 2.0;
    const std::complex<double> r2 = (-c.a1 - disc) / 2.0;
    CHECK(std::abs(r1) < 1.0);
    CHECK(std::abs(r2) < 1.0);
  }
  CHECK_THROWS_AS(biquad_design(BiquadKind::kLowpass, 12000.0, 0.7, 22050), ValueError);
}
