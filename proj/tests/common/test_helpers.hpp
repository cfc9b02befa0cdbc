#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include "vdlab/audio_io.hpp"

namespace vdlab::testing {

inline AudioClip make_sine(double freq, double duration, int sample_rate,
                           double amplitude = 0.5, double phase = 0.0) {
  AudioClip clip;
  clip.sample_rate = sample_rate;
  const std::size_t n = static_cast<std::size_t>(duration * sample_rate);
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    clip.samples[i] =
        amplitude * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / sample_rate + phase);
  }
  return clip;
}

inline AudioClip make_silence(double duration, int sample_rate) {
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.assign(static_cast<std::size_t>(duration * sample_rate), 0.0);
  return clip;
}

// Short decaying noise bursts every `period` seconds.
inline AudioClip make_click_train(double period, double duration, int sample_rate,
                                  double amplitude = 0.8, unsigned seed = 42) {
  AudioClip clip = make_silence(duration, sample_rate);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const std::size_t burst = static_cast<std::size_t>(0.004 * sample_rate);
  for (double t = 0.05; t < duration; t += period) {
    const std::size_t start = static_cast<std::size_t>(t * sample_rate);
    for (std::size_t i = 0; i < burst && start + i < clip.samples.size(); ++i) {
      const double env = std::exp(-10.0 * static_cast<double>(i) / burst);
      clip.samples[start + i] += amplitude * env * uni(rng);
    }
  }
  return clip;
}

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("vdlab_test_" + std::to_string(::getpid()) + "_" + std::to_string(rd()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace vdlab::testing
