#pragma once

// Complex baseband waveforms: BPSK modulation of code sequences, raw
// `.iq` file I/O (interleaved float32 I,Q, little-endian) and seedable
// AWGN.

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "chanem/sequences.hpp"
#include "chanem/units.hpp"

namespace chanem {

struct IqWaveform {
  std::vector<std::complex<double>> samples;
  double sample_rate = 0.0;  // Hz
  std::string label;

  double duration_s() const {
    return sample_rate > 0 ? samples.size() / sample_rate : 0.0;
  }
};

struct WaveformIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// BPSK modulation: each chip c becomes (c + 0j) held for samples_per_chip
/// samples, the whole sequence repeated `repetitions` times. Unit amplitude.
inline IqWaveform modulate_bpsk(const CodeSequence& seq, double sample_rate,
                                int samples_per_chip, int repetitions) {
  if (sample_rate <= 0) throw std::invalid_argument("sample_rate must be > 0");
  if (samples_per_chip < 1)
    throw std::invalid_argument("samples_per_chip must be >= 1");
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");

  IqWaveform w;
  w.sample_rate = sample_rate;
  w.samples.reserve(seq.chips.size() * samples_per_chip * repetitions);
  for (int r = 0; r < repetitions; ++r)
    for (int c : seq.chips)
      for (int s = 0; s < samples_per_chip; ++s)
        w.samples.emplace_back(static_cast<double>(c), 0.0);
  w.label = "bpsk " + seq.params;
  return w;
}

namespace detail {

inline void put_f32_le(std::ofstream& out, float v) {
  const auto u = std::bit_cast<std::uint32_t>(v);
  const char bytes[4] = {static_cast<char>(u & 0xFF),
                         static_cast<char>((u >> 8) & 0xFF),
                         static_cast<char>((u >> 16) & 0xFF),
                         static_cast<char>((u >> 24) & 0xFF)};
  out.write(bytes, 4);
}

inline float get_f32_le(const unsigned char* p) {
  const std::uint32_t u = std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
                          (std::uint32_t(p[2]) << 16) |
                          (std::uint32_t(p[3]) << 24);
  return std::bit_cast<float>(u);
}

}  // namespace detail

/// Writes interleaved I,Q as IEEE-754 binary32, little-endian.
inline void save_iq_file(const IqWaveform& wave, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WaveformIoError("cannot open " + path + " for writing");
  for (const auto& s : wave.samples) {
    detail::put_f32_le(out, static_cast<float>(s.real()));
    detail::put_f32_le(out, static_cast<float>(s.imag()));
  }
  if (!out) throw WaveformIoError("write failed: " + path);
}

inline IqWaveform load_iq_file(const std::string& path, double sample_rate) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw WaveformIoError("cannot open " + path);
  const std::streamoff bytes = in.tellg();
  if (bytes % 8 != 0) {
    const auto nfloats = bytes / 4;
    throw WaveformIoError(path + ": truncated: " + std::to_string(nfloats) +
                          " floats");
  }
  in.seekg(0);
  std::vector<unsigned char> buf(static_cast<std::size_t>(bytes));
  if (bytes > 0) in.read(reinterpret_cast<char*>(buf.data()), bytes);
  if (!in) throw WaveformIoError("read failed: " + path);

  IqWaveform w;
  w.sample_rate = sample_rate;
  w.label = "loaded from " + path;
  const std::size_t count = static_cast<std::size_t>(bytes) / 8;
  w.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const float re = detail::get_f32_le(buf.data() + i * 8);
    const float im = detail::get_f32_le(buf.data() + i * 8 + 4);
    if (!std::isfinite(re) || !std::isfinite(im))
      throw WaveformIoError(path + ": non-finite sample at index " +
                            std::to_string(i));
    w.samples.emplace_back(re, im);
  }
  return w;
}

namespace detail {

// Seedable gaussian via Box-Muller on mt19937_64 uniforms; avoids the
// implementation-defined std::normal_distribution so that outputs are
// identical across platforms.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  double uniform_open() {
    // 53-bit uniform in (0, 1]
    return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1p-53;
  }

  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace detail

/// Adds circularly-symmetric complex gaussian noise with total power
/// 10^(noise_power_db/10). Deterministic for a fixed seed.
inline IqWaveform add_awgn(const IqWaveform& wave, double noise_power_db,
                           std::uint64_t seed) {
  IqWaveform out = wave;
  if (noise_power_db == -std::numeric_limits<double>::infinity()) return out;
  const double sigma = std::sqrt(db_to_power(noise_power_db) / 2.0);
  detail::GaussianSource g(seed);
  for (auto& s : out.samples)
    s += std::complex<double>(sigma * g.next(), sigma * g.next());
  return out;
}

/// Plot-ready CSV: index, I, Q.
inline void save_iq_csv(const IqWaveform& wave, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw WaveformIoError("cannot open " + path + " for writing");
  out << "index,i,q\n";
  out.precision(12);
  for (std::size_t i = 0; i < wave.samples.size(); ++i)
    out << i << "," << wave.samples[i].real() << "," << wave.samples[i].imag()
        << "\n";
}

}  // namespace chanem
