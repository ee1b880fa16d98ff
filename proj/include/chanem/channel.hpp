#pragma once

// Software surrogate of a 512-tap FIR channel emulator: per-link sparse
// complex FIR convolution on a fixed 10 ns tap grid, multi-transmitter
// superposition, per-millisecond frame switching with overlap-add, base
// loss and noise floor.

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chanem/units.hpp"
#include "chanem/waveform.hpp"

namespace chanem {

inline constexpr double kTapGridSeconds = 10e-9;
inline constexpr int kTapSlots = 512;
inline constexpr int kMaxActiveTaps = 4;
inline constexpr double kMaxExcessDelaySeconds = kTapSlots * kTapGridSeconds;

/// Sparse FIR tap vector on the 10 ns grid: index -> complex linear gain.
/// At most 4 nonzero entries, indices below 512.
struct TapSet {
  std::map<std::uint16_t, std::complex<double>> taps;

  void validate() const {
    int nonzero = 0;
    for (const auto& [idx, gain] : taps) {
      if (idx >= kTapSlots)
        throw std::invalid_argument("tap index " + std::to_string(idx) +
                                    " out of range (max 511)");
      if (!std::isfinite(gain.real()) || !std::isfinite(gain.imag()))
        throw std::invalid_argument("tap gain must be finite");
      if (gain != std::complex<double>(0.0, 0.0)) ++nonzero;
    }
    if (nonzero > kMaxActiveTaps)
      throw std::invalid_argument("tap set has " + std::to_string(nonzero) +
                                  " nonzero taps (max 4)");
  }

  std::vector<double> delays() const {
    std::vector<double> d;
    for (const auto& [idx, gain] : taps) d.push_back(idx * kTapGridSeconds);
    return d;
  }

  std::vector<double> gains_db() const {
    std::vector<double> g;
    for (const auto& [idx, gain] : taps) g.push_back(amplitude_to_db(std::abs(gain)));
    return g;
  }
};

using LinkKey = std::pair<std::string, std::string>;  // (tx, rx)

struct ChannelFrame {
  std::uint64_t timestamp_ms = 0;
  std::map<LinkKey, TapSet> links;
};

struct EmulatorConfig {
  double base_loss_db = 57.55;
  double noise_floor_db = -100.0;
  double sample_rate = 0.0;  // Hz

  bool noise_enabled() const { return std::isfinite(noise_floor_db); }
  static constexpr double kNoiseOff = -std::numeric_limits<double>::infinity();
};

namespace detail {

// FNV-1a, used to derive per-link noise sub-streams from the scenario seed.
inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct ResolvedTap {
  std::size_t delay_samples;
  std::complex<double> gain;
  bool snapped;  // true when the grid delay is not exact at this rate
};

inline std::vector<ResolvedTap> resolve_taps(const TapSet& taps,
                                             double sample_rate) {
  const double sample_period = 1.0 / sample_rate;
  std::vector<ResolvedTap> out;
  for (const auto& [idx, gain] : taps.taps) {
    if (gain == std::complex<double>(0.0, 0.0)) continue;
    const double delay = idx * kTapGridSeconds;
    const auto d = static_cast<std::size_t>(std::llround(delay / sample_period));
    const bool exact =
        std::abs(d * sample_period - delay) < 1e-15 + 1e-9 * sample_period;
    out.push_back({d, gain, !exact});
  }
  return out;
}

}  // namespace detail

/// Applies one link's FIR taps to the input with nearest-sample tap
/// placement and the configured base loss. Output length is input length
/// plus the maximum tap delay in samples.
inline IqWaveform convolve_link(const IqWaveform& input, const TapSet& taps,
                                const EmulatorConfig& config) {
  if (config.sample_rate <= 0)
    throw std::invalid_argument("config.sample_rate must be > 0");
  if (std::abs(input.sample_rate - config.sample_rate) >
      1e-6 * config.sample_rate)
    throw std::invalid_argument("input sample rate does not match emulator config");
  taps.validate();

  const auto resolved = detail::resolve_taps(taps, config.sample_rate);
  std::size_t max_delay = 0;
  bool any_snapped = false;
  for (const auto& t : resolved) {
    max_delay = std::max(max_delay, t.delay_samples);
    any_snapped = any_snapped || t.snapped;
  }

  const double scale = db_to_amplitude(-config.base_loss_db);
  IqWaveform out;
  out.sample_rate = config.sample_rate;
  out.samples.assign(input.samples.size() + max_delay, {0.0, 0.0});
  for (const auto& t : resolved) {
    const std::complex<double> g = t.gain * scale;
    for (std::size_t n = 0; n < input.samples.size(); ++n)
      out.samples[n + t.delay_samples] += g * input.samples[n];
  }
  out.label = input.label;
  if (any_snapped)
    out.label += " [warning: tap delay snapped to sample grid]";
  return out;
}

/// One-frame emulation: for each receiver, the superposition of every
/// transmitter's signal through its link taps, plus AWGN at the configured
/// noise floor. Missing links contribute nothing and are noted in the
/// output label.
inline std::map<std::string, IqWaveform> emulate(
    const std::map<std::string, IqWaveform>& inputs, const ChannelFrame& frame,
    const EmulatorConfig& config, std::uint64_t noise_seed) {
  if (inputs.empty()) throw std::invalid_argument("no input waveforms");
  const std::size_t in_len = inputs.begin()->second.samples.size();
  for (const auto& [node, w] : inputs) {
    if (w.samples.size() != in_len)
      throw std::invalid_argument("input waveforms must share one length");
    if (std::abs(w.sample_rate - config.sample_rate) > 1e-6 * config.sample_rate)
      throw std::invalid_argument("input sample rate does not match emulator config");
  }

  std::set<std::string> receivers;
  for (const auto& [link, taps] : frame.links) receivers.insert(link.second);

  std::map<std::string, IqWaveform> outputs;
  for (const auto& rx : receivers) {
    IqWaveform acc;
    acc.sample_rate = config.sample_rate;
    acc.label = "rx " + rx;
    for (const auto& [tx, wave] : inputs) {
      const auto it = frame.links.find({tx, rx});
      if (it == frame.links.end()) {
        acc.label += " [no taps for link " + tx + "->" + rx + "]";
        continue;
      }
      IqWaveform part = convolve_link(wave, it->second, config);
      if (part.samples.size() > acc.samples.size())
        acc.samples.resize(part.samples.size(), {0.0, 0.0});
      for (std::size_t n = 0; n < part.samples.size(); ++n)
        acc.samples[n] += part.samples[n];
    }
    if (acc.samples.empty()) acc.samples.resize(in_len, {0.0, 0.0});
    if (config.noise_enabled())
      acc = add_awgn(acc, config.noise_floor_db,
                     noise_seed ^ detail::fnv1a(rx));
    outputs[rx] = std::move(acc);
  }
  return outputs;
}

/// Mobile emulation: the input is cut into 1 ms blocks, block k convolved
/// with frames[k], blocks joined by overlap-add of the convolution tails.
inline std::map<std::string, IqWaveform> emulate_mobile(
    const std::map<std::string, IqWaveform>& inputs,
    const std::vector<ChannelFrame>& frames, const EmulatorConfig& config,
    std::uint64_t noise_seed) {
  if (frames.empty()) throw std::invalid_argument("no channel frames");
  for (std::size_t k = 1; k < frames.size(); ++k)
    if (frames[k].timestamp_ms != frames[k - 1].timestamp_ms + 1)
      throw std::invalid_argument("frame timestamps must advance in 1 ms steps");
  if (inputs.empty()) throw std::invalid_argument("no input waveforms");

  const auto block_len =
      static_cast<std::size_t>(std::llround(config.sample_rate * 1e-3));
  const std::size_t in_len = inputs.begin()->second.samples.size();
  if (in_len < block_len * frames.size())
    throw std::invalid_argument("input shorter than the frame span");

  std::set<std::string> receivers;
  for (const auto& f : frames)
    for (const auto& [link, taps] : f.links) receivers.insert(link.second);

  std::map<std::string, IqWaveform> outputs;
  for (const auto& rx : receivers) {
    IqWaveform acc;
    acc.sample_rate = config.sample_rate;
    acc.label = "rx " + rx;
    acc.samples.assign(in_len + kTapSlots, {0.0, 0.0});
    std::size_t used = in_len;
    for (std::size_t k = 0; k < frames.size(); ++k) {
      for (const auto& [tx, wave] : inputs) {
        const auto it = frames[k].links.find({tx, rx});
        if (it == frames[k].links.end()) continue;
        IqWaveform block;
        block.sample_rate = config.sample_rate;
        const std::size_t begin = k * block_len;
        const std::size_t end = (k + 1 == frames.size())
                                    ? in_len
                                    : std::min(in_len, (k + 1) * block_len);
        block.samples.assign(wave.samples.begin() + begin,
                             wave.samples.begin() + end);
        const IqWaveform part = convolve_link(block, it->second, config);
        if (begin + part.samples.size() > acc.samples.size())
          acc.samples.resize(begin + part.samples.size(), {0.0, 0.0});
        for (std::size_t n = 0; n < part.samples.size(); ++n)
          acc.samples[begin + n] += part.samples[n];
        used = std::max(used, begin + part.samples.size());
      }
    }
    acc.samples.resize(used);
    if (config.noise_enabled())
      acc = add_awgn(acc, config.noise_floor_db,
                     noise_seed ^ detail::fnv1a(rx));
    outputs[rx] = std::move(acc);
  }
  return outputs;
}

// ---------------------------------------------------------------------------
// Compact binary layout for channel frames. All integers little-endian.
//
//   magic   "CTF1" (4 bytes)
//   u32     node_count
//   node_count x { u16 name_len, name bytes }
//   u32     frame_count
//   frame_count x {
//     u64   timestamp_ms
//     u32   link_count
//     link_count x {
//       u32 tx_node_index, u32 rx_node_index
//       4 x { u16 grid_index (0xFFFF = unused slot), f32 re, f32 im }
//     }
//   }
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void put_le(std::ofstream& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.put(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::ifstream& in) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == EOF) throw std::runtime_error("unexpected end of frame file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return static_cast<T>(v);
}

inline void put_f32(std::ofstream& out, float v) {
  put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
}

inline float get_f32(std::ifstream& in) {
  return std::bit_cast<float>(get_le<std::uint32_t>(in));
}

}  // namespace detail

inline void save_frames_binary(const std::vector<ChannelFrame>& frames,
                               const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");

  std::vector<std::string> nodes;
  std::map<std::string, std::uint32_t> index;
  for (const auto& f : frames)
    for (const auto& [link, taps] : f.links)
      for (const auto& name : {link.first, link.second})
        if (index.emplace(name, nodes.size()).second) nodes.push_back(name);

  out.write("CTF1", 4);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(nodes.size()));
  for (const auto& name : nodes) {
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(frames.size()));
  for (const auto& f : frames) {
    detail::put_le<std::uint64_t>(out, f.timestamp_ms);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.links.size()));
    for (const auto& [link, taps] : f.links) {
      detail::put_le<std::uint32_t>(out, index.at(link.first));
      detail::put_le<std::uint32_t>(out, index.at(link.second));
      int slot = 0;
      for (const auto& [idx, gain] : taps.taps) {
        if (slot >= kMaxActiveTaps) break;
        detail::put_le<std::uint16_t>(out, idx);
        detail::put_f32(out, static_cast<float>(gain.real()));
        detail::put_f32(out, static_cast<float>(gain.imag()));
        ++slot;
      }
      for (; slot < kMaxActiveTaps; ++slot) {
        detail::put_le<std::uint16_t>(out, 0xFFFF);
        detail::put_f32(out, 0.0f);
        detail::put_f32(out, 0.0f);
      }
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<ChannelFrame> load_frames_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "CTF1")
    throw std::runtime_error(path + ": bad frame file magic");

  const auto node_count = detail::get_le<std::uint32_t>(in);
  std::vector<std::string> nodes(node_count);
  for (auto& name : nodes) {
    const auto len = detail::get_le<std::uint16_t>(in);
    name.resize(len);
    in.read(name.data(), len);
    if (!in) throw std::runtime_error(path + ": bad node table");
  }

  const auto frame_count = detail::get_le<std::uint32_t>(in);
  std::vector<ChannelFrame> frames(frame_count);
  for (auto& f : frames) {
    f.timestamp_ms = detail::get_le<std::uint64_t>(in);
    const auto link_count = detail::get_le<std::uint32_t>(in);
    for (std::uint32_t l = 0; l < link_count; ++l) {
      const auto tx = detail::get_le<std::uint32_t>(in);
      const auto rx = detail::get_le<std::uint32_t>(in);
      if (tx >= nodes.size() || rx >= nodes.size())
        throw std::runtime_error(path + ": node index out of range");
      TapSet taps;
      for (int s = 0; s < kMaxActiveTaps; ++s) {
        const auto idx = detail::get_le<std::uint16_t>(in);
        const float re = detail::get_f32(in);
        const float im = detail::get_f32(in);
        if (idx == 0xFFFF) continue;
        taps.taps[idx] = {re, im};
      }
      f.links[{nodes[tx], nodes[rx]}] = std::move(taps);
    }
  }
  return frames;
}

}  // namespace chanem
