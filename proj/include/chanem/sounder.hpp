#pragma once

// Cross-correlation channel sounding: CIR recovery from a received
// waveform against the known transmitted code, per-frame tap detection,
// gain refinement against the code's own correlation profile, path gain
// conversion and multi-frame statistics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "chanem/sequences.hpp"
#include "chanem/units.hpp"
#include "chanem/waveform.hpp"

#include "json.hpp"

namespace chanem {

struct SounderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Normalized correlation of the received signal against one period of
/// the reference. magnitude[k] = sqrt(h_i[k]^2 + h_q[k]^2).
struct CirEstimate {
  std::vector<double> h_i;
  std::vector<double> h_q;
  std::vector<double> magnitude;
  double sample_rate = 0.0;
  std::size_t period_samples = 0;  // N * samples_per_chip
};

struct DetectedTap {
  double toa_s = 0.0;   // relative to the frame's strongest peak
  double gain_db = 0.0; // 20 log10 |h| at the peak
  long peak_lag = 0;    // absolute lag index
  std::complex<double> gain{0.0, 0.0};
};

struct TapStats {
  long rel_lag = 0;  // sample offset from the frame's strongest peak
  double mean_toa_s = 0.0;
  double mean_gain_db = 0.0;
  double std_gain_db = 0.0;
  std::size_t count = 0;
};

struct SoundingReport {
  std::vector<std::vector<DetectedTap>> frames;
  std::vector<TapStats> taps;
  std::size_t frame_spacing_samples = 0;
  double sample_rate = 0.0;
  // config echo
  double p_t_db = 0.0, g_t_db = 0.0, g_r_db = 0.0;
  double threshold_db = 40.0;
  int min_separation = 2;
};

/// h^I[k] = sum_n r^I(n+k) s^I(n) / (N * samples_per_chip), h^Q likewise.
/// Lags run from 0 to len(received) - period.
inline CirEstimate correlate(const IqWaveform& received,
                             const CodeSequence& reference,
                             int samples_per_chip) {
  if (samples_per_chip < 1)
    throw std::invalid_argument("samples_per_chip must be >= 1");
  const std::size_t period = reference.chips.size() * samples_per_chip;
  if (received.samples.size() < period)
    throw SounderError("received waveform shorter than one reference period");

  std::vector<double> ref;
  ref.reserve(period);
  for (int c : reference.chips)
    for (int s = 0; s < samples_per_chip; ++s) ref.push_back(c);

  CirEstimate cir;
  cir.sample_rate = received.sample_rate;
  cir.period_samples = period;
  const std::size_t lags = received.samples.size() - period + 1;
  cir.h_i.resize(lags);
  cir.h_q.resize(lags);
  cir.magnitude.resize(lags);
  const double denom = static_cast<double>(period);
  for (std::size_t k = 0; k < lags; ++k) {
    double acc_i = 0.0, acc_q = 0.0;
    for (std::size_t n = 0; n < period; ++n) {
      acc_i += received.samples[n + k].real() * ref[n];
      acc_q += received.samples[n + k].imag() * ref[n];
    }
    cir.h_i[k] = acc_i / denom;
    cir.h_q[k] = acc_q / denom;
    cir.magnitude[k] = std::hypot(cir.h_i[k], cir.h_q[k]);
  }
  return cir;
}

/// Per-frame peak picking. Frames are consecutive windows of
/// period_samples lags; local maxima within threshold_db of the frame's
/// strongest peak and at least min_separation samples apart are reported.
inline std::vector<std::vector<DetectedTap>> detect_taps(
    const CirEstimate& cir, double threshold_db_below_peak = 40.0,
    int min_separation = 2) {
  if (cir.magnitude.empty()) throw SounderError("empty CIR estimate");
  const std::size_t period = cir.period_samples;
  const std::size_t frame_count = cir.magnitude.size() / period;

  std::vector<std::vector<DetectedTap>> frames;
  for (std::size_t f = 0; f < frame_count; ++f) {
    const std::size_t begin = f * period;
    const std::size_t end = begin + period;

    std::size_t strongest = begin;
    for (std::size_t k = begin; k < end; ++k)
      if (cir.magnitude[k] > cir.magnitude[strongest]) strongest = k;
    const double peak = cir.magnitude[strongest];
    if (peak <= 0.0) {
      frames.emplace_back();
      continue;
    }
    const double floor = peak * db_to_amplitude(-threshold_db_below_peak);

    std::vector<std::size_t> candidates;
    for (std::size_t k = begin; k < end; ++k) {
      const double m = cir.magnitude[k];
      if (m < floor) continue;
      const double left = (k > begin) ? cir.magnitude[k - 1] : -1.0;
      if (k + 1 < end) {
        if (m >= left && m > cir.magnitude[k + 1]) candidates.push_back(k);
      } else if (m > left) {
        // window edge: only a strictly rising value counts as a peak, so a
        // flat sidelobe plateau does not get promoted
        candidates.push_back(k);
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) {
                       return cir.magnitude[a] > cir.magnitude[b];
                     });
    std::vector<std::size_t> kept;
    for (std::size_t k : candidates) {
      bool ok = true;
      for (std::size_t other : kept)
        if (std::llabs(static_cast<long long>(k) - static_cast<long long>(other)) <
            min_separation) {
          ok = false;
          break;
        }
      if (ok) kept.push_back(k);
    }
    std::sort(kept.begin(), kept.end());

    std::vector<DetectedTap> taps;
    for (std::size_t k : kept) {
      DetectedTap t;
      t.peak_lag = static_cast<long>(k);
      t.toa_s = (static_cast<double>(k) - static_cast<double>(strongest)) /
                cir.sample_rate;
      t.gain = {cir.h_i[k], cir.h_q[k]};
      t.gain_db = amplitude_to_db(cir.magnitude[k]);
      taps.push_back(t);
    }
    frames.push_back(std::move(taps));
  }
  return frames;
}

/// Removes the inter-tap bias of the code's own correlation sidelobes:
/// per frame, solves R g = m where R is the reference's normalized
/// periodic autocorrelation sampled at the detected lag differences.
/// Valid for frames in the periodic steady state of the transmission.
inline void refine_gains(std::vector<std::vector<DetectedTap>>& frames,
                         const CodeSequence& reference, int samples_per_chip,
                         double sample_rate) {
  const std::size_t period = reference.chips.size() * samples_per_chip;
  std::vector<double> ref;
  for (int c : reference.chips)
    for (int s = 0; s < samples_per_chip; ++s) ref.push_back(c);
  std::vector<double> acf(period, 0.0);
  for (std::size_t d = 0; d < period; ++d) {
    double acc = 0.0;
    for (std::size_t n = 0; n < period; ++n) acc += ref[n] * ref[(n + d) % period];
    acf[d] = acc / static_cast<double>(period);
  }

  for (auto& taps : frames) {
    const std::size_t m = taps.size();
    if (m == 0) continue;
    // R is real (real reference); solve for the complex gains with
    // Gaussian elimination, partial pivoting.
    std::vector<std::vector<double>> a(m, std::vector<double>(m));
    std::vector<std::complex<double>> b(m);
    for (std::size_t i = 0; i < m; ++i) {
      b[i] = taps[i].gain;
      for (std::size_t j = 0; j < m; ++j) {
        const long long d = taps[i].peak_lag - taps[j].peak_lag;
        const std::size_t dd =
            static_cast<std::size_t>(((d % static_cast<long long>(period)) +
                                      static_cast<long long>(period)) %
                                     static_cast<long long>(period));
        a[i][j] = acf[dd];
      }
    }
    for (std::size_t col = 0; col < m; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < m; ++r)
        if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
      if (std::abs(a[piv][col]) < 1e-12) continue;  // leave unrefined
      std::swap(a[col], a[piv]);
      std::swap(b[col], b[piv]);
      for (std::size_t r = 0; r < m; ++r) {
        if (r == col) continue;
        const double factor = a[r][col] / a[col][col];
        for (std::size_t c = col; c < m; ++c) a[r][c] -= factor * a[col][c];
        b[r] -= factor * b[col];
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (std::abs(a[i][i]) < 1e-12) continue;
      const std::complex<double> g = b[i] / a[i][i];
      taps[i].gain = g;
      taps[i].gain_db = amplitude_to_db(std::abs(g));
    }
    (void)sample_rate;
  }
}

/// Path gain per tap: G_p = 20 log10 |h| - P_t - G_t - G_r. Zero
/// magnitude reports -infinity.
inline std::vector<double> path_gains(const std::vector<DetectedTap>& taps,
                                      double p_t_db, double g_t_db,
                                      double g_r_db) {
  std::vector<double> gains;
  gains.reserve(taps.size());
  for (const auto& t : taps) {
    const double mag = std::abs(t.gain);
    if (mag <= 0.0)
      gains.push_back(-std::numeric_limits<double>::infinity());
    else
      gains.push_back(amplitude_to_db(mag) - p_t_db - g_t_db - g_r_db);
  }
  return gains;
}

/// Cross-frame statistics. Taps are matched across frames by their sample
/// offset from the frame's strongest peak, with +-1 sample tolerance.
inline SoundingReport aggregate(std::vector<std::vector<DetectedTap>> frames,
                                std::size_t frame_spacing_samples,
                                double sample_rate) {
  if (frames.empty()) throw SounderError("no frames to aggregate");

  SoundingReport report;
  report.frames = std::move(frames);
  report.frame_spacing_samples = frame_spacing_samples;
  report.sample_rate = sample_rate;

  struct Accum {
    long rel_lag;
    double sum_gain = 0.0, sum_gain_sq = 0.0, sum_toa = 0.0;
    std::size_t count = 0;
  };
  std::vector<Accum> accums;
  for (const auto& taps : report.frames) {
    if (taps.empty()) continue;
    long strongest_lag = taps.front().peak_lag;
    double strongest_mag = std::abs(taps.front().gain);
    for (const auto& t : taps)
      if (std::abs(t.gain) > strongest_mag) {
        strongest_mag = std::abs(t.gain);
        strongest_lag = t.peak_lag;
      }
    for (const auto& t : taps) {
      const long rel = t.peak_lag - strongest_lag;
      Accum* slot = nullptr;
      for (auto& a : accums)
        if (std::labs(a.rel_lag - rel) <= 1) {
          slot = &a;
          break;
        }
      if (!slot) {
        accums.push_back({rel});
        slot = &accums.back();
      }
      slot->sum_gain += t.gain_db;
      slot->sum_gain_sq += t.gain_db * t.gain_db;
      slot->sum_toa += t.toa_s;
      slot->count += 1;
    }
  }
  std::sort(accums.begin(), accums.end(),
            [](const Accum& a, const Accum& b) { return a.rel_lag < b.rel_lag; });
  for (const auto& a : accums) {
    TapStats s;
    s.rel_lag = a.rel_lag;
    s.count = a.count;
    s.mean_gain_db = a.sum_gain / a.count;
    s.mean_toa_s = a.sum_toa / a.count;
    const double var =
        std::max(0.0, a.sum_gain_sq / a.count - s.mean_gain_db * s.mean_gain_db);
    s.std_gain_db = std::sqrt(var);
    report.taps.push_back(s);
  }
  return report;
}

inline void save_report_csv(const SoundingReport& report,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "frame,tap_index,toa_s,gain_db\n";
  out.precision(12);
  for (std::size_t f = 0; f < report.frames.size(); ++f) {
    const auto& taps = report.frames[f];
    for (std::size_t i = 0; i < taps.size(); ++i)
      out << f << "," << i << "," << taps[i].toa_s << "," << taps[i].gain_db
          << "\n";
  }
}

inline nlohmann::json report_to_json(const SoundingReport& report) {
  nlohmann::json j;
  j["frame_spacing_samples"] = report.frame_spacing_samples;
  j["sample_rate"] = report.sample_rate;
  j["config"] = {{"p_t_db", report.p_t_db},
                 {"g_t_db", report.g_t_db},
                 {"g_r_db", report.g_r_db},
                 {"threshold_db", report.threshold_db},
                 {"min_separation", report.min_separation}};
  j["taps"] = nlohmann::json::array();
  for (const auto& t : report.taps)
    j["taps"].push_back({{"rel_lag", t.rel_lag},
                         {"mean_toa_s", t.mean_toa_s},
                         {"mean_gain_db", t.mean_gain_db},
                         {"std_gain_db", t.std_gain_db},
                         {"count", t.count}});
  j["frames"] = nlohmann::json::array();
  for (const auto& taps : report.frames) {
    nlohmann::json jf = nlohmann::json::array();
    for (const auto& t : taps)
      jf.push_back({{"toa_s", t.toa_s},
                    {"gain_db", t.gain_db},
                    {"peak_lag", t.peak_lag}});
    j["frames"].push_back(jf);
  }
  return j;
}

inline SoundingReport report_from_json(const nlohmann::json& j) {
  SoundingReport report;
  report.frame_spacing_samples = j.at("frame_spacing_samples").get<std::size_t>();
  report.sample_rate = j.at("sample_rate").get<double>();
  for (const auto& jt : j.at("taps")) {
    TapStats s;
    s.rel_lag = jt.at("rel_lag").get<long>();
    s.mean_toa_s = jt.at("mean_toa_s").get<double>();
    s.mean_gain_db = jt.at("mean_gain_db").get<double>();
    s.std_gain_db = jt.at("std_gain_db").get<double>();
    s.count = jt.at("count").get<std::size_t>();
    report.taps.push_back(s);
  }
  for (const auto& jf : j.at("frames")) {
    std::vector<DetectedTap> taps;
    for (const auto& jt : jf) {
      DetectedTap t;
      t.toa_s = jt.at("toa_s").get<double>();
      t.gain_db = jt.at("gain_db").get<double>();
      t.peak_lag = jt.at("peak_lag").get<long>();
      t.gain = std::polar(db_to_amplitude(t.gain_db), 0.0);
      taps.push_back(t);
    }
    report.frames.push_back(std::move(taps));
  }
  return report;
}

struct SoundingOptions {
  double threshold_db = 40.0;
  int min_separation = 2;
  bool refine = true;
  std::size_t drop_head_frames = 0;
  std::size_t drop_tail_frames = 0;
};

/// Full receive-side pipeline: correlate, detect per frame, optionally
/// refine gains and drop transient edge frames, then aggregate.
inline SoundingReport sound(const IqWaveform& received,
                            const CodeSequence& reference, int samples_per_chip,
                            const SoundingOptions& opts = {}) {
  const CirEstimate cir = correlate(received, reference, samples_per_chip);
  auto frames = detect_taps(cir, opts.threshold_db, opts.min_separation);
  if (opts.drop_head_frames + opts.drop_tail_frames >= frames.size())
    throw SounderError("not enough frames after dropping edges");
  frames.erase(frames.begin(),
               frames.begin() + static_cast<long>(opts.drop_head_frames));
  frames.resize(frames.size() - opts.drop_tail_frames);
  if (opts.refine)
    refine_gains(frames, reference, samples_per_chip, received.sample_rate);
  SoundingReport report =
      aggregate(std::move(frames), cir.period_samples, cir.sample_rate);
  report.threshold_db = opts.threshold_db;
  report.min_separation = opts.min_separation;
  return report;
}

}  // namespace chanem
