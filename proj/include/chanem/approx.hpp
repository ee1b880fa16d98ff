#pragma once

// Reduction of ray-traced multipath profiles to emulator-legal tap sets:
// components are snapped to the 10 ns grid, merged coherently per grid
// cell, and clustered on the delay axis down to at most 4 taps. Energy
// beyond the 5.12 us window is folded into the last cluster and flagged.

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chanem/channel.hpp"

#include "json.hpp"

namespace chanem {

struct MultipathComponent {
  double toa_s = 0.0;
  double amplitude = 0.0;  // linear
  double phase_rad = 0.0;

  std::complex<double> gain() const {
    return std::polar(amplitude, phase_rad);
  }
};

struct MultipathProfile {
  std::vector<MultipathComponent> components;  // sorted by toa

  void sort_by_toa() {
    std::stable_sort(components.begin(), components.end(),
                     [](const auto& a, const auto& b) { return a.toa_s < b.toa_s; });
  }
};

struct ApproxResult {
  TapSet taps;
  bool folded_out_of_window = false;
};

struct ProfileParseError : std::runtime_error {
  std::size_t row;
  ProfileParseError(const std::string& msg, std::size_t row_)
      : std::runtime_error(msg), row(row_) {}
};

namespace detail {

struct DelayCell {
  long cell;
  std::complex<double> gain;
};

// Best partition of the sorted cells into at most max_clusters contiguous
// segments, maximizing the total coherent power sum |segment sum|^2.
// Returns segment boundaries as [start, end) index pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> best_contiguous_partition(
    const std::vector<DelayCell>& cells, int max_clusters) {
  const std::size_t n = cells.size();
  std::vector<std::complex<double>> prefix(n + 1, {0.0, 0.0});
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + cells[i].gain;
  const auto seg_power = [&](std::size_t a, std::size_t b) {
    return std::norm(prefix[b] - prefix[a]);
  };

  const int kmax = std::min<int>(max_clusters, static_cast<int>(n));
  constexpr double kNeg = -1.0;
  // dp[m][j]: best power of the first j cells split into exactly m segments
  std::vector<std::vector<double>> dp(kmax + 1, std::vector<double>(n + 1, kNeg));
  std::vector<std::vector<std::size_t>> cut(kmax + 1,
                                            std::vector<std::size_t>(n + 1, 0));
  dp[0][0] = 0.0;
  for (int m = 1; m <= kmax; ++m) {
    for (std::size_t j = static_cast<std::size_t>(m); j <= n; ++j) {
      for (std::size_t i = static_cast<std::size_t>(m) - 1; i < j; ++i) {
        if (dp[m - 1][i] < 0.0) continue;
        const double cand = dp[m - 1][i] + seg_power(i, j);
        if (cand > dp[m][j]) {
          dp[m][j] = cand;
          cut[m][j] = i;
        }
      }
    }
  }
  int best_m = 1;
  for (int m = 2; m <= kmax; ++m)
    if (dp[m][n] > dp[best_m][n]) best_m = m;

  std::vector<std::pair<std::size_t, std::size_t>> segments(best_m);
  std::size_t j = n;
  for (int m = best_m; m >= 1; --m) {
    const std::size_t i = cut[m][j];
    segments[static_cast<std::size_t>(m) - 1] = {i, j};
    j = i;
  }
  return segments;
}

}  // namespace detail

/// Reduces a multipath profile to at most max_taps grid taps. ToAs are
/// normalized so the earliest cluster sits at grid index 0; cluster gains
/// are coherent complex sums; cluster delays are power-weighted centroids
/// snapped to the 10 ns grid.
inline ApproxResult approximate(const MultipathProfile& profile,
                                int max_taps = kMaxActiveTaps) {
  if (profile.components.empty())
    throw std::invalid_argument("multipath profile is empty");
  if (max_taps < 1) throw std::invalid_argument("max_taps must be >= 1");
  for (const auto& c : profile.components) {
    if (c.toa_s < 0) throw std::invalid_argument("component toa must be >= 0");
    if (c.amplitude < 0)
      throw std::invalid_argument("component amplitude must be >= 0");
  }

  double t0 = profile.components.front().toa_s;
  for (const auto& c : profile.components) t0 = std::min(t0, c.toa_s);

  // Coherent merge per grid cell.
  std::map<long, std::complex<double>> by_cell;
  std::complex<double> out_of_window_sum{0.0, 0.0};
  bool folded = false;
  for (const auto& c : profile.components) {
    const long cell = std::lround((c.toa_s - t0) / kTapGridSeconds);
    if (cell >= kTapSlots) {
      out_of_window_sum += c.gain();
      folded = true;
    } else {
      by_cell[cell] += c.gain();
    }
  }

  std::vector<detail::DelayCell> cells;
  cells.reserve(by_cell.size());
  for (const auto& [cell, gain] : by_cell) cells.push_back({cell, gain});

  std::vector<std::pair<std::size_t, std::size_t>> segments;
  if (static_cast<int>(cells.size()) <= max_taps) {
    for (std::size_t i = 0; i < cells.size(); ++i) segments.push_back({i, i + 1});
  } else {
    segments = detail::best_contiguous_partition(cells, max_taps);
  }

  struct Cluster {
    long index;
    std::complex<double> gain;
  };
  std::vector<Cluster> clusters;
  for (const auto& [a, b] : segments) {
    std::complex<double> gain{0.0, 0.0};
    double wsum = 0.0, centroid = 0.0;
    for (std::size_t i = a; i < b; ++i) {
      gain += cells[i].gain;
      const double w = std::norm(cells[i].gain);
      wsum += w;
      centroid += w * cells[i].cell;
    }
    // Zero-power segment: place at its first cell (lowest delay wins).
    const long index =
        (wsum > 0.0) ? std::lround(centroid / wsum) : cells[a].cell;
    clusters.push_back({index, gain});
  }

  if (folded && !clusters.empty()) clusters.back().gain += out_of_window_sum;

  // Re-anchor the earliest cluster at grid index 0.
  const long shift = clusters.front().index;
  ApproxResult result;
  result.folded_out_of_window = folded;
  for (const auto& c : clusters)
    result.taps.taps[static_cast<std::uint16_t>(c.index - shift)] = c.gain;
  result.taps.validate();
  return result;
}

struct TrajectorySampling {
  std::vector<double> offsets_m;
  double spacing_m = 0.0;
  bool exceeds_coherence = false;  // spacing above the 15 m coherence distance
};

inline constexpr double kCoherenceDistanceMeters = 15.0;

/// Spatial trajectory sampling with spacing D = speed * sampling interval.
inline TrajectorySampling sample_trajectory(double speed_mps,
                                            double sampling_interval_s,
                                            double total_time_s) {
  if (speed_mps < 0) throw std::invalid_argument("speed must be >= 0");
  if (sampling_interval_s <= 0)
    throw std::invalid_argument("sampling interval must be > 0");
  TrajectorySampling t;
  t.spacing_m = speed_mps * sampling_interval_s;
  t.exceeds_coherence = t.spacing_m > kCoherenceDistanceMeters;
  const auto steps =
      static_cast<std::size_t>(std::floor(total_time_s / sampling_interval_s + 1e-9));
  for (std::size_t k = 0; k <= steps; ++k)
    t.offsets_m.push_back(static_cast<double>(k) * t.spacing_m);
  return t;
}

// ---------------------------------------------------------------------------
// Profile ingestion. CSV columns: toa_s, amplitude, phase_rad; the header
// names the amplitude unit ("amplitude_linear" or "amplitude_db").
// ---------------------------------------------------------------------------

inline MultipathProfile load_profile_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProfileParseError("cannot open " + path, 0);
  std::string line;
  if (!std::getline(in, line))
    throw ProfileParseError(path + ": empty profile file (row 1)", 1);

  bool amplitude_db;
  if (line.find("amplitude_db") != std::string::npos)
    amplitude_db = true;
  else if (line.find("amplitude_linear") != std::string::npos)
    amplitude_db = false;
  else
    throw ProfileParseError(
        path + ": header must declare amplitude_linear or amplitude_db (row 1)", 1);

  MultipathProfile profile;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f1, f2, f3;
    if (!std::getline(ss, f1, ',') || !std::getline(ss, f2, ',') ||
        !std::getline(ss, f3, ','))
      throw ProfileParseError(
          path + ": expected 3 columns (row " + std::to_string(row) + ")", row);
    try {
      MultipathComponent c;
      c.toa_s = std::stod(f1);
      const double amp = std::stod(f2);
      c.amplitude = amplitude_db ? db_to_amplitude(amp) : amp;
      c.phase_rad = std::stod(f3);
      profile.components.push_back(c);
    } catch (const std::exception&) {
      throw ProfileParseError(
          path + ": malformed number (row " + std::to_string(row) + ")", row);
    }
  }
  profile.sort_by_toa();
  return profile;
}

inline MultipathProfile load_profile_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProfileParseError("cannot open " + path, 0);
  nlohmann::json j;
  in >> j;
  MultipathProfile profile;
  for (const auto& item : j.at("components")) {
    MultipathComponent c;
    c.toa_s = item.at("toa_s").get<double>();
    if (item.contains("amplitude_db"))
      c.amplitude = db_to_amplitude(item.at("amplitude_db").get<double>());
    else
      c.amplitude = item.at("amplitude").get<double>();
    c.phase_rad = item.value("phase_rad", 0.0);
    profile.components.push_back(c);
  }
  profile.sort_by_toa();
  return profile;
}

}  // namespace chanem
