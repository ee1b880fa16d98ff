#pragma once

// Scenario data model: nodes, time-indexed channel frames, JSON
// serialization, path loss heatmaps, modeled-vs-sounded validation and
// the normalized cross-correlation similarity metric.

#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "chanem/channel.hpp"
#include "chanem/sounder.hpp"
#include "chanem/units.hpp"

#include "json.hpp"

namespace chanem {

inline constexpr int kScenarioSchemaVersion = 1;

struct Mobility {
  double speed_mps = 0.0;
  std::vector<std::array<double, 3>> waypoints;
};

struct ScenarioNode {
  std::string id;
  std::string label;
  std::optional<std::array<double, 3>> position;  // meters
  std::optional<Mobility> mobility;
};

struct ScenarioMetadata {
  double center_frequency_hz = 0.0;
  double bandwidth_hz = 0.0;
  double duration_s = 0.0;
};

struct Scenario {
  std::vector<ScenarioNode> nodes;
  std::vector<ChannelFrame> frames;
  ScenarioMetadata metadata;

  bool has_node(const std::string& id) const {
    for (const auto& n : nodes)
      if (n.id == id) return true;
    return false;
  }

  void validate() const {
    for (std::size_t k = 1; k < frames.size(); ++k)
      if (frames[k].timestamp_ms != frames[k - 1].timestamp_ms + 1)
        throw std::invalid_argument("frame timestamps must advance in 1 ms steps");
    for (const auto& f : frames)
      for (const auto& [link, taps] : f.links) {
        if (!has_node(link.first) || !has_node(link.second))
          throw std::invalid_argument("link references undeclared node " +
                                      link.first + "->" + link.second);
        taps.validate();
      }
  }
};

// --------------------------- JSON serialization ----------------------------

inline nlohmann::json tapset_to_json(const TapSet& taps) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [idx, gain] : taps.taps)
    j.push_back({idx, gain.real(), gain.imag()});
  return j;
}

inline TapSet tapset_from_json(const nlohmann::json& j) {
  TapSet taps;
  for (const auto& t : j)
    taps.taps[t.at(0).get<std::uint16_t>()] = {t.at(1).get<double>(),
                                               t.at(2).get<double>()};
  return taps;
}

inline nlohmann::json frame_to_json(const ChannelFrame& frame) {
  nlohmann::json j;
  j["timestamp_ms"] = frame.timestamp_ms;
  j["links"] = nlohmann::json::array();
  for (const auto& [link, taps] : frame.links)
    j["links"].push_back({{"tx", link.first},
                          {"rx", link.second},
                          {"taps", tapset_to_json(taps)}});
  return j;
}

inline ChannelFrame frame_from_json(const nlohmann::json& j) {
  ChannelFrame frame;
  frame.timestamp_ms = j.at("timestamp_ms").get<std::uint64_t>();
  for (const auto& l : j.at("links"))
    frame.links[{l.at("tx").get<std::string>(), l.at("rx").get<std::string>()}] =
        tapset_from_json(l.at("taps"));
  return frame;
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["metadata"] = {{"center_frequency_hz", s.metadata.center_frequency_hz},
                   {"bandwidth_hz", s.metadata.bandwidth_hz},
                   {"duration_s", s.metadata.duration_s}};
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : s.nodes) {
    nlohmann::json jn = {{"id", n.id}, {"label", n.label}};
    if (n.position)
      jn["position"] = {(*n.position)[0], (*n.position)[1], (*n.position)[2]};
    if (n.mobility) {
      jn["mobility"] = {{"speed_mps", n.mobility->speed_mps},
                        {"waypoints", nlohmann::json::array()}};
      for (const auto& w : n.mobility->waypoints)
        jn["mobility"]["waypoints"].push_back({w[0], w[1], w[2]});
    }
    j["nodes"].push_back(jn);
  }
  j["frames"] = nlohmann::json::array();
  for (const auto& f : s.frames) j["frames"].push_back(frame_to_json(f));
  return j;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  const int version = j.at("schema_version").get<int>();
  if (version != kScenarioSchemaVersion)
    throw std::runtime_error("unsupported scenario schema version " +
                             std::to_string(version));
  Scenario s;
  const auto& m = j.at("metadata");
  s.metadata.center_frequency_hz = m.value("center_frequency_hz", 0.0);
  s.metadata.bandwidth_hz = m.value("bandwidth_hz", 0.0);
  s.metadata.duration_s = m.value("duration_s", 0.0);
  for (const auto& jn : j.at("nodes")) {
    ScenarioNode n;
    n.id = jn.at("id").get<std::string>();
    n.label = jn.value("label", std::string{});
    if (jn.contains("position"))
      n.position = {{jn["position"][0].get<double>(),
                     jn["position"][1].get<double>(),
                     jn["position"][2].get<double>()}};
    if (jn.contains("mobility")) {
      Mobility mob;
      mob.speed_mps = jn["mobility"].value("speed_mps", 0.0);
      for (const auto& w : jn["mobility"].value("waypoints", nlohmann::json::array()))
        mob.waypoints.push_back({{w[0].get<double>(), w[1].get<double>(),
                                  w[2].get<double>()}});
      n.mobility = mob;
    }
    s.nodes.push_back(n);
  }
  for (const auto& jf : j.at("frames")) s.frames.push_back(frame_from_json(jf));
  s.validate();
  return s;
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << scenario_to_json(s).dump(2) << "\n";
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return scenario_from_json(j);
}

// ------------------------------- heatmap -----------------------------------

struct Heatmap {
  std::vector<std::string> node_ids;
  std::vector<std::vector<double>> loss_db;  // NaN where no link exists
};

/// Path loss per (tx, rx): -20 log10 of the coherent tap-sum magnitude
/// plus the configured base loss. Diagonal and missing links are NaN.
inline Heatmap heatmap(const Scenario& s, std::size_t frame_index,
                       double base_loss_db = 0.0) {
  if (frame_index >= s.frames.size())
    throw std::invalid_argument("frame index out of range");
  const ChannelFrame& frame = s.frames[frame_index];

  Heatmap h;
  for (const auto& n : s.nodes) h.node_ids.push_back(n.id);
  const std::size_t count = h.node_ids.size();
  h.loss_db.assign(count, std::vector<double>(
                              count, std::numeric_limits<double>::quiet_NaN()));
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < count; ++j) {
      if (i == j) continue;
      const auto it = frame.links.find({h.node_ids[i], h.node_ids[j]});
      if (it == frame.links.end()) continue;
      std::complex<double> sum{0.0, 0.0};
      for (const auto& [idx, gain] : it->second.taps) sum += gain;
      h.loss_db[i][j] = -amplitude_to_db(std::abs(sum)) + base_loss_db;
    }
  return h;
}

inline void save_heatmap_csv(const Heatmap& h, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "tx\\rx";
  for (const auto& id : h.node_ids) out << "," << id;
  out << "\n";
  out.precision(10);
  for (std::size_t i = 0; i < h.node_ids.size(); ++i) {
    out << h.node_ids[i];
    for (std::size_t j = 0; j < h.node_ids.size(); ++j) {
      out << ",";
      if (std::isnan(h.loss_db[i][j]))
        out << "";
      else
        out << h.loss_db[i][j];
    }
    out << "\n";
  }
}

// ------------------------------ validation ---------------------------------

struct TapComparison {
  int modeled_index = 0;
  double modeled_gain_db = 0.0;
  bool matched = false;
  double sounded_toa_s = 0.0;
  double sounded_gain_db = 0.0;  // after removing base loss
  double gain_error_db = 0.0;
};

struct ValidationResult {
  std::vector<TapComparison> modeled;
  std::vector<TapStats> unmatched_sounded;
  double max_abs_gain_error_db = 0.0;
  bool all_delays_matched = false;
};

/// Matches sounded taps to a link's modeled taps. Delay alignment is
/// relative to the strongest tap on each side; matching tolerance is one
/// sample period plus one grid cell. Gain errors are reported after
/// adding the base loss back to the sounded gains.
inline ValidationResult validate(const Scenario& s,
                                 const SoundingReport& sounding,
                                 const LinkKey& link, std::size_t frame_index,
                                 double base_loss_db) {
  if (frame_index >= s.frames.size())
    throw std::invalid_argument("frame index out of range");
  const auto it = s.frames[frame_index].links.find(link);
  if (it == s.frames[frame_index].links.end())
    throw std::invalid_argument("link " + link.first + "->" + link.second +
                                " absent from scenario");

  // Modeled delays relative to the strongest modeled tap.
  int strongest_idx = -1;
  double strongest_mag = -1.0;
  for (const auto& [idx, gain] : it->second.taps)
    if (std::abs(gain) > strongest_mag) {
      strongest_mag = std::abs(gain);
      strongest_idx = idx;
    }
  if (strongest_idx < 0)
    throw std::invalid_argument("modeled link has no taps");

  const double tol_s =
      (sounding.sample_rate > 0 ? 1.0 / sounding.sample_rate : 0.0) +
      kTapGridSeconds;

  ValidationResult result;
  std::vector<bool> sounded_used(sounding.taps.size(), false);
  bool all_matched = true;
  for (const auto& [idx, gain] : it->second.taps) {
    if (gain == std::complex<double>(0.0, 0.0)) continue;
    TapComparison cmp;
    cmp.modeled_index = idx;
    cmp.modeled_gain_db = amplitude_to_db(std::abs(gain));
    const double modeled_rel_s =
        (static_cast<int>(idx) - strongest_idx) * kTapGridSeconds;

    double best = tol_s;
    std::size_t best_i = sounding.taps.size();
    for (std::size_t i = 0; i < sounding.taps.size(); ++i) {
      if (sounded_used[i]) continue;
      const double d = std::abs(sounding.taps[i].mean_toa_s - modeled_rel_s);
      if (d <= best) {
        best = d;
        best_i = i;
      }
    }
    if (best_i < sounding.taps.size()) {
      sounded_used[best_i] = true;
      cmp.matched = true;
      cmp.sounded_toa_s = sounding.taps[best_i].mean_toa_s;
      cmp.sounded_gain_db = sounding.taps[best_i].mean_gain_db + base_loss_db;
      cmp.gain_error_db = cmp.sounded_gain_db - cmp.modeled_gain_db;
      result.max_abs_gain_error_db =
          std::max(result.max_abs_gain_error_db, std::abs(cmp.gain_error_db));
    } else {
      all_matched = false;
    }
    result.modeled.push_back(cmp);
  }
  for (std::size_t i = 0; i < sounding.taps.size(); ++i)
    if (!sounded_used[i]) result.unmatched_sounded.push_back(sounding.taps[i]);
  result.all_delays_matched = all_matched;
  return result;
}

inline void save_validation_csv(const ValidationResult& v,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "modeled_index,modeled_gain_db,matched,sounded_toa_s,sounded_gain_db,"
         "gain_error_db\n";
  out.precision(10);
  for (const auto& c : v.modeled)
    out << c.modeled_index << "," << c.modeled_gain_db << ","
        << (c.matched ? 1 : 0) << "," << c.sounded_toa_s << ","
        << c.sounded_gain_db << "," << c.gain_error_db << "\n";
}

// ------------------------------ similarity ---------------------------------

struct Similarity {
  double rho = 0.0;
  long lag = 0;
};

/// Normalized cross-correlation at a single lag, with mean removal and
/// variance normalization. The shorter series is zero-padded to the
/// longer one's length.
inline double similarity_at(std::vector<double> x, std::vector<double> y,
                            long k) {
  const std::size_t n = std::max(x.size(), y.size());
  if (n < 2) throw std::invalid_argument("series must have length >= 2");
  x.resize(n, 0.0);
  y.resize(n, 0.0);

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
  }
  if (vx <= 0.0 || vy <= 0.0)
    throw std::invalid_argument("similarity requires nonzero variance");

  double num = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const long j = static_cast<long>(i) + k;
    if (j < 0 || j >= static_cast<long>(n)) continue;
    num += (x[i] - mx) * (y[static_cast<std::size_t>(j)] - my);
  }
  return num / std::sqrt(vx * vy);
}

/// Signed maximum of rho(k) over |k| <= max_lag, with the argmax lag.
inline Similarity similarity(const std::vector<double>& x,
                             const std::vector<double>& y, long max_lag = 10) {
  Similarity best;
  bool first = true;
  for (long k = -max_lag; k <= max_lag; ++k) {
    const double r = similarity_at(x, y, k);
    if (first || r > best.rho) {
      best.rho = r;
      best.lag = k;
      first = false;
    }
  }
  return best;
}

}  // namespace chanem
