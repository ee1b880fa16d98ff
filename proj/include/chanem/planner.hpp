#pragma once

// RF placement planning: per-link RSSI from the dB-domain link budget,
// SINR in linear power, and the exhaustive search over RU pairs
// maximizing the average best SINR across UE test points.

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "chanem/units.hpp"

#include "json.hpp"

namespace chanem {

struct RuParams {
  double tx_power_dbm = 24.0;
  double antenna_gain_dbi = 5.0;
  double attenuation_db = 0.0;
};

struct UeParams {
  double antenna_gain_dbi = 1.1;
  double noise_figure_db = 5.0;
};

struct LinkGainMatrix {
  std::vector<RuParams> rus;
  std::vector<UeParams> ues;
  std::vector<std::vector<double>> path_loss_db;  // R x U
  double thermal_noise_dbm = -174.0;

  std::size_t ru_count() const { return rus.size(); }
  std::size_t ue_count() const { return ues.size(); }

  void validate() const {
    if (path_loss_db.size() != rus.size())
      throw std::invalid_argument("path loss rows must match RU count");
    for (const auto& row : path_loss_db) {
      if (row.size() != ues.size())
        throw std::invalid_argument("path loss columns must match UE count");
      for (double v : row)
        if (!std::isfinite(v))
          throw std::invalid_argument("path loss entries must be finite");
    }
  }
};

/// S_ij = P_RU + G_RU - A_RU - L_ij + G_UE, all in the dB domain. dBm.
inline double rssi(const LinkGainMatrix& m, std::size_t ru, std::size_t ue) {
  const RuParams& r = m.rus.at(ru);
  const UeParams& u = m.ues.at(ue);
  return r.tx_power_dbm + r.antenna_gain_dbi - r.attenuation_db -
         m.path_loss_db[ru][ue] + u.antenna_gain_dbi;
}

/// SINR of the serving RU at a UE, with every other active RU as an
/// interferer. Computed in linear power, returned in dB.
inline double sinr(const LinkGainMatrix& m, std::size_t serving, std::size_t ue,
                   const std::vector<std::size_t>& active) {
  bool serving_active = false;
  for (std::size_t u : active) serving_active = serving_active || (u == serving);
  if (!serving_active)
    throw std::invalid_argument("serving RU must be in the active set");

  const double signal = dbm_to_mw(rssi(m, serving, ue));
  double denom = dbm_to_mw(m.thermal_noise_dbm) *
                 db_to_power(m.ues[ue].noise_figure_db);
  for (std::size_t u : active)
    if (u != serving) denom += dbm_to_mw(rssi(m, u, ue));
  return 10.0 * std::log10(signal / denom);
}

struct PlanResult {
  std::size_t best_p = 0, best_q = 0;
  double best_score_db = -std::numeric_limits<double>::infinity();
  // (p, q, score) for every unordered pair, heatmap-ready
  std::vector<std::tuple<std::size_t, std::size_t, double>> table;
};

/// Exhaustive search over all C(R,2) RU pairs. Per pair, each UE takes
/// the better of the two SINRs (the other pair member interfering); the
/// score is the average of those dB values across UEs. Ties break to the
/// lexicographically smallest pair.
inline PlanResult plan_exhaustive(const LinkGainMatrix& m) {
  m.validate();
  const std::size_t R = m.ru_count();
  const std::size_t U = m.ue_count();
  if (R < 2) throw std::invalid_argument("need at least two RU locations");
  if (U == 0) throw std::invalid_argument("need at least one UE test point");

  PlanResult result;
  for (std::size_t p = 0; p < R; ++p) {
    for (std::size_t q = p + 1; q < R; ++q) {
      const std::vector<std::size_t> active{p, q};
      double sum = 0.0;
      for (std::size_t j = 0; j < U; ++j) {
        const double gp = sinr(m, p, j, active);
        const double gq = sinr(m, q, j, active);
        sum += std::max(gp, gq);
      }
      const double score = sum / static_cast<double>(U);
      result.table.emplace_back(p, q, score);
      if (score > result.best_score_db) {
        result.best_score_db = score;
        result.best_p = p;
        result.best_q = q;
      }
    }
  }
  return result;
}

// --------------------------------- I/O -------------------------------------

/// CSV: one row per RU, one dB path-loss column per UE. No header.
inline std::vector<std::vector<double>> load_path_loss_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      try {
        row.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw std::runtime_error(path + ": malformed number (row " +
                                 std::to_string(lineno) + ")");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path + ": ragged row " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": empty matrix");
  return rows;
}

/// JSON sidecar with per-node parameters. Either per-index arrays "ru"
/// and "ue", or scalar defaults "ru_defaults" / "ue_defaults". Thermal
/// noise comes from "thermal_noise_dbm" or from "bandwidth_hz" via
/// -174 dBm/Hz + 10 log10(B).
inline LinkGainMatrix load_gain_matrix(const std::string& csv_path,
                                       const std::string& sidecar_path) {
  LinkGainMatrix m;
  m.path_loss_db = load_path_loss_csv(csv_path);
  const std::size_t R = m.path_loss_db.size();
  const std::size_t U = m.path_loss_db.front().size();

  std::ifstream in(sidecar_path);
  if (!in) throw std::runtime_error("cannot open " + sidecar_path);
  nlohmann::json j;
  in >> j;

  RuParams ru_default;
  UeParams ue_default;
  if (j.contains("ru_defaults")) {
    const auto& d = j["ru_defaults"];
    ru_default.tx_power_dbm = d.value("tx_power_dbm", ru_default.tx_power_dbm);
    ru_default.antenna_gain_dbi =
        d.value("antenna_gain_dbi", ru_default.antenna_gain_dbi);
    ru_default.attenuation_db =
        d.value("attenuation_db", ru_default.attenuation_db);
  }
  if (j.contains("ue_defaults")) {
    const auto& d = j["ue_defaults"];
    ue_default.antenna_gain_dbi =
        d.value("antenna_gain_dbi", ue_default.antenna_gain_dbi);
    ue_default.noise_figure_db =
        d.value("noise_figure_db", ue_default.noise_figure_db);
  }
  m.rus.assign(R, ru_default);
  m.ues.assign(U, ue_default);
  if (j.contains("ru")) {
    const auto& arr = j["ru"];
    if (arr.size() != R)
      throw std::runtime_error("ru parameter array size mismatch");
    for (std::size_t i = 0; i < R; ++i) {
      m.rus[i].tx_power_dbm = arr[i].value("tx_power_dbm", ru_default.tx_power_dbm);
      m.rus[i].antenna_gain_dbi =
          arr[i].value("antenna_gain_dbi", ru_default.antenna_gain_dbi);
      m.rus[i].attenuation_db =
          arr[i].value("attenuation_db", ru_default.attenuation_db);
    }
  }
  if (j.contains("ue")) {
    const auto& arr = j["ue"];
    if (arr.size() != U)
      throw std::runtime_error("ue parameter array size mismatch");
    for (std::size_t i = 0; i < U; ++i) {
      m.ues[i].antenna_gain_dbi =
          arr[i].value("antenna_gain_dbi", ue_default.antenna_gain_dbi);
      m.ues[i].noise_figure_db =
          arr[i].value("noise_figure_db", ue_default.noise_figure_db);
    }
  }
  if (j.contains("thermal_noise_dbm"))
    m.thermal_noise_dbm = j["thermal_noise_dbm"].get<double>();
  else if (j.contains("bandwidth_hz"))
    m.thermal_noise_dbm = thermal_noise_dbm(j["bandwidth_hz"].get<double>());
  m.validate();
  return m;
}

inline void save_plan_csv(const PlanResult& plan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "ru_p,ru_q,score_db\n";
  out.precision(12);
  for (const auto& [p, q, score] : plan.table)
    out << p << "," << q << "," << score << "\n";
}

}  // namespace chanem
