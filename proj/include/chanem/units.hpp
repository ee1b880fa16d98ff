#pragma once

#include <cmath>
#include <limits>

namespace chanem {

inline double db_to_power(double db) { return std::pow(10.0, db / 10.0); }
inline double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }

inline double power_to_db(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(p);
}

inline double amplitude_to_db(double a) {
  if (a <= 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(a);
}

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

/// kTB noise over the given bandwidth, in dBm.
inline double thermal_noise_dbm(double bandwidth_hz) {
  return -174.0 + 10.0 * std::log10(bandwidth_hz);
}

}  // namespace chanem
