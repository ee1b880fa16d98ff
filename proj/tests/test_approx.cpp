#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "chanem/approx.hpp"

using namespace chanem;
namespace fs = std::filesystem;

TEST_CASE("a single component becomes a single tap at index 0") {
  MultipathProfile p;
  p.components.push_back({3.7e-6, 0.25, 1.0});
  const ApproxResult r = approximate(p);
  REQUIRE(r.taps.taps.size() == 1);
  REQUIRE(r.taps.taps.count(0) == 1);
  REQUIRE_THAT(std::abs(r.taps.taps.at(0)),
               Catch::Matchers::WithinRel(0.25, 1e-12));
  REQUIRE_FALSE(r.folded_out_of_window);
}

TEST_CASE("components in one grid cell merge coherently") {
  MultipathProfile p;
  p.components.push_back({1e-6, 0.5, 0.0});
  p.components.push_back({1.000002e-6, 0.5, 0.0});  // same 10 ns cell
  const ApproxResult r = approximate(p);
  REQUIRE(r.taps.taps.size() == 1);
  REQUIRE_THAT(std::abs(r.taps.taps.at(0)),
               Catch::Matchers::WithinRel(1.0, 1e-9));

  // opposite phases cancel to a zero-gain tap
  p.components[1].phase_rad = 3.14159265358979323846;
  const ApproxResult z = approximate(p);
  REQUIRE(std::abs(z.taps.taps.at(0)) < 1e-12);
}

TEST_CASE("reduction is invariant under a common delay offset") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> utoa(0.0, 4e-6);
  std::uniform_real_distribution<double> uamp(0.1, 1.0);
  MultipathProfile p;
  for (int i = 0; i < 8; ++i) p.components.push_back({utoa(rng), uamp(rng), 0.4 * i});
  p.sort_by_toa();
  MultipathProfile shifted = p;
  for (auto& c : shifted.components) c.toa_s += 17.5e-6;

  const ApproxResult a = approximate(p);
  const ApproxResult b = approximate(shifted);
  REQUIRE(a.taps.taps == b.taps.taps);
}

TEST_CASE("profiles already within four cells are kept as-is") {
  MultipathProfile p;
  p.components.push_back({0.0, 0.3, 0.0});
  p.components.push_back({1.28e-6, 0.1, 0.5});
  p.components.push_back({2e-6, 0.2, 1.0});
  p.components.push_back({4e-6, 0.4, 1.5});
  const ApproxResult r = approximate(p);
  REQUIRE(r.taps.taps.size() == 4);
  REQUIRE(r.taps.taps.count(0) == 1);
  REQUIRE(r.taps.taps.count(128) == 1);
  REQUIRE(r.taps.taps.count(200) == 1);
  REQUIRE(r.taps.taps.count(400) == 1);
  for (const auto& [idx, gain] : r.taps.taps) {
    const auto& c = *std::find_if(
        p.components.begin(), p.components.end(), [&](const auto& mc) {
          return std::lround(mc.toa_s / kTapGridSeconds) == idx;
        });
    REQUIRE(std::abs(gain - c.gain()) < 1e-12);
  }
}

TEST_CASE("six-component profiles match the exhaustive partition oracle") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> utoa(0.0, 4e-6);
  std::uniform_real_distribution<double> uamp(0.05, 1.0);
  std::uniform_real_distribution<double> uphase(0.0, 6.28318);

  for (int trial = 0; trial < 50; ++trial) {
    MultipathProfile p;
    for (int i = 0; i < 6; ++i)
      p.components.push_back({utoa(rng), uamp(rng), uphase(rng)});
    p.sort_by_toa();
    bool distinct = true;
    for (int i = 1; i < 6; ++i)
      distinct = distinct &&
                 std::lround((p.components[i].toa_s - p.components[0].toa_s) /
                             kTapGridSeconds) !=
                     std::lround((p.components[i - 1].toa_s -
                                  p.components[0].toa_s) /
                                 kTapGridSeconds);
    if (!distinct) continue;

    // brute force every contiguous partition into <= 4 clusters
    double best = 0.0;
    for (int cuts = 0; cuts < 32; ++cuts) {
      if (std::popcount(static_cast<unsigned>(cuts)) > 3) continue;
      double power = 0.0;
      std::complex<double> sum{0.0, 0.0};
      for (int i = 0; i < 6; ++i) {
        sum += p.components[i].gain();
        if (i == 5 || (cuts & (1 << i))) {
          power += std::norm(sum);
          sum = {0.0, 0.0};
        }
      }
      best = std::max(best, power);
    }

    const ApproxResult r = approximate(p);
    double got = 0.0;
    for (const auto& [idx, gain] : r.taps.taps) got += std::norm(gain);
    REQUIRE_THAT(got, Catch::Matchers::WithinRel(best, 1e-9));
  }
}

TEST_CASE("energy beyond the window folds into the last cluster") {
  MultipathProfile p;
  p.components.push_back({0.0, 0.5, 0.0});
  p.components.push_back({1e-6, 0.4, 0.0});
  p.components.push_back({9e-6, 0.3, 0.0});  // beyond 5.12 us
  const ApproxResult r = approximate(p);
  REQUIRE(r.folded_out_of_window);
  REQUIRE(r.taps.taps.size() == 2);
  REQUIRE_THAT(std::abs(r.taps.taps.at(100)),
               Catch::Matchers::WithinRel(0.7, 1e-9));  // 0.4 + folded 0.3
}

TEST_CASE("reduction rejects invalid profiles") {
  MultipathProfile empty;
  REQUIRE_THROWS_AS(approximate(empty), std::invalid_argument);
  MultipathProfile neg;
  neg.components.push_back({-1e-6, 0.5, 0.0});
  REQUIRE_THROWS_AS(approximate(neg), std::invalid_argument);
  MultipathProfile badamp;
  badamp.components.push_back({0.0, -0.5, 0.0});
  REQUIRE_THROWS_AS(approximate(badamp), std::invalid_argument);
}

TEST_CASE("trajectory sampling spaces points by speed times interval") {
  const TrajectorySampling t = sample_trajectory(2.0, 0.5, 3.0);
  REQUIRE(t.spacing_m == 1.0);
  REQUIRE(t.offsets_m.size() == 7);
  REQUIRE(t.offsets_m.back() == 6.0);
  REQUIRE_FALSE(t.exceeds_coherence);

  const TrajectorySampling fast = sample_trajectory(40.0, 0.5, 1.0);
  REQUIRE(fast.spacing_m == 20.0);
  REQUIRE(fast.exceeds_coherence);  // above the 15 m coherence distance
  REQUIRE_THROWS_AS(sample_trajectory(-1.0, 0.5, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(sample_trajectory(1.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("profile csv ingestion handles units and reports bad rows") {
  const auto dir = fs::temp_directory_path();
  const auto good = (dir / "chanem_profile_good.csv").string();
  {
    std::ofstream out(good);
    out << "toa_s,amplitude_db,phase_rad\n"
        << "0.0,-3.0,0.0\n"
        << "2e-6,-10.0,1.5\n";
  }
  const MultipathProfile p = load_profile_csv(good);
  REQUIRE(p.components.size() == 2);
  REQUIRE_THAT(p.components[0].amplitude,
               Catch::Matchers::WithinRel(db_to_amplitude(-3.0), 1e-12));

  const auto bad_header = (dir / "chanem_profile_badheader.csv").string();
  {
    std::ofstream out(bad_header);
    out << "toa_s,amplitude,phase\n0,0.5,0\n";
  }
  REQUIRE_THROWS_AS(load_profile_csv(bad_header), ProfileParseError);

  const auto bad_row = (dir / "chanem_profile_badrow.csv").string();
  {
    std::ofstream out(bad_row);
    out << "toa_s,amplitude_linear,phase_rad\n"
        << "0.0,0.5,0.0\n"
        << "2e-6,not_a_number,0.0\n";
  }
  try {
    load_profile_csv(bad_row);
    FAIL("expected ProfileParseError");
  } catch (const ProfileParseError& e) {
    REQUIRE(e.row == 3);
    REQUIRE(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("profile json ingestion accepts db or linear amplitudes") {
  const auto path = (fs::temp_directory_path() / "chanem_profile.json").string();
  {
    std::ofstream out(path);
    out << R"({"components": [
      {"toa_s": 0.0, "amplitude": 0.5, "phase_rad": 0.1},
      {"toa_s": 1e-6, "amplitude_db": -6.0}
    ]})";
  }
  const MultipathProfile p = load_profile_json(path);
  REQUIRE(p.components.size() == 2);
  REQUIRE(p.components[0].amplitude == 0.5);
  REQUIRE_THAT(p.components[1].amplitude,
               Catch::Matchers::WithinRel(db_to_amplitude(-6.0), 1e-12));
  REQUIRE(p.components[1].phase_rad == 0.0);
}
