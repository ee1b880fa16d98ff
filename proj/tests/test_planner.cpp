#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "chanem/planner.hpp"

using namespace chanem;
namespace fs = std::filesystem;

namespace {

LinkGainMatrix random_matrix(std::size_t R, std::size_t U, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uloss(60.0, 110.0);
  LinkGainMatrix m;
  m.thermal_noise_dbm = thermal_noise_dbm(100e6);
  m.rus.assign(R, RuParams{});
  m.ues.assign(U, UeParams{});
  m.path_loss_db.assign(R, std::vector<double>(U));
  for (auto& row : m.path_loss_db)
    for (auto& v : row) v = uloss(rng);
  return m;
}

}  // namespace

TEST_CASE("rssi follows the dB link budget") {
  LinkGainMatrix m;
  m.rus = {{24.0, 5.0, 0.0}};
  m.ues = {{1.1, 5.0}};
  m.path_loss_db = {{80.0}};
  // 24 + 5 - 0 - 80 + 1.1
  REQUIRE_THAT(rssi(m, 0, 0), Catch::Matchers::WithinAbs(-49.9, 1e-12));
  m.rus[0].attenuation_db = 10.0;
  REQUIRE_THAT(rssi(m, 0, 0), Catch::Matchers::WithinAbs(-59.9, 1e-12));
}

TEST_CASE("sinr degrades with interference and checks the active set") {
  LinkGainMatrix m = random_matrix(2, 1, 1);
  m.path_loss_db = {{80.0}, {95.0}};
  const double alone = sinr(m, 0, 0, {0});
  const double contested = sinr(m, 0, 0, {0, 1});
  REQUIRE(contested < alone);
  REQUIRE_THROWS_AS(sinr(m, 0, 0, {1}), std::invalid_argument);
}

TEST_CASE("uniform attenuation strictly decreases every sinr") {
  LinkGainMatrix m = random_matrix(4, 6, 2);
  LinkGainMatrix worse = m;
  for (auto& ru : worse.rus) ru.attenuation_db += 6.0;
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t q = 0; q < 4; ++q) {
      if (p == q) continue;
      for (std::size_t j = 0; j < 6; ++j)
        REQUIRE(sinr(worse, p, j, {p, q}) < sinr(m, p, j, {p, q}));
    }
}

TEST_CASE("exhaustive planning matches a naive recomputation") {
  const LinkGainMatrix m = random_matrix(6, 10, 3);
  const PlanResult plan = plan_exhaustive(m);
  REQUIRE(plan.table.size() == 15);  // C(6,2)

  double best = -std::numeric_limits<double>::infinity();
  std::size_t bp = 0, bq = 0;
  for (std::size_t p = 0; p < 6; ++p)
    for (std::size_t q = p + 1; q < 6; ++q) {
      double sum = 0.0;
      for (std::size_t j = 0; j < 10; ++j)
        sum += std::max(sinr(m, p, j, {p, q}), sinr(m, q, j, {p, q}));
      const double score = sum / 10.0;
      if (score > best) {
        best = score;
        bp = p;
        bq = q;
      }
    }
  REQUIRE(plan.best_p == bp);
  REQUIRE(plan.best_q == bq);
  REQUIRE(plan.best_score_db == best);
}

TEST_CASE("a 24-location search evaluates 276 pairs") {
  const LinkGainMatrix m = random_matrix(24, 4, 4);
  const PlanResult plan = plan_exhaustive(m);
  REQUIRE(plan.table.size() == 276);
}

TEST_CASE("ties break to the lexicographically smallest pair") {
  LinkGainMatrix m;
  m.rus.assign(3, RuParams{});
  m.ues.assign(1, UeParams{});
  m.path_loss_db = {{80.0}, {80.0}, {80.0}};  // fully symmetric
  const PlanResult plan = plan_exhaustive(m);
  REQUIRE(plan.best_p == 0);
  REQUIRE(plan.best_q == 1);
}

TEST_CASE("planning rejects degenerate setups") {
  LinkGainMatrix one;
  one.rus.assign(1, RuParams{});
  one.ues.assign(2, UeParams{});
  one.path_loss_db = {{80.0, 90.0}};
  REQUIRE_THROWS_AS(plan_exhaustive(one), std::invalid_argument);

  LinkGainMatrix ragged;
  ragged.rus.assign(2, RuParams{});
  ragged.ues.assign(2, UeParams{});
  ragged.path_loss_db = {{80.0, 90.0}, {85.0}};
  REQUIRE_THROWS_AS(plan_exhaustive(ragged), std::invalid_argument);
}

TEST_CASE("path loss csv ingestion reports malformed rows") {
  const auto dir = fs::temp_directory_path();
  const auto good = (dir / "chanem_loss_good.csv").string();
  {
    std::ofstream out(good);
    out << "80.0,90.5\n85.2,88.8\n";
  }
  const auto rows = load_path_loss_csv(good);
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[1][1] == 88.8);

  const auto ragged = (dir / "chanem_loss_ragged.csv").string();
  {
    std::ofstream out(ragged);
    out << "80.0,90.5\n85.2\n";
  }
  REQUIRE_THROWS_WITH(load_path_loss_csv(ragged),
                      Catch::Matchers::ContainsSubstring("row 2"));

  const auto bad = (dir / "chanem_loss_bad.csv").string();
  {
    std::ofstream out(bad);
    out << "80.0,90.5\n85.2,oops\n";
  }
  REQUIRE_THROWS_WITH(load_path_loss_csv(bad),
                      Catch::Matchers::ContainsSubstring("row 2"));
}

TEST_CASE("gain matrix sidecars apply defaults and per-node overrides") {
  const auto dir = fs::temp_directory_path();
  const auto csv = (dir / "chanem_gm.csv").string();
  {
    std::ofstream out(csv);
    out << "80,90\n85,88\n";
  }
  const auto sidecar = (dir / "chanem_gm.json").string();
  {
    std::ofstream out(sidecar);
    out << R"({
      "ru_defaults": {"tx_power_dbm": 20.0},
      "ru": [{"tx_power_dbm": 24.0, "attenuation_db": 3.0}, {}],
      "ue_defaults": {"antenna_gain_dbi": 2.0},
      "bandwidth_hz": 100e6
    })";
  }
  const LinkGainMatrix m = load_gain_matrix(csv, sidecar);
  REQUIRE(m.rus[0].tx_power_dbm == 24.0);
  REQUIRE(m.rus[0].attenuation_db == 3.0);
  REQUIRE(m.rus[1].tx_power_dbm == 20.0);
  REQUIRE(m.ues[0].antenna_gain_dbi == 2.0);
  REQUIRE_THAT(m.thermal_noise_dbm,
               Catch::Matchers::WithinAbs(-174.0 + 10.0 * std::log10(100e6), 1e-9));
}

TEST_CASE("plan csv output lists every evaluated pair") {
  const LinkGainMatrix m = random_matrix(4, 3, 5);
  const PlanResult plan = plan_exhaustive(m);
  const auto path = (fs::temp_directory_path() / "chanem_plan.csv").string();
  save_plan_csv(plan, path);
  std::ifstream in(path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  REQUIRE(lines == 1 + plan.table.size());
}
