#include <cmath>
#include <filesystem>
#include <fstream>

#include <catch2/catch_amalgamated.hpp>

#include "chanem/waveform.hpp"

using namespace chanem;
namespace fs = std::filesystem;

TEST_CASE("bpsk modulation holds each chip for samples_per_chip samples") {
  const CodeSequence seq = generate_glfsr(4, 0, 1);  // 15 chips
  const IqWaveform w = modulate_bpsk(seq, 1e6, 4, 3);
  REQUIRE(w.samples.size() == 15u * 4 * 3);
  REQUIRE(w.sample_rate == 1e6);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const int chip = seq.chips[(i / 4) % 15];
    REQUIRE(w.samples[i].real() == static_cast<double>(chip));
    REQUIRE(w.samples[i].imag() == 0.0);
  }
  REQUIRE_THROWS_AS(modulate_bpsk(seq, 0.0, 1, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(modulate_bpsk(seq, 1e6, 0, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(modulate_bpsk(seq, 1e6, 1, 0), std::invalid_argument);
}

TEST_CASE("iq files round trip float32 payloads exactly") {
  const auto path = (fs::temp_directory_path() / "chanem_wave.iq").string();
  IqWaveform w;
  w.sample_rate = 2e6;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 1000; ++i)
    w.samples.emplace_back(static_cast<float>(u(rng)), static_cast<float>(u(rng)));
  save_iq_file(w, path);
  const IqWaveform loaded = load_iq_file(path, w.sample_rate);
  REQUIRE(loaded.samples == w.samples);
}

TEST_CASE("truncated iq files are rejected with a float count") {
  const auto path = (fs::temp_directory_path() / "chanem_trunc.iq").string();
  {
    std::ofstream out(path, std::ios::binary);
    const char junk[12] = {};  // 3 floats: half a complex sample missing
    out.write(junk, sizeof junk);
  }
  try {
    load_iq_file(path, 1e6);
    FAIL("expected WaveformIoError");
  } catch (const WaveformIoError& e) {
    REQUIRE(std::string(e.what()).find("truncated: 3 floats") != std::string::npos);
  }
}

TEST_CASE("non-finite samples are rejected on load") {
  const auto path = (fs::temp_directory_path() / "chanem_nan.iq").string();
  IqWaveform w;
  w.sample_rate = 1e6;
  w.samples.emplace_back(1.0, 2.0);
  save_iq_file(w, path);
  {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    const std::uint32_t inf_bits = 0x7F800000u;
    const float inf = std::bit_cast<float>(inf_bits);
    detail::put_f32_le(out, inf);
    detail::put_f32_le(out, 0.0f);
  }
  REQUIRE_THROWS_AS(load_iq_file(path, 1e6), WaveformIoError);
}

TEST_CASE("awgn is deterministic per seed and matches its power target") {
  IqWaveform base;
  base.sample_rate = 1e6;
  base.samples.assign(200000, {0.0, 0.0});

  const IqWaveform a = add_awgn(base, -20.0, 7);
  const IqWaveform b = add_awgn(base, -20.0, 7);
  const IqWaveform c = add_awgn(base, -20.0, 8);
  REQUIRE(a.samples == b.samples);
  REQUIRE(a.samples != c.samples);

  double power = 0.0;
  for (const auto& s : a.samples) power += std::norm(s);
  power /= static_cast<double>(a.samples.size());
  REQUIRE_THAT(power, Catch::Matchers::WithinRel(db_to_power(-20.0), 0.02));
}

TEST_CASE("awgn with the noise floor disabled is a no-op") {
  IqWaveform base;
  base.sample_rate = 1e6;
  base.samples.assign(64, {0.5, -0.5});
  const IqWaveform out =
      add_awgn(base, -std::numeric_limits<double>::infinity(), 1);
  REQUIRE(out.samples == base.samples);
}
