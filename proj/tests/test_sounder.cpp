#include <cmath>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "chanem/channel.hpp"
#include "chanem/sounder.hpp"

using namespace chanem;

TEST_CASE("loop-back correlation peaks at unity on lag zero") {
  const CodeSequence seq = generate_glfsr(8, 0, 1);
  const IqWaveform w = modulate_bpsk(seq, 1e6, 1, 2);
  const CirEstimate cir = correlate(w, seq, 1);
  REQUIRE(cir.period_samples == 255);
  REQUIRE_THAT(cir.magnitude[0], Catch::Matchers::WithinRel(1.0, 1e-12));
  REQUIRE_THAT(cir.magnitude[255], Catch::Matchers::WithinRel(1.0, 1e-12));
  // m-sequence sidelobes sit at 1/255
  for (std::size_t k = 1; k < 255; ++k)
    REQUIRE_THAT(cir.magnitude[k],
                 Catch::Matchers::WithinAbs(1.0 / 255.0, 1e-12));
}

TEST_CASE("correlation rejects too-short inputs and bad oversampling") {
  const CodeSequence seq = generate_glfsr(8, 0, 1);
  IqWaveform w = modulate_bpsk(seq, 1e6, 1, 1);
  w.samples.pop_back();
  REQUIRE_THROWS_AS(correlate(w, seq, 1), SounderError);
  REQUIRE_THROWS_AS(correlate(w, seq, 0), std::invalid_argument);
}

TEST_CASE("a scaled delayed echo is detected at the right lag and gain") {
  const CodeSequence seq = generate_glfsr(8, 0, 1);
  const IqWaveform tx = modulate_bpsk(seq, 1e6, 1, 4);

  IqWaveform rx;
  rx.sample_rate = tx.sample_rate;
  rx.samples.assign(tx.samples.size() + 37, {0.0, 0.0});
  for (std::size_t n = 0; n < tx.samples.size(); ++n) {
    rx.samples[n] += tx.samples[n];
    rx.samples[n + 37] += 0.5 * tx.samples[n];
  }

  SoundingOptions opts;
  opts.drop_head_frames = 1;
  opts.drop_tail_frames = 1;
  const SoundingReport report = sound(rx, seq, 1, opts);
  REQUIRE(report.taps.size() == 2);
  REQUIRE(report.taps[0].rel_lag == 0);
  REQUIRE(report.taps[1].rel_lag == 37);
  REQUIRE_THAT(report.taps[0].mean_gain_db,
               Catch::Matchers::WithinAbs(0.0, 1e-9));
  REQUIRE_THAT(report.taps[1].mean_gain_db,
               Catch::Matchers::WithinAbs(amplitude_to_db(0.5), 1e-9));
  REQUIRE_THAT(report.taps[1].mean_toa_s,
               Catch::Matchers::WithinRel(37e-6, 1e-9));
}

TEST_CASE("detection threshold controls which taps survive") {
  const CodeSequence seq = generate_glfsr(8, 0, 1);
  const IqWaveform tx = modulate_bpsk(seq, 1e6, 1, 4);
  // the strong tap's -1/N correlation sidelobe biases the echo's peak down
  // by ~0.004 in amplitude, so keep it well clear of both thresholds
  const double weak = db_to_amplitude(-36.0);

  IqWaveform rx;
  rx.sample_rate = tx.sample_rate;
  rx.samples.assign(tx.samples.size() + 50, {0.0, 0.0});
  for (std::size_t n = 0; n < tx.samples.size(); ++n) {
    rx.samples[n] += tx.samples[n];
    rx.samples[n + 50] += weak * tx.samples[n];
  }

  SoundingOptions opts;
  opts.drop_head_frames = 1;
  opts.drop_tail_frames = 1;
  opts.threshold_db = 35.0;  // floor above the biased echo peak
  REQUIRE(sound(rx, seq, 1, opts).taps.size() == 1);
  opts.threshold_db = 42.0;  // below the echo, above the code's sidelobes
  REQUIRE(sound(rx, seq, 1, opts).taps.size() == 2);
}

TEST_CASE("gain refinement undoes the code's own correlation sidelobes") {
  // independent oracle: build the received signal by direct convolution
  // with known taps, then demand the refined gains match those taps
  const CodeSequence seq = generate_glfsr(8, 0, 1);
  const double rate = 50e6;
  const IqWaveform tx = modulate_bpsk(seq, rate, 1, 12);

  const std::vector<std::pair<std::size_t, std::complex<double>>> taps = {
      {0, {0.7, 0.0}}, {64, std::polar(0.01, 0.9)}, {100, std::polar(0.17, -2.0)},
      {200, {0.0, 0.39}}};
  std::size_t max_d = 200;
  IqWaveform rx;
  rx.sample_rate = rate;
  rx.samples.assign(tx.samples.size() + max_d, {0.0, 0.0});
  for (const auto& [d, g] : taps)
    for (std::size_t n = 0; n < tx.samples.size(); ++n)
      rx.samples[n + d] += g * tx.samples[n];

  SoundingOptions opts;
  opts.drop_head_frames = 1;
  opts.drop_tail_frames = 1;
  const SoundingReport report = sound(rx, seq, 1, opts);
  REQUIRE(report.taps.size() == taps.size());
  for (std::size_t i = 0; i < taps.size(); ++i) {
    REQUIRE(report.taps[i].rel_lag == static_cast<long>(taps[i].first));
    REQUIRE_THAT(report.taps[i].mean_gain_db,
                 Catch::Matchers::WithinAbs(
                     amplitude_to_db(std::abs(taps[i].second)), 1e-9));
  }

  // without refinement the -37 dB tap carries visible sidelobe bias
  opts.refine = false;
  const SoundingReport raw = sound(rx, seq, 1, opts);
  double raw_err = 0.0, refined_err = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const double truth = amplitude_to_db(std::abs(taps[i].second));
    raw_err = std::max(raw_err, std::abs(raw.taps[i].mean_gain_db - truth));
    refined_err =
        std::max(refined_err, std::abs(report.taps[i].mean_gain_db - truth));
  }
  REQUIRE(raw_err > 1e-3);
  REQUIRE(refined_err < 1e-9);
}

TEST_CASE("path gains subtract the link budget terms") {
  std::vector<DetectedTap> taps(2);
  taps[0].gain = {0.1, 0.0};
  taps[1].gain = {0.0, 0.0};
  const auto gains = path_gains(taps, 10.0, 3.0, 2.0);
  REQUIRE_THAT(gains[0],
               Catch::Matchers::WithinAbs(amplitude_to_db(0.1) - 15.0, 1e-12));
  REQUIRE(std::isinf(gains[1]));
  REQUIRE(gains[1] < 0);
}

TEST_CASE("aggregation matches taps across frames and computes stats") {
  std::vector<std::vector<DetectedTap>> frames(3);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    DetectedTap strong;
    strong.peak_lag = static_cast<long>(100 * f + 10);
    strong.gain = {1.0, 0.0};
    strong.gain_db = 0.0;
    DetectedTap weak;
    // jitters by one sample across frames; still one aggregate tap
    weak.peak_lag = strong.peak_lag + 20 + static_cast<long>(f % 2);
    weak.gain = {0.5, 0.0};
    weak.gain_db = amplitude_to_db(0.5) + (f == 0 ? 0.3 : 0.0);
    frames[f] = {strong, weak};
  }
  const SoundingReport report = aggregate(frames, 100, 1e6);
  REQUIRE(report.taps.size() == 2);
  REQUIRE(report.taps[0].rel_lag == 0);
  REQUIRE(report.taps[0].std_gain_db == 0.0);
  REQUIRE(report.taps[1].count == 3);
  REQUIRE(report.taps[1].std_gain_db > 0.0);
  REQUIRE_THROWS_AS(aggregate({}, 100, 1e6), SounderError);
}

TEST_CASE("sounding reports round trip through json") {
  const CodeSequence seq = generate_glfsr(8, 0, 1);
  const IqWaveform tx = modulate_bpsk(seq, 1e6, 1, 4);
  SoundingOptions opts;
  opts.drop_head_frames = 1;
  opts.drop_tail_frames = 1;
  const SoundingReport report = sound(tx, seq, 1, opts);
  const SoundingReport loaded = report_from_json(report_to_json(report));
  REQUIRE(loaded.taps.size() == report.taps.size());
  for (std::size_t i = 0; i < loaded.taps.size(); ++i) {
    REQUIRE(loaded.taps[i].rel_lag == report.taps[i].rel_lag);
    REQUIRE(loaded.taps[i].mean_gain_db == report.taps[i].mean_gain_db);
    REQUIRE(loaded.taps[i].count == report.taps[i].count);
  }
  REQUIRE(loaded.frames.size() == report.frames.size());
}
