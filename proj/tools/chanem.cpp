// chanem — channel-emulation toolchain CLI.
//
// Subcommands cover the full pipeline: sounding-code generation, software
// channel emulation + sounding loop-back, multipath profile reduction,
// modeled-vs-sounded validation, path-loss heatmaps, RF placement planning
// and the bundled reproduction recipes.
//
// Exit codes: 0 success, 1 runtime/data error, 2 usage error.
// All outputs are plot-ready CSV / JSON; nothing is rendered.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "chanem/approx.hpp"
#include "chanem/channel.hpp"
#include "chanem/planner.hpp"
#include "chanem/repro.hpp"
#include "chanem/scenario.hpp"
#include "chanem/sequences.hpp"
#include "chanem/sounder.hpp"
#include "chanem/waveform.hpp"

#include "CLI11.hpp"

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDefaultSeed = 12345;

std::string default_out_dir() {
  if (const char* env = std::getenv("CHANEM_OUT")) return env;
  return ".";
}

fs::path out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return fs::path(dir) / name;
}

chanem::LinkKey parse_link(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == s.size())
    throw CLI::ValidationError("--link", "expected tx:rx, got '" + s + "'");
  return {s.substr(0, colon), s.substr(colon + 1)};
}

void write_correlation_csv(const chanem::CodeSequence& seq,
                           const fs::path& path) {
  const auto periodic =
      chanem::autocorrelation(seq, chanem::CorrelationMode::Periodic);
  const auto aperiodic =
      chanem::autocorrelation(seq, chanem::CorrelationMode::Aperiodic);
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "lag,periodic,aperiodic\n";
  for (std::size_t k = 0; k < periodic.size(); ++k)
    out << k << "," << periodic[k] << "," << aperiodic[k] << "\n";
}

// ------------------------------- sequence ----------------------------------

struct SequenceArgs {
  std::string family = "glfsr";
  int degree = 8;
  std::uint32_t mask = 0;
  std::uint32_t seed_state = 1;
  std::string poly1 = "0x43", poly2 = "0x67";
  int shift = 0;
  int length = 128;
  std::string golay_kind = "a";
  int ls_base = 64;
  std::string out_dir = default_out_dir();
};

int cmd_sequence(const SequenceArgs& a) {
  chanem::CodeSequence seq;
  if (a.family == "glfsr") {
    seq = chanem::generate_glfsr(a.degree, a.mask, a.seed_state);
  } else if (a.family == "gold") {
    const auto p1 = static_cast<std::uint32_t>(std::stoul(a.poly1, nullptr, 0));
    const auto p2 = static_cast<std::uint32_t>(std::stoul(a.poly2, nullptr, 0));
    seq = chanem::generate_gold(p1, p2, a.shift);
  } else if (a.family == "golay") {
    seq = chanem::generate_golay(a.length, a.golay_kind == "b"
                                               ? chanem::GolayKind::B
                                               : chanem::GolayKind::A);
  } else if (a.family == "ls") {
    seq = chanem::generate_ls(a.ls_base);
  }

  const fs::path chips = out_path(a.out_dir, a.family + "_sequence.txt");
  const fs::path corr = out_path(a.out_dir, a.family + "_correlation.csv");
  chanem::save_sequence_text(seq, chips.string());
  write_correlation_csv(seq, corr);
  std::cout << seq.params << "\n"
            << "length: " << seq.length() << "\n"
            << "chips:  " << chips.string() << "\n"
            << "corr:   " << corr.string() << "\n";
  return 0;
}

// --------------------------------- sound -----------------------------------

struct SoundArgs {
  std::string scenario_path;
  std::string link = "tx:rx";
  std::size_t frame_index = 0;
  double rate = 50e6;
  std::size_t frames = 100;
  int degree = 8;
  int spc = 1;
  std::string noise = "on";
  double noise_floor_db = -100.0;
  double base_loss_db = 57.55;
  double threshold_db = 40.0;
  std::uint64_t seed = kDefaultSeed;
  std::string out_dir = default_out_dir();
};

int cmd_sound(const SoundArgs& a) {
  const chanem::Scenario scenario = chanem::load_scenario(a.scenario_path);
  const chanem::LinkKey link = parse_link(a.link);
  if (a.frame_index >= scenario.frames.size())
    throw std::runtime_error("frame index " + std::to_string(a.frame_index) +
                             " out of range (" +
                             std::to_string(scenario.frames.size()) + " frames)");
  const auto& frame = scenario.frames[a.frame_index];
  if (!frame.links.count(link))
    throw std::runtime_error("link " + link.first + "->" + link.second +
                             " absent from frame " +
                             std::to_string(a.frame_index));

  chanem::EmulatorConfig config;
  config.sample_rate = a.rate;
  config.base_loss_db = a.base_loss_db;
  config.noise_floor_db = (a.noise == "off") ? chanem::EmulatorConfig::kNoiseOff
                                             : a.noise_floor_db;

  const chanem::CodeSequence seq = chanem::generate_glfsr(a.degree, 0, 1);
  const chanem::IqWaveform tx = chanem::modulate_bpsk(
      seq, a.rate, a.spc, static_cast<int>(a.frames) + 2);

  chanem::ChannelFrame one;
  one.links[link] = frame.links.at(link);
  auto outputs = chanem::emulate({{link.first, tx}}, one, config, a.seed);

  chanem::SoundingOptions opts;
  opts.threshold_db = a.threshold_db;
  opts.drop_head_frames = 1;  // settle into the periodic steady state
  const chanem::SoundingReport report =
      chanem::sound(outputs.at(link.second), seq, a.spc, opts);

  const fs::path csv = out_path(a.out_dir, "sounding_frames.csv");
  const fs::path json = out_path(a.out_dir, "sounding_report.json");
  chanem::save_report_csv(report, csv.string());
  {
    std::ofstream out(json);
    out << chanem::report_to_json(report).dump(2) << "\n";
  }
  std::cout << "frames: " << report.frames.size() << "\n";
  for (const auto& t : report.taps)
    std::cout << "tap rel_lag=" << t.rel_lag << " toa_s=" << t.mean_toa_s
              << " gain_db=" << t.mean_gain_db + a.base_loss_db
              << " std_db=" << t.std_gain_db << " (base loss added back)\n";
  std::cout << "per-frame: " << csv.string() << "\nreport:    " << json.string()
            << "\n";
  return 0;
}

// ------------------------------ approximate --------------------------------

struct ApproximateArgs {
  std::string profile_path;
  std::string out_dir = default_out_dir();
};

int cmd_approximate(const ApproximateArgs& a) {
  chanem::MultipathProfile profile;
  if (fs::path(a.profile_path).extension() == ".json")
    profile = chanem::load_profile_json(a.profile_path);
  else
    profile = chanem::load_profile_csv(a.profile_path);

  const chanem::ApproxResult result = chanem::approximate(profile);

  double in_power = 0.0;
  for (const auto& c : profile.components) in_power += c.amplitude * c.amplitude;
  double out_power = 0.0;
  for (const auto& [idx, gain] : result.taps.taps) out_power += std::norm(gain);

  chanem::ChannelFrame frame;
  frame.links[{"tx", "rx"}] = result.taps;
  const fs::path out = out_path(a.out_dir, "approximated_frame.json");
  {
    std::ofstream o(out);
    o << chanem::frame_to_json(frame).dump(2) << "\n";
  }

  std::cout << "components: " << profile.components.size() << "\n"
            << "taps:       " << result.taps.taps.size() << "\n";
  for (const auto& [idx, gain] : result.taps.taps)
    std::cout << "  index " << idx << " delay_s "
              << idx * chanem::kTapGridSeconds << " gain_db "
              << chanem::amplitude_to_db(std::abs(gain)) << "\n";
  std::cout << "incoherent input power:  " << in_power << "\n"
            << "coherent cluster power:  " << out_power << "\n";
  if (result.folded_out_of_window)
    std::cout << "warning: components beyond the 5.12 us window were folded "
                 "into the last cluster\n";
  std::cout << "frame: " << out.string() << "\n";
  return 0;
}

// ------------------------------- validate ----------------------------------

struct ValidateArgs {
  std::string scenario_path;
  std::string report_path;
  std::string link = "tx:rx";
  std::size_t frame_index = 0;
  double base_loss_db = 57.55;
  std::string out_dir = default_out_dir();
};

int cmd_validate(const ValidateArgs& a) {
  const chanem::Scenario scenario = chanem::load_scenario(a.scenario_path);
  std::ifstream in(a.report_path);
  if (!in) throw std::runtime_error("cannot open " + a.report_path);
  nlohmann::json j;
  in >> j;
  const chanem::SoundingReport report = chanem::report_from_json(j);

  const chanem::ValidationResult v = chanem::validate(
      scenario, report, parse_link(a.link), a.frame_index, a.base_loss_db);
  const fs::path out = out_path(a.out_dir, "validation.csv");
  chanem::save_validation_csv(v, out.string());
  std::cout << "modeled taps:        " << v.modeled.size() << "\n"
            << "all delays matched:  " << (v.all_delays_matched ? "yes" : "no")
            << "\n"
            << "max |gain error| dB: " << v.max_abs_gain_error_db << "\n"
            << "csv: " << out.string() << "\n";
  return 0;
}

// -------------------------------- heatmap ----------------------------------

struct HeatmapArgs {
  std::string scenario_path;
  std::size_t frame_index = 0;
  double base_loss_db = 0.0;
  std::string out_dir = default_out_dir();
};

int cmd_heatmap(const HeatmapArgs& a) {
  const chanem::Scenario scenario = chanem::load_scenario(a.scenario_path);
  const chanem::Heatmap h =
      chanem::heatmap(scenario, a.frame_index, a.base_loss_db);
  const fs::path out = out_path(a.out_dir, "heatmap.csv");
  chanem::save_heatmap_csv(h, out.string());
  std::cout << "nodes: " << h.node_ids.size() << "\ncsv: " << out.string()
            << "\n";
  return 0;
}

// ---------------------------------- plan -----------------------------------

struct PlanArgs {
  std::string path_loss_path;
  std::string params_path;
  std::string out_dir = default_out_dir();
};

int cmd_plan(const PlanArgs& a) {
  chanem::LinkGainMatrix m;
  if (a.params_path.empty()) {
    m.path_loss_db = chanem::load_path_loss_csv(a.path_loss_path);
    m.rus.assign(m.path_loss_db.size(), chanem::RuParams{});
    m.ues.assign(m.path_loss_db.front().size(), chanem::UeParams{});
  } else {
    m = chanem::load_gain_matrix(a.path_loss_path, a.params_path);
  }

  const chanem::PlanResult plan = chanem::plan_exhaustive(m);
  const fs::path out = out_path(a.out_dir, "plan.csv");
  chanem::save_plan_csv(plan, out.string());
  std::cout << "RU locations: " << m.ru_count() << ", UE points: "
            << m.ue_count() << ", pairs evaluated: " << plan.table.size()
            << "\n"
            << "best pair: (" << plan.best_p << ", " << plan.best_q
            << ") score " << plan.best_score_db << " dB\n"
            << "csv: " << out.string() << "\n";
  return 0;
}

// --------------------------------- repro -----------------------------------

int cmd_repro(const std::string& recipe) {
  std::vector<chanem::repro::RecipeResult> results;
  if (recipe == "all")
    results = chanem::repro::run_all();
  else
    results.push_back(chanem::repro::run_recipe(recipe));

  bool all_ok = true;
  for (const auto& r : results) {
    all_ok = all_ok && r.passed;
    std::printf("[%s] %2d %-28s (%.2fs)%s%s\n", r.passed ? "PASS" : "FAIL",
                r.id, r.name.c_str(), r.seconds,
                r.detail.empty() ? "" : " — ", r.detail.c_str());
  }
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chanem — sounding, emulation, approximation and RF planning"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read defaults from a TOML/INI config file");

  SequenceArgs seq_args;
  auto* seq = app.add_subcommand("sequence", "generate a sounding code and its correlation profile");
  seq->add_option("--family", seq_args.family, "code family")
      ->check(CLI::IsMember({"glfsr", "gold", "golay", "ls"}))
      ->capture_default_str();
  seq->add_option("--degree", seq_args.degree, "register degree (glfsr)")
      ->capture_default_str();
  seq->add_option("--mask", seq_args.mask, "output tap mask (glfsr)")
      ->capture_default_str();
  seq->add_option("--seed-state", seq_args.seed_state, "initial register state (glfsr)")
      ->capture_default_str();
  seq->add_option("--poly1", seq_args.poly1, "first feedback polynomial (gold)")
      ->capture_default_str();
  seq->add_option("--poly2", seq_args.poly2, "second feedback polynomial (gold)")
      ->capture_default_str();
  seq->add_option("--shift", seq_args.shift, "cyclic shift of the second parent (gold)")
      ->capture_default_str();
  seq->add_option("--length", seq_args.length, "sequence length (golay: 32/64/128)")
      ->capture_default_str();
  seq->add_option("--kind", seq_args.golay_kind, "golay member: a or b")
      ->check(CLI::IsMember({"a", "b"}))
      ->capture_default_str();
  seq->add_option("--base", seq_args.ls_base, "base pair length (ls)")
      ->capture_default_str();
  seq->add_option("--out-dir", seq_args.out_dir, "output directory")
      ->capture_default_str();

  SoundArgs sound_args;
  auto* sound = app.add_subcommand("sound", "loop-back sounding of one scenario link");
  sound->add_option("--scenario", sound_args.scenario_path, "scenario JSON")
      ->required();
  sound->add_option("--link", sound_args.link, "link as tx:rx")
      ->capture_default_str();
  sound->add_option("--frame-index", sound_args.frame_index, "scenario frame")
      ->capture_default_str();
  sound->add_option("--rate", sound_args.rate, "sample rate, Hz")
      ->capture_default_str();
  sound->add_option("--frames", sound_args.frames, "steady-state frames to sound")
      ->capture_default_str();
  sound->add_option("--degree", sound_args.degree, "GLFSR degree of the sounding code")
      ->capture_default_str();
  sound->add_option("--spc", sound_args.spc, "samples per chip")
      ->capture_default_str();
  sound->add_option("--noise", sound_args.noise, "noise floor on/off")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  sound->add_option("--noise-floor", sound_args.noise_floor_db, "noise floor, dB")
      ->capture_default_str();
  sound->add_option("--base-loss", sound_args.base_loss_db, "emulator base loss, dB")
      ->capture_default_str();
  sound->add_option("--threshold", sound_args.threshold_db, "detection threshold below peak, dB")
      ->capture_default_str();
  sound->add_option("--seed", sound_args.seed, "noise seed")
      ->capture_default_str();
  sound->add_option("--out-dir", sound_args.out_dir, "output directory")
      ->capture_default_str();

  ApproximateArgs approx_args;
  auto* approx = app.add_subcommand("approximate", "reduce a multipath profile to an emulator tap set");
  approx->add_option("--profile", approx_args.profile_path, "profile CSV or JSON")
      ->required();
  approx->add_option("--out-dir", approx_args.out_dir, "output directory")
      ->capture_default_str();

  ValidateArgs validate_args;
  auto* validate = app.add_subcommand("validate", "compare a sounding report against a modeled link");
  validate->add_option("--scenario", validate_args.scenario_path, "scenario JSON")
      ->required();
  validate->add_option("--report", validate_args.report_path, "sounding report JSON")
      ->required();
  validate->add_option("--link", validate_args.link, "link as tx:rx")
      ->capture_default_str();
  validate->add_option("--frame-index", validate_args.frame_index, "scenario frame")
      ->capture_default_str();
  validate->add_option("--base-loss", validate_args.base_loss_db, "base loss added back to sounded gains, dB")
      ->capture_default_str();
  validate->add_option("--out-dir", validate_args.out_dir, "output directory")
      ->capture_default_str();

  HeatmapArgs heatmap_args;
  auto* heat = app.add_subcommand("heatmap", "per-link path loss matrix of one scenario frame");
  heat->add_option("--scenario", heatmap_args.scenario_path, "scenario JSON")
      ->required();
  heat->add_option("--frame-index", heatmap_args.frame_index, "scenario frame")
      ->capture_default_str();
  heat->add_option("--base-loss", heatmap_args.base_loss_db, "base loss, dB")
      ->capture_default_str();
  heat->add_option("--out-dir", heatmap_args.out_dir, "output directory")
      ->capture_default_str();

  PlanArgs plan_args;
  auto* plan = app.add_subcommand("plan", "exhaustive RU pair placement search");
  plan->add_option("--path-loss", plan_args.path_loss_path, "R x U path loss CSV, dB")
      ->required();
  plan->add_option("--params", plan_args.params_path, "RU/UE parameter JSON sidecar");
  plan->add_option("--out-dir", plan_args.out_dir, "output directory")
      ->capture_default_str();

  std::string recipe = "all";
  auto* repro = app.add_subcommand("repro", "run the bundled reproduction recipes");
  repro->add_option("recipe", recipe, "recipe name, or 'all'")
      ->check(CLI::IsMember([] {
        std::vector<std::string> names = chanem::repro::recipe_names();
        names.push_back("all");
        return names;
      }()))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (seq->parsed()) return cmd_sequence(seq_args);
    if (sound->parsed()) return cmd_sound(sound_args);
    if (approx->parsed()) return cmd_approximate(approx_args);
    if (validate->parsed()) return cmd_validate(validate_args);
    if (heat->parsed()) return cmd_heatmap(heatmap_args);
    if (plan->parsed()) return cmd_plan(plan_args);
    if (repro->parsed()) return cmd_repro(recipe);
  } catch (const chanem::ProfileParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;  // malformed input is a usage problem; message carries the row
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
