// isac: command-line front end for the radar twin.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "isac/config.hpp"
#include "isac/io.hpp"
#include "isac/live_service.hpp"
#include "isac/pipeline.hpp"
#include "isac/radar_params.hpp"
#include "isac/scenario_io.hpp"

namespace {

using namespace isac;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted.store(true); }

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool json = false;
  std::optional<double> thr_up, thr_down, scope_min, scope_max;
  std::optional<std::size_t> guard_bins;
  std::optional<std::string> fft_planning, fft_wisdom;
};

PipelineConfig load_effective_config(const GlobalOptions& g) {
  PipelineConfig c = g.config_path.empty() ? PipelineConfig{} : load_config(g.config_path);
  if (g.thr_up) c.detection.threshold_up_db = *g.thr_up;
  if (g.thr_down) c.detection.threshold_down_db = *g.thr_down;
  if (g.scope_min) c.detection.scope_min_m = *g.scope_min;
  if (g.scope_max) c.detection.scope_max_m = *g.scope_max;
  if (g.guard_bins) c.detection.guard_bins = *g.guard_bins;
  if (g.fft_planning) {
    c.runtime.fft_planning =
        *g.fft_planning == "measure" ? FftPlanning::measure : FftPlanning::estimate;
  }
  if (g.fft_wisdom) c.runtime.fft_wisdom = *g.fft_wisdom;
  validate(c);
  return c;
}

ScenarioScript load_script(const std::string& path, const DerivedParams& params,
                           const GlobalOptions& g) {
  ScenarioScript s = load_scenario(path, params);
  if (g.seed) s.seed = *g.seed;
  return s;
}

/// Stand 3 s, walk 3 s at 0.5 m/s, wave 3 s, absent 2 s.
ScenarioScript builtin_script() {
  ScenarioScript s;
  s.duration = 11.0;
  Segment stand{0.0, 3.0, Activity::standing, 5.0};
  Segment walk{3.0, 3.0, Activity::walking, 5.0, 0.5};
  Segment wave{6.0, 3.0, Activity::waving, 6.5};
  Segment gone{9.0, 2.0, Activity::absent};
  s.segments = {stand, walk, wave, gone};
  return s;
}

int cmd_derive(const GlobalOptions& g) {
  const PipelineConfig c = load_effective_config(g);
  const DerivedParams p = derive(c.system);
  if (g.json) {
    json j = {{"carrier_frequency_hz", c.system.carrier_frequency},
              {"sample_rate_hz", c.system.sample_rate},
              {"sequence_length", c.system.sequence_length},
              {"cpi_pulses", c.system.cpi_pulses},
              {"wavelength_m", p.wavelength},
              {"range_bin_m", p.range_bin},
              {"sequence_duration_s", p.sequence_duration},
              {"pri_s", p.pri},
              {"cpi_s", p.cpi},
              {"velocity_bin_mps", p.velocity_bin},
              {"max_velocity_mps", p.max_unambiguous_velocity},
              {"max_range_m", p.max_unambiguous_range},
              {"frame_rate_hz", p.frame_rate}};
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }
  std::printf("wavelength          %12.6f mm\n", p.wavelength * 1e3);
  std::printf("range bin           %12.6f cm\n", p.range_bin * 1e2);
  std::printf("sequence duration   %12.6f us\n", p.sequence_duration * 1e6);
  std::printf("PRI                 %12.6f ms\n", p.pri * 1e3);
  std::printf("CPI                 %12.6f s\n", p.cpi);
  std::printf("velocity bin        %12.6f cm/s\n", p.velocity_bin * 1e2);
  std::printf("max velocity        %12.6f m/s\n", p.max_unambiguous_velocity);
  std::printf("max range           %12.6f m\n", p.max_unambiguous_range);
  std::printf("frame rate          %12.6f Hz\n", p.frame_rate);
  return kExitOk;
}

int cmd_simulate(const GlobalOptions& g, const std::string& scenario, const std::string& out,
                 std::optional<std::size_t> max_frames) {
  const PipelineConfig c = load_effective_config(g);
  PipelineContext ctx(c);
  const ScenarioScript script = load_script(scenario, ctx.params, g);
  std::size_t frames = frame_count(script, ctx.params);
  if (max_frames) frames = std::min(frames, *max_frames);
  PulseFileWriter writer(out, ctx.params, frames * ctx.params.cpi_pulses());
  for (std::size_t k = 0; k < frames && !g_interrupted; ++k) {
    const SynthFrame f = synthesize_frame(script, k, *ctx.synth, ctx.params);
    writer.write_frame(f.pulses);
  }
  std::cerr << "wrote " << writer.pulses_written() << " pulses (" << frames << " CPIs) to " << out
            << "\n";
  return kExitOk;
}

struct RunOptions {
  std::string scenario;
  std::string events;
  std::string jsonl;
  std::string dump_dir;
  bool png = false;
  bool timing = false;
  bool summary = false;
};

int cmd_run(const GlobalOptions& g, const RunOptions& o) {
  const PipelineConfig c = load_effective_config(g);
  const DerivedParams params = derive(c.system);
  const ScenarioScript script = load_script(o.scenario, params, g);

  std::ofstream events_file;
  std::ostream* events_out = &std::cout;
  if (!o.events.empty()) {
    events_file.open(o.events, std::ios::binary);
    if (!events_file) throw std::runtime_error(o.events + ": cannot open for writing");
    events_out = &events_file;
  }
  std::ofstream jsonl;
  if (!o.jsonl.empty()) {
    jsonl.open(o.jsonl, std::ios::binary);
    if (!jsonl) throw std::runtime_error(o.jsonl + ": cannot open for writing");
  }
  if (!o.dump_dir.empty()) std::filesystem::create_directories(o.dump_dir);
  const DetectionScope scope =
      make_scope(params, c.detection.scope_min_m, c.detection.scope_max_m, c.detection.guard_bins);

  EventCsvWriter csv(*events_out, o.timing);
  PipelineCallbacks cb;
  cb.on_event = [&](const FrameEvent& ev) {
    csv.write(ev);
    if (jsonl.is_open()) jsonl << event_json_line(ev) << '\n';
  };
  if (!o.dump_dir.empty()) {
    cb.on_map = [&](const RangeDopplerMap& map, const FrameEvent& ev) {
      char name[32];
      std::snprintf(name, sizeof name, "rd_%06zu", ev.frame_index);
      const std::filesystem::path base = std::filesystem::path(o.dump_dir) / name;
      write_rd_map(base.string() + ".bin", map);
      if (o.png) write_rd_png(base.string() + ".png", map, scope.min_range_bin, scope.max_range_bin);
    };
  }
  const std::vector<FrameEvent> events = run_pipeline(script, c, cb);
  events_out->flush();
  if (o.summary) {
    const ClassificationScore s = score_classification(events, script);
    std::fprintf(stderr, "frames %zu, agreement %zu/%zu (%.1f%%), absent frames active %zu/%zu\n",
                 events.size(), s.agree, s.scored, 100.0 * s.accuracy(), s.absent_active, s.absent);
  }
  return kExitOk;
}

int cmd_bench(const GlobalOptions& g, const std::string& scenario, std::size_t frames) {
  const PipelineConfig c = load_effective_config(g);
  const DerivedParams params = derive(c.system);
  ScenarioScript script = scenario.empty() ? builtin_script() : load_script(scenario, params, g);
  if (scenario.empty() && g.seed) script.seed = *g.seed;
  const BenchReport r = bench(script, c, frames);
  if (g.json) {
    json j = {{"frames", r.frames},          {"mean_s", r.mean_s},
              {"p95_s", r.p95_s},            {"max_s", r.max_s},
              {"cpi_s", r.cpi_s},            {"real_time_factor", r.real_time_factor}};
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }
  std::printf("frames              %zu\n", r.frames);
  std::printf("mean compute        %.3f ms\n", r.mean_s * 1e3);
  std::printf("p95 compute         %.3f ms\n", r.p95_s * 1e3);
  std::printf("max compute         %.3f ms\n", r.max_s * 1e3);
  std::printf("CPI duration        %.3f ms\n", r.cpi_s * 1e3);
  std::printf("real-time factor    %.3f\n", r.real_time_factor);
  return kExitOk;
}

struct ServeOptions {
  unsigned short port = 8765;
  std::size_t max_clients = 8;
  std::string ui_dir;
  std::string scenario;
  std::string activity = "standing";
  double range = 5.0;
  double speed = 0.5;
  std::optional<double> snr;
  bool no_pace = false;
  std::optional<std::size_t> frames;
};

int cmd_serve(const GlobalOptions& g, const ServeOptions& o) {
  const PipelineConfig c = load_effective_config(g);
  const DerivedParams params = derive(c.system);
  ScenarioScript base;
  if (!o.scenario.empty()) base = load_script(o.scenario, params, g);
  if (g.seed) base.seed = *g.seed;
  base.segments.clear();

  LiveService::Options opts;
  opts.server.port = o.port;
  opts.server.max_clients = o.max_clients;
  if (!o.ui_dir.empty()) {
    if (!std::filesystem::is_directory(o.ui_dir)) {
      throw ConfigError("--ui-dir " + o.ui_dir + ": not a directory");
    }
    opts.server.ui_dir = o.ui_dir;
  }
  const auto activity = parse_activity(o.activity);
  if (!activity) throw ConfigError("--activity: unknown activity " + o.activity);
  opts.initial.activity = *activity;
  opts.initial.range = o.range;
  opts.initial.speed = o.speed;
  opts.initial.snr_db = o.snr ? o.snr : base.snr_db;
  opts.pace = !o.no_pace;
  opts.max_frames = o.frames;

  LiveService service(c, base, opts);
  service.start();
  std::cerr << "serving on ws://0.0.0.0:" << service.port() << "/";
  if (opts.server.ui_dir) std::cerr << " (UI at http://localhost:" << service.port() << "/)";
  std::cerr << "\n";
  std::thread watcher([&] {
    while (!g_interrupted.load()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
      if (service.source().stopped()) return;
    }
    service.stop();
  });
  try {
    service.wait();
  } catch (...) {
    g_interrupted.store(true);
    watcher.join();
    throw;
  }
  g_interrupted.store(true);
  watcher.join();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  CLI::App app{"Radar/communication twin: simulation, processing and live streaming"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON config file (missing keys keep defaults)");
  app.add_option("--seed", g.seed, "Override the scenario seed");
  app.add_flag("--json", g.json, "Machine-readable output");
  app.add_option("--thr-up", g.thr_up, "Detection upper threshold, dB above the noise floor");
  app.add_option("--thr-down", g.thr_down, "Detection lower threshold, dB above the noise floor");
  app.add_option("--scope-min-m", g.scope_min, "Detection scope start, m");
  app.add_option("--scope-max-m", g.scope_max, "Detection scope end, m");
  app.add_option("--guard-bins", g.guard_bins, "Zero-Doppler bins excluded on each side");
  app.add_option("--fft-planning", g.fft_planning, "FFTW planning: estimate or measure")
      ->check(CLI::IsMember({"estimate", "measure"}));
  app.add_option("--fft-wisdom", g.fft_wisdom, "FFTW wisdom file to reuse and update");

  auto* derive_cmd = app.add_subcommand("derive-params", "Print the derived radar numerology");

  auto* sim_cmd = app.add_subcommand("simulate", "Write synthesized receive pulses to a file");
  std::string sim_scenario, sim_out;
  std::optional<std::size_t> sim_frames;
  sim_cmd->add_option("--scenario", sim_scenario, "Scenario JSON")->required();
  sim_cmd->add_option("--out", sim_out, "Output pulse file")->required();
  sim_cmd->add_option("--frames", sim_frames, "Stop after this many CPIs");

  auto* run_cmd = app.add_subcommand("run", "Process a scenario and write the event log");
  RunOptions ro;
  run_cmd->add_option("--scenario", ro.scenario, "Scenario JSON")->required();
  run_cmd->add_option("--events", ro.events, "Event CSV (default: stdout)");
  run_cmd->add_option("--jsonl", ro.jsonl, "Newline-delimited JSON mirror of the events");
  run_cmd->add_option("--dump-rd", ro.dump_dir, "Directory for per-frame range-Doppler dumps");
  run_cmd->add_flag("--png", ro.png, "Also write a PNG per dumped frame");
  run_cmd->add_flag("--timing", ro.timing, "Add compute_time_s to the CSV (breaks byte identity)");
  run_cmd->add_flag("--summary", ro.summary, "Print classification agreement to stderr");

  auto* bench_cmd = app.add_subcommand("bench", "Time DSP and decision stages per CPI");
  std::string bench_scenario;
  std::size_t bench_frames = 50;
  bench_cmd->add_option("--scenario", bench_scenario, "Scenario JSON (default: built-in demo)");
  bench_cmd->add_option("--frames", bench_frames, "Number of CPIs to time");

  auto* serve_cmd = app.add_subcommand("serve", "Run the live simulator behind a WebSocket gateway");
  ServeOptions so;
  serve_cmd->add_option("--port", so.port, "Listen port");
  serve_cmd->add_option("--max-clients", so.max_clients, "Concurrent stream clients");
  serve_cmd->add_option("--ui-dir", so.ui_dir, "Static UI directory served over HTTP");
  serve_cmd->add_option("--scenario", so.scenario, "Scenario JSON for human model, clutter, SNR");
  serve_cmd->add_option("--activity", so.activity, "Initial activity");
  serve_cmd->add_option("--range", so.range, "Initial range, m");
  serve_cmd->add_option("--speed", so.speed, "Initial walking speed, m/s");
  serve_cmd->add_option("--snr", so.snr, "Initial SNR, dB");
  serve_cmd->add_flag("--no-pace", so.no_pace, "Run as fast as possible instead of real time");
  serve_cmd->add_option("--frames", so.frames, "Exit after this many frames");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*derive_cmd) return cmd_derive(g);
    if (*sim_cmd) return cmd_simulate(g, sim_scenario, sim_out, sim_frames);
    if (*run_cmd) return cmd_run(g, ro);
    if (*bench_cmd) return cmd_bench(g, bench_scenario, bench_frames);
    if (*serve_cmd) return cmd_serve(g, so);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const PipelineError& e) {
    std::cerr << "runtime error at frame " << e.frame_index() << ": " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
