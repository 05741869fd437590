// Command-line front end: synth, preprocess, segment, run, eval, annotate, stats.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "eogclean/annotation_server.hpp"
#include "eogclean/core.hpp"
#include "eogclean/dsp.hpp"
#include "eogclean/errors.hpp"
#include "eogclean/eval.hpp"
#include "eogclean/format.hpp"
#include "eogclean/io.hpp"
#include "eogclean/pipeline.hpp"
#include "eogclean/segmentation.hpp"
#include "eogclean/synth.hpp"

namespace fs = std::filesystem;
using namespace eogclean;

namespace {

annotation::AnnotationServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

io::PipelineConfig load_config(const std::optional<std::string>& path) {
  if (!path) return {};
  try {
    return io::config_from_json(nlohmann::json::parse(io::read_text(*path)));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("config: ") + e.what());
  }
}

Recording ensure_segmented(const Recording& rec) {
  return rec.trial_bounds().empty() ? seg::segment(rec) : rec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG eye-artifact cleaning: filtering, ICA, EOG-based rejection"};
  app.require_subcommand(1);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic session with known ground truth");
  std::string synth_out;
  std::optional<std::string> synth_truth, synth_msf;
  synth::SynthSpec spec;
  double scale = 0.1, widen = 0.0;
  synth_cmd->add_option("--out", synth_out, "Recording output path")->required();
  synth_cmd->add_option("--truth", synth_truth, "Ground-truth JSON output path");
  synth_cmd->add_option("--msf", synth_msf, "True blink MSF output path");
  synth_cmd->add_option("--seed", spec.seed);
  synth_cmd->add_option("--channels", spec.n_channels);
  synth_cmd->add_option("--sources", spec.n_sources);
  synth_cmd->add_option("--scale", scale, "Trial durations as a fraction of the reference durations");
  synth_cmd->add_option("--rate", spec.sample_rate);
  synth_cmd->add_option("--blink-rate", spec.blink_rate_per_min, "Blinks per minute");
  synth_cmd->add_option("--blink-amplitude", spec.blink_amplitude);
  synth_cmd->add_option("--widen", widen, "Widen each written MSF interval by this many seconds");
  synth_cmd->add_option("--jitter", spec.blink_topography_jitter);
  synth_cmd->add_option("--sensor-noise", spec.sensor_noise);
  synth_cmd->add_option("--evoked", spec.evoked_amplitude);
  synth_cmd->add_option("--line-noise", spec.line_noise_amplitude);

  // preprocess
  auto* pre_cmd = app.add_subcommand("preprocess", "Resample and filter a recording");
  std::string pre_in, pre_out;
  std::optional<std::string> pre_config;
  pre_cmd->add_option("--in", pre_in)->required();
  pre_cmd->add_option("--out", pre_out)->required();
  pre_cmd->add_option("--config", pre_config);

  // segment
  auto* seg_cmd = app.add_subcommand("segment", "Detect trigger pulses and store trial bounds");
  std::string seg_in, seg_out;
  seg_cmd->add_option("--in", seg_in)->required();
  seg_cmd->add_option("--out", seg_out)->required();

  // run
  auto* run_cmd = app.add_subcommand("run", "Run the full cleaning pipeline");
  std::string run_in, run_out, run_mode = "cr";
  std::optional<std::string> run_config, run_msf;
  std::optional<double> o_alpha, o_slope;
  std::optional<std::size_t> o_k;
  std::optional<std::uint64_t> o_seed;
  std::optional<int> o_max_lag;
  bool o_no_preprocess = false;
  run_cmd->add_option("--in", run_in)->required();
  run_cmd->add_option("--out", run_out, "Output directory")->required();
  run_cmd->add_option("--mode", run_mode)->check(CLI::IsMember({"cr", "pr", "diminished"}));
  run_cmd->add_option("--config", run_config, "Pipeline config JSON");
  run_cmd->add_option("--msf", run_msf, "MSF JSON (required for pr and diminished)");
  run_cmd->add_option("--alpha", o_alpha);
  run_cmd->add_option("--k", o_k, "Number of components to reject");
  run_cmd->add_option("--seed", o_seed, "ICA seed");
  run_cmd->add_option("--slope", o_slope, "WMSF slope in seconds");
  run_cmd->add_option("--max-lag", o_max_lag);
  run_cmd->add_flag("--no-preprocess", o_no_preprocess);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Compare EOG correlation and SNR of two recordings");
  std::string eval_before, eval_after, eval_out;
  double eval_epoch = 1.0;
  int eval_max_lag = artifact::kDefaultMaxLag;
  eval_cmd->add_option("--before", eval_before)->required();
  eval_cmd->add_option("--after", eval_after)->required();
  eval_cmd->add_option("--out", eval_out, "Output directory")->required();
  eval_cmd->add_option("--epoch", eval_epoch, "SNR epoch length in seconds");
  eval_cmd->add_option("--max-lag", eval_max_lag);

  // annotate
  auto* ann_cmd = app.add_subcommand("annotate", "Serve the annotation HTTP API");
  std::string ann_in, ann_msf, ann_bind = "127.0.0.1:8080";
  std::optional<std::string> ann_static;
  bool ann_serve = false;
  ann_cmd->add_flag("--serve", ann_serve)->required();
  ann_cmd->add_option("--in", ann_in)->required();
  ann_cmd->add_option("--msf", ann_msf, "MSF file, created on first save")->required();
  ann_cmd->add_option("--bind", ann_bind, "host:port");
  ann_cmd->add_option("--static", ann_static, "Directory with UI assets");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Print annotation statistics of an MSF");
  std::string stats_msf;
  stats_cmd->add_option("--msf", stats_msf)->required();

  CLI11_PARSE(app, argc, argv);

  std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (*synth_cmd) {
      spec.trial_durations_s = synth::scaled_trial_durations_s(scale);
      const synth::Session session = synth::generate(spec);
      io::save_recording(session.recording, synth_out);
      if (synth_truth) io::write_text(*synth_truth, synth::to_json(session.truth).dump(2) + "\n");
      if (synth_msf) {
        io::save_msf(synth::perturb_msf(session.truth.msf, widen, spec.sample_rate), spec.sample_rate, *synth_msf);
      }
    } else if (*pre_cmd) {
      const io::PipelineConfig cfg = load_config(pre_config);
      cfg.validate();
      io::save_recording(dsp::preprocess(io::load_recording(pre_in), cfg.filter_chain()), pre_out);
    } else if (*seg_cmd) {
      const Recording rec = seg::segment(io::load_recording(seg_in));
      io::save_recording(rec, seg_out);
      nlohmann::json trials = nlohmann::json::array();
      for (const auto& t : rec.trial_bounds()) {
        trials.push_back({{"start", t.start}, {"end", t.end}, {"samples", t.size()},
                          {"seconds", static_cast<double>(t.size()) / rec.sample_rate()}});
      }
      std::cout << nlohmann::json{{"trials", trials}}.dump(2) << "\n";
    } else if (*run_cmd) {
      stage = "config";
      io::PipelineConfig cfg = load_config(run_config);
      if (o_alpha) cfg.alpha = *o_alpha;
      if (o_k) cfg.k_selected = *o_k;
      if (o_seed) cfg.ica.seed = *o_seed;
      if (o_slope) cfg.wmsf_slope_s = *o_slope;
      if (o_max_lag) cfg.max_lag = *o_max_lag;
      if (o_no_preprocess) cfg.preprocess = false;
      const pipeline::Mode mode = pipeline::mode_from_string(run_mode);
      stage = "run";
      std::optional<fs::path> msf_path;
      if (run_msf) msf_path = *run_msf;
      for (const auto& p : pipeline::run_pipeline(cfg, run_in, msf_path, mode, run_out)) {
        std::cout << p.string() << "\n";
      }
    } else if (*eval_cmd) {
      const Recording before = ensure_segmented(io::load_recording(eval_before));
      const Recording after = ensure_segmented(io::load_recording(eval_after));
      const eval::ReductionReport red =
          eval::reduction(eval::channel_eog_cc(before, eval_max_lag), eval::channel_eog_cc(after, eval_max_lag));
      const eval::SnrReport sb = eval::snr(before, eval_epoch);
      const eval::SnrReport sa = eval::snr(after, eval_epoch);
      fs::create_directories(eval_out);
      io::write_text(fs::path(eval_out) / "reduction.json", eval::to_json(red).dump(2) + "\n");
      io::write_text(fs::path(eval_out) / "reduction.csv", eval::to_csv(red));
      io::write_text(fs::path(eval_out) / "snr.json",
                     nlohmann::json{{"before", eval::to_json(sb)}, {"after", eval::to_json(sa)}}.dump(2) + "\n");
      io::write_text(fs::path(eval_out) / "snr_before.csv", eval::to_csv(sb));
      io::write_text(fs::path(eval_out) / "snr_after.csv", eval::to_csv(sa));
      std::cout << "reduction_percent " << format_number(red.reduction_percent) << "\n"
                << "snr_before " << format_number(sb.global) << "\n"
                << "snr_after " << format_number(sa.global) << "\n";
    } else if (*ann_cmd) {
      const auto colon = ann_bind.rfind(':');
      if (colon == std::string::npos) throw ArgumentError("--bind expects host:port");
      const std::string host = ann_bind.substr(0, colon);
      int port = 0;
      try {
        port = std::stoi(ann_bind.substr(colon + 1));
      } catch (const std::exception&) {
        throw ArgumentError("--bind expects host:port");
      }
      std::optional<fs::path> static_dir;
      if (ann_static) static_dir = *ann_static;
      annotation::AnnotationServer server(io::load_recording(ann_in), ann_msf, static_dir);
      const int bound = server.bind(host, port);
      if (bound < 0) throw ArgumentError("cannot bind " + ann_bind);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on http://" << host << ":" << bound << std::endl;
      server.listen();
      g_server = nullptr;
    } else if (*stats_cmd) {
      const MsfDocument doc = io::load_msf(stats_msf);
      const AnnotationStats s = msf_stats(doc.msf, doc.sample_rate);
      std::cout << nlohmann::json{{"count", s.count},
                                  {"marked_samples", s.marked_samples},
                                  {"duration_fraction", s.duration_fraction},
                                  {"mean_s", s.mean_s},
                                  {"std_s", s.std_s},
                                  {"median_s", s.median_s}}
                       .dump(2)
                << "\n";
    }
  } catch (const pipeline::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: [" << stage << "] " << e.what() << "\n";
    return 1;
  }
  return 0;
}
