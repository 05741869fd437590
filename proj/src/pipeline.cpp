#include "eogclean/pipeline.hpp"

#include <cmath>

#include "eogclean/dsp.hpp"
#include "eogclean/segmentation.hpp"

namespace eogclean::pipeline {
namespace {

template <typename F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string with_config_comment(const io::PipelineConfig& config, Mode mode, const std::string& csv) {
  nlohmann::json meta = {{"mode", to_string(mode)}, {"config", io::to_json(config)}};
  return "# " + meta.dump() + "\n" + csv;
}

}  // namespace

Mode mode_from_string(const std::string& s) {
  if (s == "cr") return Mode::cr;
  if (s == "pr") return Mode::pr;
  if (s == "diminished") return Mode::diminished;
  throw ArgumentError("unknown mode '" + s + "' (expected cr, pr or diminished)");
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::cr: return "cr";
    case Mode::pr: return "pr";
    case Mode::diminished: return "diminished";
  }
  return "unknown";
}

CleaningResult clean(const Recording& recording, const std::optional<MembershipFunction>& msf, Mode mode,
                     const io::PipelineConfig& config) {
  config.validate();
  if (!recording.eog_index()) throw StageError("input", "recording has no EOG channel");
  if ((mode == Mode::pr || mode == Mode::diminished) && !msf) {
    throw StageError("input", "mode " + to_string(mode) + " requires an MSF");
  }
  if (msf && msf->length() != recording.length()) {
    throw StageError("input", "MSF length " + std::to_string(msf->length()) + " differs from recording length " +
                                  std::to_string(recording.length()));
  }

  const Recording eeg = eeg_channels(recording);
  const auto eog = recording.samples(*recording.eog_index());

  ica::UnmixingMatrix w = stage("ica", [&] { return ica::fit_ica(eeg, config.ica); });
  CleaningResult result{recording, w, {}, {}, {}, {}, std::nullopt, std::nullopt, {}};
  if (!w.converged) {
    result.warnings.push_back("ICA did not converge within " + std::to_string(config.ica.max_iterations) +
                              " iterations");
  }

  const ica::ComponentSet components = ica::unmix(w, eeg);
  result.correlation = stage("select", [&] {
    return artifact::select_artifactual(artifact::build_correlation_report(eog, components, config.max_lag),
                                        std::min(config.k_selected, components.count()));
  });

  const ica::ComponentSet kept = stage("reject", [&] {
    if (mode == Mode::pr) {
      const auto slope = static_cast<std::size_t>(std::llround(config.wmsf_slope_s * recording.sample_rate()));
      return artifact::partial_reject(components, result.correlation.selected, artifact::msf_to_wmsf(*msf, slope),
                                      config.alpha);
    }
    return artifact::complete_reject(components, result.correlation.selected);
  });

  const Recording rebuilt = ica::remix(w, kept);
  std::vector<Channel> channels = recording.channels();
  const auto eeg_idx = recording.eeg_indices();
  for (std::size_t i = 0; i < eeg_idx.size(); ++i) channels[eeg_idx[i]] = rebuilt.channel(i);
  result.cleaned = recording.with_channels(std::move(channels));

  if (mode == Mode::diminished) {
    stage("diminished", [&] {
      ica::UnmixingMatrix w_prime = artifact::fit_diminished_unmixing(recording, *msf, config.ica);
      if (!w_prime.converged) result.warnings.push_back("artifact-diminished ICA did not converge");
      result.difference = artifact::unmixing_difference(w, w_prime);
      result.w_prime = std::move(w_prime);
      return 0;
    });
  }

  stage("eval", [&] {
    result.reduction = eval::reduction(eval::channel_eog_cc(recording, config.max_lag),
                                       eval::channel_eog_cc(result.cleaned, config.max_lag));
    result.snr_before = eval::snr(recording, config.epoch_len_s);
    result.snr_after = eval::snr(result.cleaned, config.epoch_len_s);
    return 0;
  });
  return result;
}

std::vector<std::filesystem::path> run_pipeline(const io::PipelineConfig& config,
                                                const std::filesystem::path& input,
                                                const std::optional<std::filesystem::path>& msf_path, Mode mode,
                                                const std::filesystem::path& output_dir) {
  stage("config", [&] {
    config.validate();
    return 0;
  });
  Recording recording = stage("load", [&] { return io::load_recording(input); });
  if (config.preprocess) {
    recording = stage("preprocess", [&] { return dsp::preprocess(recording, config.filter_chain()); });
  }
  if (recording.trial_bounds().empty()) {
    recording = stage("segment", [&] { return seg::segment(recording); });
  }

  std::optional<MembershipFunction> msf;
  if (msf_path) {
    msf = stage("msf", [&] {
      const MsfDocument doc = io::load_msf(*msf_path);
      if (std::abs(doc.sample_rate - recording.sample_rate()) > 1e-9 * recording.sample_rate()) {
        throw SchemaError("MSF sample rate does not match the processed recording");
      }
      return doc.msf;
    });
  }

  const CleaningResult result = clean(recording, msf, mode, config);

  return stage("write", [&] {
    std::filesystem::create_directories(output_dir);
    std::vector<std::filesystem::path> written;
    auto emit = [&](const std::string& name, const std::string& text) {
      const auto path = output_dir / name;
      io::write_text(path, text);
      written.push_back(path);
    };
    auto report = [&](nlohmann::json body) {
      body["mode"] = to_string(mode);
      body["config"] = io::to_json(config);
      return body.dump(2) + "\n";
    };

    io::save_recording(result.cleaned, output_dir / "cleaned.eogrec");
    written.push_back(output_dir / "cleaned.eogrec");

    emit("correlation_report.json", report({{"correlation", artifact::to_json(result.correlation)}}));
    emit("correlation_report.csv", with_config_comment(config, mode, artifact::to_csv(result.correlation)));
    emit("reduction.json", report({{"reduction", eval::to_json(result.reduction)}}));
    emit("reduction.csv", with_config_comment(config, mode, eval::to_csv(result.reduction)));
    emit("snr.json", report({{"before", eval::to_json(result.snr_before)}, {"after", eval::to_json(result.snr_after)}}));
    emit("snr_before.csv", with_config_comment(config, mode, eval::to_csv(result.snr_before)));
    emit("snr_after.csv", with_config_comment(config, mode, eval::to_csv(result.snr_after)));

    if (result.difference) {
      emit("unmixing_w.json", report({{"unmixing", ica::to_json(result.w)}}));
      emit("unmixing_w_prime.json", report({{"unmixing", ica::to_json(*result.w_prime)}}));
      emit("difference.json", report({{"difference", artifact::to_json(*result.difference)}}));
      emit("difference_d.csv", with_config_comment(config, mode, artifact::to_csv(result.difference->d)));
      emit("difference_dlr.csv", with_config_comment(config, mode, artifact::to_csv(result.difference->d_lr)));
    }

    nlohmann::json files = nlohmann::json::array();
    for (const auto& p : written) files.push_back(p.filename().string());
    emit("summary.json", report({{"ica_converged", result.w.converged},
                                 {"ica_iterations", result.w.iterations},
                                 {"warnings", result.warnings},
                                 {"selected", result.correlation.selected},
                                 {"reduction_percent", result.reduction.reduction_percent},
                                 {"files", files}}));
    return written;
  });
}

}  // namespace eogclean::pipeline
