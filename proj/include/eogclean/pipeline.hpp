#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eogclean/artifact.hpp"
#include "eogclean/errors.hpp"
#include "eogclean/eval.hpp"
#include "eogclean/ica.hpp"
#include "eogclean/io.hpp"

namespace eogclean::pipeline {

/// cr: zero the selected components. pr: attenuate them inside the windowed
/// MSF. diminished: cr cleaning plus an unmixing refitted on MSF-excised data
/// and its difference against the full-data unmixing.
enum class Mode { cr, pr, diminished };

Mode mode_from_string(const std::string& s);
std::string to_string(Mode mode);

/// Error raised by a pipeline stage; what() is prefixed with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error("[" + stage + "] " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct CleaningResult {
  Recording cleaned;
  ica::UnmixingMatrix w;
  artifact::CorrelationReport correlation;
  eval::ReductionReport reduction;
  eval::SnrReport snr_before;
  eval::SnrReport snr_after;
  std::optional<ica::UnmixingMatrix> w_prime;
  std::optional<artifact::UnmixingDifference> difference;
  std::vector<std::string> warnings;
};

/// Runs ICA, component selection, rejection and evaluation on a recording
/// that is already preprocessed and segmented. `msf` is required for pr and
/// diminished. EOG and trigger channels pass through unchanged.
CleaningResult clean(const Recording& recording, const std::optional<MembershipFunction>& msf, Mode mode,
                     const io::PipelineConfig& config);

/// load -> preprocess -> segment -> clean -> write reports into output_dir.
/// Returns the written paths. Report files carry no timestamps, so equal
/// inputs give byte-identical outputs.
std::vector<std::filesystem::path> run_pipeline(const io::PipelineConfig& config,
                                                const std::filesystem::path& input,
                                                const std::optional<std::filesystem::path>& msf_path, Mode mode,
                                                const std::filesystem::path& output_dir);

}  // namespace eogclean::pipeline
