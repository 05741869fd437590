#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "eogclean/artifact.hpp"
#include "eogclean/core.hpp"
#include "json.hpp"

namespace eogclean::eval {

/// Cumulative EOG correlation (sum over trials of |rho|) per EEG channel.
struct ChannelCc {
  std::vector<std::string> labels;
  std::vector<double> cc;
};

/// Throws SchemaError without an EOG channel or trial bounds.
ChannelCc channel_eog_cc(const Recording& recording, int max_lag = artifact::kDefaultMaxLag);

struct ReductionReport {
  std::vector<std::string> labels;
  std::vector<double> per_channel_before;
  std::vector<double> per_channel_after;
  double reduction_percent = 0.0;  // 100 * (1 - mean(after) / mean(before))
};

ReductionReport reduction(const ChannelCc& before, const ChannelCc& after);

/// Epoch-average power ratio. Each trial is cut into non-overlapping epochs
/// of epoch_len_s; per channel, SNR = mean(avg^2) / mean((epoch - avg)^2)
/// where avg is the epoch-averaged waveform. Epoch means are kept. Values are
/// averaged over EEG channels; the global value pools the epochs of all
/// trials. Zero noise (below 1e-26 of the epoch power, i.e. rounding) yields
/// +inf. A recording without trial bounds is treated as one trial.
struct SnrReport {
  double epoch_len_s = 1.0;
  std::vector<double> per_trial;
  double global = 0.0;
};

/// Throws ArgumentError if an epoch is shorter than 2 samples or a trial
/// holds fewer than 2 epochs.
SnrReport snr(const Recording& recording, double epoch_len_s = 1.0);

/// Amari error of P = estimated * true_mixing normalized by 2n(n-1): 0 for a
/// scaled permutation, 1 at most. Throws DegeneracyError for singular inputs.
double amari_index(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& true_mixing);

/// Amari error of an already formed product matrix.
double amari_index_of(const Eigen::MatrixXd& p);

/// Amari error restricted to the sources other than `excluded_source`: the
/// column is removed together with the row that minimizes the remaining
/// error, i.e. the component best accounted to the excluded source.
double partial_amari_index(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& true_mixing,
                           std::size_t excluded_source);

nlohmann::json to_json(const ReductionReport& report);
std::string to_csv(const ReductionReport& report);
nlohmann::json to_json(const SnrReport& report);
std::string to_csv(const SnrReport& report);

}  // namespace eogclean::eval
