#include "eogclean/eval.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "eogclean/errors.hpp"
#include "eogclean/format.hpp"

namespace eogclean::eval {
namespace {

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

constexpr double kNoiseFloor = 1e-26;

// Epochs given as start offsets into one channel.
double epoch_snr(std::span<const double> x, const std::vector<std::size_t>& starts, std::size_t epoch) {
  std::vector<double> avg(epoch, 0.0);
  for (std::size_t s : starts) {
    for (std::size_t t = 0; t < epoch; ++t) avg[t] += x[s + t];
  }
  const double k = static_cast<double>(starts.size());
  for (double& a : avg) a /= k;

  double signal = 0.0;
  for (double a : avg) signal += a * a;
  signal /= static_cast<double>(epoch);

  double noise = 0.0, power = 0.0;
  for (std::size_t s : starts) {
    for (std::size_t t = 0; t < epoch; ++t) {
      const double d = x[s + t] - avg[t];
      noise += d * d;
      power += x[s + t] * x[s + t];
    }
  }
  noise /= k * static_cast<double>(epoch);
  power /= k * static_cast<double>(epoch);
  // Deviations at the rounding level of the average count as no noise.
  if (noise <= kNoiseFloor * power) return std::numeric_limits<double>::infinity();
  return signal / noise;
}

double channel_mean_snr(const Recording& rec, const std::vector<std::size_t>& starts, std::size_t epoch) {
  const auto eeg = rec.eeg_indices();
  if (eeg.empty()) throw SchemaError("snr: recording has no EEG channels");
  double acc = 0.0;
  for (std::size_t ch : eeg) acc += epoch_snr(rec.samples(ch), starts, epoch);
  return acc / static_cast<double>(eeg.size());
}

}  // namespace

ChannelCc channel_eog_cc(const Recording& recording, int max_lag) {
  if (!recording.eog_index()) throw SchemaError("channel_eog_cc: recording has no EOG channel");
  if (recording.trial_bounds().empty()) throw SchemaError("channel_eog_cc: recording has no trials");

  std::vector<std::span<const double>> signals;
  std::vector<std::string> labels;
  for (std::size_t i : recording.eeg_indices()) {
    signals.push_back(recording.samples(i));
    labels.push_back(recording.channel(i).label);
  }
  const auto report = artifact::build_correlation_report(recording.samples(*recording.eog_index()), signals,
                                                         recording.trial_bounds(), labels, max_lag);
  return {std::move(labels), report.cc};
}

ReductionReport reduction(const ChannelCc& before, const ChannelCc& after) {
  if (before.labels != after.labels || before.cc.size() != after.cc.size() ||
      before.cc.size() != before.labels.size()) {
    throw SchemaError("reduction: channel sets differ");
  }
  if (before.cc.empty()) throw SchemaError("reduction: no channels");
  for (double v : before.cc) {
    if (v < 0.0) throw ArgumentError("reduction: cumulative coefficients must be non-negative");
  }
  ReductionReport out;
  out.labels = before.labels;
  out.per_channel_before = before.cc;
  out.per_channel_after = after.cc;
  out.reduction_percent = 100.0 * (1.0 - mean(after.cc) / mean(before.cc));
  return out;
}

SnrReport snr(const Recording& recording, double epoch_len_s) {
  const auto epoch = static_cast<std::size_t>(std::llround(epoch_len_s * recording.sample_rate()));
  if (epoch < 2) throw ArgumentError("snr: epochs must span at least 2 samples");

  std::vector<Interval> trials = recording.trial_bounds();
  if (trials.empty()) trials.push_back({0, recording.length()});

  SnrReport out;
  out.epoch_len_s = epoch_len_s;
  std::vector<std::size_t> pooled;
  for (const auto& tr : trials) {
    const std::size_t count = tr.size() / epoch;
    if (count < 2) {
      throw ArgumentError("snr: trial [" + std::to_string(tr.start) + ", " + std::to_string(tr.end) +
                          ") holds fewer than 2 epochs");
    }
    std::vector<std::size_t> starts;
    for (std::size_t k = 0; k < count; ++k) starts.push_back(tr.start + k * epoch);
    out.per_trial.push_back(channel_mean_snr(recording, starts, epoch));
    pooled.insert(pooled.end(), starts.begin(), starts.end());
  }
  out.global = channel_mean_snr(recording, pooled, epoch);
  return out;
}

double amari_index_of(const Eigen::MatrixXd& p) {
  const Eigen::Index n = p.rows();
  if (n != p.cols() || n == 0) throw ArgumentError("amari_index: matrix must be square and non-empty");
  if (n == 1) return 0.0;
  const Eigen::MatrixXd a = p.cwiseAbs();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double row_max = a.row(i).maxCoeff();
    const double col_max = a.col(i).maxCoeff();
    if (!(row_max > 0.0) || !(col_max > 0.0)) {
      throw DegeneracyError("amari_index: product matrix has a zero row or column");
    }
    total += a.row(i).sum() / row_max - 1.0;
    total += a.col(i).sum() / col_max - 1.0;
  }
  return total / (2.0 * static_cast<double>(n) * static_cast<double>(n - 1));
}

double amari_index(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& true_mixing) {
  if (estimated.rows() != estimated.cols() || estimated.rows() != true_mixing.rows() ||
      true_mixing.rows() != true_mixing.cols()) {
    throw ArgumentError("amari_index: inputs must be square and of equal size");
  }
  for (const Eigen::MatrixXd* m : {&estimated, &true_mixing}) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(*m);
    if (lu.rank() < m->rows()) throw DegeneracyError("amari_index: singular input matrix");
  }
  return amari_index_of(estimated * true_mixing);
}

double partial_amari_index(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& true_mixing,
                           std::size_t excluded_source) {
  const Eigen::MatrixXd p = estimated * true_mixing;
  const Eigen::Index n = p.rows();
  const auto skip_col = static_cast<Eigen::Index>(excluded_source);
  if (n != p.cols() || skip_col >= n || n < 2) {
    throw ArgumentError("partial_amari_index: need a square product and a valid source index");
  }
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index drop = 0; drop < n; ++drop) {
    Eigen::MatrixXd sub(n - 1, n - 1);
    for (Eigen::Index i = 0, si = 0; i < n; ++i) {
      if (i == drop) continue;
      for (Eigen::Index j = 0, sj = 0; j < n; ++j) {
        if (j == skip_col) continue;
        sub(si, sj++) = p(i, j);
      }
      ++si;
    }
    try {
      best = std::min(best, amari_index_of(sub));
    } catch (const DegeneracyError&) {
    }
  }
  if (!std::isfinite(best)) throw DegeneracyError("partial_amari_index: every reduction is degenerate");
  return best;
}

nlohmann::json to_json(const ReductionReport& report) {
  return {{"labels", report.labels},
          {"before", report.per_channel_before},
          {"after", report.per_channel_after},
          {"reduction_percent", report.reduction_percent}};
}

std::string to_csv(const ReductionReport& report) {
  std::ostringstream os;
  os << "channel,before,after\n";
  for (std::size_t i = 0; i < report.labels.size(); ++i) {
    os << report.labels[i] << ',' << format_number(report.per_channel_before[i]) << ','
       << format_number(report.per_channel_after[i]) << '\n';
  }
  os << "reduction_percent,," << format_number(report.reduction_percent) << '\n';
  return os.str();
}

nlohmann::json to_json(const SnrReport& report) {
  nlohmann::json trials = nlohmann::json::array();
  for (double v : report.per_trial) {
    trials.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(format_number(v)));
  }
  return {{"epoch_len_s", report.epoch_len_s},
          {"per_trial", trials},
          {"global", std::isfinite(report.global) ? nlohmann::json(report.global)
                                                  : nlohmann::json(format_number(report.global))}};
}

std::string to_csv(const SnrReport& report) {
  std::ostringstream os;
  os << "experiment,snr\n";
  for (std::size_t i = 0; i < report.per_trial.size(); ++i) {
    os << "trial_" << (i + 1) << ',' << format_number(report.per_trial[i]) << '\n';
  }
  os << "global," << format_number(report.global) << '\n';
  return os.str();
}

}  // namespace eogclean::eval
