#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "eogclean/core.hpp"
#include "eogclean/ica.hpp"
#include "json.hpp"

namespace eogclean::artifact {

/// Lags searched satisfy |lag| < max_lag (7 samples is +-20 ms at 250 Hz).
inline constexpr int kDefaultMaxLag = 7;
inline constexpr std::size_t kDefaultSelected = 2;

struct LaggedCorrelation {
  double rho = 0.0;  // in [-1, 0]
  int lag = 0;
};

/// Minimum over lags of the normalized cross-correlation
///   sum_i eog(i) * s(i - lag) / (T * sigma_eog * sigma_s)
/// of the mean-removed sequences, products outside the overlap counted as
/// zero. Positive minima are clamped to 0; ties go to the smaller |lag|, then
/// to the negative lag. max_lag == 0 searches lag 0 only.
/// Throws UndefinedCorrelationError on a zero-variance input.
LaggedCorrelation lagged_eog_correlation(std::span<const double> eog, std::span<const double> signal,
                                         int max_lag = kDefaultMaxLag);

double eog_component_correlation(std::span<const double> eog, std::span<const double> signal,
                                 int max_lag = kDefaultMaxLag);

struct CorrelationReport {
  Eigen::MatrixXd c;             // signals x trials, entries in [-1, 0]
  std::vector<double> cc;        // cc[n] = sum_m |c(n, m)|
  std::vector<std::size_t> selected;
  std::vector<std::string> labels;
  int max_lag = kDefaultMaxLag;
};

/// Correlation of every signal with the EOG inside every trial.
CorrelationReport build_correlation_report(std::span<const double> eog,
                                           std::span<const std::span<const double>> signals,
                                           const std::vector<Interval>& trials,
                                           std::vector<std::string> labels,
                                           int max_lag = kDefaultMaxLag);

/// Components against the trial-sliced EOG; the EOG must span the same
/// samples as the components. Throws SchemaError without trials.
CorrelationReport build_correlation_report(std::span<const double> eog,
                                           const ica::ComponentSet& components,
                                           int max_lag = kDefaultMaxLag);

/// Marks the k largest cc entries, ties to the lower index.
CorrelationReport select_artifactual(CorrelationReport report, std::size_t k = kDefaultSelected);

/// Blackman slopes of `slope_samples` added outside each marked interval:
/// the sample d positions before the start (or after the last marked
/// sample) takes 0.42 + 0.5 cos(pi d / S) + 0.08 cos(2 pi d / S), which is
/// the rising half of a Blackman window. Overlaps combine by maximum.
WindowedMembershipFunction msf_to_wmsf(const MembershipFunction& msf, std::size_t slope_samples);

/// s_n(t) * (1 - alpha * wmsf(t)) for the selected components.
ica::ComponentSet partial_reject(const ica::ComponentSet& components,
                                 std::span<const std::size_t> selected,
                                 const WindowedMembershipFunction& wmsf, double alpha = 1.0);

/// Selected components zeroed: partial_reject with alpha = 1 and wmsf = 1.
ica::ComponentSet complete_reject(const ica::ComponentSet& components,
                                  std::span<const std::size_t> selected);

/// Drops every marked sample column from all channels. Trial bounds are not
/// carried over. Throws EmptyDataError when nothing is left.
Recording excise_artifacts(const Recording& recording, const MembershipFunction& msf);

/// ICA fitted on the EEG channels with the marked samples excised.
ica::UnmixingMatrix fit_diminished_unmixing(const Recording& recording, const MembershipFunction& msf,
                                            const ica::IcaConfig& config = {});

/// Components of a diminished unmixing applied to full-length data. They are
/// flagged non-selectable.
ica::ComponentSet unmix_diminished(const ica::UnmixingMatrix& w_prime, const Recording& recording);

struct UnmixingDifference {
  Eigen::MatrixXd d;     // W' - W after sorting rows by descending norm
  Eigen::MatrixXd d_lr;  // log10|D / W|; -inf where D == 0, NaN where W == 0

  static bool is_zero_denominator(double v) { return std::isnan(v); }
};

UnmixingDifference unmixing_difference(const ica::UnmixingMatrix& w, const ica::UnmixingMatrix& w_prime);

nlohmann::json to_json(const CorrelationReport& report);
std::string to_csv(const CorrelationReport& report);
nlohmann::json to_json(const UnmixingDifference& diff);
/// Row-per-component CSV; zero-denominator cells left blank, -inf as "-inf".
std::string to_csv(const Eigen::MatrixXd& m);

}  // namespace eogclean::artifact
