#include "eogclean/artifact.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "eogclean/errors.hpp"
#include "eogclean/format.hpp"

namespace eogclean::artifact {
namespace {

std::vector<double> centered(std::span<const double> x, double& sigma) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  std::vector<double> out(x.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] - mean;
    ss += out[i] * out[i];
  }
  sigma = std::sqrt(ss / n);
  return out;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

void check_selection(const ica::ComponentSet& components, std::span<const std::size_t> selected) {
  if (!components.selectable) {
    throw ArgumentError("components from an artifact-diminished unmixing cannot be rejected");
  }
  for (std::size_t idx : selected) {
    if (idx >= components.count()) {
      throw ArgumentError("selected component " + std::to_string(idx) + " out of range");
    }
  }
}

Eigen::MatrixXd sort_rows_by_norm(const Eigen::MatrixXd& m) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return m.row(a).norm() > m.row(b).norm(); });
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.row(i) = m.row(order[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

LaggedCorrelation lagged_eog_correlation(std::span<const double> eog, std::span<const double> signal,
                                         int max_lag) {
  if (eog.size() != signal.size()) {
    throw ArgumentError("eog correlation: sequences differ in length");
  }
  if (max_lag < 0) throw ArgumentError("eog correlation: max_lag must be non-negative");
  if (eog.empty()) throw UndefinedCorrelationError("eog correlation: empty sequences");

  double sigma_e = 0.0;
  double sigma_s = 0.0;
  const std::vector<double> e = centered(eog, sigma_e);
  const std::vector<double> s = centered(signal, sigma_s);
  if (!(sigma_e > 0.0) || !(sigma_s > 0.0)) {
    throw UndefinedCorrelationError("eog correlation: zero-variance input");
  }

  const auto t = static_cast<std::ptrdiff_t>(e.size());
  const double norm = static_cast<double>(t) * sigma_e * sigma_s;
  auto at_lag = [&](std::ptrdiff_t lag) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, lag);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(t, t + lag);
    double acc = 0.0;
    for (std::ptrdiff_t i = lo; i < hi; ++i) acc += e[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i - lag)];
    return acc / norm;
  };

  LaggedCorrelation best{at_lag(0), 0};
  for (int k = 1; k < max_lag; ++k) {
    for (int lag : {-k, k}) {
      const double r = at_lag(lag);
      if (r < best.rho) best = {r, lag};
    }
  }
  if (best.rho > 0.0) best = {0.0, 0};
  best.rho = std::max(best.rho, -1.0);
  return best;
}

double eog_component_correlation(std::span<const double> eog, std::span<const double> signal, int max_lag) {
  return lagged_eog_correlation(eog, signal, max_lag).rho;
}

CorrelationReport build_correlation_report(std::span<const double> eog,
                                           std::span<const std::span<const double>> signals,
                                           const std::vector<Interval>& trials,
                                           std::vector<std::string> labels, int max_lag) {
  if (trials.empty()) throw SchemaError("correlation report: no trials defined");
  if (labels.size() != signals.size()) throw SchemaError("correlation report: label count mismatch");
  for (const auto& sig : signals) {
    if (sig.size() != eog.size()) throw SchemaError("correlation report: EOG and signal lengths differ");
  }
  for (const auto& tr : trials) {
    if (tr.end > eog.size() || tr.start >= tr.end) throw SchemaError("correlation report: trial out of range");
  }

  CorrelationReport report;
  report.max_lag = max_lag;
  report.labels = std::move(labels);
  const auto n = static_cast<Eigen::Index>(signals.size());
  const auto m = static_cast<Eigen::Index>(trials.size());
  report.c = Eigen::MatrixXd::Zero(n, m);
  report.cc.assign(signals.size(), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < m; ++k) {
      const Interval& tr = trials[static_cast<std::size_t>(k)];
      const double rho = eog_component_correlation(eog.subspan(tr.start, tr.size()),
                                                   signals[static_cast<std::size_t>(i)].subspan(tr.start, tr.size()),
                                                   max_lag);
      report.c(i, k) = rho;
      report.cc[static_cast<std::size_t>(i)] += std::abs(rho);
    }
  }
  return report;
}

CorrelationReport build_correlation_report(std::span<const double> eog, const ica::ComponentSet& components,
                                           int max_lag) {
  if (eog.size() != components.length()) {
    throw SchemaError("correlation report: EOG has " + std::to_string(eog.size()) +
                      " samples, components have " + std::to_string(components.length()));
  }
  std::vector<std::span<const double>> rows;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < components.count(); ++i) {
    rows.push_back(components.component(i));
    labels.push_back("IC" + std::to_string(i + 1));
  }
  return build_correlation_report(eog, rows, components.trial_bounds, std::move(labels), max_lag);
}

CorrelationReport select_artifactual(CorrelationReport report, std::size_t k) {
  if (k < 1 || k > report.cc.size()) {
    throw ArgumentError("select_artifactual: k = " + std::to_string(k) + " outside [1, " +
                        std::to_string(report.cc.size()) + "]");
  }
  std::vector<std::size_t> order(report.cc.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return report.cc[a] > report.cc[b]; });
  report.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(report.selected.begin(), report.selected.end());
  return report;
}

WindowedMembershipFunction msf_to_wmsf(const MembershipFunction& msf, std::size_t slope_samples) {
  const MembershipFunction norm = msf.is_normalized() ? msf : msf_normalize(msf);
  WindowedMembershipFunction out;
  out.length = norm.length();
  out.slope_samples = slope_samples;
  out.values.assign(norm.length(), 0.0);

  std::vector<double> ramp(slope_samples + 1, 0.0);
  const double s = static_cast<double>(slope_samples);
  for (std::size_t d = 0; d <= slope_samples; ++d) {
    const double x = std::numbers::pi * static_cast<double>(d) / std::max(s, 1.0);
    ramp[d] = std::clamp(0.42 + 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x), 0.0, 1.0);
  }

  for (const auto& iv : norm.intervals()) {
    for (std::size_t i = iv.start; i < iv.end; ++i) out.values[i] = 1.0;
    for (std::size_t d = 1; d <= slope_samples; ++d) {
      if (d <= iv.start) {
        double& v = out.values[iv.start - d];
        v = std::max(v, ramp[d]);
      }
      const std::size_t after = iv.end - 1 + d;
      if (after < out.length) {
        double& v = out.values[after];
        v = std::max(v, ramp[d]);
      }
    }
  }
  return out;
}

ica::ComponentSet partial_reject(const ica::ComponentSet& components, std::span<const std::size_t> selected,
                                 const WindowedMembershipFunction& wmsf, double alpha) {
  check_selection(components, selected);
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("partial_reject: alpha must lie in [0, 1]");
  if (wmsf.values.size() != components.length()) {
    throw SchemaError("partial_reject: WMSF has " + std::to_string(wmsf.values.size()) +
                      " samples, components have " + std::to_string(components.length()));
  }

  ica::ComponentSet out = components;
  for (std::size_t idx : selected) {
    auto row = out.components.row(static_cast<Eigen::Index>(idx));
    for (Eigen::Index t = 0; t < row.size(); ++t) {
      row(t) *= 1.0 - alpha * wmsf.values[static_cast<std::size_t>(t)];
    }
  }
  return out;
}

ica::ComponentSet complete_reject(const ica::ComponentSet& components, std::span<const std::size_t> selected) {
  WindowedMembershipFunction all;
  all.length = components.length();
  all.values.assign(components.length(), 1.0);
  return partial_reject(components, selected, all, 1.0);
}

Recording excise_artifacts(const Recording& recording, const MembershipFunction& msf) {
  if (msf.length() != recording.length()) {
    throw SchemaError("excise_artifacts: MSF length " + std::to_string(msf.length()) +
                      " differs from recording length " + std::to_string(recording.length()));
  }
  const std::vector<std::uint8_t> marked = msf.to_samples();
  const auto kept = static_cast<std::size_t>(std::count(marked.begin(), marked.end(), std::uint8_t{0}));
  if (kept == 0) throw EmptyDataError("excise_artifacts: every sample is marked");

  std::vector<Channel> channels;
  channels.reserve(recording.channel_count());
  for (const auto& ch : recording.channels()) {
    Channel out{ch.label, {}};
    out.samples.reserve(kept);
    for (std::size_t t = 0; t < ch.samples.size(); ++t) {
      if (marked[t] == 0) out.samples.push_back(ch.samples[t]);
    }
    channels.push_back(std::move(out));
  }
  return Recording(recording.sample_rate(), std::move(channels), recording.eog_index(),
                   recording.trigger_index());
}

ica::UnmixingMatrix fit_diminished_unmixing(const Recording& recording, const MembershipFunction& msf,
                                            const ica::IcaConfig& config) {
  return ica::fit_ica(eeg_channels(excise_artifacts(recording, msf)), config);
}

ica::ComponentSet unmix_diminished(const ica::UnmixingMatrix& w_prime, const Recording& recording) {
  ica::ComponentSet out = ica::unmix(w_prime, recording);
  out.selectable = false;
  return out;
}

UnmixingDifference unmixing_difference(const ica::UnmixingMatrix& w, const ica::UnmixingMatrix& w_prime) {
  if (w.w.rows() != w_prime.w.rows() || w.w.cols() != w_prime.w.cols()) {
    throw SchemaError("unmixing_difference: matrix dimensions differ");
  }
  if (w.channel_labels != w_prime.channel_labels) {
    throw SchemaError("unmixing_difference: channel labels differ");
  }
  const Eigen::MatrixXd a = sort_rows_by_norm(w.w);
  const Eigen::MatrixXd b = sort_rows_by_norm(w_prime.w);

  UnmixingDifference out;
  out.d = b - a;
  out.d_lr.resize(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.d_lr(i, j) = a(i, j) == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                      : std::log10(std::abs(out.d(i, j)) / std::abs(a(i, j)));
    }
  }
  return out;
}

nlohmann::json to_json(const CorrelationReport& report) {
  return {{"labels", report.labels},
          {"max_lag", report.max_lag},
          {"c", matrix_json(report.c)},
          {"cc", report.cc},
          {"selected", report.selected}};
}

std::string to_csv(const CorrelationReport& report) {
  std::ostringstream os;
  os << "label";
  for (Eigen::Index k = 0; k < report.c.cols(); ++k) os << ",trial_" << (k + 1);
  os << ",cc,selected\n";
  for (Eigen::Index i = 0; i < report.c.rows(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    os << report.labels[idx];
    for (Eigen::Index k = 0; k < report.c.cols(); ++k) os << ',' << format_number(report.c(i, k));
    const bool sel = std::find(report.selected.begin(), report.selected.end(), idx) != report.selected.end();
    os << ',' << format_number(report.cc[idx]) << ',' << (sel ? 1 : 0) << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const UnmixingDifference& diff) {
  nlohmann::json lr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < diff.d_lr.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < diff.d_lr.cols(); ++j) {
      const double v = diff.d_lr(i, j);
      if (std::isnan(v)) {
        row.push_back(nullptr);
      } else if (std::isinf(v)) {
        row.push_back(format_number(v));
      } else {
        row.push_back(v);
      }
    }
    lr.push_back(row);
  }
  return {{"d", matrix_json(diff.d)}, {"d_lr", lr}};
}

std::string to_csv(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) os << ',';
      if (!std::isnan(m(i, j))) os << format_number(m(i, j));
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace eogclean::artifact
