#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "eogclean/core.hpp"
#include "eogclean/ica.hpp"
#include "json.hpp"

namespace eogclean::synth {

/// Track durations of the five listening trials (7:13, 5:31, 7:54, 8:07, 1:20).
std::vector<double> trial_durations_s_default();

/// Default trial durations multiplied by `factor`.
std::vector<double> scaled_trial_durations_s(double factor);

struct SynthSpec {
  std::size_t n_sources = 8;  // the last source is the blink source
  std::size_t n_channels = 8;
  double sample_rate = 250.0;
  std::vector<double> trial_durations_s = scaled_trial_durations_s(0.1);
  double lead_s = 2.0;
  double gap_s = 2.0;
  double tail_s = 2.0;

  double blink_rate_per_min = 20.0;
  double blink_amplitude = 8.0;
  double blink_duration_s = 0.3;
  /// Relative per-event, per-channel spread of the blink scalp projection.
  double blink_topography_jitter = 0.0;

  /// EOG = -blink + eog_leakage * (sum of neural sources) + eog_noise * N(0, 1).
  double eog_leakage = 0.05;
  double eog_noise = 0.02;
  double sensor_noise = 0.0;

  /// Trial-locked periodic response added to the first neural source.
  double evoked_amplitude = 0.0;
  double evoked_period_s = 1.0;
  double line_noise_amplitude = 0.0;

  std::optional<Eigen::MatrixXd> mixing;  // n_channels x n_sources
  std::uint64_t seed = 0;
};

struct GroundTruth {
  Eigen::MatrixXd mixing;
  ica::SignalMatrix sources;
  MembershipFunction msf;  // exact blink supports
  std::size_t blink_source = 0;
  std::vector<Interval> trials;
  double sample_rate = 0.0;
};

struct Session {
  Recording recording;  // EEG01.., EOG, TRIG; no trial bounds set
  GroundTruth truth;
};

/// Deterministic per seed. Neural sources alternate between smoothed
/// Laplace noise and amplitude-modulated oscillations, each standardized.
/// The blink source is a train of 300 ms biphasic raised-cosine pulses;
/// onsets are spaced by the blink duration plus an exponential gap. Without
/// jitter, sensor noise or line noise every EEG channel equals
/// mixing * sources exactly.
Session generate(const SynthSpec& spec);

/// Each interval widened by widen_s on both sides, clipped and normalized.
MembershipFunction perturb_msf(const MembershipFunction& msf, double widen_s, double sample_rate);

/// Biphasic blink 0.5 (1 - cos 2 pi u) (1 - 1.6 u) sampled at the midpoints
/// u = (i + 0.5) / samples and scaled to peak 1.
std::vector<double> blink_template(std::size_t samples);

nlohmann::json to_json(const GroundTruth& truth);

}  // namespace eogclean::synth
