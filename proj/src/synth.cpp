#include "eogclean/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "eogclean/errors.hpp"
#include "eogclean/random.hpp"

namespace eogclean::synth {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void standardize(Eigen::Ref<Eigen::RowVectorXd> x) {
  const double mean = x.mean();
  x.array() -= mean;
  const double sd = std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
  if (sd > 0.0) x /= sd;
}

std::size_t to_samples(double seconds, double rate) {
  return static_cast<std::size_t>(std::llround(seconds * rate));
}

Eigen::RowVectorXd neural_source(std::size_t index, std::size_t length, double rate, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(length);
  Eigen::RowVectorXd x(n);
  if (index % 2 == 0) {
    // Bursty: lightly smoothed Laplace noise keeps a heavy tail.
    Eigen::RowVectorXd raw(n);
    for (Eigen::Index t = 0; t < n; ++t) raw(t) = rng.laplace();
    for (Eigen::Index t = 0; t < n; ++t) {
      const double prev = t > 0 ? raw(t - 1) : 0.0;
      const double next = t + 1 < n ? raw(t + 1) : 0.0;
      x(t) = 0.25 * prev + 0.5 * raw(t) + 0.25 * next;
    }
  } else {
    // Oscillation; every other one carries a log-normal amplitude envelope.
    const double freq = 4.0 + 2.5 * static_cast<double>(index);
    const double phase = rng.uniform(0.0, kTwoPi);
    const bool modulated = index % 4 == 1;
    double slow = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      slow = 0.995 * slow + 0.0999 * rng.normal();
      const double envelope = modulated ? std::exp(0.5 * slow) : 1.0;
      x(t) = envelope * std::sin(kTwoPi * freq * static_cast<double>(t) / rate + phase);
    }
  }
  return x;
}

double evoked_shape(double phase_s) {
  const double p1 = (phase_s - 0.20) / 0.05;
  const double n1 = (phase_s - 0.35) / 0.08;
  return std::exp(-p1 * p1) - 0.7 * std::exp(-n1 * n1);
}

}  // namespace

std::vector<double> trial_durations_s_default() {
  return {7 * 60 + 13, 5 * 60 + 31, 7 * 60 + 54, 8 * 60 + 7, 1 * 60 + 20};
}

std::vector<double> scaled_trial_durations_s(double factor) {
  std::vector<double> d = trial_durations_s_default();
  for (double& v : d) v *= factor;
  return d;
}

std::vector<double> blink_template(std::size_t samples) {
  std::vector<double> out(samples, 0.0);
  double peak = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(samples);
    out[i] = 0.5 * (1.0 - std::cos(kTwoPi * u)) * (1.0 - 1.6 * u);
    peak = std::max(peak, out[i]);
  }
  for (double& v : out) v /= peak;
  return out;
}

Session generate(const SynthSpec& spec) {
  const double rate = spec.sample_rate;
  if (!(rate > 0.0)) throw ArgumentError("synth: sample rate must be positive");
  if (spec.n_sources < 2) throw ArgumentError("synth: need at least one neural and one blink source");
  if (spec.n_channels < spec.n_sources) throw ArgumentError("synth: n_channels must be >= n_sources");
  if (spec.trial_durations_s.empty()) throw ArgumentError("synth: no trials");
  for (double d : spec.trial_durations_s) {
    if (!(d > 0.0)) throw ArgumentError("synth: trial durations must be positive");
  }
  if (spec.lead_s < 0.0 || spec.tail_s < 0.5 || spec.gap_s < 0.2) {
    throw ArgumentError("synth: lead >= 0, gap >= 0.2 s and tail >= 0.5 s required");
  }
  if (spec.blink_rate_per_min < 0.0 || spec.blink_amplitude < 0.0 || spec.blink_topography_jitter < 0.0 ||
      spec.sensor_noise < 0.0 || spec.eog_noise < 0.0 || spec.eog_leakage < 0.0) {
    throw ArgumentError("synth: rates, amplitudes and noise levels must be non-negative");
  }
  const std::size_t blink_len = to_samples(spec.blink_duration_s, rate);
  if (blink_len < 2) throw ArgumentError("synth: blink shorter than 2 samples");

  Rng rng(spec.seed);
  const std::size_t n_src = spec.n_sources;
  const std::size_t n_ch = spec.n_channels;
  const std::size_t blink_index = n_src - 1;

  // Session layout.
  std::vector<Interval> trials;
  std::size_t cursor = to_samples(spec.lead_s, rate);
  for (std::size_t m = 0; m < spec.trial_durations_s.size(); ++m) {
    if (m > 0) cursor += to_samples(spec.gap_s, rate);
    const std::size_t len = to_samples(spec.trial_durations_s[m], rate);
    trials.push_back({cursor, cursor + len});
    cursor += len;
  }
  const std::size_t end_marker = cursor + to_samples(0.5 * spec.tail_s, rate);
  const std::size_t length = cursor + to_samples(spec.tail_s, rate);

  // Mixing.
  Eigen::MatrixXd mixing(static_cast<Eigen::Index>(n_ch), static_cast<Eigen::Index>(n_src));
  if (spec.mixing) {
    if (spec.mixing->rows() != mixing.rows() || spec.mixing->cols() != mixing.cols()) {
      throw ArgumentError("synth: mixing must be n_channels x n_sources");
    }
    mixing = *spec.mixing;
  } else {
    for (Eigen::Index c = 0; c < mixing.rows(); ++c) {
      for (Eigen::Index s = 0; s < mixing.cols(); ++s) mixing(c, s) = rng.normal();
      const double frontal = 1.0 + static_cast<double>(mixing.rows() - c) / static_cast<double>(mixing.rows());
      mixing(c, static_cast<Eigen::Index>(blink_index)) = (0.5 + std::abs(rng.normal())) * frontal;
    }
  }
  if (Eigen::FullPivLU<Eigen::MatrixXd>(mixing).rank() < static_cast<Eigen::Index>(n_src)) {
    throw ArgumentError("synth: mixing must have full column rank");
  }

  // Sources.
  const auto T = static_cast<Eigen::Index>(length);
  ica::SignalMatrix sources(static_cast<Eigen::Index>(n_src), T);
  for (std::size_t s = 0; s < blink_index; ++s) {
    Eigen::RowVectorXd x = neural_source(s, length, rate, rng);
    if (s == 0 && spec.evoked_amplitude > 0.0) {
      Eigen::RowVectorXd evoked = Eigen::RowVectorXd::Zero(T);
      for (const auto& tr : trials) {
        for (std::size_t t = tr.start; t < tr.end; ++t) {
          const double phase = std::fmod(static_cast<double>(t - tr.start) / rate, spec.evoked_period_s);
          evoked(static_cast<Eigen::Index>(t)) = evoked_shape(phase);
        }
      }
      standardize(x);
      x += spec.evoked_amplitude * evoked;
    }
    standardize(x);
    sources.row(static_cast<Eigen::Index>(s)) = x;
  }

  // Blink train: each inter-onset interval is the blink duration plus an
  // exponential gap, so events never overlap and the mean rate is exact.
  const std::vector<double> shape = blink_template(blink_len);
  std::vector<Interval> blinks;
  Eigen::RowVectorXd blink = Eigen::RowVectorXd::Zero(T);
  if (spec.blink_rate_per_min > 0.0) {
    const double blink_s = static_cast<double>(blink_len) / rate;
    const double mean_gap_s = 60.0 / spec.blink_rate_per_min - blink_s;
    if (!(mean_gap_s > 0.0)) throw ArgumentError("synth: blink rate too high for the blink duration");
    double t_s = rng.exponential(mean_gap_s + blink_s);
    std::size_t earliest = 0;  // keeps at least one clean sample between blinks
    while (true) {
      const auto onset = std::max(to_samples(t_s, rate), earliest);
      if (onset + blink_len > length) break;
      blinks.push_back({onset, onset + blink_len});
      earliest = onset + blink_len + 1;
      t_s = static_cast<double>(onset + blink_len) / rate + rng.exponential(mean_gap_s);
    }
  }
  if (spec.blink_amplitude > 0.0) {
    for (const auto& b : blinks) {
      for (std::size_t i = 0; i < blink_len; ++i) {
        blink(static_cast<Eigen::Index>(b.start + i)) = spec.blink_amplitude * shape[i];
      }
    }
  }
  sources.row(static_cast<Eigen::Index>(blink_index)) = blink;

  ica::SignalMatrix eeg = mixing * sources;

  if (spec.blink_topography_jitter > 0.0 && spec.blink_amplitude > 0.0) {
    const Eigen::VectorXd base = mixing.col(static_cast<Eigen::Index>(blink_index));
    for (const auto& b : blinks) {
      Eigen::VectorXd delta(base.size());
      for (Eigen::Index c = 0; c < delta.size(); ++c) delta(c) = spec.blink_topography_jitter * base(c) * rng.normal();
      for (std::size_t t = b.start; t < b.end; ++t) {
        eeg.col(static_cast<Eigen::Index>(t)) += delta * blink(static_cast<Eigen::Index>(t));
      }
    }
  }
  if (spec.sensor_noise > 0.0) {
    for (Eigen::Index c = 0; c < eeg.rows(); ++c) {
      for (Eigen::Index t = 0; t < T; ++t) eeg(c, t) += spec.sensor_noise * rng.normal();
    }
  }

  Eigen::RowVectorXd eog = -blink;
  if (spec.eog_leakage > 0.0) {
    eog += spec.eog_leakage * sources.topRows(static_cast<Eigen::Index>(blink_index)).colwise().sum();
  }
  if (spec.eog_noise > 0.0) {
    for (Eigen::Index t = 0; t < T; ++t) eog(t) += spec.eog_noise * rng.normal();
  }

  if (spec.line_noise_amplitude > 0.0) {
    for (Eigen::Index t = 0; t < T; ++t) {
      const double hum = spec.line_noise_amplitude * std::sin(kTwoPi * 50.0 * static_cast<double>(t) / rate);
      eeg.col(t).array() += hum;
      eog(t) += hum;
    }
  }

  std::vector<double> trigger(length, 0.0);
  const std::size_t pulse = std::max<std::size_t>(2, to_samples(0.02, rate));
  auto add_pulse = [&](std::size_t at) {
    for (std::size_t i = at; i < std::min(length, at + pulse); ++i) trigger[i] = 1.0;
  };
  for (const auto& tr : trials) {
    add_pulse(tr.start);
    add_pulse(tr.end);
  }
  add_pulse(end_marker);

  std::vector<Channel> channels;
  for (std::size_t c = 0; c < n_ch; ++c) {
    const auto row = eeg.row(static_cast<Eigen::Index>(c));
    std::string label = "EEG" + std::string(c + 1 < 10 ? "0" : "") + std::to_string(c + 1);
    channels.push_back(Channel{std::move(label), std::vector<double>(row.data(), row.data() + row.size())});
  }
  channels.push_back(Channel{"EOG", std::vector<double>(eog.data(), eog.data() + eog.size())});
  channels.push_back(Channel{"TRIG", std::move(trigger)});

  Session session{Recording(rate, std::move(channels), n_ch, n_ch + 1), GroundTruth{}};
  session.truth.mixing = mixing;
  session.truth.sources = std::move(sources);
  if (spec.blink_amplitude == 0.0) blinks.clear();
  session.truth.msf = MembershipFunction(length, std::move(blinks));
  session.truth.blink_source = blink_index;
  session.truth.trials = std::move(trials);
  session.truth.sample_rate = rate;
  return session;
}

MembershipFunction perturb_msf(const MembershipFunction& msf, double widen_s, double sample_rate) {
  if (!(widen_s >= 0.0)) throw ArgumentError("perturb_msf: widening must be non-negative");
  if (!(sample_rate > 0.0)) throw ArgumentError("perturb_msf: sample rate must be positive");
  const std::size_t widen = to_samples(widen_s, sample_rate);
  std::vector<Interval> out;
  out.reserve(msf.intervals().size());
  for (const auto& iv : msf.intervals()) {
    out.push_back({iv.start > widen ? iv.start - widen : 0, std::min(msf.length(), iv.end + widen)});
  }
  return msf_normalize(MembershipFunction(msf.length(), std::move(out)));
}

nlohmann::json to_json(const GroundTruth& truth) {
  nlohmann::json mixing = nlohmann::json::array();
  for (Eigen::Index i = 0; i < truth.mixing.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < truth.mixing.cols(); ++j) row.push_back(truth.mixing(i, j));
    mixing.push_back(row);
  }
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : truth.trials) trials.push_back({t.start, t.end});
  return {{"mixing", mixing},
          {"blink_source", truth.blink_source},
          {"trials", trials},
          {"msf", msf_to_json(truth.msf, truth.sample_rate)}};
}

}  // namespace eogclean::synth
