#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace eogclean {

/// Half-open sample range [start, end).
struct Interval {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool operator==(const Interval&) const = default;
};

struct Channel {
  std::string label;
  std::vector<double> samples;

  bool operator==(const Channel&) const = default;
};

/// Multichannel sampled signal. Immutable once constructed; the
/// constructor enforces equal channel lengths, a positive rate, distinct
/// EOG/trigger designations and sorted, disjoint, in-range trial bounds.
class Recording {
 public:
  Recording(double sample_rate, std::vector<Channel> channels,
            std::optional<std::size_t> eog_index = std::nullopt,
            std::optional<std::size_t> trigger_index = std::nullopt,
            std::vector<Interval> trial_bounds = {});

  double sample_rate() const { return sample_rate_; }
  std::size_t channel_count() const { return channels_.size(); }
  std::size_t length() const { return channels_.empty() ? 0 : channels_.front().samples.size(); }

  const std::vector<Channel>& channels() const { return channels_; }
  const Channel& channel(std::size_t i) const { return channels_.at(i); }
  std::span<const double> samples(std::size_t i) const { return channels_.at(i).samples; }
  std::vector<std::string> labels() const;
  std::optional<std::size_t> find(const std::string& label) const;

  std::optional<std::size_t> eog_index() const { return eog_index_; }
  std::optional<std::size_t> trigger_index() const { return trigger_index_; }
  const std::vector<Interval>& trial_bounds() const { return trial_bounds_; }

  /// Positions of the channels that are neither EOG nor trigger.
  std::vector<std::size_t> eeg_indices() const;

  Recording with_trial_bounds(std::vector<Interval> bounds) const;
  Recording with_channels(std::vector<Channel> channels) const;

  bool operator==(const Recording&) const = default;

 private:
  double sample_rate_;
  std::vector<Channel> channels_;
  std::optional<std::size_t> eog_index_;
  std::optional<std::size_t> trigger_index_;
  std::vector<Interval> trial_bounds_;
};

/// Recording restricted to its EEG channels (EOG and trigger dropped),
/// keeping rate and trial bounds.
Recording eeg_channels(const Recording& recording);

/// Per-sample 0/1 artifact marking stored as half-open intervals.
class MembershipFunction {
 public:
  MembershipFunction() = default;
  /// Throws RangeError if any interval is empty-inverted or exceeds `length`.
  MembershipFunction(std::size_t length, std::vector<Interval> intervals);

  std::size_t length() const { return length_; }
  const std::vector<Interval>& intervals() const { return intervals_; }

  bool is_normalized() const;
  std::size_t marked_count() const;
  std::vector<std::uint8_t> to_samples() const;

  bool operator==(const MembershipFunction&) const = default;

 private:
  std::size_t length_ = 0;
  std::vector<Interval> intervals_;
};

/// Sorted, disjoint intervals; overlapping and touching marks merged.
MembershipFunction msf_normalize(const MembershipFunction& msf);

/// MSF with smoothed transitions; values in [0, 1].
struct WindowedMembershipFunction {
  std::size_t length = 0;
  std::vector<double> values;
  std::size_t slope_samples = 0;
};

struct AnnotationStats {
  std::size_t count = 0;
  std::size_t marked_samples = 0;
  double duration_fraction = 0.0;
  double mean_s = 0.0;
  double std_s = 0.0;  // population convention
  double median_s = 0.0;
};

AnnotationStats msf_stats(const MembershipFunction& msf, double sample_rate);

/// MSF exchange document: {"length", "sample_rate", "intervals": [[s, e], ...]}.
struct MsfDocument {
  MembershipFunction msf;
  double sample_rate = 0.0;
};

nlohmann::json msf_to_json(const MembershipFunction& msf, double sample_rate);
/// Validates shape and ranges and normalizes on ingestion.
MsfDocument msf_from_json(const nlohmann::json& j);

}  // namespace eogclean
