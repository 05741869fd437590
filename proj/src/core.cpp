#include "eogclean/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eogclean/errors.hpp"

namespace eogclean {

Recording::Recording(double sample_rate, std::vector<Channel> channels,
                     std::optional<std::size_t> eog_index,
                     std::optional<std::size_t> trigger_index,
                     std::vector<Interval> trial_bounds)
    : sample_rate_(sample_rate),
      channels_(std::move(channels)),
      eog_index_(eog_index),
      trigger_index_(trigger_index),
      trial_bounds_(std::move(trial_bounds)) {
  if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_)) {
    throw ArgumentError("recording: sample rate must be positive");
  }
  const std::size_t n = length();
  for (const auto& ch : channels_) {
    if (ch.samples.size() != n) {
      throw SchemaError("recording: channel '" + ch.label + "' has " +
                        std::to_string(ch.samples.size()) + " samples, expected " +
                        std::to_string(n));
    }
  }
  if (eog_index_ && *eog_index_ >= channels_.size()) {
    throw SchemaError("recording: EOG index out of range");
  }
  if (trigger_index_ && *trigger_index_ >= channels_.size()) {
    throw SchemaError("recording: trigger index out of range");
  }
  if (eog_index_ && trigger_index_ && *eog_index_ == *trigger_index_) {
    throw SchemaError("recording: EOG and trigger designate the same channel");
  }
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < trial_bounds_.size(); ++i) {
    const auto& b = trial_bounds_[i];
    if (b.start >= b.end || b.end > n || (i > 0 && b.start < prev_end)) {
      throw RangeError("recording: trial bounds must be sorted, disjoint and within [0, length)");
    }
    prev_end = b.end;
  }
}

std::vector<std::string> Recording::labels() const {
  std::vector<std::string> out;
  out.reserve(channels_.size());
  for (const auto& ch : channels_) out.push_back(ch.label);
  return out;
}

std::optional<std::size_t> Recording::find(const std::string& label) const {
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    if (channels_[i].label == label) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> Recording::eeg_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    if (i != eog_index_ && i != trigger_index_) out.push_back(i);
  }
  return out;
}

Recording Recording::with_trial_bounds(std::vector<Interval> bounds) const {
  return Recording(sample_rate_, channels_, eog_index_, trigger_index_, std::move(bounds));
}

Recording Recording::with_channels(std::vector<Channel> channels) const {
  return Recording(sample_rate_, std::move(channels), eog_index_, trigger_index_, trial_bounds_);
}

Recording eeg_channels(const Recording& recording) {
  std::vector<Channel> channels;
  for (std::size_t i : recording.eeg_indices()) channels.push_back(recording.channel(i));
  return Recording(recording.sample_rate(), std::move(channels), std::nullopt, std::nullopt,
                   recording.trial_bounds());
}

MembershipFunction::MembershipFunction(std::size_t length, std::vector<Interval> intervals)
    : length_(length), intervals_(std::move(intervals)) {
  for (const auto& iv : intervals_) {
    if (iv.start >= iv.end || iv.end > length_) {
      throw RangeError("membership function: interval [" + std::to_string(iv.start) + ", " +
                       std::to_string(iv.end) + ") outside [0, " + std::to_string(length_) + ")");
    }
  }
}

bool MembershipFunction::is_normalized() const {
  for (std::size_t i = 1; i < intervals_.size(); ++i) {
    if (intervals_[i].start <= intervals_[i - 1].end) return false;
  }
  return true;
}

std::size_t MembershipFunction::marked_count() const {
  if (!is_normalized()) return msf_normalize(*this).marked_count();
  std::size_t total = 0;
  for (const auto& iv : intervals_) total += iv.size();
  return total;
}

std::vector<std::uint8_t> MembershipFunction::to_samples() const {
  std::vector<std::uint8_t> out(length_, 0);
  for (const auto& iv : intervals_) {
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(iv.start),
              out.begin() + static_cast<std::ptrdiff_t>(iv.end), std::uint8_t{1});
  }
  return out;
}

MembershipFunction msf_normalize(const MembershipFunction& msf) {
  std::vector<Interval> sorted = msf.intervals();
  std::sort(sorted.begin(), sorted.end(), [](const Interval& a, const Interval& b) {
    return a.start < b.start || (a.start == b.start && a.end < b.end);
  });
  std::vector<Interval> merged;
  for (const auto& iv : sorted) {
    if (!merged.empty() && iv.start <= merged.back().end) {
      merged.back().end = std::max(merged.back().end, iv.end);
    } else {
      merged.push_back(iv);
    }
  }
  return MembershipFunction(msf.length(), std::move(merged));
}

AnnotationStats msf_stats(const MembershipFunction& msf, double sample_rate) {
  if (!(sample_rate > 0.0)) throw ArgumentError("msf_stats: sample rate must be positive");
  const MembershipFunction norm = msf.is_normalized() ? msf : msf_normalize(msf);

  AnnotationStats stats;
  stats.count = norm.intervals().size();
  if (stats.count == 0) return stats;

  std::vector<double> durations;
  durations.reserve(stats.count);
  for (const auto& iv : norm.intervals()) {
    stats.marked_samples += iv.size();
    durations.push_back(static_cast<double>(iv.size()) / sample_rate);
  }
  stats.duration_fraction =
      static_cast<double>(stats.marked_samples) / static_cast<double>(norm.length());

  const double n = static_cast<double>(durations.size());
  stats.mean_s = std::accumulate(durations.begin(), durations.end(), 0.0) / n;
  double ss = 0.0;
  for (double d : durations) ss += (d - stats.mean_s) * (d - stats.mean_s);
  stats.std_s = std::sqrt(ss / n);

  std::sort(durations.begin(), durations.end());
  const std::size_t mid = durations.size() / 2;
  stats.median_s = durations.size() % 2 == 1 ? durations[mid]
                                             : 0.5 * (durations[mid - 1] + durations[mid]);
  return stats;
}

nlohmann::json msf_to_json(const MembershipFunction& msf, double sample_rate) {
  nlohmann::json intervals = nlohmann::json::array();
  for (const auto& iv : msf.intervals()) intervals.push_back({iv.start, iv.end});
  return {{"length", msf.length()}, {"sample_rate", sample_rate}, {"intervals", intervals}};
}

MsfDocument msf_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("length") || !j.contains("sample_rate") ||
      !j.contains("intervals")) {
    throw SchemaError("msf: expected object with length, sample_rate and intervals");
  }
  if (!j.at("length").is_number_unsigned() && !(j.at("length").is_number_integer() &&
                                                 j.at("length").get<std::int64_t>() >= 0)) {
    throw SchemaError("msf: length must be a non-negative integer");
  }
  if (!j.at("sample_rate").is_number() || !(j.at("sample_rate").get<double>() > 0.0)) {
    throw SchemaError("msf: sample_rate must be a positive number");
  }
  if (!j.at("intervals").is_array()) throw SchemaError("msf: intervals must be an array");

  const auto length = j.at("length").get<std::size_t>();
  std::vector<Interval> intervals;
  for (const auto& pair : j.at("intervals")) {
    if (!pair.is_array() || pair.size() != 2) {
      throw SchemaError("msf: each interval must be a [start, end] pair");
    }
    for (const auto& v : pair) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw RangeError("msf: interval endpoints must be non-negative integers");
      }
    }
    intervals.push_back({pair[0].get<std::size_t>(), pair[1].get<std::size_t>()});
  }
  return {msf_normalize(MembershipFunction(length, std::move(intervals))),
          j.at("sample_rate").get<double>()};
}

}  // namespace eogclean
