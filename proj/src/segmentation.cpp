#include "eogclean/segmentation.hpp"

#include <algorithm>
#include <cmath>

#include "eogclean/errors.hpp"

namespace eogclean::seg {

TriggerEvents detect_triggers(std::span<const double> trigger, double sample_rate) {
  if (trigger.empty()) throw NoEventsError("detect_triggers: empty trigger signal");
  if (!(sample_rate > 0.0)) throw ArgumentError("detect_triggers: sample rate must be positive");

  const auto [lo, hi] = std::minmax_element(trigger.begin(), trigger.end());
  if (!(*hi > *lo)) throw NoEventsError("detect_triggers: flat trigger signal has no events");

  TriggerEvents events;
  events.threshold = 0.5 * (*hi + *lo);
  const auto debounce = static_cast<std::size_t>(std::llround(kDebounceSeconds * sample_rate));

  for (std::size_t i = 1; i < trigger.size(); ++i) {
    if (trigger[i - 1] <= events.threshold && trigger[i] > events.threshold) {
      if (!events.rising_edges.empty() && i - events.rising_edges.back() < debounce) continue;
      events.rising_edges.push_back(i);
    }
  }
  if (events.rising_edges.empty()) throw NoEventsError("detect_triggers: no rising edges found");
  return events;
}

Recording segment(const Recording& recording, const TriggerEvents& events) {
  const auto& edges = events.rising_edges;
  if (edges.size() < 2) {
    throw StructureError("segment: expected at least 2 trigger edges, found " +
                         std::to_string(edges.size()));
  }
  if (!std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw StructureError("segment: trigger edges are not strictly increasing");
  }
  if (edges.back() > recording.length()) {
    throw StructureError("segment: trigger edge beyond recording length");
  }

  const std::size_t trials = edges.size() / 2;
  std::vector<Interval> bounds;
  bounds.reserve(trials);
  for (std::size_t m = 0; m < trials; ++m) bounds.push_back({edges[2 * m], edges[2 * m + 1]});
  return recording.with_trial_bounds(std::move(bounds));
}

Recording segment(const Recording& recording) {
  if (!recording.trigger_index()) throw SchemaError("segment: recording has no trigger channel");
  return segment(recording,
                 detect_triggers(recording.samples(*recording.trigger_index()), recording.sample_rate()));
}

}  // namespace eogclean::seg
