#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "eogclean/core.hpp"

namespace eogclean::seg {

struct TriggerEvents {
  std::vector<std::size_t> rising_edges;
  double threshold = 0.0;
};

inline constexpr double kDebounceSeconds = 0.1;

/// Upward crossings of the mid-range threshold (max + min) / 2. An edge
/// closer than 100 ms to the previously accepted edge is merged into it.
/// Throws NoEventsError on a flat signal.
TriggerEvents detect_triggers(std::span<const double> trigger, double sample_rate);

/// Pairs consecutive edges into (onset, offset) trials. An odd edge count
/// means the last edge is the end-of-session marker and is consumed.
/// Throws StructureError for fewer than two edges or unsorted edges.
Recording segment(const Recording& recording, const TriggerEvents& events);

/// detect_triggers on the designated trigger channel, then segment.
Recording segment(const Recording& recording);

}  // namespace eogclean::seg
