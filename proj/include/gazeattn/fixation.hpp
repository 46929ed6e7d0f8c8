#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gazeattn/types.hpp"

namespace gazeattn {

// Dispersion-threshold fixation detection. Starting from the earliest
// unconsumed valid sample, the window grows while
// (max x - min x) + (max y - min y) stays within the threshold. A window whose
// time span reaches the minimum duration becomes a fixation and its samples
// are consumed; otherwise the start advances by one sample. Invalid samples
// end a window.
std::vector<FixationEvent> detect_fixations(std::span<const GazeSample> samples, const FixationConfig& cfg);

// (max x - min x) + (max y - min y) over the samples.
double dispersion(std::span<const GazeSample> samples);

struct FrameSpan {
  std::int64_t first = 0;
  std::int64_t last = 0;
  std::int64_t mid = 0;
};

// Video frame holding gaze time t: floor((t - offset) * fps / 1e6), clamped
// to [0, frame_count).
std::int64_t frame_at(std::int64_t ts_us, double fps, std::int64_t offset_us, std::int64_t frame_count);

// Frames covered by a fixation; mid is the frame at the temporal midpoint.
// Throws InvariantError if the fixation ends before the video starts.
FrameSpan fixation_frame_span(const FixationEvent& f, double fps, std::int64_t offset_us, std::int64_t frame_count);

}  // namespace gazeattn
