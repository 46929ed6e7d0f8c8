#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gazeattn/image.hpp"
#include "gazeattn/types.hpp"

namespace gazeattn {

struct FlowResult {
  FlowSummary summary;
  bool all_skipped = false;  // every block was below the variance floor
};

// Coarse flow between two frames by integer SAD block matching. Orientation
// is the angle of the summed displacement vector, in (-pi, pi].
FlowResult block_flow(const GrayImage& a, const GrayImage& b, int block_size, int search_radius);

// Flow for each consecutive pair (i, i+1); summary.frame = i.
std::vector<FlowSummary> flow_sequence(std::span<const GrayImage> frames, const MotionConfig& cfg);

struct FrameInterval {
  std::int64_t start = 0;
  std::int64_t end = 0;  // inclusive
  friend bool operator==(const FrameInterval&, const FrameInterval&) = default;
};

// Maximal runs of consecutive frames whose mean magnitude reaches threshold.
std::vector<FrameInterval> detect_gaze_shifts(std::span<const FlowSummary> flows, double threshold);

// Copies fixations, clearing motion_valid on those whose frame span overlaps
// a shift interval.
std::vector<FixationEvent> validate_fixations(std::span<const FixationEvent> fixations,
                                              std::span<const FrameInterval> shifts, double fps,
                                              std::int64_t offset_us, std::int64_t frame_count);

}  // namespace gazeattn
