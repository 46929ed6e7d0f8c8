#include "gazeattn/motion.hpp"

#include <cmath>

#include "gazeattn/fixation.hpp"
#include "gazeattn/kernels.hpp"

namespace gazeattn {

FlowResult block_flow(const GrayImage& a, const GrayImage& b, int block_size, int search_radius) {
  if (a.width() != b.width() || a.height() != b.height())
    throw InvariantError("motion", "frame dimensions differ");
  if (block_size < 4) throw InvariantError("motion", "block_size must be >= 4");
  if (search_radius < 1) throw InvariantError("motion", "search_radius must be >= 1");

  const auto blocks = kernels::parallel::block_motion(a, b, block_size, search_radius);
  FlowResult r;
  // Magnitudes are grouped by squared length so that a pure translation
  // averages to exactly sqrt(dx^2 + dy^2).
  std::vector<std::size_t> by_sq_len(static_cast<std::size_t>(2 * search_radius * search_radius + 1), 0);
  long long sx = 0, sy = 0;
  for (const auto& m : blocks) {
    if (!m.kept) continue;
    ++r.summary.kept_blocks;
    ++by_sq_len[static_cast<std::size_t>(m.dx * m.dx + m.dy * m.dy)];
    sx += m.dx;
    sy += m.dy;
  }
  if (r.summary.kept_blocks == 0) {
    r.all_skipped = true;
    return r;
  }
  const double n = static_cast<double>(r.summary.kept_blocks);
  for (std::size_t k = 0; k < by_sq_len.size(); ++k)
    if (by_sq_len[k] > 0)
      r.summary.mean_magnitude += static_cast<double>(by_sq_len[k]) / n * std::sqrt(static_cast<double>(k));
  if (sx != 0 || sy != 0) r.summary.mean_orientation = std::atan2(static_cast<double>(sy), static_cast<double>(sx));
  return r;
}

std::vector<FlowSummary> flow_sequence(std::span<const GrayImage> frames, const MotionConfig& cfg) {
  if (frames.size() < 2) return {};
  std::vector<FlowSummary> out(frames.size() - 1);
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = block_flow(frames[k], frames[k + 1], cfg.block_size, cfg.search_radius).summary;
    out[k].frame = i;
  }
  return out;
}

std::vector<FrameInterval> detect_gaze_shifts(std::span<const FlowSummary> flows, double threshold) {
  std::vector<FrameInterval> out;
  bool open = false;
  for (const FlowSummary& f : flows) {
    if (f.mean_magnitude < threshold) {
      open = false;
      continue;
    }
    if (open && out.back().end + 1 == f.frame) {
      out.back().end = f.frame;
    } else {
      out.push_back({f.frame, f.frame});
      open = true;
    }
  }
  return out;
}

std::vector<FixationEvent> validate_fixations(std::span<const FixationEvent> fixations,
                                              std::span<const FrameInterval> shifts, double fps,
                                              std::int64_t offset_us, std::int64_t frame_count) {
  std::vector<FixationEvent> out(fixations.begin(), fixations.end());
  for (FixationEvent& f : out) {
    const FrameSpan span = fixation_frame_span(f, fps, offset_us, frame_count);
    f.motion_valid = true;
    for (const FrameInterval& s : shifts)
      if (span.first <= s.end && s.start <= span.last) f.motion_valid = false;
  }
  return out;
}

}  // namespace gazeattn
