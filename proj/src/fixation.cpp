#include "gazeattn/fixation.hpp"

#include <algorithm>
#include <cmath>

namespace gazeattn {

double dispersion(std::span<const GazeSample> samples) {
  if (samples.empty()) return 0.0;
  auto [minx, maxx] = std::minmax_element(samples.begin(), samples.end(),
                                          [](const GazeSample& a, const GazeSample& b) { return a.x < b.x; });
  auto [miny, maxy] = std::minmax_element(samples.begin(), samples.end(),
                                          [](const GazeSample& a, const GazeSample& b) { return a.y < b.y; });
  return (maxx->x - minx->x) + (maxy->y - miny->y);
}

std::vector<FixationEvent> detect_fixations(std::span<const GazeSample> s, const FixationConfig& cfg) {
  const auto min_duration = static_cast<std::int64_t>(std::llround(cfg.min_duration_ms * 1000.0));
  const double threshold = cfg.dispersion_threshold_px;
  std::vector<FixationEvent> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!s[i].valid) {
      ++i;
      continue;
    }
    double minx = s[i].x, maxx = s[i].x, miny = s[i].y, maxy = s[i].y;
    std::size_t j = i;
    while (j + 1 < s.size() && s[j + 1].valid) {
      const GazeSample& g = s[j + 1];
      const double nx0 = std::min(minx, g.x), nx1 = std::max(maxx, g.x);
      const double ny0 = std::min(miny, g.y), ny1 = std::max(maxy, g.y);
      if ((nx1 - nx0) + (ny1 - ny0) > threshold) break;
      minx = nx0, maxx = nx1, miny = ny0, maxy = ny1;
      ++j;
    }
    if (s[j].ts_us - s[i].ts_us < min_duration) {
      ++i;
      continue;
    }
    FixationEvent f;
    f.start_us = s[i].ts_us;
    f.end_us = s[j].ts_us;
    f.sample_count = j - i + 1;
    double sx = 0.0, sy = 0.0;
    for (std::size_t k = i; k <= j; ++k) {
      sx += s[k].x;
      sy += s[k].y;
    }
    f.cx = sx / static_cast<double>(f.sample_count);
    f.cy = sy / static_cast<double>(f.sample_count);
    f.dispersion = (maxx - minx) + (maxy - miny);
    out.push_back(f);
    i = j + 1;
  }
  return out;
}

std::int64_t frame_at(std::int64_t ts_us, double fps, std::int64_t offset_us, std::int64_t frame_count) {
  const double f = std::floor(static_cast<double>(ts_us - offset_us) * fps / 1e6);
  if (f < 0.0) return 0;
  if (f >= static_cast<double>(frame_count)) return std::max<std::int64_t>(frame_count - 1, 0);
  return static_cast<std::int64_t>(f);
}

FrameSpan fixation_frame_span(const FixationEvent& f, double fps, std::int64_t offset_us, std::int64_t frame_count) {
  if (f.end_us < offset_us) throw InvariantError("fixation", "fixation ends before the first video frame");
  if (frame_count <= 0) throw InvariantError("fixation", "video has no frames");
  const std::int64_t mid_us = f.start_us + (f.end_us - f.start_us) / 2;
  return {frame_at(f.start_us, fps, offset_us, frame_count), frame_at(f.end_us, fps, offset_us, frame_count),
          frame_at(mid_us, fps, offset_us, frame_count)};
}

}  // namespace gazeattn
