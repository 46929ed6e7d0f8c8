#include "gazeattn/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "gazeattn/fixation.hpp"

namespace gazeattn {

bool in_body_region(const BBox& face, double x, double y, const AttentionConfig& cfg) {
  const double half = 0.5 * face.w() * cfg.body_widen;
  return x >= face.center_x() - half && x <= face.center_x() + half && y >= face.y() &&
         y <= face.y() + face.h() * (1.0 + cfg.body_extend);
}

std::optional<int> assign_fixation(double cx, double cy, std::span<const LabeledBox> boxes,
                                   const AttentionConfig& cfg) {
  auto center_d2 = [&](const LabeledBox& b) {
    const double dx = cx - b.box.center_x(), dy = cy - b.box.center_y();
    return dx * dx + dy * dy;
  };
  // Best box among those passing rule, by (distance to center, label).
  auto pick = [&](auto&& rule) -> std::optional<int> {
    const LabeledBox* best = nullptr;
    double best_d2 = 0.0;
    for (const LabeledBox& b : boxes) {
      if (!rule(b)) continue;
      const double d2 = center_d2(b);
      if (!best || std::tie(d2, b.label) < std::tie(best_d2, best->label)) {
        best = &b;
        best_d2 = d2;
      }
    }
    return best ? std::optional<int>(best->label) : std::nullopt;
  };
  if (auto l = pick([&](const LabeledBox& b) { return b.box.contains(cx, cy); })) return l;
  if (auto l = pick([&](const LabeledBox& b) { return in_body_region(b.box, cx, cy, cfg); })) return l;
  const double r2 = cfg.r_max_px * cfg.r_max_px;
  return pick([&](const LabeledBox& b) { return center_d2(b) <= r2; });
}

namespace {

std::span<const LabeledBox> boxes_at(std::span<const LabeledBox> boxes, std::int64_t frame) {
  auto lo = std::lower_bound(boxes.begin(), boxes.end(), frame,
                             [](const LabeledBox& b, std::int64_t f) { return b.frame < f; });
  auto hi = std::upper_bound(lo, boxes.end(), frame, [](std::int64_t f, const LabeledBox& b) { return f < b.frame; });
  return {lo, hi};
}

}  // namespace

void attribute_fixations(std::vector<FixationEvent>& fixations, std::span<const LabeledBox> boxes,
                         const AttentionConfig& cfg, const SessionTiming& timing) {
  const auto n = static_cast<std::ptrdiff_t>(fixations.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    FixationEvent& f = fixations[static_cast<std::size_t>(i)];
    const FrameSpan span = fixation_frame_span(f, timing.fps, timing.offset_us, timing.frame_count);
    f.target = assign_fixation(f.cx, f.cy, boxes_at(boxes, span.mid), cfg);
  }
}

GenderVerdict gender_majority(std::size_t male_votes, std::size_t female_votes) {
  GenderVerdict v{Gender::unknown, male_votes, female_votes};
  if (male_votes > female_votes) v.gender = Gender::male;
  if (female_votes > male_votes) v.gender = Gender::female;
  return v;
}

GenderVerdict gender_majority(std::span<const GenderScores> scores) {
  std::size_t m = 0, f = 0;
  for (const GenderScores& s : scores) {
    if (s.male > s.female) ++m;
    if (s.female > s.male) ++f;
  }
  return gender_majority(m, f);
}

std::vector<GenderRecord> gender_attention(std::span<const IdentityRecord> identities) {
  std::vector<GenderRecord> out{{Gender::male, 0, {}}, {Gender::female, 0, {}}, {Gender::unknown, 0, {}}};
  std::size_t assigned = 0;
  for (const IdentityRecord& r : identities) {
    out[static_cast<std::size_t>(r.gender)].fixation_count += r.fixation_count;
    assigned += r.fixation_count;
  }
  if (assigned > 0)
    for (GenderRecord& g : out) g.share = static_cast<double>(g.fixation_count) / static_cast<double>(assigned);
  return out;
}

AttentionReport build_attention_map(std::span<const FixationEvent> fixations, std::span<const LabeledBox> boxes,
                                    std::span<const IdentityCluster> clusters, const SessionTiming& timing) {
  AttentionReport r;
  const std::size_t k = clusters.size();
  for (const IdentityCluster& c : clusters) {
    if (c.label != static_cast<int>(r.identities.size()))
      throw InvariantError("attention", "cluster labels must be 0..K-1 in order");
    IdentityRecord rec;
    rec.label = c.label;
    rec.gender = c.gender;
    rec.male_votes = c.male_votes;
    rec.female_votes = c.female_votes;
    r.identities.push_back(rec);
  }

  r.timeline.resize(static_cast<std::size_t>(std::max<std::int64_t>(timing.frame_count, 0)));
  for (std::size_t f = 0; f < r.timeline.size(); ++f) r.timeline[f].frame = static_cast<std::int64_t>(f);
  for (const LabeledBox& b : boxes) {
    if (b.frame < 0 || b.frame >= timing.frame_count) throw InvariantError("attention", "detection frame out of range");
    if (b.label < 0 || static_cast<std::size_t>(b.label) >= k) throw InvariantError("attention", "unknown identity label");
    r.timeline[static_cast<std::size_t>(b.frame)].visible.push_back(b.label);
  }
  for (TimelineRow& row : r.timeline) {
    std::sort(row.visible.begin(), row.visible.end());
    row.visible.erase(std::unique(row.visible.begin(), row.visible.end()), row.visible.end());
    for (int l : row.visible) ++r.identities[static_cast<std::size_t>(l)].frames_visible;
  }

  for (const FixationEvent& f : fixations) {
    ++r.total_fixations;
    if (f.target) {
      if (*f.target < 0 || static_cast<std::size_t>(*f.target) >= k)
        throw InvariantError("attention", "fixation target out of range");
      IdentityRecord& rec = r.identities[static_cast<std::size_t>(*f.target)];
      ++rec.fixation_count;
      rec.fixation_duration_us += f.duration_us();
    } else {
      ++r.unassigned_count;
      r.unassigned_duration_us += f.duration_us();
    }
    if (r.timeline.empty()) continue;
    const FrameSpan span = fixation_frame_span(f, timing.fps, timing.offset_us, timing.frame_count);
    for (std::int64_t fr = span.first; fr <= span.last; ++fr) {
      TimelineRow& row = r.timeline[static_cast<std::size_t>(fr)];
      if (row.fixation != FixationState::none) continue;
      row.fixation = f.target ? FixationState::assigned : FixationState::unassigned;
      row.label = f.target.value_or(-1);
    }
  }
  r.genders = gender_attention(r.identities);
  r.fill_shares();
  r.validate();
  return r;
}

std::vector<std::vector<double>> rank_sessions(std::span<const AttentionReport> reports) {
  std::vector<std::vector<double>> out;
  for (const AttentionReport& r : reports) {
    std::vector<double> row;
    for (const IdentityRecord& rec : r.identities)
      if (rec.fixation_share) row.push_back(*rec.fixation_share);
    std::stable_sort(row.begin(), row.end(), std::greater<>());
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace gazeattn
