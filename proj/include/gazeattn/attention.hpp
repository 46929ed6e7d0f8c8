#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gazeattn/types.hpp"

namespace gazeattn {

struct LabeledBox {
  std::int64_t frame = 0;
  BBox box;
  int label = 0;
};

// Region below and around a face: the box widened by body_widen about its
// center and extended downward by body_extend face heights.
bool in_body_region(const BBox& face, double x, double y, const AttentionConfig& cfg);

// Rules, in order: inside a face box; inside a body region; nearest face
// center within r_max_px. Several matches under one rule go to the nearest
// box center, then the lower label.
std::optional<int> assign_fixation(double cx, double cy, std::span<const LabeledBox> boxes,
                                   const AttentionConfig& cfg);

struct SessionTiming {
  double fps = 25.0;
  std::int64_t offset_us = 0;
  std::int64_t frame_count = 0;
};

// Sets target on each fixation using the boxes at its mid frame. boxes must
// be sorted by frame.
void attribute_fixations(std::vector<FixationEvent>& fixations, std::span<const LabeledBox> boxes,
                         const AttentionConfig& cfg, const SessionTiming& timing);

struct GenderVerdict {
  Gender gender = Gender::unknown;
  std::size_t male_votes = 0;
  std::size_t female_votes = 0;
};

// Each scored detection votes for its larger score; equal scores abstain.
// Equal vote counts (including none) give unknown.
GenderVerdict gender_majority(std::span<const GenderScores> scores);
GenderVerdict gender_majority(std::size_t male_votes, std::size_t female_votes);

// Fixation counts grouped by identity gender, shares over assigned fixations.
// Always returns the male, female and unknown buckets in that order.
std::vector<GenderRecord> gender_attention(std::span<const IdentityRecord> identities);

// fixations carry targets already; clusters provide labels and genders.
AttentionReport build_attention_map(std::span<const FixationEvent> fixations, std::span<const LabeledBox> boxes,
                                    std::span<const IdentityCluster> clusters, const SessionTiming& timing);

// Per session, identity fixation shares sorted descending (ties keep the
// lower label first). Sessions without fixations give an empty row.
std::vector<std::vector<double>> rank_sessions(std::span<const AttentionReport> reports);

}  // namespace gazeattn
