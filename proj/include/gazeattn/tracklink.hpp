#pragma once

// Low-level face tracklet linking. The link affinity of two detections is the
// product of a location, a size and an appearance term, each in [0, 1]:
//
//   loc  = exp(-d^2 / (sigma_loc^2 s^2))   d: center distance, s: mean box diagonal
//   size = (min w / max w) (min h / max h)
//   app  = (1 + <e_a, e_b>) / 2
//
// Links are made greedily in descending affinity and only when the pair is
// both confident (>= theta_high) and unambiguous (beats every competing pair
// sharing one of its endpoints by >= theta_margin).

#include <span>
#include <vector>

#include "gazeattn/types.hpp"

namespace gazeattn {

double loc_affinity(const BBox& a, const BBox& b, double sigma_loc);
double size_affinity(const BBox& a, const BBox& b);

// Throws InvariantError unless both inputs are unit vectors of equal length.
double app_affinity(std::span<const double> ea, std::span<const double> eb);

// Requires a.frame < b.frame <= a.frame + max_gap.
double link_affinity(const Detection& a, const Detection& b, const LinkingConfig& cfg);

struct LinkResult {
  std::vector<Tracklet> tracklets;         // ascending id, id = position
  std::vector<DetectionIndex> singletons;  // ascending index
};

// dets must be in canonical order.
LinkResult link_detections(std::span<const Detection> dets, const LinkingConfig& cfg);

// Element-wise mean of unit embeddings, renormalized. Throws "degenerate
// tracklet" when the mean vanishes.
std::vector<double> aggregate_embeddings(std::span<const std::span<const double>> embeddings);

std::vector<double> aggregate_members(std::span<const Detection> dets, std::span<const DetectionIndex> members);

}  // namespace gazeattn
