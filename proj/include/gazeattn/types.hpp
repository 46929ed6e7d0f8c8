#pragma once

// Domain types shared by every pipeline stage. Constructors validate their
// invariants and throw InvariantError naming the offending field.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazeattn/error.hpp"

namespace gazeattn {

// Face bounding box in image coordinates, origin top-left.
class BBox {
 public:
  BBox(double x, double y, double w, double h);

  double x() const { return x_; }
  double y() const { return y_; }
  double w() const { return w_; }
  double h() const { return h_; }
  double center_x() const { return x_ + 0.5 * w_; }
  double center_y() const { return y_ + 0.5 * h_; }
  double diagonal() const;

  // Closed containment test.
  bool contains(double px, double py) const {
    return px >= x_ && px <= x_ + w_ && py >= y_ && py <= y_ + h_;
  }
  BBox translated(double dx, double dy) const { return {x_ + dx, y_ + dy, w_, h_}; }

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  double x_, y_, w_, h_;
};

struct GenderScores {
  double male = 0.0;
  double female = 0.0;
  friend bool operator==(const GenderScores&, const GenderScores&) = default;
};

// One face observation. The embedding is normalized to unit length on
// construction.
class Detection {
 public:
  Detection(std::int64_t frame, std::int64_t ts_us, BBox bbox, std::vector<double> embedding,
            std::optional<GenderScores> gender = std::nullopt);

  std::int64_t frame() const { return frame_; }
  std::int64_t ts_us() const { return ts_us_; }
  const BBox& bbox() const { return bbox_; }
  std::span<const double> embedding() const { return embedding_; }
  std::size_t dim() const { return embedding_.size(); }
  const std::optional<GenderScores>& gender() const { return gender_; }

  friend bool operator==(const Detection&, const Detection&) = default;

 private:
  std::int64_t frame_;
  std::int64_t ts_us_;
  BBox bbox_;
  std::vector<double> embedding_;
  std::optional<GenderScores> gender_;
};

// Canonical detection order: (frame, bbox.x, bbox.y).
bool detection_less(const Detection& a, const Detection& b);

// Stable sort into canonical order.
void sort_detections(std::vector<Detection>& dets);

struct GazeSample {
  std::int64_t ts_us = 0;
  double x = 0.0;
  double y = 0.0;
  bool valid = false;
  friend bool operator==(const GazeSample&, const GazeSample&) = default;
};

// Throws unless timestamps are strictly increasing.
void validate_gaze_order(std::span<const GazeSample> gaze);

using DetectionIndex = std::size_t;

// Temporally linked chain of detections (indices into the session's sorted
// detection list) with its aggregated unit feature.
class Tracklet {
 public:
  Tracklet(int id, std::vector<DetectionIndex> members, std::vector<double> feature);

  int id() const { return id_; }
  const std::vector<DetectionIndex>& members() const { return members_; }
  std::span<const double> feature() const { return feature_; }

  // Checks member frames are strictly increasing with gaps <= max_gap.
  void validate_against(std::span<const Detection> dets, int max_gap) const;

  friend bool operator==(const Tracklet&, const Tracklet&) = default;

 private:
  int id_;
  std::vector<DetectionIndex> members_;
  std::vector<double> feature_;
};

struct Merge {
  std::size_t left;   // node id, leaves are 0..N-1, merged nodes N, N+1, ...
  std::size_t right;  // left < right
  double cost;
  std::size_t size;
  friend bool operator==(const Merge&, const Merge&) = default;
};

class Dendrogram {
 public:
  Dendrogram(std::size_t leaf_count, std::vector<Merge> merges);

  std::size_t leaf_count() const { return leaf_count_; }
  const std::vector<Merge>& merges() const { return merges_; }

 private:
  std::size_t leaf_count_;
  std::vector<Merge> merges_;
};

enum class Gender { male, female, unknown };

std::string to_string(Gender g);
Gender gender_from_string(const std::string& s);

struct IdentityCluster {
  int label = 0;
  std::vector<int> tracklet_ids;
  std::vector<DetectionIndex> singleton_detections;
  std::vector<double> centroid;
  Gender gender = Gender::unknown;
  std::size_t male_votes = 0;
  std::size_t female_votes = 0;
};

struct FixationEvent {
  std::int64_t start_us = 0;
  std::int64_t end_us = 0;
  double cx = 0.0;
  double cy = 0.0;
  double dispersion = 0.0;
  std::size_t sample_count = 0;
  std::optional<int> target;  // nullopt: unassigned
  bool motion_valid = true;

  std::int64_t duration_us() const { return end_us - start_us; }
  friend bool operator==(const FixationEvent&, const FixationEvent&) = default;
};

struct FlowSummary {
  std::int64_t frame = 0;
  double mean_magnitude = 0.0;
  double mean_orientation = 0.0;
  std::size_t kept_blocks = 0;
  friend bool operator==(const FlowSummary&, const FlowSummary&) = default;
};

enum class ClassifierStrategy { nearest_centroid, rbf_svm };

struct LinkingConfig {
  double theta_high = 0.6;
  double theta_margin = 0.05;
  int max_gap = 10;
  double sigma_loc = 1.0;
};

struct FixationConfig {
  double dispersion_threshold_px = 30.0;
  double min_duration_ms = 100.0;
};

struct AttentionConfig {
  double body_widen = 1.5;
  double body_extend = 4.0;
  double r_max_px = 100.0;
};

struct MotionConfig {
  int block_size = 16;
  int search_radius = 8;
  double shift_magnitude_px = 4.0;
};

struct ClassifierConfig {
  ClassifierStrategy strategy = ClassifierStrategy::nearest_centroid;
  double svm_c = 10.0;
  double svm_gamma = 0.0;  // 0 selects 1/D
};

struct SessionConfig {
  int num_students = 4;
  int embedding_dim = 128;
  double fps = 25.0;
  int frame_width = 1280;
  int frame_height = 960;
  std::int64_t gaze_offset_us = 0;
  LinkingConfig linking;
  FixationConfig fixation;
  AttentionConfig attention;
  MotionConfig motion;
  ClassifierConfig classifier;

  // Throws ConfigError naming the first offending key.
  void validate() const;
};

enum class FixationState { none, unassigned, assigned };

struct TimelineRow {
  std::int64_t frame = 0;
  std::vector<int> visible;
  FixationState fixation = FixationState::none;
  int label = -1;  // meaningful when fixation == assigned
  friend bool operator==(const TimelineRow&, const TimelineRow&) = default;
};

struct IdentityRecord {
  int label = 0;
  Gender gender = Gender::unknown;
  std::size_t male_votes = 0;
  std::size_t female_votes = 0;
  std::size_t frames_visible = 0;
  std::size_t fixation_count = 0;
  std::int64_t fixation_duration_us = 0;
  std::optional<double> fixation_share;
  std::optional<double> duration_share;
  friend bool operator==(const IdentityRecord&, const IdentityRecord&) = default;
};

struct GenderRecord {
  Gender gender = Gender::unknown;
  std::size_t fixation_count = 0;
  std::optional<double> share;  // over assigned fixations
  friend bool operator==(const GenderRecord&, const GenderRecord&) = default;
};

struct AttentionReport {
  std::vector<IdentityRecord> identities;  // ascending label
  std::vector<GenderRecord> genders;       // male, female, unknown
  std::size_t total_fixations = 0;
  std::size_t unassigned_count = 0;
  std::int64_t unassigned_duration_us = 0;
  std::optional<double> unassigned_share;
  std::vector<TimelineRow> timeline;
  // Provenance echoed into every rendered header: sorted key/value pairs.
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::pair<std::string, std::string>> inputs;

  // Derives every share from the counts and durations. Shares are absent
  // when their denominator is zero.
  void fill_shares();

  // Throws InvariantError if shares do not sum to one or counts disagree.
  void validate() const;

  friend bool operator==(const AttentionReport&, const AttentionReport&) = default;
};

}  // namespace gazeattn
