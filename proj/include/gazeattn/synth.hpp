#pragma once

// Deterministic synthetic sessions with ground truth. A script fixes a seat
// box per identity and an ordered attention schedule; the generator turns it
// into per-frame detections, a gaze stream and (optionally) a frame dump
// using only SplitMix64 draws, so identical scripts give identical bytes.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gazeattn/image.hpp"
#include "gazeattn/ingest.hpp"
#include "gazeattn/types.hpp"

namespace gazeattn {

enum class SegmentKind { student, board, turn };

struct ScheduleSegment {
  SegmentKind kind = SegmentKind::student;
  int target = -1;  // identity for student segments
  std::int64_t duration_ms = 0;
  int pan_dx = 0;  // camera pan per frame during a turn
  int pan_dy = 0;
  friend bool operator==(const ScheduleSegment&, const ScheduleSegment&) = default;
};

struct BlurSegment {
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;  // inclusive
  double dropout = 0.0;
  friend bool operator==(const BlurSegment&, const BlurSegment&) = default;
};

struct SynthScript {
  std::uint64_t seed = 42;
  int identities = 4;
  int embedding_dim = 128;
  double duration_s = 900.0;
  double fps = 25.0;
  // At 200 Hz the inner samples of a 30 ms ramp stay outside the default
  // dispersion box of either plateau for seats 280 px apart.
  double gaze_rate_hz = 200.0;
  int frame_width = 1280;
  int frame_height = 960;
  std::vector<BBox> seats;
  std::vector<ScheduleSegment> schedule;
  double embedding_angle_deg = 15.0;
  double bbox_jitter_px = 3.0;
  double gaze_jitter_px = 4.0;
  std::vector<BlurSegment> blur_segments;
  std::vector<Gender> genders;     // per identity; empty means all unknown
  double gender_accuracy = 0.8;    // probability a scored detection favors the true gender
  double target_visibility = 1.0;  // looked-at student, after the transition frames
  double other_visibility = 0.01;  // every other student, and everyone during board/turn segments
  int transition_frames = 2;       // frames at a segment start where the target is not yet in view
  bool emit_frames = false;
  int dump_width = 160;
  int dump_height = 120;

  std::int64_t frame_count() const;

  // Throws ConfigError naming the first violated constraint.
  void validate() const;

  friend bool operator==(const SynthScript&, const SynthScript&) = default;
};

SynthScript parse_script(const std::string& json_text);
std::string write_script(const SynthScript& script);

struct ScheduleRequest {
  std::vector<double> shares;  // per identity, count-based
  double board_fraction = 0.0; // fraction of segments
  double turn_fraction = 0.0;  // fraction of segments
  std::int64_t min_ms = 1000;
  std::int64_t max_ms = 4000;
  std::int64_t turn_min_ms = 400;
  std::int64_t turn_max_ms = 800;
  int max_pan = 8;  // per-component bound
  double min_pan = 5.0;
};

// Builds an ordered schedule whose durations sum to total_ms, are multiples of
// quantum_ms and never repeat a target back to back (board and turn count as
// one target). Segment counts follow the shares by largest remainder.
std::vector<ScheduleSegment> build_schedule(std::uint64_t seed, std::int64_t total_ms, std::int64_t quantum_ms,
                                            const ScheduleRequest& request);

// 4 identities, 15 minutes at 25 fps, 40% board segments, shares
// (0.4, 0.3, 0.2, 0.1), a few blur intervals, genders m, m, f, f.
SynthScript default_script(std::uint64_t seed);

// Like the default regime but without board segments or blur: every fixation
// belongs to a student.
SynthScript share_script(std::uint64_t seed, std::vector<double> shares, double duration_s = 900.0);

// 30 s with head turns and a 160x120 frame dump.
SynthScript motion_script(std::uint64_t seed);

struct TruthSegment {
  std::int64_t start_us = 0;
  std::int64_t end_us = 0;  // exclusive
  SegmentKind kind = SegmentKind::student;
  int target = -1;
  friend bool operator==(const TruthSegment&, const TruthSegment&) = default;
};

struct GroundTruth {
  std::vector<int> detection_identity;  // aligned with canonical detection order
  std::vector<std::vector<double>> identity_vectors;
  std::vector<TruthSegment> segments;
  std::vector<std::pair<std::int64_t, std::int64_t>> shift_intervals;  // inclusive flow-frame ranges
  std::vector<double> scripted_shares;
  std::vector<Gender> genders;
  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

std::string write_ground_truth(const GroundTruth& truth);
GroundTruth parse_ground_truth(const std::string& json_text);

struct GeneratedSession {
  DetectionsHeader header;
  std::vector<Detection> detections;  // canonical order
  std::vector<GazeSample> gaze;
  std::vector<GrayImage> frames;
  GroundTruth truth;
};

// Throws InvariantError("synth", ...) if the identity vectors cannot be
// separated by 60 degrees in the requested dimension.
GeneratedSession generate_session(const SynthScript& script);

// Unit vectors with pairwise angle >= 60 degrees by rejection sampling.
std::vector<std::vector<double>> identity_vectors(std::uint64_t seed, int k, int d);

// Index of the identity vector with the largest dot product; ties to the lower label.
int oracle_identity(std::span<const double> embedding, const std::vector<std::vector<double>>& identities);

// File name -> bytes for detections.jsonl, gaze.csv, ground_truth.json,
// script.json and frames/frame_%06d.pgm.
std::map<std::string, std::string> bundle_files(const SynthScript& script, const GeneratedSession& session);

void write_bundle(const std::filesystem::path& dir, const SynthScript& script, const GeneratedSession& session);

}  // namespace gazeattn
