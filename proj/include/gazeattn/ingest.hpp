#pragma once

// Session input parsing and artifact rendering.
//
// Inputs:
//   detections.jsonl  header {"embedding_dim":D,"frame_count":T,"width":W,"height":H}
//                     then one {"frame","ts_us","bbox":[x,y,w,h],"embedding":[..],"gender":[m,f]?} per line
//   gaze.csv          ts_us,x,y,valid
//   frames/frame_%06d.pgm  optional 8-bit grayscale dump
//
// Every real number is written with fixed 6-decimal formatting so outputs are
// byte-stable across platforms.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gazeattn/image.hpp"
#include "gazeattn/types.hpp"

namespace gazeattn {

struct DetectionsHeader {
  int embedding_dim = 0;
  std::int64_t frame_count = 0;
  int width = 0;
  int height = 0;
  friend bool operator==(const DetectionsHeader&, const DetectionsHeader&) = default;
};

struct DetectionFile {
  DetectionsHeader header;
  std::vector<Detection> detections;  // canonical order
};

DetectionFile parse_detections(std::istream& in);
std::string write_detections(const DetectionsHeader& header, std::span<const Detection> dets);

struct GazeFile {
  std::vector<GazeSample> samples;  // strictly increasing ts_us
  std::size_t out_of_range = 0;     // rows demoted to invalid
};

// Rows whose coordinates fall outside the frame box doubled about its center
// are kept but marked invalid.
GazeFile parse_gaze(std::istream& in, int width, int height);
std::string write_gaze(std::span<const GazeSample> gaze);

enum class ReportFormat { json, csv, svg_timeline };

std::string write_report(const AttentionReport& report, ReportFormat format);

// Reads report.json. Shares are re-derived from counts and checked against
// the printed values.
AttentionReport parse_report(std::istream& in);

std::string write_timeline_csv(const AttentionReport& report);

std::string write_tracklets(std::span<const Tracklet> tracklets, std::span<const Detection> dets);

// singleton_margins (optional) holds the classifier confidence per singleton.
std::string write_clusters(std::span<const int> tracklet_labels, std::span<const int> singleton_labels,
                           std::span<const std::vector<double>> centroids,
                           std::span<const double> singleton_margins = {});

// mid_frames[i] is the field-camera frame of fixation i's midpoint.
std::string write_fixations(std::span<const FixationEvent> fixations, std::span<const std::int64_t> mid_frames);

std::string write_flow(std::span<const FlowSummary> flows);

GrayImage parse_pgm(std::istream& in);
std::string write_pgm(const GrayImage& image);
std::string frame_filename(std::int64_t index);

std::string sha256_hex(std::string_view bytes);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

struct SessionBundle {
  SessionConfig config;
  DetectionsHeader header;
  std::vector<Detection> detections;
  std::vector<GazeSample> gaze;
  std::size_t gaze_warnings = 0;
  std::optional<std::filesystem::path> frames_dir;
  std::vector<GrayImage> frames;
  // (file name, sha256) of every input read, sorted by name.
  std::vector<std::pair<std::string, std::string>> input_hashes;
};

// Header values (D, width, height) override the corresponding config keys.
// Throws ParseError naming the file on any failure.
SessionBundle load_bundle(const std::filesystem::path& dir, SessionConfig config, bool load_frames = true);

// Checks frame indices, gaze time range and embedding dimensions.
void validate_bundle(const SessionBundle& bundle);

}  // namespace gazeattn
