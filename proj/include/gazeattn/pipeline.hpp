#pragma once

// End-to-end session processing. Each stage is exposed separately so the CLI
// can run a prefix of the pipeline; run_pipeline chains all of them and
// renders every artifact to bytes.

#include <map>
#include <string>
#include <vector>

#include "gazeattn/attention.hpp"
#include "gazeattn/cluster.hpp"
#include "gazeattn/ingest.hpp"
#include "gazeattn/motion.hpp"
#include "gazeattn/tracklink.hpp"

namespace gazeattn {

struct ClusterStage {
  std::vector<int> tracklet_labels;
  std::vector<int> singleton_labels;
  std::vector<double> singleton_margins;
  std::vector<IdentityCluster> clusters;  // genders filled
  std::vector<int> detection_labels;      // per detection, canonical order
};

LinkResult stage_link(const SessionBundle& bundle);
ClusterStage stage_cluster(const SessionBundle& bundle, const LinkResult& links);
std::vector<FixationEvent> stage_fixations(const SessionBundle& bundle);

struct MotionStage {
  std::vector<FlowSummary> flows;
  std::vector<FrameInterval> shifts;
};

// Empty when the bundle carries no frames.
MotionStage stage_motion(const SessionBundle& bundle);

struct PipelineOptions {
  bool motion_valid_only = false;  // build reports from motion-valid fixations only
};

struct PipelineResult {
  LinkResult links;
  ClusterStage clusters;
  std::vector<FixationEvent> fixations;  // all fixations, targets and motion flags set
  MotionStage motion;
  AttentionReport report;
  std::map<std::string, std::string> artifacts;  // file name -> bytes
};

SessionTiming session_timing(const SessionBundle& bundle);

std::vector<LabeledBox> labeled_boxes(const SessionBundle& bundle, const std::vector<int>& detection_labels);

// Throws InvariantError naming the stage when an internal invariant breaks.
PipelineResult run_pipeline(const SessionBundle& bundle, const PipelineOptions& options = {});

// "session,rank_1,...,rank_K" with one row per report.
std::string write_ranking(const std::vector<std::string>& names, const std::vector<std::vector<double>>& ranked);

}  // namespace gazeattn
