#include "gazeattn/pipeline.hpp"

#include <algorithm>

#include "gazeattn/config.hpp"
#include "gazeattn/fixation.hpp"

namespace gazeattn {

LinkResult stage_link(const SessionBundle& bundle) {
  const auto& cfg = bundle.config.linking;
  LinkResult links = link_detections(bundle.detections, cfg);
  std::vector<int> seen(bundle.detections.size(), 0);
  for (const Tracklet& t : links.tracklets) {
    t.validate_against(bundle.detections, cfg.max_gap);
    for (DetectionIndex i : t.members()) ++seen[i];
  }
  for (DetectionIndex i : links.singletons) ++seen[i];
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; }))
    throw InvariantError("tracklink", "tracklets and singletons do not partition the detections");
  return links;
}

ClusterStage stage_cluster(const SessionBundle& bundle, const LinkResult& links) {
  const int k = bundle.config.num_students;
  const std::size_t n = links.tracklets.size();
  if (n < static_cast<std::size_t>(k))
    throw InvariantError("cluster", "found " + std::to_string(n) + " tracklets, need at least " + std::to_string(k));

  const std::size_t d = static_cast<std::size_t>(bundle.header.embedding_dim);
  FeatureMatrix features(n, d);
  for (std::size_t i = 0; i < n; ++i) features.set_row(i, links.tracklets[i].feature());

  ClusterStage out;
  out.tracklet_labels = n == 1 ? std::vector<int>{0} : cut(ward_linkage(features), k);

  const SingletonClassifier model =
      SingletonClassifier::train(features, out.tracklet_labels, k, bundle.config.classifier);
  out.singleton_labels = assign_singletons(model, bundle.detections, links.singletons);
  for (DetectionIndex s : links.singletons) out.singleton_margins.push_back(model.margin(bundle.detections[s].embedding()));

  out.clusters = build_clusters(links.tracklets, out.tracklet_labels, links.singletons, out.singleton_labels, k);

  out.detection_labels.assign(bundle.detections.size(), -1);
  for (std::size_t t = 0; t < n; ++t)
    for (DetectionIndex i : links.tracklets[t].members()) out.detection_labels[i] = out.tracklet_labels[t];
  for (std::size_t s = 0; s < links.singletons.size(); ++s)
    out.detection_labels[links.singletons[s]] = out.singleton_labels[s];
  if (std::any_of(out.detection_labels.begin(), out.detection_labels.end(), [](int l) { return l < 0; }))
    throw InvariantError("cluster", "a detection was left without an identity");

  std::vector<std::vector<GenderScores>> scores(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < bundle.detections.size(); ++i)
    if (const auto& g = bundle.detections[i].gender()) scores[static_cast<std::size_t>(out.detection_labels[i])].push_back(*g);
  for (IdentityCluster& c : out.clusters) {
    const GenderVerdict v = gender_majority(scores[static_cast<std::size_t>(c.label)]);
    c.gender = v.gender;
    c.male_votes = v.male_votes;
    c.female_votes = v.female_votes;
  }
  return out;
}

std::vector<FixationEvent> stage_fixations(const SessionBundle& bundle) {
  auto fixations = detect_fixations(bundle.gaze, bundle.config.fixation);
  // Fixations that end before the first video frame cannot be attributed.
  std::erase_if(fixations, [&](const FixationEvent& f) { return f.end_us < bundle.config.gaze_offset_us; });
  return fixations;
}

MotionStage stage_motion(const SessionBundle& bundle) {
  MotionStage m;
  if (bundle.frames.size() < 2) return m;
  m.flows = flow_sequence(bundle.frames, bundle.config.motion);
  m.shifts = detect_gaze_shifts(m.flows, bundle.config.motion.shift_magnitude_px);
  return m;
}

SessionTiming session_timing(const SessionBundle& bundle) {
  return {bundle.config.fps, bundle.config.gaze_offset_us, bundle.header.frame_count};
}

std::vector<LabeledBox> labeled_boxes(const SessionBundle& bundle, const std::vector<int>& detection_labels) {
  std::vector<LabeledBox> boxes;
  boxes.reserve(bundle.detections.size());
  for (std::size_t i = 0; i < bundle.detections.size(); ++i)
    boxes.push_back({bundle.detections[i].frame(), bundle.detections[i].bbox(), detection_labels[i]});
  return boxes;
}

PipelineResult run_pipeline(const SessionBundle& bundle, const PipelineOptions& options) {
  bundle.config.validate();
  PipelineResult r;
  const SessionTiming timing = session_timing(bundle);

  r.links = stage_link(bundle);
  r.clusters = stage_cluster(bundle, r.links);
  const auto boxes = labeled_boxes(bundle, r.clusters.detection_labels);

  r.fixations = stage_fixations(bundle);
  attribute_fixations(r.fixations, boxes, bundle.config.attention, timing);
  r.motion = stage_motion(bundle);
  r.fixations = validate_fixations(r.fixations, r.motion.shifts, timing.fps, timing.offset_us, timing.frame_count);

  std::vector<FixationEvent> used;
  for (const FixationEvent& f : r.fixations)
    if (!options.motion_valid_only || f.motion_valid) used.push_back(f);
  r.report = build_attention_map(used, boxes, r.clusters.clusters, timing);

  r.report.config = config_entries(bundle.config);
  r.report.config.emplace_back("report.fixations", options.motion_valid_only ? "motion_valid" : "all");
  std::sort(r.report.config.begin(), r.report.config.end());
  r.report.inputs = bundle.input_hashes;
  r.report.inputs.emplace_back("gaze_out_of_range", std::to_string(bundle.gaze_warnings));
  std::sort(r.report.inputs.begin(), r.report.inputs.end());
  r.report.validate();

  std::vector<std::int64_t> mids;
  for (const FixationEvent& f : r.fixations)
    mids.push_back(fixation_frame_span(f, timing.fps, timing.offset_us, timing.frame_count).mid);
  std::vector<std::vector<double>> centroids;
  for (const IdentityCluster& c : r.clusters.clusters) centroids.push_back(c.centroid);

  auto& a = r.artifacts;
  a["tracklets.jsonl"] = write_tracklets(r.links.tracklets, bundle.detections);
  a["clusters.json"] = write_clusters(r.clusters.tracklet_labels, r.clusters.singleton_labels, centroids,
                                      r.clusters.singleton_margins);
  a["fixations.csv"] = write_fixations(r.fixations, mids);
  if (!r.motion.flows.empty()) a["flow.csv"] = write_flow(r.motion.flows);
  a["report.json"] = write_report(r.report, ReportFormat::json);
  a["report.csv"] = write_report(r.report, ReportFormat::csv);
  a["timeline.svg"] = write_report(r.report, ReportFormat::svg_timeline);
  a["timeline.csv"] = write_timeline_csv(r.report);
  return r;
}

std::string write_ranking(const std::vector<std::string>& names, const std::vector<std::vector<double>>& ranked) {
  std::size_t cols = 0;
  for (const auto& row : ranked) cols = std::max(cols, row.size());
  std::string o = "session";
  for (std::size_t c = 0; c < cols; ++c) o += ",rank_" + std::to_string(c + 1);
  o += '\n';
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    o += names[i];
    for (std::size_t c = 0; c < cols; ++c) o += ',' + (c < ranked[i].size() ? format_real(ranked[i][c]) : std::string());
    o += '\n';
  }
  return o;
}

}  // namespace gazeattn
