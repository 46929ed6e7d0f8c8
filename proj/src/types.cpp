#include "gazeattn/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "gazeattn/linalg.hpp"

namespace gazeattn {

namespace {

[[noreturn]] void fail(const std::string& what) { throw InvariantError("session-model", what); }

}  // namespace

BBox::BBox(double x, double y, double w, double h) : x_(x), y_(y), w_(w), h_(h) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h))
    fail("bbox fields must be finite");
  if (!(w > 0.0)) fail("bbox.w must be > 0");
  if (!(h > 0.0)) fail("bbox.h must be > 0");
  if (!std::isfinite(x + w) || !std::isfinite(y + h)) fail("bbox extent must be finite");
}

double BBox::diagonal() const { return std::hypot(w_, h_); }

Detection::Detection(std::int64_t frame, std::int64_t ts_us, BBox bbox, std::vector<double> embedding,
                     std::optional<GenderScores> gender)
    : frame_(frame), ts_us_(ts_us), bbox_(bbox), embedding_(std::move(embedding)), gender_(gender) {
  if (frame_ < 0) fail("detection.frame must be >= 0");
  if (embedding_.empty()) fail("detection.embedding must not be empty");
  for (double v : embedding_)
    if (!std::isfinite(v)) fail("detection.embedding must be finite");
  if (!normalize_in_place(embedding_)) fail("detection.embedding has zero norm");
  if (gender_) {
    if (!std::isfinite(gender_->male) || gender_->male < 0.0) fail("detection.gender.male must be >= 0");
    if (!std::isfinite(gender_->female) || gender_->female < 0.0) fail("detection.gender.female must be >= 0");
  }
}

bool detection_less(const Detection& a, const Detection& b) {
  return std::make_tuple(a.frame(), a.bbox().x(), a.bbox().y()) <
         std::make_tuple(b.frame(), b.bbox().x(), b.bbox().y());
}

void sort_detections(std::vector<Detection>& dets) { std::stable_sort(dets.begin(), dets.end(), detection_less); }

void validate_gaze_order(std::span<const GazeSample> gaze) {
  for (std::size_t i = 1; i < gaze.size(); ++i)
    if (gaze[i].ts_us <= gaze[i - 1].ts_us) fail("gaze.ts_us must be strictly increasing");
}

Tracklet::Tracklet(int id, std::vector<DetectionIndex> members, std::vector<double> feature)
    : id_(id), members_(std::move(members)), feature_(std::move(feature)) {
  if (members_.size() < 2) fail("tracklet.members must have at least 2 entries");
  if (std::abs(norm(feature_) - 1.0) > 1e-6) fail("tracklet.feature must be unit norm");
}

void Tracklet::validate_against(std::span<const Detection> dets, int max_gap) const {
  for (std::size_t k = 0; k < members_.size(); ++k) {
    if (members_[k] >= dets.size()) fail("tracklet.members index out of range");
    if (k == 0) continue;
    const auto gap = dets[members_[k]].frame() - dets[members_[k - 1]].frame();
    if (gap <= 0) fail("tracklet.members frames must be strictly increasing");
    if (gap > max_gap) fail("tracklet.members frame gap exceeds max_gap");
  }
}

Dendrogram::Dendrogram(std::size_t leaf_count, std::vector<Merge> merges)
    : leaf_count_(leaf_count), merges_(std::move(merges)) {
  if (leaf_count_ == 0) fail("dendrogram needs at least one leaf");
  if (merges_.size() != leaf_count_ - 1) fail("dendrogram.merges must have N-1 entries");
  std::vector<char> used(2 * leaf_count_ - 1, 0);
  std::vector<std::size_t> size(2 * leaf_count_ - 1, 1);
  for (std::size_t k = 0; k < merges_.size(); ++k) {
    const Merge& m = merges_[k];
    const std::size_t node = leaf_count_ + k;
    if (m.left >= m.right || m.right >= node) fail("dendrogram.merges references an invalid node");
    if (used[m.left] || used[m.right]) fail("dendrogram.merges consumes a node twice");
    used[m.left] = used[m.right] = 1;
    size[node] = size[m.left] + size[m.right];
    if (m.size != size[node]) fail("dendrogram.merges size mismatch");
    if (!std::isfinite(m.cost) || m.cost < 0.0) fail("dendrogram.merges cost must be finite and >= 0");
    if (k > 0) {
      const double prev = merges_[k - 1].cost;
      if (m.cost < prev - 1e-9 * std::max(1.0, prev)) fail("dendrogram.merges costs must be non-decreasing");
    }
  }
}

std::string to_string(Gender g) {
  switch (g) {
    case Gender::male:
      return "male";
    case Gender::female:
      return "female";
    case Gender::unknown:
      break;
  }
  return "unknown";
}

Gender gender_from_string(const std::string& s) {
  if (s == "male") return Gender::male;
  if (s == "female") return Gender::female;
  if (s == "unknown") return Gender::unknown;
  throw InvariantError("session-model", "unknown gender '" + s + "'");
}

void SessionConfig::validate() const {
  auto require = [](bool ok, const char* key) {
    if (!ok) throw ConfigError("config", std::string(key) + " is out of range");
  };
  require(num_students >= 1, "session.num_students");
  require(embedding_dim >= 1, "session.embedding_dim");
  require(std::isfinite(fps) && fps > 0.0, "session.fps");
  require(frame_width > 0, "session.frame_width");
  require(frame_height > 0, "session.frame_height");
  require(linking.theta_high > 0.0 && linking.theta_high <= 1.0, "linking.theta_high");
  require(linking.theta_margin > 0.0, "linking.theta_margin");
  require(linking.max_gap >= 1, "linking.max_gap");
  require(linking.sigma_loc > 0.0, "linking.sigma_loc");
  require(fixation.dispersion_threshold_px > 0.0, "fixation.dispersion_threshold_px");
  require(fixation.min_duration_ms > 0.0, "fixation.min_duration_ms");
  require(attention.body_widen > 0.0, "attention.body_widen");
  require(attention.body_extend > 0.0, "attention.body_extend");
  require(attention.r_max_px > 0.0, "attention.r_max_px");
  require(motion.block_size >= 4, "motion.block_size");
  require(motion.search_radius >= 1, "motion.search_radius");
  require(motion.shift_magnitude_px > 0.0, "motion.shift_magnitude_px");
  require(classifier.svm_c > 0.0, "classifier.svm_c");
  require(classifier.svm_gamma >= 0.0, "classifier.svm_gamma");
}

void AttentionReport::fill_shares() {
  std::int64_t total_duration = unassigned_duration_us;
  std::size_t assigned = 0;
  for (const auto& r : identities) {
    total_duration += r.fixation_duration_us;
    assigned += r.fixation_count;
  }
  const double n = static_cast<double>(total_fixations);
  for (auto& r : identities) {
    r.fixation_share.reset();
    r.duration_share.reset();
    if (total_fixations > 0) r.fixation_share = static_cast<double>(r.fixation_count) / n;
    if (total_duration > 0)
      r.duration_share = static_cast<double>(r.fixation_duration_us) / static_cast<double>(total_duration);
  }
  unassigned_share.reset();
  if (total_fixations > 0) unassigned_share = static_cast<double>(unassigned_count) / n;
  for (auto& g : genders) {
    g.share.reset();
    if (assigned > 0) g.share = static_cast<double>(g.fixation_count) / static_cast<double>(assigned);
  }
}

void AttentionReport::validate() const {
  std::size_t assigned = 0;
  for (const auto& r : identities) assigned += r.fixation_count;
  if (assigned + unassigned_count != total_fixations)
    throw InvariantError("attention", "assigned + unassigned fixations != total");
  if (total_fixations == 0) return;
  double sum = unassigned_share.value_or(0.0);
  for (const auto& r : identities) sum += r.fixation_share.value_or(0.0);
  if (std::abs(sum - 1.0) > 1e-9) throw InvariantError("attention", "fixation shares do not sum to 1");
}

}  // namespace gazeattn
