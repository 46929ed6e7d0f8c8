#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "gazeattn/attention.hpp"
#include "gazeattn/fixation.hpp"
#include "gazeattn/synth.hpp"
#include "helpers.hpp"

using namespace gazeattn;

namespace {

SynthScript tiny_script(std::uint64_t seed) {
  SynthScript s;
  s.seed = seed;
  s.identities = 1;
  s.embedding_dim = 8;
  s.duration_s = 2.0;
  s.seats = {BBox(100, 100, 50, 60)};
  s.schedule = {{SegmentKind::student, 0, 2000, 0, 0}};
  return s;
}

// Ground-truth target (nullopt for board/turn) of the segment holding t.
std::optional<int> truth_target(const GroundTruth& g, std::int64_t t) {
  for (const auto& s : g.segments)
    if (t >= s.start_us && t < s.end_us) return s.kind == SegmentKind::student ? std::optional<int>(s.target) : std::nullopt;
  return std::nullopt;
}

}  // namespace

TEST_CASE("identical scripts give identical bundles, different seeds differ") {
  SynthScript a = default_script(42);
  a.duration_s = 60.0;
  a.schedule = build_schedule(42, 60000, 40, ScheduleRequest{{0.4, 0.3, 0.2, 0.1}, 0.4});
  a.blur_segments = {{100, 124, 0.5}};
  const auto fa = bundle_files(a, generate_session(a));
  const auto fb = bundle_files(a, generate_session(a));
  CHECK(fa == fb);
  SynthScript c = a;
  c.seed = 43;
  const auto fc = bundle_files(c, generate_session(c));
  CHECK(fa.at("gaze.csv") != fc.at("gaze.csv"));
  CHECK(default_script(42) == default_script(42));
  CHECK_FALSE(default_script(42).schedule == default_script(43).schedule);
}

TEST_CASE("zero noise reproduces the identity vector exactly") {
  SynthScript s = tiny_script(7);
  s.embedding_angle_deg = 0.0;
  s.bbox_jitter_px = 0.0;
  s.gaze_jitter_px = 0.0;
  s.other_visibility = 0.0;
  const auto g = generate_session(s);
  REQUIRE(g.detections.size() == 50 - 2);  // minus the transition frames
  for (const auto& d : g.detections) {
    CHECK(std::equal(d.embedding().begin(), d.embedding().end(), g.truth.identity_vectors[0].begin()));
    CHECK(d.bbox() == s.seats[0]);
  }
  for (const auto& p : g.gaze) CHECK(p.x == g.gaze[0].x);
}

TEST_CASE("identity vectors are separated by at least 60 degrees") {
  const auto v = identity_vectors(3, 6, 16);
  REQUIRE(v.size() == 6);
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(norm(v[i]) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t j = i + 1; j < v.size(); ++j) CHECK(dot(v[i], v[j]) <= 0.5);
  }
  CHECK_THROWS_AS(identity_vectors(3, 2, 1), InvariantError);
  CHECK_THROWS_AS(identity_vectors(3, 8, 2), InvariantError);  // at most 6 directions at 60 deg in the plane
}

TEST_CASE("oracle identity") {
  const std::vector<std::vector<double>> ids{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  CHECK(oracle_identity(ids[2], ids) == 2);
  const double r = std::sqrt(0.5);
  CHECK(oracle_identity(std::vector<double>{r, r, 0}, ids) == 0);
}

TEST_CASE("oracle labels equal generator labels for noise below half the separation") {
  const SynthScript s = default_script(42);
  const auto g = generate_session(s);
  REQUIRE(g.detections.size() == g.truth.detection_identity.size());
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < g.detections.size(); ++i)
    mismatches += oracle_identity(g.detections[i].embedding(), g.truth.identity_vectors) != g.truth.detection_identity[i];
  CHECK(mismatches == 0);
  // About 14k detections for a 15 minute, four-student session.
  CHECK(g.detections.size() > 12000);
  CHECK(g.detections.size() < 16000);
  MESSAGE("default seed-42 detections: " << g.detections.size());
}

TEST_CASE("schedules honour their contract") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    ScheduleRequest req{{0.4, 0.3, 0.2, 0.1}, 0.3, 0.1};
    const auto s = build_schedule(seed, 300000, 40, req);
    std::int64_t total = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      total += s[i].duration_ms;
      CHECK(s[i].duration_ms % 40 == 0);
      if (s[i].kind == SegmentKind::turn) {
        CHECK(s[i].duration_ms >= req.turn_min_ms);
        CHECK(s[i].duration_ms <= req.turn_max_ms);
        CHECK(std::hypot(s[i].pan_dx, s[i].pan_dy) >= req.min_pan);
        CHECK(std::max(std::abs(s[i].pan_dx), std::abs(s[i].pan_dy)) <= req.max_pan);
      } else {
        CHECK(s[i].duration_ms >= req.min_ms);
        CHECK(s[i].duration_ms <= req.max_ms);
      }
      if (i > 0) {
        const bool prev_student = s[i - 1].kind == SegmentKind::student, cur_student = s[i].kind == SegmentKind::student;
        CHECK_FALSE((prev_student == cur_student && (!cur_student || s[i - 1].target == s[i].target)));
      }
    }
    CHECK(total == 300000);
  }
  CHECK_THROWS_AS(build_schedule(1, 1010, 40, ScheduleRequest{{1.0}, 0.0}), ConfigError);
  CHECK_THROWS_AS(build_schedule(1, 100000, 40, ScheduleRequest{{1.0, 0.0}, 0.0}), ConfigError);
}

TEST_CASE("script validation and round trip") {
  const SynthScript s = default_script(9);
  CHECK_NOTHROW(s.validate());
  CHECK(parse_script(write_script(s)) == s);
  const SynthScript m = motion_script(9);
  CHECK(parse_script(write_script(m)) == m);

  SynthScript bad = s;
  bad.seats[1] = bad.seats[0].translated(10, 10);
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("overlap"), ConfigError);
  bad = s;
  bad.schedule.back().duration_ms += 40;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("sum"), ConfigError);
  CHECK_THROWS_AS(parse_script("{\"seed\":1,\"bogus\":2}"), ParseError);
  CHECK_THROWS_AS(parse_script("[1,2"), ParseError);
  std::string text = write_script(s);
  text.replace(text.find("\"male\""), 6, "\"other\"");
  CHECK_THROWS_AS(parse_script(text), ParseError);
}

TEST_CASE("ground truth round trip") {
  const auto g = generate_session(motion_script(5));
  CHECK_FALSE(g.truth.shift_intervals.empty());
  CHECK(parse_ground_truth(write_ground_truth(g.truth)) == g.truth);
  CHECK_THROWS_AS(parse_ground_truth("{}"), ParseError);
}

TEST_CASE("generated bundles pass ingest validation") {
  const auto dir = testutil::scratch_dir("synth_bundle");
  const SynthScript s = motion_script(11);
  const auto g = generate_session(s);
  write_bundle(dir, s, g);
  const SessionBundle b = load_bundle(dir, SessionConfig{});
  CHECK(b.detections.size() == g.detections.size());
  REQUIRE(b.gaze.size() == g.gaze.size());
  for (std::size_t i = 0; i < b.gaze.size(); ++i) {
    CHECK(b.gaze[i].ts_us == g.gaze[i].ts_us);
    CHECK(b.gaze[i].valid == g.gaze[i].valid);
    CHECK(std::abs(b.gaze[i].x - g.gaze[i].x) <= 5e-7);  // 6-decimal text
    CHECK(std::abs(b.gaze[i].y - g.gaze[i].y) <= 5e-7);
  }
  CHECK(b.frames == g.frames);
  CHECK(b.header == g.header);
  CHECK(b.gaze_warnings == 0);
  CHECK(b.frames.size() == static_cast<std::size_t>(s.frame_count()));
}

TEST_CASE("scripted fixation targets are recovered from the generated gaze") {
  const SynthScript s = default_script(42);
  const auto g = generate_session(s);
  auto fixations = detect_fixations(g.gaze, FixationConfig{});
  std::vector<LabeledBox> boxes;
  for (std::size_t i = 0; i < g.detections.size(); ++i)
    boxes.push_back({g.detections[i].frame(), g.detections[i].bbox(), g.truth.detection_identity[i]});
  const SessionTiming timing{s.fps, 0, s.frame_count()};
  attribute_fixations(fixations, boxes, AttentionConfig{}, timing);
  std::size_t agree = 0;
  for (const auto& f : fixations) agree += f.target == truth_target(g.truth, f.start_us + (f.end_us - f.start_us) / 2);
  const double rate = static_cast<double>(agree) / static_cast<double>(fixations.size());
  MESSAGE("fixation target agreement: " << rate << " over " << fixations.size());
  CHECK(rate >= 0.98);
  // One fixation per scripted segment.
  CHECK(fixations.size() == s.schedule.size());
}

TEST_CASE("motion script gives one shift interval per turn and a full frame dump") {
  const SynthScript s = motion_script(3);
  const auto g = generate_session(s);
  std::size_t turns = 0;
  for (const auto& seg : s.schedule) turns += seg.kind == SegmentKind::turn;
  CHECK(g.truth.shift_intervals.size() == turns);
  CHECK(g.frames.size() == static_cast<std::size_t>(s.frame_count()));
  CHECK(g.frames[0].width() == 160);
}
