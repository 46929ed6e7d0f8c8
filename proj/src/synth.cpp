#include "gazeattn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "gazeattn/linalg.hpp"
#include "gazeattn/rng.hpp"
#include "json.hpp"

namespace gazeattn {

using nlohmann::json;

namespace {

// Independent generator per concern so that, e.g., enabling the frame dump
// does not perturb the detection stream.
enum Stream : std::uint64_t { kIdentities = 1, kDetections, kGaze, kFrames, kSchedule, kPlateaus, kBlur };

SplitMix64 stream(std::uint64_t seed, Stream id) { return SplitMix64(mix64(seed ^ (id * 0x9E3779B97F4A7C15ULL))); }

constexpr std::int64_t kRampUs = 30000;
constexpr int kTurnLeadFrames = 2;

const char* kind_name(SegmentKind k) {
  switch (k) {
    case SegmentKind::student: return "student";
    case SegmentKind::board: return "board";
    case SegmentKind::turn: return "turn";
  }
  return "student";
}

SegmentKind kind_from(const std::string& s) {
  if (s == "student") return SegmentKind::student;
  if (s == "board") return SegmentKind::board;
  if (s == "turn") return SegmentKind::turn;
  throw ConfigError("synth", "unknown segment kind '" + s + "'");
}

std::int64_t frame_ts(std::int64_t f, double fps) { return std::llround(static_cast<double>(f) * 1e6 / fps); }

}  // namespace

// -------------------------------------------------------------------- script

std::int64_t SynthScript::frame_count() const { return std::llround(duration_s * fps); }

void SynthScript::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("synth", what); };
  if (identities < 1) fail("identities must be >= 1");
  if (embedding_dim < 1) fail("embedding_dim must be >= 1");
  if (!(duration_s > 0.0)) fail("duration_s must be > 0");
  if (!(fps > 0.0)) fail("fps must be > 0");
  if (!(gaze_rate_hz > 0.0)) fail("gaze_rate_hz must be > 0");
  if (frame_width < 1 || frame_height < 1) fail("frame size must be positive");
  if (seats.size() != static_cast<std::size_t>(identities)) fail("need one seat box per identity");
  for (std::size_t i = 0; i < seats.size(); ++i)
    for (std::size_t j = i + 1; j < seats.size(); ++j) {
      const BBox &a = seats[i], &b = seats[j];
      if (a.x() < b.x() + b.w() && b.x() < a.x() + a.w() && a.y() < b.y() + b.h() && b.y() < a.y() + a.h())
        fail("seat boxes " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
    }
  if (schedule.empty()) fail("schedule is empty");
  std::int64_t total = 0;
  for (const auto& s : schedule) {
    if (s.duration_ms <= 0) fail("segment durations must be > 0");
    if (s.kind == SegmentKind::student && (s.target < 0 || s.target >= identities)) fail("segment target out of range");
    total += s.duration_ms;
  }
  if (total != std::llround(duration_s * 1000.0)) fail("schedule durations must sum to duration_s");
  for (const auto& b : blur_segments)
    if (b.start_frame < 0 || b.end_frame < b.start_frame || b.dropout < 0.0 || b.dropout > 1.0)
      fail("invalid blur segment");
  if (!genders.empty() && genders.size() != static_cast<std::size_t>(identities)) fail("need one gender per identity");
  for (double p : {gender_accuracy, target_visibility, other_visibility})
    if (!(p >= 0.0 && p <= 1.0)) fail("probabilities must lie in [0, 1]");
  if (!(embedding_angle_deg >= 0.0 && embedding_angle_deg < 90.0)) fail("embedding_angle_deg must lie in [0, 90)");
  if (!(bbox_jitter_px >= 0.0) || !(gaze_jitter_px >= 0.0)) fail("jitter must be >= 0");
  for (const auto& s : seats)
    if (s.w() <= 2.0 * bbox_jitter_px || s.h() <= 2.0 * bbox_jitter_px) fail("bbox jitter too large for seat size");
  if (transition_frames < 0) fail("transition_frames must be >= 0");
  if (emit_frames && (dump_width < 1 || dump_height < 1)) fail("dump size must be positive");
}

std::string write_script(const SynthScript& s) {
  json j;
  j["seed"] = s.seed;
  j["identities"] = s.identities;
  j["embedding_dim"] = s.embedding_dim;
  j["duration_s"] = s.duration_s;
  j["fps"] = s.fps;
  j["gaze_rate_hz"] = s.gaze_rate_hz;
  j["frame_width"] = s.frame_width;
  j["frame_height"] = s.frame_height;
  j["seats"] = json::array();
  for (const auto& b : s.seats) j["seats"].push_back({b.x(), b.y(), b.w(), b.h()});
  j["schedule"] = json::array();
  for (const auto& seg : s.schedule) {
    json o{{"kind", kind_name(seg.kind)}, {"duration_ms", seg.duration_ms}};
    if (seg.kind == SegmentKind::student) o["target"] = seg.target;
    if (seg.kind == SegmentKind::turn) o["pan"] = {seg.pan_dx, seg.pan_dy};
    j["schedule"].push_back(o);
  }
  j["noise"] = {{"embedding_angle_deg", s.embedding_angle_deg},
                {"bbox_jitter_px", s.bbox_jitter_px},
                {"gaze_jitter_px", s.gaze_jitter_px}};
  j["dropout"] = {{"blur_segments", json::array()}};
  for (const auto& b : s.blur_segments)
    j["dropout"]["blur_segments"].push_back(
        {{"start_frame", b.start_frame}, {"end_frame", b.end_frame}, {"dropout", b.dropout}});
  j["genders"] = json::array();
  for (Gender g : s.genders) j["genders"].push_back(to_string(g));
  j["gender_accuracy"] = s.gender_accuracy;
  j["visibility"] = {{"target", s.target_visibility},
                     {"other", s.other_visibility},
                     {"transition_frames", s.transition_frames}};
  j["frames"] = {{"emit", s.emit_frames}, {"width", s.dump_width}, {"height", s.dump_height}};
  return j.dump(2) + "\n";
}

SynthScript parse_script(const std::string& text) {
  SynthScript s;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError("synth", std::string("script.json: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("synth", "script.json: expected an object");
  static const std::vector<std::string> known = {
      "seed",   "identities", "embedding_dim", "duration_s",      "fps",        "gaze_rate_hz", "frame_width",
      "frame_height", "seats", "schedule",   "noise",           "dropout",    "genders",      "gender_accuracy",
      "visibility",   "frames"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ParseError("synth", "script.json: unknown key '" + key + "'");
  try {
    auto get = [&](const json& obj, const char* key, auto& out) {
      if (obj.contains(key)) obj.at(key).get_to(out);
    };
    get(j, "seed", s.seed);
    get(j, "identities", s.identities);
    get(j, "embedding_dim", s.embedding_dim);
    get(j, "duration_s", s.duration_s);
    get(j, "fps", s.fps);
    get(j, "gaze_rate_hz", s.gaze_rate_hz);
    get(j, "frame_width", s.frame_width);
    get(j, "frame_height", s.frame_height);
    if (!j.contains("seats") || !j.contains("schedule"))
      throw ParseError("synth", "script.json: seats and schedule are required");
    for (const auto& b : j.at("seats")) {
      if (b.size() != 4) throw ParseError("synth", "script.json: seat boxes need 4 numbers");
      s.seats.emplace_back(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>());
    }
    for (const auto& o : j.at("schedule")) {
      ScheduleSegment seg;
      seg.kind = kind_from(o.at("kind").get<std::string>());
      seg.duration_ms = o.at("duration_ms").get<std::int64_t>();
      if (seg.kind == SegmentKind::student) seg.target = o.at("target").get<int>();
      if (seg.kind == SegmentKind::turn) {
        seg.pan_dx = o.at("pan").at(0).get<int>();
        seg.pan_dy = o.at("pan").at(1).get<int>();
      }
      s.schedule.push_back(seg);
    }
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      get(n, "embedding_angle_deg", s.embedding_angle_deg);
      get(n, "bbox_jitter_px", s.bbox_jitter_px);
      get(n, "gaze_jitter_px", s.gaze_jitter_px);
    }
    if (j.contains("dropout") && j.at("dropout").contains("blur_segments"))
      for (const auto& b : j.at("dropout").at("blur_segments"))
        s.blur_segments.push_back(
            {b.at("start_frame").get<std::int64_t>(), b.at("end_frame").get<std::int64_t>(), b.at("dropout").get<double>()});
    if (j.contains("genders"))
      for (const auto& g : j.at("genders")) s.genders.push_back(gender_from_string(g.get<std::string>()));
    get(j, "gender_accuracy", s.gender_accuracy);
    if (j.contains("visibility")) {
      const auto& v = j.at("visibility");
      get(v, "target", s.target_visibility);
      get(v, "other", s.other_visibility);
      get(v, "transition_frames", s.transition_frames);
    }
    if (j.contains("frames")) {
      const auto& f = j.at("frames");
      get(f, "emit", s.emit_frames);
      get(f, "width", s.dump_width);
      get(f, "height", s.dump_height);
    }
  } catch (const json::exception& e) {
    throw ParseError("synth", std::string("script.json: ") + e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError("synth", std::string("script.json: ") + e.what());
  }
  s.validate();
  return s;
}

// ------------------------------------------------------------------ schedule

namespace {

// Classes are identities 0..K-1 and K for board/turn. A sequence without
// back-to-back repeats exists iff no class exceeds its slot limit.
bool arrangeable(const std::vector<std::int64_t>& counts, int prev) {
  const std::int64_t r = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const std::int64_t limit = static_cast<int>(c) == prev ? r / 2 : (r + 1) / 2;
    if (counts[c] > limit) return false;
  }
  return true;
}

std::vector<std::int64_t> largest_remainder(const std::vector<double>& weights, std::int64_t total) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::int64_t> out(weights.size(), 0);
  if (!(sum > 0.0)) throw ConfigError("synth", "shares must have a positive sum");
  std::vector<std::pair<double, std::size_t>> rem;
  std::int64_t used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw ConfigError("synth", "shares must be >= 0");
    const double exact = weights[i] / sum * static_cast<double>(total);
    out[i] = static_cast<std::int64_t>(std::floor(exact));
    used += out[i];
    rem.emplace_back(-(exact - std::floor(exact)), i);
  }
  std::sort(rem.begin(), rem.end());
  for (std::size_t k = 0; used < total; ++k, ++used) ++out[rem[k % rem.size()].second];
  return out;
}

}  // namespace

std::vector<ScheduleSegment> build_schedule(std::uint64_t seed, std::int64_t total_ms, std::int64_t quantum_ms,
                                            const ScheduleRequest& req) {
  if (quantum_ms <= 0 || total_ms <= 0 || total_ms % quantum_ms != 0)
    throw ConfigError("synth", "schedule length must be a positive multiple of the frame period");
  if (req.min_ms < quantum_ms || req.max_ms < req.min_ms || req.turn_min_ms < quantum_ms ||
      req.turn_max_ms < req.turn_min_ms)
    throw ConfigError("synth", "invalid segment duration bounds");
  const double f_turn = req.turn_fraction, f_board = req.board_fraction;
  if (f_turn < 0.0 || f_board < 0.0 || f_turn + f_board >= 1.0)
    throw ConfigError("synth", "board and turn fractions must leave room for students");

  SplitMix64 rng = stream(seed, kSchedule);
  const double mean_ms = (1.0 - f_turn) * 0.5 * static_cast<double>(req.min_ms + req.max_ms) +
                         f_turn * 0.5 * static_cast<double>(req.turn_min_ms + req.turn_max_ms);
  const auto n = std::max<std::int64_t>(1, static_cast<std::int64_t>(static_cast<double>(total_ms) / mean_ms));
  const auto n_turn = static_cast<std::int64_t>(std::llround(f_turn * static_cast<double>(n)));
  const auto n_board = static_cast<std::int64_t>(std::llround(f_board * static_cast<double>(n)));
  const std::int64_t n_student = n - n_turn - n_board;
  if (n_student < 1) throw ConfigError("synth", "schedule too short for any student segment");

  const int k = static_cast<int>(req.shares.size());
  std::vector<std::int64_t> counts = largest_remainder(req.shares, n_student);
  counts.push_back(n_turn + n_board);
  std::int64_t turns_left = n_turn, boards_left = n_board;
  if (!arrangeable(counts, -1)) throw ConfigError("synth", "shares force back-to-back repeats of one target");

  std::vector<ScheduleSegment> out;
  int prev = -1;
  for (std::int64_t step = 0; step < n; ++step) {
    std::vector<int> cand;
    for (int c = 0; c <= k; ++c)
      if (c != prev && counts[static_cast<std::size_t>(c)] > 0) cand.push_back(c);
    int chosen = -1;
    while (!cand.empty()) {
      std::int64_t weight = 0;
      for (int c : cand) weight += counts[static_cast<std::size_t>(c)];
      auto pick = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(weight)));
      std::size_t idx = 0;
      while (pick >= counts[static_cast<std::size_t>(cand[idx])]) pick -= counts[static_cast<std::size_t>(cand[idx++])];
      const int c = cand[idx];
      --counts[static_cast<std::size_t>(c)];
      if (arrangeable(counts, c)) {
        chosen = c;
        break;
      }
      ++counts[static_cast<std::size_t>(c)];
      cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(idx));
    }
    if (chosen < 0) throw ConfigError("synth", "cannot order schedule without back-to-back repeats");
    ScheduleSegment seg;
    if (chosen < k) {
      seg.target = chosen;
    } else {
      const bool turn = rng.below(static_cast<std::uint64_t>(turns_left + boards_left)) <
                        static_cast<std::uint64_t>(turns_left);
      seg.kind = turn ? SegmentKind::turn : SegmentKind::board;
      (turn ? turns_left : boards_left)--;
    }
    out.push_back(seg);
    prev = chosen;
  }

  auto bounds = [&](const ScheduleSegment& s) {
    return s.kind == SegmentKind::turn ? std::pair{req.turn_min_ms, req.turn_max_ms} : std::pair{req.min_ms, req.max_ms};
  };
  std::int64_t sum = 0;
  for (auto& s : out) {
    const auto [lo, hi] = bounds(s);
    const std::int64_t steps = (hi - lo) / quantum_ms;
    s.duration_ms = lo + quantum_ms * static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(steps + 1)));
    sum += s.duration_ms;
    if (s.kind == SegmentKind::turn) {
      do {
        s.pan_dx = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * req.max_pan + 1))) - req.max_pan;
        s.pan_dy = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * req.max_pan + 1))) - req.max_pan;
      } while (std::hypot(s.pan_dx, s.pan_dy) < req.min_pan);
    }
  }
  // Nudge durations one quantum at a time, round robin, until the total fits.
  while (sum != total_ms) {
    bool moved = false;
    for (auto& s : out) {
      if (sum == total_ms) break;
      const auto [lo, hi] = bounds(s);
      if (sum < total_ms && s.duration_ms + quantum_ms <= hi) {
        s.duration_ms += quantum_ms;
        sum += quantum_ms;
        moved = true;
      } else if (sum > total_ms && s.duration_ms - quantum_ms >= lo) {
        s.duration_ms -= quantum_ms;
        sum -= quantum_ms;
        moved = true;
      }
    }
    if (!moved) throw ConfigError("synth", "segment durations cannot fill the session length");
  }
  return out;
}

namespace {

std::vector<BBox> default_seats() {
  std::vector<BBox> seats;
  for (int k = 0; k < 4; ++k) seats.emplace_back(160.0 + 280.0 * k, 300.0, 90.0, 110.0);
  return seats;
}

std::int64_t quantum_ms(double fps) {
  const double q = 1000.0 / fps;
  return std::abs(q - std::round(q)) < 1e-9 ? std::llround(q) : 1;
}

}  // namespace

SynthScript default_script(std::uint64_t seed) {
  SynthScript s;
  s.seed = seed;
  s.seats = default_seats();
  ScheduleRequest req;
  req.shares = {0.4, 0.3, 0.2, 0.1};
  req.board_fraction = 0.4;
  s.schedule = build_schedule(seed, std::llround(s.duration_s * 1000.0), quantum_ms(s.fps), req);
  SplitMix64 rng = stream(seed, kBlur);
  const std::int64_t frames = s.frame_count();
  for (int i = 0; i < 4; ++i) {
    const auto start = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(frames - 25)));
    s.blur_segments.push_back({start, start + 24, 0.5});
  }
  s.genders = {Gender::male, Gender::male, Gender::female, Gender::female};
  return s;
}

SynthScript share_script(std::uint64_t seed, std::vector<double> shares, double duration_s) {
  SynthScript s;
  s.seed = seed;
  s.duration_s = duration_s;
  s.identities = static_cast<int>(shares.size());
  for (int k = 0; k < s.identities; ++k) s.seats.emplace_back(160.0 + 280.0 * (k % 4), 300.0 + 300.0 * (k / 4), 90.0, 110.0);
  ScheduleRequest req;
  req.shares = std::move(shares);
  s.schedule = build_schedule(seed, std::llround(s.duration_s * 1000.0), quantum_ms(s.fps), req);
  s.genders.assign(static_cast<std::size_t>(s.identities), Gender::unknown);
  return s;
}

SynthScript motion_script(std::uint64_t seed) {
  SynthScript s;
  s.seed = seed;
  s.duration_s = 30.0;
  s.seats = default_seats();
  ScheduleRequest req;
  req.shares = {0.25, 0.25, 0.25, 0.25};
  req.turn_fraction = 0.3;
  req.max_pan = 8;
  s.schedule = build_schedule(seed, std::llround(s.duration_s * 1000.0), quantum_ms(s.fps), req);
  s.genders = {Gender::male, Gender::female, Gender::male, Gender::female};
  s.emit_frames = true;
  return s;
}

// ---------------------------------------------------------------- generation

std::vector<std::vector<double>> identity_vectors(std::uint64_t seed, int k, int d) {
  if (k < 1 || d < 1) throw InvariantError("synth", "identity count and dimension must be >= 1");
  if (k > 1 && d < 2)
    throw InvariantError("synth", "cannot separate " + std::to_string(k) + " identities by 60 degrees in D=1");
  SplitMix64 rng = stream(seed, kIdentities);
  constexpr int kMaxTries = 100000;
  const double cos_min = 0.5;  // cos 60 deg
  std::vector<std::vector<double>> out;
  for (int i = 0; i < k; ++i) {
    bool placed = false;
    for (int t = 0; t < kMaxTries && !placed; ++t) {
      std::vector<double> v(static_cast<std::size_t>(d));
      for (double& x : v) x = rng.normal();
      if (!normalize_in_place(v)) continue;
      placed = std::all_of(out.begin(), out.end(), [&](const auto& u) { return dot(u, v) <= cos_min; });
      if (placed) out.push_back(std::move(v));
    }
    if (!placed)
      throw InvariantError("synth", "cannot separate " + std::to_string(k) + " identities by 60 degrees in D=" +
                                        std::to_string(d));
  }
  return out;
}

int oracle_identity(std::span<const double> embedding, const std::vector<std::vector<double>>& identities) {
  int best = -1;
  double best_dot = 0.0;
  for (std::size_t l = 0; l < identities.size(); ++l) {
    const double s = dot(identities[l], embedding);
    if (best < 0 || s > best_dot) {
      best = static_cast<int>(l);
      best_dot = s;
    }
  }
  return best;
}

namespace {

// Rotates v by angle phi toward a random direction orthogonal to it.
std::vector<double> perturb(const std::vector<double>& v, double max_angle_rad, SplitMix64& rng) {
  const double phi = max_angle_rad * rng.uniform();
  std::vector<double> u(v.size());
  double n = 0.0;
  do {
    for (double& x : u) x = rng.normal();
    const double p = dot(u, v);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] -= p * v[i];
    n = norm(u);
  } while (!(n > 1e-9) && v.size() > 1);
  std::vector<double> e(v.size());
  const double c = std::cos(phi), s = v.size() > 1 ? std::sin(phi) / n : 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) e[i] = c * v[i] + s * u[i];
  return e;
}

struct Point {
  double x = 0.0, y = 0.0;
};

std::uint8_t texture(std::uint64_t seed, std::int64_t u, std::int64_t v) {
  return static_cast<std::uint8_t>(
      mix64(seed ^ (static_cast<std::uint64_t>(u) * 0x9E3779B97F4A7C15ULL) ^
            (static_cast<std::uint64_t>(v) * 0xC2B2AE3D27D4EB4FULL)) >>
      56);
}

}  // namespace

GeneratedSession generate_session(const SynthScript& script) {
  script.validate();
  const int k = script.identities;
  const std::int64_t frames = script.frame_count();
  const std::size_t nseg = script.schedule.size();

  GeneratedSession out;
  out.header = {script.embedding_dim, frames, script.frame_width, script.frame_height};
  out.truth.identity_vectors = identity_vectors(script.seed, k, script.embedding_dim);
  out.truth.genders = script.genders.empty() ? std::vector<Gender>(static_cast<std::size_t>(k), Gender::unknown)
                                             : script.genders;

  std::vector<std::int64_t> seg_start(nseg + 1, 0);
  for (std::size_t s = 0; s < nseg; ++s) seg_start[s + 1] = seg_start[s] + script.schedule[s].duration_ms * 1000;
  auto segment_at = [&](std::int64_t t) {
    const auto it = std::upper_bound(seg_start.begin() + 1, seg_start.end() - 1, t);
    return static_cast<std::size_t>(it - (seg_start.begin() + 1));
  };
  for (std::size_t s = 0; s < nseg; ++s)
    out.truth.segments.push_back({seg_start[s], seg_start[s + 1], script.schedule[s].kind, script.schedule[s].target});

  std::vector<std::int64_t> student_counts(static_cast<std::size_t>(k), 0);
  for (const auto& seg : script.schedule)
    if (seg.kind == SegmentKind::student) ++student_counts[static_cast<std::size_t>(seg.target)];
  const std::int64_t students = std::accumulate(student_counts.begin(), student_counts.end(), std::int64_t{0});
  for (std::int64_t c : student_counts)
    out.truth.scripted_shares.push_back(students ? static_cast<double>(c) / static_cast<double>(students) : 0.0);

  // Nominal gaze point per segment.
  std::vector<Point> plateau(nseg);
  {
    SplitMix64 rng = stream(script.seed, kPlateaus);
    const double w = script.frame_width, h = script.frame_height;
    for (std::size_t s = 0; s < nseg; ++s) {
      const auto& seg = script.schedule[s];
      if (seg.kind == SegmentKind::student) {
        const BBox& b = script.seats[static_cast<std::size_t>(seg.target)];
        plateau[s] = {b.center_x(), b.center_y()};
      } else {
        plateau[s] = {rng.uniform(0.1 * w, 0.9 * w), rng.uniform(0.04 * h, 0.1 * h)};
      }
    }
  }

  // Frame -> segment and position inside it.
  std::vector<std::size_t> frame_seg(static_cast<std::size_t>(frames));
  std::vector<std::int64_t> frame_idx(static_cast<std::size_t>(frames));
  std::vector<std::int64_t> seg_first(nseg, -1), seg_last(nseg, -1);
  for (std::int64_t f = 0; f < frames; ++f) {
    const std::size_t s = segment_at(frame_ts(f, script.fps));
    frame_seg[static_cast<std::size_t>(f)] = s;
    if (seg_first[s] < 0) seg_first[s] = f;
    seg_last[s] = f;
    frame_idx[static_cast<std::size_t>(f)] = f - seg_first[s];
  }

  // Detections.
  {
    SplitMix64 rng = stream(script.seed, kDetections);
    const double max_angle = script.embedding_angle_deg * std::numbers::pi / 180.0;
    const double j = script.bbox_jitter_px;
    std::vector<Detection> dets;
    std::vector<int> ids;
    for (std::int64_t f = 0; f < frames; ++f) {
      const auto& seg = script.schedule[frame_seg[static_cast<std::size_t>(f)]];
      double dropout = 0.0;
      for (const auto& b : script.blur_segments)
        if (f >= b.start_frame && f <= b.end_frame) dropout = std::max(dropout, b.dropout);
      for (int id = 0; id < k; ++id) {
        const bool looked_at = seg.kind == SegmentKind::student && seg.target == id &&
                               frame_idx[static_cast<std::size_t>(f)] >= script.transition_frames;
        if (!rng.bernoulli(looked_at ? script.target_visibility : script.other_visibility)) continue;
        if (dropout > 0.0 && rng.bernoulli(dropout)) continue;
        const BBox& seat = script.seats[static_cast<std::size_t>(id)];
        const double dx = rng.uniform(-j, j), dy = rng.uniform(-j, j), dw = rng.uniform(-j, j), dh = rng.uniform(-j, j);
        BBox box(seat.x() + dx, seat.y() + dy, seat.w() + dw, seat.h() + dh);
        std::vector<double> e = perturb(out.truth.identity_vectors[static_cast<std::size_t>(id)], max_angle, rng);
        std::optional<GenderScores> g;
        const Gender truth_gender = out.truth.genders[static_cast<std::size_t>(id)];
        if (truth_gender != Gender::unknown) {
          const bool correct = rng.bernoulli(script.gender_accuracy);
          const double c = rng.uniform(0.55, 1.0);
          const bool male_high = (truth_gender == Gender::male) == correct;
          g = GenderScores{male_high ? c : 1.0 - c, male_high ? 1.0 - c : c};
        }
        dets.emplace_back(f, frame_ts(f, script.fps), box, std::move(e), g);
        ids.push_back(id);
      }
    }
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return detection_less(dets[a], dets[b]); });
    for (std::size_t i : order) {
      out.detections.push_back(dets[i]);
      out.truth.detection_identity.push_back(ids[i]);
    }
  }

  // Gaze.
  {
    SplitMix64 rng = stream(script.seed, kGaze);
    const auto samples = std::llround(script.duration_s * script.gaze_rate_hz);
    const double j = script.gaze_jitter_px;
    for (std::int64_t i = 0; i < samples; ++i) {
      const std::int64_t t = std::llround(static_cast<double>(i) * 1e6 / script.gaze_rate_hz);
      const std::size_t s = segment_at(t);
      Point p = plateau[s];
      const std::int64_t into = t - seg_start[s];
      if (s > 0 && into < kRampUs) {
        const double a = static_cast<double>(into) / static_cast<double>(kRampUs);
        p = {plateau[s - 1].x + (p.x - plateau[s - 1].x) * a, plateau[s - 1].y + (p.y - plateau[s - 1].y) * a};
      }
      const double x = p.x + rng.uniform(-j, j);
      const double y = p.y + rng.uniform(-j, j);
      out.gaze.push_back({t, x, y, true});
    }
  }

  // Head turns: the camera pans on the inner frames of each turn segment.
  for (std::size_t s = 0; s < nseg; ++s) {
    if (script.schedule[s].kind != SegmentKind::turn || seg_first[s] < 0) continue;
    const std::int64_t a = seg_first[s] + kTurnLeadFrames;
    const std::int64_t b = std::min(seg_last[s] - kTurnLeadFrames, frames - 2);
    if (a <= b) out.truth.shift_intervals.emplace_back(a, b);
  }

  if (script.emit_frames) {
    SplitMix64 rng = stream(script.seed, kFrames);
    const std::uint64_t tex = rng.next();
    std::int64_t ox = 0, oy = 0;
    for (std::int64_t f = 0; f < frames; ++f) {
      GrayImage img(script.dump_width, script.dump_height);
      for (int y = 0; y < script.dump_height; ++y)
        for (int x = 0; x < script.dump_width; ++x) img.at(x, y) = texture(tex, x + ox, y + oy);
      out.frames.push_back(std::move(img));
      const bool panning = std::any_of(out.truth.shift_intervals.begin(), out.truth.shift_intervals.end(),
                                       [&](const auto& iv) { return f >= iv.first && f <= iv.second; });
      if (panning) {
        const auto& seg = script.schedule[frame_seg[static_cast<std::size_t>(f)]];
        ox += seg.pan_dx;
        oy += seg.pan_dy;
      } else if (rng.bernoulli(0.2)) {
        ox += static_cast<std::int64_t>(rng.below(3)) - 1;
        oy += static_cast<std::int64_t>(rng.below(3)) - 1;
      }
    }
  }
  return out;
}

// -------------------------------------------------------------- ground truth

std::string write_ground_truth(const GroundTruth& t) {
  json j;
  j["detection_identity"] = t.detection_identity;
  j["identity_vectors"] = t.identity_vectors;
  j["segments"] = json::array();
  for (const auto& s : t.segments) {
    json o{{"start_us", s.start_us}, {"end_us", s.end_us}, {"kind", kind_name(s.kind)}};
    o["target"] = s.kind == SegmentKind::student ? json(s.target) : json(nullptr);
    j["segments"].push_back(o);
  }
  j["shift_intervals"] = json::array();
  for (const auto& [a, b] : t.shift_intervals) j["shift_intervals"].push_back({a, b});
  j["scripted_shares"] = t.scripted_shares;
  j["genders"] = json::array();
  for (Gender g : t.genders) j["genders"].push_back(to_string(g));
  return j.dump() + "\n";
}

GroundTruth parse_ground_truth(const std::string& text) {
  GroundTruth t;
  try {
    const json j = json::parse(text);
    j.at("detection_identity").get_to(t.detection_identity);
    j.at("identity_vectors").get_to(t.identity_vectors);
    for (const auto& o : j.at("segments")) {
      TruthSegment s{o.at("start_us").get<std::int64_t>(), o.at("end_us").get<std::int64_t>(),
                     kind_from(o.at("kind").get<std::string>()), -1};
      if (!o.at("target").is_null()) s.target = o.at("target").get<int>();
      t.segments.push_back(s);
    }
    for (const auto& iv : j.at("shift_intervals")) t.shift_intervals.emplace_back(iv.at(0).get<std::int64_t>(), iv.at(1).get<std::int64_t>());
    j.at("scripted_shares").get_to(t.scripted_shares);
    for (const auto& g : j.at("genders")) t.genders.push_back(gender_from_string(g.get<std::string>()));
  } catch (const json::exception& e) {
    throw ParseError("evaluate", std::string("ground_truth.json: ") + e.what());
  } catch (const Error& e) {
    throw ParseError("evaluate", std::string("ground_truth.json: ") + e.what());
  }
  return t;
}

std::map<std::string, std::string> bundle_files(const SynthScript& script, const GeneratedSession& session) {
  std::map<std::string, std::string> files;
  files["detections.jsonl"] = write_detections(session.header, session.detections);
  files["gaze.csv"] = write_gaze(session.gaze);
  files["ground_truth.json"] = write_ground_truth(session.truth);
  files["script.json"] = write_script(script);
  for (std::size_t i = 0; i < session.frames.size(); ++i)
    files["frames/" + frame_filename(static_cast<std::int64_t>(i))] = write_pgm(session.frames[i]);
  return files;
}

void write_bundle(const std::filesystem::path& dir, const SynthScript& script, const GeneratedSession& session) {
  std::filesystem::create_directories(dir);
  if (!session.frames.empty()) std::filesystem::create_directories(dir / "frames");
  for (const auto& [name, bytes] : bundle_files(script, session)) write_file(dir / name, bytes);
}

}  // namespace gazeattn
