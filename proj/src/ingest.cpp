#include "gazeattn/ingest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "gazeattn/config.hpp"
#include "json.hpp"

namespace gazeattn {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& file, std::size_t line, const std::string& what) {
  throw ParseError("ingest", file + ":" + std::to_string(line) + ": " + what);
}

double finite_number(const json& v, const std::string& file, std::size_t line, const char* field) {
  if (!v.is_number()) parse_fail(file, line, std::string(field) + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) parse_fail(file, line, std::string(field) + " must be finite");
  return d;
}

std::int64_t integer(const json& v, const std::string& file, std::size_t line, const char* field) {
  if (!v.is_number_integer()) parse_fail(file, line, std::string(field) + " must be an integer");
  return v.get<std::int64_t>();
}

const json& member(const json& obj, const char* key, const std::string& file, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) parse_fail(file, line, std::string("missing field '") + key + "'");
  return *it;
}

void append_reals(std::string& out, std::span<const double> values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_real(values[i]);
  }
  out += ']';
}

std::string json_string(std::string_view s) { return json(std::string(s)).dump(); }

std::string optional_real(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

}  // namespace

// ---------------------------------------------------------------- detections

DetectionFile parse_detections(std::istream& in) {
  static const std::string file = "detections.jsonl";
  DetectionFile out;
  std::string text;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++lineno;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json row;
    try {
      row = json::parse(text);
    } catch (const json::exception& e) {
      parse_fail(file, lineno, std::string("malformed line: ") + e.what());
    }
    if (!row.is_object()) parse_fail(file, lineno, "expected a JSON object");
    if (!have_header) {
      out.header.embedding_dim = static_cast<int>(integer(member(row, "embedding_dim", file, lineno), file, lineno, "embedding_dim"));
      out.header.frame_count = integer(member(row, "frame_count", file, lineno), file, lineno, "frame_count");
      out.header.width = static_cast<int>(integer(member(row, "width", file, lineno), file, lineno, "width"));
      out.header.height = static_cast<int>(integer(member(row, "height", file, lineno), file, lineno, "height"));
      if (out.header.embedding_dim < 1 || out.header.frame_count < 0 || out.header.width < 1 || out.header.height < 1)
        parse_fail(file, lineno, "header values out of range");
      have_header = true;
      continue;
    }
    const std::int64_t frame = integer(member(row, "frame", file, lineno), file, lineno, "frame");
    const std::int64_t ts = integer(member(row, "ts_us", file, lineno), file, lineno, "ts_us");
    if (frame < 0 || frame >= out.header.frame_count)
      parse_fail(file, lineno, "frame " + std::to_string(frame) + " outside [0, frame_count)");
    const json& bb = member(row, "bbox", file, lineno);
    if (!bb.is_array() || bb.size() != 4) parse_fail(file, lineno, "bbox must be [x,y,w,h]");
    const json& emb = member(row, "embedding", file, lineno);
    if (!emb.is_array()) parse_fail(file, lineno, "embedding must be an array");
    if (emb.size() != static_cast<std::size_t>(out.header.embedding_dim))
      parse_fail(file, lineno,
                 "embedding dimension mismatch: expected D=" + std::to_string(out.header.embedding_dim) +
                     ", got " + std::to_string(emb.size()));
    std::vector<double> e;
    e.reserve(emb.size());
    for (const auto& v : emb) e.push_back(finite_number(v, file, lineno, "embedding"));
    std::optional<GenderScores> gender;
    if (const auto g = row.find("gender"); g != row.end() && !g->is_null()) {
      if (!g->is_array() || g->size() != 2) parse_fail(file, lineno, "gender must be [male, female]");
      gender = GenderScores{finite_number((*g)[0], file, lineno, "gender"), finite_number((*g)[1], file, lineno, "gender")};
    }
    try {
      BBox box(finite_number(bb[0], file, lineno, "bbox"), finite_number(bb[1], file, lineno, "bbox"),
               finite_number(bb[2], file, lineno, "bbox"), finite_number(bb[3], file, lineno, "bbox"));
      out.detections.emplace_back(frame, ts, box, std::move(e), gender);
    } catch (const InvariantError& err) {
      parse_fail(file, lineno, err.what());
    }
  }
  if (!have_header) parse_fail(file, lineno, "missing header record");
  sort_detections(out.detections);
  for (std::size_t i = 1; i < out.detections.size(); ++i)
    if (out.detections[i].ts_us() < out.detections[i - 1].ts_us())
      throw ParseError("ingest", file + ": ts_us decreases at frame " + std::to_string(out.detections[i].frame()));
  return out;
}

std::string write_detections(const DetectionsHeader& header, std::span<const Detection> dets) {
  std::string out = "{\"embedding_dim\":" + std::to_string(header.embedding_dim) +
                    ",\"frame_count\":" + std::to_string(header.frame_count) +
                    ",\"width\":" + std::to_string(header.width) + ",\"height\":" + std::to_string(header.height) + "}\n";
  for (const auto& d : dets) {
    out += "{\"frame\":" + std::to_string(d.frame()) + ",\"ts_us\":" + std::to_string(d.ts_us()) + ",\"bbox\":";
    const double bb[4] = {d.bbox().x(), d.bbox().y(), d.bbox().w(), d.bbox().h()};
    append_reals(out, bb);
    out += ",\"embedding\":";
    append_reals(out, d.embedding());
    if (d.gender()) {
      const double g[2] = {d.gender()->male, d.gender()->female};
      out += ",\"gender\":";
      append_reals(out, g);
    }
    out += "}\n";
  }
  return out;
}

// ---------------------------------------------------------------------- gaze

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = strip(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && !s.empty();
}

}  // namespace

GazeFile parse_gaze(std::istream& in, int width, int height) {
  static const std::string file = "gaze.csv";
  GazeFile out;
  std::string text;
  std::size_t lineno = 0;
  std::vector<std::size_t> lines;
  bool seen_row = false;
  while (std::getline(in, text)) {
    ++lineno;
    if (strip(text).empty()) continue;
    const auto f = split(text, ',');
    std::int64_t ts = 0;
    const bool first = !seen_row;
    seen_row = true;
    if (first && !parse_number(f[0], ts)) continue;  // header row
    if (f.size() != 4) parse_fail(file, lineno, "expected 4 fields ts_us,x,y,valid");
    GazeSample s;
    int valid = 0;
    if (!parse_number(f[0], s.ts_us)) parse_fail(file, lineno, "ts_us must be an integer");
    if (!parse_number(f[1], s.x) || !parse_number(f[2], s.y)) parse_fail(file, lineno, "x,y must be numbers");
    if (!parse_number(f[3], valid) || (valid != 0 && valid != 1)) parse_fail(file, lineno, "valid must be 0 or 1");
    s.valid = valid == 1;
    if (s.valid) {
      const bool in_range = std::isfinite(s.x) && std::isfinite(s.y) && std::abs(s.x - 0.5 * width) <= width &&
                            std::abs(s.y - 0.5 * height) <= height;
      if (!in_range) {
        s.valid = false;
        ++out.out_of_range;
      }
    }
    out.samples.push_back(s);
    lines.push_back(lineno);
  }
  std::vector<std::size_t> order(out.samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out.samples[a].ts_us < out.samples[b].ts_us; });
  std::vector<GazeSample> sorted;
  sorted.reserve(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && out.samples[order[k]].ts_us == out.samples[order[k - 1]].ts_us)
      parse_fail(file, lines[order[k]], "duplicate timestamp " + std::to_string(out.samples[order[k]].ts_us));
    sorted.push_back(out.samples[order[k]]);
  }
  out.samples = std::move(sorted);
  return out;
}

std::string write_gaze(std::span<const GazeSample> gaze) {
  std::string out = "ts_us,x,y,valid\n";
  for (const auto& s : gaze)
    out += std::to_string(s.ts_us) + ',' + format_real(s.x) + ',' + format_real(s.y) + ',' + (s.valid ? "1" : "0") + '\n';
  return out;
}

// -------------------------------------------------------------------- report

namespace {

std::string timeline_target_json(const TimelineRow& r) {
  switch (r.fixation) {
    case FixationState::assigned:
      return std::to_string(r.label);
    case FixationState::unassigned:
      return "\"unassigned\"";
    case FixationState::none:
      break;
  }
  return "null";
}

std::string report_json(const AttentionReport& r) {
  std::string o = "{\n  \"config\": {";
  for (std::size_t i = 0; i < r.config.size(); ++i)
    o += (i ? ", " : "") + json_string(r.config[i].first) + ": " + json_string(r.config[i].second);
  o += "},\n  \"genders\": [";
  for (std::size_t i = 0; i < r.genders.size(); ++i) {
    const auto& g = r.genders[i];
    o += std::string(i ? ",\n" : "\n") + "    {\"fixation_count\": " + std::to_string(g.fixation_count) +
         ", \"gender\": " + json_string(to_string(g.gender));
    if (g.share) o += ", \"share\": " + format_real(*g.share);
    o += "}";
  }
  o += "\n  ],\n  \"identities\": [";
  for (std::size_t i = 0; i < r.identities.size(); ++i) {
    const auto& d = r.identities[i];
    o += std::string(i ? ",\n" : "\n") + "    {";
    if (d.duration_share) o += "\"duration_share\": " + format_real(*d.duration_share) + ", ";
    o += "\"female_votes\": " + std::to_string(d.female_votes) +
         ", \"fixation_count\": " + std::to_string(d.fixation_count) +
         ", \"fixation_duration_us\": " + std::to_string(d.fixation_duration_us);
    if (d.fixation_share) o += ", \"fixation_share\": " + format_real(*d.fixation_share);
    o += ", \"frames_visible\": " + std::to_string(d.frames_visible) + ", \"gender\": " + json_string(to_string(d.gender)) +
         ", \"label\": " + std::to_string(d.label) + ", \"male_votes\": " + std::to_string(d.male_votes) + "}";
  }
  o += "\n  ],\n  \"inputs\": {";
  for (std::size_t i = 0; i < r.inputs.size(); ++i)
    o += (i ? ", " : "") + json_string(r.inputs[i].first) + ": " + json_string(r.inputs[i].second);
  o += "},\n  \"timeline\": [";
  for (std::size_t i = 0; i < r.timeline.size(); ++i) {
    const auto& row = r.timeline[i];
    o += std::string(i ? ",\n" : "\n") + "    [" + std::to_string(row.frame) + ", [";
    for (std::size_t k = 0; k < row.visible.size(); ++k) o += (k ? "," : "") + std::to_string(row.visible[k]);
    o += "], " + timeline_target_json(row) + "]";
  }
  o += "\n  ],\n  \"total_fixations\": " + std::to_string(r.total_fixations) +
       ",\n  \"unassigned_count\": " + std::to_string(r.unassigned_count) +
       ",\n  \"unassigned_duration_us\": " + std::to_string(r.unassigned_duration_us);
  if (r.unassigned_share) o += ",\n  \"unassigned_share\": " + format_real(*r.unassigned_share);
  o += "\n}\n";
  return o;
}

std::string report_csv(const AttentionReport& r) {
  std::string o;
  for (const auto& [k, v] : r.config) o += "# config " + k + "=" + v + "\n";
  for (const auto& [k, v] : r.inputs) o += "# input " + k + "=" + v + "\n";
  o += "label,gender,frames_visible,fixation_count,fixation_duration_us,fixation_share,duration_share\n";
  for (const auto& d : r.identities)
    o += std::to_string(d.label) + ',' + to_string(d.gender) + ',' + std::to_string(d.frames_visible) + ',' +
         std::to_string(d.fixation_count) + ',' + std::to_string(d.fixation_duration_us) + ',' +
         optional_real(d.fixation_share) + ',' + optional_real(d.duration_share) + '\n';
  o += "unassigned,,," + std::to_string(r.unassigned_count) + ',' + std::to_string(r.unassigned_duration_us) + ',' +
       optional_real(r.unassigned_share) + ",\n";
  return o;
}

// Fixed palette indexed by label; unassigned fixations are grey.
const char* label_color(int label) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#bcbd22", "#17becf", "#7f7f7f"};
  return palette[static_cast<std::size_t>(label) % 10];
}

std::string report_svg(const AttentionReport& r) {
  constexpr double kLeft = 110.0, kWidth = 1000.0, kRow = 22.0, kTop = 30.0;
  const std::size_t rows = r.identities.size() + 1;
  const double n = std::max<double>(1.0, static_cast<double>(r.timeline.size()));
  const double height = kTop + kRow * static_cast<double>(rows) + 20.0;
  std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_real(kLeft + kWidth + 20.0) +
                  "\" height=\"" + format_real(height) + "\">\n";
  o += "<text x=\"10\" y=\"18\" font-family=\"monospace\" font-size=\"12\">visibility per identity; last row: fixation target</text>\n";
  auto rect = [&](std::size_t row, std::size_t first, std::size_t last, const char* color) {
    o += "<rect x=\"" + format_real(kLeft + kWidth * static_cast<double>(first) / n) + "\" y=\"" +
         format_real(kTop + kRow * static_cast<double>(row) + 3.0) + "\" width=\"" +
         format_real(kWidth * static_cast<double>(last - first + 1) / n) + "\" height=\"" + format_real(kRow - 6.0) +
         "\" fill=\"" + color + "\"/>\n";
  };
  for (std::size_t k = 0; k < r.identities.size(); ++k) {
    const int label = r.identities[k].label;
    o += "<text x=\"10\" y=\"" + format_real(kTop + kRow * static_cast<double>(k) + 15.0) +
         "\" font-family=\"monospace\" font-size=\"11\">id " + std::to_string(label) + " (" +
         to_string(r.identities[k].gender) + ")</text>\n";
    std::size_t i = 0;
    while (i < r.timeline.size()) {
      const auto& v = r.timeline[i].visible;
      if (std::find(v.begin(), v.end(), label) == v.end()) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j + 1 < r.timeline.size()) {
        const auto& w = r.timeline[j + 1].visible;
        if (std::find(w.begin(), w.end(), label) == w.end()) break;
        ++j;
      }
      rect(k, i, j, label_color(label));
      i = j + 1;
    }
  }
  const std::size_t frow = r.identities.size();
  o += "<text x=\"10\" y=\"" + format_real(kTop + kRow * static_cast<double>(frow) + 15.0) +
       "\" font-family=\"monospace\" font-size=\"11\">fixations</text>\n";
  std::size_t i = 0;
  while (i < r.timeline.size()) {
    const auto& row = r.timeline[i];
    if (row.fixation == FixationState::none) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < r.timeline.size() && r.timeline[j + 1].fixation == row.fixation &&
           r.timeline[j + 1].label == row.label)
      ++j;
    rect(frow, i, j, row.fixation == FixationState::assigned ? label_color(row.label) : "#c7c7c7");
    i = j + 1;
  }
  o += "</svg>\n";
  return o;
}

}  // namespace

std::string write_report(const AttentionReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::json:
      return report_json(report);
    case ReportFormat::csv:
      return report_csv(report);
    case ReportFormat::svg_timeline:
      return report_svg(report);
  }
  return {};
}

AttentionReport parse_report(std::istream& in) {
  static const std::string file = "report.json";
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("ingest", file + ": " + e.what());
  }
  AttentionReport r;
  try {
    for (const auto& [k, v] : j.at("config").items()) r.config.emplace_back(k, v.get<std::string>());
    for (const auto& [k, v] : j.at("inputs").items()) r.inputs.emplace_back(k, v.get<std::string>());
    for (const auto& g : j.at("genders")) {
      GenderRecord rec;
      rec.gender = gender_from_string(g.at("gender").get<std::string>());
      rec.fixation_count = g.at("fixation_count").get<std::size_t>();
      r.genders.push_back(rec);
    }
    for (const auto& d : j.at("identities")) {
      IdentityRecord rec;
      rec.label = d.at("label").get<int>();
      rec.gender = gender_from_string(d.at("gender").get<std::string>());
      rec.male_votes = d.at("male_votes").get<std::size_t>();
      rec.female_votes = d.at("female_votes").get<std::size_t>();
      rec.frames_visible = d.at("frames_visible").get<std::size_t>();
      rec.fixation_count = d.at("fixation_count").get<std::size_t>();
      rec.fixation_duration_us = d.at("fixation_duration_us").get<std::int64_t>();
      r.identities.push_back(rec);
    }
    for (const auto& row : j.at("timeline")) {
      TimelineRow t;
      t.frame = row.at(0).get<std::int64_t>();
      t.visible = row.at(1).get<std::vector<int>>();
      const auto& target = row.at(2);
      if (target.is_null()) {
        t.fixation = FixationState::none;
      } else if (target.is_string() && target.get<std::string>() == "unassigned") {
        t.fixation = FixationState::unassigned;
      } else {
        t.fixation = FixationState::assigned;
        t.label = target.get<int>();
      }
      r.timeline.push_back(std::move(t));
    }
    r.total_fixations = j.at("total_fixations").get<std::size_t>();
    r.unassigned_count = j.at("unassigned_count").get<std::size_t>();
    r.unassigned_duration_us = j.at("unassigned_duration_us").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw ParseError("ingest", file + ": " + e.what());
  }
  r.fill_shares();

  auto check = [&](const json& obj, const char* key, const std::optional<double>& derived) {
    const auto it = obj.find(key);
    if ((it != obj.end()) != derived.has_value())
      throw ParseError("ingest", file + ": presence of '" + key + "' disagrees with counts");
    if (derived && std::abs(it->get<double>() - *derived) > 1e-6)
      throw ParseError("ingest", file + ": '" + key + "' disagrees with counts");
  };
  for (std::size_t i = 0; i < r.identities.size(); ++i) {
    check(j["identities"][i], "fixation_share", r.identities[i].fixation_share);
    check(j["identities"][i], "duration_share", r.identities[i].duration_share);
  }
  for (std::size_t i = 0; i < r.genders.size(); ++i) check(j["genders"][i], "share", r.genders[i].share);
  check(j, "unassigned_share", r.unassigned_share);
  try {
    r.validate();
  } catch (const InvariantError& e) {
    throw ParseError("ingest", file + ": " + e.what());
  }
  return r;
}

std::string write_timeline_csv(const AttentionReport& report) {
  std::string o = "frame,visible_labels,fixation_label\n";
  for (const auto& row : report.timeline) {
    o += std::to_string(row.frame) + ',';
    for (std::size_t k = 0; k < row.visible.size(); ++k) o += (k ? ";" : "") + std::to_string(row.visible[k]);
    o += ',';
    if (row.fixation == FixationState::assigned)
      o += std::to_string(row.label);
    else if (row.fixation == FixationState::unassigned)
      o += "unassigned";
    o += '\n';
  }
  return o;
}

// ----------------------------------------------------------- stage artifacts

std::string write_tracklets(std::span<const Tracklet> tracklets, std::span<const Detection> dets) {
  std::string o;
  for (const auto& t : tracklets) {
    o += "{\"id\":" + std::to_string(t.id()) + ",\"frames\":[";
    for (std::size_t k = 0; k < t.members().size(); ++k)
      o += (k ? "," : "") + std::to_string(dets[t.members()[k]].frame());
    o += "],\"detections\":[";
    for (std::size_t k = 0; k < t.members().size(); ++k) o += (k ? "," : "") + std::to_string(t.members()[k]);
    o += "],\"feature\":";
    append_reals(o, t.feature());
    o += "}\n";
  }
  return o;
}

std::string write_clusters(std::span<const int> tracklet_labels, std::span<const int> singleton_labels,
                           std::span<const std::vector<double>> centroids, std::span<const double> singleton_margins) {
  auto ints = [](std::span<const int> v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + "]";
  };
  std::string o = "{\"centroids\":[";
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    if (i) o += ',';
    append_reals(o, centroids[i]);
  }
  o += "],\"labels\":" + ints(tracklet_labels) + ",\"singleton_labels\":" + ints(singleton_labels);
  if (!singleton_margins.empty()) {
    o += ",\"singleton_margins\":";
    append_reals(o, singleton_margins);
  }
  return o + "}\n";
}

std::string write_fixations(std::span<const FixationEvent> fixations, std::span<const std::int64_t> mid_frames) {
  std::string o = "start_us,end_us,cx,cy,dispersion,sample_count,mid_frame,target,motion_valid\n";
  for (std::size_t i = 0; i < fixations.size(); ++i) {
    const auto& f = fixations[i];
    o += std::to_string(f.start_us) + ',' + std::to_string(f.end_us) + ',' + format_real(f.cx) + ',' +
         format_real(f.cy) + ',' + format_real(f.dispersion) + ',' + std::to_string(f.sample_count) + ',' +
         std::to_string(mid_frames[i]) + ',' + (f.target ? std::to_string(*f.target) : std::string("unassigned")) +
         ',' + (f.motion_valid ? '1' : '0') + '\n';
  }
  return o;
}

std::string write_flow(std::span<const FlowSummary> flows) {
  std::string o = "frame,mean_magnitude,mean_orientation,kept_blocks\n";
  for (const auto& f : flows)
    o += std::to_string(f.frame) + ',' + format_real(f.mean_magnitude) + ',' + format_real(f.mean_orientation) + ',' +
         std::to_string(f.kept_blocks) + '\n';
  return o;
}

// ----------------------------------------------------------------------- PGM

GrayImage parse_pgm(std::istream& in) {
  auto token = [&in]() {
    std::string t;
    char c = 0;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (!std::isspace(static_cast<unsigned char>(c))) {
        t += c;
        break;
      }
    }
    while (in.get(c) && !std::isspace(static_cast<unsigned char>(c))) t += c;
    return t;
  };
  if (token() != "P5") throw ParseError("ingest", "pgm: expected P5 magic");
  int w = 0, h = 0, maxval = 0;
  if (!parse_number(token(), w) || !parse_number(token(), h) || !parse_number(token(), maxval) || w <= 0 || h <= 0)
    throw ParseError("ingest", "pgm: bad header");
  if (maxval != 255) throw ParseError("ingest", "pgm: only 8-bit (maxval 255) is supported");
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (in.gcount() != static_cast<std::streamsize>(px.size())) throw ParseError("ingest", "pgm: truncated pixel data");
  return GrayImage(w, h, std::move(px));
}

std::string write_pgm(const GrayImage& image) {
  std::string o = "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  o.append(reinterpret_cast<const char*>(image.pixels().data()), image.pixels().size());
  return o;
}

std::string frame_filename(std::int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06lld.pgm", static_cast<long long>(index));
  return buf;
}

// ---------------------------------------------------------------------- files

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("ingest", "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("ingest", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("ingest", "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("ingest", "cannot write " + path.string());
}

SessionBundle load_bundle(const std::filesystem::path& dir, SessionConfig config, bool load_frames) {
  SessionBundle b;
  const auto det_path = dir / "detections.jsonl";
  const auto gaze_path = dir / "gaze.csv";
  if (!std::filesystem::exists(det_path)) throw ParseError("ingest", "missing input file detections.jsonl in " + dir.string());
  if (!std::filesystem::exists(gaze_path)) throw ParseError("ingest", "missing input file gaze.csv in " + dir.string());

  const std::string det_bytes = read_file(det_path);
  std::istringstream det_in(det_bytes);
  auto dets = parse_detections(det_in);
  b.header = dets.header;
  b.detections = std::move(dets.detections);
  config.embedding_dim = b.header.embedding_dim;
  config.frame_width = b.header.width;
  config.frame_height = b.header.height;

  const std::string gaze_bytes = read_file(gaze_path);
  std::istringstream gaze_in(gaze_bytes);
  auto gaze = parse_gaze(gaze_in, b.header.width, b.header.height);
  b.gaze = std::move(gaze.samples);
  b.gaze_warnings = gaze.out_of_range;

  b.input_hashes.emplace_back("detections.jsonl", sha256_hex(det_bytes));
  b.input_hashes.emplace_back("gaze.csv", sha256_hex(gaze_bytes));

  const auto frames_dir = dir / "frames";
  if (std::filesystem::is_directory(frames_dir)) {
    b.frames_dir = frames_dir;
    if (load_frames) {
      std::string all;
      for (std::int64_t i = 0;; ++i) {
        const auto p = frames_dir / frame_filename(i);
        if (!std::filesystem::exists(p)) break;
        const std::string bytes = read_file(p);
        std::istringstream fin(bytes);
        try {
          b.frames.push_back(parse_pgm(fin));
        } catch (const ParseError& e) {
          throw ParseError("ingest", p.filename().string() + ": " + e.what());
        }
        all += sha256_hex(bytes);
      }
      b.input_hashes.emplace_back("frames", sha256_hex(all));
    }
  }
  b.config = config;
  validate_bundle(b);
  return b;
}

void validate_bundle(const SessionBundle& b) {
  for (const auto& d : b.detections) {
    if (d.frame() >= b.header.frame_count) throw ParseError("ingest", "detection frame index beyond frame_count");
    if (static_cast<int>(d.dim()) != b.header.embedding_dim)
      throw ParseError("ingest", "embedding dimension mismatch: expected D=" + std::to_string(b.header.embedding_dim) +
                                     ", got " + std::to_string(d.dim()));
  }
  const double duration_us = static_cast<double>(b.header.frame_count) * 1e6 / b.config.fps;
  for (const auto& g : b.gaze) {
    const double t = static_cast<double>(g.ts_us - b.config.gaze_offset_us);
    if (t < -1e6 || t > duration_us + 1e6)
      throw ParseError("ingest", "gaze timestamp " + std::to_string(g.ts_us) + " outside session duration +/- 1 s");
  }
  for (std::size_t i = 1; i < b.frames.size(); ++i)
    if (b.frames[i].width() != b.frames[0].width() || b.frames[i].height() != b.frames[0].height())
      throw ParseError("ingest", "frame dump has inconsistent dimensions");
}

}  // namespace gazeattn
