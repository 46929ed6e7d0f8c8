#include "gazeattn/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

namespace gazeattn {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw ConfigError("config", "invalid value '" + value + "' for " + key);
}

double to_real(const std::string& key, const std::string& value) {
  double v = 0.0;
  const char* end = value.data() + value.size();
  auto [p, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) bad_value(key, value);
  return v;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& value) {
  Int v = 0;
  const char* end = value.data() + value.size();
  auto [p, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || p != end) bad_value(key, value);
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct Field {
  std::function<void(SessionConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(SessionConfig)> get;
};

template <typename M>
Field real_field(M member) {
  return {[member](SessionConfig& c, const std::string& k, const std::string& v) { member(c) = to_real(k, v); },
          [member](SessionConfig c) { return format_real(member(c)); }};
}

template <typename Int, typename M>
Field int_field(M member) {
  return {[member](SessionConfig& c, const std::string& k, const std::string& v) { member(c) = to_int<Int>(k, v); },
          [member](SessionConfig c) { return std::to_string(member(c)); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"session.num_students", int_field<int>([](SessionConfig& c) -> int& { return c.num_students; })},
      {"session.embedding_dim", int_field<int>([](SessionConfig& c) -> int& { return c.embedding_dim; })},
      {"session.fps", real_field([](SessionConfig& c) -> double& { return c.fps; })},
      {"session.frame_width", int_field<int>([](SessionConfig& c) -> int& { return c.frame_width; })},
      {"session.frame_height", int_field<int>([](SessionConfig& c) -> int& { return c.frame_height; })},
      {"session.gaze_offset_us",
       int_field<std::int64_t>([](SessionConfig& c) -> std::int64_t& { return c.gaze_offset_us; })},
      {"linking.theta_high", real_field([](SessionConfig& c) -> double& { return c.linking.theta_high; })},
      {"linking.theta_margin", real_field([](SessionConfig& c) -> double& { return c.linking.theta_margin; })},
      {"linking.max_gap", int_field<int>([](SessionConfig& c) -> int& { return c.linking.max_gap; })},
      {"linking.sigma_loc", real_field([](SessionConfig& c) -> double& { return c.linking.sigma_loc; })},
      {"fixation.dispersion_threshold_px",
       real_field([](SessionConfig& c) -> double& { return c.fixation.dispersion_threshold_px; })},
      {"fixation.min_duration_ms", real_field([](SessionConfig& c) -> double& { return c.fixation.min_duration_ms; })},
      {"attention.body_widen", real_field([](SessionConfig& c) -> double& { return c.attention.body_widen; })},
      {"attention.body_extend", real_field([](SessionConfig& c) -> double& { return c.attention.body_extend; })},
      {"attention.r_max_px", real_field([](SessionConfig& c) -> double& { return c.attention.r_max_px; })},
      {"motion.block_size", int_field<int>([](SessionConfig& c) -> int& { return c.motion.block_size; })},
      {"motion.search_radius", int_field<int>([](SessionConfig& c) -> int& { return c.motion.search_radius; })},
      {"motion.shift_magnitude_px", real_field([](SessionConfig& c) -> double& { return c.motion.shift_magnitude_px; })},
      {"classifier.strategy",
       {[](SessionConfig& c, const std::string& k, const std::string& v) {
          if (v == "nearest_centroid")
            c.classifier.strategy = ClassifierStrategy::nearest_centroid;
          else if (v == "rbf_svm")
            c.classifier.strategy = ClassifierStrategy::rbf_svm;
          else
            bad_value(k, v);
        },
        [](SessionConfig c) -> std::string {
          return c.classifier.strategy == ClassifierStrategy::rbf_svm ? "rbf_svm" : "nearest_centroid";
        }}},
      {"classifier.svm_c", real_field([](SessionConfig& c) -> double& { return c.classifier.svm_c; })},
      {"classifier.svm_gamma", real_field([](SessionConfig& c) -> double& { return c.classifier.svm_gamma; })},
  };
  return table;
}

}  // namespace

void apply_config_value(SessionConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("config", "unknown key '" + key + "'");
  it->second.set(cfg, key, value);
}

void apply_config_assignment(SessionConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("config", "expected key=value, got '" + assignment + "'");
  apply_config_value(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

SessionConfig parse_config(std::istream& in, SessionConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      apply_config_assignment(base, t);
    } catch (const ConfigError& e) {
      throw ConfigError("config", "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

std::vector<std::pair<std::string, std::string>> config_entries(const SessionConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, field] : fields()) out.emplace_back(key, field.get(cfg));
  return out;
}

std::string write_config(const SessionConfig& cfg) {
  std::ostringstream os;
  for (const auto& [k, v] : config_entries(cfg)) os << k << '=' << v << '\n';
  return os.str();
}

}  // namespace gazeattn
