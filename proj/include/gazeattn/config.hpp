#pragma once

// Flat key=value configuration files with dotted keys, e.g.
//
//   # linking thresholds
//   linking.theta_high=0.6
//   classifier.strategy=rbf_svm
//
// Later assignments override earlier ones. Unknown keys are an error.

#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "gazeattn/types.hpp"

namespace gazeattn {

// Applies one key=value assignment; throws ConfigError on unknown keys or
// unparsable values.
void apply_config_value(SessionConfig& cfg, const std::string& key, const std::string& value);

// Parses "key=value" (used for --set overrides).
void apply_config_assignment(SessionConfig& cfg, const std::string& assignment);

SessionConfig parse_config(std::istream& in, SessionConfig base = {});

// Every key with its resolved value, sorted by key. Reals use fixed
// 6-decimal formatting.
std::vector<std::pair<std::string, std::string>> config_entries(const SessionConfig& cfg);

std::string write_config(const SessionConfig& cfg);

// Fixed 6-decimal rendering used by every emitted artifact.
std::string format_real(double v);

}  // namespace gazeattn
