#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gazeattn/cluster.hpp"
#include "gazeattn/ingest.hpp"
#include "gazeattn/synth.hpp"
#include "gazeattn/types.hpp"

namespace testutil {

inline gazeattn::Detection det(std::int64_t frame, double x, double y, double w, double h, std::vector<double> e) {
  return gazeattn::Detection(frame, frame * 40000, gazeattn::BBox(x, y, w, h), std::move(e));
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("gazeattn_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// Writes a generated session to disk and loads it back through ingest.
inline gazeattn::SessionBundle load_generated(const std::string& name, const gazeattn::SynthScript& script,
                                              const gazeattn::GeneratedSession& session,
                                              gazeattn::SessionConfig config = {}) {
  const auto dir = scratch_dir(name);
  gazeattn::write_bundle(dir, script, session);
  config.num_students = script.identities;
  auto bundle = gazeattn::load_bundle(dir, config);
  std::filesystem::remove_all(dir);
  return bundle;
}

// Student-only fixation shares indexed by true identity, aligned through the
// confusion-matrix mapping of the detection labels.
inline std::vector<double> aligned_shares(const gazeattn::AttentionReport& report, const std::vector<int>& labels,
                                          const std::vector<int>& truth) {
  const auto cm = gazeattn::confusion_matrix(labels, truth);
  std::vector<double> shares(report.identities.size(), 0.0);
  std::size_t assigned = 0;
  for (const auto& r : report.identities) assigned += r.fixation_count;
  if (assigned == 0) return shares;
  for (std::size_t p = 0; p < report.identities.size(); ++p)
    shares[static_cast<std::size_t>(cm.mapping[p])] =
        static_cast<double>(report.identities[p].fixation_count) / static_cast<double>(assigned);
  return shares;
}

}  // namespace testutil
