// gazeattn: command-line driver for the attention pipeline.
//
// Exit codes: 0 ok, 1 parse error, 2 config error, 3 pipeline invariant
// violation. Diagnostics go to stderr as "error [stage]: message".

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gazeattn/config.hpp"
#include "gazeattn/fixation.hpp"
#include "gazeattn/pipeline.hpp"
#include "gazeattn/synth.hpp"

namespace fs = std::filesystem;
using namespace gazeattn;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  int jobs = 0;
  bool validate_fixations = false;
};

SessionConfig resolve_config(const Common& c) {
  SessionConfig cfg;
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw ConfigError("config", "cannot open " + c.config_path);
    cfg = parse_config(in, cfg);
  }
  for (const auto& o : c.overrides) apply_config_assignment(cfg, o);
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "key=value config file");
  cmd->add_option("--set", c.overrides, "override one key, e.g. --set linking.theta_high=0.7");
  cmd->add_option("--jobs", c.jobs, "worker threads (0: runtime default)")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--validate-fixations", c.validate_fixations, "report motion-valid fixations only");
}

void write_outputs(const fs::path& dir, const std::map<std::string, std::string>& files) {
  fs::create_directories(dir);
  for (const auto& [name, bytes] : files) {
    const fs::path p = dir / name;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_file(p, bytes);
  }
}

void emit(const std::string& out, const std::string& bytes) {
  if (out.empty() || out == "-") {
    std::cout << bytes;
  } else {
    write_file(out, bytes);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teacher attention analysis from mobile eye-tracker sessions"};
  app.require_subcommand(1);
  Common common;
  std::string bundle_dir, out;

  auto* synth = app.add_subcommand("synth", "generate a synthetic session bundle");
  std::string script_path, preset = "default";
  std::uint64_t seed = 42;
  synth->add_option("--script", script_path, "script.json to generate from");
  synth->add_option("--preset", preset, "default | shares | motion")->check(CLI::IsMember({"default", "shares", "motion"}));
  synth->add_option("--seed", seed, "seed for presets");
  synth->add_option("--out", out, "bundle directory")->required();

  auto bundle_cmd = [&](const char* name, const char* help) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("bundle", bundle_dir, "session bundle directory")->required();
    c->add_option("--out", out, "output directory");
    add_common(c, common);
    return c;
  };
  auto* link = bundle_cmd("link", "write tracklets.jsonl");
  auto* cluster = bundle_cmd("cluster", "write tracklets.jsonl and clusters.json");
  auto* fixations = bundle_cmd("fixations", "write fixations.csv");
  auto* attention = bundle_cmd("attention", "write report.json, report.csv, timeline.svg and timeline.csv");
  auto* motion = bundle_cmd("motion", "write flow.csv");
  auto* evaluate = bundle_cmd("evaluate", "confusion matrix against ground_truth.json");
  auto* run = bundle_cmd("run", "run every stage and write all artifacts");

  auto* report = app.add_subcommand("report", "re-render a report.json");
  std::string report_path, format = "json";
  report->add_option("report", report_path, "report.json")->required();
  report->add_option("--format", format, "json | csv | svg | timeline")
      ->check(CLI::IsMember({"json", "csv", "svg", "timeline"}));
  report->add_option("--out", out, "output file (default stdout)");

  auto* rank = app.add_subcommand("rank", "ranked fixation shares across sessions");
  std::vector<std::string> report_paths;
  rank->add_option("reports", report_paths, "report.json files")->required();
  rank->add_option("--out", out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (common.jobs > 0) omp_set_num_threads(common.jobs);

    if (synth->parsed()) {
      SynthScript script;
      if (!script_path.empty()) {
        script = parse_script(read_file(script_path));
      } else if (preset == "motion") {
        script = motion_script(seed);
      } else if (preset == "shares") {
        script = share_script(seed, {0.4, 0.3, 0.2, 0.1});
      } else {
        script = default_script(seed);
      }
      write_bundle(out, script, generate_session(script));
      return 0;
    }

    if (report->parsed()) {
      std::ifstream in(report_path);
      if (!in) throw ParseError("report", "cannot open " + report_path);
      const AttentionReport r = parse_report(in);
      std::string bytes;
      if (format == "json") bytes = write_report(r, ReportFormat::json);
      if (format == "csv") bytes = write_report(r, ReportFormat::csv);
      if (format == "svg") bytes = write_report(r, ReportFormat::svg_timeline);
      if (format == "timeline") bytes = write_timeline_csv(r);
      emit(out, bytes);
      return 0;
    }

    if (rank->parsed()) {
      std::vector<AttentionReport> reports;
      for (const auto& p : report_paths) {
        std::ifstream in(p);
        if (!in) throw ParseError("rank", "cannot open " + p);
        reports.push_back(parse_report(in));
      }
      emit(out, write_ranking(report_paths, rank_sessions(reports)));
      return 0;
    }

    const SessionConfig cfg = resolve_config(common);
    const bool needs_frames = motion->parsed() || run->parsed() || attention->parsed();
    const SessionBundle bundle = load_bundle(bundle_dir, cfg, needs_frames);
    const fs::path out_dir = out.empty() ? fs::path(".") : fs::path(out);
    std::map<std::string, std::string> files;

    if (link->parsed()) {
      const LinkResult links = stage_link(bundle);
      files["tracklets.jsonl"] = write_tracklets(links.tracklets, bundle.detections);
    } else if (cluster->parsed()) {
      const LinkResult links = stage_link(bundle);
      const ClusterStage c = stage_cluster(bundle, links);
      std::vector<std::vector<double>> centroids;
      for (const auto& id : c.clusters) centroids.push_back(id.centroid);
      files["tracklets.jsonl"] = write_tracklets(links.tracklets, bundle.detections);
      files["clusters.json"] = write_clusters(c.tracklet_labels, c.singleton_labels, centroids, c.singleton_margins);
    } else if (fixations->parsed()) {
      const auto fx = stage_fixations(bundle);
      const SessionTiming t = session_timing(bundle);
      std::vector<std::int64_t> mids;
      for (const auto& f : fx) mids.push_back(fixation_frame_span(f, t.fps, t.offset_us, t.frame_count).mid);
      files["fixations.csv"] = write_fixations(fx, mids);
    } else if (motion->parsed()) {
      if (bundle.frames.size() < 2) throw ParseError("motion", "bundle has no frames/ dump with at least two frames");
      files["flow.csv"] = write_flow(stage_motion(bundle).flows);
    } else if (evaluate->parsed()) {
      const GroundTruth truth = parse_ground_truth(read_file(fs::path(bundle_dir) / "ground_truth.json"));
      if (truth.detection_identity.size() != bundle.detections.size())
        throw ParseError("evaluate", "ground_truth.json does not match detections.jsonl");
      const ClusterStage c = stage_cluster(bundle, stage_link(bundle));
      const ConfusionResult cm = confusion_matrix(c.detection_labels, truth.detection_identity);
      std::ostringstream o;
      o << "accuracy=" << format_real(cm.accuracy) << "\n";
      o << "raw_accuracy=" << format_real(cm.raw_accuracy) << "\n";
      o << "mapping=";
      for (std::size_t i = 0; i < cm.mapping.size(); ++i) o << (i ? "," : "") << cm.mapping[i];
      o << "\n";
      for (const auto& row : cm.matrix) {
        for (std::size_t j = 0; j < row.size(); ++j) o << (j ? "," : "") << row[j];
        o << "\n";
      }
      std::cout << o.str();
      if (!out.empty()) files["evaluation.txt"] = o.str();
    } else {
      PipelineOptions opts;
      opts.motion_valid_only = common.validate_fixations;
      PipelineResult r = run_pipeline(bundle, opts);
      if (attention->parsed()) {
        for (const char* name : {"report.json", "report.csv", "timeline.svg", "timeline.csv"}) files[name] = r.artifacts[name];
      } else {
        files = std::move(r.artifacts);
      }
    }
    if (!files.empty() && (!evaluate->parsed() || !out.empty())) write_outputs(out_dir, files);
    return 0;
  } catch (const ParseError& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.what() << "\n";
    return 2;
  } catch (const InvariantError& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error [io]: " << e.what() << "\n";
    return 1;
  }
}
