#include "gazeattn/tracklink.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "gazeattn/linalg.hpp"

namespace gazeattn {

double loc_affinity(const BBox& a, const BBox& b, double sigma_loc) {
  const double dx = a.center_x() - b.center_x();
  const double dy = a.center_y() - b.center_y();
  const double s = 0.5 * (a.diagonal() + b.diagonal());
  return std::exp(-(dx * dx + dy * dy) / (sigma_loc * sigma_loc * s * s));
}

double size_affinity(const BBox& a, const BBox& b) {
  return (std::min(a.w(), b.w()) / std::max(a.w(), b.w())) * (std::min(a.h(), b.h()) / std::max(a.h(), b.h()));
}

double app_affinity(std::span<const double> ea, std::span<const double> eb) {
  if (ea.size() != eb.size()) throw InvariantError("tracklink", "embedding dimensions differ");
  if (std::abs(norm(ea) - 1.0) > 1e-6 || std::abs(norm(eb) - 1.0) > 1e-6)
    throw InvariantError("tracklink", "appearance affinity needs unit embeddings");
  return std::clamp((1.0 + dot(ea, eb)) / 2.0, 0.0, 1.0);
}

double link_affinity(const Detection& a, const Detection& b, const LinkingConfig& cfg) {
  if (!(a.frame() < b.frame() && b.frame() <= a.frame() + cfg.max_gap))
    throw InvariantError("tracklink", "link_affinity needs a.frame < b.frame <= a.frame + max_gap");
  return loc_affinity(a.bbox(), b.bbox(), cfg.sigma_loc) * size_affinity(a.bbox(), b.bbox()) *
         app_affinity(a.embedding(), b.embedding());
}

namespace {

struct Candidate {
  std::size_t chain;
  DetectionIndex head;
  std::int64_t head_frame;
  DetectionIndex det;
  double p;
};

}  // namespace

LinkResult link_detections(std::span<const Detection> dets, const LinkingConfig& cfg) {
  std::vector<std::vector<DetectionIndex>> chains;
  std::vector<std::size_t> open;  // chains whose head may still link

  std::size_t begin = 0;
  while (begin < dets.size()) {
    const std::int64_t frame = dets[begin].frame();
    std::size_t end = begin;
    while (end < dets.size() && dets[end].frame() == frame) ++end;

    std::erase_if(open, [&](std::size_t c) { return dets[chains[c].back()].frame() < frame - cfg.max_gap; });

    std::vector<Candidate> cand;
    for (std::size_t c : open) {
      const DetectionIndex h = chains[c].back();
      for (DetectionIndex j = begin; j < end; ++j)
        cand.push_back({c, h, dets[h].frame(), j, link_affinity(dets[h], dets[j], cfg)});
    }
    std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
      return std::make_tuple(-a.p, a.head_frame, a.head, a.det) < std::make_tuple(-b.p, b.head_frame, b.head, b.det);
    });

    std::vector<char> chain_used(chains.size(), 0);
    std::vector<char> det_used(end - begin, 0);
    for (const Candidate& c : cand) {
      if (c.p < cfg.theta_high) break;
      if (chain_used[c.chain] || det_used[c.det - begin]) continue;
      double competitor = 0.0;
      for (const Candidate& o : cand) {
        if (o.chain == c.chain && o.det == c.det) continue;
        const bool shares = o.chain == c.chain || o.det == c.det;
        if (!shares || chain_used[o.chain] || det_used[o.det - begin]) continue;
        competitor = std::max(competitor, o.p);
      }
      if (c.p - competitor < cfg.theta_margin) continue;
      chains[c.chain].push_back(c.det);
      chain_used[c.chain] = 1;
      det_used[c.det - begin] = 1;
    }
    for (DetectionIndex j = begin; j < end; ++j) {
      if (det_used[j - begin]) continue;
      chains.push_back({j});
      open.push_back(chains.size() - 1);
    }
    begin = end;
  }

  LinkResult out;
  for (const auto& chain : chains) {
    if (chain.size() == 1) {
      out.singletons.push_back(chain.front());
      continue;
    }
    const int id = static_cast<int>(out.tracklets.size());
    out.tracklets.emplace_back(id, chain, aggregate_members(dets, chain));
  }
  std::sort(out.singletons.begin(), out.singletons.end());
  return out;
}

std::vector<double> aggregate_embeddings(std::span<const std::span<const double>> embeddings) {
  if (embeddings.empty()) throw InvariantError("tracklink", "degenerate tracklet: no members");
  std::vector<double> mean(embeddings.front().size(), 0.0);
  for (const auto& e : embeddings) {
    if (e.size() != mean.size()) throw InvariantError("tracklink", "embedding dimensions differ");
    for (std::size_t k = 0; k < e.size(); ++k) mean[k] += e[k];
  }
  const double n = static_cast<double>(embeddings.size());
  for (double& v : mean) v /= n;
  if (norm(mean) < 1e-12 || !normalize_in_place(mean)) throw InvariantError("tracklink", "degenerate tracklet");
  return mean;
}

std::vector<double> aggregate_members(std::span<const Detection> dets, std::span<const DetectionIndex> members) {
  std::vector<std::span<const double>> e;
  e.reserve(members.size());
  for (DetectionIndex i : members) e.push_back(dets[i].embedding());
  return aggregate_embeddings(e);
}

}  // namespace gazeattn
