#include <algorithm>

#include "doctest.h"
#include "gazeattn/attention.hpp"
#include "gazeattn/rng.hpp"

using namespace gazeattn;

namespace {

FixationEvent fix(std::int64_t start, std::int64_t end, std::optional<int> target) {
  FixationEvent f;
  f.start_us = start;
  f.end_us = end;
  f.sample_count = 2;
  f.target = target;
  return f;
}

std::vector<IdentityCluster> clusters(const std::vector<Gender>& genders) {
  std::vector<IdentityCluster> c(genders.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i].label = static_cast<int>(i);
    c[i].gender = genders[i];
  }
  return c;
}

}  // namespace

TEST_CASE("fixation assignment rules") {
  const AttentionConfig cfg;
  const std::vector<LabeledBox> one{{0, BBox(100, 100, 40, 50), 2}};
  CHECK(assign_fixation(120, 125, one, cfg) == 2);
  // Three face heights below the face, body_extend 4.
  CHECK(assign_fixation(120, 100 + 50 + 3 * 50, one, cfg) == 2);
  CHECK_FALSE(assign_fixation(120, 100 + 50 * 5 + 1, one, cfg).has_value());
  CHECK_FALSE(assign_fixation(500, 500, {}, cfg).has_value());
  CHECK_FALSE(assign_fixation(120, 125, std::span<const LabeledBox>{}, cfg).has_value());

  // Radius fallback: outside face and body, within r_max of the center.
  CHECK(assign_fixation(120 + 60, 60, one, cfg) == 2);
  CHECK_FALSE(assign_fixation(120 + 101, 125, one, cfg).has_value());
}

TEST_CASE("face rule beats body rule and ties go to the nearer center then lower label") {
  const AttentionConfig cfg;
  // Box 1's body region covers box 0's face.
  const std::vector<LabeledBox> stacked{{0, BBox(100, 200, 40, 40), 0}, {0, BBox(100, 100, 40, 40), 1}};
  CHECK(assign_fixation(110, 230, stacked, cfg) == 0);

  const std::vector<LabeledBox> overlap{{0, BBox(0, 0, 100, 100), 3}, {0, BBox(50, 0, 100, 100), 1}};
  CHECK(assign_fixation(60, 50, overlap, cfg) == 3);   // nearer to center x=50
  CHECK(assign_fixation(100, 50, overlap, cfg) == 1);  // on center 100
  CHECK(assign_fixation(75, 50, overlap, cfg) == 1);   // equidistant, lower label
}

TEST_CASE("assignment is translation equivariant") {
  SplitMix64 rng(31);
  const AttentionConfig cfg;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<LabeledBox> boxes, moved;
    const double tx = rng.uniform(-300, 300), ty = rng.uniform(-300, 300);
    for (int k = 0; k < 4; ++k) {
      // Integer geometry keeps the shifted comparisons exact.
      const BBox b(static_cast<double>(rng.below(600)), static_cast<double>(rng.below(400)),
                   static_cast<double>(20 + rng.below(60)), static_cast<double>(20 + rng.below(60)));
      boxes.push_back({0, b, k});
      moved.push_back({0, b.translated(std::round(tx), std::round(ty)), k});
    }
    const double x = static_cast<double>(rng.below(700)), y = static_cast<double>(rng.below(600));
    CHECK(assign_fixation(x, y, boxes, cfg) == assign_fixation(x + std::round(tx), y + std::round(ty), moved, cfg));
  }
}

TEST_CASE("attribute fixations at the mid frame") {
  const std::vector<LabeledBox> boxes{{2, BBox(0, 0, 10, 10), 0}, {3, BBox(0, 0, 10, 10), 1}};
  std::vector<FixationEvent> f{fix(0, 200000, {}), fix(100000, 200000, {})};
  f[0].cx = f[0].cy = f[1].cx = f[1].cy = 5;
  attribute_fixations(f, boxes, AttentionConfig{}, SessionTiming{25.0, 0, 100});
  CHECK(f[0].target == 0);  // mid 100 ms -> frame 2
  CHECK(f[1].target == 1);  // mid 150 ms -> frame 3
}

TEST_CASE("attention map counts and shares") {
  const std::vector<FixationEvent> f{fix(0, 40000, 0), fix(80000, 120000, 0), fix(160000, 200000, 1),
                                     fix(240000, 280000, {})};
  const std::vector<LabeledBox> boxes{{0, BBox(0, 0, 5, 5), 0}, {0, BBox(9, 0, 5, 5), 0}, {1, BBox(0, 0, 5, 5), 1}};
  const auto r = build_attention_map(f, boxes, clusters({Gender::male, Gender::female}), SessionTiming{25.0, 0, 10});
  CHECK(r.total_fixations == 4);
  CHECK(*r.identities[0].fixation_share == 0.5);
  CHECK(*r.identities[1].fixation_share == 0.25);
  CHECK(*r.unassigned_share == 0.25);
  CHECK(r.identities[0].frames_visible == 1);
  CHECK(r.identities[1].frames_visible == 1);
  CHECK(r.identities[0].fixation_count + r.identities[1].fixation_count + r.unassigned_count == r.total_fixations);
  REQUIRE(r.timeline.size() == 10);
  CHECK(r.timeline[0].visible == std::vector<int>{0});
  CHECK(r.timeline[0].fixation == FixationState::assigned);
  CHECK(r.timeline[1].fixation == FixationState::assigned);
  CHECK(r.timeline[1].label == 0);
  CHECK(r.timeline[6].fixation == FixationState::unassigned);
  CHECK(r.timeline[8].fixation == FixationState::none);
  CHECK(r.genders[0].fixation_count == 2);
  CHECK(*r.genders[0].share == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("empty attention map") {
  const auto r = build_attention_map({}, {}, clusters({Gender::unknown}), SessionTiming{25.0, 0, 3});
  CHECK(r.total_fixations == 0);
  CHECK_FALSE(r.identities[0].fixation_share.has_value());
  CHECK_FALSE(r.unassigned_share.has_value());
  CHECK(r.timeline.size() == 3);
}

TEST_CASE("shares do not change under temporal rescaling") {
  SplitMix64 rng(6);
  std::vector<FixationEvent> f, g;
  std::int64_t t = 0;
  for (int i = 0; i < 40; ++i) {
    const std::int64_t d = 100000 + static_cast<std::int64_t>(rng.below(100000));
    const std::optional<int> target = rng.bernoulli(0.2) ? std::nullopt : std::optional<int>(static_cast<int>(rng.below(3)));
    f.push_back(fix(t, t + d, target));
    g.push_back(fix(3 * t, 3 * (t + d), target));
    t += d + 50000;
  }
  const auto a = build_attention_map(f, {}, clusters({Gender::male, Gender::male, Gender::female}),
                                     SessionTiming{25.0, 0, 1000});
  const auto b = build_attention_map(g, {}, clusters({Gender::male, Gender::male, Gender::female}),
                                     SessionTiming{25.0, 0, 3000});
  for (std::size_t i = 0; i < 3; ++i) CHECK(a.identities[i].fixation_share == b.identities[i].fixation_share);
  CHECK(a.unassigned_share == b.unassigned_share);
}

TEST_CASE("gender vote tallies") {
  CHECK(gender_majority(960, 946).gender == Gender::male);
  CHECK(gender_majority(3321, 1128).gender == Gender::male);
  CHECK(gender_majority(879, 3870).gender == Gender::female);
  CHECK(gender_majority(242, 2721).gender == Gender::female);
  CHECK(gender_majority(5, 5).gender == Gender::unknown);
  CHECK(gender_majority(0, 0).gender == Gender::unknown);
}

TEST_CASE("gender votes from scores") {
  std::vector<GenderScores> s{{0.9, 0.1}, {0.4, 0.6}, {0.5, 0.5}, {0.7, 0.3}};
  auto v = gender_majority(s);
  CHECK(v.male_votes == 2);
  CHECK(v.female_votes == 1);
  CHECK(v.gender == Gender::male);
  std::reverse(s.begin(), s.end());
  const auto w = gender_majority(s);
  CHECK(w.male_votes == v.male_votes);
  CHECK(w.female_votes == v.female_votes);
  CHECK(gender_majority(std::span<const GenderScores>{}).gender == Gender::unknown);
}

TEST_CASE("attention by gender") {
  std::vector<IdentityRecord> ids(4);
  const Gender g[4] = {Gender::male, Gender::male, Gender::female, Gender::female};
  for (std::size_t i = 0; i < 4; ++i) {
    ids[i].gender = g[i];
    ids[i].fixation_count = 10 * (i + 1);
  }
  auto out = gender_attention(ids);
  REQUIRE(out.size() == 3);
  CHECK(out[0].fixation_count == 30);
  CHECK(*out[0].share == doctest::Approx(0.3));
  CHECK(out[1].fixation_count == 70);
  CHECK(*out[1].share == doctest::Approx(0.7));
  CHECK(out[2].fixation_count == 0);

  for (auto& r : ids) r.gender = Gender::unknown;
  out = gender_attention(ids);
  CHECK(out[2].fixation_count == 100);
  CHECK(*out[2].share == 1.0);

  std::vector<IdentityRecord> single(1);
  single[0].gender = Gender::female;
  single[0].fixation_count = 3;
  CHECK(*gender_attention(single)[1].share == 1.0);
}

TEST_CASE("session ranking") {
  AttentionReport r;
  r.identities.resize(4);
  const std::size_t counts[4] = {2, 8, 5, 5};
  for (std::size_t i = 0; i < 4; ++i) {
    r.identities[i].label = static_cast<int>(i);
    r.identities[i].fixation_count = counts[i];
  }
  r.total_fixations = 20;
  r.fill_shares();
  AttentionReport single;
  single.identities.resize(1);
  single.identities[0].fixation_count = 7;
  single.total_fixations = 7;
  single.fill_shares();
  AttentionReport empty;
  empty.identities.resize(2);
  empty.fill_shares();
  const std::vector<AttentionReport> reports{r, single, empty};
  const auto ranked = rank_sessions(reports);
  CHECK(ranked[0] == std::vector<double>{0.4, 0.25, 0.25, 0.1});
  CHECK(ranked[1] == std::vector<double>{1.0});
  CHECK(ranked[2].empty());
}
