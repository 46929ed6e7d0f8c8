#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "gazeattn/cluster.hpp"
#include "gazeattn/kernels.hpp"
#include "gazeattn/rng.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace gazeattn;

namespace {

FeatureMatrix rows(const std::vector<std::vector<double>>& v) {
  FeatureMatrix f(v.size(), v.empty() ? 0 : v[0].size());
  for (std::size_t i = 0; i < v.size(); ++i) f.set_row(i, v[i]);
  return f;
}

std::vector<double> unit(std::vector<double> v) {
  normalize_in_place(v);
  return v;
}

// Points on the unit sphere within `spread` radians of `axis`.
std::vector<double> cap_point(SplitMix64& rng, const std::vector<double>& axis, double spread) {
  std::vector<double> v(axis.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = axis[k] + spread * rng.normal();
  return unit(v);
}

double smo_objective(const BinarySvm& m) {
  double quad = 0.0, lin = 0.0;
  for (std::size_t i = 0; i < m.coef.size(); ++i) {
    lin += std::abs(m.coef[i]);
    for (std::size_t j = 0; j < m.coef.size(); ++j)
      quad += m.coef[i] * m.coef[j] *
              std::exp(-m.gamma * squared_distance(m.support_vectors.row(i), m.support_vectors.row(j)));
  }
  return 0.5 * quad - lin;
}

}  // namespace

TEST_CASE("ward merges the closest pair first with halved squared distance") {
  const Dendrogram d = ward_linkage(rows({{0}, {1}, {10}}));
  REQUIRE(d.merges().size() == 2);
  CHECK(d.merges()[0].left == 0);
  CHECK(d.merges()[0].right == 1);
  CHECK(d.merges()[0].cost == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.merges()[0].size == 2);
  CHECK(d.merges()[1].left == 2);
  CHECK(d.merges()[1].right == 3);
  // 2*1/3 * 9.5^2
  CHECK(d.merges()[1].cost == doctest::Approx(60.1666666667).epsilon(1e-10));
  CHECK(d.merges()[1].size == 3);
  CHECK_THROWS_AS(ward_linkage(rows({{1}})), InvariantError);
}

TEST_CASE("equal costs merge in node id order") {
  const Dendrogram d = ward_linkage(rows({{0}, {1}, {2}, {3}}));
  CHECK(d.merges()[0].left == 0);
  CHECK(d.merges()[0].right == 1);
  CHECK(d.merges()[1].left == 2);
  CHECK(d.merges()[1].right == 3);
  CHECK(d.merges()[2].left == 4);
  CHECK(d.merges()[2].right == 5);
}

TEST_CASE("cut") {
  const Dendrogram d = ward_linkage(rows({{0}, {1}, {10}}));
  CHECK(cut(d, 3) == std::vector<int>{0, 1, 2});
  CHECK(cut(d, 1) == std::vector<int>{0, 0, 0});
  CHECK(cut(d, 2) == std::vector<int>{0, 0, 1});
  CHECK_THROWS_AS(cut(d, 0), InvariantError);
  CHECK_THROWS_AS(cut(d, 4), InvariantError);
  // Labels follow the smallest leaf index, not merge order.
  const Dendrogram e = ward_linkage(rows({{10}, {0}, {1}}));
  CHECK(cut(e, 2) == std::vector<int>{0, 1, 1});
}

TEST_CASE("lance-williams ward agrees with recompute-from-scratch ward") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    CAPTURE(seed);
    SplitMix64 rng(seed);
    const std::size_t n = 2 + rng.below(49), d = 1 + rng.below(6);
    FeatureMatrix f(n, d);
    for (std::size_t i = 0; i < n; ++i)
      for (double& v : f.row(i)) v = rng.normal();
    const auto fast = ward_linkage(f).merges();
    const auto slow = oracle::ward(f);
    REQUIRE(fast.size() == slow.size());
    for (std::size_t s = 0; s < fast.size(); ++s) {
      CHECK(fast[s].left == slow[s].left);
      CHECK(fast[s].right == slow[s].right);
      CHECK(fast[s].size == slow[s].size);
      CHECK(std::abs(fast[s].cost - slow[s].cost) <= 1e-9 * std::max(1.0, slow[s].cost));
    }
  }
}

TEST_CASE("cut labels are invariant under a global rotation") {
  SplitMix64 rng(5);
  const std::size_t n = 30;
  FeatureMatrix f(n, 3), g(n, 3);
  const double a = 0.7, c = std::cos(a), s = std::sin(a);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v{rng.normal(), rng.normal(), rng.normal()};
    f.set_row(i, v);
    const std::vector<double> r{c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]};
    g.set_row(i, r);
  }
  for (int k = 1; k <= 6; ++k) CHECK(cut(ward_linkage(f), k) == cut(ward_linkage(g), k));
}

TEST_CASE("nearest centroid classifier") {
  const FeatureMatrix f = rows({{1, 0}, {0, 1}});
  const std::vector<int> labels{0, 1};
  ClassifierConfig cfg;
  const auto model = SingletonClassifier::train(f, labels, 2, cfg);
  CHECK(model.strategy() == ClassifierStrategy::nearest_centroid);
  CHECK(model.predict(unit({0.9, 0.1})) == 0);
  CHECK(model.predict(unit({0.1, 0.9})) == 1);
  CHECK(model.predict(unit({1, 1})) == 0);  // tie goes to the lower label
  CHECK(model.margin(unit({0.9, 0.1})) == doctest::Approx(unit({0.9, 0.1})[0] - unit({0.9, 0.1})[1]));

  const std::vector<int> empty_class{0, 0};
  CHECK_THROWS_AS(SingletonClassifier::train(f, empty_class, 2, cfg), InvariantError);
  const std::vector<int> bad{0, 2};
  CHECK_THROWS_AS(SingletonClassifier::train(f, bad, 2, cfg), InvariantError);
}

TEST_CASE("singleton assignment examples") {
  const FeatureMatrix f = rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  const std::vector<int> labels{0, 1, 2};
  for (auto strategy : {ClassifierStrategy::nearest_centroid, ClassifierStrategy::rbf_svm}) {
    ClassifierConfig cfg;
    cfg.strategy = strategy;
    const auto model = SingletonClassifier::train(f, labels, 3, cfg);
    const std::vector<Detection> dets{testutil::det(0, 0, 0, 1, 1, {0, 1, 0}),
                                      testutil::det(1, 0, 0, 1, 1, {1, 0, 0}),
                                      testutil::det(2, 0, 0, 1, 1, {0, 0, 1})};
    const std::vector<DetectionIndex> singles{0, 1, 2};
    CHECK(assign_singletons(model, dets, singles) == std::vector<int>{1, 0, 2});
  }
  // Antipodal to every centroid but one.
  const FeatureMatrix g = rows({{1, 0}, {-1, 0}});
  const std::vector<int> two{0, 1};
  const auto model = SingletonClassifier::train(g, two, 2, ClassifierConfig{});
  CHECK(model.predict(std::vector<double>{-1, 0}) == 1);
}

TEST_CASE("both strategies separate orthogonal single features") {
  const FeatureMatrix f = rows({{1, 0}, {0, 1}});
  const std::vector<int> labels{0, 1};
  for (auto strategy : {ClassifierStrategy::nearest_centroid, ClassifierStrategy::rbf_svm}) {
    ClassifierConfig cfg;
    cfg.strategy = strategy;
    const auto model = SingletonClassifier::train(f, labels, 2, cfg);
    CHECK(model.predict(f.row(0)) == 0);
    CHECK(model.predict(f.row(1)) == 1);
  }
}

TEST_CASE("centroid classifier ignores training order") {
  SplitMix64 rng(8);
  const std::vector<std::vector<double>> axes{unit({1, 0, 0}), unit({0, 1, 0}), unit({0, 0, 1})};
  std::vector<std::vector<double>> pts;
  std::vector<int> labels;
  for (int i = 0; i < 30; ++i) {
    labels.push_back(i % 3);
    pts.push_back(cap_point(rng, axes[static_cast<std::size_t>(i % 3)], 0.4));
  }
  std::vector<std::size_t> perm(pts.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = (i * 7) % perm.size();
  std::vector<std::vector<double>> pts2;
  std::vector<int> labels2;
  for (std::size_t i : perm) {
    pts2.push_back(pts[i]);
    labels2.push_back(labels[i]);
  }
  const auto a = SingletonClassifier::train(rows(pts), labels, 3, ClassifierConfig{});
  const auto b = SingletonClassifier::train(rows(pts2), labels2, 3, ClassifierConfig{});
  for (int q = 0; q < 200; ++q) {
    const auto x = cap_point(rng, axes[0], 2.0);
    CHECK(a.predict(x) == b.predict(x));
  }
}

TEST_CASE("smo agrees with a projected-gradient dual solver") {
  // Two overlapping spherical caps in 3-D, 20 points each.
  SplitMix64 rng(40);
  const auto axis_a = unit({1, 0.3, 0}), axis_b = unit({0.2, 1, 0.1});
  std::vector<std::vector<double>> pts;
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    const bool pos = i % 2 == 0;
    pts.push_back(cap_point(rng, pos ? axis_a : axis_b, 0.45));
    y.push_back(pos ? 1 : -1);
  }
  const FeatureMatrix x = rows(pts);
  const double c = 10.0, gamma = 2.0;
  const SquareMatrix k = kernels::serial::rbf_kernel(x, gamma);
  const BinarySvm smo = train_binary_svm(x, k, y, c, gamma);
  const oracle::DualSvm ref = oracle::svm_dual(x, y, c, gamma);

  // Both solve the same convex program; SMO stops at a 1e-3 KKT gap.
  CHECK(smo_objective(smo) == doctest::Approx(ref.objective).epsilon(1e-3));

  // Sign agreement on a latitude/longitude grid over the sphere.
  int agree = 0, total = 0;
  for (int i = 1; i < 30; ++i)
    for (int j = 0; j < 60; ++j) {
      const double th = std::numbers::pi * i / 30, ph = 2 * std::numbers::pi * j / 60;
      const std::vector<double> q{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
      agree += (smo.decision(q) >= 0) == (oracle::svm_decision(ref, x, y, gamma, q) >= 0);
      ++total;
    }
  CHECK(static_cast<double>(agree) / total >= 0.95);

  // Training labels are reproduced as well as the reference does.
  int smo_hits = 0, ref_hits = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    smo_hits += (smo.decision(x.row(i)) >= 0) == (y[i] > 0);
    ref_hits += (oracle::svm_decision(ref, x, y, gamma, x.row(i)) >= 0) == (y[i] > 0);
  }
  CHECK(std::abs(smo_hits - ref_hits) <= 1);
}

TEST_CASE("smo satisfies the dual constraints") {
  SplitMix64 rng(3);
  std::vector<std::vector<double>> pts;
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) {
    pts.push_back(cap_point(rng, i % 2 ? unit({1, 0}) : unit({0, 1}), 0.6));
    y.push_back(i % 2 ? 1 : -1);
  }
  const FeatureMatrix x = rows(pts);
  const double c = 1.0;
  const BinarySvm m = train_binary_svm(x, kernels::serial::rbf_kernel(x, 0.5), y, c, 0.5);
  double sum = 0.0;
  for (double a : m.coef) {
    CHECK(std::abs(a) <= c + 1e-12);
    CHECK(a != 0.0);
    sum += a;
  }
  CHECK(std::abs(sum) < 1e-9);
  CHECK(m.iterations > 0);
}

TEST_CASE("hungarian assignment matches brute force") {
  SplitMix64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    std::vector<std::vector<double>> w(n, std::vector<double>(n));
    for (auto& row : w)
      for (double& v : row) v = static_cast<double>(rng.below(20));
    const auto p = max_weight_assignment(w);
    std::vector<int> seen(n, 0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(p[i] >= 0);
      ++seen[static_cast<std::size_t>(p[i])];
      total += w[i][static_cast<std::size_t>(p[i])];
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    CHECK(total == oracle::best_assignment_weight(w));
  }
}

TEST_CASE("confusion matrix") {
  const std::vector<int> truth{0, 0, 1, 1, 2};
  auto r = confusion_matrix(truth, truth);
  CHECK(r.accuracy == 1.0);
  CHECK(r.raw_accuracy == 1.0);
  CHECK(r.matrix == std::vector<std::vector<std::size_t>>{{2, 0, 0}, {0, 2, 0}, {0, 0, 1}});

  const std::vector<int> t2{0, 0, 1, 1}, swapped{1, 1, 0, 0};
  r = confusion_matrix(swapped, t2);
  CHECK(r.raw_accuracy == 0.0);
  CHECK(r.accuracy == 1.0);
  CHECK(r.mapping == std::vector<int>{1, 0});

  const std::vector<int> short_pred{0};
  CHECK_THROWS_AS(confusion_matrix(short_pred, t2), InvariantError);
}

TEST_CASE("four-student confusion table with 14009 detections") {
  const std::vector<std::vector<std::size_t>> table{
      {1897, 8, 13, 0}, {9, 4428, 28, 0}, {0, 13, 4558, 5}, {0, 0, 92, 2958}};
  std::vector<int> predicted, truth;
  oracle::expand_confusion(table, predicted, truth);
  CHECK(predicted.size() == 14009);
  // Scramble the predicted label names; alignment must undo it.
  const int rename[4] = {2, 0, 3, 1};
  for (int& p : predicted) p = rename[p];
  const auto r = confusion_matrix(predicted, truth);
  CHECK(r.matrix == table);
  CHECK(r.accuracy == doctest::Approx(13841.0 / 14009.0).epsilon(1e-15));
  CHECK(r.accuracy == doctest::Approx(0.9880).epsilon(1e-4));
  CHECK(r.mapping == std::vector<int>{1, 3, 0, 2});
}

TEST_CASE("build clusters") {
  const std::vector<Tracklet> t{Tracklet(0, {0, 1}, {1, 0}), Tracklet(1, {2, 3}, {0, 1}), Tracklet(2, {4, 5}, {1, 0})};
  const std::vector<int> tl{0, 1, 0}, sl{1};
  const std::vector<DetectionIndex> singles{6};
  const auto c = build_clusters(t, tl, singles, sl, 2);
  CHECK(c[0].tracklet_ids == std::vector<int>{0, 2});
  CHECK(c[1].singleton_detections == std::vector<DetectionIndex>{6});
  CHECK(c[0].centroid == std::vector<double>{1, 0});
  const std::vector<int> lonely{0, 0, 0};
  CHECK_THROWS_AS(build_clusters(t, lonely, singles, sl, 2), InvariantError);
}
