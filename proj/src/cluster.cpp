#include "gazeattn/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "gazeattn/kernels.hpp"

namespace gazeattn {

// ---------------------------------------------------------------------- Ward

namespace {

struct PairKey {
  double cost;
  std::size_t lo;
  std::size_t hi;
  bool operator<(const PairKey& o) const { return std::tie(cost, lo, hi) < std::tie(o.cost, o.lo, o.hi); }
};

}  // namespace

Dendrogram ward_linkage(const FeatureMatrix& features) {
  const std::size_t n = features.rows();
  if (n < 2) throw InvariantError("cluster", "ward_linkage needs at least 2 features");

  SquareMatrix cost = kernels::parallel::pairwise_sq_distances(features);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cost(i, j) *= 0.5;

  std::vector<std::size_t> node(n), size(n, 1);
  std::iota(node.begin(), node.end(), 0);
  std::vector<char> active(n, 1);
  std::vector<std::size_t> nn(n, 0);
  std::vector<PairKey> best(n);

  auto key = [&](std::size_t i, std::size_t j) {
    return PairKey{cost(i, j), std::min(node[i], node[j]), std::max(node[i], node[j])};
  };
  auto refresh = [&](std::size_t i) {
    best[i] = {std::numeric_limits<double>::infinity(), 0, 0};
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !active[j]) continue;
      const PairKey k = key(i, j);
      if (k < best[i]) {
        best[i] = k;
        nn[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  std::vector<Merge> merges;
  merges.reserve(n - 1);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = n;
    for (std::size_t i = 0; i < n; ++i)
      if (active[i] && (a == n || best[i] < best[a])) a = i;
    std::size_t b = nn[a];
    const double ab = cost(a, b);
    merges.push_back({std::min(node[a], node[b]), std::max(node[a], node[b]), ab, size[a] + size[b]});

    // The merged cluster lives in slot a; slot b retires.
    const double na = static_cast<double>(size[a]), nb = static_cast<double>(size[b]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a || k == b) continue;
      const double nk = static_cast<double>(size[k]);
      const double v = ((na + nk) * cost(a, k) + (nb + nk) * cost(b, k) - nk * ab) / (na + nb + nk);
      cost(a, k) = cost(k, a) = std::max(0.0, v);
    }
    active[b] = 0;
    size[a] += size[b];
    node[a] = n + step;

    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k]) continue;
      if (k == a || nn[k] == a || nn[k] == b) {
        refresh(k);
      } else if (const PairKey kk = key(k, a); kk < best[k]) {
        best[k] = kk;
        nn[k] = a;
      }
    }
  }
  return Dendrogram(n, std::move(merges));
}

std::vector<int> cut(const Dendrogram& d, int k) {
  const std::size_t n = d.leaf_count();
  if (k < 1 || static_cast<std::size_t>(k) > n) throw InvariantError("cluster", "cut: k must lie in [1, leaf count]");
  std::vector<std::size_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const std::size_t keep = n - static_cast<std::size_t>(k);
  for (std::size_t s = 0; s < keep; ++s) {
    const Merge& m = d.merges()[s];
    parent[find(m.left)] = n + s;
    parent[find(m.right)] = n + s;
  }
  std::vector<int> labels(n, -1);
  std::vector<int> root_label(2 * n - 1, -1);
  int next = 0;
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    const std::size_t r = find(leaf);
    if (root_label[r] < 0) root_label[r] = next++;
    labels[leaf] = root_label[r];
  }
  return labels;
}

// ----------------------------------------------------------------------- SVM

double BinarySvm::decision(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < coef.size(); ++i)
    s += coef[i] * std::exp(-gamma * squared_distance(support_vectors.row(i), x));
  return s - rho;
}

BinarySvm train_binary_svm(const FeatureMatrix& x, const SquareMatrix& kernel, std::span<const int> y, double c,
                           double gamma, double tolerance) {
  const std::size_t n = x.rows();
  if (n == 0 || y.size() != n || kernel.size() != n) throw InvariantError("cluster", "svm: inconsistent training data");
  constexpr double kTau = 1e-12;
  std::vector<double> alpha(n, 0.0), grad(n, -1.0);
  auto yv = [&](std::size_t i) { return static_cast<double>(y[i]); };
  auto is_upper = [&](std::size_t t) { return alpha[t] >= c; };
  auto is_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  const std::size_t max_iter = std::max<std::size_t>(10000000, 100 * n);
  std::size_t iter = 0;
  for (; iter < max_iter; ++iter) {
    // i: maximal violator in I_up.
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      const bool in_up = (y[t] == +1 && !is_upper(t)) || (y[t] == -1 && !is_lower(t));
      if (in_up && -yv(t) * grad[t] >= gmax) {
        gmax = -yv(t) * grad[t];
        i = t;
      }
    }
    // j: second-order choice in I_low.
    double gmax2 = -std::numeric_limits<double>::infinity();
    double obj_min = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const bool in_low = (y[t] == +1 && !is_lower(t)) || (y[t] == -1 && !is_upper(t));
      if (!in_low) continue;
      gmax2 = std::max(gmax2, yv(t) * grad[t]);
      const double b = gmax + yv(t) * grad[t];
      if (i < n && b > 0.0) {
        double a = kernel(i, i) + kernel(t, t) - 2.0 * kernel(i, t);
        if (a <= 0.0) a = kTau;
        const double obj = -(b * b) / a;
        if (obj <= obj_min) {
          obj_min = obj;
          j = t;
        }
      }
    }
    if (i == n || j == n || gmax + gmax2 < tolerance) break;

    const double old_ai = alpha[i], old_aj = alpha[j];
    double quad = kernel(i, i) + kernel(j, j) - 2.0 * kernel(i, j);
    if (quad <= 0.0) quad = kTau;
    if (y[i] != y[j]) {
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = -diff; }
      }
      if (diff > 0.0) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = c - diff; }
      } else {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = c + diff; }
      }
    } else {
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = sum - c; }
      } else {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = sum; }
      }
      if (sum > c) {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = sum - c; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = sum; }
      }
    }
    const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t)
      grad[t] += yv(t) * (yv(i) * kernel(t, i) * dai + yv(j) * kernel(t, j) * daj);
  }

  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = yv(t) * grad[t];
    if (is_upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (is_lower(t)) {
      if (y[t] == +1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free;
      sum_free += yg;
    }
  }

  BinarySvm svm;
  svm.gamma = gamma;
  svm.iterations = iter;
  svm.rho = free > 0 ? sum_free / static_cast<double>(free) : 0.5 * (ub + lb);
  std::vector<std::size_t> sv;
  for (std::size_t t = 0; t < n; ++t)
    if (alpha[t] > 0.0) sv.push_back(t);
  svm.support_vectors = FeatureMatrix(sv.size(), x.cols());
  for (std::size_t k = 0; k < sv.size(); ++k) {
    svm.support_vectors.set_row(k, x.row(sv[k]));
    svm.coef.push_back(alpha[sv[k]] * yv(sv[k]));
  }
  return svm;
}

// ---------------------------------------------------------------- classifier

SingletonClassifier SingletonClassifier::train(const FeatureMatrix& features, std::span<const int> labels,
                                               int num_labels, const ClassifierConfig& cfg) {
  if (features.rows() != labels.size()) throw InvariantError("cluster", "classifier: features/labels size mismatch");
  if (num_labels < 1) throw InvariantError("cluster", "classifier: need at least one label");
  SingletonClassifier m;
  m.strategy_ = cfg.strategy;
  const std::size_t d = features.cols();
  m.centroids_.assign(static_cast<std::size_t>(num_labels), std::vector<double>(d, 0.0));
  std::vector<std::size_t> count(static_cast<std::size_t>(num_labels), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_labels) throw InvariantError("cluster", "classifier: label out of range");
    auto& c = m.centroids_[static_cast<std::size_t>(labels[i])];
    const auto row = features.row(i);
    for (std::size_t k = 0; k < d; ++k) c[k] += row[k];
    ++count[static_cast<std::size_t>(labels[i])];
  }
  for (int l = 0; l < num_labels; ++l) {
    if (count[static_cast<std::size_t>(l)] == 0)
      throw InvariantError("cluster", "classifier: class " + std::to_string(l) + " is empty");
    auto& c = m.centroids_[static_cast<std::size_t>(l)];
    for (double& v : c) v /= static_cast<double>(count[static_cast<std::size_t>(l)]);
    if (!normalize_in_place(c)) throw InvariantError("cluster", "classifier: degenerate class centroid");
  }

  if (cfg.strategy == ClassifierStrategy::rbf_svm && num_labels > 1) {
    const double gamma = cfg.svm_gamma > 0.0 ? cfg.svm_gamma : 1.0 / static_cast<double>(d);
    const SquareMatrix gram = kernels::parallel::rbf_kernel(features, gamma);
    m.one_vs_rest_.resize(static_cast<std::size_t>(num_labels));
#pragma omp parallel for schedule(dynamic, 1)
    for (int l = 0; l < num_labels; ++l) {
      std::vector<int> y(labels.size());
      for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == l ? +1 : -1;
      m.one_vs_rest_[static_cast<std::size_t>(l)] = train_binary_svm(features, gram, y, cfg.svm_c, gamma);
    }
  }
  return m;
}

std::vector<double> SingletonClassifier::scores(std::span<const double> x) const {
  std::vector<double> s(centroids_.size());
  if (!one_vs_rest_.empty()) {
    for (std::size_t l = 0; l < s.size(); ++l) s[l] = one_vs_rest_[l].decision(x);
  } else {
    for (std::size_t l = 0; l < s.size(); ++l) s[l] = dot(centroids_[l], x);
  }
  return s;
}

int SingletonClassifier::predict(std::span<const double> x) const {
  const auto s = scores(x);
  return static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());  // first maximum: lower label wins
}

double SingletonClassifier::margin(std::span<const double> x) const {
  auto s = scores(x);
  if (s.size() < 2) return s.empty() ? 0.0 : s[0];
  std::partial_sort(s.begin(), s.begin() + 2, s.end(), std::greater<>());
  return s[0] - s[1];
}

std::vector<int> assign_singletons(const SingletonClassifier& model, std::span<const Detection> dets,
                                   std::span<const DetectionIndex> singles) {
  std::vector<int> out(singles.size());
  for (std::size_t i = 0; i < singles.size(); ++i) out[i] = model.predict(dets[singles[i]].embedding());
  return out;
}

// ------------------------------------------------------------------ evaluate

std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weight) {
  // Shortest augmenting path Hungarian method on cost = -weight, 1-based.
  const std::size_t n = weight.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -weight[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (std::size_t j = 1; j <= n; ++j)
    if (p[j]) row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  return row_to_col;
}

ConfusionResult confusion_matrix(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw InvariantError("cluster", "confusion_matrix: length mismatch");
  int k = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] < 0 || truth[i] < 0) throw InvariantError("cluster", "confusion_matrix: negative label");
    k = std::max({k, predicted[i] + 1, truth[i] + 1});
  }
  const auto kk = static_cast<std::size_t>(k);
  std::vector<std::vector<double>> overlap(kk, std::vector<double>(kk, 0.0));
  std::size_t raw_hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    overlap[static_cast<std::size_t>(predicted[i])][static_cast<std::size_t>(truth[i])] += 1.0;
    raw_hits += predicted[i] == truth[i];
  }
  ConfusionResult r;
  r.mapping = kk ? max_weight_assignment(overlap) : std::vector<int>{};
  r.matrix.assign(kk, std::vector<std::size_t>(kk, 0));
  for (std::size_t i = 0; i < predicted.size(); ++i)
    ++r.matrix[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(r.mapping[static_cast<std::size_t>(predicted[i])])];
  std::size_t hits = 0;
  for (std::size_t t = 0; t < kk; ++t) hits += r.matrix[t][t];
  const double total = static_cast<double>(predicted.size());
  r.accuracy = predicted.empty() ? 1.0 : static_cast<double>(hits) / total;
  r.raw_accuracy = predicted.empty() ? 1.0 : static_cast<double>(raw_hits) / total;
  return r;
}

std::vector<IdentityCluster> build_clusters(std::span<const Tracklet> tracklets, std::span<const int> tracklet_labels,
                                            std::span<const DetectionIndex> singletons,
                                            std::span<const int> singleton_labels, int k) {
  if (tracklets.size() != tracklet_labels.size() || singletons.size() != singleton_labels.size())
    throw InvariantError("cluster", "build_clusters: label count mismatch");
  std::vector<IdentityCluster> out(static_cast<std::size_t>(k));
  for (int l = 0; l < k; ++l) out[static_cast<std::size_t>(l)].label = l;
  for (std::size_t i = 0; i < tracklets.size(); ++i) {
    const int l = tracklet_labels[i];
    if (l < 0 || l >= k) throw InvariantError("cluster", "tracklet label out of range");
    auto& c = out[static_cast<std::size_t>(l)];
    c.tracklet_ids.push_back(tracklets[i].id());
    const auto f = tracklets[i].feature();
    if (c.centroid.empty()) c.centroid.assign(f.size(), 0.0);
    for (std::size_t d = 0; d < f.size(); ++d) c.centroid[d] += f[d];
  }
  for (std::size_t i = 0; i < singletons.size(); ++i) {
    const int l = singleton_labels[i];
    if (l < 0 || l >= k) throw InvariantError("cluster", "singleton label out of range");
    out[static_cast<std::size_t>(l)].singleton_detections.push_back(singletons[i]);
  }
  for (auto& c : out) {
    if (c.tracklet_ids.empty()) throw InvariantError("cluster", "cluster " + std::to_string(c.label) + " has no tracklets");
    for (double& v : c.centroid) v /= static_cast<double>(c.tracklet_ids.size());
    if (!normalize_in_place(c.centroid)) throw InvariantError("cluster", "degenerate cluster centroid");
  }
  return out;
}

}  // namespace gazeattn
