#pragma once

#include <span>
#include <vector>

#include "gazeattn/linalg.hpp"
#include "gazeattn/types.hpp"

namespace gazeattn {

// Ward agglomerative clustering. Costs are Ward merge costs
// |A||B|/(|A|+|B|) ||mean_A - mean_B||^2, so two singletons merge at
// ||f_i - f_j||^2 / 2. Distances are updated with the Lance-Williams
// recurrence; the globally cheapest pair merges at each step, ties broken by
// (smaller left node id, smaller right node id).
Dendrogram ward_linkage(const FeatureMatrix& features);

// Labels per leaf after undoing the last k-1 merges. Labels are numbered by
// ascending smallest leaf index.
std::vector<int> cut(const Dendrogram& d, int k);

// Binary RBF SVM in dual form: f(x) = sum_i coef_i K(sv_i, x) - rho.
struct BinarySvm {
  FeatureMatrix support_vectors;
  std::vector<double> coef;  // alpha_i * y_i
  double rho = 0.0;
  double gamma = 1.0;
  std::size_t iterations = 0;

  double decision(std::span<const double> x) const;
};

// Sequential minimal optimization with second-order working set selection,
// stopped when the maximal KKT violation drops below tolerance.
// kernel is the precomputed Gram matrix of the training rows, y in {-1,+1}.
BinarySvm train_binary_svm(const FeatureMatrix& x, const SquareMatrix& kernel, std::span<const int> y, double c,
                           double gamma, double tolerance = 1e-3);

// Maps a unit embedding to one of the cluster labels.
class SingletonClassifier {
 public:
  // labels in [0, num_labels); every label needs at least one feature row.
  static SingletonClassifier train(const FeatureMatrix& features, std::span<const int> labels, int num_labels,
                                   const ClassifierConfig& cfg);

  int predict(std::span<const double> x) const;

  // Best score minus runner-up score; larger means more confident. With a
  // single label the best score itself.
  double margin(std::span<const double> x) const;

  ClassifierStrategy strategy() const { return strategy_; }
  const std::vector<std::vector<double>>& centroids() const { return centroids_; }

 private:
  std::vector<double> scores(std::span<const double> x) const;

  ClassifierStrategy strategy_ = ClassifierStrategy::nearest_centroid;
  std::vector<std::vector<double>> centroids_;  // renormalized per-label means
  std::vector<BinarySvm> one_vs_rest_;
};

std::vector<int> assign_singletons(const SingletonClassifier& model, std::span<const Detection> dets,
                                   std::span<const DetectionIndex> singles);

struct ConfusionResult {
  // matrix[t][p]: detections of true label t predicted (after alignment) as p.
  std::vector<std::vector<std::size_t>> matrix;
  std::vector<int> mapping;  // predicted label -> aligned label
  double accuracy = 0.0;     // after alignment
  double raw_accuracy = 0.0; // before alignment
};

// Predicted labels are aligned to truth by maximum total overlap (Hungarian
// assignment) before tabulating.
ConfusionResult confusion_matrix(std::span<const int> predicted, std::span<const int> truth);

// Maximum-weight perfect matching on a square matrix; returns row -> column.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weight);

// Clusters with tracklet members, singleton members and renormalized centroid
// of member tracklet features. Gender fields are left unknown.
std::vector<IdentityCluster> build_clusters(std::span<const Tracklet> tracklets, std::span<const int> tracklet_labels,
                                            std::span<const DetectionIndex> singletons,
                                            std::span<const int> singleton_labels, int k);

}  // namespace gazeattn
