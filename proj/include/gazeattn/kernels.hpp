#pragma once

// Data-parallel numeric kernels. Each kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::parallel; both produce
// bit-identical results for any thread count (every output element is
// written by exactly one iteration and no reduction crosses threads).

#include <cstdint>
#include <vector>

#include "gazeattn/image.hpp"
#include "gazeattn/linalg.hpp"

namespace gazeattn::kernels {

struct BlockMotion {
  int x = 0;  // top-left of the block in the first frame
  int y = 0;
  int dx = 0;
  int dy = 0;
  std::uint32_t sad = 0;
  bool kept = false;  // false when the block was rejected for low variance
  friend bool operator==(const BlockMotion&, const BlockMotion&) = default;
};

// Blocks whose intensity variance is below this are not matched.
inline constexpr double kMinBlockVariance = 1.0;

// Top-left corners of the blocks tiled over the interior of a width x height
// frame, inset by search_radius so that every candidate displacement stays
// in bounds.
std::vector<std::pair<int, int>> block_grid(int width, int height, int block_size, int search_radius);

namespace serial {

// ||f_i - f_j||^2 for all pairs.
SquareMatrix pairwise_sq_distances(const FeatureMatrix& features);

// exp(-gamma ||f_i - f_j||^2) for all pairs.
SquareMatrix rbf_kernel(const FeatureMatrix& features, double gamma);

// Exhaustive SAD block search of frame_a blocks inside frame_b. Ties go to
// the smaller |d|, then smaller dy, then smaller dx.
std::vector<BlockMotion> block_motion(const GrayImage& a, const GrayImage& b, int block_size, int search_radius);

}  // namespace serial

namespace parallel {

SquareMatrix pairwise_sq_distances(const FeatureMatrix& features);
SquareMatrix rbf_kernel(const FeatureMatrix& features, double gamma);
std::vector<BlockMotion> block_motion(const GrayImage& a, const GrayImage& b, int block_size, int search_radius);

}  // namespace parallel

}  // namespace gazeattn::kernels
