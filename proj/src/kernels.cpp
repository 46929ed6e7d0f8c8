#include "gazeattn/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <tuple>

namespace gazeattn::kernels {

namespace {

double block_variance(const GrayImage& a, int x0, int y0, int bs) {
  double sum = 0.0, sum2 = 0.0;
  for (int y = y0; y < y0 + bs; ++y) {
    const std::uint8_t* r = a.row(y);
    for (int x = x0; x < x0 + bs; ++x) {
      sum += r[x];
      sum2 += static_cast<double>(r[x]) * r[x];
    }
  }
  const double n = static_cast<double>(bs) * bs;
  const double mean = sum / n;
  return sum2 / n - mean * mean;
}

// Lexicographic candidate order: (sad, |d|^2, dy, dx).
bool better(std::uint32_t sad, int dx, int dy, const BlockMotion& best) {
  return std::make_tuple(sad, dx * dx + dy * dy, dy, dx) <
         std::make_tuple(best.sad, best.dx * best.dx + best.dy * best.dy, best.dy, best.dx);
}

// Early-exit SAD search used by the parallel path.
BlockMotion match_block_fast(const GrayImage& a, const GrayImage& b, int x0, int y0, int bs, int radius) {
  BlockMotion best{x0, y0, 0, 0, std::numeric_limits<std::uint32_t>::max(), true};
  // Start from the zero displacement so static scenes exit early.
  best.sad = 0;
  for (int y = 0; y < bs; ++y) {
    const std::uint8_t* ra = a.row(y0 + y) + x0;
    const std::uint8_t* rb = b.row(y0 + y) + x0;
    for (int x = 0; x < bs; ++x) best.sad += static_cast<std::uint32_t>(std::abs(ra[x] - rb[x]));
  }
  if (best.sad == 0) return best;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx == 0 && dy == 0) continue;
      std::uint32_t sad = 0;
      bool pruned = false;
      for (int y = 0; y < bs && !pruned; ++y) {
        const std::uint8_t* ra = a.row(y0 + y) + x0;
        const std::uint8_t* rb = b.row(y0 + y + dy) + x0 + dx;
        for (int x = 0; x < bs; ++x) sad += static_cast<std::uint32_t>(std::abs(ra[x] - rb[x]));
        pruned = sad > best.sad;
      }
      if (!pruned && better(sad, dx, dy, best)) {
        best.sad = sad;
        best.dx = dx;
        best.dy = dy;
      }
    }
  }
  return best;
}

}  // namespace

std::vector<std::pair<int, int>> block_grid(int width, int height, int block_size, int search_radius) {
  std::vector<std::pair<int, int>> grid;
  for (int y = search_radius; y + block_size <= height - search_radius; y += block_size)
    for (int x = search_radius; x + block_size <= width - search_radius; x += block_size) grid.emplace_back(x, y);
  return grid;
}

namespace serial {

SquareMatrix pairwise_sq_distances(const FeatureMatrix& f) {
  const std::size_t n = f.rows();
  SquareMatrix d(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d(i, j) = i == j ? 0.0 : squared_distance(f.row(i), f.row(j));
  return d;
}

SquareMatrix rbf_kernel(const FeatureMatrix& f, double gamma) {
  const std::size_t n = f.rows();
  SquareMatrix k(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) k(i, j) = i == j ? 1.0 : std::exp(-gamma * squared_distance(f.row(i), f.row(j)));
  return k;
}

std::vector<BlockMotion> block_motion(const GrayImage& a, const GrayImage& b, int bs, int radius) {
  std::vector<BlockMotion> out;
  for (auto [x0, y0] : block_grid(a.width(), a.height(), bs, radius)) {
    BlockMotion best{x0, y0, 0, 0, std::numeric_limits<std::uint32_t>::max(), false};
    if (block_variance(a, x0, y0, bs) < kMinBlockVariance) {
      best.sad = 0;
      out.push_back(best);
      continue;
    }
    best.kept = true;
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        std::uint32_t sad = 0;
        for (int y = 0; y < bs; ++y)
          for (int x = 0; x < bs; ++x)
            sad += static_cast<std::uint32_t>(std::abs(a.at(x0 + x, y0 + y) - b.at(x0 + x + dx, y0 + y + dy)));
        if (better(sad, dx, dy, best)) {
          best.sad = sad;
          best.dx = dx;
          best.dy = dy;
        }
      }
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace serial

namespace parallel {

SquareMatrix pairwise_sq_distances(const FeatureMatrix& f) {
  const auto n = static_cast<std::int64_t>(f.rows());
  SquareMatrix d(f.rows());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j) {
      const double v = squared_distance(f.row(i), f.row(j));
      d(i, j) = v;
      d(j, i) = v;
    }
  return d;
}

SquareMatrix rbf_kernel(const FeatureMatrix& f, double gamma) {
  const auto n = static_cast<std::int64_t>(f.rows());
  SquareMatrix k(f.rows(), 1.0);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j) {
      const double v = std::exp(-gamma * squared_distance(f.row(i), f.row(j)));
      k(i, j) = v;
      k(j, i) = v;
    }
  return k;
}

std::vector<BlockMotion> block_motion(const GrayImage& a, const GrayImage& b, int bs, int radius) {
  const auto grid = block_grid(a.width(), a.height(), bs, radius);
  std::vector<BlockMotion> out(grid.size());
  const auto n = static_cast<std::int64_t>(grid.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto [x0, y0] = grid[i];
    if (block_variance(a, x0, y0, bs) < kMinBlockVariance)
      out[i] = BlockMotion{x0, y0, 0, 0, 0, false};
    else
      out[i] = match_block_fast(a, b, x0, y0, bs, radius);
  }
  return out;
}

}  // namespace parallel

}  // namespace gazeattn::kernels
