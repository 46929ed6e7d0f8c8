#include <omp.h>

#include "doctest.h"
#include "gazeattn/kernels.hpp"
#include "gazeattn/rng.hpp"

using namespace gazeattn;

namespace {

FeatureMatrix random_features(std::uint64_t seed, std::size_t n, std::size_t d) {
  SplitMix64 rng(seed);
  FeatureMatrix f(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (double& v : f.row(i)) v = rng.normal();
  return f;
}

GrayImage noise_image(std::uint64_t seed, int w, int h) {
  SplitMix64 rng(seed);
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

// Content of `a` moved by (dx, dy); uncovered pixels are filled from `fill`.
GrayImage shifted(const GrayImage& a, int dx, int dy, const GrayImage& fill) {
  GrayImage b = fill;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      const int sx = x - dx, sy = y - dy;
      if (sx >= 0 && sy >= 0 && sx < a.width() && sy < a.height()) b.at(x, y) = a.at(sx, sy);
    }
  return b;
}

struct ThreadScope {
  int saved = omp_get_max_threads();
  explicit ThreadScope(int n) { omp_set_num_threads(n); }
  ~ThreadScope() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_CASE("splitmix64 reference outputs") {
  SplitMix64 g(0);
  CHECK(g.next() == 0xE220A8397B1DCDAFULL);
  CHECK(g.next() == 0x6E789E6AA1B965F4ULL);
  CHECK(g.next() == 0x06C45D188009454FULL);
  SplitMix64 u(7);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK((x >= 0.0 && x < 1.0));
    CHECK(u.below(5) < 5u);
  }
}

TEST_CASE("pairwise distances and rbf kernel match direct evaluation") {
  const FeatureMatrix f = random_features(3, 17, 5);
  const SquareMatrix d = kernels::serial::pairwise_sq_distances(f);
  const SquareMatrix k = kernels::serial::rbf_kernel(f, 0.2);
  for (std::size_t i = 0; i < 17; ++i)
    for (std::size_t j = 0; j < 17; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < 5; ++c) s += (f.row(i)[c] - f.row(j)[c]) * (f.row(i)[c] - f.row(j)[c]);
      CHECK(d(i, j) == doctest::Approx(s).epsilon(1e-12));
      CHECK(d(i, j) == d(j, i));
      CHECK(k(i, j) == doctest::Approx(std::exp(-0.2 * s)).epsilon(1e-12));
    }
  CHECK(k(4, 4) == 1.0);
}

TEST_CASE("parallel kernels are bit-identical to serial at any thread count") {
  const FeatureMatrix f = random_features(11, 150, 16);
  const auto d_ref = kernels::serial::pairwise_sq_distances(f).data();
  const auto k_ref = kernels::serial::rbf_kernel(f, 1.0 / 16).data();
  const GrayImage a = noise_image(5, 96, 80);
  const GrayImage b = shifted(a, 2, -1, noise_image(6, 96, 80));
  const auto m_ref = kernels::serial::block_motion(a, b, 16, 4);
  for (int threads : {1, 2, 4, 8}) {
    CAPTURE(threads);
    ThreadScope scope(threads);
    CHECK(kernels::parallel::pairwise_sq_distances(f).data() == d_ref);
    CHECK(kernels::parallel::rbf_kernel(f, 1.0 / 16).data() == k_ref);
    CHECK(kernels::parallel::block_motion(a, b, 16, 4) == m_ref);
  }
}

TEST_CASE("block grid is inset by the search radius") {
  const auto g = kernels::block_grid(64, 48, 16, 8);
  // Blocks must end by 64 - 8 and 48 - 8: x in {8, 24, 40}, y in {8, 24}.
  const std::vector<std::pair<int, int>> want{{8, 8}, {24, 8}, {40, 8}, {8, 24}, {24, 24}, {40, 24}};
  CHECK(g == want);
  CHECK(kernels::block_grid(64, 47, 16, 8).size() == 3);
  CHECK(kernels::block_grid(20, 20, 16, 8).empty());
}

TEST_CASE("block search recovers a known displacement") {
  const GrayImage a = noise_image(9, 80, 64);
  for (auto [dx, dy] : {std::pair{3, 0}, std::pair{0, -2}, std::pair{-4, 4}}) {
    const GrayImage b = shifted(a, dx, dy, noise_image(10, 80, 64));
    for (const auto& m : kernels::serial::block_motion(a, b, 16, 4)) {
      CHECK(m.kept);
      CHECK(m.dx == dx);
      CHECK(m.dy == dy);
      CHECK(m.sad == 0u);
    }
  }
}

TEST_CASE("flat blocks are skipped and ties prefer the smallest displacement") {
  const GrayImage flat(48, 48, 128);
  for (const auto& m : kernels::serial::block_motion(flat, flat, 16, 4)) CHECK_FALSE(m.kept);

  // Vertical stripes of period 2 match equally at every even dx; zero wins.
  GrayImage stripes(48, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) stripes.at(x, y) = x % 2 ? 200 : 10;
  for (const auto& m : kernels::serial::block_motion(stripes, stripes, 16, 4)) {
    CHECK(m.kept);
    CHECK(m.dx == 0);
    CHECK(m.dy == 0);
  }
  // Shifted by one column: dx = -1 and dx = +1 tie on SAD and |d|; smaller dx wins.
  const GrayImage moved = shifted(stripes, 1, 0, stripes);
  for (const auto& m : kernels::parallel::block_motion(stripes, moved, 16, 4)) CHECK(m.dx == -1);
  CHECK(kernels::serial::block_motion(stripes, moved, 16, 4) == kernels::parallel::block_motion(stripes, moved, 16, 4));
}
