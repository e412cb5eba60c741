#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "seldyn/grid.hpp"

using namespace seldyn;

namespace {

// Plain-loop quadrature oracle, independent of the Eigen expressions in
// the library.
double sum_weighted(const Grid& grid, const Field& f, const Field& g) {
  double acc = 0.0;
  for (int i = 0; i < grid.size(); ++i) acc += grid.weights()[i] * f[i] * g[i];
  return acc;
}

Field random_field(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Field f = Field::zeros(n);
  for (int i = 0; i < n; ++i) f[i] = dist(rng);
  return f;
}

KernelSlice random_kernel(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  KernelSlice k = KernelSlice::zeros(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) k.values(i, j) = dist(rng);
  return k;
}

}  // namespace

TEST_CASE("trapezoid weights on the smallest grids") {
  const Grid two = Grid::make_uniform(2, {0.0, 1.0});
  CHECK(two.nodes()[0] == 0.0);
  CHECK(two.nodes()[1] == 1.0);
  CHECK(two.weights()[0] == 0.5);
  CHECK(two.weights()[1] == 0.5);

  const Grid three = Grid::make_uniform(3, {0.0, 1.0});
  CHECK(three.weights()[0] == 0.25);
  CHECK(three.weights()[1] == 0.5);
  CHECK(three.weights()[2] == 0.25);
}

TEST_CASE("weights sum to the domain width and nodes hit the endpoints") {
  const Grid grid = Grid::make_uniform(5, {-1.0, 2.0});
  CHECK(grid.weights().sum() == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(grid.nodes()[0] == -1.0);
  CHECK(grid.nodes()[4] == 2.0);
  for (int i = 1; i < 5; ++i)
    CHECK(grid.nodes()[i] - grid.nodes()[i - 1] == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("trapezoid rule integrates a parabola to second order") {
  const Grid grid = Grid::make_uniform(101, {0.0, 1.0});
  Field f = Field::zeros(grid.size());
  for (int i = 0; i < grid.size(); ++i) f[i] = grid.nodes()[i] * grid.nodes()[i];
  const Field one = Field::constant(grid.size(), 1.0);
  // exact value 1/3; composite trapezoid error is h^2/12 * width * f'' = 1.67e-5
  CHECK(std::abs(inner_product(f, one, grid) - 1.0 / 3.0) < 1e-3);
  CHECK(std::abs(inner_product(f, one, grid) - 1.0 / 3.0) < 2e-5);
}

TEST_CASE("grid construction rejects bad sizes and empty domains") {
  CHECK_THROWS_AS(Grid::make_uniform(1, {0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Grid::make_uniform(0, {0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Grid::make_uniform(4, {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Grid::make_uniform(4, {2.0, 1.0}), std::invalid_argument);
}

TEST_CASE("time grid spacing and validation") {
  const TimeGrid time(2.0, 8);
  CHECK(time.dt() == 0.25);
  CHECK(time.time_at(0) == 0.0);
  CHECK(time.time_at(8) == 2.0);
  CHECK_THROWS_AS(TimeGrid(0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid(1.0, 0), std::invalid_argument);
}

TEST_CASE("inner product and norms agree with plain-loop sums") {
  std::mt19937 rng(7);
  const Grid grid = Grid::make_uniform(17, {0.0, 1.0});
  const Field f = random_field(grid.size(), rng);
  const Field g = random_field(grid.size(), rng);

  CHECK(inner_product(f, g, grid) == doctest::Approx(sum_weighted(grid, f, g)).epsilon(1e-14));
  CHECK(norm_l2(f, grid) ==
        doctest::Approx(std::sqrt(sum_weighted(grid, f, f))).epsilon(1e-14));

  double l1 = 0.0;
  for (int i = 0; i < grid.size(); ++i) l1 += grid.weights()[i] * std::abs(f[i]);
  CHECK(norm_l1(f, grid) == doctest::Approx(l1).epsilon(1e-14));
}

TEST_CASE("kernel application matches the weighted double sum") {
  std::mt19937 rng(11);
  const Grid grid = Grid::make_uniform(13, {0.0, 1.0});
  const int n = grid.size();
  const KernelSlice k = random_kernel(n, rng);
  const Field f = random_field(n, rng);

  const Field got = apply_kernel(k, f, grid);
  for (int i = 0; i < n; ++i) {
    double want = 0.0;
    for (int j = 0; j < n; ++j) want += k.values(i, j) * grid.weights()[j] * f[j];
    CHECK(got[i] == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("kernel application is linear") {
  std::mt19937 rng(13);
  const Grid grid = Grid::make_uniform(9, {0.0, 1.0});
  const KernelSlice k = random_kernel(grid.size(), rng);
  const Field f = random_field(grid.size(), rng);
  const Field g = random_field(grid.size(), rng);

  const Field combined(2.0 * f.values - 3.0 * g.values);
  const Field lhs = apply_kernel(k, combined, grid);
  const Field rhs(2.0 * apply_kernel(k, f, grid).values - 3.0 * apply_kernel(k, g, grid).values);
  CHECK((lhs.values - rhs.values).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("transposing the sample matrix transposes the operator") {
  // <B_k f, g> == <f, B_{k^T} g> under the weighted inner product
  std::mt19937 rng(17);
  const Grid grid = Grid::make_uniform(21, {0.0, 2.0});
  const KernelSlice k = random_kernel(grid.size(), rng);
  for (int trial = 0; trial < 5; ++trial) {
    const Field f = random_field(grid.size(), rng);
    const Field g = random_field(grid.size(), rng);
    const double lhs = inner_product(apply_kernel(k, f, grid), g, grid);
    const double rhs = inner_product(f, apply_kernel(k.transposed(), g, grid), grid);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("constant kernel has unit-scaled L2 norm on the unit square") {
  const Grid grid = Grid::make_uniform(33, {0.0, 1.0});
  const KernelSlice k = KernelSlice::constant(grid.size(), -2.5);
  // integral of c^2 over [0,1]^2 is c^2, so the norm is |c|
  CHECK(kernel_l2_norm(k, grid) == doctest::Approx(2.5).epsilon(1e-13));
}

TEST_CASE("kernel inner product is consistent with the kernel norm") {
  std::mt19937 rng(19);
  const Grid grid = Grid::make_uniform(11, {0.0, 1.0});
  const KernelSlice k = random_kernel(grid.size(), rng);
  const double norm = kernel_l2_norm(k, grid);
  CHECK(kernel_inner_product(k, k, grid) == doctest::Approx(norm * norm).epsilon(1e-13));

  double direct = 0.0;
  for (int i = 0; i < grid.size(); ++i)
    for (int j = 0; j < grid.size(); ++j)
      direct += grid.weights()[i] * grid.weights()[j] * k.values(i, j) * k.values(i, j);
  CHECK(kernel_inner_product(k, k, grid) == doctest::Approx(direct).epsilon(1e-13));
}

TEST_CASE("apply_kernel validates sizes") {
  const Grid grid = Grid::make_uniform(6, {0.0, 1.0});
  const KernelSlice k = KernelSlice::zeros(5);
  const Field f = Field::zeros(6);
  CHECK_THROWS_AS(apply_kernel(k, f, grid), std::invalid_argument);
  const KernelSlice ok = KernelSlice::zeros(6);
  const Field bad = Field::zeros(4);
  CHECK_THROWS_AS(apply_kernel(ok, bad, grid), std::invalid_argument);
}
