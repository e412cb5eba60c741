#include "seldyn/grid.hpp"

#include <cmath>

namespace seldyn {

Grid Grid::make_uniform(int n, Interval domain) {
  detail::require(n >= 2, "Grid: need at least two nodes");
  detail::require(domain.width() > 0.0, "Grid: domain must have positive width");

  Eigen::VectorXd nodes(n);
  Eigen::VectorXd weights(n);
  const double h = domain.width() / (n - 1);
  for (int i = 0; i < n; ++i) {
    nodes[i] = domain.lo + i * h;
    weights[i] = (i == 0 || i == n - 1) ? 0.5 * h : h;
  }
  // Endpoint node lands exactly on hi regardless of rounding.
  nodes[n - 1] = domain.hi;
  return Grid(std::move(nodes), std::move(weights), domain);
}

double inner_product(const Field& f, const Field& g, const Grid& grid) {
  detail::require(f.size() == grid.size() && g.size() == grid.size(),
                  "inner_product: field length must match grid");
  return (grid.weights().array() * f.values.array() * g.values.array()).sum();
}

double norm_l2(const Field& f, const Grid& grid) {
  return std::sqrt(inner_product(f, f, grid));
}

double norm_l1(const Field& f, const Grid& grid) {
  detail::require(f.size() == grid.size(), "norm_l1: field length must match grid");
  return (grid.weights().array() * f.values.array().abs()).sum();
}

Field apply_kernel(const KernelSlice& k, const Field& f, const Grid& grid) {
  const int n = grid.size();
  detail::require(k.size() == n && k.values.cols() == n,
                  "apply_kernel: kernel slice must be n-by-n for the grid");
  detail::require(f.size() == n, "apply_kernel: field length must match grid");
  return Field(k.values * grid.weights().cwiseProduct(f.values));
}

double kernel_l2_norm(const KernelSlice& k, const Grid& grid) {
  return std::sqrt(kernel_inner_product(k, k, grid));
}

double kernel_inner_product(const KernelSlice& a, const KernelSlice& b, const Grid& grid) {
  const int n = grid.size();
  detail::require(a.size() == n && b.size() == n,
                  "kernel_inner_product: slices must match grid");
  const Eigen::VectorXd& w = grid.weights();
  // sum_ij w_i w_j a_ij b_ij, accumulated row by row for determinism.
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    total += w[i] * (a.values.row(i).array() * b.values.row(i).array() *
                     w.transpose().array())
                        .sum();
  }
  return total;
}

}  // namespace seldyn
