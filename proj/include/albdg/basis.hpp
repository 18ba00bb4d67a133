#pragma once

#include <Eigen/SVD>

#include <cmath>
#include <vector>

#include "albdg/error.hpp"
#include "albdg/grid.hpp"
#include "albdg/lgl.hpp"
#include "albdg/mesh.hpp"
#include "albdg/parallel.hpp"
#include "albdg/spectral.hpp"

namespace albdg {

/// Traces of one element's basis on one of its faces, at the face nodes.
struct FaceTrace {
  Mat values;                  // n_face x J
  std::vector<Mat> gradients;  // d components, n_face x J
};

/// Orthonormal local basis of one element sampled on its LGL grid.
struct ElementBasis {
  int element = 0;
  Mat values;                  // n_lgl x J
  std::vector<Mat> gradients;  // d components
  Mat laplacians;
  std::vector<FaceTrace> traces;  // 2d entries: 2k = lower side of axis k, 2k+1 = upper side
  bool truncated = false;

  int count() const { return static_cast<int>(values.cols()); }

  const FaceTrace& trace(int axis, bool upper) const { return traces[static_cast<std::size_t>(2 * axis + (upper ? 1 : 0))]; }
};

inline ElementBasis make_element_basis(const Mesh& mesh, int element, Mat values, std::vector<Mat> gradients,
                                       Mat laplacians) {
  ElementBasis b;
  b.element = element;
  b.values = std::move(values);
  b.gradients = std::move(gradients);
  b.laplacians = std::move(laplacians);
  for (int k = 0; k < mesh.dim(); ++k) {
    for (bool upper : {false, true}) {
      const auto nodes = mesh.face_slice(k, upper);
      FaceTrace t;
      t.values = b.values(nodes, Eigen::all);
      for (const auto& g : b.gradients) t.gradients.push_back(g(nodes, Eigen::all));
      b.traces.push_back(std::move(t));
    }
  }
  return b;
}

/// J_K = 0: the element carries no basis functions.
inline ElementBasis empty_basis(const Mesh& mesh, int element) {
  const auto n = static_cast<Eigen::Index>(mesh.lgl_points());
  return make_element_basis(mesh, element, Mat(n, 0), std::vector<Mat>(static_cast<std::size_t>(mesh.dim()), Mat(n, 0)),
                            Mat(n, 0));
}

/// Linear recombination: new basis function j = sum_i old_i * coeffs(i, j).
inline ElementBasis combine(const Mesh& mesh, const ElementBasis& b, const Mat& coeffs) {
  std::vector<Mat> grads;
  for (const auto& g : b.gradients) grads.push_back(g * coeffs);
  auto out = make_element_basis(mesh, b.element, b.values * coeffs, std::move(grads), b.laplacians * coeffs);
  out.truncated = b.truncated;
  return out;
}

/// Orthonormalizes nodal functions under the element LGL inner product via
/// SVD of the weighted sample matrix, dropping directions with
/// sigma < tol * sigma_max. Output is ordered by decreasing singular value.
inline ElementBasis orthonormalize(const Mesh& mesh, const ElementBasis& raw, double tol, int keep) {
  if (raw.count() == 0 || keep == 0) return combine(mesh, raw, Mat::Zero(raw.count(), 0));
  const Vec sqrt_w = mesh.element_weights.cwiseSqrt();
  const Mat weighted = sqrt_w.asDiagonal() * raw.values;
  Eigen::JacobiSVD<Mat> svd(weighted, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sigma = svd.singularValues();
  int rank = 0;
  while (rank < sigma.size() && sigma[rank] >= tol * sigma[0] && sigma[rank] > 0.0) ++rank;
  const int kept = std::min(rank, keep);
  const Mat coeffs = svd.matrixV().leftCols(kept) * sigma.head(kept).cwiseInverse().asDiagonal();
  auto out = combine(mesh, raw, coeffs);
  out.truncated = raw.truncated || kept < keep;
  return out;
}

struct BasisOptions {
  double svd_tol = 1e-8;
  bool enforce_constant_mode = true;
  int local_refine = 1;   // local grid spacing = global spacing / local_refine
  int local_count = 48;   // upper bound on J_K (number of local eigenpairs available)
};

/// Makes the normalized characteristic function 1_K/sqrt|K| the first basis
/// function and re-orthonormalizes the others against it, dropping the
/// weakest direction so J_K is unchanged.
inline ElementBasis ensure_constant_mode(const Mesh& mesh, const ElementBasis& basis, double tol = 1e-8) {
  const int j = basis.count();
  if (j == 0) return basis;
  const auto n = basis.values.rows();
  const double c = 1.0 / std::sqrt(mesh.element_volume());

  // Augmented raw set [1_K/sqrt|K|, phi_1..phi_J].
  Mat values(n, j + 1);
  values.col(0).setConstant(c);
  values.rightCols(j) = basis.values;
  std::vector<Mat> grads;
  for (const auto& g : basis.gradients) {
    Mat a = Mat::Zero(n, j + 1);
    a.rightCols(j) = g;
    grads.push_back(std::move(a));
  }
  Mat laps = Mat::Zero(n, j + 1);
  laps.rightCols(j) = basis.laplacians;
  const auto augmented = make_element_basis(mesh, basis.element, values, grads, laps);

  const Vec& w = mesh.element_weights;
  const Vec overlap = basis.values.transpose() * (w * c);  // <phi_i, 1_K/sqrt|K|>
  const Mat projected = basis.values - Vec::Constant(n, c) * overlap.transpose();
  Eigen::JacobiSVD<Mat> svd(w.cwiseSqrt().asDiagonal() * projected, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sigma = svd.singularValues();
  int rank = 0;
  const double ref = std::max(sigma.size() > 0 ? sigma[0] : 0.0, 1.0);
  while (rank < sigma.size() && sigma[rank] >= tol * ref) ++rank;
  const int kept = std::min(rank, j - 1);
  const Mat rest = svd.matrixV().leftCols(kept) * sigma.head(kept).cwiseInverse().asDiagonal();

  Mat coeffs = Mat::Zero(j + 1, kept + 1);
  coeffs(0, 0) = 1.0;
  coeffs.block(0, 1, 1, kept) = -overlap.transpose() * rest;
  coeffs.block(1, 1, j, kept) = rest;
  auto out = combine(mesh, augmented, coeffs);
  out.truncated = basis.truncated || kept < j - 1;
  return out;
}

/// Samples grid fields on Q_K (columns) at the LGL nodes of K: values,
/// gradients and Laplacians of their trigonometric interpolants.
inline ElementBasis sample_on_element(const Mesh& mesh, int element, const Mat& fields, const Box& qbox,
                                      const std::vector<int>& qgrid) {
  const int d = mesh.dim();
  std::vector<std::array<Mat, 3>> ops(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    auto pts = mesh.lgl_coords(element, k);
    for (double& x : pts) x -= qbox.lo[k];
    const double len = qbox.hi[k] - qbox.lo[k];
    for (int der = 0; der < 3; ++der) ops[k][der] = periodic_interp_matrix(qgrid[k], len, pts, der);
  }
  const auto n = static_cast<Eigen::Index>(mesh.lgl_points());
  const auto j = fields.cols();
  Mat values(n, j), laps = Mat::Zero(n, j);
  std::vector<Mat> grads(static_cast<std::size_t>(d), Mat(n, j));
  auto apply = [&](const Vec& f, int axis, int der) {
    std::vector<const Mat*> p;
    for (int k = 0; k < d; ++k) p.push_back(&ops[k][k == axis ? der : 0]);
    return apply_separable(f, qgrid, p);
  };
  for (Eigen::Index c = 0; c < j; ++c) {
    const Vec f = fields.col(c);
    values.col(c) = apply(f, 0, 0);
    for (int k = 0; k < d; ++k) {
      grads[k].col(c) = apply(f, k, 1);
      laps.col(c) += apply(f, k, 2);
    }
  }
  return make_element_basis(mesh, element, values, grads, laps);
}

/// Restricts local eigenfunctions from Q_K to K, orthonormalizes them by SVD
/// and (optionally) enforces the constant mode.
inline ElementBasis restrict_orthonormalize(const Mesh& mesh, const LocalEigenSet& set, int element, int target,
                                            const BasisOptions& opts = {}) {
  require(target >= 0, "restrict_orthonormalize: target must be >= 0");
  require(target <= set.count(), "restrict_orthonormalize: local set has fewer vectors than requested");
  const auto raw = sample_on_element(mesh, element, set.vectors.leftCols(target), set.box, set.grid);
  auto basis = orthonormalize(mesh, raw, opts.svd_tol, target);
  if (opts.enforce_constant_mode) basis = ensure_constant_mode(mesh, basis, opts.svd_tol);
  return basis;
}

/// The broken space spanned by all element bases, extended by zero.
struct BasisFamily {
  std::vector<ElementBasis> elements;
  std::vector<int> offsets;
  int total_dof = 0;

  BasisFamily() = default;
  explicit BasisFamily(std::vector<ElementBasis> bases) : elements(std::move(bases)) {
    for (const auto& b : elements) {
      offsets.push_back(total_dof);
      total_dof += b.count();
    }
  }

  std::vector<int> counts() const {
    std::vector<int> c;
    for (const auto& b : elements) c.push_back(b.count());
    return c;
  }
  int count(int element) const { return elements[static_cast<std::size_t>(element)].count(); }
  bool truncated() const {
    for (const auto& b : elements)
      if (b.truncated) return true;
    return false;
  }
};

/// Builds the adaptive local basis for counts J_K from a global potential.
inline BasisFamily build_alb_family(const Mesh& mesh, const Vec& potential, const std::vector<int>& counts,
                                    const BasisOptions& opts = {}) {
  require(static_cast<int>(counts.size()) == mesh.num_elements(), "build_alb_family: one count per element");
  std::vector<ElementBasis> bases(counts.size());
  parallel_for(counts.size(), [&](std::size_t e) {
    const int target = counts[e];
    require(target >= 0 && target <= opts.local_count, "build_alb_family: count outside [0, local_count]");
    const auto q = extended_element(mesh, static_cast<int>(e), opts.local_refine);
    if (target == 0) {
      bases[e] = empty_basis(mesh, static_cast<int>(e));
      return;
    }
    const auto problem = local_problem(mesh, q, potential);
    auto set = solve_local(problem, target);
    set.element = static_cast<int>(e);
    bases[e] = restrict_orthonormalize(mesh, set, static_cast<int>(e), target, opts);
  });
  return BasisFamily(std::move(bases));
}

/// Orthonormalized tensor Legendre polynomials of degree <= `degree` per axis
/// (a broken polynomial space, used as a cross-check family).
inline BasisFamily polynomial_family(const Mesh& mesh, int degree) {
  const int d = mesh.dim();
  for (int k = 0; k < d; ++k)
    require(degree <= mesh.lgl_orders[k] - 2, "polynomial_family: degree too high for the LGL grid");
  std::vector<int> dims(static_cast<std::size_t>(d), degree + 1);
  const std::size_t nfun = product(dims);
  const auto npts = static_cast<Eigen::Index>(mesh.lgl_points());
  std::vector<ElementBasis> bases;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    std::vector<Mat> p1d, d1d;  // per axis: values (nodes x degree+1) and physical derivatives
    for (int k = 0; k < d; ++k) {
      const Vec& x = mesh.rules[k].nodes;
      Mat v(x.size(), degree + 1);
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const auto p = legendre_values(degree, x[i]);
        for (int m = 0; m <= degree; ++m) v(i, m) = p[m];
      }
      p1d.push_back(v);
      d1d.push_back(lagrange_diff_matrix(x) * (2.0 / mesh.element_size[k]));
    }
    Mat values(npts, static_cast<Eigen::Index>(nfun)), laps = Mat::Zero(npts, static_cast<Eigen::Index>(nfun));
    std::vector<Mat> grads(static_cast<std::size_t>(d), Mat(npts, static_cast<Eigen::Index>(nfun)));
    for (std::size_t f = 0; f < nfun; ++f) {
      const auto deg = multi_index(f, dims);
      // axis factors: value, first and second derivative at nodes
      std::vector<std::array<Vec, 3>> fac(static_cast<std::size_t>(d));
      for (int k = 0; k < d; ++k) {
        fac[k][0] = p1d[k].col(deg[k]);
        fac[k][1] = d1d[k] * fac[k][0];
        fac[k][2] = d1d[k] * fac[k][1];
      }
      for (Eigen::Index p = 0; p < npts; ++p) {
        const auto idx = multi_index(static_cast<std::size_t>(p), mesh.lgl_orders);
        auto prod_with = [&](int axis, int der) {
          double v = 1.0;
          for (int k = 0; k < d; ++k) v *= fac[k][k == axis ? der : 0][idx[k]];
          return v;
        };
        values(p, static_cast<Eigen::Index>(f)) = prod_with(-1, 0);
        for (int k = 0; k < d; ++k) {
          grads[k](p, static_cast<Eigen::Index>(f)) = prod_with(k, 1);
          laps(p, static_cast<Eigen::Index>(f)) += prod_with(k, 2);
        }
      }
    }
    const auto raw = make_element_basis(mesh, e, values, grads, laps);
    bases.push_back(ensure_constant_mode(mesh, orthonormalize(mesh, raw, 1e-12, static_cast<int>(nfun)), 1e-12));
  }
  return BasisFamily(std::move(bases));
}

/// u = sum c_{K,j} phi_{K,j} sampled on a uniform global grid; each grid point
/// belongs to the element whose half-open box contains it.
inline Vec evaluate_field(const Mesh& mesh, const BasisFamily& family, const Vec& coeffs,
                          const std::vector<int>& grid) {
  require(coeffs.size() == family.total_dof, "evaluate_field: coefficient length must equal total_dof");
  const int d = mesh.dim();
  require(static_cast<int>(grid.size()) == d, "evaluate_field: grid dimension mismatch");
  // Per axis: which element slab each grid index falls in, and its local points.
  std::vector<std::vector<std::vector<int>>> owned(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    owned[k].resize(static_cast<std::size_t>(mesh.element_counts[k]));
    for (int i = 0; i < grid[k]; ++i) {
      const double x = i * mesh.domain.lengths[k] / grid[k];
      int slab = static_cast<int>(std::floor(x / mesh.element_size[k] + 1e-10));
      slab = std::min(slab, mesh.element_counts[k] - 1);
      owned[k][static_cast<std::size_t>(slab)].push_back(i);
    }
  }
  Vec out = Vec::Zero(static_cast<Eigen::Index>(product(grid)));
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& b = family.elements[static_cast<std::size_t>(e)];
    if (b.count() == 0) continue;
    const auto& el = mesh.elements[static_cast<std::size_t>(e)];
    std::vector<Mat> ops;
    std::vector<int> sub_dims;
    for (int k = 0; k < d; ++k) {
      const auto& idx = owned[k][static_cast<std::size_t>(el.index[k])];
      std::vector<double> ref;
      for (int i : idx) {
        const double x = i * mesh.domain.lengths[k] / grid[k];
        ref.push_back(2.0 * (x - el.box.lo[k]) / mesh.element_size[k] - 1.0);
      }
      ops.push_back(lagrange_matrix(mesh.rules[k].nodes, ref));
      sub_dims.push_back(static_cast<int>(idx.size()));
    }
    if (product(sub_dims) == 0) continue;
    std::vector<const Mat*> ptrs;
    for (const auto& op : ops) ptrs.push_back(&op);
    const Vec nodal = b.values * coeffs.segment(family.offsets[static_cast<std::size_t>(e)], b.count());
    const Vec local = apply_separable(nodal, mesh.lgl_orders, ptrs);
    for (std::size_t p = 0; p < product(sub_dims); ++p) {
      const auto sub = multi_index(p, sub_dims);
      std::vector<int> gidx(static_cast<std::size_t>(d));
      for (int k = 0; k < d; ++k)
        gidx[k] = owned[k][static_cast<std::size_t>(el.index[k])][static_cast<std::size_t>(sub[k])];
      out[static_cast<Eigen::Index>(flat_index(gidx, grid))] = local[static_cast<Eigen::Index>(p)];
    }
  }
  return out;
}

}  // namespace albdg
