#pragma once

// Residual-based a posteriori error estimator for computed eigenpairs:
// interior residual, gradient-jump and value-jump terms per element.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "albdg/basis.hpp"
#include "albdg/dg_operator.hpp"
#include "albdg/eigensolver.hpp"
#include "albdg/mesh.hpp"

namespace albdg {

/// gamma1 = h^2 / max(J,1)^2 and gamma2 = h / max(J,1) per element; face
/// values take the max over the two neighbours.
struct EstimatorConstants {
  std::vector<double> gamma1;
  std::vector<double> gamma2;
  std::vector<double> alpha;
  std::vector<double> face_gamma2;
  std::vector<double> face_alpha;
};

inline EstimatorConstants estimator_constants(const Mesh& mesh, const std::vector<int>& counts,
                                              const PenaltyValues& penalty) {
  const double h = mesh.diameter();
  EstimatorConstants c;
  for (int j : counts) {
    const double p = std::max(j, 1);
    c.gamma1.push_back(h * h / (p * p));
    c.gamma2.push_back(h / p);
  }
  c.alpha = penalty.element;
  for (const auto& f : mesh.faces) {
    c.face_gamma2.push_back(std::max(c.gamma2[static_cast<std::size_t>(f.plus_element)],
                                     c.gamma2[static_cast<std::size_t>(f.minus_element)]));
    c.face_alpha.push_back(penalty.face[static_cast<std::size_t>(f.id)]);
  }
  return c;
}

struct EstimatorReport {
  Mat residual;   // N x M, eta_{i,R_K}^2
  Mat gradient;   // eta_{i,G_K}^2
  Mat value;      // eta_{i,V_K}^2
  Mat total;      // eta_{i,K}^2
  Vec element;    // eta_K^2 = sum_i eta_{i,K}^2
  Vec eigenpair;  // eta_i^2 = sum_K eta_{i,K}^2
  double global = 0.0;  // eta^2 = sum_K eta_K^2
  std::vector<int> counts;
  int step = 0;
};

/// gamma1(J_K) || (-1/2 Lap + V - eps_i) u_i ||_K^2 with LGL quadrature.
inline double residual_term(const Mesh& mesh, const BasisFamily& family, const EigenSolution& sol, int i, int element,
                            const Vec& potential_on_element, const EstimatorConstants& c) {
  const auto& b = family.elements[static_cast<std::size_t>(element)];
  if (b.count() == 0) return 0.0;
  const Vec coef = sol.coefficients.col(i).segment(family.offsets[static_cast<std::size_t>(element)], b.count());
  const Vec u = b.values * coef;
  const Vec r = -0.5 * (b.laplacians * coef) + potential_on_element.cwiseProduct(u) - sol.eigenvalues[i] * u;
  return c.gamma1[static_cast<std::size_t>(element)] * mesh.element_weights.dot(r.cwiseAbs2());
}

namespace detail {

/// Per face: ||[[grad u_i]]||_F^2 and ||[[u_i]]||_F^2 for every eigenpair.
struct FaceJumpNorms {
  Mat grad;   // faces x N
  Mat value;
};

inline FaceJumpNorms face_jump_norms(const Mesh& mesh, const BasisFamily& family, const EigenSolution& sol, int n) {
  FaceJumpNorms out{Mat::Zero(static_cast<Eigen::Index>(mesh.faces.size()), n),
                    Mat::Zero(static_cast<Eigen::Index>(mesh.faces.size()), n)};
  for (const auto& f : mesh.faces) {
    const auto fc = face_coupling(mesh, family, f.id);
    if (fc.dofs.empty()) continue;
    const Mat c = sol.coefficients(fc.dofs, Eigen::seqN(0, n));
    const Mat gj = fc.normal_grad_jump * c;
    const Mat vj = fc.jump * c;
    for (int i = 0; i < n; ++i) {
      out.grad(f.id, i) = f.weights.dot(gj.col(i).cwiseAbs2());
      out.value(f.id, i) = f.weights.dot(vj.col(i).cwiseAbs2());
    }
  }
  return out;
}

inline std::pair<double, double> face_terms_from(const Mesh& mesh, const FaceJumpNorms& norms, int i, int element,
                                                 const EstimatorConstants& c) {
  double g = 0.0, v = 0.0;
  for (const auto& side : mesh.faces_of(element)) {
    const auto f = static_cast<std::size_t>(side.face);
    const double a = c.face_alpha[f];
    g += 0.25 * c.face_gamma2[f] * norms.grad(side.face, i);
    v += 0.25 * c.face_gamma2[f] * a * a * norms.value(side.face, i);
  }
  return {g, v};
}

}  // namespace detail

/// (eta_{i,G_K}^2, eta_{i,V_K}^2): 1/4 sum over the faces of K of
/// gamma2(J_F) ||[[grad u]]||^2 and gamma2(J_F) alpha(J_F)^2 ||[[u]]||^2.
inline std::pair<double, double> face_terms(const Mesh& mesh, const BasisFamily& family, const EigenSolution& sol,
                                            int i, int element, const EstimatorConstants& c) {
  const auto norms = detail::face_jump_norms(mesh, family, sol, i + 1);
  return detail::face_terms_from(mesh, norms, i, element, c);
}

inline EstimatorReport build_report(const Mesh& mesh, const BasisFamily& family, const EigenSolution& sol,
                                    const std::vector<Vec>& potential, const EstimatorConstants& c, int n) {
  require(n >= 1 && n <= sol.size(), "build_report: need 1 <= N <= computed eigenpairs");
  const int m = mesh.num_elements();
  EstimatorReport r;
  r.counts = family.counts();
  r.residual = Mat::Zero(n, m);
  r.gradient = Mat::Zero(n, m);
  r.value = Mat::Zero(n, m);
  const auto norms = detail::face_jump_norms(mesh, family, sol, n);
  for (int i = 0; i < n; ++i) {
    for (int e = 0; e < m; ++e) {
      r.residual(i, e) = residual_term(mesh, family, sol, i, e, potential[static_cast<std::size_t>(e)], c);
      const auto [g, v] = detail::face_terms_from(mesh, norms, i, e, c);
      r.gradient(i, e) = g;
      r.value(i, e) = v;
    }
  }
  r.total = r.residual + r.gradient + r.value;
  r.element = Vec::Zero(m);
  r.eigenpair = Vec::Zero(n);
  for (int e = 0; e < m; ++e)
    for (int i = 0; i < n; ++i) r.element[e] += r.total(i, e);
  for (int i = 0; i < n; ++i)
    for (int e = 0; e < m; ++e) r.eigenpair[i] += r.total(i, e);
  for (int e = 0; e < m; ++e) r.global += r.element[e];
  return r;
}

}  // namespace albdg
