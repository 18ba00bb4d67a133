#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "albdg/basis.hpp"
#include "albdg/error.hpp"
#include "albdg/grid.hpp"
#include "albdg/mesh.hpp"
#include "albdg/spectral.hpp"

namespace albdg {

// ---------------------------------------------------------------------------
// Penalty parameters

enum class PenaltyMode { formula, cj_condition };

struct PenaltyConfig {
  double gamma = 20.0;
  PenaltyMode mode = PenaltyMode::formula;
  double cj_factor = 2.01;    // cj_condition: alpha = cj_factor * C_J^2 + alpha_floor
  double alpha_floor = 1e-3;
};

/// alpha(J_K) = gamma * max(J_K, 1)^2 / h_K.
inline double penalty_alpha(int count, double h, double gamma) {
  const double j = std::max(count, 1);
  return gamma * j * j / h;
}

/// Per-element and per-face penalty values; alpha(J_F) is the max over the
/// two neighbours.
struct PenaltyValues {
  std::vector<double> element;
  std::vector<double> face;
};

inline PenaltyValues penalty_values(const Mesh& mesh, const std::vector<int>& counts, const PenaltyConfig& cfg,
                                    double cj = 0.0) {
  require(static_cast<int>(counts.size()) == mesh.num_elements(), "penalty_values: one count per element");
  require(cfg.gamma > 0.0, "penalty: gamma must be positive");
  PenaltyValues pv;
  if (cfg.mode == PenaltyMode::cj_condition) {
    require(cfg.alpha_floor > 0.0, "penalty: alpha_floor must be positive");
    const double a = cfg.cj_factor * cj * cj + cfg.alpha_floor;
    pv.element.assign(counts.size(), a);
    pv.face.assign(mesh.faces.size(), a);
    return pv;
  }
  for (int c : counts) pv.element.push_back(penalty_alpha(c, mesh.diameter(), cfg.gamma));
  for (const auto& f : mesh.faces)
    pv.face.push_back(std::max(pv.element[static_cast<std::size_t>(f.plus_element)],
                               pv.element[static_cast<std::size_t>(f.minus_element)]));
  return pv;
}

// ---------------------------------------------------------------------------
// Jump and average on a face

struct ScalarJumpAverage {
  std::vector<Vec> jump;  // d components of v+ n+ + v- n-
  Vec mean;
};

struct VectorJumpAverage {
  Vec jump;               // q+ . n+ + q- . n-
  std::vector<Vec> mean;  // d components
};

inline ScalarJumpAverage jump_average(const Face& face, const Vec& plus, const Vec& minus) {
  if (plus.size() != minus.size() || plus.size() != face.weights.size())
    throw ConfigError("jump_average: traces are not sampled at the face nodes");
  ScalarJumpAverage out;
  const auto nm = face.normal_minus();
  for (std::size_t c = 0; c < face.normal_plus.size(); ++c)
    out.jump.push_back(plus * face.normal_plus[c] + minus * nm[c]);
  out.mean = 0.5 * (plus + minus);
  return out;
}

inline VectorJumpAverage jump_average(const Face& face, const std::vector<Vec>& plus, const std::vector<Vec>& minus) {
  if (plus.size() != face.normal_plus.size() || minus.size() != plus.size())
    throw ConfigError("jump_average: vector traces must have dim components");
  VectorJumpAverage out;
  const auto nm = face.normal_minus();
  out.jump = Vec::Zero(face.weights.size());
  for (std::size_t c = 0; c < plus.size(); ++c) {
    if (plus[c].size() != face.weights.size() || minus[c].size() != face.weights.size())
      throw ConfigError("jump_average: traces are not sampled at the face nodes");
    out.jump += plus[c] * face.normal_plus[c] + minus[c] * nm[c];
    out.mean.push_back(0.5 * (plus[c] + minus[c]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Face couplings: per-face matrices acting on the coefficients of the
// (at most two) elements sharing the face. Signs follow n+ = +e_direction,
// so the scalar jump along n+ is v+ - v-.

struct FaceCoupling {
  int face = 0;
  std::vector<int> dofs;         // global dof indices, plus element first
  Mat jump;                      // n_face x dofs: v+ - v-
  Mat mean_normal_grad;          // n+ . {grad v}
  Mat normal_grad_jump;          // [[grad v]] = n+ . (grad v+ - grad v-)
  std::vector<Mat> mean_grad;    // d components of {grad v}
  Vec weights;
};

inline FaceCoupling face_coupling(const Mesh& mesh, const BasisFamily& family, int face_id) {
  const Face& f = mesh.faces[static_cast<std::size_t>(face_id)];
  const int d = mesh.dim();
  const int k = f.direction;
  const auto& bp = family.elements[static_cast<std::size_t>(f.plus_element)];
  const auto& bm = family.elements[static_cast<std::size_t>(f.minus_element)];
  const bool same = (f.plus_element == f.minus_element);

  FaceCoupling fc;
  fc.face = face_id;
  fc.weights = f.weights;
  const int np = bp.count();
  const int nm = same ? 0 : bm.count();
  for (int j = 0; j < np; ++j) fc.dofs.push_back(family.offsets[static_cast<std::size_t>(f.plus_element)] + j);
  for (int j = 0; j < nm; ++j) fc.dofs.push_back(family.offsets[static_cast<std::size_t>(f.minus_element)] + j);
  const auto nq = f.weights.size();
  const auto ndof = static_cast<Eigen::Index>(fc.dofs.size());
  fc.jump = Mat::Zero(nq, ndof);
  fc.mean_normal_grad = Mat::Zero(nq, ndof);
  fc.normal_grad_jump = Mat::Zero(nq, ndof);
  fc.mean_grad.assign(static_cast<std::size_t>(d), Mat::Zero(nq, ndof));

  const FaceTrace& tp = bp.trace(k, true);   // plus element, upper side
  const FaceTrace& tm = bm.trace(k, false);  // minus element, lower side
  auto add = [&](const FaceTrace& t, int col0, int cols, double sign) {
    if (cols == 0) return;
    fc.jump.middleCols(col0, cols) += sign * t.values;
    fc.mean_normal_grad.middleCols(col0, cols) += 0.5 * t.gradients[static_cast<std::size_t>(k)];
    fc.normal_grad_jump.middleCols(col0, cols) += sign * t.gradients[static_cast<std::size_t>(k)];
    for (int c = 0; c < d; ++c) fc.mean_grad[static_cast<std::size_t>(c)].middleCols(col0, cols) += 0.5 * t.gradients[static_cast<std::size_t>(c)];
  };
  add(tp, 0, np, +1.0);
  add(tm, same ? 0 : np, bm.count(), -1.0);
  return fc;
}

inline std::vector<FaceCoupling> face_couplings(const Mesh& mesh, const BasisFamily& family) {
  std::vector<FaceCoupling> out;
  for (const auto& f : mesh.faces) out.push_back(face_coupling(mesh, family, f.id));
  return out;
}

// ---------------------------------------------------------------------------
// DG Hamiltonian

/// Symmetric block-sparse matrix; block (K, K') is nonzero only for K = K'
/// or face neighbours.
struct DGHamiltonian {
  std::vector<int> counts;
  std::vector<int> offsets;
  int dimension = 0;
  std::map<std::pair<int, int>, Mat> blocks;
  double asymmetry = 0.0;  // max relative asymmetry before symmetrization

  Mat dense() const {
    Mat h = Mat::Zero(dimension, dimension);
    for (const auto& [key, b] : blocks)
      h.block(offsets[static_cast<std::size_t>(key.first)], offsets[static_cast<std::size_t>(key.second)], b.rows(), b.cols()) = b;
    return h;
  }
};

/// V_eff resampled from the global grid onto each element's LGL nodes.
inline std::vector<Vec> sample_on_elements(const Mesh& mesh, const Vec& global_field) {
  std::vector<Vec> out;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    std::vector<std::vector<double>> pts;
    for (int k = 0; k < mesh.dim(); ++k) pts.push_back(mesh.lgl_coords(e, k));
    out.push_back(resample_periodic(global_field, mesh.domain.global_grid, mesh.domain.lengths, pts));
  }
  return out;
}

namespace detail {

inline int element_of_dof(const DGHamiltonian& h, int dof) {
  const auto it = std::upper_bound(h.offsets.begin(), h.offsets.end(), dof);
  int e = static_cast<int>(it - h.offsets.begin()) - 1;
  while (h.counts[static_cast<std::size_t>(e)] == 0) --e;
  return e;
}

inline void scatter(DGHamiltonian& h, const std::vector<int>& dofs, const Mat& local) {
  for (std::size_t a = 0; a < dofs.size(); ++a) {
    const int ea = element_of_dof(h, dofs[a]);
    for (std::size_t b = 0; b < dofs.size(); ++b) {
      const int eb = element_of_dof(h, dofs[b]);
      auto& blk = h.blocks[{ea, eb}];
      if (blk.size() == 0) blk = Mat::Zero(h.counts[static_cast<std::size_t>(ea)], h.counts[static_cast<std::size_t>(eb)]);
      blk(dofs[a] - h.offsets[static_cast<std::size_t>(ea)], dofs[b] - h.offsets[static_cast<std::size_t>(eb)]) +=
          local(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }
}

}  // namespace detail

/// H[(K,j),(K',j')] = A_J(phi_{K,j}, phi_{K',j'}) + <V phi_{K,j}, phi_{K',j'}>_T.
/// Pass an empty `potential` to assemble the bilinear form A_J alone.
inline DGHamiltonian assemble_hamiltonian(const Mesh& mesh, const BasisFamily& family,
                                          const std::vector<Vec>& potential, const PenaltyValues& penalty) {
  if (penalty.face.size() != mesh.faces.size()) throw ConfigError("assemble_hamiltonian: penalty not configured");
  if (!potential.empty() && static_cast<int>(potential.size()) != mesh.num_elements())
    throw ConfigError("assemble_hamiltonian: potential must be sampled on every element");

  DGHamiltonian h;
  h.counts = family.counts();
  h.offsets = family.offsets;
  h.dimension = family.total_dof;
  const Vec& w = mesh.element_weights;

  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& b = family.elements[static_cast<std::size_t>(e)];
    if (b.count() == 0) continue;
    Mat blk = Mat::Zero(b.count(), b.count());
    for (const auto& g : b.gradients) blk += 0.5 * g.transpose() * w.asDiagonal() * g;
    if (!potential.empty()) {
      const Vec wv = w.cwiseProduct(potential[static_cast<std::size_t>(e)]);
      blk += b.values.transpose() * wv.asDiagonal() * b.values;
    }
    h.blocks[{e, e}] = blk;
  }

  for (const auto& f : mesh.faces) {
    const auto fc = face_coupling(mesh, family, f.id);
    if (fc.dofs.empty()) continue;
    const double alpha = penalty.face[static_cast<std::size_t>(f.id)];
    const Mat wa = fc.weights.asDiagonal() * fc.jump;
    const Mat cross = fc.mean_normal_grad.transpose() * wa;
    const Mat local = -0.5 * (cross + cross.transpose()) + alpha * fc.jump.transpose() * wa;
    detail::scatter(h, fc.dofs, local);
  }

  double scale = 0.0, asym = 0.0;
  for (const auto& [key, b] : h.blocks) scale = std::max(scale, b.cwiseAbs().maxCoeff());
  for (auto& [key, b] : h.blocks) {
    if (key.first > key.second) continue;
    auto it = h.blocks.find({key.second, key.first});
    if (it == h.blocks.end()) {
      h.blocks[{key.second, key.first}] = Mat::Zero(b.cols(), b.rows());
      it = h.blocks.find({key.second, key.first});
    }
    Mat& bt = it->second;
    asym = std::max(asym, (b - bt.transpose()).cwiseAbs().maxCoeff());
    const Mat avg = 0.5 * (b + bt.transpose());
    b = avg;
    bt = avg.transpose();
  }
  h.asymmetry = scale > 0.0 ? asym / scale : 0.0;
  return h;
}

/// A_J as a dense matrix over the family's coefficients.
inline Mat bilinear_matrix(const Mesh& mesh, const BasisFamily& family, const PenaltyValues& penalty) {
  return assemble_hamiltonian(mesh, family, {}, penalty).dense();
}

/// Broken gradient Gram matrix <grad phi_p, grad phi_q>_T (block diagonal).
inline Mat gradient_gram(const Mesh& mesh, const BasisFamily& family) {
  Mat g = Mat::Zero(family.total_dof, family.total_dof);
  const Vec& w = mesh.element_weights;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& b = family.elements[static_cast<std::size_t>(e)];
    if (b.count() == 0) continue;
    Mat blk = Mat::Zero(b.count(), b.count());
    for (const auto& gr : b.gradients) blk += gr.transpose() * w.asDiagonal() * gr;
    g.block(family.offsets[static_cast<std::size_t>(e)], family.offsets[static_cast<std::size_t>(e)], b.count(), b.count()) = blk;
  }
  return g;
}

/// Penalty-weighted jump Gram: sum_F alpha_F <[[phi_p]], [[phi_q]]>_F.
inline Mat jump_gram(const Mesh& mesh, const BasisFamily& family, const std::vector<double>& face_weights) {
  Mat g = Mat::Zero(family.total_dof, family.total_dof);
  for (const auto& f : mesh.faces) {
    const auto fc = face_coupling(mesh, family, f.id);
    const Mat local = face_weights[static_cast<std::size_t>(f.id)] * fc.jump.transpose() * fc.weights.asDiagonal() * fc.jump;
    for (std::size_t a = 0; a < fc.dofs.size(); ++a)
      for (std::size_t b = 0; b < fc.dofs.size(); ++b)
        g(fc.dofs[a], fc.dofs[b]) += local(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  }
  return g;
}

/// ||u||_E^2 = sum_K 1/2 ||grad u||_K^2 + sum_F alpha(J_F) ||[[u]]||_F^2 as a Gram matrix.
inline Mat energy_matrix(const Mesh& mesh, const BasisFamily& family, const PenaltyValues& penalty) {
  return 0.5 * gradient_gram(mesh, family) + jump_gram(mesh, family, penalty.face);
}

inline double energy_norm(const Mesh& mesh, const BasisFamily& family, const Vec& coeffs, const PenaltyValues& penalty) {
  require(coeffs.size() == family.total_dof, "energy_norm: coefficient length mismatch");
  return std::sqrt(std::max(0.0, coeffs.dot(energy_matrix(mesh, family, penalty) * coeffs)));
}

/// A broken field sampled on every element's LGL grid (value and gradient).
struct NodalField {
  std::vector<Vec> values;
  std::vector<std::vector<Vec>> gradients;  // [element][component]
};

inline NodalField nodal_field(const Mesh& mesh, const BasisFamily& family, const Vec& coeffs) {
  NodalField f;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& b = family.elements[static_cast<std::size_t>(e)];
    const Vec c = coeffs.segment(family.offsets[static_cast<std::size_t>(e)], b.count());
    f.values.push_back(b.values * c);
    std::vector<Vec> g;
    for (const auto& gr : b.gradients) g.push_back(gr * c);
    f.gradients.push_back(std::move(g));
  }
  return f;
}

/// Energy norm of a nodal broken field (used for errors against continuous references).
inline double energy_norm(const Mesh& mesh, const NodalField& u, const PenaltyValues& penalty) {
  const Vec& w = mesh.element_weights;
  double s = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (const auto& g : u.gradients[static_cast<std::size_t>(e)]) s += 0.5 * w.dot(g.cwiseProduct(g));
  for (const auto& f : mesh.faces) {
    const Vec jump = u.values[static_cast<std::size_t>(f.plus_element)](f.plus_nodes) -
                     u.values[static_cast<std::size_t>(f.minus_element)](f.minus_nodes);
    s += penalty.face[static_cast<std::size_t>(f.id)] * f.weights.dot(jump.cwiseProduct(jump));
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Lifting operator and C_J

struct LiftingData {
  Mat volume_gram;   // <grad phi_p, grad phi_q>_T
  Mat face_gram;     // <{grad phi_p}, {grad phi_q}>_S
  Mat range;         // Z: columns span the retained gradient space, Z^T G_T Z = I
  double cj = 0.0;
  Vec maximizer;     // gradient-space coefficients attaining C_J
  bool empty = true;
};

/// C_J = sup_{q in W_J} ||{q}||_S / ||q||_T via the generalized eigenproblem
/// on the range of the volume Gram matrix.
inline LiftingData lifting_constant(const Mesh& mesh, const BasisFamily& family, double rank_tol = 1e-10) {
  LiftingData data;
  data.volume_gram = gradient_gram(mesh, family);
  data.face_gram = Mat::Zero(family.total_dof, family.total_dof);
  for (const auto& f : mesh.faces) {
    const auto fc = face_coupling(mesh, family, f.id);
    Mat local = Mat::Zero(static_cast<Eigen::Index>(fc.dofs.size()), static_cast<Eigen::Index>(fc.dofs.size()));
    for (const auto& mg : fc.mean_grad) local += mg.transpose() * fc.weights.asDiagonal() * mg;
    for (std::size_t a = 0; a < fc.dofs.size(); ++a)
      for (std::size_t b = 0; b < fc.dofs.size(); ++b)
        data.face_gram(fc.dofs[a], fc.dofs[b]) += local(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  }
  if (family.total_dof == 0) return data;
  Eigen::SelfAdjointEigenSolver<Mat> es(data.volume_gram);
  const Vec& lam = es.eigenvalues();
  const double lmax = lam.maxCoeff();
  if (!(lmax > 0.0)) return data;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam[i] > rank_tol * lmax) keep.push_back(i);
  data.range = Mat(family.total_dof, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    data.range.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) / std::sqrt(lam[keep[c]]);
  const Mat reduced = data.range.transpose() * data.face_gram * data.range;
  Eigen::SelfAdjointEigenSolver<Mat> rs(0.5 * (reduced + reduced.transpose()));
  const auto top = rs.eigenvalues().size() - 1;
  data.cj = std::sqrt(std::max(0.0, rs.eigenvalues()[top]));
  data.maximizer = data.range * rs.eigenvectors().col(top);
  data.empty = false;
  return data;
}

/// Jump traces v+ - v- of a (possibly non-discrete) field, one vector per face.
struct FaceJumps {
  std::vector<Vec> jumps;
};

inline FaceJumps face_jumps(const Mesh& mesh, const NodalField& v) {
  FaceJumps out;
  for (const auto& f : mesh.faces)
    out.jumps.push_back(v.values[static_cast<std::size_t>(f.plus_element)](f.plus_nodes) -
                        v.values[static_cast<std::size_t>(f.minus_element)](f.minus_nodes));
  return out;
}

inline FaceJumps face_jumps(const Mesh& mesh, const BasisFamily& family, const Vec& coeffs) {
  return face_jumps(mesh, nodal_field(mesh, family, coeffs));
}

/// ||[[v]]||_S.
inline double jump_norm(const Mesh& mesh, const FaceJumps& j) {
  double s = 0.0;
  for (const auto& f : mesh.faces) s += f.weights.dot(j.jumps[static_cast<std::size_t>(f.id)].cwiseAbs2());
  return std::sqrt(s);
}

/// Coefficients beta of L v = sum_p beta_p grad phi_p, defined by
/// <L v, q>_T = <[[v]], {q}>_S for all q in W_J (pseudo-inverse on the retained rank).
inline Vec apply_lifting(const Mesh& mesh, const BasisFamily& family, const LiftingData& data, const FaceJumps& v) {
  require(v.jumps.size() == mesh.faces.size(), "apply_lifting: one jump trace per face");
  Vec rhs = Vec::Zero(family.total_dof);
  for (const auto& f : mesh.faces) {
    const auto fc = face_coupling(mesh, family, f.id);
    const Vec& jv = v.jumps[static_cast<std::size_t>(f.id)];
    require(jv.size() == f.weights.size(), "apply_lifting: jump trace not sampled at face nodes");
    const Vec local = fc.mean_normal_grad.transpose() * f.weights.cwiseProduct(jv);
    for (std::size_t a = 0; a < fc.dofs.size(); ++a) rhs[fc.dofs[a]] += local[static_cast<Eigen::Index>(a)];
  }
  if (data.empty) return Vec::Zero(family.total_dof);
  return data.range * (data.range.transpose() * rhs);
}

/// ||L v||_T for gradient-space coefficients.
inline double lifting_norm(const LiftingData& data, const Vec& beta) {
  return std::sqrt(std::max(0.0, beta.dot(data.volume_gram * beta)));
}

/// Extended form A~_J(u, v) for u, v in V_J.
inline double extended_bilinear(const Mesh& mesh, const BasisFamily& family, const LiftingData& data, const Vec& u,
                                 const Vec& v, const PenaltyValues& penalty) {
  const Vec lu = apply_lifting(mesh, family, data, face_jumps(mesh, family, u));
  const Vec lv = apply_lifting(mesh, family, data, face_jumps(mesh, family, v));
  const Mat& g = data.volume_gram;
  return 0.5 * u.dot(g * v) - 0.5 * lu.dot(g * v) - 0.5 * lv.dot(g * u) +
         u.dot(jump_gram(mesh, family, penalty.face) * v);
}

}  // namespace albdg
