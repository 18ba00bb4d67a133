#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "albdg/error.hpp"
#include "albdg/grid.hpp"
#include "albdg/lgl.hpp"

namespace albdg {

/// Periodic rectangular box [0, L_0) x ... x [0, L_{d-1}).
struct Domain {
  int dim = 1;
  std::vector<double> lengths;
  std::vector<int> global_grid;  // uniform sample counts for density/potential fields

  void validate() const {
    require(dim >= 1 && dim <= 3, "domain: dim must be 1, 2 or 3");
    require(static_cast<int>(lengths.size()) == dim, "domain: lengths must have dim entries");
    require(static_cast<int>(global_grid.size()) == dim, "domain: global_grid must have dim entries");
    for (int k = 0; k < dim; ++k) {
      require(lengths[k] > 0.0, "domain: lengths must be positive");
      require(global_grid[k] >= 4, "domain: global_grid entries must be >= 4");
    }
  }

  double volume() const {
    double v = 1.0;
    for (double l : lengths) v *= l;
    return v;
  }

  double cell_volume() const { return volume() / static_cast<double>(product(global_grid)); }
};

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  double side(int k) const { return hi[k] - lo[k]; }
};

struct Element {
  int id = 0;
  std::vector<int> index;  // integer coordinates in the element grid
  Box box;
};

/// Face shared by `plus_element` (across its upper side along `direction`)
/// and `minus_element` (across its lower side). With a single element along
/// `direction` both sides belong to the same element.
struct Face {
  int id = 0;
  int plus_element = 0;
  int minus_element = 0;
  int direction = 0;
  std::vector<double> normal_plus;  // +e_direction
  Vec weights;                      // surface quadrature weights (trace of the element LGL grid)
  std::vector<int> plus_nodes;      // indices into the plus element's LGL grid
  std::vector<int> minus_nodes;     // indices into the minus element's LGL grid

  std::vector<double> normal_minus() const {
    std::vector<double> n = normal_plus;
    for (double& c : n) c = -c;
    return n;
  }
};

/// Side of a face as seen from one of its elements.
struct FaceSide {
  int face = 0;
  bool plus = true;
};

struct Mesh {
  Domain domain;
  std::vector<int> element_counts;
  std::vector<double> element_size;
  std::vector<int> lgl_orders;
  std::vector<LglRule> rules;  // per direction, on [-1, 1]
  std::vector<Element> elements;
  std::vector<Face> faces;
  Vec element_weights;  // tensor LGL weights mapped to an element

  int dim() const { return domain.dim; }
  int num_elements() const { return static_cast<int>(elements.size()); }
  int lgl_points() const { return static_cast<int>(product(lgl_orders)); }
  double element_volume() const {
    double v = 1.0;
    for (double s : element_size) v *= s;
    return v;
  }

  /// Element diameter h_K (identical for all elements).
  double diameter() const {
    double s = 0.0;
    for (double h : element_size) s += h * h;
    return std::sqrt(s);
  }

  int element_at(std::vector<int> index) const {
    for (int k = 0; k < dim(); ++k) {
      const int n = element_counts[k];
      index[k] = ((index[k] % n) + n) % n;
    }
    return static_cast<int>(flat_index(index, element_counts));
  }

  /// Physical LGL coordinates of element e along axis k.
  std::vector<double> lgl_coords(int e, int k) const {
    const Box& b = elements[e].box;
    const Vec& x = rules[k].nodes;
    std::vector<double> out(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i)
      out[static_cast<std::size_t>(i)] = b.lo[k] + 0.5 * (x[i] + 1.0) * element_size[k];
    return out;
  }

  /// The 2d faces of element e: for each axis, lower side then upper side.
  std::vector<FaceSide> faces_of(int e) const {
    std::vector<FaceSide> out;
    for (int k = 0; k < dim(); ++k) {
      std::vector<int> lower = elements[e].index;
      lower[k] -= 1;
      out.push_back({element_at(lower) * dim() + k, false});
      out.push_back({e * dim() + k, true});
    }
    return out;
  }

  /// Indices into an element LGL grid of the slice at the lower/upper end of axis k.
  std::vector<int> face_slice(int k, bool upper) const {
    std::vector<int> out;
    const std::size_t n = product(lgl_orders);
    for (std::size_t f = 0; f < n; ++f) {
      const auto idx = multi_index(f, lgl_orders);
      if (idx[k] == (upper ? lgl_orders[k] - 1 : 0)) out.push_back(static_cast<int>(f));
    }
    return out;
  }
};

/// Uniform partition of a periodic domain. Elements and faces are numbered
/// lexicographically (first axis fastest); face id = element * dim + direction
/// for the face on the element's upper side.
inline Mesh build_mesh(const Domain& domain, const std::vector<int>& element_counts,
                       const std::vector<int>& lgl_orders) {
  domain.validate();
  const int d = domain.dim;
  require(static_cast<int>(element_counts.size()) == d, "mesh: element counts must have dim entries");
  require(static_cast<int>(lgl_orders.size()) == d, "mesh: lgl orders must have dim entries");
  for (int k = 0; k < d; ++k) {
    require(element_counts[k] >= 1, "mesh: element counts must be >= 1");
    require(lgl_orders[k] >= 3, "mesh: lgl orders must be >= 3");
  }

  Mesh mesh;
  mesh.domain = domain;
  mesh.element_counts = element_counts;
  mesh.lgl_orders = lgl_orders;
  for (int k = 0; k < d; ++k) {
    mesh.element_size.push_back(domain.lengths[k] / element_counts[k]);
    mesh.rules.push_back(lgl_rule(lgl_orders[k]));
  }

  const std::size_t m = product(element_counts);
  for (std::size_t e = 0; e < m; ++e) {
    Element el;
    el.id = static_cast<int>(e);
    el.index = multi_index(e, element_counts);
    for (int k = 0; k < d; ++k) {
      el.box.lo.push_back(el.index[k] * mesh.element_size[k]);
      el.box.hi.push_back((el.index[k] + 1) * mesh.element_size[k]);
    }
    mesh.elements.push_back(std::move(el));
  }

  const std::size_t npts = product(lgl_orders);
  mesh.element_weights.resize(static_cast<Eigen::Index>(npts));
  for (std::size_t f = 0; f < npts; ++f) {
    const auto idx = multi_index(f, lgl_orders);
    double w = 1.0;
    for (int k = 0; k < d; ++k) w *= 0.5 * mesh.element_size[k] * mesh.rules[k].weights[idx[k]];
    mesh.element_weights[static_cast<Eigen::Index>(f)] = w;
  }

  for (std::size_t e = 0; e < m; ++e) {
    for (int k = 0; k < d; ++k) {
      Face face;
      face.id = static_cast<int>(e) * d + k;
      face.plus_element = static_cast<int>(e);
      std::vector<int> upper = mesh.elements[e].index;
      upper[k] += 1;
      face.minus_element = mesh.element_at(upper);
      face.direction = k;
      face.normal_plus.assign(static_cast<std::size_t>(d), 0.0);
      face.normal_plus[static_cast<std::size_t>(k)] = 1.0;
      face.plus_nodes = mesh.face_slice(k, true);
      face.minus_nodes = mesh.face_slice(k, false);
      face.weights.resize(static_cast<Eigen::Index>(face.plus_nodes.size()));
      for (std::size_t q = 0; q < face.plus_nodes.size(); ++q) {
        const auto idx = multi_index(static_cast<std::size_t>(face.plus_nodes[q]), lgl_orders);
        double w = 1.0;
        for (int a = 0; a < d; ++a)
          if (a != k) w *= 0.5 * mesh.element_size[a] * mesh.rules[a].weights[idx[a]];
        face.weights[static_cast<Eigen::Index>(q)] = w;
      }
      mesh.faces.push_back(std::move(face));
    }
  }
  return mesh;
}

/// Buffered box Q_K around an element and its uniform Fourier grid.
struct ExtendedElement {
  int element = 0;
  // True along axes where the box is a strict subset of the periodic domain.
  std::vector<bool> partial;
  Box box;                // may extend outside [0, L) before periodic wrap
  std::vector<int> grid;  // Fourier grid counts on the box
  std::vector<int> extension;  // elements spanned per direction: min(M_k, 3)

  std::vector<double> lengths() const {
    std::vector<double> l;
    for (std::size_t k = 0; k < grid.size(); ++k) l.push_back(box.hi[k] - box.lo[k]);
    return l;
  }
};

/// Q_K is three elements wide along directions with at least three elements
/// and equal to K otherwise. The grid spacing is the global grid spacing
/// divided by `refine`; the count is bumped to an even number >= 8.
inline ExtendedElement extended_element(const Mesh& mesh, int element, int refine = 1) {
  require(element >= 0 && element < mesh.num_elements(), "extended_element: element index out of range");
  require(refine >= 1, "extended_element: refine must be >= 1");
  ExtendedElement q;
  q.element = element;
  const Box& b = mesh.elements[element].box;
  for (int k = 0; k < mesh.dim(); ++k) {
    const int ext = std::min(mesh.element_counts[k], 3);
    const double lo_pad = (ext == 3) ? mesh.element_size[k] : 0.0;
    const double hi_pad = (ext - 1) * mesh.element_size[k] - lo_pad;
    q.extension.push_back(ext);
    q.partial.push_back(ext < mesh.element_counts[k]);
    q.box.lo.push_back(b.lo[k] - lo_pad);
    q.box.hi.push_back(b.hi[k] + hi_pad);
    const double per_element =
        static_cast<double>(mesh.domain.global_grid[k]) / mesh.element_counts[k];
    int n = static_cast<int>(std::ceil(per_element * ext * refine - 1e-9));
    if (n % 2 != 0) ++n;
    q.grid.push_back(std::max(n, 8));
  }
  return q;
}

inline nlohmann::json mesh_summary(const Mesh& mesh) {
  nlohmann::json j;
  j["dim"] = mesh.dim();
  j["lengths"] = mesh.domain.lengths;
  j["global_grid"] = mesh.domain.global_grid;
  j["element_counts"] = mesh.element_counts;
  j["element_size"] = mesh.element_size;
  j["lgl_orders"] = mesh.lgl_orders;
  for (const auto& el : mesh.elements)
    j["elements"].push_back({{"id", el.id}, {"index", el.index}, {"lo", el.box.lo}, {"hi", el.box.hi}});
  for (const auto& f : mesh.faces)
    j["faces"].push_back({{"id", f.id},
                          {"plus", f.plus_element},
                          {"minus", f.minus_element},
                          {"direction", f.direction}});
  return j;
}

}  // namespace albdg
