#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "albdg/albdg.hpp"

namespace testing {

using albdg::Mat;
using albdg::Vec;

// Physical LGL node coordinates of a 1D element.
inline Vec node_coords(const albdg::Mesh& mesh, int element) {
  const auto& e = mesh.elements[static_cast<std::size_t>(element)];
  const Vec& x = mesh.rules[0].nodes;
  return (e.box.lo[0] + 0.5 * (x.array() + 1.0) * mesh.element_size[0]).matrix();
}

// 1D element basis from analytic functions f, f', f''.
struct Fn1d {
  std::function<double(double)> f, df, d2f;
};

inline albdg::ElementBasis analytic_basis(const albdg::Mesh& mesh, int element, const std::vector<Fn1d>& fns) {
  const Vec x = node_coords(mesh, element);
  const auto n = x.size();
  const auto j = static_cast<Eigen::Index>(fns.size());
  Mat v(n, j), g(n, j), l(n, j);
  for (Eigen::Index c = 0; c < j; ++c)
    for (Eigen::Index i = 0; i < n; ++i) {
      v(i, c) = fns[static_cast<std::size_t>(c)].f(x[i]);
      g(i, c) = fns[static_cast<std::size_t>(c)].df(x[i]);
      l(i, c) = fns[static_cast<std::size_t>(c)].d2f(x[i]);
    }
  return albdg::make_element_basis(mesh, element, v, {g}, l);
}

inline Fn1d constant(double c) {
  return {[c](double) { return c; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
}

// Broken constants 1/sqrt|K| on the listed elements, empty elsewhere.
inline albdg::BasisFamily broken_constants(const albdg::Mesh& mesh, const std::vector<int>& counts) {
  std::vector<albdg::ElementBasis> b;
  const double c = 1.0 / std::sqrt(mesh.element_volume());
  for (int e = 0; e < mesh.num_elements(); ++e)
    b.push_back(counts[static_cast<std::size_t>(e)] ? analytic_basis(mesh, e, {constant(c)})
                                                     : albdg::empty_basis(mesh, e));
  return albdg::BasisFamily(std::move(b));
}

inline albdg::Problem two_well_problem(int electrons = 4) {
  albdg::Problem p;
  p.domain = albdg::Domain{1, {28.0}, {256}};
  p.element_counts = {4};
  p.lgl_orders = {100};
  p.potential.wells = {{{6.3}, 5.0, 0.4}, {{15.3}, 4.0, 0.5}};
  p.potential.electrons = electrons;
  return p;
}

inline albdg::Problem free_problem(int elements, int electrons, double length = 2 * std::numbers::pi) {
  albdg::Problem p;
  p.domain = albdg::Domain{1, {length}, {64}};
  p.element_counts = {elements};
  p.lgl_orders = {24};
  p.potential.electrons = electrons;
  return p;
}

}  // namespace testing
