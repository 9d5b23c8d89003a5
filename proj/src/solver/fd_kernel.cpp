#include "wcip/solver.hpp"

namespace wcip {

FdKernel build_fd_kernel(const HybridDomain& domain) {
  const StructuredGrid& grid = domain.grid;
  const double h = grid.spacing();
  const GridIndex& dims = grid.dims();
  const Index n = grid.node_count();

  FdKernel fd;
  fd.mass = Eigen::VectorXd::Zero(n);
  fd.mass_outside = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> all, outside;

  auto inside_fem = [&](Index i, Index j, Index k) {
    const GridIndex c{i, j, k};
    for (int a = 0; a < 3; ++a)
      if (c[a] < domain.fem_lo_index[a] || c[a] >= domain.fem_hi_index[a]) return false;
    return true;
  };

  const double h3 = h * h * h;
  for (Index k = 0; k + 1 < dims[2]; ++k)
    for (Index j = 0; j + 1 < dims[1]; ++j)
      for (Index i = 0; i + 1 < dims[0]; ++i) {
        const bool out = !inside_fem(i, j, k);
        auto corner = [&](int c) { return grid.id(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1)); };
        // Lumped mass of the six Kuhn tets: the diagonal corners belong to all six.
        for (int c = 0; c < 8; ++c) {
          const double m = (c == 0 || c == 7) ? h3 / 4.0 : h3 / 12.0;
          fd.mass(corner(c)) += m;
          if (out) fd.mass_outside(corner(c)) += m;
        }
        // Only axis edges couple; edges on a Kuhn path through a diagonal corner
        // are shared by two of the six tets.
        for (int c = 0; c < 8; ++c)
          for (int a = 0; a < 3; ++a) {
            if (c & (1 << a)) continue;
            const int d = c | (1 << a);
            const double w = (c == 0 || d == 7) ? h / 3.0 : h / 6.0;
            const Index p = corner(c), q = corner(d);
            for (auto* list : {&all, out ? &outside : nullptr}) {
              if (!list) continue;
              list->emplace_back(p, p, w);
              list->emplace_back(q, q, w);
              list->emplace_back(p, q, -w);
              list->emplace_back(q, p, -w);
            }
          }
      }
  fd.stiffness.resize(n, n);
  fd.stiffness.setFromTriplets(all.begin(), all.end());
  fd.stiffness_outside.resize(n, n);
  fd.stiffness_outside.setFromTriplets(outside.begin(), outside.end());

  const double quarter = h * h / 4.0;
  fd.face_top = Eigen::VectorXd::Zero(n);
  fd.face_bottom = Eigen::VectorXd::Zero(n);
  fd.face_lateral = Eigen::VectorXd::Zero(n);
  for (const BoundaryFace& f : domain.boundary.top_facets)
    for (Index v : f.nodes) fd.face_top(v) += quarter;
  for (const BoundaryFace& f : domain.boundary.bottom_facets)
    for (Index v : f.nodes) fd.face_bottom(v) += quarter;
  for (const BoundaryFace& f : domain.boundary.lateral_facets)
    for (Index v : f.nodes) fd.face_lateral(v) += quarter;
  return fd;
}

}  // namespace wcip
