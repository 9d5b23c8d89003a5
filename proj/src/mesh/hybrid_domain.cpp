#include "wcip/mesh.hpp"

#include <cmath>

namespace wcip {

namespace {

Index cells_along(double extent, double h, const char* what) {
  const double r = extent / h;
  if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, std::abs(r)))
    throw ConfigError(std::string(what) + " is not an integer multiple of h_fdm");
  return static_cast<Index>(std::round(r));
}

void attach_fem(HybridDomain& d) {
  const TetraMesh& fem = d.fem;
  d.interface.clear();
  d.inner_layer.clear();
  d.fem_on_interface.assign(fem.vertices.size(), 0);
  d.fem_pinned.assign(fem.vertices.size(), 0);
  for (Index v = 0; v < fem.vertex_count(); ++v) {
    const Vec3& x = fem.vertices[static_cast<std::size_t>(v)];
    const double depth = d.depth_in_cells(x);
    if (depth < -1e-9) throw MeshError("FE vertex outside the FE box");
    if (depth < 2.0 - 1e-9) d.fem_pinned[static_cast<std::size_t>(v)] = 1;
    const bool on_boundary = depth < 1e-9;
    const bool on_layer = std::abs(depth - 1.0) < 1e-9;
    if (!on_boundary && !on_layer) continue;
    const auto node = d.grid.node_at(x, 1e-9);
    if (!node) {
      if (on_boundary) throw MeshError("FE boundary vertex does not coincide with a grid node");
      continue;
    }
    const OverlapPair pair{v, d.grid.id(*node)};
    if (on_boundary) {
      d.fem_on_interface[static_cast<std::size_t>(v)] = 1;
      d.interface.push_back(pair);
    } else {
      d.inner_layer.push_back(pair);
    }
  }
}

}  // namespace

void validate(const DomainSpec& spec) {
  if (!(spec.h_fdm > 0.0)) throw ConfigError("h_fdm must be positive");
  for (int a = 0; a < 3; ++a) {
    if (!(spec.fem_lo(a) > spec.omega_lo(a) && spec.fem_hi(a) < spec.omega_hi(a)))
      throw ConfigError("FE box must lie strictly inside the domain");
    if (!(spec.fem_hi(a) > spec.fem_lo(a))) throw ConfigError("FE box has non-positive extent");
    cells_along(spec.omega_hi(a) - spec.omega_lo(a), spec.h_fdm, "domain extent");
    cells_along(spec.fem_hi(a) - spec.fem_lo(a), spec.h_fdm, "FE box extent");
    cells_along(spec.fem_lo(a) - spec.omega_lo(a), spec.h_fdm, "FE box offset");
  }
}

std::vector<OverlapPair> HybridDomain::overlap() const {
  std::vector<OverlapPair> all = interface;
  all.insert(all.end(), inner_layer.begin(), inner_layer.end());
  return all;
}

double HybridDomain::depth_in_cells(const Vec3& x) const {
  double depth = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) depth = std::min({depth, x(a) - spec.fem_lo(a), spec.fem_hi(a) - x(a)});
  return depth / spec.h_fdm;
}

HybridDomain build_hybrid_domain(const DomainSpec& spec) {
  validate(spec);
  HybridDomain d;
  d.spec = spec;
  const double h = spec.h_fdm;
  GridIndex dims{}, cells{};
  for (int a = 0; a < 3; ++a) {
    dims[a] = cells_along(spec.omega_hi(a) - spec.omega_lo(a), h, "domain extent") + 1;
    cells[a] = cells_along(spec.fem_hi(a) - spec.fem_lo(a), h, "FE box extent");
    d.fem_lo_index[a] = cells_along(spec.fem_lo(a) - spec.omega_lo(a), h, "FE box offset");
    d.fem_hi_index[a] = d.fem_lo_index[a] + cells[a];
  }
  d.grid = StructuredGrid(spec.omega_lo, h, dims);
  d.fem = structured_tet_mesh(spec.fem_lo, h, cells);

  BoundaryPartition& bp = d.boundary;
  const Index nx = dims[0], ny = dims[1], nz = dims[2];
  for (Index k = 0; k < nz; ++k)
    for (Index j = 0; j < ny; ++j)
      for (Index i = 0; i < nx; ++i) {
        const Index id = d.grid.id(i, j, k);
        if (k == nz - 1)
          bp.top_nodes.push_back(id);
        else if (k == 0)
          bp.bottom_nodes.push_back(id);
        else if (i == 0 || i == nx - 1 || j == 0 || j == ny - 1)
          bp.lateral_nodes.push_back(id);
      }
  for (Index j = 0; j + 1 < ny; ++j)
    for (Index i = 0; i + 1 < nx; ++i) {
      for (Index k : {Index(0), nz - 1}) {
        BoundaryFace f{{d.grid.id(i, j, k), d.grid.id(i + 1, j, k), d.grid.id(i, j + 1, k), d.grid.id(i + 1, j + 1, k)},
                       k == 0 ? BoundaryPart::bottom : BoundaryPart::top};
        (k == 0 ? bp.bottom_facets : bp.top_facets).push_back(f);
      }
    }
  for (Index k = 0; k + 1 < nz; ++k) {
    for (Index j = 0; j + 1 < ny; ++j)
      for (Index i : {Index(0), nx - 1})
        bp.lateral_facets.push_back(
            {{d.grid.id(i, j, k), d.grid.id(i, j + 1, k), d.grid.id(i, j, k + 1), d.grid.id(i, j + 1, k + 1)},
             BoundaryPart::lateral});
    for (Index i = 0; i + 1 < nx; ++i)
      for (Index j : {Index(0), ny - 1})
        bp.lateral_facets.push_back(
            {{d.grid.id(i, j, k), d.grid.id(i + 1, j, k), d.grid.id(i, j, k + 1), d.grid.id(i + 1, j, k + 1)},
             BoundaryPart::lateral});
  }

  for (Index id = 0; id < d.grid.node_count(); ++id) {
    const GridIndex g = d.grid.ijk(id);
    bool interior = true;
    for (int a = 0; a < 3; ++a)
      if (g[a] <= d.fem_lo_index[a] || g[a] >= d.fem_hi_index[a]) interior = false;
    if (!interior) d.fd_active.push_back(id);
  }
  attach_fem(d);
  return d;
}

HybridDomain with_fem_mesh(const HybridDomain& domain, TetraMesh mesh) {
  HybridDomain d = domain;
  d.fem = std::move(mesh);
  attach_fem(d);
  if (d.interface.size() != domain.interface.size()) throw MeshError("refinement altered the FE boundary");
  return d;
}

std::vector<char> interface_vertices(const HybridDomain& domain) { return domain.fem_on_interface; }

}  // namespace wcip
