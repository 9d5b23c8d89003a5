#pragma once

#include "wcip/types.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <span>

namespace wcip {

// ---------------------------------------------------------------------------
// Element geometry kernels
// ---------------------------------------------------------------------------

template <typename Scalar>
using Point3 = Eigen::Matrix<Scalar, 3, 1>;

/// Signed volume of the tetrahedron (a, b, c, d); positive for right-handed order.
template <typename Scalar>
Scalar signed_volume(const Point3<Scalar>& a, const Point3<Scalar>& b, const Point3<Scalar>& c,
                     const Point3<Scalar>& d) {
  return (b - a).dot((c - a).cross(d - a)) / Scalar(6);
}

/// Gradients of the four barycentric (P1) basis functions, one per row.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 3> barycentric_gradients(const Point3<Scalar>& a, const Point3<Scalar>& b,
                                                  const Point3<Scalar>& c, const Point3<Scalar>& d) {
  Eigen::Matrix<Scalar, 3, 3> jac;
  jac.col(0) = b - a;
  jac.col(1) = c - a;
  jac.col(2) = d - a;
  const Eigen::Matrix<Scalar, 3, 3> inv_t = jac.inverse().transpose();
  Eigen::Matrix<Scalar, 4, 3> grads;
  grads.row(1) = inv_t.col(0).transpose();
  grads.row(2) = inv_t.col(1).transpose();
  grads.row(3) = inv_t.col(2).transpose();
  grads.row(0) = -(grads.row(1) + grads.row(2) + grads.row(3));
  return grads;
}

/// Barycentric coordinates of x with respect to (a, b, c, d).
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> barycentric_coordinates(const Point3<Scalar>& x, const Point3<Scalar>& a,
                                                    const Point3<Scalar>& b, const Point3<Scalar>& c,
                                                    const Point3<Scalar>& d) {
  Eigen::Matrix<Scalar, 3, 3> jac;
  jac.col(0) = b - a;
  jac.col(1) = c - a;
  jac.col(2) = d - a;
  const Point3<Scalar> local = jac.partialPivLu().solve(x - a);
  Eigen::Matrix<Scalar, 4, 1> lambda;
  lambda << Scalar(1) - local.sum(), local(0), local(1), local(2);
  return lambda;
}

// ---------------------------------------------------------------------------
// Structured grid (FD part)
// ---------------------------------------------------------------------------

using GridIndex = std::array<Index, 3>;

class StructuredGrid {
 public:
  StructuredGrid() = default;
  StructuredGrid(const Vec3& origin, double spacing, GridIndex dims);

  const Vec3& origin() const { return origin_; }
  double spacing() const { return spacing_; }
  const GridIndex& dims() const { return dims_; }
  Index node_count() const { return dims_[0] * dims_[1] * dims_[2]; }

  Index id(Index i, Index j, Index k) const { return i + dims_[0] * (j + dims_[1] * k); }
  Index id(const GridIndex& ijk) const { return id(ijk[0], ijk[1], ijk[2]); }
  GridIndex ijk(Index node) const;
  Vec3 position(Index node) const;
  Vec3 position(const GridIndex& ijk) const;

  /// Grid index of x if x coincides with a node (within tol * spacing).
  std::optional<GridIndex> node_at(const Vec3& x, double tol = 1e-9) const;

 private:
  Vec3 origin_ = Vec3::Zero();
  double spacing_ = 1.0;
  GridIndex dims_{0, 0, 0};
};

// ---------------------------------------------------------------------------
// Tetrahedral mesh (FE part)
// ---------------------------------------------------------------------------

using Tet = std::array<Index, 4>;

struct BoundaryFacet {
  std::array<Index, 3> v;
  int tag = 0;
};

/// Red refinement history; shared read-only between successive mesh values.
struct RefinementForest;

struct TetraMesh {
  std::vector<Vec3> vertices;
  std::vector<Tet> tets;
  std::vector<int> level;
  std::vector<Index> parent;  // -1 for root elements
  std::vector<BoundaryFacet> boundary_facets;

  // Forest leaf each element was produced from; green closure elements share
  // the leaf of the element they split.
  std::vector<Index> leaf;
  std::vector<char> green;
  std::shared_ptr<const RefinementForest> forest;

  Index vertex_count() const { return static_cast<Index>(vertices.size()); }
  Index tet_count() const { return static_cast<Index>(tets.size()); }
  double volume(Index t) const;
};

/// Box tags used for boundary facets of structured tet meshes.
enum BoxSide : int { kXLo = 0, kXHi = 1, kYLo = 2, kYHi = 3, kZLo = 4, kZHi = 5 };

/// Tetrahedral mesh of the box lo + [0, cells*h] with every hexahedral cell split
/// into the 6 Kuhn tetrahedra around its main diagonal (all cells alike).
TetraMesh structured_tet_mesh(const Vec3& lo, double h, GridIndex cells);

/// Per-element diameter h_K (longest edge).
using MeshSizeField = Eigen::VectorXd;
MeshSizeField mesh_size(const TetraMesh& mesh);

double min_edge_length(const TetraMesh& mesh);

struct ConformityReport {
  bool conforming = true;
  bool positive_volumes = true;
  Index open_interior_faces = 0;     // faces used once that are not on the hull boundary
  Index overshared_faces = 0;        // faces used by more than two tets
  Index untagged_boundary_faces = 0;
  double volume = 0.0;
};

/// Exhaustive face scan; valid for meshes whose hull is an axis-aligned box.
ConformityReport check_conformity(const TetraMesh& mesh);

/// Red refinement of the marked elements with green closure. Marked green
/// elements are re-greened: their red parent leaf is refined instead.
/// Elements containing a protected vertex must stay untouched; if the closure
/// would split one, MeshError is thrown.
TetraMesh refine_local(const TetraMesh& mesh, std::span<const Index> marked,
                       std::span<const char> protected_vertices = {});

struct PointLocation {
  Index tet = -1;
  Eigen::Vector4d bary = Eigen::Vector4d::Zero();
};

inline constexpr double kLocateTolerance = 1e-10;

/// Brute-force lookup; lowest element id wins on shared faces.
std::optional<PointLocation> locate_point(const TetraMesh& mesh, const Vec3& x);

/// Bucketed point location for repeated queries on one mesh.
class PointLocator {
 public:
  explicit PointLocator(const TetraMesh& mesh);
  std::optional<PointLocation> locate(const Vec3& x) const;

 private:
  const TetraMesh* mesh_;
  Vec3 lo_, hi_;
  GridIndex dims_{1, 1, 1};
  Vec3 cell_;
  std::vector<std::vector<Index>> buckets_;
  GridIndex bucket_of(const Vec3& x) const;
};

/// P1 interpolation of a nodal field on `source` to the vertices of `target`.
NodalField interpolate_nodal(const TetraMesh& source, const NodalField& field, const TetraMesh& target);

// ---------------------------------------------------------------------------
// Hybrid domain
// ---------------------------------------------------------------------------

struct DomainSpec {
  Vec3 omega_lo{-2.0, -2.0, -2.0};
  Vec3 omega_hi{12.0, 12.0, 12.0};
  Vec3 fem_lo{0.0, 0.0, 0.0};
  Vec3 fem_hi{10.0, 10.0, 10.0};
  double h_fdm = 0.5;
};

/// Throws ConfigError when the extents are not commensurate with h_fdm or the
/// FE box is not strictly inside the domain.
void validate(const DomainSpec& spec);

enum class BoundaryPart : int { top = 1, bottom = 2, lateral = 3 };

/// One cell face on the outer boundary: its four grid nodes and its part.
struct BoundaryFace {
  std::array<Index, 4> nodes;
  BoundaryPart part;
};

/// Top is x3 = omega_hi (the illuminated, observed side), bottom is x3 = omega_lo,
/// lateral is the remaining four sides. Node sets are disjoint: edge and corner
/// nodes belong to top first, then bottom.
struct BoundaryPartition {
  std::vector<Index> top_nodes, bottom_nodes, lateral_nodes;
  std::vector<BoundaryFace> top_facets, bottom_facets, lateral_facets;
};

struct OverlapPair {
  Index fem = -1;
  Index fd = -1;
};

struct HybridDomain {
  DomainSpec spec;
  StructuredGrid grid;
  TetraMesh fem;
  BoundaryPartition boundary;

  GridIndex fem_lo_index{0, 0, 0};  // grid index of fem_lo
  GridIndex fem_hi_index{0, 0, 0};  // grid index of fem_hi

  // Two-layer overlap. Interface nodes lie on the FE boundary and are copied
  // FD -> FE; inner-layer nodes are one cell inside and are copied FE -> FD.
  std::vector<OverlapPair> interface;
  std::vector<OverlapPair> inner_layer;

  std::vector<char> fem_on_interface;  // per FE vertex
  std::vector<char> fem_pinned;        // per FE vertex: inside the overlap shell, eps = 1, sigma = 0
  std::vector<Index> fd_active;        // FD nodes advanced by the FD stencil

  /// All overlap pairs (interface then inner layer).
  std::vector<OverlapPair> overlap() const;

  /// Distance from x to the FE boundary, in units of h_fdm (0 on the boundary).
  double depth_in_cells(const Vec3& x) const;
};

HybridDomain build_hybrid_domain(const DomainSpec& spec);

/// Same domain with a (refined) FE mesh. The FE boundary must be unrefined.
HybridDomain with_fem_mesh(const HybridDomain& domain, TetraMesh mesh);

/// Vertices touching the FE boundary, which refinement must not disturb.
std::vector<char> interface_vertices(const HybridDomain& domain);

}  // namespace wcip
