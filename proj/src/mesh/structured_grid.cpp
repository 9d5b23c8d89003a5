#include "wcip/mesh.hpp"

#include <cmath>

namespace wcip {

StructuredGrid::StructuredGrid(const Vec3& origin, double spacing, GridIndex dims)
    : origin_(origin), spacing_(spacing), dims_(dims) {
  if (spacing <= 0.0) throw ConfigError("grid spacing must be positive");
  for (Index d : dims)
    if (d < 2) throw ConfigError("grid needs at least two nodes per axis");
}

GridIndex StructuredGrid::ijk(Index node) const {
  const Index i = node % dims_[0];
  const Index rest = node / dims_[0];
  return {i, rest % dims_[1], rest / dims_[1]};
}

Vec3 StructuredGrid::position(const GridIndex& ijk) const {
  return origin_ + spacing_ * Vec3(double(ijk[0]), double(ijk[1]), double(ijk[2]));
}

Vec3 StructuredGrid::position(Index node) const { return position(ijk(node)); }

std::optional<GridIndex> StructuredGrid::node_at(const Vec3& x, double tol) const {
  GridIndex out{};
  for (int d = 0; d < 3; ++d) {
    const double s = (x(d) - origin_(d)) / spacing_;
    const double r = std::round(s);
    if (std::abs(s - r) > tol || r < 0 || r > double(dims_[d] - 1)) return std::nullopt;
    out[d] = static_cast<Index>(r);
  }
  return out;
}

}  // namespace wcip
