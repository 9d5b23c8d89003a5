#pragma once

#include "wcip/mesh.hpp"

#include <unordered_map>

namespace wcip {

struct ForestTet {
  Tet v;  // vertex order carries the Kuhn path order used by the red rule
  Index parent = -1;
  int level = 0;
  Index first_child = -1;  // children are stored contiguously, 8 of them

  bool is_leaf() const { return first_child < 0; }
};

struct RefinementForest {
  std::vector<ForestTet> tets;
  std::unordered_map<std::uint64_t, Index> midpoints;  // edge key -> vertex id
  std::vector<BoundaryFacet> root_facets;

  std::optional<Index> midpoint(Index a, Index b) const {
    auto it = midpoints.find(edge_key(a, b));
    if (it == midpoints.end()) return std::nullopt;
    return it->second;
  }

  static std::uint64_t edge_key(Index a, Index b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
  }
};

/// Reorders t so that its signed volume is positive.
Tet oriented(const std::vector<Vec3>& vertices, Tet t);

std::vector<BoundaryFacet> tag_boundary(const std::vector<Vec3>& vertices, const std::vector<Tet>& tets,
                                        const std::vector<BoundaryFacet>& root_facets);

}  // namespace wcip
