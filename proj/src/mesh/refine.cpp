#include "forest.hpp"

#include <algorithm>

namespace wcip {

namespace {

// Local edge numbering shared by the pattern analysis and the red rule.
constexpr std::array<std::array<int, 2>, 6> kEdges{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

struct SplitPattern {
  std::array<Index, 6> mid{-1, -1, -1, -1, -1, -1};
  int count = 0;
  bool nested = false;  // a split edge has a split half: the leaf is two levels coarser

  bool split(int e) const { return mid[e] >= 0; }
};

SplitPattern analyse(const RefinementForest& forest, const Tet& v) {
  SplitPattern p;
  for (int e = 0; e < 6; ++e) {
    const Index a = v[kEdges[e][0]], b = v[kEdges[e][1]];
    if (auto m = forest.midpoint(a, b)) {
      p.mid[e] = *m;
      ++p.count;
      if (forest.midpoint(a, *m) || forest.midpoint(*m, b)) p.nested = true;
    }
  }
  return p;
}

// Faces as local edge triples.
constexpr std::array<std::array<int, 3>, 4> kFaceEdges{{{3, 4, 5}, {1, 2, 5}, {0, 2, 4}, {0, 1, 3}}};

int full_face(const SplitPattern& p) {
  for (int f = 0; f < 4; ++f)
    if (p.split(kFaceEdges[f][0]) && p.split(kFaceEdges[f][1]) && p.split(kFaceEdges[f][2])) return f;
  return -1;
}

bool greenable(const SplitPattern& p) {
  if (p.nested) return false;
  if (p.count <= 2) return true;
  return p.count == 3 && full_face(p) >= 0;
}

// Recursive bisection along the listed global edges, in order.
void bisect(const RefinementForest& forest, const Tet& t, const std::vector<std::array<Index, 2>>& edges,
            std::vector<Tet>& out) {
  for (const auto& e : edges) {
    int ia = -1, ib = -1;
    for (int i = 0; i < 4; ++i) {
      if (t[i] == e[0]) ia = i;
      if (t[i] == e[1]) ib = i;
    }
    if (ia < 0 || ib < 0) continue;
    const Index m = *forest.midpoint(e[0], e[1]);
    Tet left = t, right = t;
    left[ib] = m;
    right[ia] = m;
    bisect(forest, left, edges, out);
    bisect(forest, right, edges, out);
    return;
  }
  out.push_back(t);
}

std::vector<Tet> green_children(const RefinementForest& forest, const Tet& v, const SplitPattern& p) {
  std::vector<Tet> out;
  if (p.count == 3) {
    const int f = full_face(p);
    const Index apex = v[f];
    std::array<Index, 3> corner;
    int n = 0;
    for (int i = 0; i < 4; ++i)
      if (i != f) corner[n++] = v[i];
    const Index m01 = *forest.midpoint(corner[0], corner[1]);
    const Index m02 = *forest.midpoint(corner[0], corner[2]);
    const Index m12 = *forest.midpoint(corner[1], corner[2]);
    out.push_back({corner[0], m01, m02, apex});
    out.push_back({m01, corner[1], m12, apex});
    out.push_back({m02, m12, corner[2], apex});
    out.push_back({m01, m12, m02, apex});
    return out;
  }
  std::vector<std::array<Index, 2>> edges;
  for (int e = 0; e < 6; ++e) {
    if (!p.split(e)) continue;
    Index a = v[kEdges[e][0]], b = v[kEdges[e][1]];
    if (a > b) std::swap(a, b);
    edges.push_back({a, b});
  }
  // Two split edges on one face: the larger edge key is bisected first, so both
  // tets sharing that face triangulate it identically.
  std::sort(edges.begin(), edges.end(), std::greater<>());
  bisect(forest, v, edges, out);
  return out;
}

}  // namespace

TetraMesh refine_local(const TetraMesh& mesh, std::span<const Index> marked, std::span<const char> protected_vertices) {
  if (marked.empty()) return mesh;
  if (!mesh.forest) throw MeshError("mesh carries no refinement history");

  auto forest = std::make_shared<RefinementForest>(*mesh.forest);
  std::vector<Vec3> vertices = mesh.vertices;

  auto touches_protected = [&](const Tet& t) {
    for (Index v : t)
      if (static_cast<std::size_t>(v) < protected_vertices.size() && protected_vertices[v]) return true;
    return false;
  };

  auto midpoint = [&](Index a, Index b) {
    const auto key = RefinementForest::edge_key(a, b);
    if (auto it = forest->midpoints.find(key); it != forest->midpoints.end()) return it->second;
    const Index m = static_cast<Index>(vertices.size());
    vertices.push_back(0.5 * (vertices[a] + vertices[b]));
    forest->midpoints.emplace(key, m);
    return m;
  };

  auto red_refine = [&](Index leaf) {
    ForestTet& parent = forest->tets[static_cast<std::size_t>(leaf)];
    if (!parent.is_leaf()) return;
    if (touches_protected(parent.v)) throw MeshError("refinement closure reaches a protected element");
    const Tet x = parent.v;
    const int level = parent.level + 1;
    const Index x01 = midpoint(x[0], x[1]), x02 = midpoint(x[0], x[2]), x03 = midpoint(x[0], x[3]);
    const Index x12 = midpoint(x[1], x[2]), x13 = midpoint(x[1], x[3]), x23 = midpoint(x[2], x[3]);
    // Corner tets plus the octahedron cut along x02-x13. With Kuhn path ordering
    // all eight children are again Kuhn tets of half size.
    const std::array<Tet, 8> kids{{{x[0], x01, x02, x03},
                                   {x01, x[1], x12, x13},
                                   {x02, x12, x[2], x23},
                                   {x03, x13, x23, x[3]},
                                   {x01, x02, x03, x13},
                                   {x01, x02, x12, x13},
                                   {x02, x03, x13, x23},
                                   {x02, x12, x13, x23}}};
    const Index first = static_cast<Index>(forest->tets.size());
    forest->tets[static_cast<std::size_t>(leaf)].first_child = first;
    for (const Tet& k : kids) forest->tets.push_back({k, leaf, level, -1});
  };

  std::vector<Index> pending;
  for (Index t : marked) {
    if (t < 0 || t >= mesh.tet_count()) throw MeshError("marked element id out of range");
    pending.push_back(mesh.leaf[static_cast<std::size_t>(t)]);
  }

  while (!pending.empty()) {
    std::sort(pending.begin(), pending.end());
    pending.erase(std::unique(pending.begin(), pending.end()), pending.end());
    for (Index leaf : pending) red_refine(leaf);
    pending.clear();
    for (Index i = 0; i < static_cast<Index>(forest->tets.size()); ++i) {
      const ForestTet& ft = forest->tets[static_cast<std::size_t>(i)];
      if (!ft.is_leaf()) continue;
      const SplitPattern p = analyse(*forest, ft.v);
      if (p.count == 0) continue;
      if (touches_protected(ft.v)) throw MeshError("refinement closure reaches a protected element");
      if (!greenable(p)) pending.push_back(i);
    }
  }

  TetraMesh out;
  out.vertices = std::move(vertices);
  for (Index i = 0; i < static_cast<Index>(forest->tets.size()); ++i) {
    const ForestTet& ft = forest->tets[static_cast<std::size_t>(i)];
    if (!ft.is_leaf()) continue;
    const SplitPattern p = analyse(*forest, ft.v);
    if (p.count == 0) {
      out.tets.push_back(oriented(out.vertices, ft.v));
      out.level.push_back(ft.level);
      out.parent.push_back(ft.parent);
      out.leaf.push_back(i);
      out.green.push_back(0);
      continue;
    }
    for (const Tet& g : green_children(*forest, ft.v, p)) {
      out.tets.push_back(oriented(out.vertices, g));
      out.level.push_back(ft.level);
      out.parent.push_back(i);
      out.leaf.push_back(i);
      out.green.push_back(1);
    }
  }
  out.boundary_facets = tag_boundary(out.vertices, out.tets, forest->root_facets);
  out.forest = std::move(forest);
  return out;
}

}  // namespace wcip
