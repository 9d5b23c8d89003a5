#include "forest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace wcip {

namespace {

using Face = std::array<Index, 3>;

Face sorted_face(Index a, Index b, Index c) {
  Face f{a, b, c};
  std::sort(f.begin(), f.end());
  return f;
}

struct FaceHash {
  std::size_t operator()(const Face& f) const {
    std::size_t h = 1469598103934665603ull;
    for (Index v : f) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ull;
    return h;
  }
};

constexpr std::array<std::array<int, 3>, 4> kTetFaces{{{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};

bool point_in_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c, double tol) {
  const Vec3 n = (b - a).cross(c - a);
  const double area2 = n.norm();
  if (area2 == 0.0) return false;
  if (std::abs((p - a).dot(n)) / area2 > tol) return false;
  const double l0 = (b - p).cross(c - p).dot(n) / (area2 * area2);
  const double l1 = (c - p).cross(a - p).dot(n) / (area2 * area2);
  const double l2 = 1.0 - l0 - l1;
  return l0 >= -tol && l1 >= -tol && l2 >= -tol;
}

}  // namespace

double TetraMesh::volume(Index t) const {
  const Tet& k = tets[static_cast<std::size_t>(t)];
  return signed_volume<double>(vertices[k[0]], vertices[k[1]], vertices[k[2]], vertices[k[3]]);
}

Tet oriented(const std::vector<Vec3>& vertices, Tet t) {
  if (signed_volume<double>(vertices[t[0]], vertices[t[1]], vertices[t[2]], vertices[t[3]]) < 0.0)
    std::swap(t[2], t[3]);
  return t;
}

std::vector<BoundaryFacet> tag_boundary(const std::vector<Vec3>& vertices, const std::vector<Tet>& tets,
                                        const std::vector<BoundaryFacet>& root_facets) {
  std::unordered_map<Face, int, FaceHash> count;
  std::unordered_map<Face, Face, FaceHash> original;
  for (const Tet& t : tets) {
    for (const auto& lf : kTetFaces) {
      const Face f = sorted_face(t[lf[0]], t[lf[1]], t[lf[2]]);
      if (++count[f] == 1) original[f] = {t[lf[0]], t[lf[1]], t[lf[2]]};
    }
  }
  std::unordered_map<Face, int, FaceHash> root_tag;
  for (const BoundaryFacet& bf : root_facets) root_tag[sorted_face(bf.v[0], bf.v[1], bf.v[2])] = bf.tag;

  std::vector<BoundaryFacet> out;
  for (const auto& [f, n] : count) {
    if (n != 1) continue;
    BoundaryFacet bf{original[f], -1};
    if (auto it = root_tag.find(f); it != root_tag.end()) {
      bf.tag = it->second;
    } else {
      const Vec3 c = (vertices[f[0]] + vertices[f[1]] + vertices[f[2]]) / 3.0;
      for (const BoundaryFacet& rf : root_facets) {
        if (point_in_triangle(c, vertices[rf.v[0]], vertices[rf.v[1]], vertices[rf.v[2]], 1e-9)) {
          bf.tag = rf.tag;
          break;
        }
      }
    }
    out.push_back(bf);
  }
  std::sort(out.begin(), out.end(), [](const BoundaryFacet& a, const BoundaryFacet& b) {
    return sorted_face(a.v[0], a.v[1], a.v[2]) < sorted_face(b.v[0], b.v[1], b.v[2]);
  });
  return out;
}

TetraMesh structured_tet_mesh(const Vec3& lo, double h, GridIndex cells) {
  for (Index c : cells)
    if (c < 1) throw ConfigError("structured tet mesh needs at least one cell per axis");
  const Index nx = cells[0] + 1, ny = cells[1] + 1, nz = cells[2] + 1;
  auto vid = [&](Index i, Index j, Index k) { return i + nx * (j + ny * k); };

  TetraMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nx * ny * nz));
  for (Index k = 0; k < nz; ++k)
    for (Index j = 0; j < ny; ++j)
      for (Index i = 0; i < nx; ++i) mesh.vertices.push_back(lo + h * Vec3(double(i), double(j), double(k)));

  // Kuhn paths from the cell's min corner to its max corner, one per axis permutation.
  constexpr std::array<std::array<int, 3>, 6> perms{{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  auto forest = std::make_shared<RefinementForest>();
  for (Index k = 0; k < cells[2]; ++k)
    for (Index j = 0; j < cells[1]; ++j)
      for (Index i = 0; i < cells[0]; ++i)
        for (const auto& p : perms) {
          std::array<Index, 3> c{i, j, k};
          Tet path;
          path[0] = vid(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[p[s]];
            path[s + 1] = vid(c[0], c[1], c[2]);
          }
          forest->tets.push_back({path, -1, 0, -1});
          mesh.tets.push_back(oriented(mesh.vertices, path));
        }

  const std::size_t nt = mesh.tets.size();
  mesh.level.assign(nt, 0);
  mesh.parent.assign(nt, -1);
  mesh.green.assign(nt, 0);
  mesh.leaf.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) mesh.leaf[t] = static_cast<Index>(t);

  // Each boundary quad is split along the diagonal through its min corner, as the
  // Kuhn tets induce.
  auto add_quad = [&](Index a, Index b, Index c, Index d, int tag) {
    forest->root_facets.push_back({{a, b, d}, tag});
    forest->root_facets.push_back({{a, d, c}, tag});
  };
  for (Index k = 0; k < cells[2]; ++k)
    for (Index j = 0; j < cells[1]; ++j) {
      add_quad(vid(0, j, k), vid(0, j + 1, k), vid(0, j, k + 1), vid(0, j + 1, k + 1), kXLo);
      const Index x = cells[0];
      add_quad(vid(x, j, k), vid(x, j + 1, k), vid(x, j, k + 1), vid(x, j + 1, k + 1), kXHi);
    }
  for (Index k = 0; k < cells[2]; ++k)
    for (Index i = 0; i < cells[0]; ++i) {
      add_quad(vid(i, 0, k), vid(i + 1, 0, k), vid(i, 0, k + 1), vid(i + 1, 0, k + 1), kYLo);
      const Index y = cells[1];
      add_quad(vid(i, y, k), vid(i + 1, y, k), vid(i, y, k + 1), vid(i + 1, y, k + 1), kYHi);
    }
  for (Index j = 0; j < cells[1]; ++j)
    for (Index i = 0; i < cells[0]; ++i) {
      add_quad(vid(i, j, 0), vid(i + 1, j, 0), vid(i, j + 1, 0), vid(i + 1, j + 1, 0), kZLo);
      const Index z = cells[2];
      add_quad(vid(i, j, z), vid(i + 1, j, z), vid(i, j + 1, z), vid(i + 1, j + 1, z), kZHi);
    }
  mesh.boundary_facets = tag_boundary(mesh.vertices, mesh.tets, forest->root_facets);
  mesh.forest = std::move(forest);
  return mesh;
}

MeshSizeField mesh_size(const TetraMesh& mesh) {
  MeshSizeField h(mesh.tet_count());
  for (Index t = 0; t < mesh.tet_count(); ++t) {
    const Tet& k = mesh.tets[static_cast<std::size_t>(t)];
    double longest = 0.0;
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        longest = std::max(longest, (mesh.vertices[k[a]] - mesh.vertices[k[b]]).norm());
    h(t) = longest;
  }
  return h;
}

double min_edge_length(const TetraMesh& mesh) {
  double shortest = std::numeric_limits<double>::infinity();
  for (const Tet& k : mesh.tets)
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        shortest = std::min(shortest, (mesh.vertices[k[a]] - mesh.vertices[k[b]]).norm());
  return shortest;
}

ConformityReport check_conformity(const TetraMesh& mesh) {
  ConformityReport report;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Vec3& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double scale = (hi - lo).maxCoeff();
  const double tol = 1e-9 * scale;

  std::unordered_map<Face, int, FaceHash> count;
  for (Index t = 0; t < mesh.tet_count(); ++t) {
    const double vol = mesh.volume(t);
    if (!(vol > 0.0)) report.positive_volumes = false;
    report.volume += vol;
    const Tet& k = mesh.tets[static_cast<std::size_t>(t)];
    for (const auto& lf : kTetFaces) ++count[sorted_face(k[lf[0]], k[lf[1]], k[lf[2]])];
  }

  std::unordered_map<Face, int, FaceHash> tagged;
  for (const BoundaryFacet& bf : mesh.boundary_facets)
    if (bf.tag >= 0) tagged[sorted_face(bf.v[0], bf.v[1], bf.v[2])] = bf.tag;

  for (const auto& [f, n] : count) {
    if (n > 2) ++report.overshared_faces;
    if (n != 1) continue;
    bool on_hull = false;
    for (int d = 0; d < 3 && !on_hull; ++d) {
      for (double plane : {lo(d), hi(d)}) {
        if (std::abs(mesh.vertices[f[0]](d) - plane) < tol && std::abs(mesh.vertices[f[1]](d) - plane) < tol &&
            std::abs(mesh.vertices[f[2]](d) - plane) < tol)
          on_hull = true;
      }
    }
    if (!on_hull) ++report.open_interior_faces;
    if (!tagged.contains(f)) ++report.untagged_boundary_faces;
  }
  const double box = (hi - lo).prod();
  report.conforming = report.positive_volumes && report.open_interior_faces == 0 && report.overshared_faces == 0 &&
                      std::abs(report.volume - box) <= 1e-9 * box;
  return report;
}

}  // namespace wcip
