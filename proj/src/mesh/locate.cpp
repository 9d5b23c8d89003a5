#include "wcip/mesh.hpp"

#include <algorithm>
#include <cmath>

namespace wcip {

namespace {

std::optional<PointLocation> try_tet(const TetraMesh& mesh, Index t, const Vec3& x) {
  const Tet& k = mesh.tets[static_cast<std::size_t>(t)];
  const Eigen::Vector4d bary = barycentric_coordinates<double>(x, mesh.vertices[k[0]], mesh.vertices[k[1]],
                                                               mesh.vertices[k[2]], mesh.vertices[k[3]]);
  if (bary.minCoeff() < -kLocateTolerance || bary.maxCoeff() > 1.0 + kLocateTolerance) return std::nullopt;
  return PointLocation{t, bary};
}

}  // namespace

std::optional<PointLocation> locate_point(const TetraMesh& mesh, const Vec3& x) {
  for (Index t = 0; t < mesh.tet_count(); ++t)
    if (auto loc = try_tet(mesh, t, x)) return loc;
  return std::nullopt;
}

PointLocator::PointLocator(const TetraMesh& mesh) : mesh_(&mesh) {
  lo_ = Vec3::Constant(std::numeric_limits<double>::infinity());
  hi_ = -lo_;
  for (const Vec3& v : mesh.vertices) {
    lo_ = lo_.cwiseMin(v);
    hi_ = hi_.cwiseMax(v);
  }
  if (mesh.tets.empty()) return;
  const double per_axis = std::max(1.0, std::cbrt(double(mesh.tet_count()) / 4.0));
  const Vec3 extent = (hi_ - lo_).cwiseMax(1e-300);
  const double edge = extent.maxCoeff() / per_axis;
  for (int d = 0; d < 3; ++d) {
    dims_[d] = std::max<Index>(1, static_cast<Index>(std::ceil(extent(d) / edge)));
    cell_(d) = extent(d) / double(dims_[d]);
  }
  buckets_.resize(static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]));
  for (Index t = 0; t < mesh.tet_count(); ++t) {
    Vec3 tlo = Vec3::Constant(std::numeric_limits<double>::infinity()), thi = -tlo;
    for (Index v : mesh.tets[static_cast<std::size_t>(t)]) {
      tlo = tlo.cwiseMin(mesh.vertices[v]);
      thi = thi.cwiseMax(mesh.vertices[v]);
    }
    const double pad = 1e-9 * extent.maxCoeff();
    const GridIndex a = bucket_of(tlo - Vec3::Constant(pad));
    const GridIndex b = bucket_of(thi + Vec3::Constant(pad));
    for (Index k = a[2]; k <= b[2]; ++k)
      for (Index j = a[1]; j <= b[1]; ++j)
        for (Index i = a[0]; i <= b[0]; ++i)
          buckets_[static_cast<std::size_t>(i + dims_[0] * (j + dims_[1] * k))].push_back(t);
  }
}

GridIndex PointLocator::bucket_of(const Vec3& x) const {
  GridIndex out{};
  for (int d = 0; d < 3; ++d) {
    const auto c = static_cast<Index>(std::floor((x(d) - lo_(d)) / cell_(d)));
    out[d] = std::clamp<Index>(c, 0, dims_[d] - 1);
  }
  return out;
}

std::optional<PointLocation> PointLocator::locate(const Vec3& x) const {
  if (buckets_.empty()) return std::nullopt;
  const double slack = 1e-9 * (hi_ - lo_).maxCoeff();
  if ((x.array() < lo_.array() - slack).any() || (x.array() > hi_.array() + slack).any()) return std::nullopt;
  const GridIndex b = bucket_of(x);
  for (Index t : buckets_[static_cast<std::size_t>(b[0] + dims_[0] * (b[1] + dims_[1] * b[2]))])
    if (auto loc = try_tet(*mesh_, t, x)) return loc;
  return std::nullopt;
}

NodalField interpolate_nodal(const TetraMesh& source, const NodalField& field, const TetraMesh& target) {
  if (field.size() != source.vertex_count()) throw ContractError("field size does not match source mesh");
  const PointLocator locator(source);
  NodalField out(target.vertex_count());
  for (Index i = 0; i < target.vertex_count(); ++i) {
    const Vec3& x = target.vertices[static_cast<std::size_t>(i)];
    const auto loc = locator.locate(x);
    if (!loc) throw InterpolationError("target vertex " + std::to_string(i) + " lies outside the source mesh");
    const Tet& k = source.tets[static_cast<std::size_t>(loc->tet)];
    double value = 0.0;
    bool shared = false;
    for (int a = 0; a < 4; ++a) {
      if ((source.vertices[k[a]] - x).norm() <= 1e-12 * (1.0 + x.norm())) {
        value = field(k[a]);
        shared = true;
        break;
      }
    }
    if (!shared)
      for (int a = 0; a < 4; ++a) value += loc->bary(a) * field(k[a]);
    out(i) = value;
  }
  return out;
}

}  // namespace wcip
