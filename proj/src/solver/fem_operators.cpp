#include "wcip/solver.hpp"

#include <cmath>

namespace wcip {

FemGeometry fem_geometry(const TetraMesh& mesh) {
  FemGeometry g;
  const Index nt = mesh.tet_count();
  g.volume.resize(nt);
  g.grad.resize(static_cast<std::size_t>(nt));
  g.lumped_mass = Eigen::VectorXd::Zero(mesh.vertex_count());
  for (Index t = 0; t < nt; ++t) {
    const Tet& k = mesh.tets[static_cast<std::size_t>(t)];
    const Vec3 &a = mesh.vertices[k[0]], &b = mesh.vertices[k[1]], &c = mesh.vertices[k[2]], &d = mesh.vertices[k[3]];
    const double vol = signed_volume<double>(a, b, c, d);
    const double scale = std::max({(b - a).norm(), (c - a).norm(), (d - a).norm()});
    if (!(vol > 1e-12 * scale * scale * scale)) throw MeshError("degenerate element " + std::to_string(t));
    g.volume(t) = vol;
    g.grad[static_cast<std::size_t>(t)] = barycentric_gradients<double>(a, b, c, d);
    for (Index v : k) g.lumped_mass(v) += vol / 4.0;
  }
  return g;
}

FemOperators assemble_fem_operators(const TetraMesh& mesh, const FemGeometry& geometry, const MaterialField& material) {
  const Index n = mesh.vertex_count();
  if (material.eps.size() != n || material.sigma.size() != n)
    throw ContractError("material does not match the FE mesh");
  FemOperators ops;
  ops.mass_eps = material.eps.cwiseProduct(geometry.lumped_mass);
  ops.damping = material.sigma.cwiseProduct(geometry.lumped_mass);

  std::vector<Eigen::Triplet<double>> k_trip, g_trip, a_trip;
  k_trip.reserve(static_cast<std::size_t>(mesh.tet_count()) * 16);
  a_trip.reserve(static_cast<std::size_t>(mesh.tet_count()) * 48);
  for (Index t = 0; t < mesh.tet_count(); ++t) {
    const Tet& k = mesh.tets[static_cast<std::size_t>(t)];
    const auto& grad = geometry.grad[static_cast<std::size_t>(t)];
    const double vol = geometry.volume(t);
    const Eigen::Matrix4d ke = vol * grad * grad.transpose();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        k_trip.emplace_back(k[i], k[j], ke(i, j));
        for (int a = 0; a < 3; ++a) a_trip.emplace_back(3 * k[i] + a, 3 * k[j] + a, ke(i, j));
      }
    double w = 0.0;
    for (Index v : k) w += material.eps(v) - 1.0;
    w /= 4.0;
    if (w == 0.0) continue;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) {
            const double v = w * vol * grad(i, a) * grad(j, b);
            g_trip.emplace_back(3 * k[i] + a, 3 * k[j] + b, v);
            a_trip.emplace_back(3 * k[i] + a, 3 * k[j] + b, v);
          }
  }
  ops.stiffness.resize(n, n);
  ops.stiffness.setFromTriplets(k_trip.begin(), k_trip.end());
  ops.graddiv.resize(3 * n, 3 * n);
  ops.graddiv.setFromTriplets(g_trip.begin(), g_trip.end());
  ops.system.resize(3 * n, 3 * n);
  ops.system.setFromTriplets(a_trip.begin(), a_trip.end());
  return ops;
}

FemOperators assemble_fem_operators(const TetraMesh& mesh, const MaterialField& material) {
  return assemble_fem_operators(mesh, fem_geometry(mesh), material);
}

Eigen::VectorXd element_divergence(const TetraMesh& mesh, const FemGeometry& geometry,
                                   Eigen::Ref<const Eigen::VectorXd> field) {
  Eigen::VectorXd div(mesh.tet_count());
  for (Index t = 0; t < mesh.tet_count(); ++t) {
    const Tet& k = mesh.tets[static_cast<std::size_t>(t)];
    const auto& grad = geometry.grad[static_cast<std::size_t>(t)];
    double s = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int a = 0; a < 3; ++a) s += grad(i, a) * field(3 * k[i] + a);
    div(t) = s;
  }
  return div;
}

double fem_spectral_radius(const TetraMesh& mesh, const MaterialField& material, int iterations) {
  const FemGeometry geometry = fem_geometry(mesh);
  const FemOperators ops = assemble_fem_operators(mesh, geometry, material);
  const Index n = 3 * mesh.vertex_count();
  Eigen::VectorXd inv_mass(n);
  for (Index i = 0; i < mesh.vertex_count(); ++i) inv_mass.segment<3>(3 * i).setConstant(1.0 / ops.mass_eps(i));

  // Symmetric form S = M^{-1/2} A M^{-1/2}; deterministic start vector.
  const Eigen::VectorXd inv_sqrt = inv_mass.cwiseSqrt();
  Eigen::VectorXd x(n);
  for (Index i = 0; i < n; ++i) x(i) = 1.0 + 0.37 * std::sin(1.3 * double(i)) + ((i % 2) ? 0.5 : -0.5);
  x.normalize();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd y = inv_sqrt.cwiseProduct(ops.system * inv_sqrt.cwiseProduct(x));
    lambda = x.dot(y);
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    x = y / norm;
  }
  return lambda;
}

}  // namespace wcip
