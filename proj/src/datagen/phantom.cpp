#include "wcip/datagen.hpp"

#include <cmath>

namespace wcip {

bool Inclusion::contains(const Vec3& x) const {
  const Vec3 r = shape == Shape::sphere ? Vec3::Constant(radii(0)) : radii;
  return ((x - center).array() / r.array()).square().sum() <= 1.0 + 1e-12;
}

double Inclusion::extent() const { return shape == Shape::sphere ? radii(0) : radii.maxCoeff(); }

PhantomSpec phantom_preset(const std::string& name, const DomainSpec& domain) {
  PhantomSpec p;
  p.name = name;
  const Vec3 mid = 0.5 * (domain.fem_lo + domain.fem_hi);
  const double top = domain.fem_hi(2);
  if (name == "homogeneous") return p;

  Inclusion t;
  if (name == "stage1" || name == "stage1_real") {
    t.shape = Inclusion::Shape::sphere;
    t.center = Vec3(mid(0), mid(1), top - 3.0);
    t.radii = Vec3::Constant(1.5);
    t.stage = "stage1";
  } else if (name == "stage2" || name == "stage2_real") {
    t.shape = Inclusion::Shape::ellipsoid;
    t.center = Vec3(mid(0), mid(1), top - 3.5);
    t.radii = Vec3(1.5, 1.5, 2.0);
    t.stage = "stage2";
  } else {
    throw ConfigError("unknown phantom preset '" + name + "'");
  }

  if (name == "stage1" || name == "stage2") {
    t.eps = name == "stage1" ? 8.0 : 9.0;
    t.sigma = 1.2;
  } else {
    // Unweighted tissue values under an immersion layer and skin.
    t.eps = name == "stage1_real" ? 45.0 : 50.0;
    t.sigma = 6.0;
    p.eps_max = 60.0;
    p.sigma_max = 10.0;
    p.layers = {{0.0, 2.0, 32.0, 4.0}, {2.0, 3.0, 35.0, 4.0}, {3.0, 6.5, 40.0, 9.0}, {6.5, 12.0, 9.0, 1.0}};
  }
  p.tumor = t;
  return p;
}

void validate(const PhantomSpec& spec, const DomainSpec& domain) {
  auto in_box = [&](double eps, double sigma) {
    return eps >= 1.0 && eps <= spec.eps_max && sigma >= 0.0 && sigma <= spec.sigma_max;
  };
  if (!in_box(spec.background_eps, spec.background_sigma)) throw ConfigError("phantom background outside the bounds");
  for (const Layer& l : spec.layers) {
    if (!in_box(l.eps, l.sigma)) throw ConfigError("phantom layer outside the bounds");
    if (l.depth_hi < l.depth_lo || l.depth_lo < 0.0) throw ConfigError("phantom layer has an invalid depth range");
  }
  if (spec.tumor) {
    const Inclusion& t = *spec.tumor;
    if (!in_box(t.eps, t.sigma)) throw ConfigError("phantom inclusion outside the bounds");
    if ((t.radii.array() <= 0.0).any()) throw ConfigError("phantom inclusion radii must be positive");
    const Vec3 r = t.shape == Inclusion::Shape::sphere ? Vec3::Constant(t.radii(0)) : t.radii;
    if (((t.center - r).array() <= domain.fem_lo.array()).any() ||
        ((t.center + r).array() >= domain.fem_hi.array()).any())
      throw ConfigError("phantom inclusion leaves the FE box");
  }
}

MaterialField build_phantom(const PhantomSpec& spec, const HybridDomain& domain) {
  validate(spec, domain.spec);
  MaterialField m = background_material(domain.fem, spec.eps_max, spec.sigma_max);
  const double top = domain.spec.fem_hi(2);
  for (Index v = 0; v < domain.fem.vertex_count(); ++v) {
    if (domain.fem_pinned[static_cast<std::size_t>(v)]) continue;
    const Vec3& x = domain.fem.vertices[static_cast<std::size_t>(v)];
    double eps = spec.background_eps, sigma = spec.background_sigma;
    const double depth = top - x(2);
    for (const Layer& l : spec.layers)
      if (depth >= l.depth_lo && depth < l.depth_hi) {
        eps = l.eps;
        sigma = l.sigma;
      }
    if (spec.tumor && spec.tumor->contains(x)) {
      eps = spec.tumor->eps;
      sigma = spec.tumor->sigma;
    }
    m.eps(v) = eps;
    m.sigma(v) = sigma;
  }
  return m;
}

HybridDomain data_domain(const HybridDomain& domain, const PhantomSpec& spec, int levels) {
  HybridDomain d = domain;
  if (!spec.tumor) return d;
  const Inclusion& t = *spec.tumor;
  for (int level = 0; level < levels; ++level) {
    const double reach = t.extent() + std::ldexp(domain.spec.h_fdm, -level);
    std::vector<Index> marked;
    for (Index k = 0; k < d.fem.tet_count(); ++k) {
      const Tet& tet = d.fem.tets[static_cast<std::size_t>(k)];
      Vec3 c = Vec3::Zero();
      bool pinned = false;
      for (Index v : tet) {
        c += d.fem.vertices[static_cast<std::size_t>(v)] / 4.0;
        pinned = pinned || d.fem_pinned[static_cast<std::size_t>(v)];
      }
      if (!pinned && (c - t.center).norm() <= reach) marked.push_back(k);
    }
    try {
      d = with_fem_mesh(d, refine_local(d.fem, marked, interface_vertices(d)));
    } catch (const MeshError&) {
      throw ConfigError("inclusion is too close to the FE boundary for local refinement");
    }
  }
  return d;
}

}  // namespace wcip
