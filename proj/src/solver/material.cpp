#include "wcip/solver.hpp"

#include <cmath>
#include <numbers>

namespace wcip {

MaterialField background_material(const TetraMesh& mesh, double eps_max, double sigma_max) {
  MaterialField m;
  m.eps = NodalField::Ones(mesh.vertex_count());
  m.sigma = NodalField::Zero(mesh.vertex_count());
  m.eps_max = eps_max;
  m.sigma_max = sigma_max;
  return m;
}

bool satisfies_constraints(const HybridDomain& domain, const MaterialField& material, double tol) {
  const Index n = domain.fem.vertex_count();
  if (material.eps.size() != n || material.sigma.size() != n) return false;
  for (Index i = 0; i < n; ++i) {
    const double e = material.eps(i), s = material.sigma(i);
    if (!(e >= 1.0 - tol && e <= material.eps_max + tol)) return false;
    if (!(s >= -tol && s <= material.sigma_max + tol)) return false;
    if (domain.fem_pinned[static_cast<std::size_t>(i)] && (std::abs(e - 1.0) > tol || std::abs(s) > tol)) return false;
  }
  return true;
}

TimeGrid make_time_grid(double T, double dt_max) {
  if (!(T >= 0.0)) throw ConfigError("end time must be nonnegative");
  if (!(dt_max > 0.0)) throw ConfigError("time step bound must be positive");
  TimeGrid g;
  g.T = T;
  g.n_steps = static_cast<Index>(std::ceil(T / dt_max - 1e-12));
  g.dt = g.n_steps > 0 ? T / double(g.n_steps) : dt_max;
  return g;
}

double SourceSpec::gate_end() const { return t1 > 0.0 ? t1 : 2.0 * std::numbers::pi / omega; }

void validate(const SourceSpec& spec) {
  if (!(spec.omega > 0.0)) throw ConfigError("source omega must be positive");
  if (spec.component < 1 || spec.component > 3) throw ConfigError("source component must be 1, 2 or 3");
  if (spec.t1 > 0.0 && spec.t1 < 2.0 * std::numbers::pi / spec.omega - 1e-12)
    throw ConfigError("source gate t1 closes before the pulse ends");
}

double source_value(double t, const SourceSpec& spec) {
  if (t <= 0.0 || t >= 2.0 * std::numbers::pi / spec.omega) return 0.0;
  return spec.amplitude * std::sin(spec.omega * t);
}

}  // namespace wcip
