#pragma once

#include "wcip/objective.hpp"

#include <optional>
#include <string>

namespace wcip {

struct Inclusion {
  enum class Shape { sphere, ellipsoid };
  Shape shape = Shape::sphere;
  Vec3 center = Vec3::Zero();
  Vec3 radii = Vec3::Ones();  // sphere uses radii(0)
  double eps = 1.0;
  double sigma = 0.0;
  std::string stage;

  bool contains(const Vec3& x) const;
  /// Radius of the smallest ball around the center containing the inclusion.
  double extent() const;
};

/// Horizontal slab measured downwards from the top of the FE box.
struct Layer {
  double depth_lo = 0.0;
  double depth_hi = 0.0;
  double eps = 1.0;
  double sigma = 0.0;
};

struct PhantomSpec {
  std::string name;
  double background_eps = 1.0;
  double background_sigma = 0.0;
  std::vector<Layer> layers;
  std::optional<Inclusion> tumor;
  double eps_max = 10.0;
  double sigma_max = 2.0;
};

/// Presets: homogeneous, stage1, stage2 (weighted test values), stage1_real,
/// stage2_real (unweighted values with skin layers). Geometry scales with the FE box.
PhantomSpec phantom_preset(const std::string& name, const DomainSpec& domain);

/// Throws ConfigError when the phantom leaves the FE box or violates the boxes.
void validate(const PhantomSpec& spec, const DomainSpec& domain);

/// Nodal values by point-in-region tests; pinned vertices stay vacuum.
MaterialField build_phantom(const PhantomSpec& spec, const HybridDomain& domain);

/// Domain whose FE mesh is refined `levels` times around the inclusion.
HybridDomain data_domain(const HybridDomain& domain, const PhantomSpec& spec, int levels);

struct NoiseSpec {
  double delta = 0.0;
  std::uint64_t seed = 0;
};

struct DataGenOptions {
  int fine_level = 1;       // refinements of the data mesh
  int inversion_level = 0;  // refinement level the data will be inverted on
  bool allow_inverse_crime = false;
  double T = 12.0;
  std::optional<Index> n_steps;  // fixed step count at the stable step, overrides T
  double zeta_fraction = 0.1;
  Index snapshot_every = 0;
  std::function<void(Index, const HybridDomain&, const VectorField&)> snapshot;
};

struct GeneratedData {
  ObservationSet obs;
  HybridDomain domain;  // the data mesh
  MaterialField material;
  TimeGrid grid;
};

/// Forward solve on the data mesh, recording the top boundary. Refuses with
/// InverseCrimeError when fine_level <= inversion_level unless allowed.
GeneratedData generate_observations(const HybridDomain& domain, const PhantomSpec& phantom, const SourceSpec& source,
                                    const SolverOptions& solver, const DataGenOptions& options);

/// Multiplicative uniform noise E (1 + delta u), u in [-1, 1], one draw per sample.
ObservationSet add_noise(const ObservationSet& obs, const NoiseSpec& noise);

}  // namespace wcip
