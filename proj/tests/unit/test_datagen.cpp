#include "wcip/datagen.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace wcip;

namespace {

DomainSpec desk_spec(double h = 0.5) {
  DomainSpec s;
  s.omega_lo = Vec3::Constant(-1.0);
  s.omega_hi = Vec3::Constant(7.0);
  s.fem_lo = Vec3::Zero();
  s.fem_hi = Vec3::Constant(6.0);
  s.h_fdm = h;
  return s;
}

ObservationSet random_obs(Index nodes, Index steps) {
  ObservationSet obs;
  obs.trace.nodes.resize(static_cast<std::size_t>(nodes));
  for (Index i = 0; i < nodes; ++i) obs.trace.nodes[static_cast<std::size_t>(i)] = i;
  obs.trace.dt = 0.01;
  obs.trace.n_steps = steps;
  obs.trace.values = Eigen::MatrixXd::Random(3 * nodes, steps) + Eigen::MatrixXd::Constant(3 * nodes, steps, 2.0);
  obs.mask.assign(static_cast<std::size_t>(nodes), 1);
  obs.weights = Eigen::VectorXd::Ones(nodes);
  return obs;
}

double rms_relative(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_SUITE("datagen") {
  TEST_CASE("weighted presets") {
    const DomainSpec s = desk_spec();
    const PhantomSpec p1 = phantom_preset("stage1", s);
    REQUIRE(p1.tumor);
    CHECK(p1.tumor->eps == 8.0);
    CHECK(p1.tumor->sigma == 1.2);
    CHECK(p1.background_eps == 1.0);
    CHECK(p1.background_sigma == 0.0);
    const PhantomSpec p2 = phantom_preset("stage2", s);
    REQUIRE(p2.tumor);
    CHECK(p2.tumor->eps == 9.0);
    CHECK_THROWS_AS(phantom_preset("stage7", s), ConfigError);
  }

  TEST_CASE("phantom nodal values") {
    const HybridDomain d = build_hybrid_domain(desk_spec());
    const PhantomSpec p = phantom_preset("stage1", d.spec);
    const MaterialField m = build_phantom(p, d);
    CHECK(satisfies_constraints(d, m));
    for (Index v = 0; v < d.fem.vertex_count(); ++v) {
      const Vec3& x = d.fem.vertices[static_cast<std::size_t>(v)];
      const bool inside = (x - p.tumor->center).norm() <= p.tumor->radii(0) + 1e-12;
      if (d.fem_pinned[static_cast<std::size_t>(v)] || !inside) {
        CHECK(m.eps(v) == 1.0);
        CHECK(m.sigma(v) == 0.0);
      } else {
        CHECK(m.eps(v) == 8.0);
        CHECK(m.sigma(v) == 1.2);
      }
    }
  }

  TEST_CASE("empty phantom gives the background everywhere") {
    const HybridDomain d = build_hybrid_domain(desk_spec());
    const MaterialField m = build_phantom(PhantomSpec{}, d);
    const MaterialField bg = background_material(d.fem);
    CHECK(m.eps == bg.eps);
    CHECK(m.sigma == bg.sigma);
  }

  TEST_CASE("invalid phantoms are rejected") {
    const DomainSpec s = desk_spec();
    PhantomSpec p = phantom_preset("stage1", s);
    p.tumor->center = Vec3(0.5, 3.0, 3.0);
    CHECK_THROWS_AS(validate(p, s), ConfigError);
    p = phantom_preset("stage1", s);
    p.tumor->eps = 0.5;
    CHECK_THROWS_AS(validate(p, s), ConfigError);
  }

  TEST_CASE("inverse crime guard") {
    const HybridDomain d = build_hybrid_domain(desk_spec(1.0));
    DataGenOptions o;
    o.fine_level = 0;
    o.inversion_level = 0;
    o.n_steps = 3;
    CHECK_THROWS_AS(generate_observations(d, PhantomSpec{}, SourceSpec{}, SolverOptions{}, o), InverseCrimeError);
    o.allow_inverse_crime = true;
    const GeneratedData g = generate_observations(d, PhantomSpec{}, SourceSpec{}, SolverOptions{}, o);
    CHECK(g.obs.trace.n_steps == 3);
    CHECK(g.obs.trace.nodes == g.domain.boundary.top_nodes);
  }

  TEST_CASE("zero noise is the identity") {
    const ObservationSet obs = random_obs(5, 40);
    const ObservationSet n = add_noise(obs, {0.0, 9});
    CHECK(n.trace.values == obs.trace.values);
  }

  TEST_CASE("noise moments") {
    const ObservationSet obs = random_obs(100, 334);
    REQUIRE(obs.trace.values.size() >= 100000);
    const double delta = 0.1;
    const ObservationSet n = add_noise(obs, {delta, 42});
    CHECK(n.noise_level == delta);
    CHECK(n.seed == 42u);
    const Eigen::ArrayXXd rel = n.trace.values.array() / obs.trace.values.array() - 1.0;
    CHECK(rel.abs().maxCoeff() <= delta * (1.0 + 1e-12));
    const double rms = std::sqrt(rel.square().mean());
    CHECK(std::abs(rms - delta / std::sqrt(3.0)) <= 0.02 * delta / std::sqrt(3.0));
    CHECK(std::abs(rel.mean()) < 0.01 * delta);
  }

  TEST_CASE("seeded noise is reproducible") {
    const ObservationSet obs = random_obs(10, 50);
    const ObservationSet a = add_noise(obs, {0.1, 7});
    const ObservationSet b = add_noise(obs, {0.1, 7});
    const ObservationSet c = add_noise(obs, {0.1, 8});
    CHECK(a.trace.values == b.trace.values);
    CHECK(a.trace.values != c.trace.values);
  }

  TEST_CASE("noise keeps zero samples zero") {
    ObservationSet obs = random_obs(4, 30);
    obs.trace.values.col(3).setZero();
    obs.trace.values(5, 10) = 0.0;
    const ObservationSet n = add_noise(obs, {0.5, 1});
    CHECK(n.trace.values.col(3).isZero(0.0));
    CHECK(n.trace.values(5, 10) == 0.0);
  }

  TEST_CASE("negative noise is rejected") {
    CHECK_THROWS_AS(add_noise(random_obs(1, 1), {-0.1, 1}), ConfigError);
  }

  TEST_CASE("inclusion produces a scattered signal after the direct arrival") {
    const HybridDomain d = build_hybrid_domain(desk_spec(1.0));
    DataGenOptions o;
    o.T = 10.0;
    o.fine_level = 1;
    SourceSpec src;
    src.omega = 2.0;
    const PhantomSpec tumor = phantom_preset("stage1", d.spec);
    const GeneratedData a = generate_observations(d, tumor, src, SolverOptions{}, o);
    const TraceRecord b = run_forward(a.domain, background_material(a.domain.fem), a.grid, src, SolverOptions{}).trace;
    const Eigen::MatrixXd diff = a.obs.trace.values - b.values;
    const double arrival = 2.0 * (d.spec.omega_hi(2) - (tumor.tumor->center(2) + tumor.tumor->radii(0))) - 2.0;
    double early = 0.0, late = 0.0;
    for (Index k = 0; k < a.grid.n_steps; ++k) {
      const double m = diff.col(k).cwiseAbs().maxCoeff();
      double& slot = double(k + 1) * a.grid.dt < arrival ? early : late;
      slot = std::max(slot, m);
    }
    CHECK(late > 1e-3 * b.values.cwiseAbs().maxCoeff());
    CHECK(early < 1e-3 * late);
  }

  TEST_CASE("consecutive data levels agree within ten percent") {
    const HybridDomain d = build_hybrid_domain(desk_spec(0.5));
    SourceSpec src;
    src.omega = 2.0;
    const PhantomSpec p = phantom_preset("stage1", d.spec);
    DataGenOptions o;
    o.T = 10.0;
    o.fine_level = 1;
    const GeneratedData a = generate_observations(d, p, src, SolverOptions{}, o);
    o.fine_level = 2;
    const GeneratedData b = generate_observations(d, p, src, SolverOptions{}, o);
    CHECK(b.domain.fem.tet_count() > a.domain.fem.tet_count());
    TimeGrid common;
    common.dt = std::max(a.grid.dt, b.grid.dt);
    common.n_steps = static_cast<Index>(std::min(a.grid.T, b.grid.T) / common.dt);
    common.T = common.dt * double(common.n_steps);
    const TraceRecord ra = resample_trace(a.obs.trace, common);
    const TraceRecord rb = resample_trace(b.obs.trace, common);
    CHECK(rms_relative(ra.values, rb.values) < 0.1);
  }
}
