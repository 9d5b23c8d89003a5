#include "wcip/objective.hpp"

#include <doctest.h>

#include <cmath>

using namespace wcip;

namespace {

DomainSpec small_spec() {
  DomainSpec s;
  s.omega_lo = Vec3::Constant(-1.0);
  s.omega_hi = Vec3::Constant(4.0);
  s.fem_lo = Vec3::Zero();
  s.fem_hi = Vec3::Constant(3.0);
  s.h_fdm = 0.5;
  return s;
}

ObservationSet unit_patch(Index n_steps, double dt) {
  ObservationSet obs;
  obs.trace.nodes = {0};
  obs.trace.dt = dt;
  obs.trace.n_steps = n_steps;
  obs.trace.values = Eigen::MatrixXd::Zero(3, n_steps);
  obs.mask = {1};
  obs.weights = Eigen::VectorXd::Ones(1);
  return obs;
}

TraceRecord constant_trace(const ObservationSet& obs, double c) {
  TraceRecord t = obs.trace;
  t.values.setZero();
  t.values.row(0).setConstant(c);
  return t;
}

MaterialField interior_material(const HybridDomain& d) {
  MaterialField m = background_material(d.fem);
  for (Index v = 0; v < d.fem.vertex_count(); ++v) {
    if (d.fem_pinned[static_cast<std::size_t>(v)]) continue;
    m.eps(v) = 1.5;
    m.sigma(v) = 0.3;
  }
  return m;
}

Problem small_problem(const HybridDomain& d, const MaterialField& truth) {
  Problem p;
  p.domain = &d;
  p.source.omega = 2.0;
  p.grid = stable_time_grid(d, truth.eps_max, 6.0, 0.3);
  ForwardOptions run;
  run.record_nodes = d.boundary.top_nodes;
  TraceRecord t = run_forward(d, truth, p.grid, p.source, p.solver, run).trace;
  p.obs = make_observation_set(d, std::move(t), 0.1);
  return p;
}

MaterialField centered_truth(const HybridDomain& d) {
  MaterialField m = background_material(d.fem);
  for (Index v = 0; v < d.fem.vertex_count(); ++v) {
    if (d.fem_pinned[static_cast<std::size_t>(v)]) continue;
    const double r2 = (d.fem.vertices[static_cast<std::size_t>(v)] - Vec3(1.5, 1.5, 1.5)).squaredNorm();
    m.eps(v) = 1.0 + 2.0 * std::exp(-r2);
    m.sigma(v) = 0.5 * std::exp(-r2);
  }
  return m;
}

}  // namespace

TEST_SUITE("objective") {
  TEST_CASE("smoothing z endpoints and ramp midpoint") {
    CHECK(smoothing_z(0.0, 10.0, 1.0) == 1.0);
    CHECK(smoothing_z(10.0, 10.0, 1.0) == 0.0);
    CHECK(smoothing_z(9.5, 10.0, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(smoothing_z(9.0, 10.0, 1.0) == 1.0);
    CHECK(smoothing_z(10.0, 10.0, 0.0) == 1.0);
  }

  TEST_CASE("misfit of matching traces is zero") {
    ObservationSet obs = unit_patch(10, 0.1);
    obs.trace.values.setRandom();
    CHECK(evaluate_misfit(obs.trace, obs) == 0.0);
  }

  TEST_CASE("constant residual on a unit patch for unit time gives half c squared") {
    const double c = 1.7;
    const ObservationSet obs = unit_patch(10, 0.1);
    CHECK(evaluate_misfit(constant_trace(obs, c), obs) == doctest::Approx(0.5 * c * c).epsilon(1e-13));
  }

  TEST_CASE("doubling the residual quadruples the misfit") {
    ObservationSet obs = unit_patch(40, 0.05);
    obs.zeta = 0.4;
    obs.trace.values.setRandom();
    TraceRecord t = obs.trace;
    Eigen::MatrixXd r = Eigen::MatrixXd::Random(3, 40);
    t.values = obs.trace.values + r;
    const double j1 = evaluate_misfit(t, obs);
    t.values = obs.trace.values + 2.0 * r;
    CHECK(j1 > 0.0);
    CHECK(evaluate_misfit(t, obs) == doctest::Approx(4.0 * j1).epsilon(1e-12));
  }

  TEST_CASE("masked nodes and components do not contribute") {
    ObservationSet obs = unit_patch(10, 0.1);
    obs.mask = {0};
    CHECK(evaluate_misfit(constant_trace(obs, 3.0), obs) == 0.0);
    obs.mask = {1};
    obs.components = {0, 1, 1};
    CHECK(evaluate_misfit(constant_trace(obs, 3.0), obs) == 0.0);
  }

  TEST_CASE("mismatched traces are rejected") {
    const ObservationSet obs = unit_patch(10, 0.1);
    TraceRecord t = obs.trace;
    t.n_steps = 9;
    t.values = Eigen::MatrixXd::Zero(3, 9);
    CHECK_THROWS_AS(evaluate_misfit(t, obs), ContractError);
  }

  TEST_CASE("adjoint forcing is minus weighted residual times z") {
    ObservationSet obs = unit_patch(20, 0.1);
    obs.weights(0) = 0.25;
    obs.zeta = 0.5;
    const TraceRecord t = constant_trace(obs, 2.0);
    const TraceRecord f = adjoint_forcing(t, obs);
    for (Index k = 0; k < 20; ++k) {
      const double z = smoothing_z(double(k + 1) * 0.1, 2.0, 0.5);
      CHECK(f.values(0, k) == doctest::Approx(-0.25 * z * 2.0));
      CHECK(f.values(1, k) == 0.0);
    }
  }

  TEST_CASE("tikhonov functional") {
    const TetraMesh mesh = structured_tet_mesh(Vec3::Zero(), 0.5, GridIndex{2, 2, 2});
    const Eigen::VectorXd mass = fem_geometry(mesh).lumped_mass;
    CHECK(mass.sum() == doctest::Approx(1.0));
    ObservationSet obs = unit_patch(10, 0.1);
    obs.trace.values.setRandom();
    TikhonovParams params;
    MaterialField m = background_material(mesh);

    SUBCASE("prior coefficients and exact trace give zero") {
      CHECK(evaluate_tikhonov(obs.trace, obs, mass, m, params, 1.0, 1.0) == 0.0);
    }
    SUBCASE("zero weights give the misfit") {
      m.eps.setConstant(3.0);
      const TraceRecord t = constant_trace(obs, 1.0);
      CHECK(evaluate_tikhonov(t, obs, mass, m, params, 0.0, 0.0) == evaluate_misfit(t, obs));
    }
    SUBCASE("unit eps offset on unit volume with gamma 2 gives 1") {
      m.eps.setConstant(2.0);
      CHECK(evaluate_tikhonov(obs.trace, obs, mass, m, params, 2.0, 5.0) == doctest::Approx(1.0).epsilon(1e-13));
    }
  }

  TEST_CASE("gradients without adjoint reduce to the regularization term") {
    const HybridDomain d = build_hybrid_domain(small_spec());
    const FemGeometry geo = fem_geometry(d.fem);
    const TimeGrid g = stable_time_grid(d, 10.0, 1.0, 0.3);
    const Index nf = 3 * d.fem.vertex_count();
    const MaterialField m = interior_material(d);
    const Eigen::MatrixXd fwd = Eigen::MatrixXd::Random(nf, g.n_steps + 2);
    const Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(nf, g.n_steps + 1);
    const NodalField ge = assemble_grad_eps(d, geo, m, fwd, adj, g, {}, 0.7);
    const NodalField gs = assemble_grad_sigma(d, geo, m, fwd, adj, g, {}, 0.9);
    for (Index v = 0; v < d.fem.vertex_count(); ++v) {
      const bool pinned = d.fem_pinned[static_cast<std::size_t>(v)];
      CHECK(ge(v) == doctest::Approx(pinned ? 0.0 : 0.7 * 0.5));
      CHECK(gs(v) == doctest::Approx(pinned ? 0.0 : 0.9 * 0.3));
    }
  }

  TEST_CASE("time-constant divergence-free fields give zero eps gradient at the prior") {
    const HybridDomain d = build_hybrid_domain(small_spec());
    const FemGeometry geo = fem_geometry(d.fem);
    const TimeGrid g = stable_time_grid(d, 10.0, 1.0, 0.3);
    const Index nv = d.fem.vertex_count();
    Eigen::VectorXd a(3 * nv), b(3 * nv);
    for (Index v = 0; v < nv; ++v) {
      a.segment<3>(3 * v) = Vec3(1.0, -2.0, 0.5);
      b.segment<3>(3 * v) = Vec3(0.3, 0.4, -1.0);
    }
    const Eigen::MatrixXd fwd = b.replicate(1, g.n_steps + 2);
    const Eigen::MatrixXd adj = a.replicate(1, g.n_steps + 1);
    const MaterialField m = background_material(d.fem);
    const NodalField ge = assemble_grad_eps(d, geo, m, fwd, adj, g, {}, 1.0);
    CHECK(ge.cwiseAbs().maxCoeff() < 1e-12);
    const NodalField gs = assemble_grad_sigma(d, geo, m, fwd, adj, g, {}, 1.0);
    CHECK(gs.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("sigma gradient is affine in sigma with slope gamma") {
    const HybridDomain d = build_hybrid_domain(small_spec());
    const FemGeometry geo = fem_geometry(d.fem);
    const TimeGrid g = stable_time_grid(d, 10.0, 1.0, 0.3);
    const Index nf = 3 * d.fem.vertex_count();
    const Eigen::MatrixXd fwd = Eigen::MatrixXd::Random(nf, g.n_steps + 2);
    const Eigen::MatrixXd adj = Eigen::MatrixXd::Random(nf, g.n_steps + 1);
    MaterialField m = interior_material(d);
    const NodalField g1 = assemble_grad_sigma(d, geo, m, fwd, adj, g, {}, 0.4);
    NodalField shift = bump_direction(d, Vec3(1.5, 1.5, 1.5), 1.0);
    m.sigma += shift;
    const NodalField g2 = assemble_grad_sigma(d, geo, m, fwd, adj, g, {}, 0.4);
    CHECK((g2 - g1 - 0.4 * shift).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("history length mismatch is rejected") {
    const HybridDomain d = build_hybrid_domain(small_spec());
    const FemGeometry geo = fem_geometry(d.fem);
    const TimeGrid g = stable_time_grid(d, 10.0, 1.0, 0.3);
    const Index nf = 3 * d.fem.vertex_count();
    const Eigen::MatrixXd fwd = Eigen::MatrixXd::Zero(nf, g.n_steps + 1);
    const Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(nf, g.n_steps + 1);
    CHECK_THROWS_AS(assemble_grad_eps(d, geo, background_material(d.fem), fwd, adj, g, {}, 1.0), ContractError);
  }

  TEST_CASE("bump direction vanishes on pinned vertices") {
    const HybridDomain d = build_hybrid_domain(small_spec());
    const NodalField b = bump_direction(d, Vec3(1.5, 1.5, 1.5), 0.8);
    for (Index v = 0; v < d.fem.vertex_count(); ++v)
      if (d.fem_pinned[static_cast<std::size_t>(v)]) CHECK(b(v) == 0.0);
    CHECK(b.maxCoeff() == doctest::Approx(1.0));
  }

  TEST_CASE("directional oracle") {
    const HybridDomain d = build_hybrid_domain(small_spec());
    const Problem p = small_problem(d, centered_truth(d));
    const MaterialField m = interior_material(d);
    const Index nv = d.fem.vertex_count();
    TikhonovParams params;

    SUBCASE("zero direction") {
      const NodalField z = NodalField::Zero(nv);
      const DirectionalCheck c = directional_derivative_oracle(p, m, params, 0.01, 0.01, z, z, {1e-3});
      CHECK(c.inner_product == 0.0);
      CHECK(c.fd_estimate[0] == 0.0);
    }
    SUBCASE("tau and minus tau give the same central estimate") {
      const NodalField b = bump_direction(d, Vec3(1.5, 1.5, 1.5), 0.8);
      const DirectionalCheck c = directional_derivative_oracle(p, m, params, 0.01, 0.01, b, b, {1e-3, -1e-3});
      CHECK(c.fd_estimate[0] == c.fd_estimate[1]);
    }
    SUBCASE("adjoint gradient matches finite differences at the plateau") {
      const NodalField be = bump_direction(d, Vec3(1.2, 1.5, 1.8), 0.7);
      const NodalField bs = 0.5 * bump_direction(d, Vec3(1.8, 1.4, 1.3), 0.7);
      const DirectionalCheck c =
          directional_derivative_oracle(p, m, params, 0.01, 0.01, be, bs, {1e-2, 1e-3, 1e-4});
      CHECK(c.relative_error[c.plateau()] <= 0.05);
    }
    SUBCASE("directions leaving the box or touching pinned vertices are rejected") {
      NodalField b = bump_direction(d, Vec3(1.5, 1.5, 1.5), 0.8);
      const NodalField z = NodalField::Zero(nv);
      CHECK_THROWS_AS(directional_derivative_oracle(p, m, params, 0.01, 0.01, z, b, {1.0}), ContractError);
      b(0) = 1.0;
      CHECK(d.fem_pinned[0]);
      CHECK_THROWS_AS(directional_derivative_oracle(p, m, params, 0.01, 0.01, b, z, {1e-3}), ContractError);
    }
  }
}
