#include "wcip/objective.hpp"

#include <cmath>
#include <limits>

namespace wcip {

double smoothing_z(double t, double T, double zeta) {
  if (zeta <= 0.0) return 1.0;
  const double start = T - zeta;
  if (t <= start) return 1.0;
  if (t >= T) return 0.0;
  const double s = (t - start) / zeta;
  return 1.0 - s * s * (3.0 - 2.0 * s);
}

ObservationSet make_observation_set(const HybridDomain& domain, TraceRecord trace, double zeta_fraction) {
  const FdKernel fd = build_fd_kernel(domain);
  ObservationSet obs;
  obs.weights.resize(trace.node_count());
  for (Index i = 0; i < trace.node_count(); ++i) obs.weights(i) = fd.face_top(trace.nodes[static_cast<std::size_t>(i)]);
  obs.mask.assign(trace.nodes.size(), 1);
  obs.zeta = zeta_fraction * double(trace.n_steps) * trace.dt;
  obs.trace = std::move(trace);
  return obs;
}

void validate(const ObservationSet& obs) {
  const Index n = obs.trace.node_count();
  if (static_cast<Index>(obs.mask.size()) != n || obs.weights.size() != n)
    throw ContractError("observation mask or weights do not match the trace nodes");
  if (obs.trace.values.rows() != 3 * n || obs.trace.values.cols() != obs.trace.n_steps)
    throw ContractError("observation values have the wrong shape");
}

namespace {

void check_compatible(const TraceRecord& trace, const ObservationSet& obs) {
  validate(obs);
  if (trace.nodes != obs.trace.nodes || trace.n_steps != obs.trace.n_steps ||
      std::abs(trace.dt - obs.trace.dt) > 1e-12 * std::max(1.0, obs.trace.dt) ||
      trace.values.rows() != obs.trace.values.rows() || trace.values.cols() != obs.trace.values.cols())
    throw ContractError("trace and observations differ in nodes or time grid");
}

}  // namespace

double evaluate_misfit(const TraceRecord& trace, const ObservationSet& obs) {
  check_compatible(trace, obs);
  const double T = obs.end_time();
  double sum = 0.0;
  for (Index k = 0; k < trace.n_steps; ++k) {
    const double z = smoothing_z(double(k + 1) * trace.dt, T, obs.zeta);
    if (z == 0.0) continue;
    double step = 0.0;
    for (Index i = 0; i < trace.node_count(); ++i) {
      if (!obs.mask[static_cast<std::size_t>(i)]) continue;
      double r2 = 0.0;
      for (int a = 0; a < 3; ++a) {
        if (!obs.components[a]) continue;
        const double r = trace.values(3 * i + a, k) - obs.trace.values(3 * i + a, k);
        r2 += r * r;
      }
      step += obs.weights(i) * r2;
    }
    sum += z * step;
  }
  return 0.5 * sum * trace.dt;
}

TraceRecord adjoint_forcing(const TraceRecord& trace, const ObservationSet& obs) {
  check_compatible(trace, obs);
  const double T = obs.end_time();
  TraceRecord f;
  f.nodes = trace.nodes;
  f.dt = trace.dt;
  f.n_steps = trace.n_steps;
  f.values = Eigen::MatrixXd::Zero(trace.values.rows(), trace.values.cols());
  for (Index k = 0; k < trace.n_steps; ++k) {
    const double z = smoothing_z(double(k + 1) * trace.dt, T, obs.zeta);
    if (z == 0.0) continue;
    for (Index i = 0; i < trace.node_count(); ++i) {
      if (!obs.mask[static_cast<std::size_t>(i)]) continue;
      for (int a = 0; a < 3; ++a)
        if (obs.components[a])
          f.values(3 * i + a, k) = -obs.weights(i) * z * (trace.values(3 * i + a, k) - obs.trace.values(3 * i + a, k));
    }
  }
  return f;
}

void validate(const TikhonovParams& params) {
  if (params.gamma_eps < 0.0 || params.gamma_sigma < 0.0) throw ConfigError("regularization weights must be >= 0");
  if (!(params.p > 0.0 && params.p < 1.0)) throw ConfigError("decay exponent p must lie in (0, 1)");
}

namespace {

NodalField prior_or(const NodalField& prior, Index n, double value) {
  if (prior.size() == 0) return NodalField::Constant(n, value);
  if (prior.size() != n) throw ContractError("prior does not match the FE mesh");
  return prior;
}

}  // namespace

double regularization(const Eigen::VectorXd& lumped_mass, const MaterialField& material, const TikhonovParams& params,
                      double gamma_eps, double gamma_sigma) {
  const Index n = lumped_mass.size();
  const NodalField de = material.eps - prior_or(params.eps_prior, n, 1.0);
  const NodalField ds = material.sigma - prior_or(params.sigma_prior, n, 0.0);
  return 0.5 * gamma_eps * de.cwiseAbs2().dot(lumped_mass) + 0.5 * gamma_sigma * ds.cwiseAbs2().dot(lumped_mass);
}

double evaluate_tikhonov(const TraceRecord& trace, const ObservationSet& obs, const Eigen::VectorXd& lumped_mass,
                         const MaterialField& material, const TikhonovParams& params, double gamma_eps,
                         double gamma_sigma) {
  return evaluate_misfit(trace, obs) + regularization(lumped_mass, material, params, gamma_eps, gamma_sigma);
}

namespace {

void check_histories(const HybridDomain& domain, const Eigen::MatrixXd& forward, const Eigen::MatrixXd& adjoint,
                     const TimeGrid& grid) {
  const Index nf = 3 * domain.fem.vertex_count();
  if (forward.rows() != nf || adjoint.rows() != nf || forward.cols() != grid.n_steps + 2 ||
      adjoint.cols() != grid.n_steps + 1)
    throw ContractError("field histories do not match the mesh and time grid");
}

}  // namespace

NodalField assemble_grad_eps(const HybridDomain& domain, const FemGeometry& geometry, const MaterialField& material,
                             const Eigen::MatrixXd& forward, const Eigen::MatrixXd& adjoint, const TimeGrid& grid,
                             const NodalField& eps_prior, double gamma_eps, const VectorField& f1) {
  check_histories(domain, forward, adjoint, grid);
  const TetraMesh& mesh = domain.fem;
  const Index nv = mesh.vertex_count();
  const Index N = grid.n_steps;
  const double dt = grid.dt;

  // Mass term: -sum_n (lambda^{n+1} - lambda^n) . (u^{n+1} - u^n) / dt - lambda^0 . f1, per vertex.
  Eigen::VectorXd mass_term = Eigen::VectorXd::Zero(nv);
  for (Index n = 0; n < N; ++n) {
    const auto dl = adjoint.col(n + 1) - adjoint.col(n);
    const auto du = forward.col(n + 2) - forward.col(n + 1);
    for (Index v = 0; v < nv; ++v) mass_term(v) -= dl.segment<3>(3 * v).dot(du.segment<3>(3 * v)) / dt;
  }
  if (f1.size() > 0) {
    if (f1.size() != 3 * nv) throw ContractError("initial velocity does not match the FE mesh");
    for (Index v = 0; v < nv; ++v) mass_term(v) -= adjoint.col(0).segment<3>(3 * v).dot(f1.segment<3>(3 * v));
  }

  // Stabilization term: sum_n dt (div lambda^n)(div u^n) per element, a quarter
  // of its volume integral going to each vertex.
  Eigen::VectorXd div_prod = Eigen::VectorXd::Zero(mesh.tet_count());
  for (Index n = 0; n < N; ++n) {
    if (adjoint.col(n).isZero(0.0)) continue;
    div_prod += dt * element_divergence(mesh, geometry, adjoint.col(n))
                         .cwiseProduct(element_divergence(mesh, geometry, forward.col(n + 1)));
  }
  Eigen::VectorXd div_term = Eigen::VectorXd::Zero(nv);
  for (Index t = 0; t < mesh.tet_count(); ++t)
    for (Index v : mesh.tets[static_cast<std::size_t>(t)]) div_term(v) += 0.25 * geometry.volume(t) * div_prod(t);

  const NodalField prior = prior_or(eps_prior, nv, 1.0);
  NodalField g = NodalField::Zero(nv);
  for (Index v = 0; v < nv; ++v) {
    if (domain.fem_pinned[static_cast<std::size_t>(v)]) continue;
    g(v) = gamma_eps * (material.eps(v) - prior(v)) + mass_term(v) + div_term(v) / geometry.lumped_mass(v);
  }
  return g;
}

NodalField assemble_grad_sigma(const HybridDomain& domain, const FemGeometry& geometry, const MaterialField& material,
                               const Eigen::MatrixXd& forward, const Eigen::MatrixXd& adjoint, const TimeGrid& grid,
                               const NodalField& sigma_prior, double gamma_sigma) {
  (void)geometry;
  check_histories(domain, forward, adjoint, grid);
  const Index nv = domain.fem.vertex_count();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(nv);
  for (Index n = 0; n < grid.n_steps; ++n) {
    const auto l = adjoint.col(n);
    const auto du = forward.col(n + 2) - forward.col(n);  // u^{n+1} - u^{n-1}
    for (Index v = 0; v < nv; ++v) acc(v) += 0.5 * l.segment<3>(3 * v).dot(du.segment<3>(3 * v));
  }
  const NodalField prior = prior_or(sigma_prior, nv, 0.0);
  NodalField g = NodalField::Zero(nv);
  for (Index v = 0; v < nv; ++v) {
    if (domain.fem_pinned[static_cast<std::size_t>(v)]) continue;
    g(v) = gamma_sigma * (material.sigma(v) - prior(v)) + acc(v);
  }
  return g;
}

Evaluation evaluate(const Problem& problem, const MaterialField& material, const TikhonovParams& params,
                    double gamma_eps, double gamma_sigma, bool with_gradient) {
  if (!problem.domain) throw ContractError("problem has no domain");
  const HybridDomain& domain = *problem.domain;
  ForwardOptions run;
  run.store_volume = with_gradient;
  run.record_nodes = problem.obs.trace.nodes;
  run.f1 = problem.f1;
  ForwardResult fwd = run_forward(domain, material, problem.grid, problem.source, problem.solver, run);

  const FemGeometry geometry = fem_geometry(domain.fem);
  Evaluation ev;
  ev.misfit = evaluate_misfit(fwd.trace, problem.obs);
  ev.regularization = regularization(geometry.lumped_mass, material, params, gamma_eps, gamma_sigma);
  ev.J = ev.misfit + ev.regularization;
  if (with_gradient) {
    const TraceRecord forcing = adjoint_forcing(fwd.trace, problem.obs);
    const AdjointResult adj = run_adjoint(domain, material, problem.grid, problem.source, forcing, problem.solver);
    ev.gradient.g_eps = assemble_grad_eps(domain, geometry, material, fwd.history, adj.history, problem.grid,
                                          params.eps_prior, gamma_eps, problem.f1);
    ev.gradient.g_sigma = assemble_grad_sigma(domain, geometry, material, fwd.history, adj.history, problem.grid,
                                              params.sigma_prior, gamma_sigma);
  }
  ev.trace = std::move(fwd.trace);
  return ev;
}

std::size_t DirectionalCheck::plateau() const {
  // The plateau is where neighbouring finite-difference estimates agree best.
  std::size_t best = 0;
  double best_spread = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < fd_estimate.size(); ++i) {
    double spread = std::numeric_limits<double>::infinity();
    for (std::size_t j : {i - 1, i + 1}) {
      if (j >= fd_estimate.size()) continue;
      spread = std::min(spread, std::abs(fd_estimate[i] - fd_estimate[j]) / std::max(std::abs(fd_estimate[i]), 1e-300));
    }
    if (spread < best_spread) {
      best_spread = spread;
      best = i;
    }
  }
  return best;
}

DirectionalCheck directional_derivative_oracle(const Problem& problem, const MaterialField& material,
                                               const TikhonovParams& params, double gamma_eps, double gamma_sigma,
                                               const NodalField& d_eps, const NodalField& d_sigma,
                                               const std::vector<double>& taus) {
  const HybridDomain& domain = *problem.domain;
  const Index nv = domain.fem.vertex_count();
  if (d_eps.size() != nv || d_sigma.size() != nv) throw ContractError("direction does not match the FE mesh");
  for (Index v = 0; v < nv; ++v)
    if (domain.fem_pinned[static_cast<std::size_t>(v)] && (d_eps(v) != 0.0 || d_sigma(v) != 0.0))
      throw ContractError("direction must vanish on pinned vertices");
  for (double tau : taus)
    for (double s : {tau, -tau}) {
      MaterialField m = material;
      m.eps += s * d_eps;
      m.sigma += s * d_sigma;
      if (!satisfies_constraints(domain, m)) throw ContractError("perturbed coefficients leave the admissible box");
    }

  DirectionalCheck out;
  const Evaluation base = evaluate(problem, material, params, gamma_eps, gamma_sigma, true);
  const Eigen::VectorXd mass = fem_geometry(domain.fem).lumped_mass;
  out.inner_product = (base.gradient.g_eps.cwiseProduct(d_eps)).dot(mass) +
                      (base.gradient.g_sigma.cwiseProduct(d_sigma)).dot(mass);
  for (double tau : taus) {
    MaterialField plus = material, minus = material;
    plus.eps += tau * d_eps;
    plus.sigma += tau * d_sigma;
    minus.eps -= tau * d_eps;
    minus.sigma -= tau * d_sigma;
    const double jp = evaluate(problem, plus, params, gamma_eps, gamma_sigma, false).J;
    const double jm = evaluate(problem, minus, params, gamma_eps, gamma_sigma, false).J;
    const double fd = tau == 0.0 ? 0.0 : (jp - jm) / (2.0 * tau);
    out.tau.push_back(tau);
    out.fd_estimate.push_back(fd);
    const double scale = fd != 0.0 ? std::abs(fd) : std::abs(out.inner_product);
    out.relative_error.push_back(scale == 0.0 ? 0.0 : std::abs(fd - out.inner_product) / scale);
  }
  return out;
}

NodalField bump_direction(const HybridDomain& domain, const Vec3& center, double width) {
  if (!(width > 0.0)) throw ContractError("bump width must be positive");
  NodalField d = NodalField::Zero(domain.fem.vertex_count());
  for (Index v = 0; v < d.size(); ++v) {
    if (domain.fem_pinned[static_cast<std::size_t>(v)]) continue;
    d(v) = std::exp(-(domain.fem.vertices[static_cast<std::size_t>(v)] - center).squaredNorm() / (width * width));
  }
  return d;
}

}  // namespace wcip
