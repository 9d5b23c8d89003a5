#include "wcip/inversion.hpp"

#include <cmath>
#include <iostream>

namespace wcip {

void validate(const StoppingCriteria& stop) {
  for (double eta : {stop.eta_eps_1, stop.eta_eps_2, stop.eta_sigma_1, stop.eta_sigma_2, stop.theta_eps_1,
                     stop.theta_eps_2, stop.theta_sigma_1, stop.theta_sigma_2})
    if (!(eta > 0.0)) throw ConfigError("stopping tolerances must be positive");
  if (stop.max_iters < 0 || stop.max_refinements < 0) throw ConfigError("iteration caps must be nonnegative");
}

double RefinementConfig::beta_eps(Index level) const {
  return level < static_cast<Index>(beta_tilde_eps_per_level.size())
             ? beta_tilde_eps_per_level[static_cast<std::size_t>(level)]
             : beta_tilde_eps;
}

double RefinementConfig::beta_sigma(Index level) const {
  return level < static_cast<Index>(beta_tilde_sigma_per_level.size())
             ? beta_tilde_sigma_per_level[static_cast<std::size_t>(level)]
             : beta_tilde_sigma;
}

void validate(const RefinementConfig& config) {
  auto check = [](double b) {
    if (!(b > 0.0 && b < 1.0)) throw ConfigError("beta_tilde must lie in (0, 1)");
  };
  check(config.beta_tilde_eps);
  check(config.beta_tilde_sigma);
  for (double b : config.beta_tilde_eps_per_level) check(b);
  for (double b : config.beta_tilde_sigma_per_level) check(b);
  if (config.element_cap <= 0) throw ConfigError("element cap must be positive");
}

double inner(const Eigen::VectorXd& mass, const NodalField& a, const NodalField& b) {
  return a.cwiseProduct(b).dot(mass);
}

double norm(const Eigen::VectorXd& mass, const NodalField& a) { return std::sqrt(inner(mass, a, a)); }

DirectionUpdate update_direction(const Eigen::VectorXd& mass, const NodalField& g, const NodalField* g_prev,
                                 const NodalField* d_prev) {
  DirectionUpdate out;
  if (!g_prev || !d_prev) {
    out.d = -g;
    return out;
  }
  const double prev = inner(mass, *g_prev, *g_prev);
  if (prev == 0.0) {
    out.converged = true;
    out.d = NodalField::Zero(g.size());
    return out;
  }
  out.beta = inner(mass, g, g) / prev;
  out.d = -g + out.beta * *d_prev;
  return out;
}

double step_size(const Eigen::VectorXd& mass, const NodalField& g, const NodalField& d, double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("step size needs a positive regularization parameter");
  const double dd = inner(mass, d, d);
  if (dd == 0.0) return 0.0;
  return -inner(mass, g, d) / (gamma * dd);
}

double regularization_update(double gamma0, Index m, double p) { return gamma0 / std::pow(double(m + 1), p); }

void project_coefficients(MaterialField& material, const std::vector<char>& pinned) {
  material.eps = material.eps.cwiseMax(1.0).cwiseMin(material.eps_max);
  material.sigma = material.sigma.cwiseMax(0.0).cwiseMin(material.sigma_max);
  for (std::size_t v = 0; v < pinned.size(); ++v)
    if (pinned[v]) {
      material.eps(static_cast<Index>(v)) = 1.0;
      material.sigma(static_cast<Index>(v)) = 0.0;
    }
}

CgaResult cga_run(const Problem& problem, const MaterialField& initial, const TikhonovParams& params,
                  const StoppingCriteria& stop, const CgaOptions& options) {
  validate(params);
  validate(stop);
  const HybridDomain& domain = *problem.domain;
  const Eigen::VectorXd mass = fem_geometry(domain.fem).lumped_mass;

  OptimizerState s;
  s.material = initial;
  project_coefficients(s.material, domain.fem_pinned);
  s.gamma_eps = params.gamma_eps;
  s.gamma_sigma = params.gamma_sigma;
  s.alpha_eps = options.alpha0_eps.value_or(1.0 / params.gamma_eps);
  s.alpha_sigma = options.alpha0_sigma.value_or(1.0 / params.gamma_sigma);

  CgaResult out;
  NodalField g_eps_prev, g_sigma_prev;
  for (Index m = 0;; ++m) {
    s.m = m;
    const Evaluation ev = evaluate(problem, s.material, params, s.gamma_eps, s.gamma_sigma, true);
    if (!std::isfinite(ev.J)) throw Error("objective is not finite at iteration " + std::to_string(m));
    s.g_eps = ev.gradient.g_eps;
    s.g_sigma = ev.gradient.g_sigma;
    s.J.push_back(ev.J);

    IterationLog log{m, ev.J, norm(mass, s.g_eps), norm(mass, s.g_sigma), s.alpha_eps, s.alpha_sigma,
                     s.gamma_eps, s.gamma_sigma};
    out.log.push_back(log);
    if (options.on_iteration) options.on_iteration(log);
    if (options.verbose)
      std::cerr << "cga m=" << m << " J=" << ev.J << " |g_eps|=" << log.norm_g_eps << " |g_sigma|=" << log.norm_g_sigma
                << '\n';

    const bool first = m == 0;
    const DirectionUpdate de = update_direction(mass, s.g_eps, first ? nullptr : &g_eps_prev, first ? nullptr : &s.d_eps);
    const DirectionUpdate ds =
        update_direction(mass, s.g_sigma, first ? nullptr : &g_sigma_prev, first ? nullptr : &s.d_sigma);
    s.d_eps = de.d;
    s.d_sigma = ds.d;

    const MaterialField before = s.material;
    s.material.eps += s.alpha_eps * s.d_eps;
    s.material.sigma += s.alpha_sigma * s.d_sigma;
    project_coefficients(s.material, domain.fem_pinned);

    s.alpha_eps = s.gamma_eps > 0.0 ? step_size(mass, s.g_eps, s.d_eps, s.gamma_eps) : 0.0;
    s.alpha_sigma = s.gamma_sigma > 0.0 ? step_size(mass, s.g_sigma, s.d_sigma, s.gamma_sigma) : 0.0;
    s.gamma_eps = regularization_update(params.gamma_eps, m + 1, params.p);
    s.gamma_sigma = regularization_update(params.gamma_sigma, m + 1, params.p);
    g_eps_prev = s.g_eps;
    g_sigma_prev = s.g_sigma;

    const double step_eps = norm(mass, s.material.eps - before.eps);
    const double step_sigma = norm(mass, s.material.sigma - before.sigma);
    const bool small_step = step_eps < stop.eta_eps_1 || step_sigma < stop.eta_sigma_1;
    const bool small_grad = log.norm_g_eps < stop.eta_eps_2 || log.norm_g_sigma < stop.eta_sigma_2;
    if ((small_step && small_grad) || de.converged || ds.converged) {
      out.converged = true;
      break;
    }
    if (m >= stop.max_iters) break;
  }

  const Evaluation last = evaluate(problem, s.material, params, s.gamma_eps, s.gamma_sigma, false);
  out.final_J = last.J;
  out.final_misfit = last.misfit;
  out.final_gamma_eps = s.gamma_eps;
  out.final_gamma_sigma = s.gamma_sigma;
  out.material = s.material;
  out.state = std::move(s);
  return out;
}

Eigen::VectorXd refinement_indicator(const TetraMesh& mesh, const NodalField& coefficient) {
  if (coefficient.size() != mesh.vertex_count()) throw ContractError("coefficient does not match the mesh");
  const MeshSizeField h = mesh_size(mesh);
  Eigen::VectorXd out(mesh.tet_count());
  for (Index t = 0; t < mesh.tet_count(); ++t) {
    double mean = 0.0;
    for (Index v : mesh.tets[static_cast<std::size_t>(t)]) mean += std::abs(coefficient(v));
    out(t) = h(t) * mean / 4.0;
  }
  return out;
}

std::vector<Index> select_elements(const Eigen::VectorXd& indicator, double beta_tilde, const std::vector<char>* allowed) {
  double top = -std::numeric_limits<double>::infinity();
  for (Index t = 0; t < indicator.size(); ++t)
    if (!allowed || (*allowed)[static_cast<std::size_t>(t)]) top = std::max(top, indicator(t));
  std::vector<Index> out;
  // An identically zero coefficient carries no location information.
  if (!std::isfinite(top) || top <= 0.0) return out;
  const double threshold = beta_tilde * top;
  for (Index t = 0; t < indicator.size(); ++t)
    if ((!allowed || (*allowed)[static_cast<std::size_t>(t)]) && indicator(t) >= threshold) out.push_back(t);
  return out;
}

std::vector<Index> select_elements(const Eigen::VectorXd& eps_indicator, const Eigen::VectorXd& sigma_indicator,
                                   double beta_eps, double beta_sigma, const std::vector<char>* allowed) {
  std::vector<Index> a = select_elements(eps_indicator, beta_eps, allowed);
  const std::vector<Index> b = select_elements(sigma_indicator, beta_sigma, allowed);
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

}  // namespace wcip
