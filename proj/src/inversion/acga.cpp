#include "wcip/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace wcip {

ObservationSet resample_observations(const ObservationSet& obs, const TimeGrid& grid) {
  ObservationSet out = obs;
  out.trace = resample_trace(obs.trace, grid);
  return out;
}

namespace {

// Elements away from the pinned shell may be refined.
std::vector<char> markable_elements(const HybridDomain& domain) {
  std::vector<char> allowed(static_cast<std::size_t>(domain.fem.tet_count()), 1);
  for (Index t = 0; t < domain.fem.tet_count(); ++t)
    for (Index v : domain.fem.tets[static_cast<std::size_t>(t)])
      if (domain.fem_pinned[static_cast<std::size_t>(v)]) allowed[static_cast<std::size_t>(t)] = 0;
  return allowed;
}

double min_depth(const HybridDomain& domain, Index t) {
  double d = std::numeric_limits<double>::infinity();
  for (Index v : domain.fem.tets[static_cast<std::size_t>(t)])
    d = std::min(d, domain.depth_in_cells(domain.fem.vertices[static_cast<std::size_t>(v)]));
  return d;
}

// Refines `marked`; when the closure would reach the FD/FE interface, the
// marked elements closest to it are dropped until it does not.
std::optional<TetraMesh> refine_away_from_interface(const HybridDomain& domain, std::vector<Index> marked) {
  const std::vector<char> guard = interface_vertices(domain);
  for (double cut = 2.0; !marked.empty(); cut += 0.5) {
    try {
      return refine_local(domain.fem, marked, guard);
    } catch (const MeshError&) {
      std::erase_if(marked, [&](Index t) { return min_depth(domain, t) < cut + 0.5; });
    }
  }
  return std::nullopt;
}

}  // namespace

AcgaResult acga_run(const HybridDomain& domain, const ObservationSet& obs, const SourceSpec& source,
                    const SolverOptions& solver, const MaterialField& initial, const TikhonovParams& params,
                    const StoppingCriteria& stop, const RefinementConfig& refinement, const AcgaOptions& options) {
  validate(stop);
  validate(refinement);
  validate(params);

  AcgaResult out;
  HybridDomain current = domain;
  MaterialField start = initial;
  TikhonovParams level_params = params;
  for (Index i = 0;; ++i) {
    LevelResult level;
    level.domain = current;
    level.grid = stable_time_grid(current, start.eps_max, options.T, solver.cfl);

    Problem problem;
    problem.domain = &level.domain;
    problem.grid = level.grid;
    problem.source = source;
    problem.solver = solver;
    problem.obs = resample_observations(obs, level.grid);
    level.cga = cga_run(problem, start, level_params, stop, options.cga);

    // Step 4: compare with the interpolated previous level.
    bool done = false;
    if (i > 0) {
      const Eigen::VectorXd mass = fem_geometry(level.domain.fem).lumped_mass;
      const double de = norm(mass, level.cga.material.eps - start.eps);
      const double ds = norm(mass, level.cga.material.sigma - start.sigma);
      const auto& last = level.cga.log.back();
      const bool small_change = de < stop.theta_eps_1 || ds < stop.theta_sigma_1;
      const bool small_grad = last.norm_g_eps < stop.theta_eps_2 || last.norm_g_sigma < stop.theta_sigma_2;
      if (small_change && small_grad) {
        done = true;
        out.stop_reason = "refinement tolerances reached";
      }
    }
    if (!done && i >= stop.max_refinements) {
      done = true;
      out.stop_reason = "refinement count reached";
    }

    if (!done) {
      const std::vector<char> allowed = markable_elements(level.domain);
      const Eigen::VectorXd ie = refinement_indicator(level.domain.fem, level.cga.material.eps);
      const Eigen::VectorXd is = refinement_indicator(level.domain.fem, level.cga.material.sigma);
      level.marked = select_elements(ie, is, refinement.beta_eps(i), refinement.beta_sigma(i), &allowed);
      std::optional<TetraMesh> refined;
      if (!level.marked.empty()) refined = refine_away_from_interface(level.domain, level.marked);
      if (!refined) {
        done = true;
        out.stop_reason = "no element eligible for refinement";
      } else if (refined->tet_count() > refinement.element_cap) {
        done = true;
        out.partial = true;
        out.stop_reason = "element cap exceeded";
      } else {
        HybridDomain next = with_fem_mesh(level.domain, std::move(*refined));
        MaterialField warm = level.cga.material;
        warm.eps = interpolate_nodal(level.domain.fem, level.cga.material.eps, next.fem);
        warm.sigma = interpolate_nodal(level.domain.fem, level.cga.material.sigma, next.fem);
        project_coefficients(warm, next.fem_pinned);
        if (params.eps_prior.size() > 0)
          level_params.eps_prior = interpolate_nodal(level.domain.fem, level_params.eps_prior, next.fem);
        if (params.sigma_prior.size() > 0)
          level_params.sigma_prior = interpolate_nodal(level.domain.fem, level_params.sigma_prior, next.fem);
        current = std::move(next);
        start = std::move(warm);
      }
    }
    if (options.on_level) options.on_level(i, level);
    out.levels.push_back(std::move(level));
    if (done) break;
  }
  return out;
}

}  // namespace wcip
