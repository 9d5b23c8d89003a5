#pragma once

#include "wcip/objective.hpp"

#include <optional>
#include <string>

namespace wcip {

struct StoppingCriteria {
  double eta_eps_1 = 1e-4, eta_eps_2 = 1e-6;
  double eta_sigma_1 = 1e-4, eta_sigma_2 = 1e-6;
  double theta_eps_1 = 1e-3, theta_eps_2 = 1e-6;
  double theta_sigma_1 = 1e-3, theta_sigma_2 = 1e-6;
  Index max_iters = 20;       // M
  Index max_refinements = 6;  // N
};

void validate(const StoppingCriteria& stop);

struct RefinementConfig {
  double beta_tilde_eps = 0.7;
  double beta_tilde_sigma = 0.7;
  std::vector<double> beta_tilde_eps_per_level;    // overrides when long enough
  std::vector<double> beta_tilde_sigma_per_level;
  Index element_cap = 2'000'000;

  double beta_eps(Index level) const;
  double beta_sigma(Index level) const;
};

void validate(const RefinementConfig& config);

/// Lumped L2 inner product on the FE vertices.
double inner(const Eigen::VectorXd& mass, const NodalField& a, const NodalField& b);
double norm(const Eigen::VectorXd& mass, const NodalField& a);

struct DirectionUpdate {
  NodalField d;
  double beta = 0.0;
  bool converged = false;  // previous gradient was zero
};

/// Fletcher-Reeves direction. Without a previous gradient, d = -g.
DirectionUpdate update_direction(const Eigen::VectorXd& mass, const NodalField& g, const NodalField* g_prev,
                                 const NodalField* d_prev);

/// alpha = -(g, d) / (gamma (d, d)); zero for d = 0.
double step_size(const Eigen::VectorXd& mass, const NodalField& g, const NodalField& d, double gamma);

/// gamma^{m+1} = gamma^0 / (m + 1)^p.
double regularization_update(double gamma0, Index m, double p);

/// Clamps to the boxes and pins eps = 1, sigma = 0 where `pinned` is set.
void project_coefficients(MaterialField& material, const std::vector<char>& pinned);

struct IterationLog {
  Index m = 0;
  double J = 0.0;
  double norm_g_eps = 0.0, norm_g_sigma = 0.0;
  double alpha_eps = 0.0, alpha_sigma = 0.0;
  double gamma_eps = 0.0, gamma_sigma = 0.0;
};

struct OptimizerState {
  Index m = 0;
  MaterialField material;
  NodalField g_eps, g_sigma;
  NodalField d_eps, d_sigma;
  double alpha_eps = 0.0, alpha_sigma = 0.0;
  double gamma_eps = 0.0, gamma_sigma = 0.0;
  std::vector<double> J;
};

struct CgaOptions {
  std::optional<double> alpha0_eps, alpha0_sigma;  // default 1 / gamma^0
  bool verbose = false;
  std::function<void(const IterationLog&)> on_iteration;
};

struct CgaResult {
  MaterialField material;
  std::vector<IterationLog> log;
  OptimizerState state;
  double final_J = 0.0;
  double final_misfit = 0.0;
  double final_gamma_eps = 0.0, final_gamma_sigma = 0.0;
  bool converged = false;  // stopped by the tolerance test rather than the iteration cap
};

CgaResult cga_run(const Problem& problem, const MaterialField& initial, const TikhonovParams& params,
                  const StoppingCriteria& stop, const CgaOptions& options = {});

/// Per element: h_K times the vertex mean of |coefficient|.
Eigen::VectorXd refinement_indicator(const TetraMesh& mesh, const NodalField& coefficient);

/// Elements with indicator >= beta_tilde * max, optionally restricted to `allowed`.
std::vector<Index> select_elements(const Eigen::VectorXd& indicator, double beta_tilde,
                                   const std::vector<char>* allowed = nullptr);

/// Union of the eps and sigma selections, sorted.
std::vector<Index> select_elements(const Eigen::VectorXd& eps_indicator, const Eigen::VectorXd& sigma_indicator,
                                   double beta_eps, double beta_sigma, const std::vector<char>* allowed = nullptr);

struct LevelResult {
  HybridDomain domain;
  TimeGrid grid;
  CgaResult cga;
  std::vector<Index> marked;  // elements of this level's mesh selected for refinement
};

struct AcgaOptions {
  double T = 12.0;
  CgaOptions cga;
  std::function<void(Index, const LevelResult&)> on_level;
};

struct AcgaResult {
  std::vector<LevelResult> levels;
  bool partial = false;
  std::string stop_reason;
};

/// `obs` may live on any time grid over (0, T]; it is resampled per level.
AcgaResult acga_run(const HybridDomain& domain, const ObservationSet& obs, const SourceSpec& source,
                    const SolverOptions& solver, const MaterialField& initial, const TikhonovParams& params,
                    const StoppingCriteria& stop, const RefinementConfig& refinement, const AcgaOptions& options = {});

/// Observation set on `grid`, resampled in time when the grids differ.
ObservationSet resample_observations(const ObservationSet& obs, const TimeGrid& grid);

}  // namespace wcip
