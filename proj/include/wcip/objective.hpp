#pragma once

#include "wcip/solver.hpp"

namespace wcip {

/// 1 on [0, T - zeta], C^1 cubic ramp to 0 at T. zeta <= 0 gives z = 1.
double smoothing_z(double t, double T, double zeta);

struct ObservationSet {
  TraceRecord trace;
  std::vector<char> mask;                // per trace node
  std::array<char, 3> components{1, 1, 1};
  Eigen::VectorXd weights;               // surface quadrature weight per trace node
  double zeta = 0.0;                     // ramp width of z, absolute time
  double noise_level = 0.0;
  std::uint64_t seed = 0;

  double end_time() const { return double(trace.n_steps) * trace.dt; }
};

/// Observation set on the top boundary nodes with lumped face weights, full
/// mask, and ramp width zeta_fraction * T.
ObservationSet make_observation_set(const HybridDomain& domain, TraceRecord trace, double zeta_fraction = 0.1);

/// Throws ContractError if the set is inconsistent (sizes, mask outside the nodes).
void validate(const ObservationSet& obs);

double evaluate_misfit(const TraceRecord& trace, const ObservationSet& obs);

/// -w z (E - E_obs) on the masked nodes and components, per sample.
TraceRecord adjoint_forcing(const TraceRecord& trace, const ObservationSet& obs);

struct TikhonovParams {
  double gamma_eps = 1e-2;
  double gamma_sigma = 1e-2;
  double p = 0.5;
  NodalField eps_prior;    // empty: 1
  NodalField sigma_prior;  // empty: 0
};

void validate(const TikhonovParams& params);

/// (gamma_eps/2)|eps - eps0|^2 + (gamma_sigma/2)|sigma - sigma0|^2 with lumped quadrature.
double regularization(const Eigen::VectorXd& lumped_mass, const MaterialField& material, const TikhonovParams& params,
                      double gamma_eps, double gamma_sigma);

double evaluate_tikhonov(const TraceRecord& trace, const ObservationSet& obs, const Eigen::VectorXd& lumped_mass,
                         const MaterialField& material, const TikhonovParams& params, double gamma_eps,
                         double gamma_sigma);

struct GradientPair {
  NodalField g_eps;
  NodalField g_sigma;
};

/// Histories as produced by run_forward (store_volume) and run_adjoint.
/// `f1` is the FE initial velocity (empty: zero).
NodalField assemble_grad_eps(const HybridDomain& domain, const FemGeometry& geometry, const MaterialField& material,
                             const Eigen::MatrixXd& forward, const Eigen::MatrixXd& adjoint, const TimeGrid& grid,
                             const NodalField& eps_prior, double gamma_eps, const VectorField& f1 = {});

NodalField assemble_grad_sigma(const HybridDomain& domain, const FemGeometry& geometry, const MaterialField& material,
                               const Eigen::MatrixXd& forward, const Eigen::MatrixXd& adjoint, const TimeGrid& grid,
                               const NodalField& sigma_prior, double gamma_sigma);

/// Everything needed to evaluate J for a coefficient pair.
struct Problem {
  const HybridDomain* domain = nullptr;
  TimeGrid grid;
  SourceSpec source;
  SolverOptions solver;
  ObservationSet obs;  // sampled on `grid`
  VectorField f1;      // FE initial velocity (empty: zero)
};

struct Evaluation {
  double misfit = 0.0;
  double regularization = 0.0;
  double J = 0.0;
  TraceRecord trace;
  GradientPair gradient;  // empty unless requested
};

Evaluation evaluate(const Problem& problem, const MaterialField& material, const TikhonovParams& params,
                    double gamma_eps, double gamma_sigma, bool with_gradient);

struct DirectionalCheck {
  double inner_product = 0.0;        // (g_eps, d_eps) + (g_sigma, d_sigma), lumped L2
  std::vector<double> tau;
  std::vector<double> fd_estimate;   // [J(q + tau d) - J(q - tau d)] / (2 tau)
  std::vector<double> relative_error;

  /// Index of the tau whose estimate agrees best with a neighbouring estimate.
  std::size_t plateau() const;
};

/// Smooth bump exp(-|x - center|^2 / width^2) on the FE vertices, zero on pinned vertices.
NodalField bump_direction(const HybridDomain& domain, const Vec3& center, double width);

/// Rejects directions touching pinned vertices and perturbations leaving the boxes.
DirectionalCheck directional_derivative_oracle(const Problem& problem, const MaterialField& material,
                                               const TikhonovParams& params, double gamma_eps, double gamma_sigma,
                                               const NodalField& d_eps, const NodalField& d_sigma,
                                               const std::vector<double>& taus);

}  // namespace wcip
