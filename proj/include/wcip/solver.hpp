#pragma once

#include "wcip/mesh.hpp"

#include <Eigen/Sparse>

#include <functional>

namespace wcip {

// ---------------------------------------------------------------------------
// Coefficients, time grid, source
// ---------------------------------------------------------------------------

/// Nodal eps and sigma on the FE vertices. The FD region is vacuum implicitly.
struct MaterialField {
  NodalField eps;
  NodalField sigma;
  double eps_max = 10.0;
  double sigma_max = 2.0;
};

/// eps = 1, sigma = 0 on every FE vertex.
MaterialField background_material(const TetraMesh& mesh, double eps_max = 10.0, double sigma_max = 2.0);

/// Box constraints plus eps = 1, sigma = 0 on pinned vertices.
bool satisfies_constraints(const HybridDomain& domain, const MaterialField& material, double tol = 0.0);

struct TimeGrid {
  double dt = 0.0;
  Index n_steps = 0;
  double T = 0.0;

  double time(Index n) const { return double(n) * dt; }
};

/// Smallest uniform grid on (0, T] with dt <= dt_max.
TimeGrid make_time_grid(double T, double dt_max);

struct SourceSpec {
  double omega = 30.0;
  double t1 = 0.0;  // <= 0 selects 2*pi/omega
  double amplitude = 1.0;
  int component = 2;  // 1-based field component driven by the plane wave

  double gate_end() const;
};

void validate(const SourceSpec& spec);

/// amplitude * sin(omega t) while 0 < t < 2*pi/omega, zero otherwise.
double source_value(double t, const SourceSpec& spec);

enum class BoundaryModel {
  model1,         // Neumann source on top until t1, then absorbing; absorbing bottom; Neumann sides
  absorbing_all,  // first-order absorbing on every outer face at all times
};

struct SolverOptions {
  BoundaryModel model = BoundaryModel::model1;
  double cfl = 0.3;
  std::size_t memory_cap_bytes = std::size_t(4) << 30;
  Index nan_check_every = 50;
};

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

using SparseMatrix = Eigen::SparseMatrix<double>;
using RowSparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Per-element volumes and P1 basis gradients.
struct FemGeometry {
  Eigen::VectorXd volume;
  std::vector<Eigen::Matrix<double, 4, 3>> grad;
  Eigen::VectorXd lumped_mass;  // row-sum lumped P1 mass per vertex
};

/// Throws MeshError on a degenerate element.
FemGeometry fem_geometry(const TetraMesh& mesh);

struct FemOperators {
  Eigen::VectorXd mass_eps;   // eps_i m_i
  Eigen::VectorXd damping;    // sigma_i m_i
  SparseMatrix stiffness;     // scalar P1 stiffness
  RowSparseMatrix graddiv;    // weighted grad-div form, 3n x 3n
  RowSparseMatrix system;     // stiffness (x) I3 + graddiv
};

/// The grad-div weight of element K is the vertex mean of eps - 1.
FemOperators assemble_fem_operators(const TetraMesh& mesh, const FemGeometry& geometry, const MaterialField& material);
FemOperators assemble_fem_operators(const TetraMesh& mesh, const MaterialField& material);

/// Element-wise divergence of a node-major P1 vector field.
Eigen::VectorXd element_divergence(const TetraMesh& mesh, const FemGeometry& geometry,
                                   Eigen::Ref<const Eigen::VectorXd> field);

/// Structured-grid operators: the mass-lumped P1 form of the Kuhn split of
/// every grid cell, which in the interior is the 7-point Laplacian.
struct FdKernel {
  SparseMatrix stiffness;
  Eigen::VectorXd mass;
  // Same forms restricted to cells outside the FE box (energy bookkeeping).
  SparseMatrix stiffness_outside;
  Eigen::VectorXd mass_outside;
  // Lumped outer-face weights per grid node, h^2/4 per face corner.
  Eigen::VectorXd face_top, face_bottom, face_lateral;
};

FdKernel build_fd_kernel(const HybridDomain& domain);

// ---------------------------------------------------------------------------
// Time stepping
// ---------------------------------------------------------------------------

struct WaveState {
  VectorField fd_prev, fd_curr;  // 3 * grid nodes
  VectorField fe_prev, fe_curr;  // 3 * FE vertices
  Index step = 0;
};

/// Leapfrog scheme
///   (M/dt^2 + Dn/(2dt)) x+ = M (2x - x-)/dt^2 + Dp x-/(2dt) - A x + f
/// on the coupled FD/FE system. The forward problem uses Dn = Dp = D(t_n);
/// the adjoint runs the same update backwards with Dn = D(t_{m-1}),
/// Dp = D(t_{m+1}).
class HybridStepper {
 public:
  HybridStepper(const HybridDomain& domain, const MaterialField& material, double dt, BoundaryModel model);

  WaveState zero_state() const;

  /// Advances by one step. `top_forcing` holds 3 values per top boundary node
  /// (ordered as domain.boundary.top_nodes) or is empty.
  void step(WaveState& state, bool top_absorbing_next, bool top_absorbing_prev,
            Eigen::Ref<const Eigen::VectorXd> top_forcing) const;

  /// Discrete energy between fd/fe_prev and fd/fe_curr.
  double energy(const WaveState& state) const;
  /// FE part of energy().
  double fem_energy(const WaveState& state) const;

  /// Value of the coupled field at grid node `fd_node` (FE value inside the FE box).
  Vec3 value_at(const WaveState& state, Index fd_node) const;

  /// Copies FE values onto the inner overlap layer of the FD grid.
  void sync_fd_from_fe(VectorField& fd, const VectorField& fe) const;

  double dt() const { return dt_; }
  const FemOperators& fem() const { return fem_ops_; }
  const FdKernel& fd() const { return fd_; }
  const HybridDomain& domain() const { return *domain_; }

 private:
  const HybridDomain* domain_;
  double dt_;
  BoundaryModel model_;
  FdKernel fd_;
  FemOperators fem_ops_;
  std::vector<Index> fe_free_;   // FE vertices advanced by the FE update
  std::vector<Index> fd_to_fe_;  // per grid node: coincident FE vertex or -1
  std::vector<Index> top_row_;   // per top node: position in the grid
};

/// Largest eigenvalue of M_eps^{-1} A on the FE part (power iteration).
double fem_spectral_radius(const TetraMesh& mesh, const MaterialField& material, int iterations = 60);

/// Stable dt for every material with 1 <= eps <= eps_max on the free vertices.
double stable_dt(const HybridDomain& domain, double eps_max, double cfl);

TimeGrid stable_time_grid(const HybridDomain& domain, double eps_max, double T, double cfl);

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

/// Boundary samples; column k holds time t_{k+1} = (k+1) dt, node-major with
/// three components per node.
struct TraceRecord {
  std::vector<Index> nodes;  // grid node ids
  double dt = 0.0;
  Index n_steps = 0;
  Eigen::MatrixXd values;

  Index node_count() const { return static_cast<Index>(nodes.size()); }
};

struct ForwardOptions {
  bool store_volume = false;
  bool record_energy = false;
  std::vector<Index> record_nodes;  // empty: top boundary nodes
  VectorField f0, f1;               // initial FE field and velocity (empty: zero)
  Index snapshot_every = 0;
  std::function<void(Index, const VectorField&)> snapshot;  // called with step n and FE field u^n
};

struct ForwardResult {
  TraceRecord trace;
  // FE field history, column n + 1 holds u^n for n = -1 .. n_steps.
  Eigen::MatrixXd history;
  std::vector<double> energy;      // energy[n] between u^n and u^{n+1}
  std::vector<double> fem_energy;  // FE box only
};

ForwardResult run_forward(const HybridDomain& domain, const MaterialField& material, const TimeGrid& grid,
                          const SourceSpec& source, const SolverOptions& options = {},
                          const ForwardOptions& run = {});

struct AdjointResult {
  // Column n holds lambda^n for n = 0 .. n_steps (the last one is zero).
  Eigen::MatrixXd history;
  std::vector<double> energy;
};

/// Backward solve driven by `forcing` on its nodes: column k is applied in the
/// equation for the sample at t_{k+1}.
AdjointResult run_adjoint(const HybridDomain& domain, const MaterialField& material, const TimeGrid& grid,
                          const SourceSpec& source, const TraceRecord& forcing, const SolverOptions& options = {},
                          bool record_energy = false);

/// Linear resampling in time onto `grid` (zero initial data at t = 0).
TraceRecord resample_trace(const TraceRecord& trace, const TimeGrid& grid);

}  // namespace wcip
