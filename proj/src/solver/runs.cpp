#include "wcip/solver.hpp"

#include <cmath>

namespace wcip {

namespace {

bool top_absorbing(double t, const SourceSpec& source) { return t > source.gate_end(); }

void check_finite(const WaveState& s, Index step) {
  if (!s.fd_curr.allFinite() || !s.fe_curr.allFinite()) throw InstabilityError(step);
}

void check_memory(std::size_t bytes, const SolverOptions& options) {
  if (bytes > options.memory_cap_bytes) throw MemoryCapError(bytes, options.memory_cap_bytes);
}

}  // namespace

double stable_dt(const HybridDomain& domain, double eps_max, double cfl) {
  if (!(cfl > 0.0)) throw ConfigError("CFL number must be positive");
  const double h_min = std::min(domain.spec.h_fdm, min_edge_length(domain.fem));
  MaterialField m = background_material(domain.fem, std::max(eps_max, 1.0));
  double lambda = fem_spectral_radius(domain.fem, m);
  for (Index v = 0; v < domain.fem.vertex_count(); ++v)
    if (!domain.fem_pinned[static_cast<std::size_t>(v)]) m.eps(v) = std::max(eps_max, 1.0);
  lambda = std::max(lambda, fem_spectral_radius(domain.fem, m));
  // Power iteration approaches the top eigenvalue from below.
  const double eps_eff = std::max(1.0, 1.1 * lambda * h_min * h_min / 12.0);
  return cfl * h_min / std::sqrt(3.0 * eps_eff);
}

TimeGrid stable_time_grid(const HybridDomain& domain, double eps_max, double T, double cfl) {
  return make_time_grid(T, stable_dt(domain, eps_max, cfl));
}

ForwardResult run_forward(const HybridDomain& domain, const MaterialField& material, const TimeGrid& grid,
                          const SourceSpec& source, const SolverOptions& options, const ForwardOptions& run) {
  validate(source);
  ForwardResult out;
  out.trace.nodes = run.record_nodes.empty() ? domain.boundary.top_nodes : run.record_nodes;
  out.trace.dt = grid.dt;
  out.trace.n_steps = grid.n_steps;
  const Index nrec = out.trace.node_count();
  out.trace.values = Eigen::MatrixXd::Zero(3 * nrec, grid.n_steps);

  const Index nf = 3 * domain.fem.vertex_count();
  if (run.store_volume) {
    check_memory(static_cast<std::size_t>(grid.n_steps + 2) * static_cast<std::size_t>(nf) * sizeof(double), options);
    out.history.resize(nf, grid.n_steps + 2);
  }

  const HybridStepper stepper(domain, material, grid.dt, options.model);
  WaveState state = stepper.zero_state();
  if (run.f0.size() > 0 || run.f1.size() > 0) {
    for (const VectorField* f : {&run.f0, &run.f1})
      if (f->size() > 0 && f->size() != nf) throw ContractError("initial data does not match the FE mesh");
    std::vector<char> boundary = domain.fem_on_interface;
    for (Index v = 0; v < domain.fem.vertex_count(); ++v) {
      if (boundary[static_cast<std::size_t>(v)]) continue;
      const Eigen::Vector3d u0 = run.f0.size() ? Eigen::Vector3d(run.f0.segment<3>(3 * v)) : Eigen::Vector3d::Zero();
      const Eigen::Vector3d v0 = run.f1.size() ? Eigen::Vector3d(run.f1.segment<3>(3 * v)) : Eigen::Vector3d::Zero();
      state.fe_curr.segment<3>(3 * v) = u0;
      state.fe_prev.segment<3>(3 * v) = u0 - grid.dt * v0;
    }
    stepper.sync_fd_from_fe(state.fd_curr, state.fe_curr);
    stepper.sync_fd_from_fe(state.fd_prev, state.fe_prev);
  }
  if (run.store_volume) {
    out.history.col(0) = state.fe_prev;
    out.history.col(1) = state.fe_curr;
  }

  const auto& top = domain.boundary.top_nodes;
  const double gate = source.gate_end();
  const int comp = source.component - 1;
  Eigen::VectorXd forcing = Eigen::VectorXd::Zero(3 * static_cast<Index>(top.size()));
  const Eigen::VectorXd none;
  for (Index n = 0; n < grid.n_steps; ++n) {
    const double t = grid.time(n);
    const bool absorbing = top_absorbing(t, source);
    const double p = t <= gate ? source_value(t, source) : 0.0;
    if (p != 0.0) {
      for (std::size_t i = 0; i < top.size(); ++i) forcing(3 * static_cast<Index>(i) + comp) = stepper.fd().face_top(top[i]) * p;
      stepper.step(state, absorbing, absorbing, forcing);
    } else {
      stepper.step(state, absorbing, absorbing, none);
    }
    if (run.record_energy) {
      out.energy.push_back(stepper.energy(state));
      out.fem_energy.push_back(stepper.fem_energy(state));
    }
    for (Index i = 0; i < nrec; ++i) out.trace.values.block<3, 1>(3 * i, n) = stepper.value_at(state, out.trace.nodes[i]);
    if (run.store_volume) out.history.col(n + 2) = state.fe_curr;
    if ((n + 1) % options.nan_check_every == 0 || n + 1 == grid.n_steps) check_finite(state, n + 1);
    if (run.snapshot && run.snapshot_every > 0 && (n + 1) % run.snapshot_every == 0) run.snapshot(n + 1, state.fe_curr);
  }
  return out;
}

AdjointResult run_adjoint(const HybridDomain& domain, const MaterialField& material, const TimeGrid& grid,
                          const SourceSpec& source, const TraceRecord& forcing, const SolverOptions& options,
                          bool record_energy) {
  validate(source);
  if (forcing.n_steps != grid.n_steps || forcing.values.cols() != grid.n_steps ||
      forcing.values.rows() != 3 * forcing.node_count())
    throw ContractError("adjoint forcing does not match the time grid");
  const auto& top = domain.boundary.top_nodes;
  std::vector<Index> row(static_cast<std::size_t>(domain.grid.node_count()), -1);
  for (std::size_t i = 0; i < top.size(); ++i) row[static_cast<std::size_t>(top[i])] = static_cast<Index>(i);
  std::vector<Index> target;
  for (Index node : forcing.nodes) {
    if (node < 0 || node >= domain.grid.node_count() || row[static_cast<std::size_t>(node)] < 0)
      throw ContractError("adjoint forcing must live on top boundary nodes");
    target.push_back(row[static_cast<std::size_t>(node)]);
  }

  const Index nf = 3 * domain.fem.vertex_count();
  check_memory(static_cast<std::size_t>(grid.n_steps + 1) * static_cast<std::size_t>(nf) * sizeof(double), options);
  AdjointResult out;
  out.history = Eigen::MatrixXd::Zero(nf, grid.n_steps + 1);

  const HybridStepper stepper(domain, material, grid.dt, options.model);
  WaveState state = stepper.zero_state();  // prev = lambda^{N+1}, curr = lambda^N
  Eigen::VectorXd f = Eigen::VectorXd::Zero(3 * static_cast<Index>(top.size()));
  for (Index m = grid.n_steps; m >= 1; --m) {
    f.setZero();
    for (std::size_t i = 0; i < target.size(); ++i)
      f.segment<3>(3 * target[i]) += forcing.values.block<3, 1>(3 * static_cast<Index>(i), m - 1);
    stepper.step(state, top_absorbing(grid.time(m - 1), source), top_absorbing(grid.time(m + 1), source), f);
    out.history.col(m - 1) = state.fe_curr;
    if (record_energy) out.energy.push_back(stepper.energy(state));
    if ((grid.n_steps - m + 1) % options.nan_check_every == 0 || m == 1) check_finite(state, m - 1);
  }
  return out;
}

TraceRecord resample_trace(const TraceRecord& trace, const TimeGrid& grid) {
  if (trace.n_steps == grid.n_steps && trace.dt == grid.dt) return trace;
  const double t_end = double(trace.n_steps) * trace.dt;
  if (double(grid.n_steps) * grid.dt > t_end * (1.0 + 1e-9) + 1e-12)
    throw ContractError("resampling beyond the end of the recorded trace");
  TraceRecord out;
  out.nodes = trace.nodes;
  out.dt = grid.dt;
  out.n_steps = grid.n_steps;
  out.values = Eigen::MatrixXd::Zero(trace.values.rows(), grid.n_steps);
  for (Index k = 0; k < grid.n_steps; ++k) {
    const double s = double(k + 1) * grid.dt / trace.dt;  // position in source samples, 0 is t = 0
    Index j = static_cast<Index>(std::floor(s));
    double frac = s - double(j);
    if (j >= trace.n_steps) {
      j = trace.n_steps;
      frac = 0.0;
    }
    // Sample j sits in column j - 1; column -1 is the zero initial state.
    Eigen::VectorXd a = j >= 1 ? Eigen::VectorXd(trace.values.col(j - 1)) : Eigen::VectorXd::Zero(trace.values.rows());
    if (frac > 0.0) {
      const Eigen::VectorXd b = trace.values.col(j);
      a = (1.0 - frac) * a + frac * b;
    }
    out.values.col(k) = a;
  }
  return out;
}

}  // namespace wcip
