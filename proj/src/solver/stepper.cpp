#include "wcip/solver.hpp"

namespace wcip {

HybridStepper::HybridStepper(const HybridDomain& domain, const MaterialField& material, double dt,
                             BoundaryModel model)
    : domain_(&domain), dt_(dt), model_(model), fd_(build_fd_kernel(domain)),
      fem_ops_(assemble_fem_operators(domain.fem, material)) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  for (Index v = 0; v < domain.fem.vertex_count(); ++v)
    if (!domain.fem_on_interface[static_cast<std::size_t>(v)]) fe_free_.push_back(v);
  fd_to_fe_.assign(static_cast<std::size_t>(domain.grid.node_count()), -1);
  for (Index v = 0; v < domain.fem.vertex_count(); ++v)
    if (auto g = domain.grid.node_at(domain.fem.vertices[static_cast<std::size_t>(v)], 1e-9))
      fd_to_fe_[static_cast<std::size_t>(domain.grid.id(*g))] = v;
  top_row_.assign(static_cast<std::size_t>(domain.grid.node_count()), -1);
  const auto& top = domain.boundary.top_nodes;
  for (std::size_t i = 0; i < top.size(); ++i) top_row_[static_cast<std::size_t>(top[i])] = static_cast<Index>(i);
}

WaveState HybridStepper::zero_state() const {
  WaveState s;
  s.fd_prev = s.fd_curr = VectorField::Zero(3 * domain_->grid.node_count());
  s.fe_prev = s.fe_curr = VectorField::Zero(3 * domain_->fem.vertex_count());
  return s;
}

void HybridStepper::step(WaveState& state, bool top_absorbing_next, bool top_absorbing_prev,
                         Eigen::Ref<const Eigen::VectorXd> top_forcing) const {
  const double idt2 = 1.0 / (dt_ * dt_);
  const double i2dt = 0.5 / dt_;
  const Index ng = domain_->grid.node_count();
  const bool forced = top_forcing.size() > 0;

  // FD part.
  using Block = Eigen::Matrix<double, 3, Eigen::Dynamic>;
  const Eigen::Map<const Block> u(state.fd_curr.data(), 3, ng);
  const Block r = u * fd_.stiffness;
  Eigen::Map<Block> up(state.fd_prev.data(), 3, ng);
  const bool all = model_ == BoundaryModel::absorbing_all;
  for (Index i : domain_->fd_active) {
    const double base = fd_.face_bottom(i) + (all ? fd_.face_lateral(i) : 0.0);
    const double dn = base + ((all || top_absorbing_next) ? fd_.face_top(i) : 0.0);
    const double dp = base + ((all || top_absorbing_prev) ? fd_.face_top(i) : 0.0);
    const double m = fd_.mass(i);
    const double lhs = m * idt2 + dn * i2dt;
    Eigen::Vector3d rhs = m * idt2 * (2.0 * u.col(i) - up.col(i)) + dp * i2dt * up.col(i) - r.col(i);
    if (forced) {
      const Index row = top_row_[static_cast<std::size_t>(i)];
      if (row >= 0) rhs += top_forcing.segment<3>(3 * row);
    }
    up.col(i) = rhs / lhs;
  }

  // FE part.
  const Eigen::VectorXd rf = fem_ops_.system * state.fe_curr;
  for (Index v : fe_free_) {
    const double m = fem_ops_.mass_eps(v);
    const double d = fem_ops_.damping(v);
    const double lhs = m * idt2 + d * i2dt;
    for (int a = 0; a < 3; ++a) {
      const Index k = 3 * v + a;
      const double xp = state.fe_prev(k);
      state.fe_prev(k) = (m * idt2 * (2.0 * state.fe_curr(k) - xp) + d * i2dt * xp - rf(k)) / lhs;
    }
  }

  // Overlap exchange: FD -> FE on the FE boundary, FE -> FD one cell inside.
  for (const OverlapPair& p : domain_->interface) state.fe_prev.segment<3>(3 * p.fem) = state.fd_prev.segment<3>(3 * p.fd);
  for (const OverlapPair& p : domain_->inner_layer)
    state.fd_prev.segment<3>(3 * p.fd) = state.fe_prev.segment<3>(3 * p.fem);

  state.fd_prev.swap(state.fd_curr);
  state.fe_prev.swap(state.fe_curr);
  ++state.step;
}

double HybridStepper::energy(const WaveState& state) const {
  const Index ng = domain_->grid.node_count();
  using Block = Eigen::Matrix<double, 3, Eigen::Dynamic>;
  const Eigen::Map<const Block> a(state.fd_prev.data(), 3, ng);
  const Eigen::Map<const Block> b(state.fd_curr.data(), 3, ng);
  const Block v = (b - a) / dt_;
  double kinetic = v.colwise().squaredNorm().dot(fd_.mass_outside.transpose());
  const Block kb = b * fd_.stiffness_outside;
  double potential = (kb.array() * a.array()).sum();

  return 0.5 * (kinetic + potential) + fem_energy(state);
}

double HybridStepper::fem_energy(const WaveState& state) const {
  const Eigen::VectorXd vf = (state.fe_curr - state.fe_prev) / dt_;
  double kinetic = 0.0;
  for (Index i = 0; i < domain_->fem.vertex_count(); ++i) kinetic += fem_ops_.mass_eps(i) * vf.segment<3>(3 * i).squaredNorm();
  return 0.5 * (kinetic + state.fe_curr.dot(fem_ops_.system * state.fe_prev));
}

Vec3 HybridStepper::value_at(const WaveState& state, Index fd_node) const {
  const Index v = fd_to_fe_[static_cast<std::size_t>(fd_node)];
  if (v >= 0) return state.fe_curr.segment<3>(3 * v);
  return state.fd_curr.segment<3>(3 * fd_node);
}

void HybridStepper::sync_fd_from_fe(VectorField& fd, const VectorField& fe) const {
  for (const OverlapPair& p : domain_->inner_layer) fd.segment<3>(3 * p.fd) = fe.segment<3>(3 * p.fem);
}

}  // namespace wcip
