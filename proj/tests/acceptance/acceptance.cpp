#include "wcip/datagen.hpp"
#include "wcip/inversion.hpp"
#include "wcip/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>

using namespace wcip;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

DomainSpec box_spec(double fem_size, double pad, double h) {
  DomainSpec s;
  s.omega_lo = Vec3::Constant(-pad);
  s.omega_hi = Vec3::Constant(fem_size + pad);
  s.fem_lo = Vec3::Zero();
  s.fem_hi = Vec3::Constant(fem_size);
  s.h_fdm = h;
  return s;
}

SourceSpec desk_source() {
  SourceSpec s;
  s.omega = 2.0;
  return s;
}

// Reconstruction setting shared by criteria 5-8.
constexpr double kT = 12.0;
constexpr double kNoise = 0.1;
constexpr std::uint64_t kSeed = 7;
constexpr double kGammaEps = 0.04;
constexpr double kGammaSigma = 5.0;
constexpr double kP = 0.5;
constexpr Index kIters = 400;
constexpr Index kLevels = 2;
constexpr double kBetaTilde = 0.7;

struct Desk {
  HybridDomain domain;
  PhantomSpec phantom;
  GeneratedData data;
  ObservationSet noisy;
  AcgaResult acga;
};

const Desk& desk() {
  static const Desk d = [] {
    Desk out{build_hybrid_domain(box_spec(6.0, 1.0, 0.5)), {}, {}, {}, {}};
    out.phantom = phantom_preset("stage1", out.domain.spec);
    DataGenOptions o;
    o.T = kT;
    o.fine_level = 1;
    out.data = generate_observations(out.domain, out.phantom, desk_source(), SolverOptions{}, o);
    out.noisy = add_noise(out.data.obs, {kNoise, kSeed});

    TikhonovParams tp;
    tp.gamma_eps = kGammaEps;
    tp.gamma_sigma = kGammaSigma;
    tp.p = kP;
    StoppingCriteria stop;
    stop.max_iters = kIters;
    stop.max_refinements = kLevels - 1;
    RefinementConfig ref;
    ref.beta_tilde_eps = ref.beta_tilde_sigma = kBetaTilde;
    AcgaOptions ao;
    ao.T = kT;
    const MaterialField q0 = background_material(out.domain.fem, out.phantom.eps_max, out.phantom.sigma_max);
    out.acga = acga_run(out.domain, out.noisy, desk_source(), SolverOptions{}, q0, tp, stop, ref, ao);
    return out;
  }();
  return d;
}

// 1D traveling wave E(d, t) = F(t - d) launched by the top source.
double plane_wave(double depth, double t, const SourceSpec& s) {
  const double u = t - depth;
  if (u <= 0.0 || u >= s.gate_end()) return 0.0;
  return s.amplitude * (1.0 - std::cos(s.omega * u)) / s.omega;
}

Outcome gradient_consistency() {
  const HybridDomain domain = build_hybrid_domain(box_spec(5.0, 1.0, 0.5));
  if (domain.fem.vertex_count() > 12 * 12 * 12) return {false, "FE mesh too large"};
  const PhantomSpec phantom = phantom_preset("stage1", domain.spec);
  DataGenOptions o;
  o.T = kT;
  const GeneratedData data = generate_observations(domain, phantom, desk_source(), SolverOptions{}, o);
  Problem problem;
  problem.domain = &domain;
  problem.grid = stable_time_grid(domain, phantom.eps_max, kT, 0.3);
  problem.source = desk_source();
  problem.obs = resample_observations(add_noise(data.obs, {kNoise, kSeed}), problem.grid);

  MaterialField q = background_material(domain.fem, phantom.eps_max, phantom.sigma_max);
  for (Index v = 0; v < q.eps.size(); ++v) {
    if (domain.fem_pinned[static_cast<std::size_t>(v)]) continue;
    q.eps(v) = 4.0;
    q.sigma(v) = 0.5;
  }
  const TikhonovParams tp;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> pos(1.5, 3.5), width(0.8, 1.6);
  const NodalField zero = NodalField::Zero(q.eps.size());
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Vec3 c(pos(rng), pos(rng), pos(rng));
    const NodalField b = bump_direction(domain, c, width(rng));
    const bool eps_dir = k < 5;
    const DirectionalCheck check = directional_derivative_oracle(
        problem, q, tp, tp.gamma_eps, tp.gamma_sigma, eps_dir ? b : zero, eps_dir ? zero : NodalField(0.2 * b),
        {1e-2, 1e-3, 1e-4});
    worst = std::max(worst, check.relative_error[check.plateau()]);
  }
  return {worst <= 0.05, fmt("worst plateau relative error %.2e over 5 eps + 5 sigma directions, %ld nodes", worst,
                             static_cast<long>(domain.fem.vertex_count()))};
}

Outcome forward_convergence() {
  const SourceSpec src = desk_source();
  constexpr double T = 7.0;
  double dt0 = 0.0;
  std::vector<double> errors;
  for (int level = 0; level < 2; ++level) {
    const double h = 0.25 / double(1 << level);
    const HybridDomain d = build_hybrid_domain(box_spec(3.0, 2.0, h));
    if (level == 0) dt0 = stable_dt(d, 1.0, 0.3);
    TimeGrid g;
    g.dt = dt0 / double(1 << level);
    g.n_steps = static_cast<Index>(std::llround(T / dt0)) << level;
    g.T = g.dt * double(g.n_steps);
    ForwardOptions fo;
    const Index ij = d.grid.dims()[0] / 2, ktop = d.grid.dims()[2] - 1;
    std::vector<double> depth;
    for (double z = 0.5; z <= 4.5 + 1e-9; z += 0.5) {
      fo.record_nodes.push_back(d.grid.id(ij, ij, ktop - static_cast<Index>(std::llround(z / h))));
      depth.push_back(z);
    }
    const ForwardResult r = run_forward(d, background_material(d.fem), g, src, SolverOptions{}, fo);
    double err = 0.0;
    for (Index n = 0; n < g.n_steps; n += Index(1) << level) {
      const double t = double(n + 1) * g.dt;
      for (std::size_t p = 0; p < depth.size(); ++p)
        err = std::max(err, std::abs(r.trace.values(Index(3 * p) + src.component - 1, n) - plane_wave(depth[p], t, src)));
    }
    errors.push_back(err);
  }
  const double ratio = errors[0] / errors[1];
  return {ratio >= 3.0 && ratio <= 5.0,
          fmt("max error %.3e (h 0.25) -> %.3e (h 0.125), ratio %.2f", errors[0], errors[1], ratio)};
}

Outcome energy_decay() {
  const HybridDomain d = build_hybrid_domain(box_spec(6.0, 1.0, 0.5));
  const SourceSpec src = desk_source();
  constexpr double T = 250.0;
  bool pass = true;
  std::string detail;
  for (double sigma : {0.0, 1.2}) {
    PhantomSpec p = phantom_preset("stage1", d.spec);
    p.tumor->sigma = sigma;
    const MaterialField m = build_phantom(p, d);
    ForwardOptions fo;
    fo.record_energy = true;
    const TimeGrid g = stable_time_grid(d, p.eps_max, T, 0.3);
    const ForwardResult r = run_forward(d, m, g, src, SolverOptions{}, fo);
    const double peak_fem = *std::max_element(r.fem_energy.begin(), r.fem_energy.end());
    int total_increases = 0, fem_increases = 0;
    for (std::size_t n = 1; n < r.energy.size(); ++n) {
      if (double(n) * g.dt < src.gate_end()) continue;
      if (r.energy[n] > r.energy[n - 1]) ++total_increases;
      if (r.fem_energy[n] > r.fem_energy[n - 1]) ++fem_increases;
    }
    const double terminal = r.fem_energy.back() / peak_fem;
    pass = pass && total_increases == 0 && terminal <= 0.01;
    detail += fmt("%ssigma %.1f: total energy increases %d, FE box energy increases %d, FE terminal/peak %.2e",
                  detail.empty() ? "" : "; ", sigma, total_increases, fem_increases, terminal);
  }
  return {pass, detail};
}

Outcome optimizer_identities() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  const Index n = 500;
  Eigen::VectorXd mass(n);
  for (Index i = 0; i < n; ++i) mass(i) = u(rng);
  auto random_field = [&] {
    NodalField f(n);
    for (Index i = 0; i < n; ++i) f(i) = u(rng) - 1.0;
    return f;
  };
  auto l2 = [&](const NodalField& a, const NodalField& b) { return (mass.array() * a.array() * b.array()).sum(); };

  bool gamma_ok = true;
  for (double g0 : {0.05, 3.0})
    for (double p : {0.3, 0.5, 0.9})
      for (Index m = 0; m < 100; ++m) gamma_ok = gamma_ok && regularization_update(g0, m, p) == g0 / std::pow(double(m + 1), p);

  double fr_err = 0.0, alpha_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const NodalField g = random_field(), gp = random_field(), dp = random_field();
    const DirectionUpdate up = update_direction(mass, g, &gp, &dp);
    const double beta = l2(g, g) / l2(gp, gp);
    fr_err = std::max(fr_err, std::abs(up.beta - beta) / beta);
    fr_err = std::max(fr_err, (up.d - (-g + beta * dp)).cwiseAbs().maxCoeff() / dp.cwiseAbs().maxCoeff());
    const double gamma = u(rng);
    alpha_err = std::max(alpha_err, std::abs(step_size(mass, g, -g, gamma) * gamma - 1.0));
  }

  MaterialField q;
  q.eps = 6.0 * random_field();
  q.sigma = 2.0 * random_field();
  q.eps.head(50).array() += 20.0;
  q.sigma.head(50).array() += 5.0;
  std::vector<char> pinned(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; i += 7) pinned[static_cast<std::size_t>(i)] = 1;
  project_coefficients(q, pinned);
  MaterialField twice = q;
  project_coefficients(twice, pinned);
  bool box_ok = q.eps.minCoeff() >= 1.0 && q.eps.maxCoeff() <= q.eps_max && q.sigma.minCoeff() >= 0.0 &&
                q.sigma.maxCoeff() <= q.sigma_max;
  for (Index i = 0; i < n; i += 7) box_ok = box_ok && q.eps(i) == 1.0 && q.sigma(i) == 0.0;
  const bool idempotent = twice.eps == q.eps && twice.sigma == q.sigma;

  const bool pass = gamma_ok && fr_err <= 1e-12 && alpha_err <= 1e-12 && box_ok && idempotent;
  return {pass, fmt("gamma recurrence %s, FR error %.1e, |alpha gamma - 1| %.1e, projection %s%s", gamma_ok ? "exact" : "off",
                    fr_err, alpha_err, idempotent ? "idempotent" : "not idempotent", box_ok ? " in boxes" : " leaves boxes")};
}

struct Peak {
  double value = 0.0;
  double distance = 0.0;
};

Peak peak(const TetraMesh& mesh, const NodalField& f, const Vec3& center) {
  Index at = 0;
  const double v = f.maxCoeff(&at);
  return {v, (mesh.vertices[static_cast<std::size_t>(at)] - center).norm()};
}

struct Reconstruction {
  double J0 = 0.0, J = 0.0;
  Peak eps, sigma;
};

Reconstruction coarse_result() {
  const Desk& d = desk();
  const LevelResult& l = d.acga.levels.front();
  const Vec3 c = d.phantom.tumor->center;
  return {l.cga.log.front().J, l.cga.final_J, peak(l.domain.fem, l.cga.material.eps, c),
          peak(l.domain.fem, l.cga.material.sigma, c)};
}

bool contrast_recovered(const Reconstruction& r) {
  const Desk& d = desk();
  const Inclusion& t = *d.phantom.tumor;
  const double threshold = d.phantom.background_eps + 0.6 * (t.eps - d.phantom.background_eps);
  return r.eps.value >= threshold && r.eps.distance <= 2.0 * d.domain.spec.h_fdm;
}

Outcome cga_reconstruction() {
  const Reconstruction r = coarse_result();
  const Inclusion& t = *desk().phantom.tumor;
  const bool a = r.J0 >= 3.0 * r.J;
  const bool b = contrast_recovered(r);
  const bool c = r.sigma.value < t.sigma;
  return {a && b && c, fmt("(a) J %.4g -> %.4g, ratio %.2f %s; (b) max eps %.2f at distance %.2f %s; (c) max sigma %.2f "
                           "vs %.1f %s",
                           r.J0, r.J, r.J0 / r.J, a ? "ok" : "short", r.eps.value, r.eps.distance, b ? "ok" : "short",
                           r.sigma.value, t.sigma, c ? "ok" : "not below")};
}

Outcome acga_improvement() {
  const Desk& d = desk();
  const AcgaResult& a = d.acga;
  if (a.levels.size() < 2) return {false, "only one level: " + a.stop_reason};
  const Reconstruction coarse = coarse_result();
  const LevelResult& last = a.levels.back();
  const double sigma = last.cga.material.sigma.maxCoeff();
  const Inclusion& t = *d.phantom.tumor;
  const double reach = t.extent() + 2.0 * d.domain.spec.h_fdm;
  std::size_t marked = 0, near = 0;
  for (const LevelResult& l : a.levels)
    for (Index k : l.marked) {
      Vec3 centroid = Vec3::Zero();
      for (Index v : l.domain.fem.tets[static_cast<std::size_t>(k)]) centroid += l.domain.fem.vertices[static_cast<std::size_t>(v)];
      ++marked;
      if ((0.25 * centroid - t.center).norm() <= reach) ++near;
    }
  const double share = marked ? double(near) / double(marked) : 0.0;
  const bool pass = sigma > coarse.sigma.value && last.cga.final_J <= coarse.J && share >= 0.6;
  return {pass, fmt("%zu levels; max sigma %.3f -> %.3f; J %.4g -> %.4g; %zu of %zu marked elements near the inclusion",
                    a.levels.size(), coarse.sigma.value, sigma, coarse.J, last.cga.final_J, near, marked)};
}

bool sweep_monotone(const Eigen::VectorXd& indicator) {
  std::size_t prev = static_cast<std::size_t>(indicator.size()) + 1;
  for (int k = 1; k <= 9; ++k) {
    const std::size_t n = select_elements(indicator, 0.1 * k).size();
    if (n > prev) return false;
    prev = n;
  }
  const double top = indicator.maxCoeff();
  const std::vector<Index> sel = select_elements(indicator, 1.0);
  std::size_t argmax = 0;
  for (Index i = 0; i < indicator.size(); ++i) argmax += indicator(i) == top;
  if (sel.size() != argmax) return false;
  return std::all_of(sel.begin(), sel.end(), [&](Index i) { return indicator(i) == top; });
}

Outcome marking_monotonicity() {
  const LevelResult& l = desk().acga.levels.front();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd random(2000);
  for (Index i = 0; i < random.size(); ++i) random(i) = u(rng);
  random(17) = random(1234) = 1.5;
  const bool eps = sweep_monotone(refinement_indicator(l.domain.fem, l.cga.material.eps));
  const bool sigma = sweep_monotone(refinement_indicator(l.domain.fem, l.cga.material.sigma));
  const bool rnd = sweep_monotone(random);
  return {eps && sigma && rnd, fmt("eps indicator %s, sigma indicator %s, random indicator with tied maximum %s",
                                   eps ? "ok" : "fails", sigma ? "ok" : "fails", rnd ? "ok" : "fails")};
}

Outcome noise_determinism() {
  const Desk& d = desk();
  const std::string a = encode_observation_file(to_observation_file(d.data.domain, add_noise(d.data.obs, {kNoise, kSeed})));
  const std::string b = encode_observation_file(to_observation_file(d.data.domain, add_noise(d.data.obs, {kNoise, kSeed})));
  const std::string other = encode_observation_file(to_observation_file(d.data.domain, add_noise(d.data.obs, {kNoise, kSeed + 1})));
  const bool identical = a == b && a != other;
  const bool zero = add_noise(d.data.obs, {0.0, kSeed}).trace.values == d.data.obs.trace.values;
  const bool contrast = contrast_recovered(coarse_result());
  return {identical && zero && contrast,
          fmt("seeded files %s; delta 0 payload %s; 5(b) under 10%% noise %s", identical ? "bit identical" : "differ",
              zero ? "exact" : "altered", contrast ? "holds" : "fails")};
}

Outcome file_format() {
  const Desk& d = desk();
  const ObservationFile f = to_observation_file(d.data.domain, d.noisy);
  const std::string bytes = encode_observation_file(f);
  const ObservationFile back = decode_observation_file(bytes);
  const bool exact = back.values == f.values && back.node_ids == f.node_ids && back.coords == f.coords &&
                     back.mask == f.mask && back.dt == f.dt && back.noise == f.noise && back.seed == f.seed &&
                     encode_observation_file(back) == bytes;
  const std::size_t header = 48 + 32 * f.node_ids.size() + (f.node_ids.size() + 7) / 8;
  int rejected = 0, tried = 0;
  for (std::size_t pos = 0; pos < header; pos += 97) {
    std::string bad = bytes;
    bad[pos] = static_cast<char>(bad[pos] ^ 0x04);
    ++tried;
    try {
      decode_observation_file(bad);
    } catch (const ChecksumError&) {
      ++rejected;
    } catch (const FileFormatError&) {
      if (pos < 8) ++rejected;  // magic and version are checked before the checksum
    }
  }
  return {exact && rejected == tried, fmt("%zu byte file round trip %s; %d of %d corrupted headers rejected", bytes.size(),
                                          exact ? "bit exact" : "differs", rejected, tried)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient-adjoint consistency", gradient_consistency},
      {"forward convergence", forward_convergence},
      {"energy decay", energy_decay},
      {"optimizer identities", optimizer_identities},
      {"CGA reconstruction", cga_reconstruction},
      {"ACGA improvement", acga_improvement},
      {"marking monotonicity", marking_monotonicity},
      {"noise robustness and determinism", noise_determinism},
      {"file format", file_format},
  };
  std::vector<char> selected(criteria.size(), argc == 1);
  for (int a = 1; a < argc; ++a) {
    const int k = std::atoi(argv[a]);
    if (k >= 1 && k <= int(criteria.size())) selected[std::size_t(k - 1)] = 1;
  }
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu (%s): %s  %s  [%.0f s]\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
