#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "cavnet/darkstates.hpp"
#include "cavnet/hamiltonian.hpp"
#include "cavnet/protocol.hpp"

namespace cavnet {

enum class Method { Rk4Fixed, ExpmPiecewise };

struct IntegratorConfig {
  double dt = 0.01;       // units of 1/g
  Method method = Method::Rk4Fixed;
  int sample_every = 10;  // steps per recorded sample
  double norm_drift_tol = 1e-8;
};

struct TrajectorySample {
  double t = 0;
  std::vector<double> p_pop;    // |A_i|^2
  std::vector<double> p_phase;  // arg A_i (0 where amplitude < 1e-8)
  double q_tot = 0, f_tot = 0;
  double norm2 = 1;
  double dark_pop = 0;
  double fidelity = 0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  StateVector final_state;
  double max_norm_drift = 0;      // max |norm^2 - 1| (Hermitian runs)
  double max_norm_step_gain = 0;  // max per-step increase of norm^2
  double min_gap = std::numeric_limits<double>::infinity();
  bool has_target = false;
  double final_fidelity = 0;
  double final_fidelity_conditional = 0;
  double final_norm2 = 1;
  double leakage = 0;  // sum(Q) + sum(F) at the end
};

namespace detail {

// Dark population and spectral gap from one Hermitian eigensolve.
struct SpectralProbe {
  double dark_pop = 0;
  double gap = 0;
};

inline SpectralProbe spectral_probe(const SectorBasis& basis,
                                    const CouplingSnapshot& snap,
                                    const SystemParams& params,
                                    const StateVector& psi,
                                    double rel_tol = 1e-10) {
  SystemParams lossless = params;
  lossless.dissipative = false;
  CouplingSnapshot hsnap = snap;
  hsnap.denom = Complex(params.delta, 0);
  for (std::size_t i = 0; i < hsnap.omega.size(); ++i)
    hsnap.s[i] = hsnap.omega[i] == Complex(0, 0)
                     ? Complex(0, 0)
                     : hsnap.omega[i] / hsnap.denom;
  Eigen::MatrixXcd h = dense_matrix(basis, hsnap, lossless);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const auto& evals = es.eigenvalues();
  const double scale = evals.cwiseAbs().maxCoeff();
  SpectralProbe probe;
  double gap = 0;
  for (int k = 0; k < evals.size(); ++k) {
    if (scale > 0 && std::abs(evals(k)) > rel_tol * scale) {
      const double e = std::abs(evals(k));
      if (gap == 0 || e < gap) gap = e;
      continue;
    }
    Complex ov = 0;
    for (int m = 0; m < basis.dim(); ++m)
      ov += std::conj(es.eigenvectors()(m, k)) * psi[m];
    probe.dark_pop += std::norm(ov);
  }
  probe.gap = gap;
  return probe;
}

class Stepper {
 public:
  Stepper(const SectorBasis& basis, const SystemParams& params,
          const Protocol& proto, const IntegratorConfig& cfg)
      : basis_(basis),
        params_(params),
        proto_(proto),
        cfg_(cfg),
        k1_(basis),
        k2_(basis),
        k3_(basis),
        k4_(basis),
        tmp_(basis) {
    params_.validate();
    proto_.validate();
    snap_.denom = Complex(params.delta, params.gamma_eff());
    snap_.omega.resize(static_cast<std::size_t>(basis.lattice().n_nodes()));
    snap_.s.resize(snap_.omega.size());
    // stability guard: dt * (2 w + max|s|) bounded
    double wmax = params.w;
    for (double wb : params.w_bond) wmax = std::max(wmax, wb);
    const double smax = proto.max_omega() / std::abs(params.delta);
    if (cfg.dt * (2 * wmax + smax) > 0.25)
      throw NumericalError(
          "integrator: dt too large for the coupling scale; reduce dt");
    if (cfg.dt <= 0) throw NumericalError("integrator: dt must be positive");
  }

  void load(double t) {
    for (int i = 0; i < basis_.lattice().n_nodes(); ++i) {
      const Complex om = proto_.omega(i, t);
      snap_.omega[static_cast<std::size_t>(i)] = om;
      snap_.s[static_cast<std::size_t>(i)] =
          om == Complex(0, 0) ? Complex(0, 0) : om / snap_.denom;
    }
  }

  const CouplingSnapshot& snapshot() const { return snap_; }

  void rk4_step(StateVector& psi, double t, double dt) {
    const Complex mi(0, -1);
    load(t);
    apply_into(basis_, snap_, params_, psi, k1_);
    axpy(psi, mi * (0.5 * dt), k1_, tmp_);
    load(t + 0.5 * dt);
    apply_into(basis_, snap_, params_, tmp_, k2_);
    axpy(psi, mi * (0.5 * dt), k2_, tmp_);
    apply_into(basis_, snap_, params_, tmp_, k3_);
    axpy(psi, mi * dt, k3_, tmp_);
    load(t + dt);
    apply_into(basis_, snap_, params_, tmp_, k4_);
    for (int m = 0; m < basis_.dim(); ++m)
      psi[m] += mi * (dt / 6.0) *
                (k1_[m] + 2.0 * k2_[m] + 2.0 * k3_[m] + k4_[m]);
  }

  void expm_step(StateVector& psi, double t, double dt) {
    load(t + 0.5 * dt);
    if (!have_cache_ || cached_omega_ != snap_.omega || cached_dt_ != dt) {
      const Eigen::MatrixXcd h = dense_matrix(basis_, snap_, params_);
      if (is_hermitian_mode(params_)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
        Eigen::VectorXcd ph(es.eigenvalues().size());
        for (int k = 0; k < ph.size(); ++k)
          ph(k) = std::exp(Complex(0, -dt * es.eigenvalues()(k)));
        propagator_ = es.eigenvectors() * ph.asDiagonal() *
                      es.eigenvectors().adjoint();
      } else {
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(h);
        Eigen::VectorXcd ph(es.eigenvalues().size());
        for (int k = 0; k < ph.size(); ++k)
          ph(k) = std::exp(Complex(0, -dt) * es.eigenvalues()(k));
        propagator_ = es.eigenvectors() * ph.asDiagonal() *
                      es.eigenvectors().inverse();
      }
      cached_omega_ = snap_.omega;
      cached_dt_ = dt;
      have_cache_ = true;
    }
    Eigen::Map<Eigen::VectorXcd> v(psi.a.data(), basis_.dim());
    v = (propagator_ * v).eval();
  }

  void step(StateVector& psi, double t, double dt) {
    if (cfg_.method == Method::Rk4Fixed)
      rk4_step(psi, t, dt);
    else
      expm_step(psi, t, dt);
  }

 private:
  void axpy(const StateVector& x, Complex c, const StateVector& d,
            StateVector& out) {
    for (int m = 0; m < basis_.dim(); ++m) out[m] = x[m] + c * d[m];
  }

  const SectorBasis& basis_;
  SystemParams params_;
  const Protocol& proto_;
  IntegratorConfig cfg_;
  CouplingSnapshot snap_;
  StateVector k1_, k2_, k3_, k4_, tmp_;
  Eigen::MatrixXcd propagator_;
  std::vector<Complex> cached_omega_;
  double cached_dt_ = 0;
  bool have_cache_ = false;
};

}  // namespace detail

inline double fidelity(const StateVector& psi, const StateVector& target,
                       bool conditional = false) {
  double f = std::norm(inner(target, psi));
  if (conditional) {
    const double n2 = norm2(psi);
    if (n2 <= 0)
      throw std::domain_error("fidelity: conditional undefined for zero norm");
    f /= n2;
  }
  return f;
}

inline double fidelity(const SectorBasis& basis, const StateVector& psi,
                       const TargetSpec& target, bool conditional = false) {
  return fidelity(psi, target.make_state(basis), conditional);
}

/// Propagate i dpsi/dt = H(t) psi over the protocol without recording;
/// returns the final state. Fast path for optimizer objectives.
inline StateVector integrate_final(
    const SectorBasis& basis, const SystemParams& params,
    const Protocol& proto, const IntegratorConfig& cfg,
    std::optional<StateVector> initial = std::nullopt) {
  detail::Stepper stepper(basis, params, proto, cfg);
  StateVector psi = initial ? *initial : proto.initial.make_state(basis);
  if (std::abs(norm2(psi) - 1.0) > 1e-9)
    throw std::invalid_argument("integrate: initial state not normalized");
  const long steps = std::lround(proto.duration / cfg.dt);
  const bool hermitian = is_hermitian_mode(params);
  for (long k = 0; k < steps; ++k) {
    stepper.step(psi, k * cfg.dt, cfg.dt);
    if (hermitian && std::abs(norm2(psi) - 1.0) > cfg.norm_drift_tol)
      throw NumericalError("integrator: norm drift beyond tolerance; reduce dt");
  }
  return psi;
}

/// Full integration with sampled observables (populations, phases, norm,
/// dark population, spectral gap, fidelity to the protocol target).
inline Trajectory integrate(const Lattice& lattice, const SystemParams& params,
                            const Protocol& proto, const IntegratorConfig& cfg,
                            std::optional<StateVector> initial = std::nullopt) {
  SectorBasis basis(lattice);
  detail::Stepper stepper(basis, params, proto, cfg);
  StateVector psi = initial ? *initial : proto.initial.make_state(basis);
  if (std::abs(norm2(psi) - 1.0) > 1e-9)
    throw std::invalid_argument("integrate: initial state not normalized");

  Trajectory traj;
  traj.has_target = !proto.target.empty();
  StateVector target_state(basis);
  if (traj.has_target) target_state = proto.target.make_state(basis);

  const int n = lattice.n_nodes();
  const long steps = std::lround(proto.duration / cfg.dt);
  const bool hermitian = is_hermitian_mode(params);
  const int stride = std::max(1, cfg.sample_every);

  auto record = [&](double t) {
    TrajectorySample s;
    s.t = t;
    s.p_pop.resize(static_cast<std::size_t>(n));
    s.p_phase.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const Complex a = psi[basis.p(i)];
      s.p_pop[static_cast<std::size_t>(i)] = std::norm(a);
      s.p_phase[static_cast<std::size_t>(i)] =
          std::abs(a) < 1e-8 ? 0.0 : std::arg(a);
    }
    for (int i = 0; i < n; ++i) s.q_tot += std::norm(psi[basis.q(i)]);
    for (int b = 0; b < lattice.n_bonds(); ++b)
      s.f_tot += std::norm(psi[basis.f(b)]);
    s.norm2 = norm2(psi);
    stepper.load(t);
    const auto probe =
        detail::spectral_probe(basis, stepper.snapshot(), params, psi);
    s.dark_pop = probe.dark_pop;
    if (probe.gap > 0) traj.min_gap = std::min(traj.min_gap, probe.gap);
    if (traj.has_target) s.fidelity = fidelity(psi, target_state, false);
    traj.samples.push_back(std::move(s));
  };

  record(0.0);
  double prev_norm2 = norm2(psi);
  for (long k = 0; k < steps; ++k) {
    stepper.step(psi, k * cfg.dt, cfg.dt);
    const double n2 = norm2(psi);
    traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(n2 - 1.0));
    traj.max_norm_step_gain =
        std::max(traj.max_norm_step_gain, n2 - prev_norm2);
    prev_norm2 = n2;
    if (hermitian && std::abs(n2 - 1.0) > cfg.norm_drift_tol)
      throw NumericalError("integrator: norm drift beyond tolerance; reduce dt");
    if ((k + 1) % stride == 0 || k + 1 == steps) record((k + 1) * cfg.dt);
  }

  traj.final_state = psi;
  traj.final_norm2 = norm2(psi);
  if (traj.has_target) {
    traj.final_fidelity = fidelity(psi, target_state, false);
    traj.final_fidelity_conditional =
        traj.final_norm2 > 0 ? fidelity(psi, target_state, true) : 0.0;
  }
  if (!traj.samples.empty()) {
    const TrajectorySample& last = traj.samples.back();
    traj.leakage = last.q_tot + last.f_tot;
  }
  return traj;
}

/// Phase profile at (the sample nearest to) time `at`, gauge-fixed so the
/// reference node's phase is zero. Nodes with |A| < 1e-8 are undefined.
struct PhaseProfile {
  double t = 0;
  std::vector<double> phase;
  std::vector<bool> defined;
  int reference = 0;
};

inline double wrap_angle(double x) {
  x = std::fmod(x + kPi, 2 * kPi);
  if (x < 0) x += 2 * kPi;
  return x - kPi;
}

inline PhaseProfile phase_profile(const Trajectory& traj, double at,
                                  int reference) {
  if (traj.samples.empty())
    throw std::invalid_argument("phase profile: empty trajectory");
  const TrajectorySample* best = &traj.samples.front();
  for (const TrajectorySample& s : traj.samples)
    if (std::abs(s.t - at) < std::abs(best->t - at)) best = &s;
  PhaseProfile prof;
  prof.t = best->t;
  prof.reference = reference;
  const std::size_t n = best->p_pop.size();
  prof.phase.resize(n);
  prof.defined.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    prof.defined[i] = best->p_pop[i] >= 1e-16;
  if (reference < 0 || reference >= static_cast<int>(n) ||
      !prof.defined[static_cast<std::size_t>(reference)])
    throw std::domain_error("phase profile: reference phase undefined");
  const double ref = best->p_phase[static_cast<std::size_t>(reference)];
  for (std::size_t i = 0; i < n; ++i)
    prof.phase[i] = prof.defined[i] ? wrap_angle(best->p_phase[i] - ref) : 0.0;
  return prof;
}

/// max_i |(theta_{i+1} - theta_i) - phi0| over consecutive defined nodes in
/// [first, last]; the Fourier-state equispacing figure of merit.
inline double equispacing_metric(const PhaseProfile& prof, double phi0,
                                 int first, int last) {
  double metric = 0;
  bool any = false;
  for (int i = first; i < last; ++i) {
    if (!prof.defined[static_cast<std::size_t>(i)] ||
        !prof.defined[static_cast<std::size_t>(i + 1)])
      continue;
    const double d = wrap_angle(prof.phase[static_cast<std::size_t>(i + 1)] -
                                prof.phase[static_cast<std::size_t>(i)] - phi0);
    metric = std::max(metric, std::abs(d));
    any = true;
  }
  if (!any) throw std::domain_error("equispacing: no defined phase pairs");
  return metric;
}

}  // namespace cavnet
