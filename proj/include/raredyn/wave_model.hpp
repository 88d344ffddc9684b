#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "raredyn/config.hpp"
#include "raredyn/core.hpp"

namespace raredyn {

// Sine-Galerkin surrogate of u_tt - u_xx + a(x) u_t + u^3 = eta on (0, pi)
// with Dirichlet ends, e_j = sqrt(2/pi) sin(jx), lambda_j = j^2.
struct WaveConfig {
  std::size_t modes = 64;        // J
  double period = 4.0;           // T
  std::size_t steps = 4096;      // T / dt
  std::size_t noise_modes = 4;   // N: b_jk = 0 unless j, k <= N
  double decay_exponent = 2.0;   // s in b_jk = B j^-s k^-s
  double budget = 1.0;           // B0
  double budget_fill = 0.9;      // B saturates this share of the budget
  double noise_scale = -1.0;     // B; negative means derived from budget_fill
  double damping = 1.0;          // a0
  double damping_start = 0.7 * 3.14159265358979323846;
  double damping_ramp = 0.1 * 3.14159265358979323846;  // mollifier width left of the plateau
  bool constant_damping = false;  // a = a0 on all of (0, pi)
  double cubic = 1.0;            // coefficient of u^3; 0 gives the linear regime
  double blowup_guard = 1e6;

  double dt() const { return period / static_cast<double>(steps); }
  // Damping profile: a0 on [damping_start, pi], a C^2 polynomial ramp down to
  // zero over [damping_start - damping_ramp, damping_start].
  double a(double x) const;
  // Sum_{j,k} b_jk lambda_j^{2/7} ||alpha_k||_inf.
  double budget_used() const;
  double budget_limit() const;
  // B actually used (resolves noise_scale < 0).
  double scale() const;
  double b(std::size_t j, std::size_t k) const;  // 1-based
  // Throws ConfigError on bad fields or a violated noise budget.
  void validate() const;

  // Reads section [wave]; missing keys keep their defaults. `dt` may be given
  // instead of `steps`, and must divide the period.
  static WaveConfig from_config(const Config& cfg);
};

struct WaveState {
  Eigen::VectorXd u;  // position modes
  Eigen::VectorXd v;  // velocity modes

  static WaveState zero(std::size_t modes);
};

// theta is N x N, entries in [-1, 1].
struct KickNoise {
  Eigen::MatrixXd theta;

  static KickNoise zero(std::size_t n) { return {Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))}; }
};

// rho(r) = (15/16)(1 - r^2)^2 and its CDF.
double kick_density(double r);
double kick_cdf(double r);
// Inverse CDF by safeguarded Newton on the polynomial CDF.
double kick_quantile(double p);

// Time basis on (0, 1): alpha_1 = 1, alpha_2m = sqrt2 cos(2 pi m t),
// alpha_2m+1 = sqrt2 sin(2 pi m t).
double time_basis(std::size_t k, double t);

class WaveModel {
 public:
  explicit WaveModel(WaveConfig config);

  const WaveConfig& config() const { return config_; }
  std::size_t modes() const { return config_.modes; }

  KickNoise sample_kick(CounterRng& rng) const;
  // Kick n of the stream keyed by seed uses CounterRng(seed, 0, n).
  KickNoise sample_kick(std::uint64_t seed, std::uint64_t n) const;

  // u[T] from u[0] = state under the forcing built from `kick`.
  WaveState kick_map(const WaveState& state, const KickNoise& kick) const;
  // Same, also advancing w: the solution of the forced equation from zero
  // data, with the full u in the cubic term. u - w solves the damped linear
  // equation from the initial data of u.
  WaveState kick_map(const WaveState& state, WaveState& w, const KickNoise& kick) const;

  // 1/2 sum j^2 u_j^2 + 1/2 sum v_j^2 + (c/4) int u^4, c the cubic
  // coefficient (1 by default).
  double energy(const WaveState& s) const;
  double quadratic_energy(const WaveState& s) const;
  // Quadratic energy of w in modes j > jcut over that of all modes.
  double tail_fraction(const WaveState& w, std::size_t jcut) const;

  // Fixed shape (u_j = j^-2, v_j = j^-1 for j <= 4) scaled to energy e.
  WaveState state_with_energy(double e) const;

  // Damping matrix A_jk = int a e_j e_k and the projected cubic (u^3)_j.
  const Eigen::MatrixXd& damping_matrix() const { return damping_; }
  Eigen::VectorXd cubic_term(const Eigen::VectorXd& u) const;
  // Modal forcing eta_j at time t in [0, T].
  Eigen::VectorXd forcing(const KickNoise& kick, double t) const;

  // Vector model over (u, v, w_u, w_v); distance is the energy norm of the
  // (u, v) difference and dist_to_Y the energy norm of u - w.
  RdsModel as_rds_model() const;
  State pack(const WaveState& u, const WaveState& w) const;
  void unpack(const State& x, WaveState& u, WaveState& w) const;

 private:
  void advance(WaveState& s, WaveState* w, const KickNoise& kick) const;

  WaveConfig config_;
  Eigen::MatrixXd damping_;      // A
  Eigen::MatrixXd off_diagonal_;  // A minus its diagonal
  Eigen::MatrixXd b_;            // b_jk, N x N
  Eigen::MatrixXd grid_;         // e_j at the collocation points, M x J
  double weight_ = 0.0;          // quadrature weight pi / M
  // Exact per-mode propagator of u'' + A_jj u' + j^2 u = 0 over dt.
  Eigen::VectorXd puu_, puv_, pvu_, pvv_;
};

struct DecayRun {
  double initial_energy = 0.0;
  std::vector<double> energies;  // E(u_n), n = 0..horizon
  // Unforced: fit of log E over n.
  double rate = 0.0;
  double fit_r2 = 0.0;
  // Forced: first n after which every energy stays within the ball.
  long long entry_time = -1;
  double max_after_entry = 0.0;
};

struct DecayReport {
  bool kicks_on = false;
  double ball_radius = 0.0;
  std::vector<DecayRun> runs;

  std::string to_csv() const;
};

// All runs share the kick stream (seed, 0, n). With kicks on and
// ball_radius <= 0 the radius is twice the largest energy seen from the
// zero state over the same horizon. The unforced fit uses energies above
// 1e-24 of the initial one.
DecayReport decay_experiment(const WaveModel& model, const std::vector<double>& initial_energies, bool kicks_on,
                             std::size_t horizon, std::uint64_t seed, double ball_radius = 0.0);

struct WaveRow {
  std::size_t step = 0;
  double energy = 0.0;
  double tail_fraction = 0.0;
  std::vector<double> first_modes;
};

// Kicked trajectory from x0 with w co-evolved from zero; kick n uses
// CounterRng(seed, 0, n).
std::vector<WaveRow> wave_simulate(const WaveModel& model, const WaveState& x0, std::size_t n, std::uint64_t seed,
                                   std::size_t jcut, std::size_t dump_modes = 4);
std::string wave_rows_csv(const std::vector<WaveRow>& rows);

}  // namespace raredyn
