#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "raredyn/core.hpp"
#include "raredyn/finite_engine.hpp"
#include "raredyn/oracle.hpp"

namespace raredyn {

struct WeightsSummary {
  double min = 0.0;
  double max = 0.0;
  double ess = 0.0;  // (sum w)^2 / sum w^2 over hits
};

struct RareEventEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
  std::size_t hits = 0;
  std::string method = "naive";
  std::optional<WeightsSummary> weights;  // tilted only
};

using EmpiricalEvent = std::function<bool(const EmpiricalMeasure&)>;

// Fraction of trajectories whose L_{n,x0} lies in the event; trajectory i
// uses the streams (seed, i, k).
RareEventEstimate rare_event_naive(const RdsModel& model, const State& x0, std::size_t n, const EmpiricalEvent& event,
                                   std::size_t samples, std::uint64_t seed, unsigned jobs = 1);
// Finite-chain version with an occupation-count event; draws the same
// uniforms as the RdsModel wrapper of the kernel.
RareEventEstimate rare_event_naive(const FiniteMarkovKernel& kernel, std::size_t x0, std::size_t n,
                                   const OccupationEvent& event, std::size_t samples, std::uint64_t seed,
                                   unsigned jobs = 1);

// Doob transform pi_V(x,y) = pi(x,y) e^{V(y)} h_V(y) / (lambda_V h_V(x)).
Eigen::MatrixXd h_transform(const FiniteMarkovKernel& kernel, const Potential& V, PerronTriple* triple = nullptr);

// Importance sampling from pi_V with weight
// lambda_V^n h_V(x0) / h_V(x_n) e^{-(V(x_1) + ... + V(x_n))}. V = 0 takes
// the untilted kernel and reproduces rare_event_naive draw for draw.
RareEventEstimate rare_event_tilted(const FiniteMarkovKernel& kernel, const Potential& V, std::size_t x0, std::size_t n,
                                    const OccupationEvent& event, std::size_t samples, std::uint64_t seed,
                                    unsigned jobs = 1);

// Empirical law of a point cloud, compressed for the dual-Lipschitz LP.
struct CompressedPair {
  DiscreteMeasure first;
  DiscreteMeasure second;
  double radius_first = 0.0;   // max distance from a point to its atom
  double radius_second = 0.0;
};
inline constexpr std::size_t kMaxClusters = 32;

// Paired clouds (a_i, b_i) share one partition: greedy farthest-point
// clustering in the product metric, each side's cluster mass placed at its
// own centroid. Clouds with at most 32 distinct points per side are kept
// exact.
CompressedPair compress_pair(const std::vector<State>& a, const std::vector<State>& b, const Metric& d);

struct MixingPoint {
  std::size_t k = 0;
  double distance = 0.0;
  double bias = 0.0;  // clustering radius times mass, both clouds
};

struct MixingCurve {
  std::vector<MixingPoint> points;
  double gamma_hat = 0.0;   // -slope of log distance over k
  double fit_r2 = 0.0;
  std::size_t fit_points = 0;
};

// Coupled pairs driven by identical kicks: trajectory i of both copies uses
// the streams (seed, i, k).
MixingCurve mixing_estimate(const RdsModel& model, const State& x0, const State& y0, std::size_t n, std::size_t samples,
                            std::uint64_t seed, unsigned jobs = 1);

struct CltCheck {
  double sigma2 = 0.0;  // exact, from the Poisson equation
  double empirical_variance = 0.0;
  double ks_statistic = 0.0;
  double ks_pvalue = 1.0;
  bool degenerate = false;
  std::vector<double> sums;  // normalized sums by trajectory id
};

// x_0 ~ mu_* (drawn from the stream (seed, i, kInitialStep)), sums
// n^{-1/2} sum_{k=1}^n (f(x_k) - <f, mu_*>) compared with N(0, sigma^2).
inline constexpr std::uint64_t kInitialStep = 0xffffffffu;
CltCheck clt_check(const FiniteMarkovKernel& kernel, const Potential& f, std::size_t n, std::size_t samples,
                   std::uint64_t seed, unsigned jobs = 1);

// One-sample Kolmogorov-Smirnov statistic against N(0, sigma^2) and the
// asymptotic p-value.
double ks_statistic_normal(std::vector<double> xs, double sigma);
double kolmogorov_pvalue(double d, std::size_t n);

struct LogLinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double max_residual = 0.0;
  std::size_t points = 0;
};
// Fit log y = intercept + slope * x over entries with y > 0.
LogLinearFit fit_log_linear(const std::vector<double>& xs, const std::vector<double>& ys);

struct AcDiagnostic {
  std::vector<double> distances;   // dist(x_k, Y), k = 0..n, reference trajectory
  std::vector<double> worst_case;  // max over the ensemble
  double kappa_hat = 0.0;
  double ac_bound = 0.0;           // fitted prefactor e^{intercept}
  double fit_residual = 0.0;
  double fit_r2 = 0.0;
  std::size_t fit_points = 0;
};

// The fit uses worst-case distances at least `relative_floor` times the
// largest one, so the slow approach to Y's boundary does not bias kappa.
AcDiagnostic ac_diagnostic(const RdsModel& model, const State& x0, std::size_t n, std::uint64_t seed,
                           std::size_t ensemble = 16, double relative_floor = 1e-4, unsigned jobs = 1);

struct AetRow {
  std::size_t n = 0;
  double fraction = 0.0;  // share of trajectories with (1/n) sum dist(x_k, Y) >= r
};

// Upper-bound surrogate dist(L_n, P(Y)) <= (1/n) sum_{k=1}^n dist(x_k, Y).
std::vector<AetRow> aet_diagnostic(const RdsModel& model, const State& x0, const std::vector<std::size_t>& n_grid,
                                   std::size_t samples, double r, std::uint64_t seed, unsigned jobs = 1);

struct IrreducibilityProbe {
  std::size_t horizon = 0;
  double probability = 0.0;
  double standard_error = 0.0;
  std::size_t hits = 0;
  std::size_t samples = 0;
};

// Estimates P_N(y, B(z, eps)).
IrreducibilityProbe irreducibility_probe(const RdsModel& model, const State& y, const State& z, double eps,
                                         std::size_t horizon, std::size_t samples, std::uint64_t seed,
                                         unsigned jobs = 1);

}  // namespace raredyn
