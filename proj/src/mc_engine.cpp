#include "raredyn/mc_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "raredyn/errors.hpp"
#include "raredyn/measures.hpp"
#include "raredyn/parallel.hpp"

namespace raredyn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> simulate_counts(const FiniteMarkovKernel& kernel, std::size_t x0, std::size_t n,
                                         std::uint64_t seed, std::uint64_t id, std::size_t* last = nullptr,
                                         double* sum_v = nullptr, const Potential* V = nullptr) {
  std::vector<std::size_t> counts(kernel.size(), 0);
  std::size_t x = x0;
  double acc = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    CounterRng rng(seed, id, k - 1);
    x = kernel.sample_next(x, rng.uniform());
    ++counts[x];
    if (V) acc += (*V)[x];
  }
  if (last) *last = x;
  if (sum_v) *sum_v = acc;
  return counts;
}

RareEventEstimate binomial_estimate(const std::vector<char>& hits) {
  RareEventEstimate est;
  est.samples = hits.size();
  for (char h : hits) est.hits += h ? 1 : 0;
  const double N = static_cast<double>(est.samples);
  est.estimate = static_cast<double>(est.hits) / N;
  est.standard_error = std::sqrt(est.estimate * (1.0 - est.estimate) / N);
  return est;
}

void check_samples(std::size_t samples) {
  if (samples == 0) throw Error(ErrorCode::InvalidArgument, "samples must be at least 1");
}

}  // namespace

RareEventEstimate rare_event_naive(const RdsModel& model, const State& x0, std::size_t n, const EmpiricalEvent& event,
                                   std::size_t samples, std::uint64_t seed, unsigned jobs) {
  check_samples(samples);
  std::vector<char> hits(samples, 0);
  parallel_for(samples, jobs, [&](std::size_t i) {
    const auto tr = simulate_trajectory(model, x0, n, seed, i);
    hits[i] = event(empirical_measure(tr)) ? 1 : 0;
  });
  return binomial_estimate(hits);
}

RareEventEstimate rare_event_naive(const FiniteMarkovKernel& kernel, std::size_t x0, std::size_t n,
                                   const OccupationEvent& event, std::size_t samples, std::uint64_t seed,
                                   unsigned jobs) {
  check_samples(samples);
  if (x0 >= kernel.size()) throw Error(ErrorCode::InvalidArgument, "initial state out of range");
  std::vector<char> hits(samples, 0);
  parallel_for(samples, jobs, [&](std::size_t i) { hits[i] = event.contains(simulate_counts(kernel, x0, n, seed, i)); });
  return binomial_estimate(hits);
}

Eigen::MatrixXd h_transform(const FiniteMarkovKernel& kernel, const Potential& V, PerronTriple* triple) {
  const TiltedKernel tk(kernel, V);
  const PerronTriple t = perron_triple(tk);
  const auto n = static_cast<Eigen::Index>(kernel.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    for (Eigen::Index y = 0; y < n; ++y) {
      const double p = kernel.p(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
      m(x, y) = p == 0.0 ? 0.0
                         : p * std::exp(V[static_cast<std::size_t>(y)] + std::log(t.h[y]) - t.log_lambda - std::log(t.h[x]));
    }
    const double s = m.row(x).sum();
    if (std::abs(s - 1.0) > 1e-8) throw Error(ErrorCode::SolveFailed, "h-transform rows do not normalize");
    m.row(x) /= s;
  }
  if (triple) *triple = t;
  return m;
}

RareEventEstimate rare_event_tilted(const FiniteMarkovKernel& kernel, const Potential& V, std::size_t x0, std::size_t n,
                                    const OccupationEvent& event, std::size_t samples, std::uint64_t seed,
                                    unsigned jobs) {
  check_samples(samples);
  if (x0 >= kernel.size()) throw Error(ErrorCode::InvalidArgument, "initial state out of range");
  if (V.size() != kernel.size()) throw Error(ErrorCode::InvalidArgument, "potential size differs from state count");
  const bool untilted = std::all_of(V.values.begin(), V.values.end(), [](double v) { return v == 0.0; });
  std::optional<FiniteMarkovKernel> tilted;
  PerronTriple t;
  if (!untilted) tilted.emplace(kernel.labels(), kernel.coords(), h_transform(kernel, V, &t));
  const FiniteMarkovKernel& sampler = untilted ? kernel : *tilted;

  std::vector<double> values(samples, 0.0);
  std::vector<char> hit(samples, 0);
  parallel_for(samples, jobs, [&](std::size_t i) {
    std::size_t last = x0;
    double sv = 0.0;
    const auto counts = simulate_counts(sampler, x0, n, seed, i, &last, &sv, untilted ? nullptr : &V);
    if (!event.contains(counts)) return;
    hit[i] = 1;
    if (untilted) {
      values[i] = 1.0;
    } else {
      const double logw = static_cast<double>(n) * t.log_lambda + std::log(t.h[static_cast<Eigen::Index>(x0)]) -
                          std::log(t.h[static_cast<Eigen::Index>(last)]) - sv;
      values[i] = std::exp(logw);
    }
  });

  RareEventEstimate est;
  est.method = "tilted";
  est.samples = samples;
  double sum = 0.0, sum2 = 0.0, wmin = kInf, wmax = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    sum += values[i];
    sum2 += values[i] * values[i];
    if (hit[i]) {
      ++est.hits;
      wmin = std::min(wmin, values[i]);
      wmax = std::max(wmax, values[i]);
    }
  }
  const double N = static_cast<double>(samples);
  est.estimate = sum / N;
  const double var = samples > 1 ? std::max(0.0, (sum2 - N * est.estimate * est.estimate) / (N - 1.0)) : 0.0;
  est.standard_error = std::sqrt(var / N);
  WeightsSummary ws;
  ws.min = est.hits ? wmin : 0.0;
  ws.max = wmax;
  ws.ess = sum2 > 0.0 ? sum * sum / sum2 : 0.0;
  est.weights = ws;
  return est;
}

CompressedPair compress_pair(const std::vector<State>& a, const std::vector<State>& b, const Metric& d) {
  if (a.size() != b.size() || a.empty()) throw Error(ErrorCode::InvalidArgument, "paired clouds must be non-empty and equal in size");
  const std::size_t N = a.size();
  const double w = 1.0 / static_cast<double>(N);
  auto exact = [&](const std::vector<State>& pts) {
    std::map<State, double> mass;
    for (const auto& p : pts) mass[p] += w;
    DiscreteMeasure m;
    for (const auto& [atom, mw] : mass) {
      m.atoms.push_back(atom);
      m.weights.push_back(mw);
    }
    return m;
  };
  CompressedPair out;
  out.first = exact(a);
  out.second = exact(b);
  if (out.first.atoms.size() <= kMaxClusters && out.second.atoms.size() <= kMaxClusters) return out;

  auto pd = [&](std::size_t i, std::size_t j) { return std::max(d(a[i], a[j]), d(b[i], b[j])); };
  std::vector<std::size_t> centers{0};
  std::vector<double> nearest(N);
  std::vector<std::size_t> assign(N, 0);
  for (std::size_t i = 0; i < N; ++i) nearest[i] = pd(i, 0);
  while (centers.size() < kMaxClusters) {
    std::size_t far = 0;
    for (std::size_t i = 1; i < N; ++i)
      if (nearest[i] > nearest[far]) far = i;
    if (nearest[far] == 0.0) break;
    centers.push_back(far);
    for (std::size_t i = 0; i < N; ++i) {
      const double dd = pd(i, far);
      if (dd < nearest[i]) {
        nearest[i] = dd;
        assign[i] = centers.size() - 1;
      }
    }
  }
  const std::size_t K = centers.size();
  const std::size_t dim_a = a[0].size(), dim_b = b[0].size();
  std::vector<State> ca(K, State(dim_a, 0.0)), cb(K, State(dim_b, 0.0));
  std::vector<std::size_t> members(K, 0);
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t c = assign[i];
    ++members[c];
    for (std::size_t j = 0; j < dim_a; ++j) ca[c][j] += a[i][j];
    for (std::size_t j = 0; j < dim_b; ++j) cb[c][j] += b[i][j];
  }
  for (std::size_t c = 0; c < K; ++c) {
    for (auto& v : ca[c]) v /= static_cast<double>(members[c]);
    for (auto& v : cb[c]) v /= static_cast<double>(members[c]);
  }
  for (std::size_t i = 0; i < N; ++i) {
    out.radius_first = std::max(out.radius_first, d(a[i], ca[assign[i]]));
    out.radius_second = std::max(out.radius_second, d(b[i], cb[assign[i]]));
  }
  auto build = [&](const std::vector<State>& cents) {
    std::map<State, double> mass;
    for (std::size_t c = 0; c < K; ++c) mass[cents[c]] += static_cast<double>(members[c]) * w;
    DiscreteMeasure m;
    for (const auto& [atom, mw] : mass) {
      m.atoms.push_back(atom);
      m.weights.push_back(mw);
    }
    return m;
  };
  out.first = build(ca);
  out.second = build(cb);
  return out;
}

LogLinearFit fit_log_linear(const std::vector<double>& xs, const std::vector<double>& ys) {
  LogLinearFit fit;
  std::vector<double> px, py;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (ys[i] > 0.0 && std::isfinite(ys[i])) {
      px.push_back(xs[i]);
      py.push_back(std::log(ys[i]));
    }
  fit.points = px.size();
  if (px.size() < 2) return fit;
  const double m = static_cast<double>(px.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < px.size(); ++i) {
    sx += px[i];
    sy += py[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < px.size(); ++i) {
    sxx += (px[i] - mx) * (px[i] - mx);
    sxy += (px[i] - mx) * (py[i] - my);
    syy += (py[i] - my) * (py[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double r = py[i] - (fit.intercept + fit.slope * px[i]);
    ss_res += r * r;
    fit.max_residual = std::max(fit.max_residual, std::abs(r));
  }
  fit.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

MixingCurve mixing_estimate(const RdsModel& model, const State& x0, const State& y0, std::size_t n, std::size_t samples,
                            std::uint64_t seed, unsigned jobs) {
  check_samples(samples);
  std::vector<Trajectory> ta(samples), tb(samples);
  parallel_for(samples, jobs, [&](std::size_t i) {
    ta[i] = simulate_trajectory(model, x0, n, seed, i);
    tb[i] = simulate_trajectory(model, y0, n, seed, i);
  });
  MixingCurve curve;
  curve.points.resize(n);
  parallel_for(n, jobs, [&](std::size_t idx) {
    std::vector<State> a(samples), b(samples);
    for (std::size_t i = 0; i < samples; ++i) {
      a[i] = ta[i].states[idx];
      b[i] = tb[i].states[idx];
    }
    const CompressedPair cp = compress_pair(a, b, model.distance);
    MixingPoint pt;
    pt.k = idx + 1;
    pt.distance = dual_lipschitz(cp.first, cp.second, model.distance).distance;
    pt.bias = cp.radius_first + cp.radius_second;
    curve.points[idx] = pt;
  });
  std::vector<double> ks, ds;
  for (const auto& p : curve.points)
    if (p.distance > 1e-14) {
      ks.push_back(static_cast<double>(p.k));
      ds.push_back(p.distance);
    }
  const LogLinearFit fit = fit_log_linear(ks, ds);
  curve.gamma_hat = -fit.slope;
  curve.fit_r2 = fit.r2;
  curve.fit_points = fit.points;
  return curve;
}

double ks_statistic_normal(std::vector<double> xs, double sigma) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const double N = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = 0.5 * std::erfc(-xs[i] / (sigma * std::sqrt(2.0)));
    d = std::max({d, static_cast<double>(i + 1) / N - F, F - static_cast<double>(i) / N});
  }
  return d;
}

double kolmogorov_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    p += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

CltCheck clt_check(const FiniteMarkovKernel& kernel, const Potential& f, std::size_t n, std::size_t samples,
                   std::uint64_t seed, unsigned jobs) {
  check_samples(samples);
  if (n == 0) throw Error(ErrorCode::InvalidHorizon, "horizon must be at least 1");
  CltCheck res;
  const Eigen::VectorXd mu = invariant_and_mixing(kernel).mu_star;
  res.sigma2 = clt_variance(kernel, f);
  const double mean_f = f.vec().dot(mu);
  std::vector<double> cum(kernel.size());
  double acc = 0.0;
  for (std::size_t x = 0; x < kernel.size(); ++x) cum[x] = (acc += mu[static_cast<Eigen::Index>(x)]);
  res.sums.assign(samples, 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  parallel_for(samples, jobs, [&](std::size_t i) {
    const double u0 = CounterRng(seed, i, kInitialStep).uniform() * acc;
    std::size_t x = 0;
    while (x + 1 < cum.size() && (u0 > cum[x] || mu[static_cast<Eigen::Index>(x)] == 0.0)) ++x;
    double s = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
      x = kernel.sample_next(x, CounterRng(seed, i, k - 1).uniform());
      s += f[x] - mean_f;
    }
    res.sums[i] = s * scale;
  });
  double m = 0.0;
  for (double s : res.sums) m += s;
  m /= static_cast<double>(samples);
  double v = 0.0;
  for (double s : res.sums) v += (s - m) * (s - m);
  res.empirical_variance = samples > 1 ? v / static_cast<double>(samples - 1) : 0.0;
  if (res.sigma2 <= 1e-14) {
    res.degenerate = true;
    return res;
  }
  res.ks_statistic = ks_statistic_normal(res.sums, std::sqrt(res.sigma2));
  res.ks_pvalue = kolmogorov_pvalue(res.ks_statistic, samples);
  return res;
}

AcDiagnostic ac_diagnostic(const RdsModel& model, const State& x0, std::size_t n, std::uint64_t seed,
                           std::size_t ensemble, double relative_floor, unsigned jobs) {
  if (!model.dist_to_Y) throw Error(ErrorCode::Unsupported, "model '" + model.name + "' has no distance to Y");
  ensemble = std::max<std::size_t>(ensemble, 1);
  std::vector<std::vector<double>> dists(ensemble);
  parallel_for(ensemble, jobs, [&](std::size_t i) {
    const auto tr = simulate_trajectory(model, x0, n, seed, i);
    dists[i].push_back(model.dist_to_Y(x0));
    for (const auto& s : tr.states) dists[i].push_back(model.dist_to_Y(s));
  });
  AcDiagnostic ac;
  ac.distances = dists[0];
  ac.worst_case.assign(n + 1, 0.0);
  for (const auto& d : dists)
    for (std::size_t k = 0; k <= n; ++k) ac.worst_case[k] = std::max(ac.worst_case[k], d[k]);
  const double top = *std::max_element(ac.worst_case.begin(), ac.worst_case.end());
  if (top == 0.0) {
    ac.kappa_hat = kInf;
    return ac;
  }
  std::vector<double> ks, ds;
  for (std::size_t k = 0; k <= n; ++k)
    if (ac.worst_case[k] >= relative_floor * top && ac.worst_case[k] > 0.0) {
      ks.push_back(static_cast<double>(k));
      ds.push_back(ac.worst_case[k]);
    }
  const LogLinearFit fit = fit_log_linear(ks, ds);
  ac.kappa_hat = -fit.slope;
  ac.ac_bound = std::exp(fit.intercept);
  ac.fit_residual = fit.max_residual;
  ac.fit_r2 = fit.r2;
  ac.fit_points = fit.points;
  return ac;
}

std::vector<AetRow> aet_diagnostic(const RdsModel& model, const State& x0, const std::vector<std::size_t>& n_grid,
                                   std::size_t samples, double r, std::uint64_t seed, unsigned jobs) {
  if (!model.dist_to_Y) throw Error(ErrorCode::Unsupported, "model '" + model.name + "' has no distance to Y");
  check_samples(samples);
  if (n_grid.empty()) return {};
  const std::size_t nmax = *std::max_element(n_grid.begin(), n_grid.end());
  if (*std::min_element(n_grid.begin(), n_grid.end()) == 0) throw Error(ErrorCode::InvalidHorizon, "horizon must be at least 1");
  std::vector<std::vector<char>> exceed(samples, std::vector<char>(n_grid.size(), 0));
  parallel_for(samples, jobs, [&](std::size_t i) {
    const auto tr = simulate_trajectory(model, x0, nmax, seed, i);
    std::vector<double> prefix(nmax + 1, 0.0);
    for (std::size_t k = 1; k <= nmax; ++k) prefix[k] = prefix[k - 1] + model.dist_to_Y(tr.states[k - 1]);
    for (std::size_t g = 0; g < n_grid.size(); ++g)
      exceed[i][g] = prefix[n_grid[g]] / static_cast<double>(n_grid[g]) >= r;
  });
  std::vector<AetRow> rows;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < samples; ++i) c += exceed[i][g] ? 1 : 0;
    rows.push_back({n_grid[g], static_cast<double>(c) / static_cast<double>(samples)});
  }
  return rows;
}

IrreducibilityProbe irreducibility_probe(const RdsModel& model, const State& y, const State& z, double eps,
                                         std::size_t horizon, std::size_t samples, std::uint64_t seed,
                                         unsigned jobs) {
  check_samples(samples);
  std::vector<char> hit(samples, 0);
  parallel_for(samples, jobs, [&](std::size_t i) {
    const auto tr = simulate_trajectory(model, y, horizon, seed, i);
    const State& last = horizon == 0 ? y : tr.states.back();
    hit[i] = model.distance(last, z) < eps;
  });
  IrreducibilityProbe p;
  p.horizon = horizon;
  p.samples = samples;
  for (char h : hit) p.hits += h ? 1 : 0;
  p.probability = static_cast<double>(p.hits) / static_cast<double>(samples);
  p.standard_error = std::sqrt(p.probability * (1 - p.probability) / static_cast<double>(samples));
  return p;
}

}  // namespace raredyn
