#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

#include "raredyn/errors.hpp"
#include "raredyn/finite_engine.hpp"
#include "raredyn/lp.hpp"

namespace raredyn {

namespace {

constexpr double kFaceTol = 1e-10;
constexpr double kBarrierGap = 1e-11;

struct Edge {
  std::size_t from;
  std::size_t to;
  double log_p;
};

// Flow program data after facial reduction: variables are the edge flows
// that can be positive; `eq_*` are equalities, `ineq_*` rows g z <= h with
// strictly positive slack at the interior point.
struct ReducedProgram {
  std::vector<Edge> edges;
  Eigen::MatrixXd eq;
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd ineq;
  Eigen::VectorXd ineq_rhs;
  Eigen::VectorXd interior;
  std::size_t num_states = 0;
};

double flow_objective(const ReducedProgram& p, const Eigen::VectorXd& z) {
  std::vector<double> r(p.num_states, 0.0);
  for (std::size_t e = 0; e < p.edges.size(); ++e) r[p.edges[e].from] += z[static_cast<Eigen::Index>(e)];
  double phi = 0.0;
  for (std::size_t e = 0; e < p.edges.size(); ++e) {
    const double f = z[static_cast<Eigen::Index>(e)];
    if (f > 0.0) phi += f * (std::log(f) - std::log(r[p.edges[e].from]) - p.edges[e].log_p);
  }
  return phi;
}

// Barrier function t*phi - sum log z - sum log slack; +inf outside the domain.
double barrier_value(const ReducedProgram& p, const Eigen::VectorXd& z, double t) {
  double v = t * flow_objective(p, z);
  for (Eigen::Index e = 0; e < z.size(); ++e) {
    if (!(z[e] > 0.0)) return std::numeric_limits<double>::infinity();
    v -= std::log(z[e]);
  }
  if (p.ineq.rows() > 0) {
    const Eigen::VectorXd s = p.ineq_rhs - p.ineq * z;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (!(s[i] > 0.0)) return std::numeric_limits<double>::infinity();
      v -= std::log(s[i]);
    }
  }
  return v;
}

void barrier_derivatives(const ReducedProgram& p, const Eigen::VectorXd& z, double t, Eigen::VectorXd& grad,
                         Eigen::MatrixXd& hess) {
  const auto E = z.size();
  std::vector<double> r(p.num_states, 0.0);
  for (Eigen::Index e = 0; e < E; ++e) r[p.edges[static_cast<std::size_t>(e)].from] += z[e];
  grad.resize(E);
  hess = Eigen::MatrixXd::Zero(E, E);
  for (Eigen::Index e = 0; e < E; ++e) {
    const auto& edge = p.edges[static_cast<std::size_t>(e)];
    grad[e] = t * (std::log(z[e]) - std::log(r[edge.from]) - edge.log_p) - 1.0 / z[e];
    hess(e, e) += t / z[e] + 1.0 / (z[e] * z[e]);
    for (Eigen::Index f = 0; f < E; ++f)
      if (p.edges[static_cast<std::size_t>(f)].from == edge.from) hess(e, f) -= t / r[edge.from];
  }
  if (p.ineq.rows() > 0) {
    const Eigen::VectorXd s = p.ineq_rhs - p.ineq * z;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const Eigen::VectorXd gi = p.ineq.row(i).transpose();
      grad += gi / s[i];
      hess += (gi * gi.transpose()) / (s[i] * s[i]);
    }
  }
}

double minimize_flow(const ReducedProgram& p, Eigen::VectorXd& z) {
  z = p.interior;
  const auto E = z.size();
  Eigen::MatrixXd basis;
  if (p.eq.rows() > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(p.eq, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    const double tol = 1e-10 * std::max(1.0, sv.size() ? sv[0] : 0.0);
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > tol) ++rank;
    basis = svd.matrixV().rightCols(E - rank);
  } else {
    basis = Eigen::MatrixXd::Identity(E, E);
  }
  if (basis.cols() == 0) return flow_objective(p, z);

  const double barrier_terms = static_cast<double>(E + p.ineq.rows());
  double t = 1.0;
  while (true) {
    for (int newton = 0; newton < 100; ++newton) {
      Eigen::VectorXd grad;
      Eigen::MatrixXd hess;
      barrier_derivatives(p, z, t, grad, hess);
      const Eigen::VectorXd g = basis.transpose() * grad;
      Eigen::MatrixXd H = basis.transpose() * hess * basis;
      H.diagonal().array() += 1e-14 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
      const Eigen::VectorXd dw = -H.ldlt().solve(g);
      const double decrement = -g.dot(dw);
      if (decrement / 2.0 <= 1e-12) break;
      const Eigen::VectorXd dz = basis * dw;
      const double f0 = barrier_value(p, z, t);
      double alpha = 1.0;
      bool moved = false;
      for (int k = 0; k < 80; ++k, alpha *= 0.5) {
        const Eigen::VectorXd trial = z + alpha * dz;
        const double f1 = barrier_value(p, trial, t);
        if (std::isfinite(f1) && f1 <= f0 - 0.25 * alpha * decrement) {
          z = trial;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    if (barrier_terms / t < kBarrierGap) break;
    t *= 10.0;
  }
  return flow_objective(p, z);
}

Relation closure(Relation r) {
  if (r == Relation::LT) return Relation::LE;
  if (r == Relation::GT) return Relation::GE;
  return r;
}

bool is_strict(Relation r) { return r == Relation::LT || r == Relation::GT; }

}  // namespace

MinRateResult min_rate_over_polytope(const FiniteMarkovKernel& kernel, const std::vector<LinearConstraint>& constraints) {
  const std::size_t n = kernel.size();
  for (const auto& c : constraints) {
    if (c.coeffs.size() != n) throw Error(ErrorCode::InvalidArgument, "constraint size differs from state count");
    if (!std::isfinite(c.rhs)) throw Error(ErrorCode::Infeasible, "non-finite constraint bound");
  }
  std::vector<Edge> edges;
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      if (kernel.p(x, y) > 0.0) edges.push_back({x, y, std::log(kernel.p(x, y))});
  const auto E = static_cast<Eigen::Index>(edges.size());

  // Equalities: total mass, balance (n-1 rows), EQ constraints on r.
  std::vector<Eigen::VectorXd> eq_rows;
  std::vector<double> eq_rhs;
  std::vector<Eigen::VectorXd> in_rows;  // row . F <= rhs
  std::vector<double> in_rhs;
  std::vector<bool> in_strict;
  eq_rows.push_back(Eigen::VectorXd::Ones(E));
  eq_rhs.push_back(1.0);
  for (std::size_t x = 0; x + 1 < n; ++x) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(E);
    for (Eigen::Index e = 0; e < E; ++e) {
      if (edges[static_cast<std::size_t>(e)].from == x) row[e] += 1.0;
      if (edges[static_cast<std::size_t>(e)].to == x) row[e] -= 1.0;
    }
    eq_rows.push_back(row);
    eq_rhs.push_back(0.0);
  }
  for (const auto& c : constraints) {
    Eigen::VectorXd row(E);
    for (Eigen::Index e = 0; e < E; ++e) row[e] = c.coeffs[edges[static_cast<std::size_t>(e)].from];
    const Relation rel = closure(c.rel);
    if (rel == Relation::EQ) {
      eq_rows.push_back(row);
      eq_rhs.push_back(c.rhs);
    } else if (rel == Relation::LE) {
      in_rows.push_back(row);
      in_rhs.push_back(c.rhs);
      in_strict.push_back(is_strict(c.rel));
    } else {
      in_rows.push_back(-row);
      in_rhs.push_back(-c.rhs);
      in_strict.push_back(is_strict(c.rel));
    }
  }
  const auto ne = static_cast<Eigen::Index>(eq_rows.size());
  const auto ni = static_cast<Eigen::Index>(in_rows.size());
  const Eigen::Index nv = E + ni;  // flows + slacks
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(ne + ni, nv);
  Eigen::VectorXd b(ne + ni);
  for (Eigen::Index i = 0; i < ne; ++i) {
    A.row(i).head(E) = eq_rows[static_cast<std::size_t>(i)].transpose();
    b[i] = eq_rhs[static_cast<std::size_t>(i)];
  }
  for (Eigen::Index i = 0; i < ni; ++i) {
    A.row(ne + i).head(E) = in_rows[static_cast<std::size_t>(i)].transpose();
    A(ne + i, E + i) = 1.0;
    b[ne + i] = in_rhs[static_cast<std::size_t>(i)];
  }

  MinRateResult out;
  const lp::Result feas = lp::solve_standard_form(A, b, Eigen::VectorXd::Zero(nv));
  if (feas.status != lp::Status::Optimal) return out;  // empty polytope: inf = +inf

  // Facial reduction: a variable whose maximum over the polytope is zero is
  // zero everywhere; the average of the per-variable maximizers is a
  // relative-interior point.
  std::vector<bool> fixed_zero(static_cast<std::size_t>(nv), false);
  Eigen::VectorXd avg = feas.x;
  int count = 1;
  for (Eigen::Index v = 0; v < nv; ++v) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
    c[v] = -1.0;
    const lp::Result r = lp::solve_standard_form(A, b, c);
    if (r.status != lp::Status::Optimal) throw Error(ErrorCode::SolveFailed, "facial reduction LP failed");
    if (-r.objective <= kFaceTol) {
      fixed_zero[static_cast<std::size_t>(v)] = true;
    } else {
      avg += r.x;
      ++count;
    }
  }
  avg /= count;
  for (Eigen::Index i = 0; i < ni; ++i)
    if (in_strict[static_cast<std::size_t>(i)] && fixed_zero[static_cast<std::size_t>(E + i)]) {
      out.feasible = false;
      return out;  // strict constraint has no interior: open set misses dom(I)
    }

  ReducedProgram prog;
  prog.num_states = n;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index e = 0; e < E; ++e)
    if (!fixed_zero[static_cast<std::size_t>(e)]) {
      keep.push_back(e);
      prog.edges.push_back(edges[static_cast<std::size_t>(e)]);
    }
  const auto K = static_cast<Eigen::Index>(keep.size());
  auto restrict_row = [&](const Eigen::VectorXd& row) {
    Eigen::VectorXd r(K);
    for (Eigen::Index k = 0; k < K; ++k) r[k] = row[keep[static_cast<std::size_t>(k)]];
    return r;
  };
  std::vector<Eigen::VectorXd> eqr;
  std::vector<double> eqb;
  std::vector<Eigen::VectorXd> inr;
  std::vector<double> inb;
  for (Eigen::Index i = 0; i < ne; ++i) {
    eqr.push_back(restrict_row(eq_rows[static_cast<std::size_t>(i)]));
    eqb.push_back(eq_rhs[static_cast<std::size_t>(i)]);
  }
  for (Eigen::Index i = 0; i < ni; ++i) {
    const auto row = restrict_row(in_rows[static_cast<std::size_t>(i)]);
    if (fixed_zero[static_cast<std::size_t>(E + i)]) {
      eqr.push_back(row);
      eqb.push_back(in_rhs[static_cast<std::size_t>(i)]);
    } else {
      inr.push_back(row);
      inb.push_back(in_rhs[static_cast<std::size_t>(i)]);
    }
  }
  prog.eq.resize(static_cast<Eigen::Index>(eqr.size()), K);
  prog.eq_rhs.resize(static_cast<Eigen::Index>(eqr.size()));
  for (std::size_t i = 0; i < eqr.size(); ++i) {
    prog.eq.row(static_cast<Eigen::Index>(i)) = eqr[i].transpose();
    prog.eq_rhs[static_cast<Eigen::Index>(i)] = eqb[i];
  }
  prog.ineq.resize(static_cast<Eigen::Index>(inr.size()), K);
  prog.ineq_rhs.resize(static_cast<Eigen::Index>(inr.size()));
  for (std::size_t i = 0; i < inr.size(); ++i) {
    prog.ineq.row(static_cast<Eigen::Index>(i)) = inr[i].transpose();
    prog.ineq_rhs[static_cast<Eigen::Index>(i)] = inb[i];
  }
  prog.interior.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) prog.interior[k] = avg[keep[static_cast<std::size_t>(k)]];

  Eigen::VectorXd z;
  const double value = minimize_flow(prog, z);
  out.feasible = true;
  out.value = RateValue::finite(std::max(0.0, value));
  out.sigma = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < K; ++k) out.sigma[static_cast<Eigen::Index>(prog.edges[static_cast<std::size_t>(k)].from)] += z[k];
  return out;
}

RateValue rate_flow(const FiniteMarkovKernel& kernel, const Eigen::VectorXd& sigma) {
  const std::size_t n = kernel.size();
  if (static_cast<std::size_t>(sigma.size()) != n) throw Error(ErrorCode::InvalidMeasure, "measure size differs from state count");
  std::vector<LinearConstraint> cons;
  for (std::size_t x = 0; x < n; ++x) {
    LinearConstraint c;
    c.coeffs.assign(n, 0.0);
    c.coeffs[x] = 1.0;
    c.rel = Relation::EQ;
    c.rhs = sigma[static_cast<Eigen::Index>(x)];
    cons.push_back(std::move(c));
  }
  return min_rate_over_polytope(kernel, cons).value;
}

RateValue level1_rate(const FiniteMarkovKernel& kernel, const Potential& f, double p) {
  if (f.size() != kernel.size()) throw Error(ErrorCode::InvalidArgument, "function size differs from state count");
  if (!std::isfinite(p)) throw Error(ErrorCode::Infeasible, "non-finite level");
  for (double v : f.values)
    if (!std::isfinite(v)) throw Error(ErrorCode::Infeasible, "non-finite observable");
  const auto [lo, hi] = std::minmax_element(f.values.begin(), f.values.end());
  if (p < *lo || p > *hi) return RateValue::infinity();
  LinearConstraint c;
  c.coeffs = f.values;
  c.rel = Relation::EQ;
  c.rhs = p;
  return min_rate_over_polytope(kernel, {c}).value;
}

}  // namespace raredyn
