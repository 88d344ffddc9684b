#include "raredyn/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace raredyn::lp {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-11;
constexpr double kFeasTol = 1e-12;
constexpr int kDegenerateRunForBland = 50;
// A column with no positive pivot whose reduced cost is this close to zero is
// roundoff, not a ray; it is dropped from pricing instead of declaring the
// problem unbounded.
constexpr double kNoiseCost = 1e-9;

class Tableau {
 public:
  Tableau(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>((rows + 1) * (cols + 1)), 0.0) {}

  long double& at(int r, int c) { return data_[static_cast<std::size_t>(r * (cols_ + 1) + c)]; }
  long double at(int r, int c) const { return data_[static_cast<std::size_t>(r * (cols_ + 1) + c)]; }
  long double& rhs(int r) { return at(r, cols_); }
  long double rhs(int r) const { return at(r, cols_); }
  // Row `rows_` holds reduced costs; its rhs holds minus the objective.
  long double& cost(int c) { return at(rows_, c); }
  long double cost(int c) const { return at(rows_, c); }

  void pivot(int pr, int pc) {
    const int width = cols_ + 1;
    long double* prow = &data_[static_cast<std::size_t>(pr * width)];
    const long double inv = 1.0L / prow[pc];
    for (int j = 0; j < width; ++j) prow[j] *= inv;
    prow[pc] = 1.0;
    for (int r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      long double* row = &data_[static_cast<std::size_t>(r * width)];
      const long double f = row[pc];
      if (f == 0.0) continue;
      for (int j = 0; j < width; ++j) row[j] -= f * prow[j];
      row[pc] = 0.0;
    }
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

 private:
  int rows_;
  int cols_;
  std::vector<long double> data_;
};

// Runs simplex iterations on the tableau with columns [0, enterable) allowed
// to enter. Returns Optimal, Unbounded or IterationLimit.
Status iterate(Tableau& t, std::vector<int>& basis, int enterable, int max_iterations, int& iterations) {
  int degenerate_run = 0;
  std::vector<char> excluded(static_cast<std::size_t>(enterable), 0);
  while (iterations < max_iterations) {
    const bool bland = degenerate_run >= kDegenerateRunForBland;
    int pc = -1;
    double best = -kCostTol;
    for (int j = 0; j < enterable; ++j) {
      if (excluded[static_cast<std::size_t>(j)]) continue;
      const double r = t.cost(j);
      if (r < -kCostTol) {
        if (bland) {
          pc = j;
          break;
        }
        if (r < best) {
          best = r;
          pc = j;
        }
      }
    }
    if (pc < 0) return Status::Optimal;
    // Harris two-pass ratio test: among rows whose ratio is within the
    // feasibility tolerance of the minimum, take the largest pivot element.
    int pr = -1;
    double theta = std::numeric_limits<double>::infinity();
    for (int i = 0; i < t.rows(); ++i) {
      const double a = t.at(i, pc);
      if (a <= kPivotTol) continue;
      theta = std::min(theta, (std::max<double>(t.rhs(i), 0.0) + kFeasTol) / a);
    }
    double best_ratio = std::numeric_limits<double>::infinity();
    double best_pivot = 0.0;
    for (int i = 0; i < t.rows(); ++i) {
      const double a = t.at(i, pc);
      if (a <= kPivotTol) continue;
      const double ratio = std::max<double>(t.rhs(i), 0.0) / a;
      if (ratio > theta) continue;
      const bool better = bland ? (pr < 0 || ratio < best_ratio - 1e-14 ||
                                   (std::abs(ratio - best_ratio) <= 1e-14 &&
                                    basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(pr)]))
                                : a > best_pivot;
      if (better) {
        best_ratio = ratio;
        best_pivot = a;
        pr = i;
      }
    }
    if (pr < 0) {
      if (t.cost(pc) > -kNoiseCost) {
        excluded[static_cast<std::size_t>(pc)] = 1;
        continue;
      }
      return Status::Unbounded;
    }
    degenerate_run = (best_ratio <= 1e-14) ? degenerate_run + 1 : 0;
    t.pivot(pr, pc);
    for (int i = 0; i < t.rows(); ++i)
      if (t.rhs(i) < 0.0) t.rhs(i) = 0.0;
    basis[static_cast<std::size_t>(pr)] = pc;
    ++iterations;
  }
  return Status::IterationLimit;
}

}  // namespace

Result solve_standard_form(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                           int max_iterations) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  Result result;
  Tableau t(m, n + m);
  std::vector<double> sign(static_cast<std::size_t>(m), 1.0);
  std::vector<int> basis(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    if (b[i] < 0.0) sign[static_cast<std::size_t>(i)] = -1.0;
    const double s = sign[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) t.at(i, j) = s * A(i, j);
    t.at(i, n + i) = 1.0;
    t.rhs(i) = s * b[i];
    basis[static_cast<std::size_t>(i)] = n + i;
  }
  // Phase 1: minimize the sum of artificials.
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += t.at(i, j);
    t.cost(j) = -s;
  }
  {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += t.rhs(i);
    t.rhs(m) = -s;
  }
  Status st = iterate(t, basis, n, max_iterations, result.iterations);
  if (st == Status::IterationLimit) {
    result.status = st;
    return result;
  }
  double infeasibility = 0.0;
  for (int i = 0; i < m; ++i)
    if (basis[static_cast<std::size_t>(i)] >= n) infeasibility += t.rhs(i);
  double scale = 1.0;
  for (int i = 0; i < m; ++i) scale = std::max(scale, std::abs(b[i]));
  if (infeasibility > 1e-9 * scale) {
    result.status = Status::Infeasible;
    return result;
  }
  // Drive remaining artificials out of the basis where possible; rows where
  // this fails are redundant and stay pinned at zero.
  for (int i = 0; i < m; ++i) {
    if (basis[static_cast<std::size_t>(i)] < n) continue;
    int pc = -1;
    double best = kPivotTol;
    for (int j = 0; j < n; ++j)
      if (std::abs(t.at(i, j)) > best) {
        best = std::abs(t.at(i, j));
        pc = j;
      }
    if (pc >= 0) {
      t.pivot(i, pc);
      basis[static_cast<std::size_t>(i)] = pc;
    }
  }
  // Phase 2 reduced costs: r_j = c_j - sum_i c_{B_i} T_ij (artificials cost 0).
  auto cost_of = [&](int j) { return j < n ? c[j] : 0.0; };
  for (int j = 0; j < n + m; ++j) {
    double r = cost_of(j);
    for (int i = 0; i < m; ++i) r -= cost_of(basis[static_cast<std::size_t>(i)]) * t.at(i, j);
    t.cost(j) = r;
  }
  {
    double z = 0.0;
    for (int i = 0; i < m; ++i) z += cost_of(basis[static_cast<std::size_t>(i)]) * t.rhs(i);
    t.rhs(m) = -z;
  }
  st = iterate(t, basis, n, max_iterations, result.iterations);
  result.status = st;
  if (st != Status::Optimal) return result;

  result.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) {
    const int j = basis[static_cast<std::size_t>(i)];
    if (j < n) result.x[j] = std::max<double>(0.0, t.rhs(i));
  }
  result.objective = c.dot(result.x);
  // Reduced cost of artificial column i is 0 - y'_i, where y' are the
  // multipliers of the sign-flipped rows.
  result.dual = Eigen::VectorXd(m);
  for (int i = 0; i < m; ++i) result.dual[i] = -t.cost(n + i) * sign[static_cast<std::size_t>(i)];
  return result;
}

Result maximize_free(const Eigen::VectorXd& c, const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                     const Eigen::MatrixXd& E, const Eigen::VectorXd& e) {
  const auto nv = c.size();
  const auto ni = G.rows();
  const auto ne = E.rows();
  // Variables: x+ (nv), x- (nv), slacks (ni).
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(ni + ne, 2 * nv + ni);
  Eigen::VectorXd b(ni + ne);
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(2 * nv + ni);
  cost.head(nv) = -c;
  cost.segment(nv, nv) = c;
  if (ni > 0) {
    A.block(0, 0, ni, nv) = G;
    A.block(0, nv, ni, nv) = -G;
    A.block(0, 2 * nv, ni, ni) = Eigen::MatrixXd::Identity(ni, ni);
    b.head(ni) = h;
  }
  if (ne > 0) {
    A.block(ni, 0, ne, nv) = E;
    A.block(ni, nv, ne, nv) = -E;
    b.tail(ne) = e;
  }
  Result r = solve_standard_form(A, b, cost);
  if (r.status != Status::Optimal) return r;
  Result out;
  out.status = r.status;
  out.iterations = r.iterations;
  out.x = r.x.head(nv) - r.x.segment(nv, nv);
  out.objective = c.dot(out.x);
  out.dual = -r.dual;
  return out;
}

}  // namespace raredyn::lp
