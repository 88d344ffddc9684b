#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "raredyn/errors.hpp"
#include "raredyn/finite_engine.hpp"

namespace raredyn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kCollatzTol = 1e-13;
constexpr int kMaxPowerIterations = 100000;

double log_sum_exp(const double* terms, std::size_t n) {
  double mx = kNegInf;
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, terms[i]);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (terms[i] != kNegInf) s += std::exp(terms[i] - mx);
  return mx + std::log(s);
}

int class_period(const FiniteMarkovKernel& kernel, const std::vector<std::size_t>& states) {
  const std::size_t n = kernel.size();
  std::vector<int> in_class(n, 0);
  for (auto s : states) in_class[s] = 1;
  std::vector<long> level(n, -1);
  std::vector<std::size_t> queue{states.front()};
  level[states.front()] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto x = queue[head];
    for (std::size_t y = 0; y < n; ++y)
      if (in_class[y] && kernel.p(x, y) > 0.0 && level[y] < 0) {
        level[y] = level[x] + 1;
        queue.push_back(y);
      }
  }
  long g = 0;
  for (auto x : states)
    for (auto y : states)
      if (kernel.p(x, y) > 0.0) g = std::gcd(g, std::labs(level[x] + 1 - level[y]));
  return static_cast<int>(g);
}

struct PowerOutcome {
  double rho = 0.0;
  Eigen::VectorXd vec;
  bool converged = false;
  int iterations = 0;
};

// Power iteration on (m + shift I) with Collatz-Wielandt bounds.
PowerOutcome power_iterate(const Eigen::MatrixXd& m, double shift) {
  const auto n = m.rows();
  PowerOutcome out;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  for (int it = 1; it <= kMaxPowerIterations; ++it) {
    Eigen::VectorXd y = m * x + shift * x;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = y[i] / x[i];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    const double ymax = y.maxCoeff();
    if (!(ymax > 0.0) || !(lo > 0.0)) break;
    x = y / ymax;
    if (hi - lo <= kCollatzTol * hi) {
      out.rho = 0.5 * (lo + hi) - shift;
      out.vec = x;
      out.converged = true;
      out.iterations = it;
      return out;
    }
    out.iterations = it;
  }
  return out;
}

struct DenseOutcome {
  double rho;
  Eigen::VectorXd right;
  Eigen::VectorXd left;
};

DenseOutcome dense_perron(const Eigen::MatrixXd& m) {
  auto perron_vector = [](const Eigen::MatrixXd& a, double& rho_out, int& multiplicity) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::SolveFailed, "dense eigensolve failed");
    const auto& ev = es.eigenvalues();
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < ev.size(); ++i)
      if (ev[i].real() > ev[best].real()) best = i;
    rho_out = ev[best].real();
    multiplicity = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (std::abs(ev[i] - ev[best]) <= 1e-9 * std::max(1.0, std::abs(rho_out))) ++multiplicity;
    Eigen::VectorXd v = es.eigenvectors().col(best).real().cwiseAbs();
    return v;
  };
  DenseOutcome out;
  int mult_r = 0, mult_l = 0;
  double rho_l = 0.0;
  out.right = perron_vector(m, out.rho, mult_r);
  out.left = perron_vector(m.transpose(), rho_l, mult_l);
  if (mult_r > 1 || mult_l > 1)
    throw Error(ErrorCode::PeriodicSpectrum, "Perron eigenvalue is not simple");
  return out;
}

// Block of Q^V on `states`, scaled by exp(-scale) to keep entries <= 1.
Eigen::MatrixXd tilted_block(const FiniteMarkovKernel& kernel, const Potential& V,
                             const std::vector<std::size_t>& states, double& log_scale) {
  const auto m = static_cast<Eigen::Index>(states.size());
  Eigen::MatrixXd logs(m, m);
  log_scale = kNegInf;
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) {
      const double p = kernel.p(states[static_cast<std::size_t>(a)], states[static_cast<std::size_t>(b)]);
      logs(a, b) = p > 0.0 ? std::log(p) + V[states[static_cast<std::size_t>(b)]] : kNegInf;
      log_scale = std::max(log_scale, logs(a, b));
    }
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      out(a, b) = logs(a, b) == kNegInf ? 0.0 : std::exp(logs(a, b) - log_scale);
  return out;
}

void check_potential(const FiniteMarkovKernel& kernel, const Potential& V) {
  if (V.size() != kernel.size()) throw Error(ErrorCode::InvalidArgument, "potential size differs from state count");
  for (double v : V.values)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "potential has non-finite values");
}

}  // namespace

double RateValue::value() const {
  if (infinite_) throw Error(ErrorCode::InvalidArgument, "rate value is infinite");
  return value_;
}

double RateValue::as_double() const {
  return infinite_ ? std::numeric_limits<double>::infinity() : value_;
}

std::vector<CommunicatingClass> communicating_classes(const FiniteMarkovKernel& kernel) {
  const std::size_t n = kernel.size();
  // Tarjan's algorithm, recursive (state spaces here are small).
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  int counter = 0, ncomp = 0;
  std::function<void(std::size_t)> strong = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (std::size_t w = 0; w < n; ++w) {
      if (!(kernel.p(v, w) > 0.0)) continue;
      if (index[w] < 0) {
        strong(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = ncomp;
      } while (w != v);
      ++ncomp;
    }
  };
  for (std::size_t v = 0; v < n; ++v)
    if (index[v] < 0) strong(v);

  std::vector<CommunicatingClass> classes(static_cast<std::size_t>(ncomp));
  for (std::size_t v = 0; v < n; ++v) classes[static_cast<std::size_t>(comp[v])].states.push_back(v);
  for (auto& c : classes) {
    c.closed = true;
    for (auto x : c.states)
      for (std::size_t y = 0; y < n; ++y)
        if (kernel.p(x, y) > 0.0 && comp[y] != comp[c.states.front()]) c.closed = false;
    c.trivial = c.states.size() == 1 && !(kernel.p(c.states[0], c.states[0]) > 0.0);
    c.period = c.trivial ? 0 : class_period(kernel, c.states);
  }
  std::sort(classes.begin(), classes.end(),
            [](const CommunicatingClass& a, const CommunicatingClass& b) { return a.states.front() < b.states.front(); });
  return classes;
}

std::vector<std::vector<bool>> reachability(const FiniteMarkovKernel& kernel) {
  const std::size_t n = kernel.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t x = 0; x < n; ++x) {
    std::vector<std::size_t> queue{x};
    reach[x][x] = true;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const auto v = queue[head];
      for (std::size_t w = 0; w < n; ++w)
        if (kernel.p(v, w) > 0.0 && !reach[x][w]) {
          reach[x][w] = true;
          queue.push_back(w);
        }
    }
  }
  return reach;
}

std::vector<std::size_t> reachable_after_one_step(const FiniteMarkovKernel& kernel, std::size_t x0) {
  const auto reach = reachability(kernel);
  std::vector<bool> hit(kernel.size(), false);
  for (std::size_t y = 0; y < kernel.size(); ++y)
    if (kernel.p(x0, y) > 0.0)
      for (std::size_t z = 0; z < kernel.size(); ++z)
        if (reach[y][z]) hit[z] = true;
  std::vector<std::size_t> out;
  for (std::size_t z = 0; z < kernel.size(); ++z)
    if (hit[z]) out.push_back(z);
  return out;
}

TiltedKernel::TiltedKernel(FiniteMarkovKernel kernel, Potential potential)
    : base(std::move(kernel)), V(std::move(potential)) {
  check_potential(base, V);
  const auto n = static_cast<Eigen::Index>(base.size());
  matrix.resize(n, n);
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = 0; y < n; ++y)
      matrix(x, y) = base.p(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) *
                     std::exp(V[static_cast<std::size_t>(y)]);
}

Eigen::VectorXd feynman_kac_log_apply(const TiltedKernel& tk, const Eigen::VectorXd& log_f, std::size_t n) {
  const std::size_t m = tk.base.size();
  if (static_cast<std::size_t>(log_f.size()) != m) throw Error(ErrorCode::InvalidArgument, "function size mismatch");
  Eigen::VectorXd cur = log_f;
  std::vector<double> terms(m);
  for (std::size_t step = 0; step < n; ++step) {
    Eigen::VectorXd next(static_cast<Eigen::Index>(m));
    for (std::size_t x = 0; x < m; ++x) {
      for (std::size_t y = 0; y < m; ++y) {
        const double p = tk.base.p(x, y);
        terms[y] = p > 0.0 ? std::log(p) + tk.V[y] + cur[static_cast<Eigen::Index>(y)] : kNegInf;
      }
      next[static_cast<Eigen::Index>(x)] = log_sum_exp(terms.data(), m);
    }
    cur = std::move(next);
  }
  return cur;
}

Potential feynman_kac_apply(const TiltedKernel& tk, const Potential& f, std::size_t n) {
  const std::size_t m = tk.base.size();
  if (f.size() != m) throw Error(ErrorCode::InvalidArgument, "function size mismatch");
  for (double v : f.values)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "function has non-finite values");
  if (n == 0) return Potential(f.values);
  Eigen::VectorXd lp(static_cast<Eigen::Index>(m)), ln(static_cast<Eigen::Index>(m));
  bool any_pos = false, any_neg = false;
  for (std::size_t i = 0; i < m; ++i) {
    lp[static_cast<Eigen::Index>(i)] = f[i] > 0.0 ? std::log(f[i]) : kNegInf;
    ln[static_cast<Eigen::Index>(i)] = f[i] < 0.0 ? std::log(-f[i]) : kNegInf;
    any_pos = any_pos || f[i] > 0.0;
    any_neg = any_neg || f[i] < 0.0;
  }
  std::vector<double> out(m, 0.0);
  if (any_pos) {
    const auto r = feynman_kac_log_apply(tk, lp, n);
    for (std::size_t i = 0; i < m; ++i) out[i] += std::exp(r[static_cast<Eigen::Index>(i)]);
  }
  if (any_neg) {
    const auto r = feynman_kac_log_apply(tk, ln, n);
    for (std::size_t i = 0; i < m; ++i) out[i] -= std::exp(r[static_cast<Eigen::Index>(i)]);
  }
  return Potential(std::move(out));
}

double log_perron_root(const Eigen::MatrixXd& m, int period) {
  if (m.rows() == 1) return m(0, 0) > 0.0 ? std::log(m(0, 0)) : kNegInf;
  const double scale = m.maxCoeff();
  if (!(scale > 0.0)) return kNegInf;
  const Eigen::MatrixXd a = m / scale;
  const double shift = period > 1 ? a.rowwise().sum().maxCoeff() : 0.0;
  const PowerOutcome p = power_iterate(a, shift);
  if (p.converged) return std::log(scale) + std::log(p.rho);
  return std::log(scale) + std::log(dense_perron(a).rho);
}

PerronTriple perron_triple_of_matrix(const Eigen::MatrixXd& m, int period) {
  const auto n = m.rows();
  PerronTriple t;
  if (n == 1) {
    if (!(m(0, 0) > 0.0)) throw Error(ErrorCode::NotIrreducible, "single state without self-loop");
    t.lambda = m(0, 0);
    t.log_lambda = std::log(m(0, 0));
    t.h = Eigen::VectorXd::Ones(1);
    t.mu = Eigen::VectorXd::Ones(1);
    return t;
  }
  const double scale = m.maxCoeff();
  const Eigen::MatrixXd a = m / scale;
  const double shift = period > 1 ? a.rowwise().sum().maxCoeff() : 0.0;
  PowerOutcome right = power_iterate(a, shift);
  PowerOutcome left = power_iterate(a.transpose(), shift);
  double rho;
  Eigen::VectorXd h, mu;
  if (right.converged && left.converged) {
    rho = 0.5 * (right.rho + left.rho);
    h = right.vec;
    mu = left.vec;
    t.iterations = std::max(right.iterations, left.iterations);
  } else {
    const DenseOutcome d = dense_perron(a);
    rho = d.rho;
    h = d.right;
    mu = d.left;
    t.dense_fallback = true;
  }
  mu /= mu.sum();
  h /= h.dot(mu);
  t.lambda = rho * scale;
  t.log_lambda = std::log(rho) + std::log(scale);
  t.h = h;
  t.mu = mu;
  return t;
}

PerronTriple perron_triple(const TiltedKernel& tk) {
  const auto classes = communicating_classes(tk.base);
  if (classes.size() != 1 || classes[0].trivial) {
    std::ostringstream os;
    os << "support graph has " << classes.size() << " communicating classes:";
    for (const auto& c : classes) {
      os << " {";
      for (std::size_t i = 0; i < c.states.size(); ++i) os << (i ? "," : "") << tk.base.labels()[c.states[i]];
      os << "}";
    }
    throw Error(ErrorCode::NotIrreducible, os.str());
  }
  double log_scale = 0.0;
  const Eigen::MatrixXd block = tilted_block(tk.base, tk.V, classes[0].states, log_scale);
  PerronTriple t = perron_triple_of_matrix(block, classes[0].period);
  t.log_lambda += log_scale;
  t.lambda = std::exp(t.log_lambda);
  return t;
}

PressureResult pressure(const FiniteMarkovKernel& kernel, const Potential& V) {
  check_potential(kernel, V);
  const auto classes = communicating_classes(kernel);
  const auto reach = reachability(kernel);
  PressureResult res;
  std::vector<double> class_rate(classes.size(), kNegInf);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (classes[c].trivial) continue;
    double log_scale = 0.0;
    const Eigen::MatrixXd block = tilted_block(kernel, V, classes[c].states, log_scale);
    class_rate[c] = log_scale + log_perron_root(block, classes[c].period);
    res.classes.push_back(ClassRate{classes[c].states, class_rate[c], classes[c].closed, classes[c].period});
  }
  const std::size_t n = kernel.size();
  res.per_state_rates.assign(n, kNegInf);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t c = 0; c < classes.size(); ++c)
      if (!classes[c].trivial && reach[x][classes[c].states.front()])
        res.per_state_rates[x] = std::max(res.per_state_rates[x], class_rate[c]);
  res.lambda = *std::max_element(res.per_state_rates.begin(), res.per_state_rates.end());
  const double lo = *std::min_element(res.per_state_rates.begin(), res.per_state_rates.end());
  res.net_converges = res.lambda - lo <= 1e-10;
  return res;
}

}  // namespace raredyn
