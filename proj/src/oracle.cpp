#include "raredyn/oracle.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "raredyn/config.hpp"
#include "raredyn/errors.hpp"

namespace raredyn {

namespace {

using i128 = __int128;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  const i128 r = static_cast<i128>(a) * b;
  if (r > std::numeric_limits<std::int64_t>::max() || r < std::numeric_limits<std::int64_t>::min())
    throw Error(ErrorCode::InvalidArgument, "rational overflow");
  return static_cast<std::int64_t>(r);
}

Rational normalized(std::int64_t num, std::int64_t den) {
  if (den == 0) throw Error(ErrorCode::InvalidArgument, "zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  return g > 1 ? Rational{num / g, den / g} : Rational{num, den};
}

Rational add(Rational a, Rational b) {
  return normalized(checked_mul(a.num, b.den) + checked_mul(b.num, a.den), checked_mul(a.den, b.den));
}

Rational mul(Rational a, Rational b) { return normalized(checked_mul(a.num, b.num), checked_mul(a.den, b.den)); }

Relation strict_of(Relation r) {
  if (r == Relation::LE) return Relation::LT;
  if (r == Relation::GE) return Relation::GT;
  return r;
}

Relation closed_of(Relation r) {
  if (r == Relation::LT) return Relation::LE;
  if (r == Relation::GT) return Relation::GE;
  return r;
}

// Neumaier-compensated sum in extended precision.
long double compensated_sum(const std::vector<long double>& terms) {
  long double s = 0.0L, c = 0.0L;
  for (long double t : terms) {
    const long double u = s + t;
    if (std::fabs(s) >= std::fabs(t))
      c += (s - u) + t;
    else
      c += (t - u) + s;
    s = u;
  }
  return s + c;
}

// Splits "lhs <rel> rhs" at the first relation operator.
void split_relation(const std::string& text, std::string& lhs, Relation& rel, std::string& rhs) {
  static const std::vector<std::pair<std::string, Relation>> ops = {
      {">=", Relation::GE}, {"<=", Relation::LE}, {"==", Relation::EQ},
      {">", Relation::GT},  {"<", Relation::LT},  {"=", Relation::EQ}};
  for (const auto& [op, r] : ops) {
    const auto pos = text.find(op);
    if (pos != std::string::npos) {
      lhs = trim(text.substr(0, pos));
      rhs = trim(text.substr(pos + op.size()));
      rel = r;
      return;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "no relation in constraint '" + text + "'");
}

std::vector<Rational> parse_linear(const std::string& text, std::size_t num_states) {
  std::vector<Rational> coeffs(num_states);
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  if (s.empty()) throw Error(ErrorCode::InvalidArgument, "empty left-hand side");
  std::size_t i = 0;
  while (i < s.size()) {
    int sign = 1;
    if (s[i] == '+' || s[i] == '-') {
      sign = s[i] == '-' ? -1 : 1;
      ++i;
    }
    Rational coef{1, 1};
    const auto cpos = s.find('c', i);
    if (cpos == std::string::npos) throw Error(ErrorCode::InvalidArgument, "expected a state variable cK in '" + text + "'");
    if (cpos > i) {
      std::string num = s.substr(i, cpos - i);
      if (num.back() != '*') throw Error(ErrorCode::InvalidArgument, "expected '*' before state variable in '" + text + "'");
      num.pop_back();
      coef = Rational::parse(num);
    }
    std::size_t j = cpos + 1;
    std::size_t start = j;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    if (j == start) throw Error(ErrorCode::InvalidArgument, "state index missing in '" + text + "'");
    const std::size_t idx = std::stoul(s.substr(start, j - start));
    if (idx >= num_states)
      throw Error(ErrorCode::InvalidArgument, "state c" + std::to_string(idx) + " out of range");
    coeffs[idx] = add(coeffs[idx], Rational{sign * coef.num, coef.den});
    i = j;
    if (i < s.size() && s[i] != '+' && s[i] != '-')
      throw Error(ErrorCode::InvalidArgument, "unexpected character in '" + text + "'");
  }
  return coeffs;
}

}  // namespace

Rational Rational::parse(const std::string& raw) {
  const std::string text = trim(raw);
  if (text.empty()) throw Error(ErrorCode::InvalidArgument, "empty number");
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    const Rational a = parse(text.substr(0, slash));
    const Rational b = parse(text.substr(slash + 1));
    if (b.num == 0) throw Error(ErrorCode::InvalidArgument, "zero denominator in '" + text + "'");
    return mul(a, normalized(b.den, b.num));
  }
  std::size_t i = 0;
  bool neg = false;
  if (text[i] == '+' || text[i] == '-') neg = text[i++] == '-';
  std::int64_t num = 0, den = 1;
  bool digits = false, dot = false;
  for (; i < text.size(); ++i) {
    const char ch = text[i];
    if (ch == '.' && !dot) {
      dot = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(ch))) throw Error(ErrorCode::InvalidArgument, "bad number '" + text + "'");
    digits = true;
    num = checked_mul(num, 10) + (ch - '0');
    if (dot) den = checked_mul(den, 10);
  }
  if (!digits) throw Error(ErrorCode::InvalidArgument, "bad number '" + text + "'");
  return normalized(neg ? -num : num, den);
}

OccupationEvent OccupationEvent::parse(const std::string& text, std::size_t num_states) {
  OccupationEvent ev;
  ev.num_states_ = num_states;
  ev.text_ = trim(text);
  if (ev.text_.empty() || ev.text_ == "all") return ev;
  std::string normalized_text = ev.text_;
  for (std::size_t p = normalized_text.find("&&"); p != std::string::npos; p = normalized_text.find("&&"))
    normalized_text.replace(p, 2, ",");
  for (const auto& part : split_trimmed(normalized_text, ',')) {
    if (part.empty()) continue;
    std::string lhs, rhs;
    Term t;
    split_relation(part, lhs, t.rel, rhs);
    t.coeffs = parse_linear(lhs, num_states);
    t.rhs = Rational::parse(rhs);
    ev.terms_.push_back(std::move(t));
  }
  return ev;
}

OccupationEvent OccupationEvent::whole(std::size_t num_states) { return parse("all", num_states); }

bool OccupationEvent::contains(const std::vector<std::size_t>& counts) const {
  if (empty_) return false;
  if (counts.size() != num_states_) throw Error(ErrorCode::InvalidArgument, "count vector size differs from state count");
  const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  for (const auto& t : terms_) {
    // sum a_x c_x / n  rel  p / q   <=>   L * sum a_x c_x  rel  L * n * p / q
    std::int64_t L = t.rhs.den;
    for (const auto& c : t.coeffs) L = std::lcm(L, c.den);
    i128 lhs = 0;
    for (std::size_t x = 0; x < num_states_; ++x)
      lhs += static_cast<i128>(t.coeffs[x].num) * (L / t.coeffs[x].den) * static_cast<i128>(counts[x]);
    const i128 rhs = static_cast<i128>(t.rhs.num) * (L / t.rhs.den) * static_cast<i128>(n);
    bool ok = false;
    switch (t.rel) {
      case Relation::LE: ok = lhs <= rhs; break;
      case Relation::LT: ok = lhs < rhs; break;
      case Relation::GE: ok = lhs >= rhs; break;
      case Relation::GT: ok = lhs > rhs; break;
      case Relation::EQ: ok = lhs == rhs; break;
    }
    if (!ok) return false;
  }
  return true;
}

bool OccupationEvent::aligned(std::size_t n) const {
  for (const auto& t : terms_) {
    // attainable left sides are the multiples of g; the threshold must be one
    std::int64_t L = t.rhs.den;
    for (const auto& c : t.coeffs) L = std::lcm(L, c.den);
    std::int64_t g = 0;
    for (const auto& c : t.coeffs) g = std::gcd(g, c.num * (L / c.den));
    const i128 rhs = static_cast<i128>(t.rhs.num) * (L / t.rhs.den) * static_cast<i128>(n);
    if (g != 0 && rhs % g != 0) return false;
  }
  return true;
}

OccupationEvent OccupationEvent::closure() const {
  OccupationEvent ev = *this;
  for (auto& t : ev.terms_) t.rel = closed_of(t.rel);
  return ev;
}

OccupationEvent OccupationEvent::interior() const {
  OccupationEvent ev = *this;
  for (auto& t : ev.terms_) {
    if (t.rel == Relation::EQ) ev.empty_ = true;
    t.rel = strict_of(t.rel);
  }
  return ev;
}

std::vector<LinearConstraint> OccupationEvent::constraints() const {
  std::vector<LinearConstraint> out;
  if (empty_) {
    // 0 > 0: no probability vector satisfies it
    out.push_back(LinearConstraint{std::vector<double>(num_states_, 0.0), Relation::GT, 0.0});
    return out;
  }
  for (const auto& t : terms_) {
    LinearConstraint c;
    for (const auto& r : t.coeffs) c.coeffs.push_back(r.value());
    c.rel = t.rel;
    c.rhs = t.rhs.value();
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<double> brute_force_pressure(const FiniteMarkovKernel& kernel, const Potential& V, std::size_t n,
                                         PathBackend backend) {
  if (n == 0) throw Error(ErrorCode::InvalidHorizon, "horizon must be at least 1");
  if (V.size() != kernel.size()) throw Error(ErrorCode::InvalidArgument, "potential size differs from state count");
  const std::size_t m = kernel.size();
  const double paths = std::pow(static_cast<double>(m), static_cast<double>(n));
  if (backend == PathBackend::Auto) backend = paths <= kMaxEnumeratedPaths ? PathBackend::Enumerate : PathBackend::MatrixPower;
  if (backend == PathBackend::Enumerate && paths > kMaxEnumeratedPaths)
    throw Error(ErrorCode::TooLarge, "path enumeration beyond 1e8 paths");
  std::vector<double> out(m);
  const long double vmax = *std::max_element(V.values.begin(), V.values.end());

  if (backend == PathBackend::Enumerate) {
    // Depth-first over paths, weights scaled by e^{-n vmax} to stay in range.
    for (std::size_t x = 0; x < m; ++x) {
      std::vector<long double> leaves;
      std::vector<std::size_t> stack_state{x};
      std::vector<long double> stack_weight{1.0L};
      std::vector<std::size_t> stack_depth{0};
      while (!stack_state.empty()) {
        const std::size_t s = stack_state.back();
        const long double w = stack_weight.back();
        const std::size_t d = stack_depth.back();
        stack_state.pop_back();
        stack_weight.pop_back();
        stack_depth.pop_back();
        if (d == n) {
          leaves.push_back(w);
          continue;
        }
        for (std::size_t y = 0; y < m; ++y) {
          const double p = kernel.p(s, y);
          if (p == 0.0) continue;
          stack_state.push_back(y);
          stack_weight.push_back(w * p * std::exp(static_cast<long double>(V[y]) - vmax));
          stack_depth.push_back(d + 1);
        }
      }
      const long double total = compensated_sum(leaves);
      out[x] = static_cast<double>((std::log(total) + static_cast<long double>(n) * vmax) / static_cast<long double>(n));
    }
    return out;
  }

  // g_k(x) = log sum_y P(x,y) e^{V(y)} exp(g_{k-1}(y)), g_0 = 0.
  std::vector<long double> g(m, 0.0L), next(m);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t x = 0; x < m; ++x) {
      long double mx = -std::numeric_limits<long double>::infinity();
      for (std::size_t y = 0; y < m; ++y)
        if (kernel.p(x, y) > 0.0) mx = std::max(mx, std::log(static_cast<long double>(kernel.p(x, y))) + V[y] + g[y]);
      long double s = 0.0L;
      for (std::size_t y = 0; y < m; ++y)
        if (kernel.p(x, y) > 0.0) s += std::exp(std::log(static_cast<long double>(kernel.p(x, y))) + V[y] + g[y] - mx);
      next[x] = mx + std::log(s);
    }
    g.swap(next);
  }
  for (std::size_t x = 0; x < m; ++x) out[x] = static_cast<double>(g[x] / static_cast<long double>(n));
  return out;
}

std::vector<OccupationCell> occupation_table(const FiniteMarkovKernel& kernel, std::size_t x0, std::size_t n) {
  const std::size_t m = kernel.size();
  if (m > kMaxDpStates) throw Error(ErrorCode::TooLarge, "occupation DP supports at most 4 states");
  if (n > kMaxDpHorizon) throw Error(ErrorCode::TooLarge, "occupation DP supports horizons up to 60");
  if (n == 0) throw Error(ErrorCode::InvalidHorizon, "horizon must be at least 1");
  if (x0 >= m) throw Error(ErrorCode::InvalidArgument, "initial state out of range");

  // Cell index: current + m * (c_0 + (n+1) * (c_1 + ...)), the last count implied.
  const std::size_t side = n + 1;
  std::size_t count_cells = 1;
  for (std::size_t i = 0; i + 1 < m; ++i) count_cells *= side;
  std::vector<long double> cur(count_cells * m, 0.0L), nxt(count_cells * m, 0.0L);
  std::vector<std::size_t> stride(m, 0);
  for (std::size_t i = 0, s = 1; i + 1 < m; ++i, s *= side) stride[i] = s;
  cur[x0] = 1.0L;
  for (std::size_t k = 0; k < n; ++k) {
    std::fill(nxt.begin(), nxt.end(), 0.0L);
    for (std::size_t cell = 0; cell < count_cells; ++cell)
      for (std::size_t x = 0; x < m; ++x) {
        const long double mass = cur[cell * m + x];
        if (mass == 0.0L) continue;
        for (std::size_t y = 0; y < m; ++y) {
          const double p = kernel.p(x, y);
          if (p == 0.0) continue;
          const std::size_t target = y + 1 < m ? cell + stride[y] : cell;
          nxt[target * m + y] += mass * p;
        }
      }
    cur.swap(nxt);
  }
  std::vector<OccupationCell> out;
  std::vector<std::size_t> counts(m);
  for (std::size_t cell = 0; cell < count_cells; ++cell) {
    std::size_t rest = cell, used = 0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      counts[i] = rest % side;
      rest /= side;
      used += counts[i];
    }
    if (used > n) continue;
    counts[m - 1] = n - used;
    for (std::size_t x = 0; x < m; ++x) {
      const long double mass = cur[cell * m + x];
      if (mass != 0.0L) out.push_back({counts, x, mass});
    }
  }
  return out;
}

long double occupation_dp(const FiniteMarkovKernel& kernel, std::size_t x0, std::size_t n,
                          const OccupationEvent& event) {
  if (event.num_states() != kernel.size()) throw Error(ErrorCode::InvalidArgument, "event size differs from state count");
  std::vector<long double> terms;
  for (const auto& c : occupation_table(kernel, x0, n))
    if (event.contains(c.counts)) terms.push_back(c.probability);
  return compensated_sum(terms);
}

AffineFit fit_inverse_n(const std::vector<double>& ns, const std::vector<double>& ys) {
  if (ns.size() != ys.size() || ns.empty()) throw Error(ErrorCode::InvalidArgument, "fit needs equal-length, non-empty data");
  AffineFit f;
  if (ns.size() == 1) {
    f.a = ys[0];
    return f;
  }
  Eigen::MatrixXd A(static_cast<Eigen::Index>(ns.size()), 2);
  Eigen::VectorXd y(static_cast<Eigen::Index>(ns.size()));
  for (std::size_t i = 0; i < ns.size(); ++i) {
    A(static_cast<Eigen::Index>(i), 0) = 1.0;
    A(static_cast<Eigen::Index>(i), 1) = 1.0 / ns[i];
    y[static_cast<Eigen::Index>(i)] = ys[i];
  }
  const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(y);
  f.a = coef[0];
  f.b = coef[1];
  f.residual = (A * coef - y).cwiseAbs().maxCoeff();
  return f;
}

AffineFit fit_inverse_n_log(const std::vector<double>& ns, const std::vector<double>& ys) {
  if (ns.size() != ys.size()) throw Error(ErrorCode::InvalidArgument, "fit needs equal-length data");
  if (ns.size() < 4) return fit_inverse_n(ns, ys);
  const auto m = static_cast<Eigen::Index>(ns.size());
  Eigen::MatrixXd A(m, 3);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double n = ns[static_cast<std::size_t>(i)];
    A(i, 0) = 1.0;
    A(i, 1) = 1.0 / n;
    A(i, 2) = std::log(n) / n;
    y[i] = ys[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector3d coef = A.colPivHouseholderQr().solve(y);
  AffineFit f;
  f.a = coef[0];
  f.b = coef[1];
  f.c = coef[2];
  f.residual = (A * coef - y).cwiseAbs().maxCoeff();
  return f;
}

LdpReport ldp_bound_report(const FiniteMarkovKernel& kernel, std::size_t x0, const OccupationEvent& event,
                           const std::vector<std::size_t>& n_grid) {
  if (n_grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty horizon grid");
  LdpReport rep;
  rep.event = event.text();
  rep.x0 = x0;
  std::vector<double> ns, ys;
  for (std::size_t n : n_grid) {
    LdpRow row;
    row.n = n;
    const long double p = occupation_dp(kernel, x0, n, event);
    row.probability = static_cast<double>(p);
    row.log_p_over_n = p > 0.0L ? static_cast<double>(std::log(p) / static_cast<long double>(n)) : -kInf;
    if (p > 0.0L) {
      ns.push_back(static_cast<double>(n));
      ys.push_back(-row.log_p_over_n);
    }
    rep.rows.push_back(row);
  }
  if (ns.empty()) {
    rep.fitted_a = kInf;
  } else {
    // Off-lattice horizons see a rounded-up threshold; leave them out of the
    // extrapolation when enough aligned ones remain.
    std::vector<double> an, ay;
    for (std::size_t i = 0; i < ns.size(); ++i)
      if (event.aligned(static_cast<std::size_t>(ns[i]))) {
        an.push_back(ns[i]);
        ay.push_back(ys[i]);
      }
    const bool use_aligned = an.size() >= 4;
    const AffineFit fit = use_aligned ? fit_inverse_n_log(an, ay) : fit_inverse_n_log(ns, ys);
    rep.fit_rows = use_aligned ? an.size() : ns.size();
    rep.fitted_a = fit.a;
    rep.fitted_b = fit.b;
    rep.fitted_c = fit.c;
    rep.fit_residual = fit.residual;
    rep.affine_a = fit_inverse_n(ns, ys).a;
  }

  // States never visited after time 0 carry no occupation mass.
  const auto reach = reachable_after_one_step(kernel, x0);
  std::vector<bool> visited(kernel.size(), false);
  for (auto s : reach) visited[s] = true;
  auto with_support = [&](std::vector<LinearConstraint> cons) {
    for (std::size_t x = 0; x < kernel.size(); ++x) {
      if (visited[x]) continue;
      LinearConstraint c;
      c.coeffs.assign(kernel.size(), 0.0);
      c.coeffs[x] = 1.0;
      c.rel = Relation::EQ;
      c.rhs = 0.0;
      cons.push_back(std::move(c));
    }
    return cons;
  };
  rep.inf_closed = min_rate_over_polytope(kernel, with_support(event.closure().constraints())).value;
  rep.inf_open = min_rate_over_polytope(kernel, with_support(event.interior().constraints())).value;
  if (rep.inf_closed.is_finite() && std::isfinite(rep.fitted_a))
    rep.gap = rep.fitted_a - rep.inf_closed.value();
  else if (rep.inf_closed.is_infinite() && !std::isfinite(rep.fitted_a))
    rep.gap = 0.0;
  else
    rep.gap = kInf;
  return rep;
}

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

nlohmann::json rate_json(const RateValue& r) {
  if (r.is_infinite()) return "inf";
  return r.value();
}

nlohmann::json number_json(double v) {
  if (std::isfinite(v)) return v;
  return fmt(v);
}

}  // namespace

std::string LdpReport::to_csv() const {
  std::ostringstream os;
  os << "n,logP_over_n,fitted_a,fitted_b,infI,gap\n";
  for (const auto& r : rows)
    os << r.n << ',' << fmt(r.log_p_over_n) << ',' << fmt(fitted_a) << ',' << fmt(fitted_b) << ','
       << fmt(inf_closed.as_double()) << ',' << fmt(gap) << '\n';
  return os.str();
}

std::string LdpReport::to_json() const {
  nlohmann::json j;
  j["event"] = event;
  j["x0"] = x0;
  j["fitted_a"] = number_json(fitted_a);
  j["fitted_b"] = number_json(fitted_b);
  j["fitted_c"] = number_json(fitted_c);
  j["affine_a"] = number_json(affine_a);
  j["fitRows"] = fit_rows;
  j["fitResidual"] = number_json(fit_residual);
  j["infI"] = rate_json(inf_closed);
  j["infIOpen"] = rate_json(inf_open);
  j["gap"] = number_json(gap);
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows)
    j["rows"].push_back({{"n", r.n}, {"probability", r.probability}, {"logP_over_n", number_json(r.log_p_over_n)}});
  return j.dump(2);
}

LaplaceResult laplace_max(const std::vector<double>& ns, const std::vector<std::vector<double>>& sequences,
                          double tolerance) {
  if (sequences.empty()) throw Error(ErrorCode::InvalidArgument, "no sequences");
  for (const auto& s : sequences)
    if (s.size() != ns.size()) throw Error(ErrorCode::InvalidArgument, "sequences must share the grid");
  LaplaceResult res;
  res.combined.resize(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    double mx = -kInf;
    for (const auto& s : sequences) mx = std::max(mx, s[i]);
    if (mx == -kInf) {
      res.combined[i] = -kInf;
      continue;
    }
    double acc = 0.0;
    for (const auto& s : sequences) acc += std::exp(ns[i] * (s[i] - mx));
    res.combined[i] = mx + std::log(acc) / ns[i];
  }
  auto limit = [&](const std::vector<double>& seq) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < ns.size(); ++i)
      if (std::isfinite(seq[i])) {
        xs.push_back(ns[i]);
        ys.push_back(seq[i]);
      }
    return xs.empty() ? -kInf : fit_inverse_n(xs, ys).a;
  };
  res.max_limit = -kInf;
  for (const auto& s : sequences) {
    res.individual_limits.push_back(limit(s));
    res.max_limit = std::max(res.max_limit, res.individual_limits.back());
  }
  res.combined_limit = limit(res.combined);
  res.agrees = (res.max_limit == -kInf && res.combined_limit == -kInf) ||
               std::abs(res.combined_limit - res.max_limit) <= tolerance;
  return res;
}

}  // namespace raredyn
