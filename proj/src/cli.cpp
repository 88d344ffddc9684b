#include "raredyn/cli.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <locale>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "raredyn/config.hpp"
#include "raredyn/coupling.hpp"
#include "raredyn/errors.hpp"
#include "raredyn/finite_engine.hpp"
#include "raredyn/mc_engine.hpp"
#include "raredyn/model_loader.hpp"
#include "raredyn/oracle.hpp"
#include "raredyn/wave_model.hpp"

namespace raredyn::cli {

using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::SolveFailed, "SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

namespace {

// Thrown by verify commands whose check fails after the report is written.
struct AssertionFailed {
  std::string what;
};

json num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

json rate(const RateValue& r) { return r.is_infinite() ? json("inf") : json(r.value()); }

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

json vec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::ostringstream csv_stream() {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17);
  return os;
}

std::vector<std::size_t> parse_grid(const std::string& text) {
  const auto parts = split_trimmed(text, ':');
  if (parts.size() != 3) throw Error(ErrorCode::InvalidArgument, "grid must be start:stop:step");
  std::vector<std::size_t> v;
  try {
    const long long a = std::stoll(parts[0]), b = std::stoll(parts[1]), c = std::stoll(parts[2]);
    if (a < 1 || c < 1 || b < a) throw Error(ErrorCode::InvalidArgument, "grid needs 1 <= start <= stop and step >= 1");
    for (long long n = a; n <= b; n += c) v.push_back(static_cast<std::size_t>(n));
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::InvalidArgument, "grid entries must be integers: " + text);
  }
  return v;
}

Potential parse_potential(const std::string& text, std::size_t n, const std::string& what) {
  Potential p(parse_number_list(text));
  if (p.size() != n)
    throw Error(ErrorCode::InvalidArgument, what + " has " + std::to_string(p.size()) + " values for " + std::to_string(n) + " states");
  return p;
}

std::size_t parse_chain_state(const FiniteMarkovKernel& k, const std::string& text) {
  const std::string t = trim(text);
  for (std::size_t i = 0; i < k.size(); ++i)
    if (k.labels()[i] == t) return i;
  try {
    std::size_t used = 0;
    const long long i = std::stoll(t, &used);
    if (used == t.size() && i >= 0 && static_cast<std::size_t>(i) < k.size()) return static_cast<std::size_t>(i);
  } catch (const std::logic_error&) {
  }
  throw Error(ErrorCode::InvalidArgument, "unknown state '" + text + "'");
}

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(const std::vector<std::string>& args);

 private:
  void write_file(const std::string& name, const std::string& content);
  void emit_json(const std::string& name, const json& j);
  void load();
  std::uint64_t seed() const;
  State parse_state(const std::string& text) const;
  const FiniteMarkovKernel& kernel() const { return model_.kernel(); }

  void chain(const std::string& cmd);
  void verify(const std::string& cmd);
  void mc(const std::string& cmd);
  void couple();
  void wave(const std::string& cmd);
  void model_show();

  std::ostream& out_;
  std::ostream& err_;

  std::string subcommand_;
  std::vector<std::string> argv_;
  std::chrono::steady_clock::time_point start_;

  // Flags.
  std::string config_path_, out_dir_ = ".";
  std::uint64_t seed_ = 1;
  unsigned jobs_ = 1;
  std::string V_, f_, sigma_, event_ = "all", ngrid_ = "5:60:5", x0_, y0_, pairs_, energies_ = "1,10,100",
                                  kicks_ = "on";
  double p_ = 0.0, tol_ = -1.0, r_ = 0.1, energy_ = 0.0;
  std::size_t n_ = 0, samples_ = 1000, ensemble_ = 16, jcut_ = 0;
  bool has_p_ = false;

  Config config_;
  std::string digest_;
  LoadedModel model_;
};

void Runner::write_file(const std::string& name, const std::string& content) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir_);
  const fs::path path = fs::path(out_dir_) / name;
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
    f << content;
  }
  json m;
  m["tool"] = "raredyn";
  m["version"] = kVersion;
  m["configDigest"] = digest_;
  m["seed"] = seed();
  m["subcommand"] = subcommand_;
  m["parameters"] = argv_;
  m["wallClockSeconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  m["outputs"] = json::array({name});
  std::ofstream mf(fs::path(out_dir_) / (name + ".manifest.json"), std::ios::binary | std::ios::trunc);
  if (!mf) throw Error(ErrorCode::ConfigError, "cannot write manifest for " + path.string());
  mf << m.dump(2) << '\n';
}

void Runner::emit_json(const std::string& name, const json& j) {
  const std::string text = j.dump(2) + "\n";
  write_file(name, text);
  out_ << text;
}

void Runner::load() {
  if (config_path_.empty()) throw Error(ErrorCode::ConfigError, "--config is required");
  config_ = Config::load(config_path_);
  digest_ = sha256_hex(config_.canonical());
  model_ = load_model(config_);
}

std::uint64_t Runner::seed() const {
  if (const char* env = std::getenv("RAREDYN_SEED")) {
    const std::string s = trim(env);
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(s, &used);
      if (used == s.size() && !s.empty() && s[0] != '-') return v;
    } catch (const std::logic_error&) {
    }
    throw Error(ErrorCode::ConfigError, "RAREDYN_SEED is not an unsigned 64-bit integer: " + s);
  }
  return seed_;
}

State Runner::parse_state(const std::string& text) const {
  if (model_.chain) return {static_cast<double>(parse_chain_state(*model_.chain, text.empty() ? "0" : text))};
  if (model_.wave) {
    // For the wave model the state is given by its energy.
    const WaveModel w(*model_.wave);
    const double e = text.empty() ? 0.0 : parse_number(text);
    return w.pack(w.state_with_energy(e), WaveState::zero(w.modes()));
  }
  const RdsModel m = model_.rds();
  if (text.empty()) return m.designated_point.value_or(State(m.dimension, 0.0));
  State s = parse_number_list(text);
  if (s.size() != m.dimension)
    throw Error(ErrorCode::InvalidArgument, "state needs " + std::to_string(m.dimension) + " coordinates");
  return s;
}

void Runner::chain(const std::string& cmd) {
  const FiniteMarkovKernel& k = kernel();
  const std::size_t n = k.size();
  const auto potential = [&](const std::string& text, const std::string& what) {
    if (text.empty()) return Potential::constant(n, 0.0);
    return parse_potential(text, n, what);
  };
  const auto triple_json = [&](const Potential& V) -> json {
    if (communicating_classes(k).size() != 1) return nullptr;
    const PerronTriple t = perron_triple(TiltedKernel(k, V));
    return {{"lambda", num(t.lambda)}, {"logLambda", num(t.log_lambda)}, {"h", vec(t.h)}, {"mu", vec(t.mu)}};
  };
  const auto classes_json = [&](const PressureResult& pr) {
    json a = json::array();
    for (const auto& c : pr.classes)
      a.push_back({{"states", c.states}, {"logRadius", num(c.log_radius)}, {"closed", c.closed}, {"period", c.period}});
    return a;
  };
  json j;
  if (cmd == "pressure") {
    const Potential V = potential(V_, "--V");
    const PressureResult pr = pressure(k, V);
    j = {{"lambda", num(pr.lambda)}, {"perStateRates", vec(pr.per_state_rates)}, {"netConverges", pr.net_converges},
         {"classRates", classes_json(pr)}, {"triple", triple_json(V)}};
  } else if (cmd == "rate") {
    if (sigma_.empty()) throw Error(ErrorCode::InvalidArgument, "--sigma is required");
    const Eigen::VectorXd s = parse_potential(sigma_, n, "--sigma").vec();
    const RateResult r = rate_dv(k, s);
    j = {{"sigma", vec(s)}, {"rate", rate(r.value)}, {"method", r.method}, {"iterations", r.iterations}};
  } else if (cmd == "equilibrium") {
    const Potential V = potential(V_, "--V");
    const EquilibriumResult eq = equilibrium_states(k, V);
    json states = json::array();
    for (const auto& s : eq.states) states.push_back(vec(s));
    j = {{"lambda", num(eq.lambda)}, {"equilibrium", states}, {"unique", eq.unique}, {"triple", triple_json(V)}};
  } else if (cmd == "membership") {
    const Potential V = potential(V_, "--V");
    const MembershipResult m = membership_test(k, V);
    json states = json::array();
    for (const auto& s : m.equilibrium.states) states.push_back(vec(s));
    j = {{"inV", m.in_V},
         {"reasons", m.reasons},
         {"lambda", num(m.pressure.lambda)},
         {"perStateRates", vec(m.pressure.per_state_rates)},
         {"classRates", classes_json(m.pressure)},
         {"equilibrium", states}};
  } else if (cmd == "level1") {
    if (f_.empty() || !has_p_) throw Error(ErrorCode::InvalidArgument, "--f and --p are required");
    const Potential f = parse_potential(f_, n, "--f");
    j = {{"f", f.values}, {"p", p_}, {"rate", rate(level1_rate(k, f, p_))}};
  } else if (cmd == "mixing") {
    const MixingResult m = invariant_and_mixing(k);
    j = {{"muStar", vec(m.mu_star)}, {"gamma", num(m.gamma)}, {"secondModulus", num(m.second_modulus)}};
  } else if (cmd == "clt") {
    if (f_.empty()) throw Error(ErrorCode::InvalidArgument, "--f is required");
    const Potential f = parse_potential(f_, n, "--f");
    const MixingResult m = invariant_and_mixing(k);
    j = {{"f", f.values}, {"mean", num(f.vec().dot(m.mu_star))}, {"sigma2", num(clt_variance(k, f))}};
  }
  emit_json("chain_" + cmd + ".json", j);
}

void Runner::verify(const std::string& cmd) {
  const FiniteMarkovKernel& k = kernel();
  json j;
  bool pass = true;
  if (cmd == "ldp") {
    const double tol = tol_ < 0 ? 0.02 : tol_;
    const std::size_t x0 = parse_chain_state(k, x0_.empty() ? "0" : x0_);
    const OccupationEvent ev = OccupationEvent::parse(event_, k.size());
    const LdpReport rep = ldp_bound_report(k, x0, ev, parse_grid(ngrid_));
    if (std::isinf(rep.fitted_a) || rep.inf_closed.is_infinite())
      pass = std::isinf(rep.fitted_a) && rep.inf_closed.is_infinite();
    else
      pass = std::abs(rep.gap) <= tol;
    write_file("verify_ldp.csv", rep.to_csv());
    j = json::parse(rep.to_json());
    j["tolerance"] = tol;
    j["pass"] = pass;
    emit_json("verify_ldp.json", j);
  } else if (cmd == "duality") {
    const double tol = tol_ < 0 ? 1e-6 : tol_;
    const Potential V = V_.empty() ? Potential::constant(k.size(), 0.0) : parse_potential(V_, k.size(), "--V");
    const DualityCheck d = duality_check(k, V);
    pass = d.gap >= 0.0 && d.gap <= tol;
    j = {{"lambda", num(d.pressure)}, {"legendre", num(d.legendre)}, {"gap", num(d.gap)},
         {"sigma", vec(d.sigma)}, {"tolerance", tol}, {"pass", pass}};
    emit_json("verify_duality.json", j);
  } else if (cmd == "fk") {
    const double tol = tol_ < 0 ? 1e-8 : tol_;
    const std::size_t n = n_ == 0 ? 500 : n_;
    const Potential V = V_.empty() ? Potential::constant(k.size(), 0.0) : parse_potential(V_, k.size(), "--V");
    const Potential f = f_.empty() ? Potential::constant(k.size(), 1.0) : parse_potential(f_, k.size(), "--f");
    const double res = feynman_kac_residual(TiltedKernel(k, V), f, n);
    pass = res < tol;
    j = {{"n", n}, {"residual", num(res)}, {"tolerance", tol}, {"pass", pass}};
    emit_json("verify_fk.json", j);
  }
  if (!pass) throw AssertionFailed{"verify " + cmd + " check failed"};
}

void Runner::mc(const std::string& cmd) {
  const std::uint64_t s = seed();
  json j;
  if (cmd == "rare") {
    const FiniteMarkovKernel& k = kernel();
    if (n_ == 0) throw Error(ErrorCode::InvalidArgument, "--n is required");
    const std::size_t x0 = parse_chain_state(k, x0_.empty() ? "0" : x0_);
    const OccupationEvent ev = OccupationEvent::parse(event_, k.size());
    const RareEventEstimate est = V_.empty()
                                      ? rare_event_naive(k, x0, n_, ev, samples_, s, jobs_)
                                      : rare_event_tilted(k, parse_potential(V_, k.size(), "--V"), x0, n_, ev, samples_, s, jobs_);
    j = {{"estimate", num(est.estimate)}, {"standardError", num(est.standard_error)}, {"samples", est.samples},
         {"hits", est.hits}, {"method", est.method}};
    if (est.weights) j["weights"] = {{"min", num(est.weights->min)}, {"max", num(est.weights->max)}, {"ess", num(est.weights->ess)}};
    if (k.size() <= kMaxDpStates && n_ <= kMaxDpHorizon) j["exact"] = num(static_cast<double>(occupation_dp(k, x0, n_, ev)));
    emit_json("mc_rare.json", j);
  } else if (cmd == "mixing") {
    const RdsModel m = model_.rds();
    const MixingCurve c = mixing_estimate(m, parse_state(x0_), parse_state(y0_), n_ == 0 ? 20 : n_, samples_, s, jobs_);
    auto os = csv_stream();
    os << "k,distance,bias\n";
    for (const auto& p : c.points) os << p.k << ',' << p.distance << ',' << p.bias << '\n';
    write_file("mc_mixing.csv", os.str());
    j = {{"gammaHat", num(c.gamma_hat)}, {"fitR2", num(c.fit_r2)}, {"fitPoints", c.fit_points}};
    emit_json("mc_mixing.json", j);
  } else if (cmd == "clt") {
    const FiniteMarkovKernel& k = kernel();
    if (f_.empty()) throw Error(ErrorCode::InvalidArgument, "--f is required");
    const CltCheck c = clt_check(k, parse_potential(f_, k.size(), "--f"), n_ == 0 ? 2000 : n_, samples_, s, jobs_);
    auto os = csv_stream();
    os << "id,sum\n";
    for (std::size_t i = 0; i < c.sums.size(); ++i) os << i << ',' << c.sums[i] << '\n';
    write_file("mc_clt.csv", os.str());
    j = {{"sigma2", num(c.sigma2)}, {"empiricalVariance", num(c.empirical_variance)}, {"ksStatistic", num(c.ks_statistic)},
         {"ksPvalue", num(c.ks_pvalue)}, {"degenerate", c.degenerate}};
    emit_json("mc_clt.json", j);
  } else if (cmd == "ac") {
    const RdsModel m = model_.rds();
    const AcDiagnostic d = ac_diagnostic(m, parse_state(x0_), n_ == 0 ? 40 : n_, s, ensemble_, 1e-4, jobs_);
    auto os = csv_stream();
    os << "k,distance,worst_case\n";
    for (std::size_t i = 0; i < d.distances.size(); ++i) os << i << ',' << d.distances[i] << ',' << d.worst_case[i] << '\n';
    write_file("mc_ac.csv", os.str());
    j = {{"kappaHat", num(d.kappa_hat)}, {"acBound", num(d.ac_bound)}, {"fitResidual", num(d.fit_residual)},
         {"fitR2", num(d.fit_r2)}, {"fitPoints", d.fit_points}};
    emit_json("mc_ac.json", j);
  } else if (cmd == "aet") {
    const RdsModel m = model_.rds();
    const auto rows = aet_diagnostic(m, parse_state(x0_), parse_grid(ngrid_), samples_, r_, s, jobs_);
    auto os = csv_stream();
    os << "n,fraction\n";
    for (const auto& r : rows) os << r.n << ',' << r.fraction << '\n';
    write_file("mc_aet.csv", os.str());
    json a = json::array();
    for (const auto& r : rows) a.push_back({{"n", r.n}, {"fraction", num(r.fraction)}});
    j = {{"r", r_}, {"rows", a}};
    emit_json("mc_aet.json", j);
  }
}

void Runner::couple() {
  const RdsModel m = model_.rds();
  std::vector<std::pair<State, State>> pairs;
  if (!pairs_.empty()) {
    for (const auto& item : split_trimmed(pairs_, ';')) {
      const auto xy = split_trimmed(item, '|');
      if (xy.size() != 2) throw Error(ErrorCode::InvalidArgument, "pairs are written x|y and separated by ';'");
      pairs.emplace_back(parse_state(xy[0]), parse_state(xy[1]));
    }
  } else if (model_.chain) {
    for (std::size_t x = 0; x < model_.chain->size(); ++x)
      for (std::size_t y = x + 1; y < model_.chain->size(); ++y)
        pairs.emplace_back(State{static_cast<double>(x)}, State{static_cast<double>(y)});
  } else if (model_.contraction) {
    for (double r : {0.25, 0.5, 1.0, 2.0}) {
      State y(m.dimension, 0.0);
      y[0] = r;
      pairs.emplace_back(State(m.dimension, 0.0), y);
    }
  } else {
    throw Error(ErrorCode::InvalidArgument, "--pairs is required for this model");
  }
  const CoupledStep step = model_.chain ? finite_maximal_step(*model_.chain) : CoupledStep{};
  const SqueezingReport rep = squeezing_verify(m, model_.coupling, pairs, samples_, seed(), step, jobs_);
  write_file("couple_verify.csv", rep.to_csv());
  const json j = {{"q", model_.coupling.q},          {"gSlope", model_.coupling.g_slope}, {"delta1", num(model_.coupling.delta1())},
                  {"allPass", rep.all_pass},         {"worstMargin", num(rep.worst_margin)}, {"pairs", pairs.size()}};
  emit_json("couple_verify.json", j);
  if (!rep.all_pass) throw AssertionFailed{"squeezing check failed"};
}

void Runner::wave(const std::string& cmd) {
  if (!model_.wave) throw Error(ErrorCode::Unsupported, "wave commands need a wave model, the model is " + model_.kind);
  const WaveModel w(*model_.wave);
  const std::size_t jcut = jcut_ == 0 ? std::min(w.modes() - 1, 2 * w.config().noise_modes) : jcut_;
  if (cmd == "simulate") {
    const auto rows = wave_simulate(w, w.state_with_energy(energy_), n_ == 0 ? 20 : n_, seed(), jcut);
    write_file("wave_simulate.csv", wave_rows_csv(rows));
    const json j = {{"kicks", rows.size() - 1}, {"jcut", jcut}, {"finalEnergy", num(rows.back().energy)},
                    {"finalTailFraction", num(rows.back().tail_fraction)}};
    emit_json("wave_simulate.json", j);
  } else {
    if (kicks_ != "on" && kicks_ != "off") throw Error(ErrorCode::InvalidArgument, "--kicks must be on or off");
    const DecayReport rep = decay_experiment(w, parse_number_list(energies_), kicks_ == "on", n_ == 0 ? 25 : n_, seed());
    write_file("wave_decay.csv", rep.to_csv());
    json runs = json::array();
    for (const auto& r : rep.runs)
      runs.push_back({{"initialEnergy", r.initial_energy}, {"rate", num(r.rate)}, {"fitR2", num(r.fit_r2)},
                      {"entryTime", r.entry_time}, {"maxAfterEntry", num(r.max_after_entry)},
                      {"finalEnergy", num(r.energies.back())}});
    const json j = {{"kicksOn", rep.kicks_on}, {"ballRadius", num(rep.ball_radius)}, {"runs", runs}};
    emit_json("wave_decay.json", j);
  }
}

void Runner::model_show() {
  json j = {{"kind", model_.kind}, {"configDigest", digest_},
            {"coupling", {{"q", model_.coupling.q}, {"gSlope", model_.coupling.g_slope}}}};
  if (model_.chain) {
    const auto& k = *model_.chain;
    json rows = json::array();
    for (Eigen::Index i = 0; i < k.matrix().rows(); ++i) rows.push_back(vec(Eigen::VectorXd(k.matrix().row(i).transpose())));
    j["states"] = k.labels();
    j["coords"] = k.coords();
    j["matrix"] = rows;
  } else if (model_.contraction) {
    const auto& c = *model_.contraction;
    j["contraction"] = {{"beta1", c.beta1}, {"c1", c.c1}, {"beta2", c.beta2}, {"kickBound", c.kick_bound}, {"dim", c.dim},
                        {"attainableRadius", num(c.attainable_radius())}};
  } else if (model_.wave) {
    const auto& c = *model_.wave;
    j["wave"] = {{"modes", c.modes},         {"period", c.period},         {"steps", c.steps},
                 {"noiseModes", c.noise_modes}, {"noiseScale", c.scale()},  {"budgetUsed", c.budget_used()},
                 {"budgetLimit", c.budget_limit()}, {"damping", c.damping}, {"constantDamping", c.constant_damping},
                 {"cubic", c.cubic}};
  }
  emit_json("model_show.json", j);
}

int Runner::run(const std::vector<std::string>& args) {
  start_ = std::chrono::steady_clock::now();
  argv_ = args;
  CLI::App app{"raredyn: large deviations, mixing and rare-event tools for Markov chains and kicked systems"};
  app.name("raredyn");
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.add_option("--config", config_path_, "Model definition file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed_, "Master seed (RAREDYN_SEED overrides)");
  app.add_option("--out", out_dir_, "Output directory")->capture_default_str();
  app.add_option("--jobs", jobs_, "Worker threads (0 = all cores); never changes results")->capture_default_str();

  std::map<std::string, CLI::App*> leaves;
  const auto group = [&](const std::string& name, const std::string& help) {
    CLI::App* g = app.add_subcommand(name, help);
    g->require_subcommand(1);
    g->fallthrough();
    return g;
  };
  const auto leaf = [&](CLI::App* g, const std::string& name, const std::string& help) {
    CLI::App* l = g->add_subcommand(name, help);
    l->fallthrough();
    leaves[g->get_name() + " " + name] = l;
    return l;
  };
  const auto opt_V = [&](CLI::App* a) { a->add_option("--V", V_, "Potential values, comma separated"); };
  const auto opt_f = [&](CLI::App* a) { a->add_option("--f", f_, "Function values, comma separated"); };
  const auto opt_x0 = [&](CLI::App* a) {
    a->add_option("--x0", x0_, "Initial state (label or index; coordinates; energy for the wave model)");
  };
  const auto opt_n = [&](CLI::App* a, const std::string& help) { a->add_option("--n", n_, help); };
  const auto opt_samples = [&](CLI::App* a) { a->add_option("--samples", samples_, "Monte Carlo samples")->capture_default_str(); };
  const auto opt_tol = [&](CLI::App* a) { a->add_option("--tol", tol_, "Tolerance of the check"); };

  CLI::App* chain = group("chain", "Exact computations on a finite chain");
  opt_V(leaf(chain, "pressure", "Pressure, per-state rates and Perron triple"));
  leaf(chain, "rate", "Rate function I(sigma)")->add_option("--sigma", sigma_, "Probability vector");
  opt_V(leaf(chain, "equilibrium", "Equilibrium states of V"));
  opt_V(leaf(chain, "membership", "Test V for membership in the class with unique equilibrium"));
  {
    CLI::App* l = leaf(chain, "level1", "Level-1 rate of <f, L_n> at p");
    opt_f(l);
    l->add_option("--p", p_, "Level")->each([&](const std::string&) { has_p_ = true; });
  }
  leaf(chain, "mixing", "Invariant measure and mixing rate");
  opt_f(leaf(chain, "clt", "Asymptotic variance of the CLT for f"));

  CLI::App* verify = group("verify", "Checks with pass/fail exit status (4 on failure)");
  {
    CLI::App* l = leaf(verify, "ldp", "Exact occupation probabilities against inf I");
    opt_x0(l);
    l->add_option("--event", event_, "Occupation event, e.g. \"c1>=1.0\"")->capture_default_str();
    l->add_option("--ngrid", ngrid_, "Horizons start:stop:step")->capture_default_str();
    opt_tol(l);
  }
  {
    CLI::App* l = leaf(verify, "duality", "Pressure against the Legendre transform of I");
    opt_V(l);
    opt_tol(l);
  }
  {
    CLI::App* l = leaf(verify, "fk", "Feynman-Kac convergence to the Perron projection");
    opt_V(l);
    opt_f(l);
    opt_n(l, "Horizon (default 500)");
    opt_tol(l);
  }

  CLI::App* mc = group("mc", "Monte Carlo estimators");
  {
    CLI::App* l = leaf(mc, "rare", "Rare-event probability; tilted when --V is given");
    opt_x0(l);
    opt_n(l, "Horizon");
    l->add_option("--event", event_, "Occupation event")->capture_default_str();
    opt_samples(l);
    opt_V(l);
  }
  {
    CLI::App* l = leaf(mc, "mixing", "Dual-Lipschitz distance between two coupled clouds");
    opt_x0(l);
    l->add_option("--y0", y0_, "Second initial state");
    opt_n(l, "Horizon (default 20)");
    opt_samples(l);
  }
  {
    CLI::App* l = leaf(mc, "clt", "Normalized sums against N(0, sigma^2)");
    opt_f(l);
    opt_n(l, "Horizon (default 2000)");
    opt_samples(l);
  }
  {
    CLI::App* l = leaf(mc, "ac", "Asymptotic compactness diagnostic");
    opt_x0(l);
    opt_n(l, "Horizon (default 40)");
    l->add_option("--ensemble", ensemble_, "Trajectories in the worst-case envelope")->capture_default_str();
  }
  {
    CLI::App* l = leaf(mc, "aet", "Exponential tightness surrogate");
    opt_x0(l);
    l->add_option("--ngrid", ngrid_, "Horizons start:stop:step")->capture_default_str();
    opt_samples(l);
    l->add_option("--r", r_, "Distance threshold")->capture_default_str();
  }

  CLI::App* couple = group("couple", "Coupling diagnostics");
  {
    CLI::App* l = leaf(couple, "verify", "Squeezing check with the [coupling] q and g (exit 4 on failure)");
    opt_samples(l);
    l->add_option("--pairs", pairs_, "Start pairs x|y separated by ';'");
  }

  CLI::App* wave = group("wave", "Damped wave surrogate");
  {
    CLI::App* l = leaf(wave, "simulate", "Kicked trajectory with energy and tail fraction per kick");
    opt_n(l, "Kicks (default 20)");
    l->add_option("--energy", energy_, "Initial energy")->capture_default_str();
    l->add_option("--jcut", jcut_, "Tail cut-off mode (default 2 noise_modes)");
  }
  {
    CLI::App* l = leaf(wave, "decay", "Energy decay (kicks off) or absorbing ball (kicks on)");
    opt_n(l, "Kicks (default 25)");
    l->add_option("--energies", energies_, "Initial energies")->capture_default_str();
    l->add_option("--kicks", kicks_, "on or off")->capture_default_str();
  }

  CLI::App* model = group("model", "Model inspection");
  leaf(model, "show", "Print the loaded model");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out_, err_);
    return code == 0 ? kOk : kConfigError;
  }

  std::string group_name, leaf_name;
  for (const auto& [key, l] : leaves)
    if (l->parsed()) {
      subcommand_ = key;
      group_name = key.substr(0, key.find(' '));
      leaf_name = key.substr(key.find(' ') + 1);
    }

  try {
    load();
    if (group_name == "chain")
      this->chain(leaf_name);
    else if (group_name == "verify")
      this->verify(leaf_name);
    else if (group_name == "mc")
      this->mc(leaf_name);
    else if (group_name == "couple")
      this->couple();
    else if (group_name == "wave")
      this->wave(leaf_name);
    else
      model_show();
  } catch (const AssertionFailed& e) {
    err_ << "assertion failed: " << e.what << '\n';
    return kAssertionFailure;
  } catch (const Error& e) {
    err_ << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::ConfigError:
      case ErrorCode::InvalidArgument:
      case ErrorCode::Unsupported:  // command does not apply to the configured model
        return kConfigError;
      default:
        return kNumericalFailure;
    }
  } catch (const std::exception& e) {
    err_ << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Runner r(out, err);
  return r.run(args);
}

}  // namespace raredyn::cli
