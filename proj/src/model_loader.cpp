#include "raredyn/model_loader.hpp"

#include "raredyn/errors.hpp"

namespace raredyn {

namespace {

std::string at_line(const Config& cfg, const std::string& section, const std::string& key) {
  return " (line " + std::to_string(cfg.entry(section, key).line) + ")";
}

}  // namespace

FiniteMarkovKernel chain_from_config(const Config& cfg) {
  if (!cfg.has("chain", "matrix")) throw Error(ErrorCode::ConfigError, "[chain] needs a matrix");
  const auto& me = cfg.entry("chain", "matrix");
  const auto rows = parse_number_rows(me.value, me.line);
  const std::size_t n = rows.size();
  Eigen::MatrixXd P(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n)
      throw Error(ErrorCode::ConfigError, "matrix row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                                              " entries, expected " + std::to_string(n) + at_line(cfg, "chain", "matrix"));
    for (std::size_t j = 0; j < n; ++j) P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  std::vector<std::string> labels;
  if (cfg.has("chain", "states")) {
    labels = split_trimmed(cfg.get("chain", "states"), ',');
    if (labels.size() != n)
      throw Error(ErrorCode::ConfigError, "states lists " + std::to_string(labels.size()) + " labels for a " +
                                              std::to_string(n) + "-state matrix" + at_line(cfg, "chain", "states"));
  } else {
    for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  }
  std::vector<std::vector<double>> coords;
  if (cfg.has("chain", "coords")) {
    const auto& ce = cfg.entry("chain", "coords");
    coords = parse_number_rows(ce.value, ce.line);
    if (coords.size() != n) throw Error(ErrorCode::ConfigError, "coords must give one row per state" + at_line(cfg, "chain", "coords"));
  } else {
    for (std::size_t i = 0; i < n; ++i) coords.push_back({static_cast<double>(i)});
  }
  try {
    return FiniteMarkovKernel(labels, coords, P);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(e.what()) + at_line(cfg, "chain", "matrix"));
  }
}

LoadedModel load_model(const Config& cfg) {
  LoadedModel m;
  if (cfg.has_section("coupling")) {
    m.coupling.q = cfg.get_double_or("coupling", "q", m.coupling.q);
    m.coupling.g_slope = cfg.get_double_or("coupling", "g_slope", m.coupling.g_slope);
    m.coupling.validate();
  }
  const bool builtin = cfg.has("builtin", "name");
  if (builtin && cfg.has_section("chain"))
    throw Error(ErrorCode::ConfigError, "give either [chain] or [builtin], not both");
  if (!builtin) {
    if (!cfg.has_section("chain")) throw Error(ErrorCode::ConfigError, "config defines no model ([chain] or [builtin])");
    m.kind = "chain";
    m.chain = chain_from_config(cfg);
    return m;
  }
  const std::string name = cfg.get("builtin", "name");
  if (name == "toy") {
    m.kind = "chain";
    m.chain = toy_chain();
  } else if (name == "iid") {
    if (!cfg.has("builtin", "law")) throw Error(ErrorCode::ConfigError, "builtin iid needs law" + at_line(cfg, "builtin", "name"));
    const auto& e = cfg.entry("builtin", "law");
    m.kind = "chain";
    m.chain = iid_chain(parse_number_list(e.value, e.line));
  } else if (name == "contraction") {
    const std::string s = "contraction";
    const double beta2 = cfg.get_double_or(s, "beta2", 0.5);
    m.kind = "contraction";
    m.contraction = contraction_toy(cfg.get_double_or(s, "beta1", beta2), cfg.get_double_or(s, "c1", 1.0), beta2,
                                    cfg.get_double_or(s, "kick_bound", 1.0),
                                    static_cast<std::size_t>(cfg.get_int_or(s, "dim", 2)));
  } else if (name == "wave") {
    m.kind = "wave";
    m.wave = WaveConfig::from_config(cfg);
  } else {
    throw Error(ErrorCode::ConfigError, "unknown builtin model '" + name + "'" + at_line(cfg, "builtin", "name"));
  }
  return m;
}

RdsModel LoadedModel::rds() const {
  if (chain) return as_rds_model(*chain);
  if (contraction) return contraction->model();
  if (wave) return WaveModel(*wave).as_rds_model();
  throw Error(ErrorCode::ConfigError, "no model loaded");
}

const FiniteMarkovKernel& LoadedModel::kernel() const {
  if (!chain) throw Error(ErrorCode::Unsupported, "this command needs a finite chain, the model is " + kind);
  return *chain;
}

}  // namespace raredyn
