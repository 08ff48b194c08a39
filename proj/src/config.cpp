#include "backstep/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "backstep/errors.hpp"

namespace backstep {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown key '" + it.key() + "' in section " + where);
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigError(name + " must be a nested array (row-major)");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols)
      throw ConfigError(name + " has ragged rows");
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

Eigen::VectorXd parse_vector(const json& j, const std::string& name) {
  if (!j.is_array()) throw ConfigError(name + " must be an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace

RunConfig default_config() {
  RunConfig cfg;
  cfg.plant.A = Eigen::MatrixXd::Zero(2, 2);
  cfg.plant.A(0, 1) = 1.0;
  cfg.plant.B = Eigen::VectorXd::Zero(2);
  cfg.plant.B(1) = 1.0;
  cfg.plant.lambda = 20.0;
  cfg.plant.l = 1.0;
  cfg.plant.xi = 0.3;
  cfg.poles = {{-1.0, 0.0}, {-2.0, 0.0}};
  cfg.Q = Eigen::MatrixXd::Identity(2, 2);
  cfg.initial.X0 = Eigen::VectorXd::Zero(2);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json root;
  try {
    in >> root;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }

  reject_unknown(root, {"plant", "synthesis", "simulation", "output"}, "root");
  if (!root.contains("plant")) throw ConfigError("missing section 'plant'");

  RunConfig cfg;

  const json& p = root["plant"];
  reject_unknown(p, {"A", "B", "lambda", "l", "xi"}, "plant");
  for (const char* key : {"A", "B", "lambda", "l", "xi"})
    if (!p.contains(key))
      throw ConfigError(std::string("plant section misses '") + key + "'");
  cfg.plant.A = parse_matrix(p["A"], "plant.A");
  cfg.plant.B = parse_vector(p["B"], "plant.B");
  cfg.plant.lambda = p["lambda"].get<double>();
  cfg.plant.l = p["l"].get<double>();
  cfg.plant.xi = p["xi"].get<double>();
  const int n = cfg.plant.n();

  // defaults that depend on n
  cfg.poles.clear();
  for (int k = 1; k <= n; ++k) cfg.poles.emplace_back(-static_cast<double>(k), 0.0);
  cfg.Q = Eigen::MatrixXd::Identity(n, n);
  cfg.initial.X0 = Eigen::VectorXd::Zero(n);

  if (root.contains("synthesis")) {
    const json& s = root["synthesis"];
    reject_unknown(s, {"poles", "Q", "margin", "kernel_h", "tail_tol",
                       "feedback_sign"},
                   "synthesis");
    if (s.contains("poles")) {
      const Eigen::VectorXd v = parse_vector(s["poles"], "synthesis.poles");
      cfg.poles.clear();
      for (int k = 0; k < v.size(); ++k) cfg.poles.emplace_back(v(k), 0.0);
    }
    if (s.contains("Q")) cfg.Q = parse_matrix(s["Q"], "synthesis.Q");
    if (s.contains("margin")) cfg.margin = s["margin"].get<double>();
    if (s.contains("kernel_h")) cfg.kernel_h = s["kernel_h"].get<double>();
    if (s.contains("tail_tol")) cfg.tail_tol = s["tail_tol"].get<double>();
    if (s.contains("feedback_sign")) {
      cfg.feedback_sign = s["feedback_sign"].get<int>();
      if (cfg.feedback_sign != 1 && cfg.feedback_sign != -1)
        throw ConfigError("synthesis.feedback_sign must be 1 or -1");
    }
  }

  if (root.contains("simulation")) {
    const json& s = root["simulation"];
    reject_unknown(
        s, {"scheme", "h", "dt", "T", "record_every", "initial"}, "simulation");
    if (s.contains("scheme")) {
      const std::string name = s["scheme"].get<std::string>();
      if (name == "crank_nicolson")
        cfg.scheme = Scheme::crank_nicolson;
      else if (name == "implicit_euler")
        cfg.scheme = Scheme::implicit_euler;
      else
        throw ConfigError("simulation.scheme must be crank_nicolson or implicit_euler");
    }
    if (s.contains("h")) cfg.h = s["h"].get<double>();
    if (s.contains("dt")) cfg.dt = s["dt"].get<double>();
    if (s.contains("T")) cfg.T = s["T"].get<double>();
    if (s.contains("record_every"))
      cfg.record_every = s["record_every"].get<int>();
    if (s.contains("initial")) {
      const json& ini = s["initial"];
      reject_unknown(ini, {"type", "modes", "X0"}, "simulation.initial");
      if (ini.contains("type")) {
        cfg.initial.type = ini["type"].get<std::string>();
        if (cfg.initial.type != "compatible" && cfg.initial.type != "eigenmode" &&
            cfg.initial.type != "zero")
          throw ConfigError("initial.type must be compatible, eigenmode or zero");
      }
      if (ini.contains("modes")) {
        cfg.initial.modes.clear();
        for (const auto& pair : ini["modes"]) {
          if (!pair.is_array() || pair.size() != 2)
            throw ConfigError("initial.modes entries must be [mode, amplitude]");
          cfg.initial.modes.emplace_back(pair[0].get<int>(),
                                         pair[1].get<double>());
        }
      }
      if (ini.contains("X0")) {
        cfg.initial.X0 = parse_vector(ini["X0"], "initial.X0");
        if (cfg.initial.X0.size() != n)
          throw ConfigError("initial.X0 must have n entries");
      }
    }
  }

  if (root.contains("output")) {
    const json& o = root["output"];
    reject_unknown(o, {"directory", "probes"}, "output");
    if (o.contains("directory")) cfg.out_dir = o["directory"].get<std::string>();
    if (o.contains("probes")) {
      cfg.probes.clear();
      for (const auto& v : o["probes"]) cfg.probes.push_back(v.get<double>());
    }
  }

  if (cfg.margin <= 1.0) throw ConfigError("synthesis.margin must be > 1");
  if (cfg.h <= 0.0 || cfg.dt <= 0.0 || cfg.T <= 0.0 || cfg.record_every < 1 ||
      cfg.kernel_h <= 0.0 || cfg.tail_tol <= 0.0)
    throw ConfigError("h, dt, T, kernel_h, tail_tol must be positive; record_every >= 1");
  return cfg;
}

std::string config_to_json(const RunConfig& cfg) {
  json root;
  const int n = cfg.plant.n();
  json A = json::array();
  for (int i = 0; i < n; ++i) {
    json row = json::array();
    for (int k = 0; k < n; ++k) row.push_back(cfg.plant.A(i, k));
    A.push_back(row);
  }
  json B = json::array();
  for (int i = 0; i < n; ++i) B.push_back(cfg.plant.B(i));
  root["plant"] = {{"A", A},
                   {"B", B},
                   {"lambda", cfg.plant.lambda},
                   {"l", cfg.plant.l},
                   {"xi", cfg.plant.xi}};

  json poles = json::array();
  for (const auto& pole : cfg.poles) poles.push_back(pole.real());
  json Q = json::array();
  for (int i = 0; i < n; ++i) {
    json row = json::array();
    for (int k = 0; k < n; ++k) row.push_back(cfg.Q(i, k));
    Q.push_back(row);
  }
  root["synthesis"] = {{"poles", poles},         {"Q", Q},
                       {"margin", cfg.margin},   {"kernel_h", cfg.kernel_h},
                       {"tail_tol", cfg.tail_tol},
                       {"feedback_sign", cfg.feedback_sign}};

  json modes = json::array();
  for (const auto& m : cfg.initial.modes)
    modes.push_back(json::array({m.first, m.second}));
  json X0 = json::array();
  for (int i = 0; i < cfg.initial.X0.size(); ++i)
    X0.push_back(cfg.initial.X0(i));
  root["simulation"] = {
      {"scheme", cfg.scheme == Scheme::crank_nicolson ? "crank_nicolson"
                                                      : "implicit_euler"},
      {"h", cfg.h},
      {"dt", cfg.dt},
      {"T", cfg.T},
      {"record_every", cfg.record_every},
      {"initial", {{"type", cfg.initial.type}, {"modes", modes}, {"X0", X0}}}};

  root["output"] = {{"directory", cfg.out_dir}, {"probes", cfg.probes}};
  return root.dump(2) + "\n";
}

Eigen::VectorXd mode_profile(const Grid& grid,
                             const std::vector<std::pair<int, double>>& modes) {
  const double pi = 3.14159265358979323846;
  Eigen::VectorXd w0 = Eigen::VectorXd::Zero(grid.node_count());
  for (int i = 0; i < grid.node_count(); ++i)
    for (const auto& m : modes)
      w0(i) += m.second * std::sin(m.first * pi * grid.nodes[i] / grid.l());
  w0(0) = 0.0;
  w0(grid.node_count() - 1) = 0.0;
  return w0;
}

CascadeState make_initial_state(const RunConfig& cfg, const Grid& grid,
                                const GainSet* gains) {
  const int n = cfg.plant.n();
  if (cfg.initial.type == "zero") return zero_state(grid, n);

  const Eigen::VectorXd w0 = mode_profile(grid, cfg.initial.modes);
  if (cfg.initial.type == "eigenmode") {
    CascadeState s = zero_state(grid, n);
    s.X = cfg.initial.X0;
    s.u1 = w0.head(grid.n1() + 1);
    s.u2 = w0.tail(grid.n2() + 1);
    return s;
  }
  if (gains == nullptr)
    throw ConfigError("compatible initial data needs synthesized gains");
  return compatible_state(w0, *gains, cfg.initial.X0);
}

}  // namespace backstep
