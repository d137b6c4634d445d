#include "irlobs/config_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace irlobs {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("config field '" + field + "': " + what);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void reject_unknown(const json& obj, const std::string& prefix,
                    const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) fail(join(prefix, it.key()), "unknown field");
}

const json& require_object(const json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "expected an object");
  return j;
}

double to_double(const json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  return j.get<double>();
}

Eigen::MatrixXd to_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) fail(field, "expected a non-empty list of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Eigen::MatrixXd M;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array()) fail(field, "expected a list of rows");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      if (cols == 0) fail(field, "empty row");
      M.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      fail(field, "ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c)
      M(r, c) = to_double(row[static_cast<std::size_t>(c)], field);
  }
  return M;
}

Eigen::VectorXd to_vector(const json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected a list of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = to_double(j[i], field);
  return v;
}

json from_matrix(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

json from_vector(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

std::complex<double> to_pole(const json& j, const std::string& field) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_object()) {
    reject_unknown(j, field, {"re", "im"});
    if (!j.contains("re")) fail(join(field, "re"), "missing required field");
    const double re = to_double(j["re"], join(field, "re"));
    const double im = j.contains("im") ? to_double(j["im"], join(field, "im")) : 0.0;
    return {re, im};
  }
  fail(field, "expected a number or {re, im}");
}

K4Schedule to_k4(const json& j, const std::string& field) {
  require_object(j, field);
  reject_unknown(j, field, {"kind", "k", "a", "b"});
  if (!j.contains("kind") || !j["kind"].is_string())
    fail(join(field, "kind"), "missing required field");
  const std::string kind = j["kind"].get<std::string>();
  auto num = [&](const char* key, double def) {
    return j.contains(key) ? to_double(j[key], join(field, key)) : def;
  };
  if (kind == "constant") return K4Schedule::Constant(num("k", 1.0));
  if (kind == "exponential")
    return K4Schedule::Exponential(num("a", 0.0), num("b", 0.0), num("k", 1.0));
  if (kind == "kalman") return K4Schedule::Kalman();
  fail(join(field, "kind"), "expected constant, exponential or kalman");
}

ExcitationSpec to_excitation(const json& j, const std::string& field, int m) {
  require_object(j, field);
  reject_unknown(j, field, {"terms", "random", "cutoff"});
  ExcitationSpec spec;
  spec.channels = m;
  if (j.contains("terms")) {
    const json& terms = j["terms"];
    const std::string tf = join(field, "terms");
    if (!terms.is_array()) fail(tf, "expected one list of terms per input channel");
    if (static_cast<int>(terms.size()) > m) fail(tf, "more channels than inputs");
    for (std::size_t c = 0; c < terms.size(); ++c) {
      const std::string cf = tf + "[" + std::to_string(c) + "]";
      if (!terms[c].is_array()) fail(cf, "expected a list of terms");
      std::vector<SinusoidTerm> list;
      for (std::size_t i = 0; i < terms[c].size(); ++i) {
        const json& t = terms[c][i];
        const std::string f = cf + "[" + std::to_string(i) + "]";
        require_object(t, f);
        reject_unknown(t, f, {"amplitude", "omega", "kind"});
        for (const char* key : {"amplitude", "omega", "kind"})
          if (!t.contains(key)) fail(join(f, key), "missing required field");
        SinusoidTerm term;
        term.amplitude = to_double(t["amplitude"], join(f, "amplitude"));
        term.angular_frequency = to_double(t["omega"], join(f, "omega"));
        const std::string kind = t["kind"].is_string() ? t["kind"].get<std::string>() : "";
        if (kind == "sin") {
          term.phase = PhaseKind::kSin;
        } else if (kind == "cos") {
          term.phase = PhaseKind::kCos;
        } else {
          fail(join(f, "kind"), "expected sin or cos");
        }
        list.push_back(term);
      }
      spec.terms.push_back(list);
    }
  }
  if (j.contains("random")) {
    const json& r = j["random"];
    const std::string rf = join(field, "random");
    require_object(r, rf);
    reject_unknown(r, rf, {"lower", "upper", "hold", "seed"});
    UniformRandomSpec u;
    if (r.contains("lower")) u.lower = to_double(r["lower"], join(rf, "lower"));
    if (r.contains("upper")) u.upper = to_double(r["upper"], join(rf, "upper"));
    if (r.contains("hold")) u.hold = to_double(r["hold"], join(rf, "hold"));
    if (r.contains("seed")) {
      if (!r["seed"].is_number_unsigned()) fail(join(rf, "seed"), "expected an unsigned integer");
      u.seed = r["seed"].get<std::uint64_t>();
    }
    spec.random = u;
  }
  if (j.contains("cutoff")) spec.cutoff = to_double(j["cutoff"], join(field, "cutoff"));
  return spec;
}

ExperimentConfig from_json(const json& root) {
  require_object(root, "<root>");
  reject_unknown(root, "", {"name", "system", "cost", "parameterization", "excitation",
                            "observer", "simulation", "stack", "sweep", "output"});
  ExperimentConfig cfg;
  if (root.contains("name")) {
    if (!root["name"].is_string()) fail("name", "expected a string");
    cfg.name = root["name"].get<std::string>();
  }

  if (!root.contains("system")) fail("system", "missing required field");
  const json& sys = require_object(root["system"], "system");
  reject_unknown(sys, "system", {"A", "B", "C"});
  for (const char* key : {"A", "B", "C"})
    if (!sys.contains(key)) fail(join("system", key), "missing required field");
  cfg.A = to_matrix(sys["A"], "system.A");
  cfg.B = to_matrix(sys["B"], "system.B");
  cfg.C = to_matrix(sys["C"], "system.C");

  if (!root.contains("cost")) fail("cost", "missing required field");
  const json& cost = require_object(root["cost"], "cost");
  reject_unknown(cost, "cost", {"Q", "R"});
  for (const char* key : {"Q", "R"})
    if (!cost.contains(key)) fail(join("cost", key), "missing required field");
  cfg.Q = to_matrix(cost["Q"], "cost.Q");
  cfg.R = to_matrix(cost["R"], "cost.R");

  if (root.contains("parameterization")) {
    const json& p = root["parameterization"];
    const std::string s = p.is_string() ? p.get<std::string>() : "";
    if (s == "full") {
      cfg.parameterization = QParameterization::kFullSymmetric;
    } else if (s == "diagonal_q") {
      cfg.parameterization = QParameterization::kDiagonalQ;
    } else {
      fail("parameterization", "expected full or diagonal_q");
    }
  }

  const int m = static_cast<int>(cfg.B.cols());
  cfg.excitation.channels = m;
  if (root.contains("excitation")) cfg.excitation = to_excitation(root["excitation"], "excitation", m);

  if (!root.contains("observer")) fail("observer", "missing required field");
  const json& ob = require_object(root["observer"], "observer");
  reject_unknown(ob, "observer", {"variant", "poles", "K1", "k2", "nu", "mlo_scheme", "k4",
                                  "gate_max_condition", "kalman"});
  if (!ob.contains("variant") || !ob["variant"].is_string())
    fail("observer.variant", "missing required field");
  try {
    cfg.variant = parse_variant(ob["variant"].get<std::string>());
  } catch (const std::invalid_argument& e) {
    fail("observer.variant", e.what());
  }
  if (ob.contains("poles")) {
    if (!ob["poles"].is_array()) fail("observer.poles", "expected a list");
    for (std::size_t i = 0; i < ob["poles"].size(); ++i)
      cfg.observer_poles.push_back(
          to_pole(ob["poles"][i], "observer.poles[" + std::to_string(i) + "]"));
  }
  if (ob.contains("K1")) cfg.K1 = to_matrix(ob["K1"], "observer.K1");
  if (ob.contains("k2")) cfg.k2 = to_double(ob["k2"], "observer.k2");
  if (ob.contains("nu")) cfg.nu = to_double(ob["nu"], "observer.nu");
  if (ob.contains("mlo_scheme")) {
    const std::string s = ob["mlo_scheme"].is_string() ? ob["mlo_scheme"].get<std::string>() : "";
    if (s == "exact_hold") {
      cfg.mlo_scheme = MloScheme::kExactHold;
    } else if (s == "rk4") {
      cfg.mlo_scheme = MloScheme::kRk4;
    } else {
      fail("observer.mlo_scheme", "expected exact_hold or rk4");
    }
  }
  if (ob.contains("k4")) cfg.k4 = to_k4(ob["k4"], "observer.k4");
  if (ob.contains("gate_max_condition")) {
    const json& g = ob["gate_max_condition"];
    if (g.is_null()) {
      cfg.gate_max_condition = std::numeric_limits<double>::infinity();
    } else {
      cfg.gate_max_condition = to_double(g, "observer.gate_max_condition");
    }
  }
  if (ob.contains("kalman")) {
    const json& k = require_object(ob["kalman"], "observer.kalman");
    reject_unknown(k, "observer.kalman",
                   {"q_proc_x", "q_proc_w", "r_floor", "r_w_scale", "p_x0", "p_w0",
                    "R_meas_x", "R_meas_w"});
    auto num = [&](const char* key, double& out) {
      if (k.contains(key)) out = to_double(k[key], join("observer.kalman", key));
    };
    num("q_proc_x", cfg.kalman.q_proc_x);
    num("q_proc_w", cfg.kalman.q_proc_w);
    num("r_floor", cfg.kalman.r_floor);
    num("r_w_scale", cfg.kalman.r_w_scale);
    num("p_x0", cfg.kalman.p_x0);
    num("p_w0", cfg.kalman.p_w0);
    if (k.contains("R_meas_x")) cfg.kalman.R_meas_x = to_matrix(k["R_meas_x"], "observer.kalman.R_meas_x");
    if (k.contains("R_meas_w")) cfg.kalman.R_meas_w = to_matrix(k["R_meas_w"], "observer.kalman.R_meas_w");
  }

  if (root.contains("simulation")) {
    const json& s = require_object(root["simulation"], "simulation");
    reject_unknown(s, "simulation",
                   {"dt", "horizon", "noise_sd", "noise_sd_y", "noise_sd_u", "ss_window",
                    "trials", "seed", "x0", "x_hat0", "w_hat0", "diagnostics", "record_every"});
    auto num = [&](const char* key, double& out) {
      if (s.contains(key)) out = to_double(s[key], join("simulation", key));
    };
    num("dt", cfg.dt);
    num("horizon", cfg.horizon);
    if (s.contains("noise_sd")) {
      cfg.noise_sd_y = cfg.noise_sd_u = to_double(s["noise_sd"], "simulation.noise_sd");
    }
    num("noise_sd_y", cfg.noise_sd_y);
    num("noise_sd_u", cfg.noise_sd_u);
    num("ss_window", cfg.ss_window);
    if (s.contains("trials")) {
      if (!s["trials"].is_number_integer()) fail("simulation.trials", "expected an integer");
      cfg.trials = s["trials"].get<int>();
    }
    if (s.contains("seed")) {
      if (!s["seed"].is_number_unsigned()) fail("simulation.seed", "expected an unsigned integer");
      cfg.seed = s["seed"].get<std::uint64_t>();
    }
    if (s.contains("x0")) cfg.x0 = to_vector(s["x0"], "simulation.x0");
    if (s.contains("x_hat0")) cfg.x_hat0 = to_vector(s["x_hat0"], "simulation.x_hat0");
    if (s.contains("w_hat0")) cfg.w_hat0 = to_vector(s["w_hat0"], "simulation.w_hat0");
    if (s.contains("diagnostics")) {
      if (!s["diagnostics"].is_boolean()) fail("simulation.diagnostics", "expected a boolean");
      cfg.diagnostics = s["diagnostics"].get<bool>();
    }
    if (s.contains("record_every")) {
      if (!s["record_every"].is_number_integer())
        fail("simulation.record_every", "expected an integer");
      cfg.record_every = s["record_every"].get<int>();
    }
  }

  if (root.contains("stack")) {
    const json& s = require_object(root["stack"], "stack");
    reject_unknown(s, "stack", {"capacity", "purge_interval", "buffer_size"});
    if (s.contains("capacity")) {
      if (!s["capacity"].is_number_integer()) fail("stack.capacity", "expected an integer");
      cfg.stack_capacity = s["capacity"].get<int>();
    }
    if (s.contains("purge_interval"))
      cfg.purge_interval = to_double(s["purge_interval"], "stack.purge_interval");
    if (s.contains("buffer_size")) {
      if (!s["buffer_size"].is_number_integer()) fail("stack.buffer_size", "expected an integer");
      cfg.buffer_size = s["buffer_size"].get<int>();
    }
  }

  if (root.contains("sweep")) {
    const json& s = require_object(root["sweep"], "sweep");
    reject_unknown(s, "sweep", {"variants", "noise_levels"});
    if (s.contains("variants")) {
      if (!s["variants"].is_array()) fail("sweep.variants", "expected a list");
      for (const auto& v : s["variants"]) {
        if (!v.is_string()) fail("sweep.variants", "expected variant names");
        try {
          cfg.variants.push_back(parse_variant(v.get<std::string>()));
        } catch (const std::invalid_argument& e) {
          fail("sweep.variants", e.what());
        }
      }
    }
    if (s.contains("noise_levels")) {
      const Eigen::VectorXd lv = to_vector(s["noise_levels"], "sweep.noise_levels");
      cfg.noise_levels.assign(lv.data(), lv.data() + lv.size());
    }
  }

  if (root.contains("output")) {
    const json& o = require_object(root["output"], "output");
    reject_unknown(o, "output", {"dir", "trial_csv"});
    if (o.contains("dir")) {
      if (!o["dir"].is_string()) fail("output.dir", "expected a string");
      cfg.output_dir = o["dir"].get<std::string>();
    }
    if (o.contains("trial_csv")) {
      if (!o["trial_csv"].is_boolean()) fail("output.trial_csv", "expected a boolean");
      cfg.write_trial_csv = o["trial_csv"].get<bool>();
    }
  }

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json root;
  root["name"] = cfg.name;
  root["system"] = {{"A", from_matrix(cfg.A)}, {"B", from_matrix(cfg.B)}, {"C", from_matrix(cfg.C)}};
  root["cost"] = {{"Q", from_matrix(cfg.Q)}, {"R", from_matrix(cfg.R)}};
  root["parameterization"] =
      cfg.parameterization == QParameterization::kDiagonalQ ? "diagonal_q" : "full";

  json exc = json::object();
  json terms = json::array();
  for (const auto& channel : cfg.excitation.terms) {
    json list = json::array();
    for (const auto& t : channel)
      list.push_back({{"amplitude", t.amplitude},
                      {"omega", t.angular_frequency},
                      {"kind", t.phase == PhaseKind::kSin ? "sin" : "cos"}});
    terms.push_back(list);
  }
  exc["terms"] = terms;
  if (cfg.excitation.random) {
    const auto& r = *cfg.excitation.random;
    exc["random"] = {{"lower", r.lower}, {"upper", r.upper}, {"hold", r.hold}, {"seed", r.seed}};
  }
  if (cfg.excitation.cutoff) exc["cutoff"] = *cfg.excitation.cutoff;
  root["excitation"] = exc;

  json ob;
  ob["variant"] = to_string(cfg.variant);
  json poles = json::array();
  for (const auto& p : cfg.observer_poles) {
    if (p.imag() == 0.0) {
      poles.push_back(p.real());
    } else {
      poles.push_back({{"re", p.real()}, {"im", p.imag()}});
    }
  }
  ob["poles"] = poles;
  if (cfg.K1) ob["K1"] = from_matrix(*cfg.K1);
  ob["k2"] = cfg.k2;
  ob["nu"] = cfg.nu;
  ob["mlo_scheme"] = cfg.mlo_scheme == MloScheme::kRk4 ? "rk4" : "exact_hold";
  switch (cfg.k4.kind) {
    case K4Schedule::Kind::kConstant: ob["k4"] = {{"kind", "constant"}, {"k", cfg.k4.k}}; break;
    case K4Schedule::Kind::kExponential:
      ob["k4"] = {{"kind", "exponential"}, {"a", cfg.k4.a}, {"b", cfg.k4.b}, {"k", cfg.k4.k}};
      break;
    case K4Schedule::Kind::kKalman: ob["k4"] = {{"kind", "kalman"}}; break;
  }
  if (std::isfinite(cfg.gate_max_condition)) {
    ob["gate_max_condition"] = cfg.gate_max_condition;
  } else {
    ob["gate_max_condition"] = nullptr;
  }
  json k = {{"q_proc_x", cfg.kalman.q_proc_x}, {"q_proc_w", cfg.kalman.q_proc_w},
            {"r_floor", cfg.kalman.r_floor},   {"r_w_scale", cfg.kalman.r_w_scale},
            {"p_x0", cfg.kalman.p_x0},         {"p_w0", cfg.kalman.p_w0}};
  if (cfg.kalman.R_meas_x) k["R_meas_x"] = from_matrix(*cfg.kalman.R_meas_x);
  if (cfg.kalman.R_meas_w) k["R_meas_w"] = from_matrix(*cfg.kalman.R_meas_w);
  ob["kalman"] = k;
  root["observer"] = ob;

  json sim = {{"dt", cfg.dt},
              {"horizon", cfg.horizon},
              {"noise_sd_y", cfg.noise_sd_y},
              {"noise_sd_u", cfg.noise_sd_u},
              {"ss_window", cfg.ss_window},
              {"trials", cfg.trials},
              {"seed", cfg.seed},
              {"diagnostics", cfg.diagnostics},
              {"record_every", cfg.record_every}};
  if (cfg.x0.size()) sim["x0"] = from_vector(cfg.x0);
  if (cfg.x_hat0.size()) sim["x_hat0"] = from_vector(cfg.x_hat0);
  if (cfg.w_hat0.size()) sim["w_hat0"] = from_vector(cfg.w_hat0);
  root["simulation"] = sim;
  root["stack"] = {{"capacity", cfg.stack_capacity},
                   {"purge_interval", cfg.purge_interval},
                   {"buffer_size", cfg.buffer_size}};
  json sweep = json::object();
  if (!cfg.variants.empty()) {
    json vs = json::array();
    for (auto v : cfg.variants) vs.push_back(to_string(v));
    sweep["variants"] = vs;
  }
  if (!cfg.noise_levels.empty()) sweep["noise_levels"] = cfg.noise_levels;
  root["sweep"] = sweep;
  root["output"] = {{"dir", cfg.output_dir}, {"trial_csv", cfg.write_trial_csv}};
  return root;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::runtime_error("bad number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(root);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& config) { return to_json(config).dump(2); }

void save_config(const ExperimentConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << dump_config(config) << "\n";
}

void write_trial_csv(const TrialResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  const auto k = r.wtilde.empty() ? 0 : r.wtilde.front().size();
  const auto n = r.xtilde.empty() ? 0 : r.xtilde.front().size();
  out << "t,metric";
  for (Eigen::Index i = 1; i <= k; ++i) out << ",wtilde_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",xtilde_" << i;
  out << ",cond_number,gate\n";
  for (std::size_t s = 0; s < r.t.size(); ++s) {
    out << fmt(r.t[s]) << ',' << fmt(r.metric[s]);
    for (Eigen::Index i = 0; i < k; ++i) out << ',' << fmt(r.wtilde[s](i));
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << fmt(r.xtilde[s](i));
    out << ',' << fmt(r.cond_number[s]) << ',' << r.gate[s] << '\n';
  }
}

std::string format_summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "variant,noise_sd,tt_mean,tt_sd,ss_mean,ss_sd,diverged\n";
  for (const auto& row : rows)
    out << row.variant << ',' << fmt(row.noise_sd) << ',' << fmt(row.tt_mean) << ','
        << fmt(row.tt_sd) << ',' << fmt(row.ss_mean) << ',' << fmt(row.ss_sd) << ','
        << row.diverged << '\n';
  return out.str();
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << format_summary_csv(rows);
}

std::vector<SummaryRow> read_summary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "variant,noise_sd,tt_mean,tt_sd,ss_mean,ss_sd,diverged")
    throw std::runtime_error("unexpected summary header in '" + path + "'");
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 7) throw std::runtime_error("malformed summary row: " + line);
    SummaryRow row;
    row.variant = cells[0];
    row.noise_sd = parse_double(cells[1]);
    row.tt_mean = parse_double(cells[2]);
    row.tt_sd = parse_double(cells[3]);
    row.ss_mean = parse_double(cells[4]);
    row.ss_sd = parse_double(cells[5]);
    row.diverged = std::stoi(cells[6]);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace irlobs
