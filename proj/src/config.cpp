#include "fracquench/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fracquench::config {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) { throw ConfigError(field + ": " + why); }

// Reads object members by name, rejecting unknown keys.
class Reader {
 public:
  Reader(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) fail(where(""), "expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_same_v<T, int>) {
        if (!it->is_number_integer()) throw std::invalid_argument("expected an integer");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw std::invalid_argument("expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw std::invalid_argument("expected a string");
      }
      out = it->get<T>();
    } catch (const std::exception& e) {
      fail(where(key), e.what());
    }
  }

  void list(const char* key, std::vector<double>& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_array()) fail(where(key), "expected an array of numbers");
    out.clear();
    for (const auto& v : *it) {
      if (!v.is_number()) fail(where(key), "expected an array of numbers");
      out.push_back(v.get<double>());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key) const {
    return prefix_.empty() ? key : (key.empty() ? prefix_ : prefix_ + "." + key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(where(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void read_run(const json& j, RunConfig& c, const std::string& prefix) {
  Reader r(j, prefix);
  r.get("alpha", c.alpha);
  r.get("L", c.length);
  r.get("u_star", c.u_star);
  if (const json* s = r.child("source")) {
    Reader q(*s, r.where("source"));
    q.get("family", c.source.family);
    q.get("kappa", c.source.kappa);
    q.get("p", c.source.p);
    q.get("slope", c.source.slope);
    q.finish();
  }
  if (const json* s = r.child("u0")) {
    Reader q(*s, r.where("u0"));
    q.get("family", c.u0.family);
    q.get("amplitude", c.u0.amplitude);
    q.finish();
  }
  if (const json* s = r.child("grid")) {
    Reader q(*s, r.where("grid"));
    q.get("nx", c.grid.nx);
    q.finish();
  }
  if (const json* s = r.child("time")) {
    Reader q(*s, r.where("time"));
    q.get("policy", c.time.policy);
    q.get("dt0", c.time.dt0);
    q.get("r", c.time.r);
    q.get("t_max", c.time.t_max);
    q.get("increment_cap", c.time.increment_cap);
    q.get("dt_min_factor", c.time.dt_min_factor);
    q.get("soe", c.time.soe);
    q.get("soe_tol", c.time.soe_tol);
    q.finish();
  }
  if (const json* s = r.child("detect")) {
    Reader q(*s, r.where("detect"));
    q.get("eps_q", c.detect.eps_q);
    q.get("c_tilde", c.detect.c_tilde);
    q.finish();
  }
  if (const json* s = r.child("verify")) {
    Reader q(*s, r.where("verify"));
    q.get("refinements", c.verify.refinements);
    q.get("theta", c.verify.theta);
    q.get("floor_x0", c.verify.floor_x0);
    q.get("floor_x1", c.verify.floor_x1);
    q.get("floor_t0", c.verify.floor_t0);
    q.get("eta", c.verify.eta);
    q.get("coupling_tol", c.verify.coupling_tol);
    q.get("commutation_tol", c.verify.commutation_tol);
    q.finish();
  }
  r.get("output", c.output);
  r.get("deterministic", c.deterministic);
  r.finish();
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

solver::ProblemSpec RunConfig::problem() const {
  solver::ProblemSpec s;
  s.alpha = alpha;
  s.length = length;
  s.u_star = u_star;
  if (source.family == "reciprocal") s.source.family = solver::SourceFamily::Reciprocal;
  else if (source.family == "zero") s.source.family = solver::SourceFamily::Zero;
  else if (source.family == "constant") s.source.family = solver::SourceFamily::Constant;
  else if (source.family == "affine") s.source.family = solver::SourceFamily::Affine;
  else fail("source.family", "unknown family '" + source.family + "'");
  s.source.kappa = source.kappa;
  s.source.p = source.p;
  s.source.slope = source.slope;
  if (u0.family == "zero") s.u0.family = solver::InitialFamily::Zero;
  else if (u0.family == "bump") s.u0.family = solver::InitialFamily::Bump;
  else fail("u0.family", "unknown family '" + u0.family + "'");
  s.u0.amplitude = u0.amplitude;
  return s;
}

SpatialGrid RunConfig::spatial_grid() const { return SpatialGrid(length, grid.nx); }

solver::TimeControl RunConfig::time_control() const {
  solver::TimeControl t;
  t.policy = time.policy == "uniform" ? solver::MeshPolicy::Uniform : solver::MeshPolicy::Graded;
  t.dt0 = time.dt0;
  t.r = time.r;
  t.t_max = time.t_max;
  t.increment_cap = time.increment_cap;
  t.dt_min_factor = time.dt_min_factor;
  t.soe = time.soe;
  t.soe_tol = time.soe_tol;
  return t;
}

solver::DetectControl RunConfig::detect_control() const {
  solver::DetectControl d;
  d.eps_q = detect.eps_q;
  d.c_tilde = detect.c_tilde;
  return d;
}

void RunConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha", "must lie in (0, 1)");
  if (!positive(length)) fail("L", "must be > 0");
  if (!positive(u_star)) fail("u_star", "must be > 0");
  if (grid.nx < 16 || grid.nx % 2 != 0) fail("grid.nx", "must be even and >= 16");
  if (time.policy != "graded" && time.policy != "uniform") fail("time.policy", "must be 'graded' or 'uniform'");
  if (!positive(time.dt0)) fail("time.dt0", "must be > 0");
  if (!(time.r == 0.0 || time.r >= 1.0)) fail("time.r", "must be 0 (automatic) or >= 1");
  if (!positive(time.t_max)) fail("time.t_max", "must be > 0");
  if (!positive(time.increment_cap)) fail("time.increment_cap", "must be > 0");
  if (!(time.dt_min_factor > 0.0 && time.dt_min_factor < 1.0)) fail("time.dt_min_factor", "must lie in (0, 1)");
  if (!positive(time.soe_tol)) fail("time.soe_tol", "must be > 0");
  if (!(detect.eps_q >= 0.0 && detect.eps_q < u_star)) fail("detect.eps_q", "must lie in [0, u_star)");
  if (!(detect.c_tilde > 0.0 && detect.c_tilde < 1.0)) fail("detect.c_tilde", "must lie in (0, 1)");
  if (verify.refinements < 0 || verify.refinements > 4) fail("verify.refinements", "must lie in [0, 4]");
  if (!(verify.theta > 0.0 && verify.theta < 1.0)) fail("verify.theta", "must lie in (0, 1)");
  if (!(verify.floor_x0 >= 0.0 && verify.floor_x0 <= verify.floor_x1 && verify.floor_x1 <= 1.0))
    fail("verify.floor_x0", "need 0 <= floor_x0 <= floor_x1 <= 1");
  if (!(verify.floor_t0 >= 0.0 && verify.floor_t0 < 1.0)) fail("verify.floor_t0", "must lie in [0, 1)");
  if (!(verify.eta >= 0.0 && verify.eta < 1.0)) fail("verify.eta", "must lie in [0, 1)");
  if (!(verify.coupling_tol >= 0.0)) fail("verify.coupling_tol", "must be >= 0");
  if (!positive(verify.commutation_tol)) fail("verify.commutation_tol", "must be > 0");
  if (output.empty()) fail("output", "must not be empty");
  const solver::ProblemSpec spec = problem();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig SweepConfig::cell(std::size_t i) const {
  if (i >= cells()) throw std::out_of_range("SweepConfig::cell");
  RunConfig c = base;
  const std::size_t k = i % kappa.size();
  const std::size_t l = (i / kappa.size()) % length.size();
  const std::size_t a = i / (kappa.size() * length.size());
  c.alpha = alpha[a];
  c.length = length[l];
  c.source.kappa = kappa[k];
  return c;
}

void SweepConfig::validate() const {
  if (alpha.empty()) fail("alpha", "axis must not be empty");
  if (length.empty()) fail("L", "axis must not be empty");
  if (kappa.empty()) fail("kappa", "axis must not be empty");
  if (width < 1) fail("width", "must be >= 1");
  if (output.empty()) fail("output", "must not be empty");
  for (std::size_t i = 0; i < cells(); ++i) {
    try {
      cell(i).validate();
    } catch (const ConfigError& e) {
      throw ConfigError("cell " + std::to_string(i) + ": " + e.what());
    }
  }
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["alpha"] = c.alpha;
  j["L"] = c.length;
  j["u_star"] = c.u_star;
  j["source"] = {{"family", c.source.family}, {"kappa", c.source.kappa}, {"p", c.source.p}, {"slope", c.source.slope}};
  j["u0"] = {{"family", c.u0.family}, {"amplitude", c.u0.amplitude}};
  j["grid"] = {{"nx", c.grid.nx}};
  j["time"] = {{"policy", c.time.policy},
               {"dt0", c.time.dt0},
               {"r", c.time.r},
               {"t_max", c.time.t_max},
               {"increment_cap", c.time.increment_cap},
               {"dt_min_factor", c.time.dt_min_factor},
               {"soe", c.time.soe},
               {"soe_tol", c.time.soe_tol}};
  j["detect"] = {{"eps_q", c.detect.eps_q}, {"c_tilde", c.detect.c_tilde}};
  j["verify"] = {{"refinements", c.verify.refinements},
                 {"theta", c.verify.theta},
                 {"floor_x0", c.verify.floor_x0},
                 {"floor_x1", c.verify.floor_x1},
                 {"floor_t0", c.verify.floor_t0},
                 {"eta", c.verify.eta},
                 {"coupling_tol", c.verify.coupling_tol},
                 {"commutation_tol", c.verify.commutation_tol}};
  j["output"] = c.output;
  j["deterministic"] = c.deterministic;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  read_run(j, c, "");
  return c;
}

ordered_json to_json(const SweepConfig& c) {
  ordered_json j;
  j["alpha"] = c.alpha;
  j["L"] = c.length;
  j["kappa"] = c.kappa;
  j["width"] = c.width;
  j["output"] = c.output;
  ordered_json base = to_json(c.base);
  base.erase("alpha");
  base.erase("L");
  base.erase("output");
  base["source"].erase("kappa");
  j["base"] = std::move(base);
  return j;
}

SweepConfig sweep_config_from_json(const json& j) {
  SweepConfig c;
  Reader r(j, "");
  r.list("alpha", c.alpha);
  r.list("L", c.length);
  r.list("kappa", c.kappa);
  r.get("width", c.width);
  r.get("output", c.output);
  if (const json* b = r.child("base")) read_run(*b, c.base, "base");
  r.finish();
  if (!j.contains("kappa")) c.kappa = {c.base.source.kappa};
  return c;
}

json parse_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << origin << ":" << line << ":" << col << ": parse error: " << e.what();
    throw ConfigError(os.str());
  }
}

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  RunConfig c = run_config_from_json(parse_text(slurp(path), path));
  c.validate();
  return c;
}

SweepConfig load_sweep_config(const std::string& path) {
  SweepConfig c = sweep_config_from_json(parse_text(slurp(path), path));
  c.validate();
  return c;
}

}  // namespace fracquench::config
