#include "mtr/config.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace mtr {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError(key + ": trailing characters in '" + v + "'");
  return d;
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != static_cast<int>(d)) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return static_cast<int>(d);
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::istringstream in(v);
  for (std::string tok; in >> tok;) {
    if (!tok.empty() && tok.back() == ',') tok.pop_back();
    if (!tok.empty()) out.push_back(to_double(key, tok));
  }
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? " " : "") + fmt(xs[i]);
  return s;
}

struct Key {
  const char* name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define MTR_NUM(k, field)                                                                         \
  Key {                                                                                           \
    k, [](ExperimentConfig& c, const std::string& v) { c.field = to_double(k, v); },              \
        [](const ExperimentConfig& c) { return fmt(c.field); }                                    \
  }
#define MTR_INT(k, field)                                                                         \
  Key {                                                                                           \
    k, [](ExperimentConfig& c, const std::string& v) { c.field = to_int(k, v); },                 \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }                         \
  }
#define MTR_PATH(k, field)                                                                        \
  Key {                                                                                           \
    k, [](ExperimentConfig& c, const std::string& v) { c.field = v; },                            \
        [](const ExperimentConfig& c) { return c.field.string(); }                                \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      MTR_NUM("grid.extent_length", extent_length),
      MTR_INT("grid.points", points),
      {"potential.family",
       [](ExperimentConfig& c, const std::string& v) { c.potential.family = parse_potential_family(v); },
       [](const ExperimentConfig& c) { return std::string(to_string(c.potential.family)); }},
      MTR_NUM("potential.width_a_length", potential.width_a),
      MTR_NUM("potential.width_b_length", potential.width_b),
      MTR_PATH("potential.table", potential.table),
      MTR_NUM("potential.coupling_lo", coupling_lo),
      MTR_NUM("potential.coupling_hi", coupling_hi),
      {"potential.parity",
       [](ExperimentConfig& c, const std::string& v) {
         const auto p = to_list("potential.parity", v);
         if (p.size() != 3) throw ConfigError("potential.parity: expected three signs");
         for (int j = 0; j < 3; ++j) {
           if (p[static_cast<std::size_t>(j)] != 1.0 && p[static_cast<std::size_t>(j)] != -1.0)
             throw ConfigError("potential.parity: signs must be +1 or -1");
           c.parity[static_cast<std::size_t>(j)] = static_cast<int>(p[static_cast<std::size_t>(j)]);
         }
       },
       [](const ExperimentConfig& c) {
         return std::to_string(c.parity[0]) + " " + std::to_string(c.parity[1]) + " " + std::to_string(c.parity[2]);
       }},
      {"vector_potential.family",
       [](ExperimentConfig& c, const std::string& v) {
         c.vector_potential.family = parse_vector_potential_family(v);
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.vector_potential.family)); }},
      MTR_NUM("vector_potential.amplitude", vector_potential.amplitude),
      MTR_NUM("vector_potential.width_length", vector_potential.width),
      MTR_PATH("vector_potential.table1", vector_potential.tables[0]),
      MTR_PATH("vector_potential.table2", vector_potential.tables[1]),
      MTR_PATH("vector_potential.table3", vector_potential.tables[2]),
      {"sweep.lambdas", [](ExperimentConfig& c, const std::string& v) { c.lambdas = to_list("sweep.lambdas", v); },
       [](const ExperimentConfig& c) { return join(c.lambdas); }},
      MTR_NUM("tolerance.eig_relative", tol_eig_relative),
      MTR_NUM("tolerance.solve", tol_solve),
      MTR_NUM("tolerance.prop", tol_prop),
      MTR_NUM("tolerance.c_relative", tol_c_relative),
      MTR_NUM("cap.onset_fraction", cap_onset_fraction),
      MTR_NUM("cap.width_fraction", cap_width_fraction),
      MTR_NUM("cap.strength_energy", cap_strength_energy),
      MTR_INT("cap.tune", cap_tune),
      {"propagator.method",
       [](ExperimentConfig& c, const std::string& v) { c.propagator = parse_propagator_method(v); },
       [](const ExperimentConfig& c) { return std::string(to_string(c.propagator)); }},
      MTR_NUM("propagator.dt_time", dt_time),
      MTR_INT("propagator.krylov_dim", krylov_dim),
      MTR_INT("propagator.samples", samples),
      MTR_NUM("propagator.t_max_time", t_max_time),
      MTR_INT("timefit.count", timefit_count),
      MTR_PATH("model.dir", model_dir),
      MTR_PATH("output.dir", output_dir),
      {"seed", [](ExperimentConfig& c, const std::string& v) { c.seed = static_cast<unsigned>(to_int("seed", v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
  };
  return k;
}

#undef MTR_NUM
#undef MTR_INT
#undef MTR_PATH

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void validate(const ExperimentConfig& c) {
  if (!(c.extent_length > 0.0)) throw ConfigError("grid.extent_length must be > 0");
  if (c.points < 8) throw ConfigError("grid.points must be >= 8");
  if (!(c.coupling_hi > c.coupling_lo)) throw ConfigError("potential.coupling_hi must exceed coupling_lo");
  for (const auto& [name, v] : {std::pair{"tolerance.eig_relative", c.tol_eig_relative},
                                {"tolerance.solve", c.tol_solve},
                                {"tolerance.prop", c.tol_prop},
                                {"tolerance.c_relative", c.tol_c_relative}})
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be > 0");
  if (!(c.cap_onset_fraction > 0.0) || !(c.cap_width_fraction > 0.0) ||
      c.cap_onset_fraction + c.cap_width_fraction > 1.0)
    throw ConfigError("cap: need onset_fraction, width_fraction > 0 with their sum <= 1");
  if (c.cap_strength_energy < 0.0) throw ConfigError("cap.strength_energy must be >= 0");
  if (c.cap_tune != 0 && c.cap_tune != 1) throw ConfigError("cap.tune must be 0 or 1");
  if (!(c.dt_time > 0.0) || c.krylov_dim < 2 || c.samples < 2 || !(c.t_max_time > 0.0))
    throw ConfigError("propagator: need dt_time > 0, krylov_dim >= 2, samples >= 2, t_max_time > 0");
  if (c.timefit_count < 0) throw ConfigError("timefit.count must be >= 0");
  for (double l : c.lambdas)
    if (!std::isfinite(l)) throw ConfigError("sweep.lambdas must be finite");
}

}  // namespace

GridSpec ExperimentConfig::grid() const { return build_grid(extent_length, points); }

CapSpec ExperimentConfig::cap() const {
  return CapSpec{cap_onset_fraction * extent_length, cap_width_fraction * extent_length, cap_strength_energy};
}

PropagatorSpec ExperimentConfig::propagator_spec() const {
  PropagatorSpec p;
  p.method = propagator;
  p.dt = dt_time;
  p.tol = tol_prop;
  p.max_dim = krylov_dim;
  p.cap = true;
  return p;
}

TuningOptions ExperimentConfig::tuning() const {
  TuningOptions t;
  t.gamma_lo = coupling_lo;
  t.gamma_hi = coupling_hi;
  t.tol_eig = 0.0;
  t.tol_eig_relative = tol_eig_relative;
  return t;
}

std::string ExperimentConfig::canonical() const {
  std::string out;
  for (const auto& k : keys()) out += std::string(k.name) + " = " + k.get(*this) + "\n";
  return out;
}

std::string ExperimentConfig::hash() const {
  const std::string c = canonical();
  return sha256_hex(c.data(), c.size());
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::map<std::string, const Key*> index;
  for (const auto& k : keys()) index[k.name] = &k;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = index.find(key);
    if (it == index.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'");
    it->second->set(c, value);
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string sha256_hex(const void* data, std::size_t size) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data, size, md, &len, EVP_sha256(), nullptr) != 1) throw NumericalError("SHA-256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

std::string model_hash(const ThresholdModel& m) {
  std::string blob = fmt(m.potential.coupling) + " " + fmt(m.grid().extent) + " " + std::to_string(m.grid().points) +
                     " " + std::string(to_string(m.potential.family)) + " " + fmt(m.potential.width_a) + " " +
                     fmt(m.potential.width_b) + "\n";
  const auto v = m.psi0.values();
  blob.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  return sha256_hex(blob.data(), blob.size());
}

}  // namespace mtr
