#include "rangecap/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "rangecap/errors.hpp"

namespace rangecap {

namespace {

using T = ValueType;

std::vector<KeySpec> common_keys() {
  return {
      {"seed", T::kUInt, "1", "master seed"},
      {"workers", T::kUInt, "0", "worker threads (0: available parallelism)", false, true},
      {"output", T::kString, "", "output directory (default: $RANGECAP_OUTPUT_DIR or .)", false, true},
      {"green_radius", T::kInt, "0", "Green table radius (0: per-dimension default)"},
      {"green_tol", T::kReal, "0", "Green quadrature tolerance (0: per-dimension default)"},
      {"green_table", T::kString, "", "load the Green table from this file instead of building it"},
  };
}

std::vector<KeySpec> policy_keys() {
  return {
      {"backend", T::kString, "auto", "capacity backend: auto, exact or escape"},
      {"direct_max", T::kUInt, "2000", "largest set solved by dense factorisation"},
      {"iterative_max", T::kUInt, "10000", "largest set solved by conjugate gradients under auto"},
      {"site_samples", T::kUInt, "4000", "escape trials per capacity estimate (sites drawn uniformly)"},
      {"radius_factor", T::kReal, "0", "escape ball radius factor (0: per-dimension default)"},
      {"batches", T::kUInt, "20", "batches for standard errors"},
  };
}

std::map<std::string, std::vector<KeySpec>> build_schemas() {
  std::map<std::string, std::vector<KeySpec>> s;
  auto add = [&](const std::string& path, std::vector<KeySpec> keys, bool policy = false) {
    auto all = common_keys();
    if (policy) {
      auto p = policy_keys();
      all.insert(all.end(), p.begin(), p.end());
    }
    all.insert(all.end(), keys.begin(), keys.end());
    s[path] = std::move(all);
  };
  const KeySpec d{"d", T::kInt, "", "lattice dimension", true};
  const KeySpec set{"set", T::kString, "", "site-set file", true};
  add("walk", {d, {"n", T::kUInt, "", "steps", true}, {"write_range", T::kString, "", "write the range to this file"}});
  add("green.eval", {d,
                     {"x", T::kIntList, "", "displacement (default: origin)"},
                     {"tol", T::kReal, "0", "quadrature tolerance (0: default)"},
                     {"horizon", T::kUInt, "0", "also estimate G_n at this horizon by simulation"},
                     {"replicas", T::kUInt, "100000", "walks for the truncated estimate"}});
  add("green.build-table", {d,
                            {"radius", T::kInt, "0", "table radius (0: default)"},
                            {"tol", T::kReal, "0", "quadrature tolerance (0: default)"},
                            {"file", T::kString, "", "table file to write", true}});
  add("capacity.exact", {set, d, {"solver_tol", T::kReal, "1e-8", "relative residual target"},
                         {"measure_out", T::kString, "", "write the equilibrium measure here"}});
  add("capacity.variational", {set, d, {"iterations", T::kInt, "1000", "iteration budget"},
                               {"tol", T::kReal, "1e-6", "relative duality gap target"}});
  add("capacity.escape", {set, d,
                          {"trials", T::kUInt, "1000", "trials per site"},
                          {"radius", T::kReal, "0", "escape radius (0: factor * rad + 50)"},
                          {"radius_factor", T::kReal, "2", "escape radius factor"},
                          {"site_samples", T::kUInt, "0", "sample this many sites instead of all"}});
  add("capacity.representation", {d,
                                   {"n", T::kUInt, "", "walk steps", true},
                                   {"aux_horizon", T::kUInt, "100000", "step budget of each auxiliary walk"},
                                   {"trials", T::kUInt, "100", "auxiliary walks per fresh time"},
                                   {"radius_factor", T::kReal, "2", "escape radius factor"}});
  add("decomp.lower", {set, {"set_b", T::kString, "", "second site-set file", true}, d});
  add("decomp.upper", {set, {"set_b", T::kString, "", "second site-set file", true}, d});
  add("decomp.dyadic", {d,
                        {"n", T::kUInt, "", "walk steps", true},
                        {"levels", T::kInt, "1", "dyadic depth L"},
                        {"paths", T::kUInt, "1", "number of sampled paths"},
                        {"tolerance", T::kReal, "1e-8", "sandwich tolerance"}});
  add("decomp.moments", {d,
                         {"n", T::kUIntList, "", "walk steps grid", true},
                         {"order", T::kInt, "1", "moment order k"},
                         {"replicas", T::kUInt, "100", "pairs of walks per grid point"}});
  const KeySpec grid{"n", T::kUIntList, "", "horizon grid (a:b expands to 2^a..2^b)", true};
  add("experiment.lln", {d, grid, {"replicas", T::kUInt, "200", "replicas per grid point"}}, true);
  add("experiment.variance", {d, grid, {"replicas", T::kUInt, "500", "replicas per grid point"}}, true);
  add("experiment.clt", {d,
                         {"n", T::kUInt, "", "horizon", true},
                         {"replicas", T::kUInt, "1000", "replicas"},
                         {"eps", T::kRealList, "0.1,0.2,0.5,1.0", "Lindeberg thresholds"},
                         {"lindeberg_grid", T::kUIntList, "256,4096,65536", "Lindeberg horizons"},
                         {"lindeberg_replicas", T::kUInt, "0", "replicas per Lindeberg point (0: same as replicas)"},
                         {"ks_simulations", T::kUInt, "2000", "bootstrap draws for the KS p-value"}},
      true);
  add("experiment.d4", {grid, {"replicas", T::kUInt, "100", "replicas per grid point"}}, true);
  add("experiment.d3", {grid,
                        {"replicas", T::kUInt, "200", "replicas per grid point"},
                        {"jensen_se", T::kReal, "3", "Jensen tolerance in standard errors for escape estimates"}},
      true);
  add("experiment.nonintersection", {grid,
                                     {"replicas", T::kUInt, "100000", "walk triples"},
                                     {"long_walk_replicas", T::kUInt, "0", "triples for the long first walk variant"},
                                     {"horizon_multiplier", T::kReal, "16", "long walk horizon in units of n"}});
  add("experiment.conjectures", {d, grid, {"replicas", T::kUInt, "200", "replicas per grid point"}}, true);
  return s;
}

const std::map<std::string, std::vector<KeySpec>>& schemas() {
  static const auto s = build_schemas();
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

template <class V>
bool parse_number(const std::string& s, V& v) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  return ec == std::errc() && p == e;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    v = std::stod(s, &pos);
  } catch (...) {
    return false;
  }
  return pos == s.size() && std::isfinite(v);
}

std::string type_name(ValueType t) {
  switch (t) {
    case T::kInt: return "an integer";
    case T::kUInt: return "a nonnegative integer";
    case T::kReal: return "a real number";
    case T::kString: return "a string";
    case T::kUIntList: return "a list of nonnegative integers";
    case T::kRealList: return "a list of real numbers";
    case T::kIntList: return "a list of integers";
  }
  return "?";
}

bool type_ok(ValueType t, const std::string& v) {
  try {
    switch (t) {
      case T::kInt: {
        std::int64_t x;
        return parse_number(v, x);
      }
      case T::kUInt: {
        std::uint64_t x;
        return parse_number(v, x);
      }
      case T::kReal: {
        double x;
        return parse_double(v, x);
      }
      case T::kString: return true;
      case T::kUIntList: return !v.empty() && (parse_uint_list(v), true);
      case T::kRealList: return !v.empty() && (parse_real_list(v), true);
      case T::kIntList: return v.empty() || (parse_int_list(v), true);
    }
  } catch (const ValidationError&) {
    return false;
  }
  return false;
}

const KeySpec* find_key(const std::vector<KeySpec>& keys, const std::string& name) {
  for (const auto& k : keys)
    if (k.name == name) return &k;
  return nullptr;
}

// Cross-field rules, appended to `errors`.
void semantic_checks(const std::string& cmd, const RunConfig& c, std::vector<std::string>& errors) {
  const bool needs_transient = cmd != "walk";
  if (c.has("d")) {
    const auto d = c.get_int("d");
    if (d < 1 || d > 8) errors.push_back("d: must be in [1, 8], got " + std::to_string(d));
    else if (needs_transient && d < 3)
      errors.push_back("d: capacity and Green computations need d >= 3 (the walk is recurrent for d = " +
                       std::to_string(d) + ")");
  }
  if (c.has("backend")) {
    const auto b = c.raw("backend");
    if (b != "auto" && b != "exact" && b != "escape")
      errors.push_back("backend: expected auto, exact or escape, got '" + b + "'");
  }
  if (c.has("replicas")) {
    const auto r = c.get_uint("replicas");
    if (cmd.rfind("experiment.", 0) == 0 && r < 2) errors.push_back("replicas: need at least 2");
    if (cmd == "experiment.clt" && r < 200) errors.push_back("replicas: the KS test needs at least 200 replicas");
  }
  if (cmd == "decomp.dyadic" && c.has("n") && c.has("levels")) {
    const auto L = c.get_int("levels");
    const auto n = c.get_uint("n");
    if (L < 0 || L > 62) errors.push_back("levels: must be in [0, 62]");
    else if ((std::uint64_t{1} << L) > n)
      errors.push_back("levels: 2^L = " + std::to_string(std::uint64_t{1} << L) + " exceeds n = " + std::to_string(n));
  }
  if (c.has("batches") && c.get_uint("batches") < 2) errors.push_back("batches: need at least 2");
  if (cmd == "decomp.moments" && c.has("order") && c.get_int("order") < 1) errors.push_back("order: must be >= 1");
  if (c.has("n") && (cmd.rfind("experiment.", 0) == 0 || cmd == "decomp.moments")) {
    const auto grid = c.get_uint_list("n");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] < 1) errors.push_back("n: grid horizons must be >= 1");
      if (i && grid[i] <= grid[i - 1]) errors.push_back("n: grid must be strictly increasing");
    }
  }
}

}  // namespace

const std::vector<KeySpec>& command_schema(const std::string& command) {
  const auto it = schemas().find(command);
  if (it == schemas().end()) throw ValidationError("unknown command '" + command + "'");
  return it->second;
}

std::vector<std::string> command_paths() {
  std::vector<std::string> out;
  for (const auto& [k, v] : schemas()) out.push_back(k);
  return out;
}

IniFile parse_ini(const std::string& text) {
  boost::property_tree::ptree pt;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  IniFile out;
  for (const auto& [key, child] : pt) {
    if (child.empty()) {
      out[""][key] = trim(child.data());
    } else {
      for (const auto& [k, v] : child) out[key][k] = trim(v.data());
    }
  }
  return out;
}

IniFile read_ini_file(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open config file '" + path + "'");
  std::string text;
  char buf[4096];
  std::size_t k;
  while ((k = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, k);
  std::fclose(f);
  return parse_ini(text);
}

std::vector<std::uint64_t> parse_uint_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& tok : split_list(s)) {
    const auto colon = tok.find(':');
    if (colon != std::string::npos) {
      std::uint64_t a, b;
      if (!parse_number(tok.substr(0, colon), a) || !parse_number(tok.substr(colon + 1), b) || a > b || b > 62)
        throw ValidationError("bad power-of-two range '" + tok + "'");
      for (std::uint64_t e = a; e <= b; ++e) out.push_back(std::uint64_t{1} << e);
    } else {
      std::uint64_t v;
      if (!parse_number(tok, v)) throw ValidationError("bad nonnegative integer '" + tok + "'");
      out.push_back(v);
    }
  }
  if (out.empty()) throw ValidationError("empty list");
  return out;
}

std::vector<double> parse_real_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& tok : split_list(s)) {
    double v;
    if (!parse_double(tok, v)) throw ValidationError("bad real number '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError("empty list");
  return out;
}

std::vector<std::int64_t> parse_int_list(const std::string& s) {
  std::vector<std::int64_t> out;
  for (const auto& tok : split_list(s)) {
    std::int64_t v;
    if (!parse_number(tok, v)) throw ValidationError("bad integer '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

const std::string& RunConfig::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ValidationError("config key '" + key + "' is not defined for " + command_);
  return it->second;
}

std::int64_t RunConfig::get_int(const std::string& key) const {
  std::int64_t v;
  if (!parse_number(raw(key), v)) throw ValidationError(key + ": expected an integer");
  return v;
}

std::uint64_t RunConfig::get_uint(const std::string& key) const {
  std::uint64_t v;
  if (!parse_number(raw(key), v)) throw ValidationError(key + ": expected a nonnegative integer");
  return v;
}

double RunConfig::get_real(const std::string& key) const {
  double v;
  if (!parse_double(raw(key), v)) throw ValidationError(key + ": expected a real number");
  return v;
}

std::vector<std::uint64_t> RunConfig::get_uint_list(const std::string& key) const { return parse_uint_list(raw(key)); }
std::vector<std::int64_t> RunConfig::get_int_list(const std::string& key) const { return parse_int_list(raw(key)); }
std::vector<double> RunConfig::get_real_list(const std::string& key) const { return parse_real_list(raw(key)); }

std::string RunConfig::serialize() const {
  std::string s = "command=" + command_ + "\n";
  for (const auto& [k, v] : values_)
    if (!runtime_only_.at(k)) s += k + "=" + v + "\n";
  return s;
}

std::string RunConfig::serialize_all() const {
  std::string s = "command=" + command_ + "\n";
  for (const auto& [k, v] : values_) s += k + "=" + v + "\n";
  return s;
}

std::uint64_t fnv1a64(const std::string& s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(serialize())));
  return buf;
}

RunConfig RunConfig::resolve(const std::string& command, const IniFile& file,
                             const std::map<std::string, std::string>& overrides) {
  const auto& keys = command_schema(command);
  std::vector<std::string> errors;
  RunConfig c;
  c.command_ = command;
  for (const auto& k : keys) {
    c.values_[k.name] = k.default_value;
    c.runtime_only_[k.name] = k.runtime_only;
  }
  // Later layers win: unnamed section, [common], the parent command, the command itself, flags.
  const auto dot = command.find('.');
  std::vector<std::string> sections = {"", "common"};
  if (dot != std::string::npos) sections.push_back(command.substr(0, dot));
  sections.push_back(command);
  std::set<std::string> shared = {"", "common"};
  for (const auto& sec : sections) {
    const auto it = file.find(sec);
    if (it == file.end()) continue;
    for (const auto& [k, v] : it->second) {
      if (!find_key(keys, k)) {
        // shared sections may carry keys meant for other commands
        if (!shared.count(sec)) errors.push_back("unknown key '" + k + "' in section [" + sec + "]");
        continue;
      }
      c.values_[k] = v;
    }
  }
  for (const auto& [k, v] : overrides) {
    if (!find_key(keys, k)) {
      errors.push_back("unknown option '" + k + "' for " + command);
      continue;
    }
    c.values_[k] = v;
  }
  for (const auto& k : keys) {
    const auto& v = c.values_[k.name];
    if (k.required && v.empty()) {
      errors.push_back("missing required field '" + k.name + "' (" + k.help + ")");
      continue;
    }
    if (!v.empty() && !type_ok(k.type, v)) errors.push_back(k.name + ": expected " + type_name(k.type) + ", got '" + v + "'");
  }
  try {
    semantic_checks(command, c, errors);
  } catch (const ValidationError&) {
    // a malformed value, already reported above
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration for " + command + ":";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ValidationError(msg);
  }
  return c;
}

}  // namespace rangecap
