#include "racbf/config.hpp"

#include "racbf/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace racbf {

namespace {

using nlohmann::json;

class TomlParser {
public:
  explicit TomlParser(const std::string& text) : s_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    std::set<std::string> headers;
    while (true) {
      skip_blank();
      if (eof()) break;
      if (peek() == '[') {
        ++i_;
        std::string name;
        while (!eof() && peek() != ']' && peek() != '\n') name += s_[i_++];
        expect(']');
        table = &root;
        std::string path;
        std::stringstream ss(name);
        std::string part;
        while (std::getline(ss, part, '.')) {
          part = trim(part);
          if (!valid_key(part)) fail("bad table name '" + name + "'");
          path += "." + part;
          json& next = (*table)[part];
          if (next.is_null()) next = json::object();
          if (!next.is_object()) fail("'" + part + "' is not a table");
          table = &next;
        }
        if (!headers.insert(path).second) fail("table [" + trim(name) + "] defined twice");
        end_of_line();
        continue;
      }
      std::string key;
      while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-'))
        key += s_[i_++];
      if (key.empty()) fail("expected a key");
      skip_space();
      expect('=');
      skip_space();
      if (table->contains(key)) fail("duplicate key '" + key + "'");
      (*table)[key] = value();
      end_of_line();
    }
    return root;
  }

private:
  bool eof() const { return i_ >= s_.size(); }
  char peek() const { return s_[i_]; }

  [[noreturn]] void fail(const std::string& msg) const { fail_at(i_, msg); }

  [[noreturn]] void fail_at(std::size_t pos, const std::string& msg) const {
    int line = 1;
    for (std::size_t k = 0; k < pos && k < s_.size(); ++k) line += s_[k] == '\n';
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
  }

  static bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    return true;
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  }

  void expect(char c) {
    if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }

  void skip_space() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++i_;
  }

  void skip_comment() {
    if (!eof() && peek() == '#')
      while (!eof() && peek() != '\n') ++i_;
  }

  void skip_blank() {
    while (true) {
      skip_space();
      skip_comment();
      if (!eof() && peek() == '\n') {
        ++i_;
        continue;
      }
      return;
    }
  }

  void end_of_line() {
    skip_space();
    skip_comment();
    if (eof()) return;
    if (peek() != '\n') fail("unexpected text after value");
    ++i_;
  }

  json value() {
    if (eof()) fail("missing value");
    const char c = peek();
    if (c == '"') return string();
    if (c == '[') return array();
    std::string tok;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || std::string_view("+-*/._").find(peek()) !=
                                                                              std::string_view::npos))
      tok += s_[i_++];
    if (tok == "true") return true;
    if (tok == "false") return false;
    return number(tok);
  }

  json string() {
    ++i_;
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[i_++];
      if (c == '"') break;
      if (c == '\\') {
        if (eof()) fail("unterminated string");
        const char e = s_[i_++];
        if (e == 'n') out += '\n';
        else if (e == 't') out += '\t';
        else if (e == '"' || e == '\\') out += e;
        else fail(std::string("unknown escape \\") + e);
      } else {
        out += c;
      }
    }
    return out;
  }

  json array() {
    const std::size_t open = i_++;
    json arr = json::array();
    while (true) {
      skip_blank();
      if (eof()) fail_at(open, "unterminated array");
      if (peek() == ']') {
        ++i_;
        return arr;
      }
      arr.push_back(value());
      skip_blank();
      if (!eof() && peek() == ',') {
        ++i_;
        continue;
      }
      skip_blank();
      if (eof()) fail_at(open, "unterminated array");
      expect(']');
      return arr;
    }
  }

  // factor (('*' | '/') factor)*, factor = [+-] (number | pi | inf)
  json number(const std::string& tok) {
    if (tok.empty()) fail("expected a value");
    {
      long long iv = 0;
      const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), iv);
      if (ec == std::errc() && p == tok.data() + tok.size()) return iv;
    }
    std::size_t k = 0;
    double acc = factor(tok, k);
    while (k < tok.size()) {
      const char op = tok[k++];
      if (op != '*' && op != '/') fail("bad number '" + tok + "'");
      const double f = factor(tok, k);
      acc = op == '*' ? acc * f : acc / f;
    }
    return acc;
  }

  double factor(const std::string& tok, std::size_t& k) {
    double sign = 1.0;
    if (k < tok.size() && (tok[k] == '+' || tok[k] == '-')) sign = tok[k++] == '-' ? -1.0 : 1.0;
    if (tok.compare(k, 2, "pi") == 0) {
      k += 2;
      return sign * std::numbers::pi;
    }
    if (tok.compare(k, 3, "inf") == 0) {
      k += 3;
      return sign * std::numeric_limits<double>::infinity();
    }
    std::size_t end = k;
    while (end < tok.size() && tok[end] != '*' && tok[end] != '/') {
      // exponent signs belong to the literal
      ++end;
    }
    double v = 0.0;
    const auto [p, ec] = std::from_chars(tok.data() + k, tok.data() + end, v);
    if (ec != std::errc() || p != tok.data() + end) fail("bad number '" + tok + "'");
    k = end;
    return sign * v;
  }

  const std::string& s_;
  std::size_t i_ = 0;
};

void check_keys(const json& table, const std::string& name, std::initializer_list<const char*> known) {
  if (!table.is_object()) throw ConfigError("[" + name + "] must be a table");
  for (auto it = table.begin(); it != table.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("[" + name + "]: unknown key '" + it.key() + "'");
  }
}

template <typename T>
T get_or(const json& table, const char* key, T fallback, const std::string& where) {
  if (!table.contains(key)) return fallback;
  try {
    return table.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("[" + where + "]: '" + key + "' has the wrong type");
  }
}

Vec vec_of(const json& arr, const std::string& what) {
  if (!arr.is_array()) throw ConfigError(what + " must be an array");
  Vec v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw ConfigError(what + " must contain numbers");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

// boxes = [[[lo, hi], [lo, hi], ...], ...]; periodic axes take the grid period.
ImplicitSet explicit_set(const json& table, const std::string& name, const std::vector<GridDim>& dims) {
  check_keys(table, name, {"boxes"});
  const int n = static_cast<int>(dims.size());
  std::vector<std::optional<Period>> periods(n);
  for (int i = 0; i < n; ++i)
    if (dims[i].periodic) periods[i] = Period{dims[i].lo, dims[i].hi};
  std::vector<ImplicitSet> members;
  const json& boxes = table.contains("boxes") ? table.at("boxes") : json::array();
  if (!boxes.is_array()) throw ConfigError("[" + name + "]: boxes must be an array");
  for (const json& box : boxes) {
    if (!box.is_array() || static_cast<int>(box.size()) != n)
      throw ConfigError("[" + name + "]: each box needs one [lo, hi] per grid dimension");
    std::vector<Interval> iv(n);
    for (int i = 0; i < n; ++i) {
      const Vec lh = vec_of(box[i], "[" + name + "] interval");
      if (lh.size() != 2 || !(lh[0] <= lh[1])) throw ConfigError("[" + name + "]: intervals are [lo, hi] with lo <= hi");
      iv[i] = {lh[0], lh[1]};
    }
    members.push_back(ImplicitSet::box(iv, periods));
  }
  if (members.size() == 1) return members.front();
  return ImplicitSet::union_of(members, n);
}

}  // namespace

nlohmann::json parse_toml(const std::string& text) { return TomlParser(text).parse(); }

nlohmann::json load_toml(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_toml(ss.str());
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string part;
  auto num = [&](const std::string& s) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) throw ConfigError("bad seed list '" + text + "'");
    return v;
  };
  while (std::getline(ss, part, ',')) {
    part.erase(0, part.find_first_not_of(" \t"));
    part.erase(part.find_last_not_of(" \t") + 1);
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(num(part));
    } else {
      const std::uint64_t a = num(part.substr(0, dash)), b = num(part.substr(dash + 1));
      if (b < a) throw ConfigError("bad seed range '" + part + "'");
      for (std::uint64_t s = a; s <= b; ++s) seeds.push_back(s);
    }
  }
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Environment RunConfig::environment(std::shared_ptr<const ValueGrid> value) const {
  Environment env;
  env.model = model();
  env.domain = grid();
  env.target = target;
  env.failure = failure;
  env.value = std::move(value);
  env.filter = filter;
  env.reward = reward;
  return env;
}

std::string RunConfig::spec_hash() const {
  json key = json::object();
  for (const char* k : {"system", "grid", "sets", "solve"}) key[k] = raw.contains(k) ? raw.at(k) : json();
  return fnv1a64_hex(key.dump());
}

RunConfig run_config_from(const nlohmann::json& doc) {
  check_keys(doc, "root", {"system", "grid", "sets", "solve", "filter", "episode", "policy", "run"});
  RunConfig c;
  c.raw = doc;

  const json& sys = doc.contains("system") ? doc.at("system") : throw ConfigError("missing [system]");
  check_keys(sys, "system", {"name", "params"});
  c.system = get_or<std::string>(sys, "name", "", "system");
  if (sys.contains("params")) {
    for (auto it = sys.at("params").begin(); it != sys.at("params").end(); ++it) {
      if (!it->is_number()) throw ConfigError("[system.params]: '" + it.key() + "' must be a number");
      c.model_params[it.key()] = it->get<double>();
    }
  }
  const SystemModel model = c.model();  // validates name and parameters

  const json& g = doc.contains("grid") ? doc.at("grid") : throw ConfigError("missing [grid]");
  check_keys(g, "grid", {"lo", "hi", "count", "periodic"});
  const Vec lo = vec_of(g.value("lo", json::array()), "[grid] lo");
  const Vec hi = vec_of(g.value("hi", json::array()), "[grid] hi");
  const json counts = g.value("count", json::array());
  const int n = model.state_dim;
  if (lo.size() != n || hi.size() != n || !counts.is_array() || static_cast<int>(counts.size()) != n)
    throw ConfigError("[grid]: lo, hi and count need one entry per state dimension");
  json periodic = g.value("periodic", json::array());
  for (int i = 0; i < n; ++i) {
    if (!counts[i].is_number_integer()) throw ConfigError("[grid]: count must be integers");
    const bool per = periodic.is_array() && static_cast<int>(periodic.size()) == n ? periodic[i].get<bool>() : model.is_periodic(i);
    c.grid_dims.push_back({lo[i], hi[i], counts[i].get<int>(), per});
  }
  try {
    (void)c.grid();
  } catch (const ContractViolation& err) {
    throw ConfigError(std::string("[grid]: ") + err.what());
  }

  const json sets = doc.value("sets", json::object());
  check_keys(sets, "sets", {"preset", "target", "failure"});
  if (sets.contains("preset")) {
    if (sets.contains("target") || sets.contains("failure"))
      throw ConfigError("[sets]: use either a preset or explicit target/failure");
    c.set_preset = sets.at("preset").get<std::string>();
    SetPreset p = set_preset(c.set_preset);
    c.target = p.target;
    c.failure = p.failure;
  } else {
    if (!sets.contains("target")) throw ConfigError("[sets]: need a preset or a target");
    c.target = explicit_set(sets.at("target"), "sets.target", c.grid_dims);
    c.failure = sets.contains("failure") ? explicit_set(sets.at("failure"), "sets.failure", c.grid_dims)
                                         : ImplicitSet::empty(n);
  }
  if (c.target.dim() != n || c.failure.dim() != n) throw ConfigError("[sets]: set dimension differs from the system");

  const json solve = doc.value("solve", json::object());
  check_keys(solve, "solve", {"mode", "horizon", "cfl_safety", "convergence_tol", "snapshot_stride"});
  c.solve.mode = solve_mode_from(get_or<std::string>(solve, "mode", "tube", "solve"));
  c.solve.horizon = get_or(solve, "horizon", c.solve.horizon, "solve");
  c.solve.cfl_safety = get_or(solve, "cfl_safety", c.solve.cfl_safety, "solve");
  c.solve.convergence_tol = get_or(solve, "convergence_tol", c.solve.convergence_tol, "solve");
  c.solve.snapshot_stride = get_or(solve, "snapshot_stride", c.solve.snapshot_stride, "solve");

  const json filter = doc.value("filter", json::object());
  check_keys(filter, "filter", {"gamma", "constraint_slack", "dual_tol", "fallback"});
  c.filter.gamma = get_or(filter, "gamma", c.filter.gamma, "filter");
  c.filter.constraint_slack = get_or(filter, "constraint_slack", c.filter.constraint_slack, "filter");
  c.filter.dual_tol = get_or(filter, "dual_tol", c.filter.dual_tol, "filter");
  c.filter.fallback = fallback_from(get_or<std::string>(filter, "fallback", "optimal_control", "filter"));

  const json ep = doc.value("episode", json::object());
  check_keys(ep, "episode", {"duration", "control_dt", "substeps", "disturbance", "initial", "initial_state", "filter",
                             "reward_window", "reward", "max_sampling_tries"});
  EpisodeSpec& e = c.episode;
  e.duration = get_or(ep, "duration", e.duration, "episode");
  e.control_dt = get_or(ep, "control_dt", e.control_dt, "episode");
  e.substeps = get_or(ep, "substeps", e.substeps, "episode");
  e.disturbance = disturbance_mode_from(get_or<std::string>(ep, "disturbance", "zero", "episode"));
  e.initial = initial_mode_from(get_or<std::string>(ep, "initial", "sampled_in_tube", "episode"));
  if (ep.contains("initial_state")) e.initial_state = vec_of(ep.at("initial_state"), "[episode] initial_state");
  e.filter_enabled = get_or(ep, "filter", e.filter_enabled, "episode");
  e.reward_window = get_or(ep, "reward_window", std::min(e.reward_window, e.duration), "episode");
  e.max_sampling_tries = get_or(ep, "max_sampling_tries", e.max_sampling_tries, "episode");
  c.reward = reward_kind_from(get_or<std::string>(ep, "reward", "none", "episode"));

  const json pol = doc.value("policy", json::object());
  check_keys(pol, "policy", {"name", "params"});
  c.policy = get_or<std::string>(pol, "name", c.policy, "policy");
  c.policy_params = pol.value("params", json::object());

  const json run = doc.value("run", json::object());
  check_keys(run, "run", {"out", "seeds"});
  c.out_dir = get_or<std::string>(run, "out", c.out_dir, "run");
  if (run.contains("seeds")) {
    const json& s = run.at("seeds");
    if (s.is_string()) c.seeds = parse_seeds(s.get<std::string>());
    else if (s.is_array()) c.seeds = s.get<std::vector<std::uint64_t>>();
    else throw ConfigError("[run]: seeds must be a string or an array");
  }

  try {
    c.solve.validate();
    c.filter.validate();
    c.episode.validate();
  } catch (const ContractViolation& err) {
    throw ConfigError(err.what());
  }
  // fail early on unknown policy names or parameters
  (void)builtin_policy(c.policy, c.policy_params, 0, model, c.model_params);
  return c;
}

RunConfig load_run_config(const std::string& path) { return run_config_from(load_toml(path)); }

}  // namespace racbf
