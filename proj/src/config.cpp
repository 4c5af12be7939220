// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#include "osl/config.hpp"
#include "osl/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <variant>

namespace osl {

namespace {

using Slot = std::variant<double ExperimentConfig::*, int ExperimentConfig::*, bool ExperimentConfig::*,
                          std::string ExperimentConfig::*, std::vector<double> ExperimentConfig::*>;

const std::map<std::string, Slot> &slots() {
  static const std::map<std::string, Slot> table = {
      {"p", &ExperimentConfig::p},
      {"omega", &ExperimentConfig::omega},
      {"v", &ExperimentConfig::v},
      {"dim", &ExperimentConfig::dim},
      {"L", &ExperimentConfig::L},
      {"n", &ExperimentConfig::n},
      {"h", &ExperimentConfig::h},
      {"a", &ExperimentConfig::a},
      {"R1", &ExperimentConfig::R1},
      {"R2", &ExperimentConfig::R2},
      {"dt", &ExperimentConfig::dt},
      {"t0", &ExperimentConfig::t0},
      {"t1", &ExperimentConfig::t1},
      {"T0", &ExperimentConfig::T0},
      {"Tn", &ExperimentConfig::Tn},
      {"Tmax", &ExperimentConfig::Tmax},
      {"delta", &ExperimentConfig::delta},
      {"M", &ExperimentConfig::M},
      {"Mprime", &ExperimentConfig::Mprime},
      {"eps_mod", &ExperimentConfig::eps_mod},
      {"newton_tol", &ExperimentConfig::newton_tol},
      {"lin_tol", &ExperimentConfig::lin_tol},
      {"gs_tol", &ExperimentConfig::gs_tol},
      {"eig_tol", &ExperimentConfig::eig_tol},
      {"iters", &ExperimentConfig::iters},
      {"seed", &ExperimentConfig::seed},
      {"stencil", &ExperimentConfig::stencil},
      {"time_order", &ExperimentConfig::time_order},
      {"log_every", &ExperimentConfig::log_every},
      {"snapshot_every", &ExperimentConfig::snapshot_every},
      {"probes", &ExperimentConfig::probes},
      {"alpha_plus", &ExperimentConfig::alpha_plus},
      {"search", &ExperimentConfig::search},
      {"in", &ExperimentConfig::in},
      {"out", &ExperimentConfig::out},
      {"sweep_command", &ExperimentConfig::sweep_command},
      {"sweep_key", &ExperimentConfig::sweep_key},
      {"sweep_values", &ExperimentConfig::sweep_values},
  };
  return table;
}

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string &key, const std::string &value, const char *what) {
  throw PreconditionError("config key '" + key + "': cannot parse '" + value + "' as " + what);
}

double parse_double(const std::string &key, const std::string &text) {
  const std::string t = trim(text);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) bad_value(key, text, "a number");
  return out;
}

int parse_int(const std::string &key, const std::string &text) {
  const std::string t = trim(text);
  int out = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) bad_value(key, text, "an integer");
  return out;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

} // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto &kv : slots()) out.push_back(kv.first);
  return out;
}

void set_key(ExperimentConfig &cfg, const std::string &key, const std::string &value) {
  const auto it = slots().find(key);
  if (it == slots().end()) throw PreconditionError("unknown config key '" + key + "'");
  std::visit(
      [&](auto member) {
        using T = std::remove_cvref_t<decltype(cfg.*member)>;
        if constexpr (std::is_same_v<T, double>) cfg.*member = parse_double(key, value);
        else if constexpr (std::is_same_v<T, int>) cfg.*member = parse_int(key, value);
        else if constexpr (std::is_same_v<T, bool>) {
          const std::string t = trim(value);
          if (t == "true" || t == "1") cfg.*member = true;
          else if (t == "false" || t == "0") cfg.*member = false;
          else bad_value(key, value, "a boolean");
        } else if constexpr (std::is_same_v<T, std::string>) cfg.*member = trim(value);
        else {
          std::vector<double> xs;
          std::stringstream ss(value);
          std::string item;
          while (std::getline(ss, item, ','))
            if (!trim(item).empty()) xs.push_back(parse_double(key, item));
          cfg.*member = xs;
        }
      },
      it->second);
}

std::string get_key(const ExperimentConfig &cfg, const std::string &key) {
  const auto it = slots().find(key);
  if (it == slots().end()) throw PreconditionError("unknown config key '" + key + "'");
  return std::visit(
      [&](auto member) -> std::string {
        using T = std::remove_cvref_t<decltype(cfg.*member)>;
        if constexpr (std::is_same_v<T, double>) return format_double(cfg.*member);
        else if constexpr (std::is_same_v<T, int>) return std::to_string(cfg.*member);
        else if constexpr (std::is_same_v<T, bool>) return cfg.*member ? "true" : "false";
        else if constexpr (std::is_same_v<T, std::string>) return cfg.*member;
        else {
          std::string s;
          for (std::size_t k = 0; k < (cfg.*member).size(); ++k) s += (k ? "," : "") + format_double((cfg.*member)[k]);
          return s;
        }
      },
      it->second);
}

ExperimentConfig parse_config(const std::string &text, ExperimentConfig base) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw PreconditionError("config line " + std::to_string(lineno) + " has no '=': " + line);
    set_key(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config(const std::string &path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string to_text(const ExperimentConfig &cfg) {
  std::string out;
  for (const auto &kv : slots()) out += kv.first + "=" + get_key(cfg, kv.first) + "\n";
  return out;
}

std::uint64_t fnv1a(const std::string &bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash(const ExperimentConfig &cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_text(cfg))));
  return buf;
}

bool operator==(const ExperimentConfig &a, const ExperimentConfig &b) { return to_text(a) == to_text(b); }

} // namespace osl
