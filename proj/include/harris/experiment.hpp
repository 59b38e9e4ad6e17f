#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "harris/balance.hpp"
#include "harris/coverage.hpp"
#include "harris/discrete_kernel.hpp"
#include "harris/discretize.hpp"
#include "harris/escape.hpp"
#include "harris/integrability.hpp"
#include "harris/mwg.hpp"
#include "harris/pathologies.hpp"
#include "harris/trace.hpp"
#include "harris/transdim.hpp"
#include "harris/version.hpp"

namespace harris {

using Json = nlohmann::json;

/// Config rejected by validation; `violations` holds one message per field.
class ConfigError : public InvalidInput {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : InvalidInput(join(violations)), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& m : v) s += (s.empty() ? "" : "; ") + m;
    return s;
  }
  std::vector<std::string> violations_;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k{"escape",   "tv",        "classes",          "integrability",
                                          "coverage", "transdim-marginal", "balance"};
  return k;
}

inline const std::vector<std::string>& example_ids() {
  static const std::vector<std::string> e{"ex3", "ex4", "ex9", "ex14", "normal2", "toy"};
  return e;
}

/// Examples each experiment kind knows how to run.
inline std::vector<std::string> examples_for(const std::string& kind) {
  if (kind == "escape") return {"ex3", "ex4", "ex9"};
  if (kind == "tv") return {"ex3"};
  if (kind == "classes") return {"ex14"};
  if (kind == "integrability") return {"ex9", "normal2"};
  if (kind == "coverage") return {"ex9", "ex14"};
  if (kind == "transdim-marginal") return {"toy"};
  if (kind == "balance") return {"ex9", "ex14", "normal2"};
  return {};
}

/// Fully resolved experiment description. Coordinates are 1-based here, as
/// on the command line.
struct ExperimentConfig {
  std::string kind;
  std::string example;
  std::string start;
  std::uint64_t horizon = 10000;
  std::uint64_t replicas = 1000;
  std::optional<std::uint64_t> seed;
  double grid = 0.1;
  std::vector<std::uint64_t> subchain;
  std::map<std::uint64_t, double> fix;
  int k_max = 12;
  int pieces_per_shell = 1;
  bool doubled = false;
  std::uint64_t truncation = 100000;
  std::vector<std::uint64_t> checkpoints;
  std::uint64_t models = 3;
  std::vector<double> p = {0.5, 0.3, 0.2};
  double a = 0.5;
  std::uint64_t start_model = 0;  // 0: largest model
  std::uint64_t monitor_replicas = 100;
  std::uint64_t monitor_steps = 10000;
  unsigned workers = 1;
  std::string out;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

inline std::optional<std::uint64_t> parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto t = trim(s);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const auto t = trim(s);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// Reads config fields leniently: numbers may arrive as JSON numbers or as
/// strings (command-line overrides), lists as arrays or comma-separated text.
class FieldReader {
 public:
  FieldReader(const Json& j, std::vector<std::string>& errors) : j_(j), errors_(errors) {}

  void u64(const char* key, std::uint64_t& dst) {
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    std::optional<std::uint64_t> r;
    if (v.is_number_unsigned()) r = v.get<std::uint64_t>();
    else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) r = static_cast<std::uint64_t>(v.get<std::int64_t>());
    else if (v.is_string()) r = parse_u64(v.get<std::string>());
    if (r) dst = *r;
    else errors_.push_back(std::string(key) + ": expected a nonnegative integer, got " + v.dump());
  }
  void u64(const char* key, std::optional<std::uint64_t>& dst) {
    if (!j_.contains(key)) return;
    std::uint64_t v = 0;
    const auto before = errors_.size();
    u64(key, v);
    if (errors_.size() == before) dst = v;
  }
  void integer(const char* key, int& dst) {
    std::uint64_t v = 0;
    if (!j_.contains(key)) return;
    const auto before = errors_.size();
    u64(key, v);
    if (errors_.size() == before) {
      if (v > 1000) errors_.push_back(std::string(key) + ": value too large");
      else dst = static_cast<int>(v);
    }
  }
  void real(const char* key, double& dst) {
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    std::optional<double> r;
    if (v.is_number()) r = v.get<double>();
    else if (v.is_string()) r = parse_double(v.get<std::string>());
    if (r) dst = *r;
    else errors_.push_back(std::string(key) + ": expected a number, got " + v.dump());
  }
  void boolean(const char* key, bool& dst) {
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    if (v.is_boolean()) dst = v.get<bool>();
    else if (v.is_string() && (v == "true" || v == "1")) dst = true;
    else if (v.is_string() && (v == "false" || v == "0")) dst = false;
    else errors_.push_back(std::string(key) + ": expected true or false, got " + v.dump());
  }
  void text(const char* key, std::string& dst) {
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    if (v.is_string()) dst = v.get<std::string>();
    else if (v.is_number()) dst = v.dump();
    else errors_.push_back(std::string(key) + ": expected a string, got " + v.dump());
  }
  template <class T, class Parse>
  void list(const char* key, std::vector<T>& dst, Parse parse, const char* what) {
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    std::vector<std::string> items;
    if (v.is_array()) {
      for (const auto& e : v) items.push_back(e.is_string() ? e.get<std::string>() : e.dump());
    } else if (v.is_string()) {
      if (!trim(v.get<std::string>()).empty()) items = split(v.get<std::string>(), ',');
    } else if (v.is_number()) {
      items.push_back(v.dump());
    } else {
      errors_.push_back(std::string(key) + ": expected a list of " + what);
      return;
    }
    std::vector<T> out;
    for (const auto& s : items) {
      auto r = parse(s);
      if (!r) {
        errors_.push_back(std::string(key) + ": '" + s + "' is not " + what);
        return;
      }
      out.push_back(*r);
    }
    dst = std::move(out);
  }

 private:
  const Json& j_;
  std::vector<std::string>& errors_;
};

/// "x2=0" (or "2=0"), comma separated, or a JSON object {"x2": 0}.
inline void read_fix(const Json& j, std::map<std::uint64_t, double>& dst, std::vector<std::string>& errors) {
  if (!j.contains("fix")) return;
  const auto& v = j.at("fix");
  std::vector<std::pair<std::string, std::string>> items;
  if (v.is_object()) {
    for (const auto& [k, val] : v.items()) items.emplace_back(k, val.is_string() ? val.get<std::string>() : val.dump());
  } else if (v.is_string()) {
    for (const auto& part : split(v.get<std::string>(), ',')) {
      if (part.empty()) continue;
      const auto eq = part.find('=');
      if (eq == std::string::npos) {
        errors.push_back("fix: '" + part + "' must look like x2=0");
        return;
      }
      items.emplace_back(trim(part.substr(0, eq)), part.substr(eq + 1));
    }
  } else {
    errors.push_back("fix: expected \"x<i>=<value>\" or an object");
    return;
  }
  std::map<std::uint64_t, double> out;
  for (auto [k, val] : items) {
    if (!k.empty() && k[0] == 'x') k = k.substr(1);
    const auto idx = parse_u64(k);
    const auto value = parse_double(val);
    if (!idx || *idx == 0) {
      errors.push_back("fix: coordinate '" + k + "' must be a 1-based index");
      return;
    }
    if (!value) {
      errors.push_back("fix: value '" + val + "' for x" + k + " is not a number");
      return;
    }
    out[*idx] = *value;
  }
  dst = std::move(out);
}

inline bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& e : v) s += (s.empty() ? "" : ", ") + e;
  return s;
}

inline std::string default_start(const std::string& example) {
  if (example == "ex3") return "2";
  if (example == "ex4") return "1/2";
  if (example == "ex9") return "10,0";
  if (example == "ex14") return "4.5,0";
  return "";
}

inline std::optional<Point> parse_point(const std::string& s, std::size_t d) {
  const auto parts = split(s, ',');
  if (parts.size() != d) return std::nullopt;
  std::vector<double> c;
  for (const auto& p : parts) {
    auto v = parse_double(p);
    if (!v) return std::nullopt;
    c.push_back(*v);
  }
  return Point(std::move(c));
}

inline std::optional<Example4State> parse_example4(const std::string& s) {
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    if (trim(s.substr(0, slash)) != "1") return std::nullopt;
    auto m = parse_u64(s.substr(slash + 1));
    if (!m || *m == 0) return std::nullopt;
    return Example4State::reciprocal(*m);
  }
  auto v = parse_double(s);
  if (!v || !(*v >= 0.0 && *v <= 1.0)) return std::nullopt;
  return Example4State::generic(*v);
}

}  // namespace detail

/// Builds a config from a JSON document. Field-level type problems are
/// collected into `errors`; semantic checks are left to `validate`.
inline ExperimentConfig config_from_json(const Json& j, std::vector<std::string>& errors) {
  ExperimentConfig c;
  if (!j.is_object()) {
    errors.push_back("config must be a JSON object");
    return c;
  }
  static const std::vector<std::string> known{"kind",     "experiment", "example",       "start",     "horizon",
                                              "replicas", "seed",       "grid",          "subchain",  "fix",
                                              "k_max",    "pieces_per_shell", "doubled", "truncation", "checkpoints",
                                              "models",   "p",          "a",             "start_model", "monitor_replicas",
                                              "monitor_steps", "workers", "out"};
  for (const auto& [k, v] : j.items())
    if (!detail::contains(known, k)) errors.push_back(k + ": unknown field");
  detail::FieldReader r(j, errors);
  r.text("experiment", c.kind);
  r.text("kind", c.kind);
  r.text("example", c.example);
  r.text("start", c.start);
  r.u64("horizon", c.horizon);
  r.u64("replicas", c.replicas);
  r.u64("seed", c.seed);
  r.real("grid", c.grid);
  r.list("subchain", c.subchain, detail::parse_u64, "a coordinate index");
  detail::read_fix(j, c.fix, errors);
  r.integer("k_max", c.k_max);
  r.integer("pieces_per_shell", c.pieces_per_shell);
  r.boolean("doubled", c.doubled);
  r.u64("truncation", c.truncation);
  r.list("checkpoints", c.checkpoints, detail::parse_u64, "a step count");
  r.u64("models", c.models);
  r.list("p", c.p, detail::parse_double, "a probability");
  r.real("a", c.a);
  r.u64("start_model", c.start_model);
  r.u64("monitor_replicas", c.monitor_replicas);
  r.u64("monitor_steps", c.monitor_steps);
  std::uint64_t workers = c.workers;
  r.u64("workers", workers);
  c.workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, 1024));
  r.text("out", c.out);
  if (c.example.empty() && c.kind == "transdim-marginal") c.example = "toy";
  if (c.start.empty()) c.start = detail::default_start(c.example);
  return c;
}

/// Kinds whose output depends on random draws; the others are exact
/// computations and need no seed.
inline bool is_stochastic(const std::string& kind) {
  return kind == "escape" || kind == "coverage" || kind == "transdim-marginal" || kind == "balance";
}

/// Every rule violation in the config, one message per problem. Empty means
/// the config can be run. No side effects.
inline std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> v;
  if (!detail::contains(experiment_kinds(), c.kind)) {
    v.push_back("experiment: '" + c.kind + "' is not one of " + detail::join(experiment_kinds()));
    return v;
  }
  if (!c.seed && is_stochastic(c.kind)) v.push_back("seed: required (no implicit seeding)");
  if (c.replicas < 1) v.push_back("replicas ≥ 1");
  if (c.horizon < 1) v.push_back("horizon ≥ 1");
  if (!detail::contains(example_ids(), c.example)) {
    v.push_back("example: '" + c.example + "' is unknown; valid ids are " + detail::join(example_ids()));
    return v;
  }
  const auto allowed = examples_for(c.kind);
  if (!detail::contains(allowed, c.example)) {
    v.push_back("example: " + c.kind + " supports " + detail::join(allowed) + ", not " + c.example);
    return v;
  }

  const auto& ex = c.example;
  if (c.kind == "escape" || c.kind == "tv" || c.kind == "coverage" || c.kind == "classes") {
    if (ex == "ex3") {
      auto x = detail::parse_u64(c.start);
      const std::uint64_t lo = c.kind == "escape" ? 2 : 1;
      if (!x || *x < lo) v.push_back("start: ex3 needs an integer state ≥ " + std::to_string(lo));
      else if (c.kind == "tv" && *x > c.truncation) v.push_back("start: must not exceed truncation");
    } else if (ex == "ex4") {
      auto s = detail::parse_example4(c.start);
      if (!s) v.push_back("start: ex4 needs 1/m or a number in [0,1]");
      else if (c.kind == "escape" && !(s->is_reciprocal() && s->m >= 2))
        v.push_back("start: ex4 escape starts at 1/m with m ≥ 2 (inside the null set)");
    } else if (ex == "ex9" || ex == "ex14") {
      auto p = detail::parse_point(c.start, 2);
      const auto model = ex == "ex9" ? example9() : example14();
      if (!p) v.push_back("start: " + ex + " needs two comma-separated numbers");
      else if (model.target.log_density(*p) == kNegInf) v.push_back("start: point lies outside the support of " + ex);
      else if (ex == "ex9" && c.kind == "escape" && (*p)[1] != 0.0)
        v.push_back("start: ex9 escape starts on the line x2 = 0");
    }
  }
  if (c.kind == "escape" && c.replicas < 100) v.push_back("replicas ≥ 100 for escape estimation");
  if (c.kind == "tv" && c.truncation < 3) v.push_back("truncation ≥ 3");
  if (c.kind == "classes") {
    if (!(c.grid > 0.0 && c.grid <= 5.0)) v.push_back("grid: step must lie in (0, 5]");
    for (auto i : c.subchain)
      if (i < 1 || i > 2) v.push_back("subchain: coordinate " + std::to_string(i) + " outside 1..2");
  }
  if (c.kind == "integrability") {
    if (c.k_max < 4 || c.k_max > 60) v.push_back("k_max: must lie in [4, 60]");
    if (c.pieces_per_shell < 1) v.push_back("pieces_per_shell ≥ 1");
    for (const auto& [i, x] : c.fix)
      if (i < 1 || i > 2) v.push_back("fix: coordinate x" + std::to_string(i) + " outside 1..2");
    if (c.fix.size() >= 2) v.push_back("fix: at least one coordinate must stay free");
  }
  if (c.kind == "coverage") {
    for (auto n : c.checkpoints)
      if (n > c.horizon) v.push_back("checkpoints: " + std::to_string(n) + " exceeds horizon");
  }
  if (c.kind == "transdim-marginal") {
    if (c.models < 2) v.push_back("models ≥ 2");
    if (c.p.size() != c.models) v.push_back("p: needs one probability per model (" + std::to_string(c.models) + ")");
    double s = 0.0;
    for (double q : c.p) {
      if (!(q > 0.0)) v.push_back("p: every probability must be positive");
      s += q;
    }
    if (std::abs(s - 1.0) > 1e-12) v.push_back("p: probabilities must sum to 1");
    if (!(c.a > 0.0 && c.a < 1.0)) v.push_back("a: must lie in (0,1)");
    if (c.start_model > c.models) v.push_back("start_model: must be 0 (largest) or a model id in 1..models");
    if (c.monitor_replicas < 1) v.push_back("monitor_replicas ≥ 1");
    if (c.monitor_steps < 1) v.push_back("monitor_steps ≥ 1");
  }
  return v;
}

/// Canonical JSON of the fields that determine the output (the output
/// directory and worker count do not).
inline Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["experiment"] = c.kind;
  j["example"] = c.example;
  j["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
  j["replicas"] = c.replicas;
  j["horizon"] = c.horizon;
  if (c.kind == "escape" || c.kind == "tv" || c.kind == "coverage" || c.kind == "classes") j["start"] = c.start;
  if (c.kind == "tv") j["truncation"] = c.truncation;
  if (c.kind == "classes") {
    j["grid"] = c.grid;
    j["subchain"] = c.subchain;
  }
  if (c.kind == "integrability") {
    Json f = Json::object();
    for (const auto& [i, x] : c.fix) f["x" + std::to_string(i)] = x;
    j["fix"] = f;
    j["k_max"] = c.k_max;
    j["pieces_per_shell"] = c.pieces_per_shell;
    j["doubled"] = c.doubled;
  }
  if (c.kind == "coverage") j["checkpoints"] = c.checkpoints;
  if (c.kind == "transdim-marginal") {
    j["models"] = c.models;
    j["p"] = c.p;
    j["a"] = c.a;
    j["start_model"] = c.start_model;
    j["monitor_replicas"] = c.monitor_replicas;
    j["monitor_steps"] = c.monitor_steps;
  }
  return j;
}

/// 64-bit FNV-1a of the canonical config text, as 16 hex digits.
inline std::string config_digest(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_to_json(c).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = hex[h & 0xf];
  return "fnv1a64:" + s;
}

struct ExperimentResult {
  Json summary;
  std::string csv_name;
  std::string csv;
};

namespace detail {

inline Json summary_header(const ExperimentConfig& c) {
  Json j;
  j["operation"] = c.kind;
  j["version"] = std::string(kVersion);
  j["config_digest"] = config_digest(c);
  j["config"] = config_to_json(c);
  j["ci"] = nullptr;
  j["bias_bound"] = nullptr;
  j["verdict"] = nullptr;
  return j;
}

inline std::string opt_step(const std::optional<std::uint64_t>& s) { return s ? std::to_string(*s) : std::string(); }

template <class Chain, class State, class InSet>
ExperimentResult escape_result(const ExperimentConfig& c, const Chain& chain, InSet&& in_set, const State& start,
                               std::optional<double> closed_form) {
  auto est = estimate_escape(chain, in_set, start, c.horizon, c.replicas, *c.seed, EscapeOptions{c.workers});
  Json j = summary_header(c);
  j["estimates"] = {{"stay_fraction", est.estimate}, {"stayed", est.stayed}, {"replicas", est.replicas},
                    {"horizon", est.horizon}};
  if (closed_form) j["estimates"]["closed_form"] = *closed_form;
  j["ci"] = {{"low", est.ci_low}, {"high", est.ci_high}, {"level", 0.95}, {"method", "wilson"}};
  if (est.truncation_bias_bound) j["bias_bound"] = *est.truncation_bias_bound;
  j["verdict"] = est.ci_low > 0.0 ? "escape-positive" : "no-escape-detected";
  std::ostringstream csv;
  csv << "replica,exit_step,stayed\n";
  for (std::size_t r = 0; r < est.exit_steps.size(); ++r)
    csv << r << ',' << opt_step(est.exit_steps[r]) << ',' << (est.exit_steps[r] ? 0 : 1) << '\n';
  return {std::move(j), "escape.csv", csv.str()};
}

inline ExperimentResult run_escape(const ExperimentConfig& c) {
  if (c.example == "ex3") {
    const auto x = *parse_u64(c.start);
    return escape_result(c, example3(), [](std::uint64_t s) { return s >= 2; }, x,
                         std::optional<double>(escape_closed_form(x)));
  }
  if (c.example == "ex4") {
    const auto s = *parse_example4(c.start);
    return escape_result(c, example4(), [](const Example4State& t) { return t.is_reciprocal() && t.m >= 2; }, s,
                         std::optional<double>(escape_closed_form(s.m)));
  }
  const auto model = example9();
  const MwgChain chain(model.target, model.sampler());
  const Point start = *parse_point(c.start, 2);
  auto res = escape_result(c, chain, [](const Point& x) { return x[1] == 0.0; }, start, std::nullopt);
  // A step picks coordinate 2 with probability 1/2, and from (x1, 0) that
  // proposal is accepted with probability below 2 e^{-2 x1}; x1 only grows on
  // average.
  res.summary["estimates"]["acceptance_union_bound"] =
      std::min(1.0, static_cast<double>(c.horizon) * std::exp(-2.0 * start[0]));
  return res;
}

inline ExperimentResult run_tv(const ExperimentConfig& c) {
  const auto x = *parse_u64(c.start);
  const auto k = example3_truncated(c.truncation);
  const Distribution pi = point_mass(k.size(), 0);
  const auto seq = tv_sequence(k, x - 1, c.horizon, pi);
  Json j = summary_header(c);
  j["estimates"] = {{"tv", seq.back()}, {"n", c.horizon}};
  if (x >= 2) {
    const double plateau = escape_closed_form(x);
    j["estimates"]["closed_form_plateau"] = plateau;
    j["estimates"]["closed_form_at_n"] =
        plateau * static_cast<double>(x + c.horizon) / static_cast<double>(x + c.horizon - 1);
    j["estimates"]["hitting_probability"] = hitting_probability(k, {0}, x - 1);
  }
  j["bias_bound"] = k.tail_bias_bound() ? Json(*k.tail_bias_bound()) : Json(nullptr);
  j["verdict"] = seq.back() > 1e-3 ? "not-converging" : "converging";
  std::ostringstream csv;
  csv << "n,tv\n";
  for (std::size_t n = 0; n < seq.size(); ++n) csv << n << ',' << format_double(seq[n]) << '\n';
  return {std::move(j), "tv.csv", csv.str()};
}

inline ExperimentResult run_classes(const ExperimentConfig& c) {
  const auto model = example14();
  auto sampler = model.sampler();
  if (!c.subchain.empty()) {
    std::vector<std::size_t> dirs;
    for (auto i : c.subchain) dirs.push_back(static_cast<std::size_t>(i - 1));
    std::sort(dirs.begin(), dirs.end());
    dirs.erase(std::unique(dirs.begin(), dirs.end()), dirs.end());
    sampler = restrict_subchain(sampler, dirs);
  }
  const Point anchor = *parse_point(c.start, 2);
  const auto& b = model.target.bounds();
  GridSpec grid{b.lower, b.upper, c.grid};
  const auto disc = discretize_coordinate_chain(model.target, sampler, anchor, grid);
  const auto classes = communicating_classes(disc.kernel);
  Json j = summary_header(c);
  std::size_t closed = 0;
  std::vector<std::size_t> sizes;
  for (const auto& cls : classes) {
    closed += is_closed_class(disc.kernel, cls) ? 1 : 0;
    sizes.push_back(cls.size());
  }
  j["estimates"] = {{"classes", classes.size()}, {"closed_classes", closed}, {"states", disc.kernel.size()},
                    {"class_sizes", sizes}};
  if (classes.size() == 1) j["estimates"]["period"] = period(disc.kernel);
  j["verdict"] = classes.size() == 1 ? "irreducible" : "reducible";
  std::vector<std::size_t> class_of(disc.kernel.size());
  for (std::size_t ci = 0; ci < classes.size(); ++ci)
    for (auto s : classes[ci]) class_of[s] = ci;
  std::ostringstream csv;
  csv << "state,class,coords\n";
  for (std::size_t s = 0; s < disc.kernel.size(); ++s)
    csv << s << ',' << class_of[s] << ',' << format_coords(disc.centers[s]) << '\n';
  return {std::move(j), "classes.csv", csv.str()};
}

inline ExperimentResult run_integrability(const ExperimentConfig& c) {
  const TargetDensity target = c.example == "ex9" ? example9().target : normal2_target();
  std::map<std::size_t, double> fixed;
  for (const auto& [i, x] : c.fix) fixed[static_cast<std::size_t>(i - 1)] = x;
  QuadratureSettings s;
  s.k_max = c.k_max;
  s.pieces_per_shell = c.pieces_per_shell;
  if (c.doubled) s = s.doubled();
  const auto rep = hyperplane_integral(target, Hyperplane(2, fixed), s);
  Json j = summary_header(c);
  j["estimates"] = {{"integral", rep.value()}, {"expansions", rep.partial_integrals.size()}, {"growth", rep.growth}};
  if (!rep.note.empty()) j["estimates"]["note"] = rep.note;
  j["verdict"] = to_string(rep.verdict);
  std::ostringstream csv;
  csv << "k,partial_integral,increment\n";
  for (std::size_t k = 0; k < rep.partial_integrals.size(); ++k)
    csv << k + 1 << ',' << format_double(rep.partial_integrals[k]) << ',' << format_double(rep.increments[k]) << '\n';
  return {std::move(j), "integrability.csv", csv.str()};
}

inline ExperimentResult run_coverage(const ExperimentConfig& c) {
  const auto model = c.example == "ex9" ? example9() : example14();
  const auto sampler = model.sampler();
  const Point start = *parse_point(c.start, 2);
  std::vector<FirstAccepts> first(c.replicas);
  for_each_replica(c.replicas, c.workers, [&](std::uint64_t r) {
    RngStream rng = derive_stream(*c.seed, r);
    first[r] = first_accept_steps(run_mwg(model.target, sampler, start, c.horizon, rng), 2);
  });
  auto checkpoints = c.checkpoints;
  if (checkpoints.empty())
    for (std::uint64_t n : {std::uint64_t{10}, std::uint64_t{100}, std::uint64_t{1000}, c.horizon})
      if (n <= c.horizon) checkpoints.push_back(n);
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  const auto curve = coverage_curve(first, checkpoints);
  Json j = summary_header(c);
  Json pts = Json::array(), cis = Json::array();
  for (const auto& p : curve) {
    pts.push_back({{"n", p.n}, {"p_not_covered", p.p_not_covered}});
    cis.push_back({{"n", p.n}, {"low", p.ci_low}, {"high", p.ci_high}});
  }
  j["estimates"] = {{"curve", pts}};
  j["ci"] = {{"level", 0.95}, {"method", "wilson"}, {"curve", cis}};
  j["verdict"] = curve.back().p_not_covered > 0.0 ? "coverage-incomplete" : "all-covered";
  std::ostringstream csv;
  csv << "replica,coord,first_accept_step\n";
  for (std::size_t r = 0; r < first.size(); ++r)
    for (std::size_t i = 0; i < first[r].size(); ++i) csv << r << ',' << i + 1 << ',' << opt_step(first[r][i]) << '\n';
  return {std::move(j), "coverage.csv", csv.str()};
}

inline ExperimentResult run_transdim(const ExperimentConfig& c) {
  ToyFamilyConfig tc;
  tc.model_count = c.models;
  tc.p = c.p;
  tc.a = c.a;
  const auto fam = make_toy_family(tc);
  const std::size_t m0 = c.start_model == 0 ? c.models : c.start_model;
  const TransDimState start{m0, Point(std::vector<double>(m0, 0.0))};

  // Long run for the model marginal; replica streams 1.. for the monitors.
  std::vector<std::uint64_t> counts(c.models, 0);
  {
    RngStream rng = derive_stream(*c.seed, 0);
    TransDimState s = start;
    for (std::uint64_t n = 1; n <= c.horizon; ++n) {
      s = transdim_step(fam.target, fam.R, fam.maps, fam.a, fam.within, s, rng).state;
      ++counts[fam.target.position(s.model)];
    }
  }
  std::vector<HypothesisReport> reports(c.monitor_replicas, HypothesisReport{});
  for_each_replica(c.monitor_replicas, c.workers, [&](std::uint64_t r) {
    RngStream rng = derive_stream(*c.seed, r + 1);
    reports[r] = theorem_hypothesis_monitor(
        run_transdim(fam.target, fam.R, fam.maps, fam.a, fam.within, start, c.monitor_steps, rng));
  });

  Json j = summary_header(c);
  Json freq = Json::array();
  double max_dev = 0.0;
  for (std::size_t m = 0; m < c.models; ++m) {
    const double f = static_cast<double>(counts[m]) / static_cast<double>(c.horizon);
    max_dev = std::max(max_dev, std::abs(f - c.p[m]));
    freq.push_back({{"model", m + 1}, {"count", counts[m]}, {"frequency", f}, {"p", c.p[m]}});
  }
  std::uint64_t with_within = 0, covered = 0;
  for (const auto& rep : reports) {
    with_within += rep.no_within_move_accepted() ? 0 : 1;
    covered += rep.all_coordinates_covered() ? 1 : 0;
  }
  j["estimates"] = {{"model_frequencies", freq},
                    {"max_abs_deviation", max_dev},
                    {"replicas_with_within_accept", with_within},
                    {"replicas_covering_start_coordinates", covered},
                    {"monitor_replicas", c.monitor_replicas}};
  const auto ci = wilson_interval(covered, c.monitor_replicas);
  j["ci"] = {{"coverage_low", ci.low}, {"coverage_high", ci.high}, {"level", 0.95}, {"method", "wilson"}};
  j["verdict"] = max_dev <= 0.02 && covered == c.monitor_replicas ? "consistent" : "inconsistent";
  std::ostringstream csv;
  csv << "replica,first_within_accept,coords_covered,covered_at\n";
  for (std::size_t r = 0; r < reports.size(); ++r) {
    const auto& rep = reports[r];
    std::size_t n_cov = 0;
    std::optional<std::uint64_t> at = std::uint64_t{0};
    for (const auto& f : rep.coordinate_first_accept) {
      if (f) {
        ++n_cov;
        if (at) at = std::max(*at, *f);
      } else {
        at.reset();
      }
    }
    csv << r << ',' << opt_step(rep.first_within_accept) << ',' << n_cov << ',' << opt_step(at) << '\n';
  }
  return {std::move(j), "transdim.csv", csv.str()};
}

inline ExperimentResult run_balance(const ExperimentConfig& c) {
  RngStream rng = derive_stream(*c.seed, 0);
  const auto pairs = balance_pairs(c.example, c.replicas, rng);
  double max_gap = 0.0, max_log_alpha = kNegInf;
  for (const auto& p : pairs) {
    max_gap = std::max(max_gap, p.sides.gap());
    max_log_alpha = std::max({max_log_alpha, p.log_alpha_xy, p.log_alpha_yx});
  }
  Json j = summary_header(c);
  j["estimates"] = {{"pairs", pairs.size()}, {"max_gap", max_gap}, {"max_log_alpha", max_log_alpha},
                    {"log_range", kBalanceLogRange}};
  j["verdict"] = max_gap <= 1e-12 && max_log_alpha <= 0.0 ? "balanced" : "violated";
  std::ostringstream csv;
  csv << "pair,direction,lhs,rhs,gap\n";
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& p = pairs[k];
    csv << k << ',' << format_direction(p.direction) << ',' << format_double(p.sides.lhs) << ','
        << format_double(p.sides.rhs) << ',' << format_double(p.sides.gap()) << '\n';
  }
  return {std::move(j), "balance.csv", csv.str()};
}

}  // namespace detail

/// Runs a validated experiment and returns its artifacts in memory. Throws
/// ConfigError if validation fails and NumericalError on numerical failure.
inline ExperimentResult run(const ExperimentConfig& c) {
  if (auto v = validate(c); !v.empty()) throw ConfigError(std::move(v));
  if (c.kind == "escape") return detail::run_escape(c);
  if (c.kind == "tv") return detail::run_tv(c);
  if (c.kind == "classes") return detail::run_classes(c);
  if (c.kind == "integrability") return detail::run_integrability(c);
  if (c.kind == "coverage") return detail::run_coverage(c);
  if (c.kind == "transdim-marginal") return detail::run_transdim(c);
  return detail::run_balance(c);
}

enum ExitCode : int { kExitOk = 0, kExitIo = 1, kExitConfig = 2, kExitNumerical = 3 };

/// Exit status for an exception escaping a run, with the message for stderr.
inline std::pair<int, std::string> exit_status(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const ConfigError& err) {
    std::string msg;
    for (const auto& v : err.violations()) msg += "invalid config: " + v + "\n";
    return {kExitConfig, msg};
  } catch (const NumericalError& err) {
    std::ostringstream msg;
    msg << "numerical failure: " << err.what() << " (residual " << err.residual() << ")\n";
    return {kExitNumerical, msg.str()};
  } catch (const InvalidInput& err) {
    return {kExitConfig, std::string("invalid input: ") + err.what() + "\n"};
  } catch (const std::exception& err) {
    return {kExitIo, std::string("error: ") + err.what() + "\n"};
  } catch (...) {
    return {kExitIo, "error: unknown failure\n"};
  }
}

/// Writes summary.json and the per-experiment CSV into `dir`.
inline void write_artifacts(const ExperimentResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream js(dir / "summary.json", std::ios::binary);
    js << r.summary.dump(2) << '\n';
    if (!js) throw std::runtime_error("could not write " + (dir / "summary.json").string());
  }
  std::ofstream csv(dir / r.csv_name, std::ios::binary);
  csv << r.csv;
  if (!csv) throw std::runtime_error("could not write " + (dir / r.csv_name).string());
}

}  // namespace harris
