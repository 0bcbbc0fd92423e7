#include "semidelay/scenario.hpp"

#include "semidelay/error.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace semidelay {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::linear: return "linear";
    case SystemKind::cubic: return "cubic";
    case SystemKind::neutral: return "neutral";
    case SystemKind::odd_power: return "odd_power";
  }
  return "linear";
}

std::optional<SystemKind> system_kind_from_string(std::string_view name) {
  for (auto k : {SystemKind::linear, SystemKind::cubic, SystemKind::neutral, SystemKind::odd_power}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Strict object reading

namespace {

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string item(const std::string& path, std::size_t i) { return fmt::format("{}[{}]", path, i); }

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw InputError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InputError(path, "expected a finite number");
  return v;
}

std::int64_t as_integer(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) {
    const auto v = j.get<std::uint64_t>();
    if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      throw InputError(path, "integer out of range");
    }
    return static_cast<std::int64_t>(v);
  }
  if (!j.is_number_integer()) throw InputError(path, "expected an integer");
  return j.get<std::int64_t>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw InputError(path, "expected true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw InputError(path, "expected a string");
  return j.get<std::string>();
}

const json& as_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw InputError(path, "expected an array");
  return j;
}

Vector as_vector(const json& j, const std::string& path) {
  as_array(j, path);
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = as_number(j[i], item(path, i));
  return v;
}

// Tracks which keys of an object were consumed so leftovers can be reported.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InputError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string path(std::string_view key) const { return join(path_, key); }

  const json* find(std::string_view key) {
    used_.insert(std::string(key));
    auto it = j_.find(std::string(key));
    return it == j_.end() ? nullptr : &*it;
  }

  const json& require(std::string_view key) {
    const json* v = find(key);
    if (!v) throw InputError(path(key), "required key is missing");
    return *v;
  }

  double number(std::string_view key) { return as_number(require(key), path(key)); }
  std::optional<double> opt_number(std::string_view key) {
    const json* v = find(key);
    return v ? std::optional(as_number(*v, path(key))) : std::nullopt;
  }
  std::optional<std::int64_t> opt_integer(std::string_view key) {
    const json* v = find(key);
    return v ? std::optional(as_integer(*v, path(key))) : std::nullopt;
  }
  std::optional<bool> opt_bool(std::string_view key) {
    const json* v = find(key);
    return v ? std::optional(as_bool(*v, path(key))) : std::nullopt;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw InputError(path(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <class F>
auto model_guard(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    throw InputError(path, e.what());
  }
}

SystemSpec read_system(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  SystemSpec s;
  const std::string kind = as_string(r.require("kind"), r.path("kind"));
  const auto k = system_kind_from_string(kind);
  if (!k) {
    throw InputError(r.path("kind"),
                     fmt::format("unknown system kind '{}' (linear, cubic, neutral, odd_power)", kind));
  }
  s.kind = *k;
  if (auto p = r.opt_integer("power")) {
    if (*p < 1 || *p > 16) throw InputError(r.path("power"), "power must be in [1, 16]");
    s.power = static_cast<int>(*p);
  }
  if (auto m = r.opt_integer("m")) {
    if (*m < 1 || *m > 1000) throw InputError(r.path("m"), "m must be in [1, 1000]");
    s.m = static_cast<int>(*m);
  }
  r.finish();
  return s;
}

DelayProfile read_profile(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  const std::string kind = as_string(r.require("kind"), r.path("kind"));
  const auto k = delay_kind_from_string(kind);
  if (!k) throw InputError(r.path("kind"), fmt::format("unknown delay kind '{}'", kind));
  if (*k == DelayProfile::Kind::table) {
    const json& arr = as_array(r.require("samples"), r.path("samples"));
    std::vector<std::pair<double, double>> samples;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = item(r.path("samples"), i);
      if (!arr[i].is_array() || arr[i].size() != 2) throw InputError(p, "expected [t, tau]");
      samples.emplace_back(as_number(arr[i][0], p + "[0]"), as_number(arr[i][1], p + "[1]"));
    }
    const auto tail = r.opt_number("tail");
    r.finish();
    return model_guard(path, [&] { return DelayProfile::table(std::move(samples), tail); });
  }
  const double h = r.number("h");
  r.finish();
  return model_guard(r.path("h"), [&] { return DelayProfile::builtin(*k, h); });
}

HistoryFunction read_history(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  const std::string kind = as_string(r.require("kind"), r.path("kind"));
  if (kind == "constant") {
    const double h = r.number("h");
    Vector v = as_vector(r.require("value"), r.path("value"));
    r.finish();
    return model_guard(r.path("h"), [&] { return HistoryFunction::constant(h, std::move(v)); });
  }
  if (kind == "affine") {
    const double h = r.number("h");
    Vector a = as_vector(r.require("offset"), r.path("offset"));
    Vector b = as_vector(r.require("slope"), r.path("slope"));
    r.finish();
    return model_guard(path, [&] { return HistoryFunction::affine(h, std::move(a), std::move(b)); });
  }
  if (kind == "sampled") {
    const Vector theta = as_vector(r.require("theta"), r.path("theta"));
    const json& vals = as_array(r.require("values"), r.path("values"));
    std::vector<Vector> values;
    for (std::size_t i = 0; i < vals.size(); ++i) values.push_back(as_vector(vals[i], item(r.path("values"), i)));
    r.finish();
    return model_guard(path, [&] {
      return HistoryFunction::sampled(std::vector<double>(theta.data(), theta.data() + theta.size()),
                                      std::move(values));
    });
  }
  throw InputError(r.path("kind"),
                   fmt::format("unknown history kind '{}' (constant, affine, sampled)", kind));
}

IntegrationConfig read_integration(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  IntegrationConfig c;
  c.step = r.number("step");
  c.t_end = r.number("t_end");
  if (auto v = r.opt_number("t0")) c.t0 = *v;
  if (auto v = r.opt_integer("max_fixed_point_iters")) {
    if (*v < 1 || *v > 1000) throw InputError(r.path("max_fixed_point_iters"), "must be in [1, 1000]");
    c.max_fixed_point_iters = static_cast<int>(*v);
  }
  if (auto v = r.opt_number("fixed_point_tol")) c.fixed_point_tol = *v;
  if (auto v = r.opt_integer("record_every")) {
    if (*v < 1) throw InputError(r.path("record_every"), "must be >= 1");
    c.record_every = static_cast<std::size_t>(*v);
  }
  r.finish();
  model_guard(path, [&] {
    c.validate();
    return 0;
  });
  return c;
}

AnalysisSettings read_analysis(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  AnalysisSettings a;
  if (auto v = r.opt_number("convergence_tol")) {
    if (!(*v > 0.0)) throw InputError(r.path("convergence_tol"), "must be positive");
    a.convergence_tol = *v;
  }
  if (auto v = r.opt_number("razumikhin_slack")) {
    if (!(*v >= 0.0)) throw InputError(r.path("razumikhin_slack"), "must be nonnegative");
    a.razumikhin_slack = *v;
  }
  r.finish();
  return a;
}

Expectation read_expect(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  Expectation e;
  e.converged = r.opt_bool("converged");
  e.alpha_tol = r.opt_number("alpha_tol");
  e.drift_tol = r.opt_number("drift_tol");
  e.residual_decay = r.opt_number("residual_decay");
  e.razumikhin_clean = r.opt_bool("razumikhin_clean");
  r.finish();
  return e;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenario

SystemRHS Scenario::build_system() const {
  if (system.kind == SystemKind::neutral) {
    if (n != 1) throw ModelError("the neutral kind is scalar; n must be 1");
    if (!links.empty()) throw ModelError("the neutral kind takes no links");
    if (profiles.size() != static_cast<std::size_t>(system.m)) {
      throw ModelError(fmt::format("the neutral kind with m = {} needs {} profiles, got {}", system.m,
                                   system.m, profiles.size()));
    }
    return SystemRHS::neutral(system.m);
  }
  const SystemMatrices mats = build_system_matrices({n, links, profiles});
  switch (system.kind) {
    case SystemKind::linear: return SystemRHS::linear(mats);
    case SystemKind::cubic: return SystemRHS::cubic(mats);
    case SystemKind::odd_power: return SystemRHS::odd_power(mats, system.power);
    case SystemKind::neutral: break;
  }
  throw ModelError("unhandled system kind");
}

bool Scenario::constant_delays() const {
  return std::all_of(profiles.begin(), profiles.end(), [](const auto& p) { return p.is_constant(); });
}

void Scenario::validate() const {
  model_guard(system.kind == SystemKind::neutral ? "profiles" : "links", [&] {
    build_system();
    return 0;
  });
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    model_guard(item("profiles", k), [&] { return profiles[k].limit(); });
  }
  const double reach = max_delay_bound(profiles);
  if (history.span() < reach * (1.0 - 1e-12)) {
    throw InputError("history", fmt::format("history covers [-{}, 0] but the delays reach back {}",
                                            history.span(), reach));
  }
}

Scenario parse_scenario(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError("<root>", fmt::format("not valid JSON: {}", e.what()));
  }
  ObjectReader r(root, "");
  Scenario s;
  s.name = as_string(r.require("name"), "name");
  if (s.name.empty() || s.name.find_first_of("/\\") != std::string::npos || s.name == "." ||
      s.name == "..") {
    throw InputError("name", "must be a nonempty plain file name");
  }
  const auto n = as_integer(r.require("n"), "n");
  if (n < 1 || n > 100000) throw InputError("n", "must be in [1, 100000]");
  s.n = static_cast<Index>(n);
  s.system = read_system(r.require("system"), "system");

  const json& profiles = as_array(r.require("profiles"), "profiles");
  if (profiles.empty()) throw InputError("profiles", "at least one delay profile is required");
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    s.profiles.push_back(read_profile(profiles[k], item("profiles", k)));
  }

  if (const json* links = r.find("links")) {
    as_array(*links, "links");
    for (std::size_t i = 0; i < links->size(); ++i) {
      const std::string p = item("links", i);
      ObjectReader lr((*links)[i], p);
      const auto from = as_integer(lr.require("from"), lr.path("from"));
      const auto to = as_integer(lr.require("to"), lr.path("to"));
      const double weight = lr.number("weight");
      const auto delay = as_integer(lr.require("delay"), lr.path("delay"));
      lr.finish();
      if (from < 1 || from > n) throw InputError(lr.path("from"), fmt::format("must be in [1, {}]", n));
      if (to < 1 || to > n) throw InputError(lr.path("to"), fmt::format("must be in [1, {}]", n));
      if (delay < 1 || static_cast<std::size_t>(delay) > s.profiles.size()) {
        throw InputError(lr.path("delay"), fmt::format("must be in [1, {}]", s.profiles.size()));
      }
      s.links.push_back({static_cast<Index>(to - 1), static_cast<Index>(from - 1), weight,
                         static_cast<std::size_t>(delay - 1)});
    }
  }

  s.history = read_history(r.require("history"), "history");
  if (s.history.dimension() != s.n) {
    throw InputError("history", fmt::format("history has {} components but n = {}",
                                            s.history.dimension(), s.n));
  }
  s.integration = read_integration(r.require("integration"), "integration");
  if (const json* a = r.find("analysis")) s.analysis = read_analysis(*a, "analysis");
  if (const json* e = r.find("expect")) s.expect = read_expect(*e, "expect");
  if (const json* seed = r.find("seed")) {
    if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<std::int64_t>() >= 0)) {
      throw InputError("seed", "expected a nonnegative integer");
    }
    s.seed = seed->get<std::uint64_t>();
  }
  r.finish();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("file", fmt::format("cannot open scenario file '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

namespace {

ordered_json vector_json(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ordered_json history_json(const HistoryFunction& h) {
  ordered_json j;
  switch (h.kind()) {
    case HistoryFunction::Kind::constant:
      j["kind"] = "constant";
      j["h"] = h.span();
      j["value"] = vector_json(h.value());
      break;
    case HistoryFunction::Kind::affine:
      j["kind"] = "affine";
      j["h"] = h.span();
      j["offset"] = vector_json(h.offset());
      j["slope"] = vector_json(h.slope());
      break;
    case HistoryFunction::Kind::sampled: {
      j["kind"] = "sampled";
      j["theta"] = ordered_json(std::vector<double>(h.abscissae().begin(), h.abscissae().end()));
      ordered_json vals = ordered_json::array();
      for (const auto& v : h.samples()) vals.push_back(vector_json(v));
      j["values"] = vals;
      break;
    }
  }
  return j;
}

ordered_json profile_json(const DelayProfile& p) {
  ordered_json j;
  j["kind"] = std::string(to_string(p.kind()));
  if (p.kind() == DelayProfile::Kind::table) {
    ordered_json samples = ordered_json::array();
    for (const auto& [t, tau] : p.table_samples()) samples.push_back({t, tau});
    j["samples"] = samples;
    if (p.tail()) j["tail"] = *p.tail();
  } else {
    j["h"] = p.scale();
  }
  return j;
}

}  // namespace

std::string serialize_scenario(const Scenario& s) {
  ordered_json j;
  j["name"] = s.name;
  j["n"] = s.n;
  ordered_json sys;
  sys["kind"] = std::string(to_string(s.system.kind));
  if (s.system.kind == SystemKind::odd_power) sys["power"] = s.system.power;
  if (s.system.kind == SystemKind::neutral) sys["m"] = s.system.m;
  j["system"] = sys;
  if (s.system.kind != SystemKind::neutral || !s.links.empty()) {
    ordered_json links = ordered_json::array();
    for (const auto& l : s.links) {
      ordered_json lj;
      lj["from"] = l.sender + 1;
      lj["to"] = l.receiver + 1;
      lj["weight"] = l.weight;
      lj["delay"] = l.delay + 1;
      links.push_back(lj);
    }
    j["links"] = links;
  }
  ordered_json profiles = ordered_json::array();
  for (const auto& p : s.profiles) profiles.push_back(profile_json(p));
  j["profiles"] = profiles;
  j["history"] = history_json(s.history);

  const IntegrationConfig& c = s.integration;
  ordered_json integ;
  integ["step"] = c.step;
  integ["t_end"] = c.t_end;
  integ["t0"] = c.t0;
  integ["max_fixed_point_iters"] = c.max_fixed_point_iters;
  integ["fixed_point_tol"] = c.fixed_point_tol;
  integ["record_every"] = c.record_every;
  j["integration"] = integ;

  ordered_json analysis;
  analysis["convergence_tol"] = s.analysis.convergence_tol;
  analysis["razumikhin_slack"] = s.analysis.razumikhin_slack;
  j["analysis"] = analysis;

  ordered_json expect = ordered_json::object();
  if (s.expect.converged) expect["converged"] = *s.expect.converged;
  if (s.expect.alpha_tol) expect["alpha_tol"] = *s.expect.alpha_tol;
  if (s.expect.drift_tol) expect["drift_tol"] = *s.expect.drift_tol;
  if (s.expect.residual_decay) expect["residual_decay"] = *s.expect.residual_decay;
  if (s.expect.razumikhin_clean) expect["razumikhin_clean"] = *s.expect.razumikhin_clean;
  j["expect"] = expect;
  j["seed"] = s.seed;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Built-in corpus

namespace {

using DK = DelayProfile::Kind;

IntegrationConfig corpus_integration(double t_end) {
  IntegrationConfig c;
  c.step = 1e-3;
  c.t_end = t_end;
  c.record_every = 100;
  return c;
}

Expectation varying_expectation() {
  Expectation e;
  e.converged = true;
  e.residual_decay = 10.0;
  e.razumikhin_clean = true;
  return e;
}

Expectation limiting_expectation(bool linear) {
  Expectation e;
  e.converged = true;
  e.alpha_tol = linear ? 1e-4 : 1e-3;
  if (linear) e.drift_tol = 1e-6;
  e.razumikhin_clean = true;
  return e;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Scenario scalar(std::string name, std::vector<DelayProfile> profiles, HistoryFunction history,
                double t_end, bool limiting) {
  Scenario s;
  s.name = std::move(name);
  s.n = 1;
  s.system = {SystemKind::neutral, 1, static_cast<int>(profiles.size())};
  s.profiles = std::move(profiles);
  s.history = std::move(history);
  s.integration = corpus_integration(t_end);
  s.expect = limiting ? limiting_expectation(true) : varying_expectation();
  return s;
}

Scenario two_node(std::string name, SystemKind kind, DelayProfile p1, DelayProfile p2, bool limiting) {
  Scenario s;
  s.name = std::move(name);
  s.n = 2;
  s.system.kind = kind;
  s.links = {{0, 1, 1.0, 0}, {1, 0, 1.0, 1}};
  s.profiles = {std::move(p1), std::move(p2)};
  s.history = HistoryFunction::constant(max_delay_bound(s.profiles), vec({1.0, 0.0}));
  s.integration = corpus_integration(60.0);
  s.expect = limiting ? limiting_expectation(kind == SystemKind::linear) : varying_expectation();
  return s;
}

std::vector<DelayProfile> neutral_profiles(int m, double h, bool limiting) {
  std::vector<DelayProfile> out;
  for (int k = 1; k <= m; ++k) {
    const double scale = h * k / m;
    out.push_back(limiting ? DelayProfile::constant(scale) : DelayProfile::builtin(DK::sin_shift, scale));
  }
  return out;
}

}  // namespace

std::vector<Scenario> builtin_corpus() {
  std::vector<Scenario> out;
  const HistoryFunction ramp = HistoryFunction::affine(1.0, vec({1.0}), vec({1.0}));

  out.push_back(scalar("scalar_sinshift", {DelayProfile::builtin(DK::sin_shift, 1.0)}, ramp, 200.0, false));
  out.push_back(scalar("scalar_sinshift_limiting", {DelayProfile::constant(1.0)}, ramp, 50.0, true));

  const HistoryFunction wiggle = HistoryFunction::sampled(
      {-1.0, -0.75, -0.5, -0.25, 0.0}, {vec({0.5}), vec({1.5}), vec({-0.5}), vec({0.25}), vec({1.0})});
  out.push_back(scalar("scalar_tsininv", {DelayProfile::builtin(DK::t_sin_inv, 1.0)}, wiggle, 60.0, false));
  out.push_back(scalar("scalar_tsininv_limiting", {DelayProfile::constant(1.0)}, wiggle, 60.0, true));

  out.push_back(scalar("neutral_m3", neutral_profiles(3, 1.0, false), ramp, 60.0, false));
  out.push_back(scalar("neutral_m3_limiting", neutral_profiles(3, 1.0, true), ramp, 60.0, true));

  out.push_back(two_node("twonode_linear", SystemKind::linear, DelayProfile::builtin(DK::t_sin_inv, 1.0),
                         DelayProfile::builtin(DK::exp_approach, 1.0), false));
  out.push_back(two_node("twonode_linear_limiting", SystemKind::linear, DelayProfile::constant(1.0),
                         DelayProfile::constant(1.0), true));

  out.push_back(two_node("twonode_cubic", SystemKind::cubic, DelayProfile::builtin(DK::exp_sin, 1.0),
                         DelayProfile::builtin(DK::sin_inv_shift, 1.0), false));
  out.push_back(two_node("twonode_cubic_limiting", SystemKind::cubic, DelayProfile::constant(1.0),
                         DelayProfile::constant(1.0), true));
  return out;
}

}  // namespace semidelay
