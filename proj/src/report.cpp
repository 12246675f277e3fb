#include "geq/report.hpp"

#include <charconv>
#include <cmath>
#include <limits>

namespace geq {

using nlohmann::json;

#ifndef GEQ_VERSION
#define GEQ_VERSION "0.0.0"
#endif

std::string version() { return GEQ_VERSION; }

namespace {

// JSON has no infinities; they travel as strings.
json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double number(const json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::numeric_limits<double>::quiet_NaN();
}

json vec(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

Vector vec(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i]);
  return v;
}

json mat(const Allocation& x) {
  json a = json::array();
  for (Eigen::Index i = 0; i < x.rows(); ++i) a.push_back(vec(Vector(x.row(i).transpose())));
  return a;
}

Allocation mat(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Allocation x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) x.row(i) = vec(j[static_cast<std::size_t>(i)]).transpose();
  return x;
}

SolveStatus status_from_string(const std::string& s) {
  for (auto st : {SolveStatus::ok, SolveStatus::no_root, SolveStatus::config_too_coarse, SolveStatus::non_convergence}) {
    if (to_string(st) == s) return st;
  }
  throw Error(ErrorCode::parse_error, "unknown status '" + s + "'");
}

template <typename T>
T parse_integer(std::string_view key, std::string_view text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::invalid_config, std::string(key) + ": expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

double parse_real(std::string_view key, std::string_view text) {
  try {
    return evaluate_constant(text);
  } catch (const Error&) {
    throw Error(ErrorCode::invalid_config, std::string(key) + ": expected a number, got '" + std::string(text) + "'");
  }
}

}  // namespace

json to_json(const SolverConfig& c) {
  return {{"grid-resolution", c.grid_resolution},
          {"multistart-count", c.multistart_count},
          {"refine-iterations", c.refine_iterations},
          {"tol-solve", c.tol_solve},
          {"tol-accept", c.tol_accept},
          {"price-floor", c.price_floor},
          {"seed", c.seed},
          {"weights", vec(c.weights)},
          {"negishi-max-iterations", c.negishi_max_iterations},
          {"max-grid-points", c.max_grid_points},
          {"threads", c.threads}};
}

SolverConfig config_from_json(const json& j) {
  SolverConfig c;
  c.grid_resolution = j.value("grid-resolution", c.grid_resolution);
  c.multistart_count = j.value("multistart-count", c.multistart_count);
  c.refine_iterations = j.value("refine-iterations", c.refine_iterations);
  c.tol_solve = j.value("tol-solve", c.tol_solve);
  c.tol_accept = j.value("tol-accept", c.tol_accept);
  c.price_floor = j.value("price-floor", c.price_floor);
  c.seed = j.value("seed", c.seed);
  if (j.contains("weights")) c.weights = vec(j["weights"]);
  c.negishi_max_iterations = j.value("negishi-max-iterations", c.negishi_max_iterations);
  c.max_grid_points = j.value("max-grid-points", c.max_grid_points);
  c.threads = j.value("threads", c.threads);
  return c;
}

void apply_override(SolverConfig& c, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw Error(ErrorCode::invalid_config, "override '" + std::string(assignment) + "' is not key=value");
  }
  std::string key(assignment.substr(0, eq));
  std::replace(key.begin(), key.end(), '_', '-');
  const std::string_view value = assignment.substr(eq + 1);
  if (key == "grid-resolution") c.grid_resolution = parse_integer<int>(key, value);
  else if (key == "multistart-count") c.multistart_count = parse_integer<int>(key, value);
  else if (key == "refine-iterations") c.refine_iterations = parse_integer<int>(key, value);
  else if (key == "tol-solve") c.tol_solve = parse_real(key, value);
  else if (key == "tol-accept") c.tol_accept = parse_real(key, value);
  else if (key == "price-floor") c.price_floor = parse_real(key, value);
  else if (key == "seed") c.seed = parse_integer<std::uint64_t>(key, value);
  else if (key == "negishi-max-iterations") c.negishi_max_iterations = parse_integer<int>(key, value);
  else if (key == "max-grid-points") c.max_grid_points = parse_integer<long>(key, value);
  else if (key == "threads") c.threads = parse_integer<int>(key, value);
  else if (key == "weights") {
    std::vector<double> w;
    std::size_t start = 0;
    while (start <= value.size()) {
      const auto comma = value.find(',', start);
      const auto piece = value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      w.push_back(parse_real(key, piece));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    c.weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
  } else {
    throw Error(ErrorCode::invalid_config, "unknown config key '" + key + "'");
  }
}

json to_json(const EquilibriumResult& r) {
  json j;
  j["kind"] = to_string(r.kind);
  j["allocation"] = mat(r.allocation);
  j["prices"] = vec(r.prices);
  j["incomes"] = vec(r.incomes);
  j["potential"] = number(r.potential);
  j["gaps"] = vec(r.gaps);
  j["weights"] = vec(r.weights);
  j["multiple"] = r.multiple;
  j["alternates"] = json::array();
  for (const auto& a : r.alternates) {
    j["alternates"].push_back({{"allocation", mat(a.allocation)}, {"prices", vec(a.prices)}, {"potential", number(a.potential)}});
  }
  j["price_set"] = json::array();
  for (const auto& p : r.price_set) j["price_set"].push_back(vec(p));
  j["price_min"] = vec(r.price_min);
  j["price_max"] = vec(r.price_max);
  const auto& d = r.diagnostics;
  j["diagnostics"] = {{"status", to_string(d.status)},
                      {"evaluations", d.evaluations},
                      {"iterations", d.iterations},
                      {"restarts", d.restarts},
                      {"clearing_residual", number(d.clearing_residual)},
                      {"budget_residual", number(d.budget_residual)},
                      {"warnings", d.warnings}};
  return j;
}

EquilibriumResult result_from_json(const json& j) {
  EquilibriumResult r;
  r.kind = j.at("kind").get<std::string>() == "walrasian" ? ResultKind::walrasian : ResultKind::yquilibrium;
  r.allocation = mat(j.at("allocation"));
  r.prices = vec(j.at("prices"));
  r.incomes = vec(j.at("incomes"));
  r.potential = number(j.at("potential"));
  r.gaps = vec(j.at("gaps"));
  r.weights = vec(j.at("weights"));
  r.multiple = j.at("multiple").get<bool>();
  for (const auto& a : j.at("alternates")) {
    r.alternates.push_back({mat(a.at("allocation")), vec(a.at("prices")), number(a.at("potential"))});
  }
  for (const auto& p : j.at("price_set")) r.price_set.push_back(vec(p));
  r.price_min = vec(j.at("price_min"));
  r.price_max = vec(j.at("price_max"));
  const auto& d = j.at("diagnostics");
  r.diagnostics.status = status_from_string(d.at("status").get<std::string>());
  r.diagnostics.evaluations = d.at("evaluations").get<long>();
  r.diagnostics.iterations = d.at("iterations").get<int>();
  r.diagnostics.restarts = d.at("restarts").get<int>();
  r.diagnostics.clearing_residual = number(d.at("clearing_residual"));
  r.diagnostics.budget_residual = number(d.at("budget_residual"));
  r.diagnostics.warnings = d.at("warnings").get<std::vector<std::string>>();
  return r;
}

json to_json(const NegishiResult& r) {
  json j;
  j["prices"] = vec(r.prices);
  j["weights"] = vec(r.weights);
  j["dual_welfare"] = number(r.dual_welfare);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["price_trace"] = json::array();
  for (const auto& p : r.price_trace) j["price_trace"].push_back(vec(p));
  j["weight_trace"] = json::array();
  for (const auto& w : r.weight_trace) j["weight_trace"].push_back(vec(w));
  return j;
}

NegishiResult negishi_from_json(const json& j) {
  NegishiResult r;
  r.prices = vec(j.at("prices"));
  r.weights = vec(j.at("weights"));
  r.dual_welfare = number(j.at("dual_welfare"));
  r.iterations = j.at("iterations").get<int>();
  r.converged = j.at("converged").get<bool>();
  for (const auto& p : j.at("price_trace")) r.price_trace.push_back(vec(p));
  for (const auto& w : j.at("weight_trace")) r.weight_trace.push_back(vec(w));
  return r;
}

json to_json(const RunReport& r) {
  json j;
  j["version"] = r.version;
  j["command"] = r.command;
  j["mode"] = r.mode;
  j["seed"] = r.seed;
  j["config"] = to_json(r.config);
  j["economy_digest"] = r.economy_digest;
  j["results"] = json::array();
  for (const auto& res : r.results) j["results"].push_back(to_json(res));
  if (r.negishi) j["negishi"] = to_json(*r.negishi);
  j["wall_time_seconds"] = r.wall_time_seconds;
  j["warnings"] = r.warnings;
  return j;
}

RunReport report_from_json(const json& j) {
  RunReport r;
  r.version = j.at("version").get<std::string>();
  r.command = j.at("command").get<std::string>();
  r.mode = j.at("mode").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config = config_from_json(j.at("config"));
  r.economy_digest = j.at("economy_digest").get<std::string>();
  for (const auto& res : j.at("results")) r.results.push_back(result_from_json(res));
  if (j.contains("negishi")) r.negishi = negishi_from_json(j["negishi"]);
  r.wall_time_seconds = j.at("wall_time_seconds").get<double>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

}  // namespace geq
