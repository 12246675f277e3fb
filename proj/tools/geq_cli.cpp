#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "geq/duality.hpp"
#include "geq/economy.hpp"
#include "geq/oracle.hpp"
#include "geq/report.hpp"
#include "geq/solvers.hpp"
#include "geq/utility.hpp"

#ifndef GEQ_DATA_DIR
#define GEQ_DATA_DIR "data/economies"
#endif

namespace fs = std::filesystem;
using namespace geq;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNoRoot = 2;

fs::path data_dir() {
  if (const char* env = std::getenv("GEQ_DATA_DIR"); env && *env) return env;
  return GEQ_DATA_DIR;
}

std::string fmt(double v, int digits = 7) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  // Avoid printing "-0.0000000".
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

void print_diagnostics(const Error& e) {
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    for (const auto& d : v->diagnostics()) {
      std::cerr << "error: " << to_string(d.code) << " at " << (d.where.empty() ? "/" : d.where) << ": " << d.message
                << "\n";
    }
    return;
  }
  std::cerr << "error: " << to_string(e.code());
  if (!e.where().empty()) std::cerr << " at " << e.where();
  std::cerr << ": " << e.what() << "\n";
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(ErrorCode::invalid_config, "cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

void write_result_csv(std::ostream& out, const Economy& e, const std::vector<EquilibriumResult>& results) {
  const std::size_t n = e.consumers(), k = e.goods();
  out << "index,kind,status,potential,multiple";
  for (std::size_t j = 0; j < k; ++j) out << ",p_" << j + 1;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) out << ",x_" << i + 1 << "_" << j + 1;
  for (std::size_t i = 0; i < n; ++i) out << ",m_" << i + 1;
  for (std::size_t i = 0; i < n; ++i) out << ",gap_" << i + 1;
  out << "\n";
  for (std::size_t r = 0; r < results.size(); ++r) {
    const auto& res = results[r];
    out << r << "," << to_string(res.kind) << "," << to_string(res.diagnostics.status) << "," << fmt(res.potential, 10)
        << "," << (res.multiple ? 1 : 0);
    for (Eigen::Index j = 0; j < res.prices.size(); ++j) out << "," << fmt(res.prices[j], 10);
    for (Eigen::Index i = 0; i < res.allocation.rows(); ++i)
      for (Eigen::Index j = 0; j < res.allocation.cols(); ++j) out << "," << fmt(res.allocation(i, j), 10);
    for (Eigen::Index i = 0; i < res.incomes.size(); ++i) out << "," << fmt(res.incomes[i], 10);
    for (Eigen::Index i = 0; i < res.gaps.size(); ++i) out << "," << fmt(res.gaps[i], 10);
    out << "\n";
  }
}

void write_negishi_csv(std::ostream& out, const NegishiResult& r) {
  out << "iteration";
  for (Eigen::Index j = 0; j < r.prices.size(); ++j) out << ",p_" << j + 1;
  for (Eigen::Index i = 0; i < r.weights.size(); ++i) out << ",alpha_" << i + 1;
  out << "\n";
  for (std::size_t t = 0; t < r.price_trace.size(); ++t) {
    out << t;
    for (Eigen::Index j = 0; j < r.price_trace[t].size(); ++j) out << "," << fmt(r.price_trace[t][j], 10);
    const Vector& a = t < r.weight_trace.size() ? r.weight_trace[t] : r.weights;
    for (Eigen::Index i = 0; i < a.size(); ++i) out << "," << fmt(a[i], 10);
    out << "\n";
  }
}

void write_contract_csv(std::ostream& out, const Economy& e, const std::vector<oracle::ContractPoint>& pts) {
  const std::size_t n = e.consumers(), k = e.goods();
  for (std::size_t i = 0; i < n; ++i) out << "u_" << i + 1 << ",";
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) out << "x_" << i + 1 << "_" << j + 1 << ",";
  out << "certified";
  for (std::size_t j = 0; j < k; ++j) out << ",p_" << j + 1;
  out << "\n";
  for (const auto& c : pts) {
    for (Eigen::Index i = 0; i < c.utilities.size(); ++i) out << fmt(c.utilities[i], 10) << ",";
    for (Eigen::Index i = 0; i < c.allocation.rows(); ++i)
      for (Eigen::Index j = 0; j < c.allocation.cols(); ++j) out << fmt(c.allocation(i, j), 10) << ",";
    out << (c.prices ? 1 : 0);
    for (std::size_t j = 0; j < k; ++j) {
      out << ",";
      if (c.prices) out << fmt((*c.prices)[static_cast<Eigen::Index>(j)], 10);
    }
    out << "\n";
  }
}

// ---- solve ----

struct SolveOptions {
  std::string file;
  std::string mode = "walrasian";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "json";
  std::optional<int> threads;
};

SolverConfig build_config(const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed,
                          std::optional<int> threads) {
  SolverConfig cfg;
  for (const auto& o : overrides) apply_override(cfg, o);
  if (seed) cfg.seed = *seed;
  if (threads) cfg.threads = *threads;
  cfg.validate();
  return cfg;
}

std::string command_echo(int argc, char** argv) {
  std::string s;
  for (int i = 1; i < argc; ++i) {
    if (i > 1) s += ' ';
    s += argv[i];
  }
  return s;
}

int run_solve(const SolveOptions& opt, const std::string& echo) {
  const auto start = std::chrono::steady_clock::now();
  const Economy e = load_economy(opt.file);
  const SolverConfig cfg = build_config(opt.overrides, opt.seed, opt.threads);

  RunReport report;
  report.version = version();
  report.command = echo;
  report.mode = opt.mode;
  report.seed = cfg.seed;
  report.config = cfg;
  report.economy_digest = economy_digest(e);

  int code = kExitOk;
  if (opt.mode == "walrasian") {
    if (e.parameterization() == Parameterization::income) {
      report.results.push_back(solve_walrasian_income(e, cfg));
    } else {
      report.results = solve_walrasian_endowment(e, cfg);
    }
    if (report.results.empty()) {
      report.warnings.push_back("no fixed point of the income map was located");
      code = kExitNoRoot;
    }
    for (const auto& r : report.results) {
      if (r.potential < -cfg.tol_accept) {
        report.warnings.push_back("best potential " + fmt(r.potential, 9) + " is below -tol-accept; no Walrasian equilibrium");
        code = kExitNoRoot;
      }
    }
  } else if (opt.mode == "yquilibrium") {
    report.results.push_back(solve_yquilibrium(e, cfg));
  } else {
    report.negishi = dual_negishi_minimize(e, cfg);
    if (!report.negishi->converged) report.warnings.push_back("dual Negishi iteration did not converge");
  }
  for (const auto& r : report.results)
    for (const auto& w : r.diagnostics.warnings) report.warnings.push_back(w);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  Output out(opt.out);
  if (opt.format == "json") {
    out.stream() << to_json(report).dump(2) << "\n";
  } else if (report.negishi) {
    write_negishi_csv(out.stream(), *report.negishi);
  } else {
    write_result_csv(out.stream(), e, report.results);
  }
  return code;
}

// ---- sample ----

struct SampleOptions {
  std::string file;
  std::string set = "ups";
  int resolution = 41;
  std::vector<std::string> overrides;
  std::string out;
  bool unrestricted = false;
  std::optional<int> threads;
};

int run_sample(const SampleOptions& opt) {
  const Economy e = load_economy(opt.file);
  const SolverConfig cfg = build_config(opt.overrides, std::nullopt, opt.threads);
  if (opt.resolution < 2) throw Error(ErrorCode::complexity_guard, "resolution must be at least 2", "--resolution");
  Output out(opt.out);
  if (opt.set == "ups") {
    oracle::write_csv(out.stream(), oracle::sample_ups(e, opt.resolution, cfg));
  } else if (opt.set == "vps") {
    const auto mode = opt.unrestricted ? IndirectMode::unrestricted : IndirectMode::restricted;
    oracle::write_csv(out.stream(), oracle::sample_vps(e, opt.resolution, mode, cfg));
  } else {
    if (e.parameterization() != Parameterization::endowment) {
      throw Error(ErrorCode::invalid_config, "contract surface sampling needs an endowment economy", "--set");
    }
    write_contract_csv(out.stream(), e, oracle::contract_surface_sample(e, opt.resolution, true, cfg));
  }
  return kExitOk;
}

// ---- demo ----

struct Demo {
  fs::path dir;
  SolverConfig cfg;
  std::ostream& log;

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) const {
    std::ofstream f(dir / name);
    if (!f) throw Error(ErrorCode::invalid_config, "cannot write " + (dir / name).string());
    body(f);
    log << "wrote " << name << "\n";
  }
  void compare(const std::string& what, double computed, double reference) const {
    log << what << ": computed " << fmt(computed) << ", closed form " << fmt(reference) << ", difference "
        << fmt(std::abs(computed - reference), 7) << "\n";
  }
};

Economy bundled(const std::string& name) { return load_economy(data_dir() / name); }

void clouds(const Demo& d, const Economy& e, const std::string& prefix, int res) {
  d.write(prefix + "_ups.csv", [&](std::ostream& o) { oracle::write_csv(o, oracle::sample_ups(e, res, d.cfg)); });
  d.write(prefix + "_vps.csv", [&](std::ostream& o) { oracle::write_csv(o, oracle::sample_vps(e, res, IndirectMode::restricted, d.cfg)); });
}

// Walrasian allocations of the income-mode economy as the first consumer's income varies.
void income_path(const Demo& d, const Economy& e, const std::string& name, int steps) {
  d.write(name, [&](std::ostream& o) {
    o << "m_1,p_1,p_2,x_1_1,x_1_2,x_2_1,x_2_2,potential\n";
    for (int s = 1; s < steps; ++s) {
      const double m = double(s) / steps;
      const auto r = solve_walrasian_income(e.with_incomes((Vector(2) << m, 1.0 - m).finished()), d.cfg);
      o << fmt(m, 4) << "," << fmt(r.prices[0]) << "," << fmt(r.prices[1]);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) o << "," << fmt(r.allocation(i, j));
      o << "," << fmt(r.potential, 9) << "\n";
    }
  });
}

void demo_fig1(const Demo& d) {
  const Economy e = bundled("fenchel.json");
  clouds(d, e, "fig1", 41);
  income_path(d, e, "fig1_edgeworth.csv", 20);
  const auto r = solve_walrasian_income(e, d.cfg);
  const double s3 = std::sqrt(3.0);
  d.compare("p_1 at m = 1/2", r.prices[0], s3 - 1.0);
  d.compare("line residual x_12 - (1 + sqrt3/2 - (1 + sqrt3) x_11)", r.allocation(0, 1) - (1 + s3 / 2 - (1 + s3) * r.allocation(0, 0)), 0.0);
  d.log << "equilibrium segment x_11 in [" << fmt((3 - s3) / 4) << ", " << fmt((1 + s3) / 4) << "]\n";
}

void demo_fig2(const Demo& d) {
  const auto base = UtilityFunction::max_linear(Vector((Vector(2) << 2.0, 1.0).finished()));
  const Vector cap = Vector::Ones(2);
  const auto wrapped = UtilityFunction::quasiconcavified(base, cap, d.cfg);
  double worst = 0.0;
  d.write("fig2_indifference.csv", [&](std::ostream& o) {
    o << "x,y,u,u_bar,closed_form\n";
    const int r = 21;
    for (int a = 0; a < r; ++a) {
      for (int b = 0; b < r; ++b) {
        const double x = double(a) / (r - 1), y = double(b) / (r - 1);
        const Vector v = (Vector(2) << x, y).finished();
        const double ub = wrapped(v), cf = std::max(std::min(2 * x + y, 1.0), 2 * x);
        worst = std::max(worst, std::abs(ub - cf));
        o << fmt(x, 4) << "," << fmt(y, 4) << "," << fmt(base(v)) << "," << fmt(ub) << "," << fmt(cf) << "\n";
      }
    }
  });
  d.compare("max |u_bar - max(min(2x+y,1),2x)| on a 21x21 grid", worst, 0.0);
}

void demo_fig3(const Demo& d) {
  const Economy e = bundled("nonconvex.json");
  clouds(d, e, "fig3", 41);
  const auto r = solve_yquilibrium(e, d.cfg);
  d.compare("Yquilibrium p_1 at omega_1 = (1/2, 1/2)", r.prices[0], 5.0 / 6.0);
  d.compare("Yquilibrium x_11", r.allocation(0, 0), 0.4);
  d.compare("Yquilibrium x_12", r.allocation(0, 1), 1.0);
}

// Price and x_11 of the top-edge Yquilibrium for the bilateral max/Cobb-Douglas economy.
struct RegionForm {
  int region = 0;
  double p = 0.0;
  double x11 = 0.0;
};

RegionForm region_closed_form(double a, double b) {
  const double sb = std::sqrt(b);
  if (a <= 0.75 && b <= 3.0 - 4.0 * a) return {1, (3.0 - b) / (3.0 + a - b), 2.0 * a / (3.0 - b)};
  if (a >= 0.5 && a <= 1.0 && b >= 3.0 - 4.0 * a && b <= std::min(1.0 / (4.0 * a * a), 2.0 - 2.0 * a))
    return {2, (2.0 - 2.0 * b) / (1.0 + 2.0 * a - 2.0 * b), 0.5};
  if (a >= (1.0 + std::sqrt(5.0)) / 4.0 && b >= 2.0 - 2.0 * a && b <= (2.0 * a - 1.0) * (2.0 * a - 1.0))
    return {3, 2.0 / 3.0, a + b / 2.0 - 0.5};
  if (a >= 0.5 && b >= std::max(1.0 / (4.0 * a * a), (2.0 * a - 1.0) * (2.0 * a - 1.0)))
    return {4, (1.0 + sb) / (1.0 + a + sb), a * sb};
  return {};
}

const char* roman(int r) {
  static const char* names[] = {"-", "I", "II", "III", "IV"};
  return names[r];
}

void demo_fig3_regions(const Demo& d) {
  const Economy base = bundled("nonconvex.json");
  double worst = 0.0;
  d.write("fig3_regions.csv", [&](std::ostream& o) {
    o << "omega_11,omega_12,region,p_1_closed,x_11_closed,p_1,x_11,x_12\n";
    const int r = 8;
    for (int a = 1; a < r; ++a) {
      for (int b = 1; b < r; ++b) {
        const double w1 = double(a) / r, w2 = double(b) / r;
        const Allocation om = (Allocation(2, 2) << w1, w2, 1.0 - w1, 1.0 - w2).finished();
        const auto res = solve_yquilibrium(base.with_endowments(om), d.cfg);
        const RegionForm f = region_closed_form(w1, w2);
        o << fmt(w1, 4) << "," << fmt(w2, 4) << "," << roman(f.region) << ",";
        if (f.region) {
          o << fmt(f.p) << "," << fmt(f.x11);
          worst = std::max({worst, std::abs(res.prices[0] - f.p), std::abs(res.allocation(0, 0) - f.x11)});
        } else {
          o << ",";
        }
        o << "," << fmt(res.prices[0]) << "," << fmt(res.allocation(0, 0)) << "," << fmt(res.allocation(0, 1)) << "\n";
      }
    }
  });
  d.compare("max closed-form deviation over classified grid points", worst, 0.0);
}

void demo_fig4(const Demo& d) {
  const Economy e = bundled("nonconvex.json");
  const Economy concave = e.with_utility(1, UtilityFunction::linear(Vector((Vector(2) << 2.0, 1.0).finished())));
  const Economy quasi = e.with_utility(1, UtilityFunction::quasiconcavified(e.utility(1), e.supply(), d.cfg));
  clouds(d, concave, "fig4_concave", 31);
  clouds(d, quasi, "fig4_quasiconcave", 21);
  const auto r = solve_walrasian_income(concave.with_incomes((Vector(2) << 0.5, 0.5).finished()), d.cfg);
  d.compare("concavified economy Walrasian p_1", r.prices[0], 2.0 / 3.0);
}

void demo_fig5(const Demo& d) {
  const Economy e = bundled("cobb_douglas.json");
  clouds(d, e, "fig5", 41);
  income_path(d, e, "fig5_edgeworth.csv", 20);
  const auto r = solve_walrasian_income(e, d.cfg);
  d.compare("p_1 at m = 1/2", r.prices[0], 0.5);
  const Economy en = bundled("cobb_douglas_endowment.json");
  const auto n = dual_negishi_minimize(en, d.cfg);
  const Allocation om = en.endowments();
  d.compare("dual Negishi p_1 at omega_1 = (0.3, 0.6)", n.prices[0], (1 + om(0, 1)) / (3 - om(0, 0) + om(0, 1)));
}

int run_demo(const std::string& id, const std::string& dir, const SolverConfig& cfg) {
  static const std::map<std::string, void (*)(const Demo&)> demos = {
      {"fig1", demo_fig1}, {"fig2", demo_fig2}, {"fig3", demo_fig3},
      {"fig3-regions", demo_fig3_regions}, {"fig4", demo_fig4}, {"fig5", demo_fig5},
  };
  const auto it = demos.find(id);
  if (it == demos.end()) {
    std::string known;
    for (const auto& [k, _] : demos) known += (known.empty() ? "" : ", ") + k;
    throw Error(ErrorCode::unknown_id, "unknown demo '" + id + "'; expected one of " + known);
  }
  fs::create_directories(dir);
  Demo d{dir, cfg, std::cout};
  it->second(d);
  return kExitOk;
}

int run_validate(const std::string& file) {
  const Economy e = load_economy(file);
  std::cout << "ok: " << e.consumers() << " consumers, " << e.goods() << " goods, "
            << (e.parameterization() == Parameterization::income ? "income" : "endowment") << " mode, digest "
            << economy_digest(e) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibrium and Yquilibrium solver for exchange economies"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  SolveOptions solve;
  auto* cmd_solve = app.add_subcommand("solve", "Solve an economy file");
  cmd_solve->add_option("file", solve.file, "Economy JSON file")->required();
  cmd_solve->add_option("--mode", solve.mode, "walrasian, yquilibrium or dual-negishi")
      ->check(CLI::IsMember({"walrasian", "yquilibrium", "dual-negishi"}));
  cmd_solve->add_option("--config", solve.overrides, "Solver setting override key=value (repeatable)");
  cmd_solve->add_option("--seed", solve.seed, "Random seed");
  cmd_solve->add_option("--out", solve.out, "Write the report here instead of stdout");
  cmd_solve->add_option("--format", solve.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  cmd_solve->add_option("--threads", solve.threads, "Worker cap")->check(CLI::NonNegativeNumber);

  SampleOptions sample;
  auto* cmd_sample = app.add_subcommand("sample", "Sample utility or indirect-utility possibility sets");
  cmd_sample->add_option("file", sample.file, "Economy JSON file")->required();
  cmd_sample->add_option("--set", sample.set, "ups, vps or contract")->check(CLI::IsMember({"ups", "vps", "contract"}));
  cmd_sample->add_option("--resolution", sample.resolution, "Grid resolution per axis (at least 2)");
  cmd_sample->add_option("--config", sample.overrides, "Solver setting override key=value (repeatable)");
  cmd_sample->add_option("--out", sample.out, "Write the CSV here instead of stdout");
  cmd_sample->add_flag("--unrestricted", sample.unrestricted, "VPS with indirect utilities not capped at supply");
  cmd_sample->add_option("--threads", sample.threads, "Worker cap")->check(CLI::NonNegativeNumber);

  std::string demo_id, demo_dir = ".";
  std::vector<std::string> demo_overrides;
  auto* cmd_demo = app.add_subcommand("demo", "Write plot data for a bundled figure");
  cmd_demo->add_option("id", demo_id, "fig1, fig2, fig3, fig3-regions, fig4 or fig5")->required();
  cmd_demo->add_option("--out-dir", demo_dir, "Directory for the CSV files");
  cmd_demo->add_option("--config", demo_overrides, "Solver setting override key=value (repeatable)");

  std::string validate_file;
  auto* cmd_validate = app.add_subcommand("validate", "Check an economy file");
  cmd_validate->add_option("file", validate_file, "Economy JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*cmd_solve) return run_solve(solve, command_echo(argc, argv));
    if (*cmd_sample) return run_sample(sample);
    if (*cmd_demo) return run_demo(demo_id, demo_dir, build_config(demo_overrides, std::nullopt, std::nullopt));
    if (*cmd_validate) return run_validate(validate_file);
  } catch (const Error& e) {
    print_diagnostics(e);
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitOk;
}
