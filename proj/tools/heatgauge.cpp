// heatgauge command line: run suites, print CD tables, emit plot data.
//
// Exit codes: 0 all rows as expected (INCONCLUSIVE allowed), 1 a claim
// FAILed or a control passed, 2 configuration error, 3 numeric error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "heatgauge.hpp"

namespace hg = heatgauge;
namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::string config;
  std::vector<std::string> suites;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> n_paths;
  std::optional<std::string> geometry;
  std::vector<std::string> functions;
  std::optional<double> p;
  std::optional<std::string> cache_dir;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON experiment config");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--n-paths", o.n_paths, "Monte Carlo sample size");
  cmd->add_option("--geometry", o.geometry, "euclidean:N | hyperbolic3 | heisenberg");
  cmd->add_option("--function", o.functions, "catalog function id (repeatable)");
  cmd->add_option("--p", o.p, "exponent p");
  cmd->add_option("--cache-dir", o.cache_dir, "endpoint cache directory");
}

hg::ExperimentConfig resolve(const Overrides& o) {
  hg::ExperimentConfig c;
  if (!o.config.empty()) c = hg::load_config(o.config);
  if (!o.suites.empty()) c.suites = o.suites;
  if (o.seed) c.seed = o.seed;
  if (o.n_paths) c.n_paths = o.n_paths;
  if (o.geometry) c.geometry = o.geometry;
  if (!o.functions.empty()) c.functions = o.functions;
  if (o.p) c.p = o.p;
  if (o.cache_dir) c.cache_dir = o.cache_dir;
  c.validate();
  for (const auto& s : c.suites) {
    const auto names = hg::suite_names();
    if (std::find(names.begin(), names.end(), s) == names.end())
      throw hg::ConfigError("suite", 0, "unknown suite '" + s + "'");
  }
  return c;
}

void write_file(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw hg::InvalidInput("cannot write " + file.string());
  out << text;
}

void print_rows(const std::vector<hg::InequalityReport>& rows) {
  for (const auto& r : rows) {
    std::printf("%-13s %-36s %-14s %-12s param=%-10.4g lhs=%-12.6g rhs=%-12.6g margin=%-11.3e%s\n",
                std::string(hg::to_string(r.verdict)).c_str(), r.claim.c_str(), r.geometry.c_str(),
                r.function.c_str(), r.param, r.lhs, r.rhs, r.margin, r.control ? "  [control]" : "");
  }
}

int cmd_run(const Overrides& o, const std::string& out_dir) {
  auto cfg = resolve(o);
  const auto names = cfg.suites.empty() ? hg::suite_names() : cfg.suites;
  std::vector<hg::InequalityReport> rows;
  std::vector<hg::EstimateRow> est;
  for (const auto& name : names) {
    auto res = hg::run_suite(name, cfg);
    print_rows(res.rows);
    for (auto& r : res.rows) rows.push_back(std::move(r));
    for (auto& e : res.estimates) est.push_back(std::move(e));
  }
  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "report.json", hg::report_json(rows, est).dump(2) + "\n");
  write_file(fs::path(out_dir) / "report.csv", hg::report_csv(rows));
  const auto s = hg::summarize(rows);
  std::printf("rows=%zu pass=%zu pass-exact=%zu inconclusive=%zu fail=%zu controls=%zu/%zu failed as expected\n",
              rows.size(), s.pass, s.pass_exact, s.inconclusive, s.fail, s.controls_failed, s.controls);
  std::printf("report: %s\n", (fs::path(out_dir) / "report.json").string().c_str());
  if (s.inconclusive) std::fprintf(stderr, "warning: %zu INCONCLUSIVE row(s)\n", s.inconclusive);
  return s.unexpected == 0 ? 0 : 1;
}

int cmd_cd_check(double convention) {
  namespace gc = hg::gamma_calculus;
  const gc::Convention conv{convention};
  std::vector<std::array<double, 3>> pts{{0.0, 0.0, 0.0}};
  for (double x : {-2.0, -1.0, 0.5, 2.0})
    for (double y : {-1.5, 0.0, 1.0})
      for (double z : {-1.0, 0.0, 2.0}) pts.push_back({x, y, z});
  const std::vector<double> nus{0.1, 1.0, 10.0};
  std::printf("CD(%g,%g,%g,%g), L = %g (Y1^2 + Y2^2)\n", gc::kHeisenbergCD.rho1, gc::kHeisenbergCD.rho2,
              gc::kHeisenbergCD.kappa, gc::kHeisenbergCD.d, convention);
  std::printf("%-10s %-14s %-26s %s\n", "function", "worst margin", "witness point", "witness nu");
  bool ok = true;
  for (const auto& f : hg::catalog_functions(hg::GeometryId::heisenberg())) {
    const auto rep = gc::check_cd(*f.polynomial, gc::kHeisenbergCD, pts, nus, conv);
    char where[64];
    std::snprintf(where, sizeof where, "(%g,%g,%g)", rep.witness_point[0], rep.witness_point[1],
                  rep.witness_point[2]);
    std::printf("%-10s %-14.6g %-26s %g\n", f.id.c_str(), rep.worst_margin, where, rep.witness_nu);
    ok = ok && rep.pass;
  }
  return ok ? 0 : 1;
}

int cmd_plot_data(const Overrides& o, const std::string& suite, const std::string& out_file) {
  auto cfg = resolve(o);
  const auto res = hg::run_suite(suite, cfg);
  const auto csv = hg::plot_data_csv(res.rows);
  if (out_file.empty()) std::fputs(csv.c_str(), stdout);
  else write_file(out_file, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heatgauge: heat-kernel inequality verifier"};
  app.require_subcommand(1);

  Overrides run_o;
  std::string out_dir = "heatgauge-out";
  auto* run = app.add_subcommand("run", "run verification suites");
  add_overrides(run, run_o);
  run->add_option("--suite", run_o.suites, "suite name (repeatable); default all");
  run->add_option("--out", out_dir, "output directory for report.json and report.csv");

  double convention = 1.0;
  auto* cd = app.add_subcommand("cd-check", "curvature-dimension table for the Heisenberg catalog");
  cd->add_option("--convention", convention, "L = c (Y1^2 + Y2^2)")->check(CLI::IsMember({0.5, 1.0}));

  Overrides plot_o;
  std::string plot_suite, plot_out;
  auto* plot = app.add_subcommand("plot-data", "emit (x, lhs, rhs) columns for a suite");
  add_overrides(plot, plot_o);
  plot->add_option("--suite", plot_suite, "suite name")->required();
  plot->add_option("--out", plot_out, "output CSV (default stdout)");

  auto* list = app.add_subcommand("list", "list suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(run_o, out_dir);
    if (*cd) return cmd_cd_check(convention);
    if (*plot) return cmd_plot_data(plot_o, plot_suite, plot_out);
    if (*list) {
      for (const auto& n : hg::suite_names()) std::puts(n.c_str());
      return 0;
    }
  } catch (const hg::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const hg::ClaimError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const hg::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const hg::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
