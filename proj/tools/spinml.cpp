// spinml: ground states of spin-1/2 chains and lattices with tree tensor networks.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "spinml/harness.hpp"

namespace fs = std::filesystem;
using namespace spinml;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kNotConverged = 2;
constexpr int kConfigError = 3;

struct Overrides {
  std::string out;
  int jobs = 1;
  std::optional<std::uint64_t> base_seed;
  std::optional<int> realizations;
  std::optional<int> max_steps;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--jobs", o.jobs, "parallel realizations")->check(CLI::PositiveNumber);
  cmd->add_option("--base-seed", o.base_seed, "first disorder seed");
  cmd->add_option("--realizations", o.realizations, "ensemble size")->check(CLI::PositiveNumber);
  cmd->add_option("--max-steps", o.max_steps, "relaxation iteration cap")->check(CLI::PositiveNumber);
}

RunConfig load(const std::string& path, const Overrides& o) {
  RunConfig cfg = load_run_config(path);
  if (const char* env = std::getenv("SPINML_SEED")) {
    try {
      cfg.ensemble.base_seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("SPINML_SEED is not an unsigned integer: ") + env);
    }
  }
  if (o.base_seed) cfg.ensemble.base_seed = *o.base_seed;
  if (o.realizations) cfg.ensemble.num_realizations = *o.realizations;
  if (o.max_steps) cfg.relax.max_steps = *o.max_steps;
  if (!o.out.empty()) cfg.output_dir = o.out;
  return cfg;
}

int report(const RunResult& r) {
  std::cout.precision(15);
  for (const auto& z : r.realizations) {
    std::cout << "seed " << z.seed << "  E0 " << z.energy << "  steps " << z.trace.records.size()
              << (z.converged ? "" : "  NOT CONVERGED");
    if (z.ed) std::cout << "  E_ed " << z.ed->e_ed << "  dE_rel " << z.ed->delta_e_rel
                        << (z.ed->degenerate ? "  (degenerate)" : "");
    if (!z.error.empty()) std::cout << "  error: " << z.error;
    std::cout << '\n';
  }
  if (r.realizations.size() > 1) std::cout << "mean E0 " << r.energy_mean << " +- " << r.energy_stderr << '\n';
  if (r.all_converged()) return kOk;
  std::cerr << "non-converged seeds:";
  for (auto s : r.failed_seeds()) std::cerr << ' ' << s;
  std::cerr << '\n';
  return kNotConverged;
}

int cmd_relax(const std::string& config, const Overrides& o, bool compare) {
  const RunConfig cfg = load(config, o);
  RunOptions opts;
  opts.jobs = o.jobs;
  opts.compare_ed = compare;
  return report(run_relaxation(cfg, opts));
}

int cmd_ed(const std::string& config, const Overrides& o, int levels) {
  const RunConfig cfg = load(config, o);
  fs::create_directories(cfg.output_dir);
  std::cout.precision(15);
  for (auto seed : realization_seeds(cfg.ensemble)) {
    const auto H = build_realization(cfg, seed);
    const auto states = ed_ground_state(H, levels);
    const std::string stem = (fs::path(cfg.output_dir) / (cfg.name + "_seed" + std::to_string(seed))).string();
    write_edstate(stem + ".edstate", states.front());
    const auto obs = ed_observables(states.front(), cfg.observables.correlation_axes, cfg.observables.entropy);
    for (const auto& [a, c] : obs.correlations) write_correlation_csv(stem + ".ed_corr_" + axis_label(a) + ".csv", c);
    if (cfg.observables.entropy) write_entropy_csv(stem + ".ed_entropy.csv", obs.entropy);
    std::cout << "seed " << seed;
    for (const auto& s : states) std::cout << "  " << s.energy << (s.degenerate ? "*" : "");
    std::cout << '\n';
  }
  return kOk;
}

int cmd_compare(const std::string& config, const Overrides& o) {
  const RunConfig cfg = load(config, o);
  RunOptions opts;
  opts.jobs = o.jobs;
  opts.compare_ed = true;
  const auto r = run_relaxation(cfg, opts);
  const int status = report(r);
  std::cout << "seed,E_ml,E_ed,delta_e_rel,max_abs_dC,max_abs_dS,degenerate\n";
  for (const auto& row : comparison_rows(r))
    std::cout << row.seed << ',' << row.e_ml << ',' << row.e_ed << ',' << row.delta_e_rel << ',' << row.max_delta_c
              << ',' << row.max_delta_s << ',' << row.degenerate << '\n';
  return status;
}

int cmd_figures(const std::vector<std::string>& configs, const Overrides& o, const std::vector<std::string>& figures,
                bool compare) {
  std::vector<RunResult> results;
  int status = kOk;
  std::string out = o.out;
  for (const auto& c : configs) {
    const RunConfig cfg = load(c, o);
    if (out.empty()) out = cfg.output_dir;
    RunOptions opts;
    opts.jobs = o.jobs;
    opts.compare_ed = compare;
    results.push_back(run_relaxation(cfg, opts));
    status = std::max(status, report(results.back()));
  }
  for (const auto& f : figures)
    for (const auto& p : emit_figure_data(results, parse_figure(f), out)) std::cout << "wrote " << p << '\n';
  return status;
}

int cmd_validate_tree(const std::string& path, int sites) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  TreeSpec spec;
  try {
    spec = parse_tree(doc);
  } catch (const Error& e) {
    std::cout << path << ": " << e.what() << '\n';
    return kConfigError;
  }
  auto problems = validate(spec);
  if (sites > 0 && spec.num_sites() != sites)
    problems.push_back("tree covers " + std::to_string(spec.num_sites()) + " sites, expected " + std::to_string(sites));
  for (const auto& p : problems) std::cout << path << ": " << p << '\n';
  if (!problems.empty()) return kConfigError;
  std::cout << path << ": ok, " << spec.num_sites() << " sites, " << spec.size() << " nodes, " << spec.layer_count()
            << " layers\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree tensor network ground states of spin-1/2 models"};
  app.require_subcommand(1);

  Overrides o;
  std::string config;
  bool compare = false;

  auto* relax = app.add_subcommand("relax", "relax the ground state of every realization");
  relax->add_option("--config", config, "run configuration (.run.json)")->required()->check(CLI::ExistingFile);
  relax->add_flag("--compare-ed", compare, "compare with exact diagonalization");
  add_overrides(relax, o);

  int levels = 1;
  auto* ed = app.add_subcommand("ed", "exact diagonalization of the configured model");
  ed->add_option("--config", config, "run configuration")->required()->check(CLI::ExistingFile);
  ed->add_option("--levels", levels, "number of lowest levels")->check(CLI::PositiveNumber);
  add_overrides(ed, o);

  auto* cmp = app.add_subcommand("compare", "relaxation against exact diagonalization, one row per seed");
  cmp->add_option("--config", config, "run configuration")->required()->check(CLI::ExistingFile);
  add_overrides(cmp, o);

  auto* sweep = app.add_subcommand("sweep", "disorder ensemble run");
  sweep->add_option("--config", config, "run configuration")->required()->check(CLI::ExistingFile);
  sweep->add_flag("--compare-ed", compare, "compare with exact diagonalization");
  add_overrides(sweep, o);

  std::vector<std::string> configs;
  std::vector<std::string> figures{"energy_vs_L", "convergence", "correlations", "entropy"};
  auto* fig = app.add_subcommand("figures", "emit figure data");
  fig->add_option("--config", configs, "run configurations")->required()->check(CLI::ExistingFile);
  fig->add_option("--figure", figures, "energy_vs_L, convergence, correlations, entropy")
      ->check(CLI::IsMember({"energy_vs_L", "convergence", "correlations", "entropy"}));
  fig->add_flag("--compare-ed", compare, "include exact references");
  add_overrides(fig, o);

  std::string tree_path;
  int sites = 0;
  auto* vt = app.add_subcommand("validate-tree", "check a .tree.json document");
  vt->add_option("tree", tree_path, "tree document")->required()->check(CLI::ExistingFile);
  vt->add_option("--sites", sites, "expected number of sites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*relax) return cmd_relax(config, o, compare);
    if (*sweep) return cmd_relax(config, o, compare);
    if (*ed) return cmd_ed(config, o, levels);
    if (*cmp) return cmd_compare(config, o);
    if (*fig) return cmd_figures(configs, o, figures, compare);
    if (*vt) return cmd_validate_tree(tree_path, sites);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const TopologyError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
