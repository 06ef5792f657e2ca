#pragma once

// Run configuration, disorder ensembles, ED comparison reports and
// figure-data emission.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinml/model.hpp"
#include "spinml/observables.hpp"
#include "spinml/oracle.hpp"
#include "spinml/relax.hpp"
#include "spinml/tree.hpp"

namespace spinml {

struct TreeRequest {
  std::string builder = "binary";  // binary | grid | mode_combination | file | document
  std::vector<int> spf;
  std::vector<std::vector<int>> groups;  // 0-based sites
  std::vector<int> m;
  std::string file;
  nlohmann::json document;
};

struct EnsembleConfig {
  int num_realizations = 1;
  std::uint64_t base_seed = 1;
};

struct ObservableRequest {
  std::vector<Axis> correlation_axes{Axis::Z};
  bool entropy = true;
  bool absolute_average = false;
  int max_degenerate_levels = 4;  // ED levels examined for the entropy range
};

struct InitialState {
  std::string kind = "random";  // random | product
  std::uint64_t seed = 7;       // added to the realization seed
  Bloch direction{0.0, 0.0, 1.0};
};

struct RunConfig {
  nlohmann::json model;
  TreeRequest tree;
  RelaxConfig relax;
  EnsembleConfig ensemble;
  ObservableRequest observables;
  InitialState initial;
  std::string output_dir = "out";
  std::string name = "run";
};

/// Reads a .run.json document; relative paths resolve against its directory.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const nlohmann::json& doc, const std::string& base_dir = ".");
nlohmann::json run_config_to_json(const RunConfig& cfg);

/// Seeds of the ensemble: base_seed + index.
std::vector<std::uint64_t> realization_seeds(const EnsembleConfig& e);
SumOfProducts build_realization(const RunConfig& cfg, std::uint64_t seed);

/// Coupling realizations of an ensemble, one Hamiltonian per seed.
struct DisorderEnsemble {
  std::vector<std::uint64_t> seeds;
  std::vector<SumOfProducts> hamiltonians;
};
DisorderEnsemble make_ensemble(const RunConfig& cfg);
TreeSpec build_tree(const RunConfig& cfg, const SumOfProducts& H);
MlState initial_state(const RunConfig& cfg, const TreeSpec& spec, std::uint64_t seed);

struct EdComparison {
  double e_ed = 0.0;
  double delta_e_rel = 0.0;
  double max_delta_c = 0.0;
  double max_delta_s = 0.0;
  bool degenerate = false;
  int levels = 1;
  std::vector<std::pair<Axis, Eigen::MatrixXd>> correlations;  // from the aligned ED state
  std::vector<double> entropy;
  std::vector<double> entropy_min;  // over sampled states of the degenerate manifold
  std::vector<double> entropy_max;
};

struct RealizationResult {
  std::uint64_t seed = 0;
  double energy = 0.0;
  bool converged = false;
  std::string error;
  ConvergenceTrace trace;
  std::vector<std::pair<Axis, Eigen::MatrixXd>> correlations;
  std::vector<double> entropy;  // NaN where unavailable
  std::optional<EdComparison> ed;
  std::optional<MlState> state;
};

struct ProfileAggregate {
  Axis axis = Axis::Z;
  std::vector<double> mean;    // r = 1 .. L-1
  std::vector<double> stderr_;
  std::vector<double> ed_mean;  // empty without ED
};

struct RunResult {
  RunConfig config;
  int num_sites = 0;
  std::vector<RealizationResult> realizations;
  double energy_mean = 0.0;
  double energy_stderr = 0.0;
  std::vector<ProfileAggregate> profiles;
  bool all_converged() const;
  std::vector<std::uint64_t> failed_seeds() const;
};

struct RunOptions {
  bool compare_ed = false;
  int jobs = 1;
  bool write_files = true;
  bool keep_states = false;
};

/// ED comparison of one converged state; the ED ground state is seeded with
/// the tree state so that a degenerate manifold resolves towards it.
EdComparison compare_state_with_ed(const MlState& state, const SumOfProducts& H, double e_ml,
                                   const ObservableRequest& req);

RealizationResult run_realization(const RunConfig& cfg, std::uint64_t seed, const RunOptions& opts);
RunResult run_relaxation(const RunConfig& cfg, const RunOptions& opts = {});

struct ComparisonRow {
  std::uint64_t seed = 0;
  double e_ml = 0.0;
  double e_ed = 0.0;
  double delta_e_rel = 0.0;
  double max_delta_c = 0.0;
  double max_delta_s = 0.0;
  bool degenerate = false;
};
std::vector<ComparisonRow> comparison_rows(const RunResult& result);
std::vector<ComparisonRow> compare_with_ed(const RunConfig& cfg, const RunOptions& opts = {});
void write_comparison_csv(const std::string& path, const std::vector<ComparisonRow>& rows);

nlohmann::json run_summary(const RunResult& result);

enum class Figure { EnergyVsL, Convergence, Correlations, Entropy };
Figure parse_figure(const std::string& s);
/// Writes the CSV file(s) of one figure and returns their paths.
///   energy_vs_L   model,L,seed,E_ml,E_ml_per_spin,E_ed,delta_e_rel
///   convergence   one trace CSV per realization
///   correlations  axis,i,C_1i,C_1i_ed  and  axis,r,mean,stderr,ed_mean
///   entropy       L_s,S_vN,stderr,S_ed,S_ed_min,S_ed_max
/// Empty fields mark quantities without an ED reference.
std::vector<std::string> emit_figure_data(const RunResult& result, Figure figure, const std::string& out_dir);
std::vector<std::string> emit_figure_data(const std::vector<RunResult>& results, Figure figure,
                                          const std::string& out_dir);

}  // namespace spinml
