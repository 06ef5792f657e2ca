#pragma once

// Ground-state (and excited-state) relaxation of a tree state.
//
// Two drivers share one operator layout:
//  - imaginary-time propagation with the regularized single-hole density
//    matrix, one explicit step at a time with energy backtracking;
//  - improved relaxation: an eigenproblem on the root followed by an SPF
//    relaxation. The default SPF relaxation sweeps the orthogonality center
//    through the tree and solves the local eigenproblem at every node; the
//    alternative runs imaginary-time sub-steps with the root frozen.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinml/krylov.hpp"
#include "spinml/model.hpp"
#include "spinml/operator_cache.hpp"
#include "spinml/state.hpp"

namespace spinml {

struct EigenConfig {
  int krylov_dim = 40;
  int restarts = 400;
  double tol = 1e-10;
  int target_index = 0;
};

struct RelaxConfig {
  enum class Mode { ImaginaryTime, ImprovedRelaxation };
  enum class SpfUpdate { Sweep, ImaginaryTime };

  Mode mode = Mode::ImprovedRelaxation;
  SpfUpdate spf_update = SpfUpdate::Sweep;
  double dt = 0.0;  // 0: 0.1 / ||H||_est
  int max_steps = 200;
  double energy_tol = 1e-10;
  int patience = 3;  // consecutive iterations below energy_tol
  double reg_eps = 1e-8;
  int substeps = 5;  // imaginary-time SPF sub-steps per eigensolve
  EigenConfig eig;
  bool reorthogonalize = true;
  std::optional<double> reference_energy;
  int checkpoint_every = 0;
  std::string checkpoint_path;

  /// Throws DomainError on out-of-range fields.
  void validate() const;
  double time_step(const SumOfProducts& H) const;
};

nlohmann::json relax_config_to_json(const RelaxConfig& cfg);
RelaxConfig relax_config_from_json(const nlohmann::json& doc);

struct TraceRecord {
  std::uint64_t step = 0;
  double tau = 0.0;
  double energy = 0.0;
  double delta_e_rel = 0.0;  // NaN without a reference energy
  double ortho_dev = 0.0;
  int krylov_iters = 0;
};

struct ConvergenceTrace {
  std::vector<TraceRecord> records;
  bool converged = false;

  double final_energy() const { return records.empty() ? 0.0 : records.back().energy; }
  std::string csv() const;
  void write_csv(const std::string& path) const;
};

struct StepReport {
  double energy_before = 0.0;
  double energy_after = 0.0;
  double spf_scale = 1.0;  // fraction of dt applied to the SPFs after backtracking
  int krylov_iters = 0;
};

/// Explicit imaginary-time propagation on a fixed layout. Keeps the accepted
/// SPF step fraction between calls and doubles it after clean steps.
class ImaginaryTimePropagator {
 public:
  ImaginaryTimePropagator(const TreeSpec& spec, const SumOfProducts& H, double reg_eps);
  StepReport step(MlState& state, double dt, bool freeze_root = false);
  const OperatorLayout& layout() const { return layout_; }

 private:
  OperatorLayout layout_;
  double reg_eps_;
  double scale_ = 1.0;
};

StepReport imaginary_time_step(MlState& state, const SumOfProducts& H, double dt, double reg_eps);

ConvergenceTrace imaginary_time_relaxation(MlState& state, const SumOfProducts& H, const RelaxConfig& cfg);
ConvergenceTrace improved_relaxation(MlState& state, const SumOfProducts& H, const RelaxConfig& cfg);
/// Dispatches on cfg.mode.
ConvergenceTrace relax(MlState& state, const SumOfProducts& H, const RelaxConfig& cfg);

}  // namespace spinml
