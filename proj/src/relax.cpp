#include "spinml/relax.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace spinml {

using nlohmann::json;

void RelaxConfig::validate() const {
  if (!(dt >= 0.0)) throw DomainError("relax: dt must be positive (0 selects the default)");
  if (!(energy_tol > 0.0)) throw DomainError("relax: energy_tol must be positive");
  if (!(reg_eps > 0.0)) throw DomainError("relax: reg_eps must be positive");
  if (max_steps < 1) throw DomainError("relax: max_steps must be at least 1");
  if (patience < 1) throw DomainError("relax: patience must be at least 1");
  if (substeps < 1) throw DomainError("relax: substeps must be at least 1");
  if (eig.target_index < 0) throw DomainError("relax: target_index must be non-negative");
  if (eig.krylov_dim < 2 || eig.restarts < 1 || !(eig.tol > 0.0)) throw DomainError("relax: invalid eigensolver settings");
  if (checkpoint_every < 0) throw DomainError("relax: checkpoint_every must be non-negative");
}

double RelaxConfig::time_step(const SumOfProducts& H) const {
  if (dt > 0.0) return dt;
  return 0.1 / std::max(H.norm_estimate(), 1e-12);
}

json relax_config_to_json(const RelaxConfig& cfg) {
  json j{{"mode", cfg.mode == RelaxConfig::Mode::ImaginaryTime ? "imaginary_time" : "improved_relaxation"},
         {"spf_update", cfg.spf_update == RelaxConfig::SpfUpdate::Sweep ? "sweep" : "imaginary_time"},
         {"dt", cfg.dt},
         {"max_steps", cfg.max_steps},
         {"energy_tol", cfg.energy_tol},
         {"patience", cfg.patience},
         {"reg_eps", cfg.reg_eps},
         {"substeps", cfg.substeps},
         {"eig",
          {{"krylov_dim", cfg.eig.krylov_dim},
           {"restarts", cfg.eig.restarts},
           {"tol", cfg.eig.tol},
           {"target_index", cfg.eig.target_index}}},
         {"reorthogonalize", cfg.reorthogonalize},
         {"checkpoint_every", cfg.checkpoint_every}};
  if (cfg.reference_energy) j["reference_energy"] = *cfg.reference_energy;
  if (!cfg.checkpoint_path.empty()) j["checkpoint_path"] = cfg.checkpoint_path;
  return j;
}

RelaxConfig relax_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("relax: expected an object");
  RelaxConfig cfg;
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "mode") {
        const auto s = v.get<std::string>();
        if (s == "imaginary_time")
          cfg.mode = RelaxConfig::Mode::ImaginaryTime;
        else if (s == "improved_relaxation")
          cfg.mode = RelaxConfig::Mode::ImprovedRelaxation;
        else
          throw ParseError("relax.mode: unknown value '" + s + "'");
      } else if (key == "spf_update") {
        const auto s = v.get<std::string>();
        if (s == "sweep")
          cfg.spf_update = RelaxConfig::SpfUpdate::Sweep;
        else if (s == "imaginary_time")
          cfg.spf_update = RelaxConfig::SpfUpdate::ImaginaryTime;
        else
          throw ParseError("relax.spf_update: unknown value '" + s + "'");
      } else if (key == "dt") {
        cfg.dt = v.get<double>();
      } else if (key == "max_steps") {
        cfg.max_steps = v.get<int>();
      } else if (key == "energy_tol") {
        cfg.energy_tol = v.get<double>();
      } else if (key == "patience") {
        cfg.patience = v.get<int>();
      } else if (key == "reg_eps") {
        cfg.reg_eps = v.get<double>();
      } else if (key == "substeps") {
        cfg.substeps = v.get<int>();
      } else if (key == "reorthogonalize") {
        cfg.reorthogonalize = v.get<bool>();
      } else if (key == "reference_energy") {
        cfg.reference_energy = v.get<double>();
      } else if (key == "checkpoint_every") {
        cfg.checkpoint_every = v.get<int>();
      } else if (key == "checkpoint_path") {
        cfg.checkpoint_path = v.get<std::string>();
      } else if (key == "eig") {
        for (const auto& [k2, w] : v.items()) {
          if (k2 == "krylov_dim")
            cfg.eig.krylov_dim = w.get<int>();
          else if (k2 == "restarts")
            cfg.eig.restarts = w.get<int>();
          else if (k2 == "tol")
            cfg.eig.tol = w.get<double>();
          else if (k2 == "target_index")
            cfg.eig.target_index = w.get<int>();
          else
            throw ParseError("relax.eig: unknown field '" + k2 + "'");
        }
      } else {
        throw ParseError("relax: unknown field '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("relax: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string ConvergenceTrace::csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "step,tau,energy,delta_e_rel,ortho_dev,krylov_iters\n";
  for (const auto& r : records)
    os << r.step << ',' << r.tau << ',' << r.energy << ',' << r.delta_e_rel << ',' << r.ortho_dev << ','
       << r.krylov_iters << '\n';
  return os.str();
}

void ConvergenceTrace::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  os << csv();
}

namespace {

Vector flat(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }
Matrix shaped(const Vector& v, Index rows, Index cols) { return Eigen::Map<const Matrix>(v.data(), rows, cols); }

KrylovOptions krylov_options(const EigenConfig& eig) {
  KrylovOptions o;
  o.max_basis = eig.krylov_dim;
  o.max_restarts = eig.restarts;
  o.tol = eig.tol;
  return o;
}

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw StepFailure(std::string(what) + ": non-finite tensor; try a smaller dt");
}

// Moves the orthogonality center through the tree, solving the local
// eigenproblem at every node it visits.
class Sweeper {
 public:
  Sweeper(MlState& state, const OperatorLayout& layout, const EigenConfig& eig)
      : st_(state), layout_(layout), eig_(eig), active_(static_cast<std::size_t>(state.spec().size())) {
    for (const auto& n : st_.spec().nodes()) active_[static_cast<std::size_t>(n.id)] = n.dim;
  }

  // state must be in root gauge
  void attach() {
    cache_ = upward_pass(st_, layout_);
    init_root_environment(layout_, cache_);
  }

  double sweep() {
    visit(st_.spec().root());
    return energy_;
  }

  double solve_root() {
    solve(st_.spec().root());
    return energy_;
  }

  int take_matvecs() {
    const int m = matvecs_;
    matvecs_ = 0;
    return m;
  }

 private:
  void visit(int n) {
    const auto& node = st_.spec().node(n);
    solve(n);
    for (std::size_t s = 0; s < node.children.size(); ++s) {
      const int c = node.children[s];
      if (st_.spec().node(c).is_leaf()) continue;
      move_down(n, c, static_cast<int>(s));
      visit(c);
      move_up(c, n, static_cast<int>(s));
      solve(n);
    }
  }

  void solve(int n) {
    const auto i = static_cast<std::size_t>(n);
    const auto& node = st_.spec().node(n);
    const Shape shape = st_.shape(n);
    Matrix& a = st_.tensor(n);
    const Index r = active_[i];
    const Index cols = a.cols();
    const bool complete = r == node.dim && node.dim == st_.spec().child_configurations(n);
    if (complete && n != st_.spec().root()) return;  // the parent's solve covers this space

    auto apply = [&](const Vector& v) {
      Matrix x = Matrix::Zero(a.rows(), cols);
      x.topRows(r) = shaped(v, r, cols);
      const Matrix y = apply_local(layout_, cache_, n, shape, x);
      return flat(Matrix(y.topRows(r)));
    };
    const Vector guess = flat(Matrix(a.topRows(r)));
    const EigenPair p = krylov_lowest(apply, r * cols, eig_.target_index, krylov_options(eig_), &guess);
    matvecs_ += p.matvecs;
    a.setZero();
    a.topRows(r) = shaped(p.vector, r, cols);
    energy_ = p.value;
  }

  void move_down(int p, int c, int s) {
    const Shape sp = st_.shape(p);
    Matrix& ap = st_.tensor(p);
    const Matrix u = unfold(ap, sp, s + 1);
    const Index dc = u.cols();
    const Index k = std::min(u.rows(), dc);
    Eigen::HouseholderQR<Matrix> qr(u);
    Matrix q = Matrix::Zero(u.rows(), dc);
    q.leftCols(k) = qr.householderQ() * Matrix::Identity(u.rows(), k);
    Matrix r = Matrix::Zero(dc, dc);
    r.topRows(k) = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    ap = fold(q, sp, s + 1);
    Matrix& ac = st_.tensor(c);
    ac = r * ac;
    active_[static_cast<std::size_t>(c)] = k;
    refresh_down(st_, layout_, cache_, c);
  }

  void move_up(int c, int p, int s) {
    const Matrix l = orthonormalize_rows(st_.tensor(c));
    Matrix& ap = st_.tensor(p);
    ap = mode_product(ap, st_.shape(p), s + 1, l.transpose());
    active_[static_cast<std::size_t>(c)] = st_.spec().node(c).dim;
    refresh_up(st_, layout_, cache_, c);
  }

  MlState& st_;
  const OperatorLayout& layout_;
  EigenConfig eig_;
  NodeOperatorCache cache_;
  std::vector<Index> active_;
  double energy_ = 0.0;
  int matvecs_ = 0;
};

Matrix regularized_inverse(const Matrix& rho, double reg_eps) {
  const Matrix h = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double top = lam.maxCoeff();
  if (!(top > 0.0) || !std::isfinite(top)) throw StepFailure("density matrix is singular; try a smaller dt");
  Eigen::VectorXd inv(lam.size());
  for (Index k = 0; k < lam.size(); ++k) inv(k) = 1.0 / std::max(lam(k), reg_eps * top);
  return es.eigenvectors() * inv.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

double rel_delta(double e, const std::optional<double>& ref) {
  if (!ref) return std::numeric_limits<double>::quiet_NaN();
  return std::abs(e / *ref - 1.0);
}

void maybe_checkpoint(const RelaxConfig& cfg, const MlState& st, std::uint64_t step) {
  if (cfg.checkpoint_every > 0 && !cfg.checkpoint_path.empty() && step % static_cast<std::uint64_t>(cfg.checkpoint_every) == 0)
    write_checkpoint(cfg.checkpoint_path, st);
}

}  // namespace

ImaginaryTimePropagator::ImaginaryTimePropagator(const TreeSpec& spec, const SumOfProducts& H, double reg_eps)
    : layout_(spec, H), reg_eps_(reg_eps) {
  if (!(reg_eps > 0.0)) throw DomainError("reg_eps must be positive");
}

StepReport ImaginaryTimePropagator::step(MlState& st, double dt, bool freeze_root) {
  if (!(dt > 0.0)) throw DomainError("imaginary_time_step: dt must be positive");
  const auto& spec = st.spec();
  normalize(st);
  NodeOperatorCache cache = upward_pass(st, layout_);
  downward_pass(st, layout_, cache);
  StepReport rep;
  rep.energy_before = expectation(st, layout_, cache);

  // SPF derivatives: -rho_reg^{-1} (1 - P) (H_local A)
  std::vector<Matrix> deriv(static_cast<std::size_t>(spec.size()));
  for (const auto& n : spec.nodes()) {
    if (n.is_leaf() || n.id == spec.root()) continue;
    const Matrix& a = st.tensor(n.id);
    const Matrix g = apply_local(layout_, cache, n.id, st.shape(n.id), a);
    const Matrix y = g - (g * a.adjoint()) * a;
    const Matrix d = -(regularized_inverse(cache.down[static_cast<std::size_t>(n.id)][0], reg_eps_) * y);
    check_finite(d, "imaginary_time_step");
    deriv[static_cast<std::size_t>(n.id)] = d;
  }

  const int root = spec.root();
  Matrix new_root = st.tensor(root);
  if (!freeze_root) {
    const Shape shape = st.shape(root);
    const Index cols = new_root.cols();
    auto apply = [&](const Vector& v) { return flat(apply_local(layout_, cache, root, shape, shaped(v, 1, cols))); };
    const Vector v = krylov_expm(apply, flat(new_root), dt, rep.energy_before, 30, 1e-13, &rep.krylov_iters);
    new_root = shaped(v, 1, cols);
    new_root /= new_root.norm();
    check_finite(new_root, "imaginary_time_step");
  }

  const double tol = 1e-12 * std::max(1.0, std::abs(rep.energy_before));
  double scale = scale_;
  bool clean = true;
  for (int attempt = 0;; ++attempt) {
    MlState trial = st;
    trial.tensor(root) = new_root;
    if (scale > 0.0)
      for (const auto& n : spec.nodes())
        if (!n.is_leaf() && n.id != root) trial.tensor(n.id) += (scale * dt) * deriv[static_cast<std::size_t>(n.id)];
    normalize(trial);
    const double e = expectation(trial, layout_, upward_pass(trial, layout_));
    if (e <= rep.energy_before + tol || scale == 0.0) {
      st = std::move(trial);
      st.step += 1;
      rep.energy_after = e;
      rep.spf_scale = scale;
      break;
    }
    clean = false;
    scale = attempt < 60 ? scale * 0.5 : 0.0;
  }
  scale_ = clean ? std::min(1.0, std::max(scale_, 1e-30) * 2.0) : std::max(rep.spf_scale, 1e-30);
  return rep;
}

StepReport imaginary_time_step(MlState& state, const SumOfProducts& H, double dt, double reg_eps) {
  ImaginaryTimePropagator prop(state.spec(), H, reg_eps);
  return prop.step(state, dt);
}

ConvergenceTrace imaginary_time_relaxation(MlState& st, const SumOfProducts& H, const RelaxConfig& cfg) {
  cfg.validate();
  ImaginaryTimePropagator prop(st.spec(), H, cfg.reg_eps);
  const double dt = cfg.time_step(H);
  ConvergenceTrace trace;
  normalize(st);
  double e_prev = expectation(st, H);
  trace.records.push_back({0, 0.0, e_prev, rel_delta(e_prev, cfg.reference_energy), orthonormality_check(st), 0});
  int calm = 0;
  for (int k = 1; k <= cfg.max_steps; ++k) {
    const StepReport rep = prop.step(st, dt);
    if (cfg.reorthogonalize) normalize(st);
    const double e = rep.energy_after;
    trace.records.push_back({static_cast<std::uint64_t>(k), k * dt, e, rel_delta(e, cfg.reference_energy),
                             orthonormality_check(st), rep.krylov_iters});
    maybe_checkpoint(cfg, st, static_cast<std::uint64_t>(k));
    calm = std::abs(e - e_prev) < cfg.energy_tol * std::abs(e) ? calm + 1 : 0;
    e_prev = e;
    if (calm >= cfg.patience) {
      trace.converged = true;
      break;
    }
  }
  return trace;
}

ConvergenceTrace improved_relaxation(MlState& st, const SumOfProducts& H, const RelaxConfig& cfg) {
  cfg.validate();
  const OperatorLayout layout(st.spec(), H);
  const bool sweep = cfg.spf_update == RelaxConfig::SpfUpdate::Sweep;
  std::optional<ImaginaryTimePropagator> prop;
  if (!sweep) prop.emplace(st.spec(), H, cfg.reg_eps);
  const double dt = cfg.time_step(H);

  ConvergenceTrace trace;
  normalize(st);
  double e_prev = expectation(st, layout, upward_pass(st, layout));
  trace.records.push_back({0, 0.0, e_prev, rel_delta(e_prev, cfg.reference_energy), orthonormality_check(st), 0});
  Sweeper sweeper(st, layout, cfg.eig);
  double tau = 0.0;
  int calm = 0;
  for (int k = 1; k <= cfg.max_steps; ++k) {
    sweeper.attach();
    double e = 0.0;
    int iters = 0;
    if (sweep) {
      e = sweeper.sweep();
      iters = sweeper.take_matvecs();
    } else {
      sweeper.solve_root();
      iters = sweeper.take_matvecs();
      for (int j = 0; j < cfg.substeps; ++j) {
        const StepReport rep = prop->step(st, dt, true);
        iters += rep.krylov_iters;
        tau += dt;
      }
    }
    if (cfg.reorthogonalize) normalize(st);
    if (!sweep || cfg.eig.target_index > 0) e = expectation(st, layout, upward_pass(st, layout));
    st.step += 1;
    trace.records.push_back({static_cast<std::uint64_t>(k), tau, e, rel_delta(e, cfg.reference_energy),
                             orthonormality_check(st), iters});
    maybe_checkpoint(cfg, st, static_cast<std::uint64_t>(k));
    if (cfg.eig.target_index == 0 && e > e_prev + 1e-9 * std::max(1.0, std::abs(e)))
      throw ConsistencyError("improved relaxation: energy rose from " + std::to_string(e_prev) + " to " +
                             std::to_string(e));
    calm = std::abs(e - e_prev) < cfg.energy_tol * std::abs(e) ? calm + 1 : 0;
    e_prev = e;
    if (calm >= cfg.patience) {
      trace.converged = true;
      break;
    }
  }
  return trace;
}

ConvergenceTrace relax(MlState& state, const SumOfProducts& H, const RelaxConfig& cfg) {
  return cfg.mode == RelaxConfig::Mode::ImaginaryTime ? imaginary_time_relaxation(state, H, cfg)
                                                      : improved_relaxation(state, H, cfg);
}

}  // namespace spinml
