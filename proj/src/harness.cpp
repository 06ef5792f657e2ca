#include "spinml/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace spinml {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

json read_json_file(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw ConfigError(std::string(what) + " file not found: " + p.string());
  std::ifstream is(p);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

std::vector<int> int_list(const json& j, const char* key) {
  if (!j.is_array()) throw ConfigError(std::string(key) + ": expected an array of integers");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ConfigError(std::string(key) + ": expected integers");
    out.push_back(v.get<int>());
  }
  return out;
}

TreeRequest parse_tree_request(const json& j, const fs::path& base) {
  TreeRequest t;
  if (!j.is_object()) throw ConfigError("tree: expected an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "builder") {
      t.builder = v.get<std::string>();
    } else if (key == "spf") {
      t.spf = int_list(v, "tree.spf");
    } else if (key == "m") {
      t.m = int_list(v, "tree.m");
    } else if (key == "groups") {
      if (!v.is_array()) throw ConfigError("tree.groups: expected an array of site lists");
      for (const auto& g : v) {
        auto sites = int_list(g, "tree.groups");
        for (int& s : sites) --s;
        t.groups.push_back(std::move(sites));
      }
    } else if (key == "file") {
      t.builder = "file";
      t.file = (base / v.get<std::string>()).string();
      if (!fs::exists(t.file)) throw ConfigError("tree file not found: " + t.file);
    } else if (key == "document") {
      t.builder = "document";
      t.document = v;
    } else {
      throw ConfigError("tree: unknown key '" + key + "'");
    }
  }
  static const std::vector<std::string> known{"binary", "grid", "mode_combination", "file", "document"};
  if (std::find(known.begin(), known.end(), t.builder) == known.end())
    throw ConfigError("tree.builder: unknown value '" + t.builder + "'");
  return t;
}

ObservableRequest parse_observables(const json& j) {
  ObservableRequest o;
  if (!j.is_object()) throw ConfigError("observables: expected an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "correlations") {
      o.correlation_axes.clear();
      for (const auto& a : v) o.correlation_axes.push_back(parse_axis(a.get<std::string>()));
    } else if (key == "entropy") {
      o.entropy = v.get<bool>();
    } else if (key == "absolute_average") {
      o.absolute_average = v.get<bool>();
    } else if (key == "max_degenerate_levels") {
      o.max_degenerate_levels = v.get<int>();
      if (o.max_degenerate_levels < 2) throw ConfigError("observables.max_degenerate_levels must be at least 2");
    } else {
      throw ConfigError("observables: unknown key '" + key + "'");
    }
  }
  return o;
}

InitialState parse_initial(const json& j) {
  InitialState s;
  if (!j.is_object()) throw ConfigError("initial_state: expected an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "kind") {
      s.kind = v.get<std::string>();
      if (s.kind != "random" && s.kind != "product") throw ConfigError("initial_state.kind: unknown value '" + s.kind + "'");
    } else if (key == "seed") {
      s.seed = v.get<std::uint64_t>();
    } else if (key == "direction") {
      const auto d = v.get<std::vector<double>>();
      if (d.size() != 3) throw ConfigError("initial_state.direction: expected three components");
      s.direction = {d[0], d[1], d[2]};
    } else {
      throw ConfigError("initial_state: unknown key '" + key + "'");
    }
  }
  return s;
}

std::string num(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

json num_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw Error("cannot write " + p.string());
  return os;
}

std::pair<double, double> mean_stderr(const std::vector<double>& xs) {
  if (xs.empty()) return {kNaN, kNaN};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {m, 0.0};
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= static_cast<double>(xs.size() - 1);
  return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

std::string stem(const RunConfig& cfg, std::uint64_t seed) {
  return cfg.name + "_seed" + std::to_string(seed);
}

const Eigen::MatrixXd* find_axis(const std::vector<std::pair<Axis, Eigen::MatrixXd>>& cs, Axis a) {
  for (const auto& [ax, m] : cs)
    if (ax == a) return &m;
  return nullptr;
}

// Entropy of every left block; cuts that need a dense vector beyond its
// capacity come back as NaN.
std::vector<double> tree_entropy(const MlState& state) {
  try {
    return entropy_profile(state);
  } catch (const CapacityError&) {
  }
  std::vector<double> out;
  for (int ls = 1; ls < state.num_sites(); ++ls) {
    try {
      out.push_back(vnee(state, ls));
    } catch (const CapacityError&) {
      out.push_back(kNaN);
    }
  }
  return out;
}

void aggregate(RunResult& r) {
  std::vector<double> energies;
  for (const auto& z : r.realizations)
    if (z.error.empty()) energies.push_back(z.energy);
  std::tie(r.energy_mean, r.energy_stderr) = mean_stderr(energies);

  r.profiles.clear();
  for (Axis a : r.config.observables.correlation_axes) {
    ProfileAggregate p;
    p.axis = a;
    std::vector<std::vector<double>> per_member;
    std::vector<Eigen::MatrixXd> ed_members;
    for (const auto& z : r.realizations) {
      if (!z.error.empty()) continue;
      if (const auto* c = find_axis(z.correlations, a)) per_member.push_back(averaged_profile({*c}, r.config.observables.absolute_average));
      if (z.ed)
        if (const auto* c = find_axis(z.ed->correlations, a)) ed_members.push_back(*c);
    }
    if (per_member.empty()) continue;
    for (std::size_t k = 0; k < per_member.front().size(); ++k) {
      std::vector<double> xs;
      for (const auto& m : per_member) xs.push_back(m[k]);
      const auto [m, s] = mean_stderr(xs);
      p.mean.push_back(m);
      p.stderr_.push_back(s);
    }
    if (ed_members.size() == per_member.size())
      p.ed_mean = averaged_profile(ed_members, r.config.observables.absolute_average);
    r.profiles.push_back(std::move(p));
  }
}

}  // namespace

RunConfig parse_run_config(const json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw ConfigError("run config: expected an object");
  const fs::path base(base_dir);
  RunConfig cfg;
  bool have_model = false;
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "model") {
        if (v.is_string()) {
          cfg.model = read_json_file(base / v.get<std::string>(), "model");
        } else if (v.is_object() && v.contains("file")) {
          cfg.model = read_json_file(base / v["file"].get<std::string>(), "model");
        } else {
          cfg.model = v;
        }
        have_model = true;
      } else if (key == "tree") {
        cfg.tree = v.is_string() ? parse_tree_request(json{{"file", v}}, base) : parse_tree_request(v, base);
      } else if (key == "relax") {
        cfg.relax = relax_config_from_json(v);
      } else if (key == "ensemble") {
        for (const auto& [ek, ev] : v.items()) {
          if (ek == "num_realizations")
            cfg.ensemble.num_realizations = ev.get<int>();
          else if (ek == "base_seed")
            cfg.ensemble.base_seed = ev.get<std::uint64_t>();
          else
            throw ConfigError("ensemble: unknown key '" + ek + "'");
        }
      } else if (key == "observables") {
        cfg.observables = parse_observables(v);
      } else if (key == "initial_state") {
        cfg.initial = parse_initial(v);
      } else if (key == "output_dir") {
        const fs::path p(v.get<std::string>());
        cfg.output_dir = (p.is_absolute() ? p : base / p).string();
      } else if (key == "name") {
        cfg.name = v.get<std::string>();
      } else {
        throw ConfigError("run config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (!have_model) throw ConfigError("run config: missing 'model'");
  if (cfg.ensemble.num_realizations < 1) throw ConfigError("ensemble.num_realizations must be at least 1");
  if (!doc.contains("output_dir")) cfg.output_dir = (base / "out").string();
  try {
    cfg.relax.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  const fs::path p(path);
  const json doc = read_json_file(p, "run config");
  RunConfig cfg = parse_run_config(doc, p.has_parent_path() ? p.parent_path().string() : ".");
  if (!doc.contains("name")) {
    std::string n = p.filename().string();
    for (const char* ext : {".run.json", ".json"})
      if (n.size() > std::strlen(ext) && n.compare(n.size() - std::strlen(ext), std::string::npos, ext) == 0) {
        n.resize(n.size() - std::strlen(ext));
        break;
      }
    cfg.name = n;
  }
  return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
  json tree;
  const auto& t = cfg.tree;
  if (t.builder == "file") {
    tree["file"] = t.file;
  } else if (t.builder == "document") {
    tree["document"] = t.document;
  } else {
    tree["builder"] = t.builder;
    if (!t.spf.empty()) tree["spf"] = t.spf;
    if (!t.m.empty()) tree["m"] = t.m;
    if (!t.groups.empty()) {
      json gs = json::array();
      for (auto g : t.groups) {
        for (int& s : g) ++s;
        gs.push_back(g);
      }
      tree["groups"] = gs;
    }
  }
  json axes = json::array();
  for (Axis a : cfg.observables.correlation_axes) axes.push_back(std::string(1, axis_label(a)));
  const auto& d = cfg.initial.direction;
  return {{"name", cfg.name},
          {"model", cfg.model},
          {"tree", tree},
          {"relax", relax_config_to_json(cfg.relax)},
          {"ensemble", {{"num_realizations", cfg.ensemble.num_realizations}, {"base_seed", cfg.ensemble.base_seed}}},
          {"observables",
           {{"correlations", axes},
            {"entropy", cfg.observables.entropy},
            {"absolute_average", cfg.observables.absolute_average},
            {"max_degenerate_levels", cfg.observables.max_degenerate_levels}}},
          {"initial_state", {{"kind", cfg.initial.kind}, {"seed", cfg.initial.seed}, {"direction", {d[0], d[1], d[2]}}}},
          {"output_dir", cfg.output_dir}};
}

std::vector<std::uint64_t> realization_seeds(const EnsembleConfig& e) {
  std::vector<std::uint64_t> out;
  for (int k = 0; k < e.num_realizations; ++k) out.push_back(e.base_seed + static_cast<std::uint64_t>(k));
  return out;
}

SumOfProducts build_realization(const RunConfig& cfg, std::uint64_t seed) {
  json doc = cfg.model;
  if (doc.is_object() && doc.value("model", "") == "xysg") doc["seed"] = seed;
  try {
    return model_from_json(doc);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  } catch (const InvalidModel& e) {
    throw ConfigError(e.what());
  }
}

DisorderEnsemble make_ensemble(const RunConfig& cfg) {
  DisorderEnsemble e;
  e.seeds = realization_seeds(cfg.ensemble);
  for (auto s : e.seeds) e.hamiltonians.push_back(build_realization(cfg, s));
  return e;
}

TreeSpec build_tree(const RunConfig& cfg, const SumOfProducts& H) {
  const auto& t = cfg.tree;
  const int L = H.num_sites();
  TreeSpec spec;
  try {
    if (t.builder == "binary") {
      spec = binary_tree(L, t.spf);
    } else if (t.builder == "grid") {
      const ModelInfo& info = H.info();
      if (info.nx <= 0 || info.ny <= 0) throw ConfigError("grid tree needs a 2D model (nx, ny)");
      spec = grid_tree_2d(info.nx, info.ny, t.spf);
    } else if (t.builder == "mode_combination") {
      spec = mode_combination_tree(L, t.groups, t.m);
    } else if (t.builder == "file") {
      spec = parse_tree(read_json_file(t.file, "tree"));
    } else {
      spec = parse_tree(t.document);
    }
    require_valid(spec);
  } catch (const TopologyError& e) {
    throw ConfigError(e.what());
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  if (spec.num_sites() != L)
    throw ConfigError("tree covers " + std::to_string(spec.num_sites()) + " sites, model has " + std::to_string(L));
  return spec;
}

MlState initial_state(const RunConfig& cfg, const TreeSpec& spec, std::uint64_t seed) {
  if (cfg.initial.kind == "product")
    return product_state(spec, std::vector<Bloch>(static_cast<std::size_t>(spec.num_sites()), cfg.initial.direction));
  return random_state(spec, cfg.initial.seed + seed);
}

EdComparison compare_state_with_ed(const MlState& state, const SumOfProducts& H, double e_ml,
                                   const ObservableRequest& req) {
  const int L = H.num_sites();
  if (L > 20) throw CapacityError("ED comparison limited to 20 sites");
  const Vector psi = to_statevector(state);

  EdOptions eo;
  eo.guesses = {psi};
  int k = 2;
  std::vector<DenseGroundState> levels;
  for (;;) {
    levels = ed_ground_state(H, k, eo);
    // widen the search while the highest returned level still belongs to the manifold
    if (!levels.back().degenerate || k >= req.max_degenerate_levels) break;
    k = std::min(2 * k, req.max_degenerate_levels);
  }

  EdComparison c;
  const auto& gs = levels.front();
  c.e_ed = gs.energy;
  c.delta_e_rel = relative_error(e_ml, gs.energy);
  c.degenerate = gs.degenerate;
  const double tol = 1e-10 * std::max(H.norm_estimate(), 1e-300);
  std::vector<const Vector*> manifold{&gs.vector};
  for (std::size_t i = 1; i < levels.size() && std::abs(levels[i].energy - levels[i - 1].energy) <= tol; ++i)
    manifold.push_back(&levels[i].vector);
  c.levels = static_cast<int>(manifold.size());

  // representative of the manifold: the tree state projected onto it
  DenseGroundState aligned = gs;
  if (manifold.size() > 1) {
    Vector v = Vector::Zero(psi.size());
    for (const auto* b : manifold) v += b->dot(psi) * *b;
    if (v.norm() > 1e-8) aligned.vector = v / v.norm();
  }
  const auto obs = ed_observables(aligned, req.correlation_axes, req.entropy);
  c.correlations = obs.correlations;
  c.entropy = obs.entropy;
  for (const auto& [a, ced] : c.correlations) {
    const Eigen::MatrixXd cml = correlation_matrix(state, a);
    c.max_delta_c = std::max(c.max_delta_c, (cml - ced).cwiseAbs().maxCoeff());
  }
  if (req.entropy) {
    const auto sml = entropy_profile(psi, L);
    for (std::size_t i = 0; i < sml.size(); ++i) c.max_delta_s = std::max(c.max_delta_s, std::abs(sml[i] - c.entropy[i]));
    c.entropy_min = c.entropy;
    c.entropy_max = c.entropy;
    if (manifold.size() > 1) {
      // basis states plus random unit combinations of the degenerate manifold
      std::vector<Vector> samples;
      for (const auto* v : manifold) samples.push_back(*v);
      samples.push_back(aligned.vector);
      std::mt19937_64 gen(12345);
      std::normal_distribution<double> nd;
      for (int s = 0; s < 48; ++s) {
        Vector v = Vector::Zero(psi.size());
        for (const auto* b : manifold) v += cplx(nd(gen), nd(gen)) * *b;
        samples.push_back(v / v.norm());
      }
      for (const auto& v : samples) {
        const auto p = entropy_profile(v, L);
        for (std::size_t i = 0; i < p.size(); ++i) {
          c.entropy_min[i] = std::min(c.entropy_min[i], p[i]);
          c.entropy_max[i] = std::max(c.entropy_max[i], p[i]);
        }
      }
    }
  }
  return c;
}

RealizationResult run_realization(const RunConfig& cfg, std::uint64_t seed, const RunOptions& opts) {
  RealizationResult r;
  r.seed = seed;
  const SumOfProducts H = build_realization(cfg, seed);
  const TreeSpec spec = build_tree(cfg, H);
  MlState state = initial_state(cfg, spec, seed);

  RelaxConfig rc = cfg.relax;
  const fs::path out(cfg.output_dir);
  if (rc.checkpoint_every > 0 && rc.checkpoint_path.empty() && opts.write_files)
    rc.checkpoint_path = (out / (stem(cfg, seed) + ".ckpt.mlstate")).string();
  r.trace = relax(state, H, rc);
  r.energy = r.trace.final_energy();
  r.converged = r.trace.converged;

  for (Axis a : cfg.observables.correlation_axes) r.correlations.emplace_back(a, correlation_matrix(state, a));
  if (cfg.observables.entropy) r.entropy = tree_entropy(state);

  if (opts.compare_ed) {
    r.ed = compare_state_with_ed(state, H, r.energy, cfg.observables);
    if (!rc.reference_energy)
      for (auto& rec : r.trace.records) rec.delta_e_rel = relative_error(rec.energy, r.ed->e_ed);
  }

  if (opts.write_files) {
    const std::string s = stem(cfg, seed);
    r.trace.write_csv((out / (s + ".trace.csv")).string());
    for (const auto& [a, c] : r.correlations)
      write_correlation_csv((out / (s + ".corr_" + axis_label(a) + ".csv")).string(), c);
    if (cfg.observables.entropy) write_entropy_csv((out / (s + ".entropy.csv")).string(), r.entropy);
    write_checkpoint((out / (s + ".mlstate")).string(), state);
  }
  if (opts.keep_states) r.state = std::move(state);
  return r;
}

bool RunResult::all_converged() const {
  return std::all_of(realizations.begin(), realizations.end(),
                     [](const RealizationResult& r) { return r.error.empty() && r.converged; });
}

std::vector<std::uint64_t> RunResult::failed_seeds() const {
  std::vector<std::uint64_t> out;
  for (const auto& r : realizations)
    if (!r.error.empty() || !r.converged) out.push_back(r.seed);
  return out;
}

RunResult run_relaxation(const RunConfig& cfg, const RunOptions& opts) {
  RunResult result;
  result.config = cfg;
  const auto seeds = realization_seeds(cfg.ensemble);

  // configuration problems surface here, before any worker starts
  const SumOfProducts probe = build_realization(cfg, seeds.front());
  build_tree(cfg, probe);
  result.num_sites = probe.num_sites();
  if (opts.compare_ed && probe.num_sites() > 20) throw CapacityError("ED comparison limited to 20 sites");
  if (opts.write_files) fs::create_directories(cfg.output_dir);

  result.realizations.resize(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < seeds.size();) {
      try {
        result.realizations[i] = run_realization(cfg, seeds[i], opts);
      } catch (const std::exception& e) {
        result.realizations[i].seed = seeds[i];
        result.realizations[i].error = e.what();
      }
    }
  };
  const int jobs = std::clamp(opts.jobs, 1, static_cast<int>(seeds.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  aggregate(result);
  if (opts.write_files) {
    auto os = open_out(fs::path(cfg.output_dir) / (cfg.name + ".summary.json"));
    os << run_summary(result).dump(2) << '\n';
    if (opts.compare_ed) write_comparison_csv((fs::path(cfg.output_dir) / (cfg.name + ".compare.csv")).string(),
                                              comparison_rows(result));
  }
  return result;
}

std::vector<ComparisonRow> comparison_rows(const RunResult& result) {
  std::vector<ComparisonRow> rows;
  for (const auto& r : result.realizations) {
    if (!r.ed) continue;
    rows.push_back({r.seed, r.energy, r.ed->e_ed, r.ed->delta_e_rel, r.ed->max_delta_c, r.ed->max_delta_s,
                    r.ed->degenerate});
  }
  return rows;
}

std::vector<ComparisonRow> compare_with_ed(const RunConfig& cfg, const RunOptions& opts) {
  RunOptions o = opts;
  o.compare_ed = true;
  return comparison_rows(run_relaxation(cfg, o));
}

void write_comparison_csv(const std::string& path, const std::vector<ComparisonRow>& rows) {
  auto os = open_out(path);
  os << "seed,E_ml,E_ed,delta_e_rel,max_abs_dC,max_abs_dS,degenerate\n";
  for (const auto& r : rows)
    os << r.seed << ',' << num(r.e_ml) << ',' << num(r.e_ed) << ',' << num(r.delta_e_rel) << ',' << num(r.max_delta_c)
       << ',' << num(r.max_delta_s) << ',' << (r.degenerate ? 1 : 0) << '\n';
}

json run_summary(const RunResult& result) {
  ObservableSummary s;
  s.model = result.config.model.value("model", "custom");
  s.seeds = realization_seeds(result.config.ensemble);
  s.e0 = result.energy_mean;
  s.num_sites = result.num_sites;
  s.delta_e_rel = kNaN;
  bool verified = !result.realizations.empty();
  for (const auto& r : result.realizations) {
    if (!r.ed) {
      verified = false;
      continue;
    }
    s.delta_e_rel = std::isnan(s.delta_e_rel) ? r.ed->delta_e_rel : std::max(s.delta_e_rel, r.ed->delta_e_rel);
  }
  if (!result.profiles.empty()) {
    s.axis = result.profiles.front().axis;
    s.correlation_profile = result.profiles.front().mean;
  }
  json j = summary_json(s);

  // entropy may contain NaN for cuts without a dense fallback
  json ent = json::array();
  if (result.config.observables.entropy && result.num_sites > 1) {
    for (int k = 0; k + 1 < result.num_sites; ++k) {
      std::vector<double> xs;
      for (const auto& r : result.realizations)
        if (r.error.empty() && static_cast<int>(r.entropy.size()) > k) xs.push_back(r.entropy[static_cast<std::size_t>(k)]);
      ent.push_back(num_or_null(mean_stderr(xs).first));
    }
  }
  j["entropy_profile"] = ent;
  j["name"] = result.config.name;
  j["E0_stderr"] = result.energy_stderr;
  j["verified"] = verified;
  j["converged"] = result.all_converged();
  j["failed_seeds"] = result.failed_seeds();
  json profiles = json::object();
  for (const auto& p : result.profiles) {
    json e{{"mean", p.mean}, {"stderr", p.stderr_}};
    if (!p.ed_mean.empty()) e["ed_mean"] = p.ed_mean;
    profiles[std::string(1, axis_label(p.axis))] = e;
  }
  j["correlation_profiles"] = profiles;
  json reals = json::array();
  for (const auto& r : result.realizations) {
    json e{{"seed", r.seed}, {"E0", r.energy}, {"converged", r.converged}, {"iterations", r.trace.records.size()}};
    if (!r.error.empty()) e["error"] = r.error;
    if (r.ed) {
      e["E_ed"] = r.ed->e_ed;
      e["delta_e_rel"] = r.ed->delta_e_rel;
      e["max_abs_dC"] = r.ed->max_delta_c;
      e["max_abs_dS"] = r.ed->max_delta_s;
      e["degenerate"] = r.ed->degenerate;
      e["degenerate_levels"] = r.ed->levels;
    }
    reals.push_back(e);
  }
  j["realizations"] = reals;
  return j;
}

Figure parse_figure(const std::string& s) {
  if (s == "energy_vs_L") return Figure::EnergyVsL;
  if (s == "convergence") return Figure::Convergence;
  if (s == "correlations") return Figure::Correlations;
  if (s == "entropy") return Figure::Entropy;
  throw ConfigError("unknown figure '" + s + "'");
}

std::vector<std::string> emit_figure_data(const std::vector<RunResult>& results, Figure figure,
                                          const std::string& out_dir) {
  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  std::vector<std::string> paths;
  if (results.empty()) return paths;
  const std::string name = results.front().config.name;

  switch (figure) {
    case Figure::EnergyVsL: {
      const auto p = out / ("fig_energy_vs_L_" + name + ".csv");
      auto os = open_out(p);
      os << "model,L,seed,E_ml,E_ml_per_spin,E_ed,delta_e_rel\n";
      for (const auto& res : results)
        for (const auto& r : res.realizations) {
          if (!r.error.empty()) continue;
          os << res.config.model.value("model", "custom") << ',' << res.num_sites << ',' << r.seed << ','
             << num(r.energy) << ',' << num(r.energy / res.num_sites) << ',' << (r.ed ? num(r.ed->e_ed) : "") << ','
             << (r.ed ? num(r.ed->delta_e_rel) : "") << '\n';
        }
      paths.push_back(p.string());
      break;
    }
    case Figure::Convergence:
      for (const auto& res : results)
        for (const auto& r : res.realizations) {
          if (!r.error.empty()) continue;
          const auto p = out / ("fig_convergence_" + stem(res.config, r.seed) + ".csv");
          r.trace.write_csv(p.string());
          paths.push_back(p.string());
        }
      break;
    case Figure::Correlations:
      for (const auto& res : results) {
        const auto& cfg = res.config;
        // correlation of the first spin with every other one, ensemble mean
        const auto p1 = out / ("fig_correlations_" + cfg.name + ".csv");
        auto os = open_out(p1);
        os << "axis,i,C_1i,C_1i_ed\n";
        for (Axis a : cfg.observables.correlation_axes) {
          for (int i = 1; i < res.num_sites; ++i) {
            std::vector<double> ml, ed;
            for (const auto& r : res.realizations) {
              if (!r.error.empty()) continue;
              if (const auto* c = find_axis(r.correlations, a)) ml.push_back((*c)(0, i));
              if (r.ed)
                if (const auto* c = find_axis(r.ed->correlations, a)) ed.push_back((*c)(0, i));
            }
            os << axis_label(a) << ',' << i + 1 << ',' << num(mean_stderr(ml).first) << ','
               << (ed.empty() ? "" : num(mean_stderr(ed).first)) << '\n';
          }
        }
        paths.push_back(p1.string());

        const auto p2 = out / ("fig_correlation_profile_" + cfg.name + ".csv");
        auto ps = open_out(p2);
        ps << "axis,r,mean,stderr,ed_mean\n";
        for (const auto& prof : res.profiles)
          for (std::size_t k = 0; k < prof.mean.size(); ++k)
            ps << axis_label(prof.axis) << ',' << k + 1 << ',' << num(prof.mean[k]) << ',' << num(prof.stderr_[k]) << ','
               << (prof.ed_mean.empty() ? "" : num(prof.ed_mean[k])) << '\n';
        paths.push_back(p2.string());
      }
      break;
    case Figure::Entropy:
      for (const auto& res : results) {
        const auto p = out / ("fig_entropy_" + res.config.name + ".csv");
        auto os = open_out(p);
        os << "L_s,S_vN,stderr,S_ed,S_ed_min,S_ed_max\n";
        for (int k = 0; k + 1 < res.num_sites; ++k) {
          const auto idx = static_cast<std::size_t>(k);
          std::vector<double> ml, ed, lo, hi;
          for (const auto& r : res.realizations) {
            if (!r.error.empty()) continue;
            if (r.entropy.size() > idx) ml.push_back(r.entropy[idx]);
            if (r.ed && r.ed->entropy.size() > idx) {
              ed.push_back(r.ed->entropy[idx]);
              lo.push_back(r.ed->entropy_min[idx]);
              hi.push_back(r.ed->entropy_max[idx]);
            }
          }
          const auto [m, s] = mean_stderr(ml);
          os << k + 1 << ',' << num(m) << ',' << num(s) << ',' << (ed.empty() ? "" : num(mean_stderr(ed).first)) << ','
             << (lo.empty() ? "" : num(mean_stderr(lo).first)) << ',' << (hi.empty() ? "" : num(mean_stderr(hi).first))
             << '\n';
        }
        paths.push_back(p.string());
      }
      break;
  }
  return paths;
}

std::vector<std::string> emit_figure_data(const RunResult& result, Figure figure, const std::string& out_dir) {
  return emit_figure_data(std::vector<RunResult>{result}, figure, out_dir);
}

}  // namespace spinml
