#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "spinml/harness.hpp"

using namespace spinml;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(testing::TempDir()) / ("spinml_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::string> lines(const std::string& path) {
  std::ifstream is(path);
  std::vector<std::string> out;
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

json small_xysg(int realizations) {
  return {{"model", {{"model", "xysg"}, {"L", 8}, {"alpha", 3.0}}},
          {"tree", {{"builder", "binary"}, {"spf", {16, 4}}}},
          {"relax", {{"max_steps", 40}, {"energy_tol", 1e-12}}},
          {"ensemble", {{"num_realizations", realizations}, {"base_seed", 5}}},
          {"observables", {{"correlations", {"x", "z"}}}},
          {"name", "xy8"}};
}

}  // namespace

TEST(RunConfig, ParsesAndRoundTrips) {
  const json doc{{"model", {{"model", "sdrg"}, {"L", 8}, {"J0", 1.0}}},
                 {"tree", {{"builder", "mode_combination"}, {"groups", {{1, 2, 3}, {4, 5}, {6, 7, 8}}}, {"m", {8, 4, 8}}}},
                 {"observables", {{"correlations", {"x"}}, {"absolute_average", true}}},
                 {"initial_state", {{"kind", "product"}, {"direction", {1, 0, 0}}}}};
  const auto cfg = parse_run_config(doc, "/base");
  EXPECT_EQ(cfg.tree.groups, (std::vector<std::vector<int>>{{0, 1, 2}, {3, 4}, {5, 6, 7}}));
  EXPECT_EQ(cfg.output_dir, "/base/out");
  EXPECT_TRUE(cfg.observables.absolute_average);
  EXPECT_EQ(cfg.initial.kind, "product");
  const auto again = parse_run_config(run_config_to_json(cfg), "/elsewhere");
  EXPECT_EQ(run_config_to_json(again), run_config_to_json(cfg));

  const auto H = build_realization(cfg, 1);
  EXPECT_EQ(build_tree(cfg, H).num_sites(), 8);
}

TEST(RunConfig, Errors) {
  const json model{{"model", "sr_tfim"}, {"L", 4}, {"J", 1.0}, {"h_x", 1.0}, {"h_z", 0.0}};
  EXPECT_THROW(parse_run_config(json{{"tree", {{"builder", "binary"}}}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"model", model}, {"colour", "blue"}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"model", model}, {"tree", {{"builder", "hexagonal"}}}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"model", model}, {"relax", {{"max_steps", -4}}}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"model", model}, {"ensemble", {{"num_realizations", 0}}}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"model", model}, {"observables", {{"correlations", {"q"}}}}}), ConfigError);
  // the tree must cover the model's sites
  auto cfg = parse_run_config(json{{"model", model}, {"tree", {{"builder", "binary"}, {"spf", {2}}}}});
  cfg.model["L"] = 8;
  EXPECT_NO_THROW(build_tree(cfg, build_realization(cfg, 1)));
  cfg.tree.builder = "grid";
  EXPECT_THROW(build_tree(cfg, build_realization(cfg, 1)), ConfigError);
  cfg.model["model"] = "nonsense";
  EXPECT_THROW(build_realization(cfg, 1), ConfigError);
}

TEST(RunConfig, LoadsFromFile) {
  const auto dir = scratch("load");
  {
    std::ofstream os(dir / "chain.run.json");
    os << json{{"model", {{"model", "sr_tfim"}, {"L", 4}, {"J", 1.0}, {"h_x", 1.0}, {"h_z", 0.0}}},
               {"output_dir", "results"}}
              .dump();
  }
  const auto cfg = load_run_config((dir / "chain.run.json").string());
  EXPECT_EQ(cfg.name, "chain");
  EXPECT_EQ(fs::path(cfg.output_dir), dir / "results");
  EXPECT_THROW(load_run_config((dir / "missing.run.json").string()), ConfigError);
}

TEST(Ensemble, SeedsAndRealizations) {
  EXPECT_EQ(realization_seeds({3, 10}), (std::vector<std::uint64_t>{10, 11, 12}));
  const auto cfg = parse_run_config(small_xysg(3));
  const auto e = make_ensemble(cfg);
  ASSERT_EQ(e.hamiltonians.size(), 3u);
  EXPECT_EQ(e.seeds.front(), 5u);
  EXPECT_NE(e.hamiltonians[0].terms()[0].coefficient, e.hamiltonians[1].terms()[0].coefficient);
  EXPECT_EQ(build_realization(cfg, 6).terms()[0].coefficient, e.hamiltonians[1].terms()[0].coefficient);
}

TEST(Run, EnsembleWithEdComparison) {
  auto cfg = parse_run_config(small_xysg(3));
  cfg.output_dir = scratch("ensemble").string();
  RunOptions opts;
  opts.compare_ed = true;
  const auto r = run_relaxation(cfg, opts);
  ASSERT_EQ(r.realizations.size(), 3u);
  EXPECT_TRUE(r.all_converged());

  double sum = 0.0;
  for (const auto& z : r.realizations) {
    ASSERT_TRUE(z.ed);
    EXPECT_LT(z.ed->delta_e_rel, 1e-8);
    EXPECT_LT(z.ed->max_delta_c, 1e-4);
    EXPECT_EQ(z.entropy.size(), 7u);
    EXPECT_FALSE(std::isnan(z.trace.records.back().delta_e_rel));
    sum += z.energy;
  }
  EXPECT_NEAR(r.energy_mean, sum / 3, 1e-13);

  // profile aggregates are the plain means of the per-seed profiles
  ASSERT_EQ(r.profiles.size(), 2u);
  for (const auto& p : r.profiles) {
    ASSERT_EQ(p.mean.size(), 7u);
    ASSERT_EQ(p.ed_mean.size(), 7u);
    for (std::size_t k = 0; k < p.mean.size(); ++k) {
      std::vector<Eigen::MatrixXd> members;
      for (const auto& z : r.realizations)
        for (const auto& [a, c] : z.correlations)
          if (a == p.axis) members.push_back(c);
      EXPECT_NEAR(p.mean[k], averaged_correlation(members, static_cast<int>(k) + 1), 1e-13);
    }
  }

  for (const auto* suffix : {".trace.csv", ".corr_x.csv", ".corr_z.csv", ".entropy.csv", ".mlstate"})
    EXPECT_TRUE(fs::exists(fs::path(cfg.output_dir) / ("xy8_seed6" + std::string(suffix)))) << suffix;
  const auto cmp = lines((fs::path(cfg.output_dir) / "xy8.compare.csv").string());
  ASSERT_EQ(cmp.size(), 4u);
  EXPECT_EQ(cmp[0], "seed,E_ml,E_ed,delta_e_rel,max_abs_dC,max_abs_dS,degenerate");

  std::ifstream is(fs::path(cfg.output_dir) / "xy8.summary.json");
  const json summary = json::parse(is);
  EXPECT_EQ(summary["L"], 8);
  EXPECT_EQ(summary["seeds"], (std::vector<int>{5, 6, 7}));
  EXPECT_NEAR(summary["E0"].get<double>(), r.energy_mean, 1e-13);
  EXPECT_TRUE(summary["verified"].get<bool>());
  EXPECT_EQ(summary["realizations"].size(), 3u);

  const auto rows = comparison_rows(r);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2].seed, 7u);
  EXPECT_EQ(rows[2].e_ed, r.realizations[2].ed->e_ed);
}

TEST(Run, ThreadsDoNotChangeResults) {
  auto cfg = parse_run_config(small_xysg(3));
  RunOptions one;
  one.write_files = false;
  RunOptions two = one;
  two.jobs = 2;
  const auto a = run_relaxation(cfg, one), b = run_relaxation(cfg, two);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(a.realizations[k].seed, b.realizations[k].seed);
    EXPECT_EQ(a.realizations[k].energy, b.realizations[k].energy);
  }
  EXPECT_EQ(run_summary(a).dump(), run_summary(b).dump());
}

TEST(Run, ClassicalLimitIsExact) {
  const json doc{{"model", {{"model", "sr_tfim"}, {"L", 8}, {"J", 1.0}, {"h_x", 0.0}, {"h_z", 0.01}}},
                 {"tree", {{"builder", "binary"}, {"spf", {2, 2}}}},
                 {"relax", {{"energy_tol", 1e-13}}},
                 {"initial_state", {{"kind", "product"}, {"direction", {1, 0, 0}}}}};
  RunOptions opts;
  opts.compare_ed = true;
  opts.write_files = false;
  const auto r = run_relaxation(parse_run_config(doc), opts);
  EXPECT_NEAR(r.realizations[0].energy, -7.0 - 0.08, 1e-12);
  EXPECT_LT(r.realizations[0].ed->delta_e_rel, 1e-13);
}

TEST(Ed, DegenerateManifold) {
  // only sites 0 and 1 interact: a doublet times four free states of sites 2, 3
  const SumOfProducts H(4, {two_site_term(0, SiteOperator::z(), 1, SiteOperator::z(), -1.0)});
  const auto t = binary_tree(4, {4});
  MlState s = random_state(t, 3);
  RelaxConfig rc;
  rc.energy_tol = 1e-13;
  const double e = relax(s, H, rc).final_energy();
  ObservableRequest req;
  req.max_degenerate_levels = 8;
  const auto c = compare_state_with_ed(s, H, e, req);
  EXPECT_TRUE(c.degenerate);
  EXPECT_EQ(c.levels, 8);
  EXPECT_NEAR(c.e_ed, -1.0, 1e-12);
  // ED is aligned with the tree state inside the manifold
  EXPECT_LT(c.max_delta_s, 1e-6);
  const auto sml = entropy_profile(s);
  for (std::size_t k = 0; k < sml.size(); ++k) {
    EXPECT_LE(c.entropy_min[k], sml[k] + 1e-8);
    EXPECT_GE(c.entropy_max[k], sml[k] - 1e-8);
  }
}

TEST(Figures, FilesAndColumns) {
  const json doc{{"model", {{"model", "sdrg"}, {"L", 8}, {"J0", 1.0}}},
                 {"tree", {{"builder", "mode_combination"}, {"groups", {{1, 2, 3}, {4, 5}, {6, 7, 8}}}, {"m", {8, 4, 8}}}},
                 {"relax", {{"energy_tol", 1e-12}}},
                 {"observables", {{"correlations", {"x"}}}},
                 {"name", "sd8"}};
  auto cfg = parse_run_config(doc);
  cfg.output_dir = scratch("figures").string();
  RunOptions opts;
  opts.compare_ed = true;
  const auto r = run_relaxation(cfg, opts);

  const auto ent = emit_figure_data(r, Figure::Entropy, cfg.output_dir);
  auto rows = lines(ent.at(0));
  EXPECT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows[0], "L_s,S_vN,stderr,S_ed,S_ed_min,S_ed_max");

  const auto conv = emit_figure_data(r, Figure::Convergence, cfg.output_dir);
  ASSERT_EQ(conv.size(), 1u);
  EXPECT_EQ(lines(conv[0]).at(0), "step,tau,energy,delta_e_rel,ortho_dev,krylov_iters");

  const auto corr = emit_figure_data(r, Figure::Correlations, cfg.output_dir);
  ASSERT_EQ(corr.size(), 2u);
  rows = lines(corr[0]);
  EXPECT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows[1].substr(0, 4), "x,2,");

  const auto en = emit_figure_data(r, Figure::EnergyVsL, cfg.output_dir);
  rows = lines(en.at(0));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].substr(0, 7), "sdrg,8,");
  EXPECT_THROW(parse_figure("phase_diagram"), ConfigError);
}

TEST(Figures, LongChainCorrelationsWithoutEd) {
  const json doc{{"model", {{"model", "sr_tfim"}, {"L", 128}, {"J", 1.0}, {"h_x", 1.0}, {"h_z", 0.01}}},
                 {"tree", {{"builder", "binary"}, {"spf", {2, 2, 2, 2, 2, 2}}}},
                 {"relax", {{"max_steps", 2}}},
                 {"observables", {{"correlations", {"z"}}, {"entropy", false}}},
                 {"name", "long"}};
  auto cfg = parse_run_config(doc);
  cfg.output_dir = scratch("long").string();
  RunOptions opts;
  opts.write_files = false;
  const auto r = run_relaxation(cfg, opts);
  const auto rows = lines(emit_figure_data(r, Figure::Correlations, cfg.output_dir).at(0));
  ASSERT_EQ(rows.size(), 128u);
  EXPECT_EQ(rows.back().substr(0, 6), "z,128,");
  EXPECT_EQ(rows.back().back(), ',');  // no ED column
  EXPECT_FALSE(run_summary(r)["verified"].get<bool>());
}
