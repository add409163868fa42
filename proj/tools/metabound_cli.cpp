// metabound: Bayes error bounds from weighted k-NN divergence ensembles.
//
//   metabound simulate  Gaussian sweeps (per-delta mean/sd of each bound vs. truth)
//   metabound bounds    one dataset (labeled CSV or distance matrix) -> JSON report
//   metabound blend     two distance matrices over an r grid -> CSV
//   metabound weights   ensemble weights for an l grid and dimension
//   metabound mst       MST / Friedman-Rafsky dump
//
// Every option may also come from --config file.json, either flat or nested
// under the subcommand name: {"simulate": {"trials": 20, "deltas": [0, 1, 2]}}.
// Flags given on the command line win over the file.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "metabound/bounds.hpp"
#include "metabound/dataset.hpp"
#include "metabound/ensemble.hpp"
#include "metabound/error.hpp"
#include "metabound/experiment.hpp"
#include "metabound/mst.hpp"

namespace {

using namespace metabound;
using nlohmann::json;

class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json j;
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames()[0];
      if (opt->count() > 0)
        j[name] = opt->results().size() == 1 ? json(opt->results()[0]) : json(opt->results());
      else if (default_also && !opt->get_default_str().empty())
        j[name] = opt->get_default_str();
    }
    for (const CLI::App* sub : app->get_subcommands({})) j[sub->get_name()] = json::parse(to_config(sub, default_also, false, ""));
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& ex) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + ex.what());
    }
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void collect(const json& j, std::vector<std::string> parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto p = parents;
        p.push_back(key);
        collect(value, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array())
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      else
        item.inputs.push_back(scalar(value));
      out.push_back(std::move(item));
    }
  }
};

struct EstimatorOptions {
  std::vector<std::string> bounds = {"chernoff", "dtilde-knn", "dtilde-mst", "galpha"};
  std::vector<double> ell;
  std::string weights = "relaxed";
  double eta = 3.0;
  double epsilon = 1.0;
  std::string mode = "loo";
  std::string dtilde_form = "rational";
  std::string hp_norm = "prior";
  double galpha_alpha = 500.0;
  std::vector<double> alpha_grid;

  void attach(CLI::App* app) {
    app->add_option("--bounds", bounds, "Bounds to estimate: chernoff, dtilde-knn, dtilde-mst, galpha")
        ->capture_default_str();
    app->add_option("--ell", ell, "Ensemble l grid (default: max(d,3) points on [0.3, 3])");
    app->add_option("--weights", weights, "Weight program")
        ->check(CLI::IsMember({"relaxed", "exact"}))
        ->capture_default_str();
    app->add_option("--eta", eta, "Relaxed weight norm budget")->capture_default_str();
    app->add_option("--epsilon", epsilon, "Relaxed bias tolerance (parametric-rate units)")->capture_default_str();
    app->add_option("--mode", mode, "Evaluation protocol")->check(CLI::IsMember({"loo", "split"}))->capture_default_str();
    app->add_option("--dtilde-form", dtilde_form, "Plug-in form of D~")
        ->check(CLI::IsMember({"rational", "variational"}))
        ->capture_default_str();
    app->add_option("--hp-normalization", hp_norm, "MST estimator normalization")
        ->check(CLI::IsMember({"prior", "pooled"}))
        ->capture_default_str();
    app->add_option("--galpha-alpha", galpha_alpha, "alpha of the G_alpha lower bound")->capture_default_str();
    app->add_option("--alpha-grid", alpha_grid, "Chernoff alpha grid (default 0.01..0.99)");
  }

  BoundsConfig build() const {
    BoundsConfig c;
    c.bounds.clear();
    for (const auto& b : bounds) c.bounds.push_back(bound_kind_from_string(b));
    c.ensemble.ell = ell;
    c.ensemble.mode = weights == "exact" ? WeightMode::ExactNull : WeightMode::Relaxed;
    c.ensemble.relaxed_eta = eta;
    c.ensemble.relaxed_epsilon = epsilon;
    c.mode = mode == "split" ? EstimationMode::Split : EstimationMode::Loo;
    c.dtilde_form = dtilde_form == "variational" ? DTildeForm::Variational : DTildeForm::Rational;
    c.hp_normalization = hp_norm == "pooled" ? HpNormalization::Pooled : HpNormalization::PriorWeighted;
    c.galpha_alpha = galpha_alpha;
    if (!alpha_grid.empty()) c.alpha_grid = alpha_grid;
    return c;
  }
};

struct BootstrapOptions {
  std::size_t replicates = 0;
  double level = 0.95;
  std::uint64_t seed = 1;

  void attach(CLI::App* app, std::size_t default_replicates) {
    replicates = default_replicates;
    app->add_option("--bootstrap", replicates, "Bootstrap replicates (0 disables confidence intervals)")
        ->capture_default_str();
    app->add_option("--level", level, "Confidence level")->capture_default_str();
    app->add_option("--seed", seed, "Master seed")->capture_default_str();
  }

  void apply(BoundsConfig& c) const {
    if (replicates > 0) c.bootstrap = BootstrapSettings{replicates, level, seed};
  }
};

struct InputOptions {
  std::string csv;
  std::string label_column = "label";
  std::string dist;
  std::string labels;
  int intrinsic_dim = 0;
  double q1 = 0.0;

  void attach(CLI::App* app) {
    app->add_option("--csv", csv, "Labeled feature CSV (header row required)");
    app->add_option("--label-column", label_column, "Name of the label column")->capture_default_str();
    app->add_option("--dist", dist, "Square distance-matrix CSV");
    app->add_option("--labels", labels, "Labels file for --dist, one tag (1 or 2) per line");
    app->add_option("--intrinsic-dim", intrinsic_dim, "Intrinsic dimension for k-NN estimation from distances");
    app->add_option("--q1", q1, "Class-1 prior (default: empirical fraction)");
  }

  std::optional<int> dim() const { return intrinsic_dim > 0 ? std::optional<int>(intrinsic_dim) : std::nullopt; }
  std::optional<double> prior() const { return q1 > 0.0 ? std::optional<double>(q1) : std::nullopt; }

  void require_one() const {
    if (csv.empty() == dist.empty()) throw Error("give exactly one of --csv or --dist");
    if (!dist.empty() && labels.empty()) throw Error("--dist needs --labels");
  }

  TwoSampleData load_points() const { return load_labeled_csv(csv, CsvLoadOptions{label_column, prior()}); }

  DistanceData load_distances() const {
    auto d = load_distance_matrix(dist, labels, dim());
    d.q1_override = prior();
    d.validate();
    return d;
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  out << text << '\n';
}

void warn_dropped_replicates(const BoundsReport& report) {
  for (const auto& e : report.entries) {
    if (e.ci && e.ci->failed > 0)
      std::cerr << "warning: " << e.bound_name << "/" << e.estimator << ": dropped " << e.ci->failed
                << " failed bootstrap replicates\n";
    if (e.diagnostics.contains("ci_error"))
      std::cerr << "warning: " << e.bound_name << "/" << e.estimator << ": "
                << e.diagnostics["ci_error"].get<std::string>() << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayes error bounds from weighted k-NN f-divergence ensembles and MST statistics"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file");
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Gaussian sweep: bounds vs. true Bayes error");
  SweepConfig sweep;
  sweep.trials = 200;
  EstimatorOptions sim_est;
  std::string sim_out = "out";
  simulate->add_option("--deltas", sweep.deltas, "Mean separations")->capture_default_str();
  simulate->add_option("--dim,-d", sweep.d, "Dimension")->capture_default_str();
  simulate->add_option("--samples,-T", sweep.T, "Samples per class")->capture_default_str();
  simulate->add_option("--trials", sweep.trials, "Trials per separation")->capture_default_str();
  simulate->add_option("--seed", sweep.seed, "Master seed")->capture_default_str();
  simulate->add_option("--q1", sweep.q1, "Class-1 prior")->capture_default_str();
  simulate->add_option("--out-dir", sim_out, "Output directory")->capture_default_str();
  sim_est.attach(simulate);

  // bounds
  auto* bounds = app.add_subcommand("bounds", "Estimate every bound on one dataset");
  InputOptions b_in;
  EstimatorOptions b_est;
  BootstrapOptions b_boot;
  std::string b_out;
  b_in.attach(bounds);
  b_est.attach(bounds);
  b_boot.attach(bounds, 0);
  bounds->add_option("--out", b_out, "Report path (default stdout)");

  // blend
  auto* blend = app.add_subcommand("blend", "Bounds over blended distances r*Dn + (1-r)*Ds");
  std::string dn_path;
  std::string ds_path;
  std::string blend_labels;
  int blend_dim = 0;
  bool fixture = false;
  std::size_t fixture_n = 150;
  BlendConfig blend_cfg;
  EstimatorOptions bl_est;
  bl_est.bounds = {"dtilde-knn", "dtilde-mst"};
  BootstrapOptions bl_boot;
  std::string blend_out = "out";
  blend->add_option("--dn", dn_path, "First distance matrix (weight r)");
  blend->add_option("--ds", ds_path, "Second distance matrix (weight 1 - r)");
  blend->add_option("--labels", blend_labels, "Labels file shared by both matrices");
  blend->add_option("--intrinsic-dim", blend_dim, "Intrinsic dimension (enables k-NN bounds)");
  blend->add_flag("--fixture", fixture, "Use the built-in synthetic fixture instead of files");
  blend->add_option("--fixture-size", fixture_n, "Points per class in the synthetic fixture")->capture_default_str();
  blend->add_option("--r-grid", blend_cfg.r_grid, "Blend weights")->capture_default_str();
  blend->add_option("--out-dir", blend_out, "Output directory")->capture_default_str();
  bl_est.attach(blend);
  bl_boot.attach(blend, 200);

  // weights
  auto* weights = app.add_subcommand("weights", "Print ensemble weights for an l grid");
  std::vector<double> w_ell;
  std::size_t w_dim = 5;
  std::size_t w_samples = 0;
  std::string w_mode = "relaxed";
  double w_eta = 3.0;
  double w_eps = 1.0;
  weights->add_option("--ell", w_ell, "l grid (default: max(d,3) points on [0.3, 3])");
  weights->add_option("--dim,-d", w_dim, "Dimension")->capture_default_str();
  weights->add_option("--samples,-M", w_samples, "Reference sample size (relaxed tolerance scaling)");
  weights->add_option("--weights", w_mode, "Weight program")->check(CLI::IsMember({"relaxed", "exact"}))->capture_default_str();
  weights->add_option("--eta", w_eta, "Relaxed weight norm budget")->capture_default_str();
  weights->add_option("--epsilon", w_eps, "Relaxed bias tolerance")->capture_default_str();

  // mst
  auto* mst = app.add_subcommand("mst", "Minimum spanning tree and cross-edge count");
  InputOptions m_in;
  std::string m_edges;
  std::string m_norm = "prior";
  m_in.attach(mst);
  mst->add_option("--edges", m_edges, "Write the edge list CSV here");
  mst->add_option("--hp-normalization", m_norm, "Normalization")->check(CLI::IsMember({"prior", "pooled"}))->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      sweep.bounds = sim_est.build();
      const auto result = run_gaussian_sweep(sweep);
      write_sweep(sim_out, result, sweep);
      std::cerr << "wrote " << sim_out << "/sweep.csv (" << result.rows.size() << " rows, " << result.failed_trials
                << " failed trials)\n";
      for (const auto& t : result.trials)
        if (t.error) std::cerr << "trial delta=" << t.delta << " #" << t.trial << " failed: " << *t.error << '\n';
      return result.ok() ? 0 : 2;
    }
    if (bounds->parsed()) {
      b_in.require_one();
      auto config = b_est.build();
      b_boot.apply(config);
      const auto report = b_in.csv.empty() ? estimate_all_bounds(b_in.load_distances(), config)
                                           : estimate_all_bounds(b_in.load_points(), config);
      warn_dropped_replicates(report);
      write_text(b_out, to_json(report).dump(2));
      return 0;
    }
    if (blend->parsed()) {
      blend_cfg.bounds = bl_est.build();
      bl_boot.apply(blend_cfg.bounds);
      DistanceData dn;
      DistanceData ds;
      if (fixture) {
        std::tie(dn, ds) = make_blend_fixture(fixture_n, 2, 3.0, bl_boot.seed);
        if (blend_dim > 0) dn.intrinsic_dim = ds.intrinsic_dim = blend_dim;
      } else {
        if (dn_path.empty() || ds_path.empty() || blend_labels.empty())
          throw Error("blend needs --dn, --ds and --labels (or --fixture)");
        const std::optional<int> dim = blend_dim > 0 ? std::optional<int>(blend_dim) : std::nullopt;
        dn = load_distance_matrix(dn_path, blend_labels, dim);
        ds = load_distance_matrix(ds_path, blend_labels, dim);
      }
      const auto result = run_blend_sweep(dn, ds, blend_cfg);
      for (const auto& r : result.reports) warn_dropped_replicates(r);
      write_blend(blend_out, result, blend_cfg);
      std::cerr << "wrote " << blend_out << "/blend.csv (" << result.rows.size() << " rows)\n";
      return 0;
    }
    if (weights->parsed()) {
      const auto ell = w_ell.empty() ? default_ell(w_dim) : w_ell;
      EnsembleConfig tuning;
      tuning.relaxed_eta = w_eta;
      tuning.relaxed_epsilon = w_eps;
      const auto mode = w_mode == "exact" ? WeightMode::ExactNull : WeightMode::Relaxed;
      const auto w = solve_weights(ell, w_dim, mode,
                                   w_samples > 0 ? std::optional<std::size_t>(w_samples) : std::nullopt, tuning);
      json out = {{"ell", ell},
                  {"d", w_dim},
                  {"mode", w_mode},
                  {"weights", w.w},
                  {"norm", w.norm},
                  {"constraint_residuals", w.constraint_residuals}};
      if (w_samples > 0) out["k"] = neighbor_counts(ell, w_samples);
      std::cout << out.dump(2) << '\n';
      return 0;
    }
    if (mst->parsed()) {
      m_in.require_one();
      const auto data = m_in.csv.empty() ? m_in.load_distances() : pairwise_distances(m_in.load_points());
      const auto tree = minimum_spanning_tree(data);
      const auto norm = m_norm == "pooled" ? HpNormalization::Pooled : HpNormalization::PriorWeighted;
      if (!m_edges.empty()) write_mst_edges(m_edges, tree, data.labels);
      json out = {{"nodes", data.n},
                  {"class1", data.count(1)},
                  {"class2", data.count(2)},
                  {"cross_count", tree.cross_count},
                  {"total_weight", tree.total_weight},
                  {"dtilde", hp_dtilde_from_count(tree.cross_count, data.count(1), data.count(2), norm)}};
      std::cout << out.dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
