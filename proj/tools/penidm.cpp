// penidm: fit, path, simulate, predict and report for penalized illness-death models.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "penidm/error.hpp"
#include "penidm/io.hpp"
#include "penidm/likelihood.hpp"
#include "penidm/optimizer.hpp"
#include "penidm/parallel.hpp"
#include "penidm/pathgrid.hpp"
#include "penidm/predict.hpp"
#include "penidm/simulate.hpp"

namespace fs = std::filesystem;
using namespace penidm;

namespace {

// Flag values override the config file; unset flags leave it alone.
struct Overrides {
  std::string config;
  std::optional<std::string> data, output, structure, baseline, penalty, preset, model,
      covariates, methods;
  std::optional<double> lambda1, lambda2, xi, t_max;
  std::optional<int> threads, max_iter, restarts, n_lambda1, n_lambda2, n, replicates, n_t,
      quad_nodes;
  std::optional<std::uint64_t> seed;
  bool fusion_all = false;
  bool no_standardize = false;
  bool verify = false;
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

RunConfig load_config(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : parse_run_config(read_file(o.config));
  if (o.data) c.data = *o.data;
  if (o.output) c.output_dir = *o.output;
  if (o.structure) c.structure = parse_structure(*o.structure);
  if (o.baseline) {
    for (auto& b : c.baselines) b = BaselineChoice{parse_baseline_family(*o.baseline), {}, 3, 0};
  }
  if (o.penalty) c.penalty.family = parse_penalty_family(*o.penalty);
  if (o.lambda1) c.penalty.lambda1 = *o.lambda1;
  if (o.lambda2) c.penalty.lambda2 = *o.lambda2;
  if (o.fusion_all) c.penalty.fusion_pairs = PenaltyConfig::all_pairs();
  if (o.xi) c.solver.xi = *o.xi;
  if (o.max_iter) c.solver.max_iter = *o.max_iter;
  if (o.restarts) c.solver.restarts = *o.restarts;
  if (o.n_lambda1) c.grid.n_lambda1 = *o.n_lambda1;
  if (o.n_lambda2) c.grid.n_lambda2 = *o.n_lambda2;
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.no_standardize) c.standardize = false;
  if (o.preset) c.simulate.preset = *o.preset;
  if (o.n) c.simulate.n = *o.n;
  if (o.replicates) c.simulate.replicates = *o.replicates;
  if (o.methods) {
    c.simulate.methods.clear();
    for (const auto& m : split_commas(*o.methods)) c.simulate.methods.push_back(parse_method(m));
  }
  if (o.model) c.predict.model = *o.model;
  if (o.covariates) c.predict.covariates = *o.covariates;
  if (o.t_max) c.predict.t_max = *o.t_max;
  if (o.n_t) c.predict.n_t = *o.n_t;
  if (o.quad_nodes) c.predict.quad_nodes = *o.quad_nodes;
  c.penalty.validate();
  c.solver.validate();
  if (c.threads < 1) throw ValidationError("threads must be >= 1");
  if (c.grid.n_lambda1 < 1 || c.grid.n_lambda2 < 1) {
    throw ValidationError("grid sizes must be positive");
  }
  c.solver.seed = c.seed;
  set_num_threads(c.threads);
  return c;
}

std::string out_path(const RunConfig& c, const std::string& name) {
  return (fs::path(c.output_dir) / name).string();
}

// Data prepared for fitting: standardized covariates plus the hashes recorded in artifacts.
struct Prepared {
  Dataset data;
  Standardization standardization;
  ModelSpec spec;
  std::string data_hash;
  std::string config_hash;
};

Prepared prepare(const RunConfig& c) {
  if (c.data.empty()) throw ValidationError("no data file given (--data or config 'data')");
  Prepared p;
  const std::string raw = read_file(c.data);
  p.data_hash = hex64(fnv1a64(raw));
  p.config_hash = config_hash(c);
  try {
    p.data = parse_dataset_csv(raw);
  } catch (const ValidationError& e) {
    throw ValidationError(c.data + ": " + e.what());
  }
  p.standardization = c.standardize ? Standardization::from(p.data.x)
                                    : Standardization::identity(p.data.d());
  p.data.x = p.standardization.apply(p.data.x);
  p.spec = resolve_model(c, p.data);
  return p;
}

ModelArtifact make_artifact(const Prepared& p, const Eigen::VectorXd& psi) {
  ModelArtifact a;
  a.spec = p.spec;
  a.psi = psi;
  a.standardization = p.standardization;
  a.covariate_names = p.data.covariate_names;
  a.config_hash = p.config_hash;
  a.data_hash = p.data_hash;
  return a;
}

void fill_fit(ModelArtifact& a, const FitResult& f) {
  a.objective = f.objective;
  a.neg_log_lik = f.neg_log_lik;
  a.iterations = f.iterations;
  a.converged = f.converged;
  a.stop_reason = std::string(to_string(f.stop_reason));
  if (!f.converged) a.warnings.push_back("solver reached max_iter before converging");
}

void write_config_copy(const RunConfig& c) {
  write_file_atomic(out_path(c, "config.json"), run_config_to_json(c));
}

int cmd_fit(const Overrides& o) {
  const RunConfig c = load_config(o);
  const Prepared p = prepare(c);
  const Likelihood lik(p.data, p.spec);
  const FitResult null = null_fit(p.data, p.spec, c.solver);
  FitResult f = null;
  if (p.spec.layout.num_beta() > 0) {
    const PenalizedObjective obj(lik, c.penalty);
    f = fit(obj, null.psi, c.solver);
  }
  ModelArtifact a = make_artifact(p, f.psi);
  fill_fit(a, f);
  a.lambda1 = c.penalty.lambda1;
  a.lambda2 = c.penalty.lambda2;
  a.criteria = information_criteria(p.spec.layout, f.psi, f.neg_log_lik, p.data.n());
  write_config_copy(c);
  write_file_atomic(out_path(c, "model.json"), artifact_to_json(a));
  std::cout << "fit: n=" << p.data.n() << " d=" << p.data.d() << " objective=" << std::setprecision(10)
            << f.objective << " iterations=" << f.iterations << " (" << to_string(f.stop_reason)
            << ")\nwrote " << out_path(c, "model.json") << "\n";
  return 0;
}

int cmd_path(const Overrides& o) {
  const RunConfig c = load_config(o);
  const Prepared p = prepare(c);
  if (p.spec.layout.num_beta() == 0) throw ValidationError("path: the data have no covariates");
  const Likelihood lik(p.data, p.spec);
  const FitResult null = null_fit(p.data, p.spec, c.solver);
  const LambdaGrid grid = make_grid(lik, null.psi, c.grid);
  PenaltyConfig pen = c.penalty;
  if (grid.lambda2.size() > 1 && pen.fusion_pairs.empty()) pen.fusion_pairs = PenaltyConfig::all_pairs();
  const PathResult path = path_search(lik, grid, pen, c.solver, null.psi);

  write_config_copy(c);
  write_file_atomic(out_path(c, "path.json"), path_result_json(path, p.spec.layout));
  write_file_atomic(out_path(c, "path.csv"), path_result_csv(path));
  const std::pair<const char*, int> picks[] = {{"bic-full", path.selected.bic_full},
                                               {"bic-sub", path.selected.bic_sub},
                                               {"aic-full", path.selected.aic_full},
                                               {"aic-sub", path.selected.aic_sub}};
  for (const auto& [rule, idx] : picks) {
    if (idx < 0) throw NumericalError("path: every grid point failed; nothing to select");
    const PathPoint& pt = path.points[idx];
    ModelArtifact a = make_artifact(p, pt.fit.psi);
    fill_fit(a, pt.fit);
    a.selection = rule;
    a.lambda1 = pt.lambda1;
    a.lambda2 = pt.lambda2;
    a.grid_index = idx;
    a.criteria = pt.criteria;
    std::string file = std::string("model_") + rule + ".json";
    std::replace(file.begin(), file.end(), '-', '_');
    write_file_atomic(out_path(c, file), artifact_to_json(a));
  }
  int failed = 0;
  for (const auto& pt : path.points) failed += pt.failed;
  const PathPoint& best = path.points[path.selected.bic_full];
  std::cout << "path: " << grid.lambda1.size() << " x " << grid.lambda2.size() << " grid, "
            << failed << " failed points\nBIC (full grid): lambda1=" << best.lambda1
            << " lambda2=" << best.lambda2 << " df=" << best.criteria.df
            << "\nwrote path.json, path.csv and 4 model artifacts to " << c.output_dir << "\n";
  return 0;
}

int cmd_simulate(const Overrides& o) {
  const RunConfig c = load_config(o);
  SimSetting s = preset(c.simulate.preset);
  if (c.simulate.n > 0) s.n = c.simulate.n;
  if (c.simulate.replicates == 0) {
    const Dataset d = simulate_dataset(s, c.seed);
    write_file_atomic(out_path(c, "data.csv"), dataset_to_csv(d));
    std::cout << "simulate: " << s.name << " n=" << d.n() << " d=" << d.d()
              << " non-terminal fraction=" << d.delta1.cast<double>().mean() << "\nwrote "
              << out_path(c, "data.csv") << "\n";
    return 0;
  }
  StudyOptions opt;
  opt.methods = c.simulate.methods;
  opt.replicates = c.simulate.replicates;
  opt.seed = c.seed;
  opt.working_family = c.simulate.working_family;
  opt.working_k = c.simulate.working_k;
  opt.grid = c.grid;
  opt.solver = c.solver;
  const StudyReport r = run_study(s, opt);
  write_config_copy(c);
  write_file_atomic(out_path(c, "study.csv"), r.to_csv());
  write_file_atomic(out_path(c, "study.json"), study_report_json(r));
  std::cout << std::left << std::setw(14) << "method" << std::setw(12) << "mean_l2"
            << std::setw(12) << "sign_inc" << "failures\n";
  for (const auto& m : r.summary) {
    std::cout << std::setw(14) << to_string(m.method) << std::setw(12) << m.mean_l2
              << std::setw(12) << m.mean_sign << m.failures << "\n";
  }
  std::cout << "wrote study.csv and study.json to " << c.output_dir << "\n";
  return 0;
}

ModelArtifact load_artifact(const std::string& path) {
  if (path.empty()) throw ValidationError("no model artifact given (--model)");
  try {
    return artifact_from_json(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

// Refuses model/data/config combinations whose hashes differ from the artifact's.
void verify_artifact(const ModelArtifact& a, const Overrides& o) {
  if (!o.data && o.config.empty()) {
    throw ValidationError("--verify needs --data and/or --config to compare against");
  }
  if (o.data) {
    const std::string h = hex64(fnv1a64(read_file(*o.data)));
    if (h != a.data_hash) {
      throw ValidationError("verify: data hash " + h + " does not match the artifact's " +
                            a.data_hash);
    }
  }
  if (!o.config.empty()) {
    Overrides only_file;
    only_file.config = o.config;
    const std::string h = config_hash(load_config(only_file));
    if (h != a.config_hash) {
      throw ValidationError("verify: config hash " + h + " does not match the artifact's " +
                            a.config_hash);
    }
  }
}

int cmd_predict(const Overrides& o) {
  const RunConfig c = load_config(o);
  const ModelArtifact a = load_artifact(c.predict.model);
  if (o.verify) verify_artifact(a, o);
  if (c.predict.covariates.empty() && !a.covariate_names.empty()) {
    throw ValidationError("no covariate file given (--covariates)");
  }
  Eigen::MatrixXd x;
  if (a.covariate_names.empty()) {
    x.resize(1, 0);
  } else {
    const CovariateTable t = parse_covariate_csv(read_file(c.predict.covariates));
    x.resize(t.x.rows(), static_cast<Eigen::Index>(a.covariate_names.size()));
    for (std::size_t j = 0; j < a.covariate_names.size(); ++j) {
      const auto it = std::find(t.names.begin(), t.names.end(), a.covariate_names[j]);
      if (it == t.names.end()) {
        throw ValidationError(c.predict.covariates + ": missing covariate column '" +
                              a.covariate_names[j] + "'");
      }
      x.col(static_cast<Eigen::Index>(j)) = t.x.col(it - t.names.begin());
    }
    if (!a.standardization.empty()) x = a.standardization.apply(x);
  }
  std::vector<double> grid = c.predict.t_grid;
  if (grid.empty()) {
    if (!(c.predict.t_max > 0.0)) throw ValidationError("predict: give t_grid or a positive t_max");
    for (int k = 1; k <= c.predict.n_t; ++k) grid.push_back(c.predict.t_max * k / c.predict.n_t);
  }
  PredictOptions po;
  po.quad_nodes = c.predict.quad_nodes;
  const auto profiles = profile_batch(a.spec, a.psi, x, grid, po);
  write_file_atomic(out_path(c, "profiles.csv"), profiles_to_csv(profiles));
  std::cout << "predict: " << profiles.size() << " profiles on " << grid.size()
            << " time points\nwrote " << out_path(c, "profiles.csv") << "\n";
  return 0;
}

int cmd_report(const Overrides& o) {
  if (!o.model) throw ValidationError("report: no model artifact given (--model)");
  const ModelArtifact a = load_artifact(*o.model);
  if (o.verify) verify_artifact(a, o);
  const ModelLayout& L = a.spec.layout;
  const OriginalScale orig = to_original_scale(L, a.psi, a.standardization);
  std::ostringstream os;
  os << std::setprecision(6);
  os << "model: " << *o.model << " (penidm " << a.software_version << ")\n"
     << "structure: " << to_string(a.spec.structure) << "\n";
  for (int g = 0; g < 3; ++g) {
    os << "baseline " << g + 1 << ": " << to_string(a.spec.baselines[g].family) << ", phi =";
    for (int k = 0; k < L.k(g); ++k) os << ' ' << a.psi(L.phi_offset(g) + k);
    os << "\n";
  }
  os << "frailty variance: " << std::exp(a.psi(L.sigma_index())) << "\n"
     << "selection: " << a.selection << " lambda1=" << a.lambda1 << " lambda2=" << a.lambda2
     << " df=" << a.criteria.df << " BIC=" << a.criteria.bic << " AIC=" << a.criteria.aic << "\n"
     << "fit: neg_log_lik=" << a.neg_log_lik << " iterations=" << a.iterations
     << " converged=" << (a.converged ? "yes" : "no") << " (" << a.stop_reason << ")\n"
     << "hashes: config " << a.config_hash << ", data " << a.data_hash << "\n";
  if (o.verify) os << "verify: inputs match the artifact\n";
  os << "\n" << std::left << std::setw(16) << "covariate";
  for (int g = 1; g <= 3; ++g) {
    os << std::setw(13) << ("std_" + std::to_string(g)) << std::setw(13)
       << ("orig_" + std::to_string(g));
  }
  os << "\n";
  const int d = static_cast<int>(a.covariate_names.size());
  for (int c = 0; c < d; ++c) {
    os << std::setw(16) << a.covariate_names[c];
    for (int g = 0; g < 3; ++g) {
      const auto& cols = L.columns(g);
      const auto it = std::find(cols.begin(), cols.end(), c);
      if (it == cols.end()) {
        os << std::setw(13) << "-" << std::setw(13) << "-";
        continue;
      }
      const int j = static_cast<int>(it - cols.begin());
      os << std::setw(13) << a.psi(L.beta_offset(g) + j) << std::setw(13) << orig.beta[g](j);
    }
    os << "\n";
  }
  for (const auto& w : a.warnings) os << "warning: " << w << "\n";
  std::cout << os.str();
  return 0;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--output", o.output, "Output directory");
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Random seed");
}

void add_model_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--data", o.data, "Data CSV (y1,y2,delta1,delta2,covariates...)");
  cmd->add_option("--structure", o.structure, "markov | semi-markov");
  cmd->add_option("--baseline", o.baseline,
                  "Baseline family for all transitions: weibull | piecewise | bspline | "
                  "royston-parmar");
  cmd->add_option("--penalty", o.penalty, "lasso | scad | mcp");
  cmd->add_option("--xi", o.xi, "Convergence tolerance");
  cmd->add_option("--max-iter", o.max_iter, "Iteration limit per fit");
  cmd->add_option("--restarts", o.restarts, "Randomized restarts per fit");
  cmd->add_flag("--no-standardize", o.no_standardize, "Fit on the raw covariate scale");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized gamma-frailty illness-death models"};
  app.set_version_flag("--version", std::string(PENIDM_VERSION));
  app.require_subcommand(1);
  Overrides o;

  auto* fitc = app.add_subcommand("fit", "Fit at one (lambda1, lambda2)");
  add_common(fitc, o);
  add_model_options(fitc, o);
  fitc->add_option("--lambda1", o.lambda1, "Sparsity penalty weight");
  fitc->add_option("--lambda2", o.lambda2, "Fusion penalty weight");
  fitc->add_flag("--fuse-all", o.fusion_all, "Fuse every pair of transitions");

  auto* pathc = app.add_subcommand("path", "Two-dimensional regularization path with selection");
  add_common(pathc, o);
  add_model_options(pathc, o);
  pathc->add_option("--n-lambda1", o.n_lambda1, "Number of lambda1 values");
  pathc->add_option("--n-lambda2", o.n_lambda2, "Number of lambda2 values (1 = no fusion)");

  auto* simc = app.add_subcommand("simulate", "Simulate a dataset or run a simulation study");
  add_common(simc, o);
  simc->add_option("--preset", o.preset, "Scenario, e.g. moderate-shared-lowdim");
  simc->add_option("--n", o.n, "Sample size override");
  simc->add_option("--replicates", o.replicates, "0 writes one dataset; > 0 runs a study");
  simc->add_option("--methods", o.methods, "Comma-separated study methods");
  simc->add_option("--n-lambda1", o.n_lambda1, "Number of lambda1 values");
  simc->add_option("--n-lambda2", o.n_lambda2, "Number of lambda2 values");

  auto* predc = app.add_subcommand("predict", "Risk profiles for new covariate rows");
  add_common(predc, o);
  predc->add_option("--model", o.model, "Model artifact JSON");
  predc->add_option("--covariates", o.covariates, "Covariate CSV with a header row");
  predc->add_option("--t-max", o.t_max, "Largest time of an evenly spaced grid");
  predc->add_option("--n-t", o.n_t, "Number of grid points");
  predc->add_option("--quad-nodes", o.quad_nodes, "Gauss-Legendre nodes per subinterval");
  predc->add_option("--data", o.data, "Training data, checked with --verify");
  predc->add_flag("--verify", o.verify, "Check data/config hashes against the artifact");

  auto* repc = app.add_subcommand("report", "Summarize a model artifact");
  repc->add_option("--model", o.model, "Model artifact JSON")->required();
  repc->add_option("--config", o.config, "Config to check with --verify")->check(CLI::ExistingFile);
  repc->add_option("--data", o.data, "Data to check with --verify");
  repc->add_flag("--verify", o.verify, "Check data/config hashes against the artifact");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*fitc) return cmd_fit(o);
    if (*pathc) return cmd_path(o);
    if (*simc) return cmd_simulate(o);
    if (*predc) return cmd_predict(o);
    if (*repc) return cmd_report(o);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
