#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "penidm/pathgrid.hpp"
#include "penidm/predict.hpp"
#include "penidm/simulate.hpp"

namespace penidm {

// ---- files ----

std::string read_file(const std::string& path);
/// Writes to a temporary sibling and renames over `path`.
void write_file_atomic(const std::string& path, std::string_view content);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

// ---- CSV ----

/// Header must start with y1,y2,delta1,delta2; remaining columns are covariates.
/// Errors name the 1-based line number.
Dataset parse_dataset_csv(std::string_view text, double tie_epsilon = kDefaultTieEpsilon);
Dataset read_dataset_csv(const std::string& path, double tie_epsilon = kDefaultTieEpsilon);
std::string dataset_to_csv(const Dataset& data);

struct CovariateTable {
  std::vector<std::string> names;
  Eigen::MatrixXd x;
};
/// Plain numeric table with a header row.
CovariateTable parse_covariate_csv(std::string_view text);

// ---- run configuration ----

/// Baseline choice in a run config; empty knots are placed from the data.
struct BaselineChoice {
  BaselineFamily family = BaselineFamily::Weibull;
  std::vector<double> knots;
  int degree = 3;
  int k = 0;  // 0: family default (piecewise 3, B-spline 5, Royston-Parmar 3)

  bool operator==(const BaselineChoice&) const = default;
};

struct SimulateConfig {
  std::string preset = "moderate-shared-lowdim";
  int n = 0;           // 0 keeps the preset's n
  int replicates = 0;  // 0 writes a single dataset; > 0 runs a study
  std::vector<Method> methods{Method::Oracle, Method::MLE, Method::Lasso, Method::SCAD,
                              Method::LassoFusion, Method::SCADFusion};
  BaselineFamily working_family = BaselineFamily::Weibull;
  int working_k = 3;
};

struct PredictConfig {
  std::string model;
  std::string covariates;
  std::vector<double> t_grid;
  double t_max = 0.0;  // used with n_t when t_grid is empty
  int n_t = 20;
  int quad_nodes = 64;
};

struct RunConfig {
  std::string data;
  std::string output_dir = ".";
  TransitionStructure structure = TransitionStructure::SemiMarkov;
  std::array<BaselineChoice, 3> baselines;
  PenaltyConfig penalty;
  SolverConfig solver;
  GridOptions grid;
  bool standardize = true;
  std::uint64_t seed = 1;
  int threads = 1;
  SimulateConfig simulate;
  PredictConfig predict;
};

/// Strict parse: unknown keys and wrong types are ValidationErrors.
RunConfig parse_run_config(std::string_view json_text);
std::string run_config_to_json(const RunConfig& config);
/// Hash of the canonical serialization.
std::string config_hash(const RunConfig& config);

/// Turn baseline choices into specs, placing default knots from the data.
ModelSpec resolve_model(const RunConfig& config, const Dataset& data);

// ---- artifacts ----

struct ModelArtifact {
  ModelSpec spec;
  Eigen::VectorXd psi;
  Standardization standardization;
  std::vector<std::string> covariate_names;
  std::string software_version = PENIDM_VERSION;
  std::string config_hash;
  std::string data_hash;
  std::string selection = "fit";  // fit | bic-full | bic-sub | aic-full | aic-sub
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  int grid_index = -1;
  Criteria criteria;
  double objective = 0.0;
  double neg_log_lik = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
  std::vector<std::string> warnings;
};

std::string artifact_to_json(const ModelArtifact& artifact);
ModelArtifact artifact_from_json(std::string_view json_text);

/// Original-scale coefficients: beta / scale, and the log-hazard offset -sum(beta_orig*center).
struct OriginalScale {
  std::array<Eigen::VectorXd, 3> beta;
  std::array<double, 3> offset{};
};
OriginalScale to_original_scale(const ModelLayout& layout, const Eigen::VectorXd& psi,
                                const Standardization& standardization);

std::string path_result_json(const PathResult& path, const ModelLayout& layout);
std::string path_result_csv(const PathResult& path);
std::string study_report_json(const StudyReport& report);

}  // namespace penidm
