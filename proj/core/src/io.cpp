#include "penidm/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "penidm/error.hpp"

namespace penidm {

using nlohmann::json;

// ---------------------------------------------------------------- files

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ValidationError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------- CSV

namespace {

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '"')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '"' || f.back() == '\r')) f.remove_suffix(1);
    out.push_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view l = text.substr(start, nl - start);
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    out.push_back(l);
    start = nl + 1;
  }
  return out;
}

double parse_double(std::string_view s, std::size_t line, std::string_view column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ValidationError("line " + std::to_string(line) + ": column '" + std::string(column) +
                          "' is not a number ('" + std::string(s) + "')");
  }
  return v;
}

}  // namespace

Dataset parse_dataset_csv(std::string_view text, double tie_epsilon) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ValidationError("line 1: missing header");
  const auto header = split_line(lines[0]);
  const char* required[] = {"y1", "y2", "delta1", "delta2"};
  if (header.size() < 4) throw ValidationError("line 1: header needs y1,y2,delta1,delta2");
  for (int j = 0; j < 4; ++j) {
    if (header[j] != required[j]) {
      throw ValidationError("line 1: expected column '" + std::string(required[j]) +
                            "' at position " + std::to_string(j + 1));
    }
  }
  const std::size_t d = header.size() - 4;
  std::vector<std::array<double, 4>> outcomes;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> line_no;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto f = split_line(lines[li]);
    const std::size_t ln = li + 1;
    if (f.size() != header.size()) {
      throw ValidationError("line " + std::to_string(ln) + ": expected " +
                            std::to_string(header.size()) + " fields, found " +
                            std::to_string(f.size()));
    }
    std::array<double, 4> o{};
    for (int j = 0; j < 4; ++j) o[j] = parse_double(f[j], ln, header[j]);
    for (int j = 2; j < 4; ++j) {
      if (o[j] != 0.0 && o[j] != 1.0) {
        throw ValidationError("line " + std::to_string(ln) + ": " + std::string(header[j]) +
                              " must be 0 or 1");
      }
    }
    if (!(o[0] > 0.0) || !std::isfinite(o[0]) || !std::isfinite(o[1])) {
      throw ValidationError("line " + std::to_string(ln) + ": y1 must be positive and finite");
    }
    if (o[0] > o[1]) throw ValidationError("line " + std::to_string(ln) + ": y1 > y2");
    if (o[2] == 1.0 && o[1] - o[0] < tie_epsilon) {
      throw ValidationError("line " + std::to_string(ln) +
                            ": non-terminal event tied with y2 (y2 - y1 below tie tolerance)");
    }
    if (o[2] == 0.0 && o[1] != o[0]) {
      throw ValidationError("line " + std::to_string(ln) + ": y2 must equal y1 when delta1 = 0");
    }
    std::vector<double> row(d);
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = parse_double(f[4 + j], ln, header[4 + j]);
      if (!std::isfinite(row[j])) {
        throw ValidationError("line " + std::to_string(ln) + ": non-finite covariate");
      }
    }
    outcomes.push_back(o);
    rows.push_back(std::move(row));
    line_no.push_back(ln);
  }
  Dataset data;
  const auto n = static_cast<Eigen::Index>(rows.size());
  data.y1.resize(n);
  data.y2.resize(n);
  data.delta1.resize(n);
  data.delta2.resize(n);
  data.x.resize(n, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    data.y1(i) = outcomes[i][0];
    data.y2(i) = outcomes[i][1];
    data.delta1(i) = static_cast<int>(outcomes[i][2]);
    data.delta2(i) = static_cast<int>(outcomes[i][3]);
    for (std::size_t j = 0; j < d; ++j) data.x(i, static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  for (std::size_t j = 0; j < d; ++j) data.covariate_names.emplace_back(header[4 + j]);
  if (n == 0) throw ValidationError("dataset has no rows");
  data.validate(tie_epsilon);
  return data;
}

Dataset read_dataset_csv(const std::string& path, double tie_epsilon) {
  try {
    return parse_dataset_csv(read_file(path), tie_epsilon);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string dataset_to_csv(const Dataset& data) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "y1,y2,delta1,delta2";
  for (Eigen::Index j = 0; j < data.d(); ++j) {
    os << ',' << (data.covariate_names.empty() ? "x" + std::to_string(j + 1)
                                               : data.covariate_names[j]);
  }
  os << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    os << data.y1(i) << ',' << data.y2(i) << ',' << data.delta1(i) << ',' << data.delta2(i);
    for (Eigen::Index j = 0; j < data.d(); ++j) os << ',' << data.x(i, j);
    os << '\n';
  }
  return os.str();
}

CovariateTable parse_covariate_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ValidationError("line 1: missing header");
  CovariateTable t;
  for (auto h : split_line(lines[0])) t.names.emplace_back(h);
  std::vector<std::vector<double>> rows;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto f = split_line(lines[li]);
    if (f.size() != t.names.size()) {
      throw ValidationError("line " + std::to_string(li + 1) + ": expected " +
                            std::to_string(t.names.size()) + " fields");
    }
    std::vector<double> row;
    for (std::size_t j = 0; j < f.size(); ++j) row.push_back(parse_double(f[j], li + 1, t.names[j]));
    rows.push_back(std::move(row));
  }
  t.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) t.x(i, j) = rows[i][j];
  }
  return t;
}

// ---------------------------------------------------------------- config

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + "." + key + ": wrong type");
  }
}

json choice_to_json(const BaselineChoice& b) {
  return {{"family", std::string(to_string(b.family))},
          {"knots", b.knots},
          {"degree", b.degree},
          {"k", b.k}};
}

BaselineChoice choice_from_json(const json& j, const std::string& where) {
  check_keys(j, {"family", "knots", "degree", "k"}, where);
  BaselineChoice b;
  std::string fam = "weibull";
  read(j, "family", fam, where);
  b.family = parse_baseline_family(fam);
  read(j, "knots", b.knots, where);
  read(j, "degree", b.degree, where);
  read(j, "k", b.k, where);
  if (b.k < 0) throw ValidationError(where + ".k must be nonnegative");
  return b;
}

json spec_to_json(const BaselineSpec& s) {
  return {{"family", std::string(to_string(s.family))},
          {"knots", s.knots},
          {"degree", s.degree},
          {"k", s.num_params}};
}

BaselineSpec spec_from_json(const json& j) {
  BaselineSpec s;
  s.family = parse_baseline_family(j.at("family").get<std::string>());
  s.knots = j.at("knots").get<std::vector<double>>();
  s.degree = j.at("degree").get<int>();
  s.num_params = j.at("k").get<int>();
  s.validate();
  return s;
}

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  check_keys(j,
             {"data", "output_dir", "structure", "baselines", "penalty", "solver", "grid",
              "standardize", "seed", "threads", "simulate", "predict"},
             "config");
  RunConfig c;
  read(j, "data", c.data, "config");
  read(j, "output_dir", c.output_dir, "config");
  if (j.contains("structure")) {
    std::string s;
    read(j, "structure", s, "config");
    c.structure = parse_structure(s);
  }
  if (j.contains("baselines")) {
    const json& b = j["baselines"];
    if (b.is_object()) {
      const auto one = choice_from_json(b, "config.baselines");
      c.baselines = {one, one, one};
    } else if (b.is_array() && b.size() == 3) {
      for (int g = 0; g < 3; ++g) {
        c.baselines[g] = choice_from_json(b[g], "config.baselines[" + std::to_string(g) + "]");
      }
    } else {
      throw ValidationError("config.baselines: expected an object or an array of three");
    }
  }
  if (j.contains("penalty")) {
    const json& p = j["penalty"];
    const std::string w = "config.penalty";
    check_keys(p, {"family", "a", "lambda1", "lambda2", "fusion_pairs", "mu"}, w);
    std::string fam = std::string(to_string(c.penalty.family));
    read(p, "family", fam, w);
    c.penalty.family = parse_penalty_family(fam);
    read(p, "a", c.penalty.a, w);
    read(p, "lambda1", c.penalty.lambda1, w);
    read(p, "lambda2", c.penalty.lambda2, w);
    read(p, "mu", c.penalty.mu, w);
    if (p.contains("fusion_pairs")) {
      if (p["fusion_pairs"].is_string() && p["fusion_pairs"] == "all") {
        c.penalty.fusion_pairs = PenaltyConfig::all_pairs();
      } else {
        std::vector<std::array<int, 2>> pairs;
        read(p, "fusion_pairs", pairs, w);
        c.penalty.fusion_pairs.clear();
        for (auto [a, b] : pairs) c.penalty.fusion_pairs.emplace_back(a, b);
      }
    }
    c.penalty.validate();
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    const std::string w = "config.solver";
    check_keys(s, {"xi", "max_iter", "r0", "shrink", "sufficient_decrease", "restarts"}, w);
    read(s, "xi", c.solver.xi, w);
    read(s, "max_iter", c.solver.max_iter, w);
    read(s, "r0", c.solver.r0, w);
    read(s, "shrink", c.solver.shrink, w);
    read(s, "sufficient_decrease", c.solver.sufficient_decrease, w);
    read(s, "restarts", c.solver.restarts, w);
    c.solver.validate();
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    const std::string w = "config.grid";
    check_keys(g, {"n_lambda1", "n_lambda2", "lambda2_max", "min_ratio", "max_step_ratio"}, w);
    read(g, "n_lambda1", c.grid.n_lambda1, w);
    read(g, "n_lambda2", c.grid.n_lambda2, w);
    read(g, "lambda2_max", c.grid.lambda2_max, w);
    read(g, "min_ratio", c.grid.min_ratio, w);
    read(g, "max_step_ratio", c.grid.max_step_ratio, w);
    if (c.grid.n_lambda1 < 1 || c.grid.n_lambda2 < 1) {
      throw ValidationError("config.grid: sizes must be positive");
    }
  }
  read(j, "standardize", c.standardize, "config");
  read(j, "seed", c.seed, "config");
  read(j, "threads", c.threads, "config");
  if (c.threads < 1) throw ValidationError("config.threads must be >= 1");
  if (j.contains("simulate")) {
    const json& s = j["simulate"];
    const std::string w = "config.simulate";
    check_keys(s, {"preset", "n", "replicates", "methods", "working_family", "working_k"}, w);
    read(s, "preset", c.simulate.preset, w);
    read(s, "n", c.simulate.n, w);
    read(s, "replicates", c.simulate.replicates, w);
    if (s.contains("methods")) {
      std::vector<std::string> names;
      read(s, "methods", names, w);
      c.simulate.methods.clear();
      for (const auto& m : names) c.simulate.methods.push_back(parse_method(m));
    }
    std::string wf = std::string(to_string(c.simulate.working_family));
    read(s, "working_family", wf, w);
    c.simulate.working_family = parse_baseline_family(wf);
    read(s, "working_k", c.simulate.working_k, w);
    if (c.simulate.n < 0 || c.simulate.replicates < 0) {
      throw ValidationError(w + ": n and replicates must be nonnegative");
    }
  }
  if (j.contains("predict")) {
    const json& p = j["predict"];
    const std::string w = "config.predict";
    check_keys(p, {"model", "covariates", "t_grid", "t_max", "n_t", "quad_nodes"}, w);
    read(p, "model", c.predict.model, w);
    read(p, "covariates", c.predict.covariates, w);
    read(p, "t_grid", c.predict.t_grid, w);
    read(p, "t_max", c.predict.t_max, w);
    read(p, "n_t", c.predict.n_t, w);
    read(p, "quad_nodes", c.predict.quad_nodes, w);
    if (c.predict.quad_nodes < 1 || c.predict.n_t < 1) {
      throw ValidationError(w + ": quad_nodes and n_t must be positive");
    }
  }
  return c;
}

std::string run_config_to_json(const RunConfig& c) {
  json pairs = json::array();
  for (auto [a, b] : c.penalty.fusion_pairs) pairs.push_back({a, b});
  json methods = json::array();
  for (Method m : c.simulate.methods) methods.push_back(std::string(to_string(m)));
  json j = {
      {"data", c.data},
      {"output_dir", c.output_dir},
      {"structure", std::string(to_string(c.structure))},
      {"baselines",
       {choice_to_json(c.baselines[0]), choice_to_json(c.baselines[1]),
        choice_to_json(c.baselines[2])}},
      {"penalty",
       {{"family", std::string(to_string(c.penalty.family))},
        {"a", c.penalty.a},
        {"lambda1", c.penalty.lambda1},
        {"lambda2", c.penalty.lambda2},
        {"fusion_pairs", pairs},
        {"mu", c.penalty.mu}}},
      {"solver",
       {{"xi", c.solver.xi},
        {"max_iter", c.solver.max_iter},
        {"r0", c.solver.r0},
        {"shrink", c.solver.shrink},
        {"sufficient_decrease", c.solver.sufficient_decrease},
        {"restarts", c.solver.restarts}}},
      {"grid",
       {{"n_lambda1", c.grid.n_lambda1},
        {"n_lambda2", c.grid.n_lambda2},
        {"lambda2_max", c.grid.lambda2_max},
        {"min_ratio", c.grid.min_ratio},
        {"max_step_ratio", c.grid.max_step_ratio}}},
      {"standardize", c.standardize},
      {"seed", c.seed},
      {"threads", c.threads},
      {"simulate",
       {{"preset", c.simulate.preset},
        {"n", c.simulate.n},
        {"replicates", c.simulate.replicates},
        {"methods", methods},
        {"working_family", std::string(to_string(c.simulate.working_family))},
        {"working_k", c.simulate.working_k}}},
      {"predict",
       {{"model", c.predict.model},
        {"covariates", c.predict.covariates},
        {"t_grid", c.predict.t_grid},
        {"t_max", c.predict.t_max},
        {"n_t", c.predict.n_t},
        {"quad_nodes", c.predict.quad_nodes}}},
  };
  return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& config) {
  RunConfig c = config;
  c.threads = 1;  // worker count never changes results
  c.output_dir.clear();
  return hex64(fnv1a64(run_config_to_json(c)));
}

ModelSpec resolve_model(const RunConfig& config, const Dataset& data) {
  std::array<BaselineSpec, 3> specs;
  for (int g = 0; g < 3; ++g) {
    const BaselineChoice& b = config.baselines[g];
    if (b.family == BaselineFamily::Weibull) {
      specs[g] = BaselineSpec::weibull();
      continue;
    }
    if (!b.knots.empty()) {
      switch (b.family) {
        case BaselineFamily::PiecewiseConstant: specs[g] = BaselineSpec::piecewise(b.knots); break;
        case BaselineFamily::BSplineLogHazard:
          specs[g] = BaselineSpec::bspline(b.knots, b.degree);
          break;
        case BaselineFamily::RoystonParmar: specs[g] = BaselineSpec::royston_parmar(b.knots); break;
        case BaselineFamily::Weibull: break;
      }
      if (b.k != 0 && b.k != specs[g].num_params) {
        throw ValidationError("baseline " + std::to_string(g + 1) + ": k = " +
                              std::to_string(b.k) + " disagrees with the knots given");
      }
      continue;
    }
    const int k = b.k != 0 ? b.k
                           : (b.family == BaselineFamily::BSplineLogHazard ? b.degree + 2 : 3);
    if (b.family == BaselineFamily::BSplineLogHazard && b.degree != 3) {
      throw ValidationError("automatic B-spline knots assume degree 3; give knots explicitly");
    }
    specs[g] = working_model(data, b.family, k, config.structure).baselines[g];
  }
  return ModelSpec::shared(specs, config.structure, static_cast<int>(data.d()));
}

// ---------------------------------------------------------------- artifacts

OriginalScale to_original_scale(const ModelLayout& layout, const Eigen::VectorXd& psi,
                                const Standardization& st) {
  OriginalScale o;
  for (int g = 0; g < 3; ++g) {
    o.beta[g].resize(layout.d(g));
    double off = 0.0;
    for (int j = 0; j < layout.d(g); ++j) {
      const int c = layout.columns(g)[j];
      const double scale = st.empty() ? 1.0 : st.scale(c);
      const double center = st.empty() ? 0.0 : st.center(c);
      o.beta[g](j) = psi(layout.beta_offset(g) + j) / scale;
      off -= o.beta[g](j) * center;
    }
    o.offset[g] = off;
  }
  return o;
}

std::string artifact_to_json(const ModelArtifact& a) {
  const ModelLayout& L = a.spec.layout;
  const OriginalScale orig = to_original_scale(L, a.psi, a.standardization);
  json beta_std = json::array(), beta_orig = json::array(), phi = json::array(),
       cols = json::array(), base = json::array();
  for (int g = 0; g < 3; ++g) {
    beta_std.push_back(vec(a.psi.segment(L.beta_offset(g), L.d(g))));
    beta_orig.push_back(vec(orig.beta[g]));
    phi.push_back(vec(a.psi.segment(L.phi_offset(g), L.k(g))));
    cols.push_back(L.columns(g));
    base.push_back(spec_to_json(a.spec.baselines[g]));
  }
  json j = {
      {"format", "penidm-model"},
      {"format_version", 1},
      {"software_version", a.software_version},
      {"config_hash", a.config_hash},
      {"data_hash", a.data_hash},
      {"structure", std::string(to_string(a.spec.structure))},
      {"baselines", base},
      {"columns", cols},
      {"covariate_names", a.covariate_names},
      {"psi", vec(a.psi)},
      {"beta_standardized", beta_std},
      {"beta_original", beta_orig},
      {"log_hazard_offset_original", {orig.offset[0], orig.offset[1], orig.offset[2]}},
      {"phi", phi},
      {"sigma", a.psi(L.sigma_index())},
      {"standardization",
       {{"center", vec(a.standardization.center)}, {"scale", vec(a.standardization.scale)}}},
      {"selection",
       {{"rule", a.selection},
        {"lambda1", a.lambda1},
        {"lambda2", a.lambda2},
        {"grid_index", a.grid_index},
        {"df", a.criteria.df},
        {"bic", a.criteria.bic},
        {"aic", a.criteria.aic}}},
      {"fit",
       {{"objective", a.objective},
        {"neg_log_lik", a.neg_log_lik},
        {"iterations", a.iterations},
        {"converged", a.converged},
        {"stop_reason", a.stop_reason}}},
      {"warnings", a.warnings},
  };
  return j.dump(2) + "\n";
}

ModelArtifact artifact_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "penidm-model") throw ValidationError("not a model artifact");
    ModelArtifact a;
    std::array<BaselineSpec, 3> specs;
    std::array<std::vector<int>, 3> cols;
    for (int g = 0; g < 3; ++g) {
      specs[g] = spec_from_json(j.at("baselines").at(g));
      cols[g] = j.at("columns").at(g).get<std::vector<int>>();
    }
    a.spec.baselines = specs;
    a.spec.structure = parse_structure(j.at("structure").get<std::string>());
    a.spec.layout = ModelLayout(cols, {specs[0].num_params, specs[1].num_params,
                                       specs[2].num_params});
    a.psi = to_vec(j.at("psi"));
    if (a.psi.size() != a.spec.layout.size()) {
      throw ValidationError("artifact: psi length does not match the layout");
    }
    a.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
    a.standardization.center = to_vec(j.at("standardization").at("center"));
    a.standardization.scale = to_vec(j.at("standardization").at("scale"));
    a.software_version = j.at("software_version").get<std::string>();
    a.config_hash = j.at("config_hash").get<std::string>();
    a.data_hash = j.at("data_hash").get<std::string>();
    const json& s = j.at("selection");
    a.selection = s.at("rule").get<std::string>();
    a.lambda1 = s.at("lambda1").get<double>();
    a.lambda2 = s.at("lambda2").get<double>();
    a.grid_index = s.at("grid_index").get<int>();
    a.criteria.df = s.at("df").get<int>();
    a.criteria.bic = s.at("bic").get<double>();
    a.criteria.aic = s.at("aic").get<double>();
    const json& f = j.at("fit");
    a.objective = f.at("objective").get<double>();
    a.neg_log_lik = f.at("neg_log_lik").get<double>();
    a.iterations = f.at("iterations").get<int>();
    a.converged = f.at("converged").get<bool>();
    a.stop_reason = f.at("stop_reason").get<std::string>();
    a.warnings = j.at("warnings").get<std::vector<std::string>>();
    return a;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("artifact: ") + e.what());
  }
}

namespace {

// JSON has no infinity; failed grid points carry null criteria.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string path_result_json(const PathResult& path, const ModelLayout& layout) {
  json pts = json::array();
  for (const auto& p : path.points) {
    pts.push_back({{"i1", p.i1},
                   {"i2", p.i2},
                   {"lambda1", p.lambda1},
                   {"lambda2", p.lambda2},
                   {"objective", finite_or_null(p.fit.objective)},
                   {"neg_log_lik", finite_or_null(p.fit.neg_log_lik)},
                   {"df", p.criteria.df},
                   {"bic", finite_or_null(p.criteria.bic)},
                   {"aic", finite_or_null(p.criteria.aic)},
                   {"converged", p.fit.converged},
                   {"iterations", p.fit.iterations},
                   {"nonzero", p.nonzero},
                   {"failed", p.failed},
                   {"error", p.error}});
  }
  json sel = json::object();
  auto add = [&](const char* name, int idx) {
    if (idx < 0) {
      sel[name] = nullptr;
      return;
    }
    const auto& p = path.points[idx];
    sel[name] = {{"index", idx},
                 {"lambda1", p.lambda1},
                 {"lambda2", p.lambda2},
                 {"beta", vec(p.fit.psi.head(layout.num_beta()))},
                 {"psi", vec(p.fit.psi)}};
  };
  add("bic_full", path.selected.bic_full);
  add("bic_sub", path.selected.bic_sub);
  add("aic_full", path.selected.aic_full);
  add("aic_sub", path.selected.aic_sub);
  const json j = {{"n", path.n},
                  {"lambda1", path.grid.lambda1},
                  {"lambda2", path.grid.lambda2},
                  {"points", pts},
                  {"selected", sel}};
  return j.dump(2) + "\n";
}

std::string path_result_csv(const PathResult& path) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "i1,i2,lambda1,lambda2,objective,neg_log_lik,df,bic,aic,converged,iterations,nonzero,"
        "failed\n";
  for (const auto& p : path.points) {
    os << p.i1 << ',' << p.i2 << ',' << p.lambda1 << ',' << p.lambda2 << ',' << p.fit.objective
       << ',' << p.fit.neg_log_lik << ',' << p.criteria.df << ',' << p.criteria.bic << ','
       << p.criteria.aic << ',' << p.fit.converged << ',' << p.fit.iterations << ','
       << p.nonzero << ',' << p.failed << '\n';
  }
  return os.str();
}

std::string study_report_json(const StudyReport& r) {
  json methods = json::array();
  for (Method m : r.methods) methods.push_back(std::string(to_string(m)));
  json summary = json::array();
  for (const auto& s : r.summary) {
    summary.push_back({{"method", std::string(to_string(s.method))},
                       {"failures", s.failures},
                       {"mean_l2", finite_or_null(s.mean_l2)},
                       {"median_l2", finite_or_null(s.median_l2)},
                       {"mean_sign_inconsistency", finite_or_null(s.mean_sign)},
                       {"mean_false_inclusions", finite_or_null(s.mean_false_inclusions)},
                       {"mean_false_exclusions", finite_or_null(s.mean_false_exclusions)}});
  }
  json reps = json::array();
  for (const auto& rep : r.replicates) {
    json ms = json::array();
    for (std::size_t k = 0; k < rep.metrics.size(); ++k) {
      const auto& m = rep.metrics[k];
      ms.push_back({{"method", std::string(to_string(r.methods[k]))},
                    {"failed", m.failed},
                    {"l2", m.l2},
                    {"sign_inconsistency", m.sign},
                    {"false_inclusions", m.false_inclusions},
                    {"false_exclusions", m.false_exclusions}});
    }
    reps.push_back({{"replicate", rep.replicate},
                    {"seed", rep.seed},
                    {"nonterminal_fraction", rep.nonterminal_fraction},
                    {"metrics", ms}});
  }
  const json j = {{"setting", r.setting}, {"methods", methods}, {"summary", summary},
                  {"replicates", reps}};
  return j.dump(2) + "\n";
}

}  // namespace penidm
