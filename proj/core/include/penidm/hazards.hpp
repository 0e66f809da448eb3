#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace penidm {

enum class BaselineFamily { Weibull, PiecewiseConstant, BSplineLogHazard, RoystonParmar };

std::string_view to_string(BaselineFamily family);
BaselineFamily parse_baseline_family(std::string_view name);

/// Parametric form of one transition's baseline hazard.
///
/// `knots` holds, per family:
///  - Weibull: nothing.
///  - PiecewiseConstant: breakpoints 0 = t(1) < ... < t(k); the last interval is open.
///  - BSplineLogHazard: distinct knots including both boundaries; k = knots + degree - 1.
///  - RoystonParmar: k knots on the time scale (log taken internally), the first and
///    last are the boundary knots.
struct BaselineSpec {
  BaselineFamily family = BaselineFamily::Weibull;
  std::vector<double> knots;
  int degree = 3;
  int num_params = 2;

  static BaselineSpec weibull();
  static BaselineSpec piecewise(std::vector<double> breakpoints);
  static BaselineSpec bspline(std::vector<double> knots, int degree = 3);
  static BaselineSpec royston_parmar(std::vector<double> knots);

  /// Throws ValidationError if knots, degree and num_params are inconsistent.
  void validate() const;

  bool operator==(const BaselineSpec&) const = default;
};

/// Parameter count implied by family + knots (+ degree).
int implied_num_params(BaselineFamily family, std::size_t num_knots, int degree);

/// Quadrature order used per inter-knot segment for B-spline cumulative hazards.
inline constexpr int kBSplineQuadratureOrder = 30;

/// Per-time quantities that do not depend on phi. Built once, evaluated many times.
struct TimeBatch {
  Eigen::VectorXd t;
  Eigen::VectorXd log_t;
  Eigen::Array<bool, Eigen::Dynamic, 1> positive;  // t > 0
  Eigen::VectorXi interval;                         // piecewise interval index
  Eigen::MatrixXd basis;                            // n x k (exposure, v(z) or B(t))
  Eigen::MatrixXd dbasis;                           // n x k (v'(z) for Royston-Parmar)
  std::vector<Eigen::MatrixXd> node_basis;          // B-spline: nodes x k per row
  std::vector<Eigen::VectorXd> node_weight;

  Eigen::Index size() const { return t.size(); }
};

/// Baseline quantities for a batch of times.
struct BatchValues {
  Eigen::VectorXd log_h;                // log h0(t); only meaningful where requested
  Eigen::VectorXd cum;                  // H0(t)
  Eigen::MatrixXd dlog_h;               // n x k
  Eigen::MatrixXd dcum;                 // n x k
  std::vector<Eigen::MatrixXd> d2log_h; // per row k x k (order 2 only)
  std::vector<Eigen::MatrixXd> d2cum;
};

/// Evaluator for one baseline specification. Immutable after construction.
class Baseline {
 public:
  explicit Baseline(BaselineSpec spec);

  const BaselineSpec& spec() const { return spec_; }
  int num_params() const { return spec_.num_params; }

  /// Precompute phi-independent features at the given times (t >= 0).
  /// Throws DomainError for negative times or times beyond B-spline boundary knots.
  TimeBatch prepare(std::span<const double> times) const;

  /// Fill `out` with values (order 0), plus first (order 1) and second (order 2)
  /// phi-derivatives. `want_log_h` selects rows whose log-hazard is needed (null means
  /// all); unselected rows get log_h = 0, and selected rows at t = 0 get NaN where the
  /// hazard is undefined there. H0(0) = 0 by convention.
  void evaluate(const TimeBatch& batch, const Eigen::Ref<const Eigen::VectorXd>& phi,
                int order, const Eigen::Array<bool, Eigen::Dynamic, 1>* want_log_h,
                BatchValues& out) const;

  double log_hazard(double t, const Eigen::Ref<const Eigen::VectorXd>& phi) const;
  double hazard(double t, const Eigen::Ref<const Eigen::VectorXd>& phi) const;
  double cumulative(double t, const Eigen::Ref<const Eigen::VectorXd>& phi) const;

  /// Times where the hazard or its derivatives are not smooth (for quadrature splitting).
  std::vector<double> singular_points() const;

  /// True when h(t) behaves like t^(a-1) near 0, which needs graded quadrature there.
  bool power_law_at_origin() const;

  /// Largest time at which the baseline is defined (infinity unless B-spline).
  double upper_limit() const;

  /// Royston-Parmar: true when the implied hazard is positive on [lo, hi].
  /// Other families are always monotone.
  bool cumulative_is_monotone(const Eigen::Ref<const Eigen::VectorXd>& phi, double lo,
                              double hi, int grid_points = 200) const;

 private:
  void check_phi(const Eigen::Ref<const Eigen::VectorXd>& phi) const;
  Eigen::RowVectorXd bspline_basis(double t) const;

  BaselineSpec spec_;
  std::vector<double> augmented_;  // B-spline knot vector with repeated boundaries
  std::vector<double> log_knots_;  // Royston-Parmar knots on the log scale
};

// Point-wise convenience API.

double log_h0(const BaselineSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& phi, double t);
double H0(const BaselineSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& phi, double t);
Eigen::VectorXd dH0_dphi(const BaselineSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& phi,
                         double t);
Eigen::MatrixXd d2H0_dphi2(const BaselineSpec& spec,
                           const Eigen::Ref<const Eigen::VectorXd>& phi, double t);
Eigen::VectorXd dlogh0_dphi(const BaselineSpec& spec,
                            const Eigen::Ref<const Eigen::VectorXd>& phi, double t);
Eigen::MatrixXd d2logh0_dphi2(const BaselineSpec& spec,
                              const Eigen::Ref<const Eigen::VectorXd>& phi, double t);

/// Default knot placement from observed times.
///  - piecewise: 0 plus the j/k sample quantiles, j = 1..k-1;
///  - B-spline: boundaries 0 and max(times), interior knots at equally spaced quantiles;
///  - Royston-Parmar: boundaries min positive and max time, interior at quantiles.
/// Quantiles use linear interpolation between order statistics.
std::vector<double> default_knots(BaselineFamily family, std::span<const double> observed_times,
                                  int num_params, int degree = 3);

/// Sample quantile with linear interpolation between order statistics.
double sample_quantile(std::vector<double> values, double p);

}  // namespace penidm
