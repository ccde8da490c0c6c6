#include "vess/parametric.hpp"

#include <cmath>

#include "tableau.hpp"
#include "vess/errors.hpp"

namespace vess {

namespace {

constexpr double kSupportTol = 1e-9;
constexpr int kMaxTransitions = 10000;
constexpr int kMaxStalls = 50;

// A x = b, x >= 0 with finite upper bounds moved into rows.
struct PureForm {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  Eigen::VectorXd db;
};

PureForm purify(const LinearProgram& lp, const Eigen::VectorXd& direction) {
  const detail::StandardForm sf = detail::standardize(lp, nullptr);
  if (sf.bounds_infeasible) throw DomainError("parametric ray: program is infeasible at phi = 0");
  const int m = static_cast<int>(sf.A.rows());
  const int n = static_cast<int>(sf.A.cols());
  std::vector<int> bounded;
  for (int j = 0; j < n; ++j)
    if (std::isfinite(sf.upper[j])) bounded.push_back(j);
  const int k = static_cast<int>(bounded.size());
  PureForm p;
  p.A = Eigen::MatrixXd::Zero(m + k, n + k);
  p.A.topLeftCorner(m, n) = sf.A;
  p.b.resize(m + k);
  p.b.head(m) = sf.b;
  p.c = Eigen::VectorXd::Zero(n + k);
  p.c.head(n) = sf.c;
  p.db = Eigen::VectorXd::Zero(m + k);
  p.db.head(m) = sf.row_sign.cwiseProduct(direction);
  for (int r = 0; r < k; ++r) {
    p.A(m + r, bounded[r]) = 1.0;
    p.A(m + r, n + r) = 1.0;
    p.b[m + r] = sf.upper[bounded[r]];
  }
  return p;
}

LinearProgram equality_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& c) {
  LinearProgram lp;
  lp.A = A;
  lp.b = b;
  lp.c = c;
  lp.row_kind.assign(A.rows(), RowKind::Equal);
  lp.lower = Eigen::VectorXd::Zero(A.cols());
  lp.upper = Eigen::VectorXd::Constant(A.cols(), kInfinity);
  return lp;
}

// max db'y  s.t.  A_j'y <= c_j, with equality on the support of x.
LpSolution slope_problem(const PureForm& p, const Eigen::VectorXd& x,
                         const SolverOptions& options) {
  const auto m = p.A.rows();
  const auto n = p.A.cols();
  LinearProgram lp;
  lp.A = p.A.transpose();
  lp.b = p.c;
  lp.c = -p.db;
  lp.row_kind.resize(n);
  for (Eigen::Index j = 0; j < n; ++j)
    lp.row_kind[j] = x[j] > kSupportTol ? RowKind::Equal : RowKind::LessEqual;
  lp.lower = Eigen::VectorXd::Constant(m, -kInfinity);
  lp.upper = Eigen::VectorXd::Constant(m, kInfinity);
  return solve_lp(lp, options);
}

// max phi  s.t.  A x - phi db = b, x >= 0, x_j = 0 where s_j > 0.
LpSolution reach_problem(const PureForm& p, const Eigen::VectorXd& s,
                         const SolverOptions& options) {
  const auto m = p.A.rows();
  const auto n = p.A.cols();
  Eigen::MatrixXd A(m, n + 1);
  A.leftCols(n) = p.A;
  A.col(n) = -p.db;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 1);
  c[n] = -1.0;
  LinearProgram lp = equality_lp(A, p.b, c);
  for (Eigen::Index j = 0; j < n; ++j)
    if (s[j] > kSupportTol) lp.upper[j] = 0.0;
  return solve_lp(lp, options);
}

}  // namespace

double ParametricRay::value(double phi) const {
  if (phi < 0.0) throw DomainError("parametric ray evaluated at negative phi");
  if (phi > domain_end * (1.0 + 1e-12) + 1e-12) return kInfinity;
  double z = value_at_zero;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double end = k + 1 < points.size() ? points[k + 1] : kInfinity;
    if (phi <= points[k]) break;
    z += slopes[k] * (std::min(phi, end) - points[k]);
  }
  return z;
}

ParametricRay parametric_rhs_ray(const LinearProgram& lp, const Eigen::VectorXd& direction,
                                 const SolverOptions& options) {
  lp.validate();
  if (direction.size() != lp.rows()) throw DimensionError("ray direction must match the row count");
  const PureForm p = purify(lp, direction);

  const LpSolution start = solve_lp(equality_lp(p.A, p.b, p.c), options);
  if (start.status != SolveStatus::Optimal)
    throw DomainError("parametric ray needs a program that is optimal at phi = 0");

  ParametricRay ray;
  ray.direction = direction;
  ray.value_at_zero = solve_lp(lp, options).objective;
  double phi = 0.0;
  Eigen::VectorXd x = start.x;
  const auto n = p.A.cols();
  int stalled = 0;

  for (int iter = 0; iter < kMaxTransitions; ++iter) {
    const LpSolution dual = slope_problem(p, x, options);
    if (dual.status == SolveStatus::Unbounded) {
      ray.domain_end = phi;
      break;
    }
    if (dual.status != SolveStatus::Optimal)
      throw NumericalFailure("parametric ray: slope problem has no dual-feasible point");
    const double slope = -dual.objective;
    const Eigen::VectorXd s = p.c - p.A.transpose() * dual.x;

    const double merge = 1e-9 * (1.0 + std::abs(phi));
    if (!ray.points.empty() && phi - ray.points.back() <= merge) {
      ray.slopes.back() = slope;  // zero-length interval: keep the later slope
    } else {
      ray.points.push_back(phi);
      ray.slopes.push_back(slope);
    }
    if (ray.slopes.size() >= 2 &&
        std::abs(ray.slopes.back() - ray.slopes[ray.slopes.size() - 2]) <= 1e-9) {
      ray.slopes.pop_back();
      ray.points.pop_back();
    }

    const LpSolution reach = reach_problem(p, s, options);
    if (reach.status == SolveStatus::Unbounded) break;
    if (reach.status != SolveStatus::Optimal)
      throw NumericalFailure("parametric ray: lost feasibility along the ray");
    const double next = reach.x[n];
    x = reach.x.head(n);
    stalled = next <= phi + merge ? stalled + 1 : 0;
    if (stalled > kMaxStalls) throw NumericalFailure("parametric ray is cycling at a breakpoint");
    phi = std::max(phi, next);
    if (iter + 1 == kMaxTransitions) throw NumericalFailure("parametric ray did not terminate");
  }
  return ray;
}

}  // namespace vess
