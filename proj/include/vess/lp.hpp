#pragma once

#include <Eigen/Dense>
#include <limits>
#include <utility>
#include <vector>

namespace vess {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class RowKind { Equal, LessEqual, GreaterEqual };

// minimize c'x subject to row constraints A x (=,<=,>=) b and lower <= x <= upper.
struct LinearProgram {
  Eigen::VectorXd c;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<RowKind> row_kind;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index rows() const { return A.rows(); }
  Eigen::Index cols() const { return A.cols(); }
  void validate() const;
};

// minimize 1/2 x'Qx + c'x over the LinearProgram feasible set.
struct QuadraticProgram {
  LinearProgram lp;
  Eigen::MatrixXd Q;

  void validate() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded };

const char* to_string(SolveStatus status);

// KKT residuals in the Lagrangian form s = Qx + c - A'y.
struct Certificate {
  double primal_residual = 0.0;     // row and bound violation
  double dual_infeasibility = 0.0;  // sign errors in y and s
  double complementarity = 0.0;     // max |y_i * slack_i|, |s_j * distance to bound|
  double duality_gap = 0.0;         // relative to 1 + |objective|

  bool within(double tol) const;
};

struct LpSolution {
  SolveStatus status = SolveStatus::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  Eigen::VectorXd y;  // row multipliers, >= 0 on >= rows and <= 0 on <= rows
  Eigen::VectorXd s;  // reduced costs
  std::vector<int> basis;
  Certificate certificate;
  int iterations = 0;
};

struct SolverOptions {
  int dantzig_iterations = 1000;  // then switch to Bland's rule
  double pivot_tol = 1e-9;
  double optimality_tol = 1e-10;
  double feasibility_tol = 1e-9;
};

LpSolution solve_lp(const LinearProgram& lp, const SolverOptions& options = {});
LpSolution solve_qp(const QuadraticProgram& qp, const SolverOptions& options = {});

// Process-wide record of optimal solves; the worst field holds each residual's maximum.
struct SolveTally {
  long lp_solves = 0;
  long qp_solves = 0;
  Certificate worst;
};

SolveTally solve_tally();
void reset_solve_tally();

Certificate certify(const LinearProgram& lp, const Eigen::MatrixXd* Q, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& y);

// Incremental construction of a LinearProgram from sparse rows.
class LpBuilder {
 public:
  int add_variable(double cost, double lower = 0.0, double upper = kInfinity);
  int add_row(const std::vector<std::pair<int, double>>& terms, RowKind kind, double rhs);
  int variable_count() const { return static_cast<int>(cost_.size()); }
  int row_count() const { return static_cast<int>(rhs_.size()); }
  void set_bounds(int var, double lower, double upper);
  void set_cost(int var, double cost) { cost_.at(var) = cost; }
  LinearProgram build() const;

 private:
  std::vector<double> cost_, lower_, upper_, rhs_;
  std::vector<RowKind> kind_;
  std::vector<std::vector<std::pair<int, double>>> rows_;
};

}  // namespace vess
