#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vess/lp.hpp"

namespace vess::detail {

// min 1/2 x'Hx + c'x  s.t.  A x = b (b >= 0),  0 <= x <= upper.
struct StandardForm {
  struct Column {
    int pos = -1;  // x_orig = offset + sign * x[pos] - x[neg]
    int neg = -1;
    double sign = 1.0;
    double offset = 0.0;
  };

  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  Eigen::VectorXd upper;
  Eigen::MatrixXd H;      // empty for linear problems
  std::vector<int> quad;  // columns touched by H
  Eigen::VectorXd row_sign;
  std::vector<Column> map;
  std::vector<int> origin;  // std column -> original column, -1 for slacks
  std::vector<int> slack_of_row;  // slack column with +1 coefficient, or -1
  bool bounds_infeasible = false;

  Eigen::VectorXd to_original(const Eigen::VectorXd& xs) const;
};

StandardForm standardize(const LinearProgram& lp, const Eigen::MatrixXd* Q);

enum class RunStatus { Optimal, Unbounded };

class Tableau {
 public:
  Tableau(const StandardForm& sf, const SolverOptions& options);

  bool phase_one();
  RunStatus minimize_linear(const Eigen::VectorXd& cost);
  RunStatus minimize_quadratic(const Eigen::MatrixXd& H, const std::vector<int>& quad,
                               const Eigen::VectorXd& cost);

  Eigen::VectorXd values() const;
  // pi = B^{-T} g_B for the standard-form rows.
  Eigen::VectorXd multipliers(const Eigen::VectorXd& gradient) const;
  std::vector<int> basic_columns() const;
  int iterations() const { return iterations_; }

 private:
  enum class State { Basic, Lower, Upper, Super };

  void pivot(int row, int col);
  void recompute_basics();
  Eigen::VectorXd reduced_costs(const Eigen::VectorXd& cost) const;
  bool fixed(int j) const { return upper_[j] <= 0.0; }
  void check_budget();
  void leave(int row, bool to_upper);

  const StandardForm& sf_;
  SolverOptions opt_;
  int m_ = 0;
  int n_ = 0;  // structural columns; artificials follow
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> T_;
  Eigen::VectorXd beta_;
  Eigen::VectorXd value_;  // nonbasic and superbasic values
  Eigen::VectorXd upper_;
  std::vector<int> head_;
  std::vector<State> state_;
  int iterations_ = 0;
  int phase_iterations_ = 0;
  int cap_ = 0;
};

}  // namespace vess::detail
