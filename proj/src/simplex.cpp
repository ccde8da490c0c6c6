#include <algorithm>
#include <cmath>

#include "tableau.hpp"
#include "vess/errors.hpp"
#include "vess/lp.hpp"

namespace vess {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

void LinearProgram::validate() const {
  const auto m = A.rows();
  const auto n = A.cols();
  if (c.size() != n || b.size() != m || static_cast<Eigen::Index>(row_kind.size()) != m ||
      lower.size() != n || upper.size() != n)
    throw DimensionError("linear program dimensions are inconsistent");
  if (!A.allFinite() || !b.allFinite() || !c.allFinite())
    throw DomainError("linear program coefficients must be finite");
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] == kInfinity ||
        upper[j] == -kInfinity)
      throw DomainError("invalid variable bounds");
  }
}

void QuadraticProgram::validate() const {
  lp.validate();
  if (Q.rows() != lp.cols() || Q.cols() != lp.cols())
    throw DimensionError("quadratic term does not match the variable count");
  if (!Q.allFinite()) throw DomainError("quadratic term must be finite");
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  if (((Q - Q.transpose()).cwiseAbs().maxCoeff()) > 1e-12 * scale)
    throw DomainError("quadratic term must be symmetric");
  if (Q.diagonal().minCoeff() < 0.0) throw DomainError("quadratic term is not positive semidefinite");
}

bool Certificate::within(double tol) const {
  return primal_residual <= tol && dual_infeasibility <= tol && complementarity <= tol &&
         duality_gap <= tol;
}

Certificate certify(const LinearProgram& lp, const Eigen::MatrixXd* Q, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& y) {
  Certificate cert;
  const Eigen::VectorXd Ax = lp.A * x;
  Eigen::VectorXd grad = lp.c;
  double quad = 0.0;
  if (Q != nullptr) {
    const Eigen::VectorXd Qx = (*Q) * x;
    grad += Qx;
    quad = x.dot(Qx);
  }
  const Eigen::VectorXd s = grad - lp.A.transpose() * y;
  const double primal = 0.5 * quad + lp.c.dot(x);
  double dual = -0.5 * quad + lp.b.dot(y);

  for (Eigen::Index i = 0; i < lp.rows(); ++i) {
    const double r = Ax[i] - lp.b[i];
    switch (lp.row_kind[i]) {
      case RowKind::Equal:
        cert.primal_residual = std::max(cert.primal_residual, std::abs(r));
        break;
      case RowKind::LessEqual:
        cert.primal_residual = std::max(cert.primal_residual, r);
        cert.dual_infeasibility = std::max(cert.dual_infeasibility, y[i]);
        cert.complementarity = std::max(cert.complementarity, std::abs(y[i] * r));
        break;
      case RowKind::GreaterEqual:
        cert.primal_residual = std::max(cert.primal_residual, -r);
        cert.dual_infeasibility = std::max(cert.dual_infeasibility, -y[i]);
        cert.complementarity = std::max(cert.complementarity, std::abs(y[i] * r));
        break;
    }
  }
  for (Eigen::Index j = 0; j < lp.cols(); ++j) {
    const double l = lp.lower[j];
    const double u = lp.upper[j];
    const double sp = std::max(s[j], 0.0);
    const double sm = std::max(-s[j], 0.0);
    if (std::isfinite(l)) {
      cert.primal_residual = std::max(cert.primal_residual, l - x[j]);
      cert.complementarity = std::max(cert.complementarity, sp * std::abs(x[j] - l));
      dual += l * sp;
    } else {
      cert.dual_infeasibility = std::max(cert.dual_infeasibility, sp);
    }
    if (std::isfinite(u)) {
      cert.primal_residual = std::max(cert.primal_residual, x[j] - u);
      cert.complementarity = std::max(cert.complementarity, sm * std::abs(u - x[j]));
      dual -= u * sm;
    } else {
      cert.dual_infeasibility = std::max(cert.dual_infeasibility, sm);
    }
  }
  cert.duality_gap = std::abs(primal - dual) / (1.0 + std::abs(primal));
  return cert;
}

namespace {

SolveTally tally;

void record(const LpSolution& sol, bool quadratic) {
  if (sol.status != SolveStatus::Optimal) return;
  ++(quadratic ? tally.qp_solves : tally.lp_solves);
  Certificate& w = tally.worst;
  const Certificate& c = sol.certificate;
  w.primal_residual = std::max(w.primal_residual, c.primal_residual);
  w.dual_infeasibility = std::max(w.dual_infeasibility, c.dual_infeasibility);
  w.complementarity = std::max(w.complementarity, c.complementarity);
  w.duality_gap = std::max(w.duality_gap, c.duality_gap);
}

LpSolution finish(const LinearProgram& lp, const Eigen::MatrixXd* Q, const detail::StandardForm& sf,
                  const detail::Tableau& tab) {
  LpSolution sol;
  sol.status = SolveStatus::Optimal;
  const Eigen::VectorXd xs = tab.values();
  Eigen::VectorXd grad = sf.c;
  if (!sf.quad.empty()) grad += sf.H * xs;
  const Eigen::VectorXd pi = tab.multipliers(grad);
  sol.x = sf.to_original(xs);
  sol.y = sf.row_sign.cwiseProduct(pi);
  Eigen::VectorXd g = lp.c;
  sol.objective = lp.c.dot(sol.x);
  if (Q != nullptr) {
    const Eigen::VectorXd Qx = (*Q) * sol.x;
    g += Qx;
    sol.objective += 0.5 * sol.x.dot(Qx);
  }
  sol.s = g - lp.A.transpose() * sol.y;
  for (int col : tab.basic_columns()) {
    const int j = sf.origin[col];
    if (j >= 0 && (sol.basis.empty() || sol.basis.back() != j)) sol.basis.push_back(j);
  }
  std::sort(sol.basis.begin(), sol.basis.end());
  sol.basis.erase(std::unique(sol.basis.begin(), sol.basis.end()), sol.basis.end());
  sol.certificate = certify(lp, Q, sol.x, sol.y);
  sol.iterations = tab.iterations();
  return sol;
}

LpSolution run(const LinearProgram& lp, const Eigen::MatrixXd* Q, const SolverOptions& options) {
  const detail::StandardForm sf = detail::standardize(lp, Q);
  LpSolution sol;
  if (sf.bounds_infeasible) {
    sol.status = SolveStatus::Infeasible;
    return sol;
  }
  detail::Tableau tab(sf, options);
  if (!tab.phase_one()) {
    sol.status = SolveStatus::Infeasible;
    sol.iterations = tab.iterations();
    return sol;
  }
  detail::RunStatus status = tab.minimize_linear(sf.c);
  if (Q != nullptr) status = tab.minimize_quadratic(sf.H, sf.quad, sf.c);
  if (status == detail::RunStatus::Unbounded) {
    sol.status = SolveStatus::Unbounded;
    sol.iterations = tab.iterations();
    return sol;
  }
  sol = finish(lp, Q, sf, tab);
  record(sol, Q != nullptr);
  return sol;
}

}  // namespace

SolveTally solve_tally() { return tally; }

void reset_solve_tally() { tally = SolveTally{}; }

LpSolution solve_lp(const LinearProgram& lp, const SolverOptions& options) {
  lp.validate();
  return run(lp, nullptr, options);
}

LpSolution solve_qp(const QuadraticProgram& qp, const SolverOptions& options) {
  qp.validate();
  return run(qp.lp, &qp.Q, options);
}

int LpBuilder::add_variable(double cost, double lower, double upper) {
  cost_.push_back(cost);
  lower_.push_back(lower);
  upper_.push_back(upper);
  return static_cast<int>(cost_.size()) - 1;
}

void LpBuilder::set_bounds(int var, double lower, double upper) {
  lower_.at(var) = lower;
  upper_.at(var) = upper;
}

int LpBuilder::add_row(const std::vector<std::pair<int, double>>& terms, RowKind kind, double rhs) {
  rows_.push_back(terms);
  kind_.push_back(kind);
  rhs_.push_back(rhs);
  return static_cast<int>(rhs_.size()) - 1;
}

LinearProgram LpBuilder::build() const {
  const int n = variable_count();
  const int m = row_count();
  LinearProgram lp;
  lp.c = Eigen::Map<const Eigen::VectorXd>(cost_.data(), n);
  lp.lower = Eigen::Map<const Eigen::VectorXd>(lower_.data(), n);
  lp.upper = Eigen::Map<const Eigen::VectorXd>(upper_.data(), n);
  lp.b = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), m);
  lp.row_kind = kind_;
  lp.A = Eigen::MatrixXd::Zero(m, n);
  for (int i = 0; i < m; ++i)
    for (const auto& [j, a] : rows_[i]) {
      if (j < 0 || j >= n) throw DimensionError("row references an unknown variable");
      lp.A(i, j) += a;
    }
  return lp;
}

}  // namespace vess
