#include "tableau.hpp"

#include <algorithm>
#include <cmath>

#include "vess/errors.hpp"

namespace vess::detail {

StandardForm standardize(const LinearProgram& lp, const Eigen::MatrixXd* Q) {
  StandardForm sf;
  const int n_orig = static_cast<int>(lp.cols());
  const int m = static_cast<int>(lp.rows());
  sf.map.resize(n_orig);

  std::vector<double> ub;
  for (int j = 0; j < n_orig; ++j) {
    const double l = lp.lower[j];
    const double u = lp.upper[j];
    auto& col = sf.map[j];
    if (l > u) sf.bounds_infeasible = true;
    if (std::isfinite(l)) {
      col.pos = static_cast<int>(ub.size());
      col.offset = l;
      ub.push_back(std::isfinite(u) ? std::max(u - l, 0.0) : kInfinity);
    } else if (std::isfinite(u)) {
      col.pos = static_cast<int>(ub.size());
      col.sign = -1.0;
      col.offset = u;
      ub.push_back(kInfinity);
    } else {
      col.pos = static_cast<int>(ub.size());
      ub.push_back(kInfinity);
      col.neg = static_cast<int>(ub.size());
      ub.push_back(kInfinity);
    }
  }
  std::vector<int> slack(m, -1);
  for (int i = 0; i < m; ++i) {
    if (lp.row_kind[i] != RowKind::Equal) {
      slack[i] = static_cast<int>(ub.size());
      ub.push_back(kInfinity);
    }
  }
  const int n = static_cast<int>(ub.size());
  sf.upper = Eigen::Map<Eigen::VectorXd>(ub.data(), n);
  sf.origin.assign(n, -1);
  for (int j = 0; j < n_orig; ++j) {
    sf.origin[sf.map[j].pos] = j;
    if (sf.map[j].neg >= 0) sf.origin[sf.map[j].neg] = j;
  }

  Eigen::VectorXd offset(n_orig);
  for (int j = 0; j < n_orig; ++j) offset[j] = sf.map[j].offset;

  sf.A = Eigen::MatrixXd::Zero(m, n);
  sf.b = lp.b - lp.A * offset;
  for (int j = 0; j < n_orig; ++j) {
    const auto& col = sf.map[j];
    sf.A.col(col.pos) = col.sign * lp.A.col(j);
    if (col.neg >= 0) sf.A.col(col.neg) = -lp.A.col(j);
  }
  for (int i = 0; i < m; ++i) {
    if (slack[i] >= 0) sf.A(i, slack[i]) = lp.row_kind[i] == RowKind::LessEqual ? 1.0 : -1.0;
  }
  sf.row_sign = Eigen::VectorXd::Ones(m);
  sf.slack_of_row.assign(m, -1);
  for (int i = 0; i < m; ++i) {
    if (sf.b[i] < 0.0) {
      sf.row_sign[i] = -1.0;
      sf.A.row(i) *= -1.0;
      sf.b[i] = -sf.b[i];
    }
    if (slack[i] >= 0 && sf.A(i, slack[i]) > 0.0) sf.slack_of_row[i] = slack[i];
  }

  Eigen::VectorXd c_orig = lp.c;
  if (Q != nullptr) c_orig += (*Q) * offset;
  sf.c = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n_orig; ++j) {
    const auto& col = sf.map[j];
    sf.c[col.pos] += col.sign * c_orig[j];
    if (col.neg >= 0) sf.c[col.neg] -= c_orig[j];
  }

  if (Q != nullptr) {
    sf.H = Eigen::MatrixXd::Zero(n, n);
    std::vector<bool> touched(n, false);
    auto spread = [&](int j, auto&& emit) {
      const auto& col = sf.map[j];
      emit(col.pos, col.sign);
      if (col.neg >= 0) emit(col.neg, -1.0);
    };
    for (int j = 0; j < n_orig; ++j) {
      for (int k = 0; k < n_orig; ++k) {
        const double q = (*Q)(j, k);
        if (q == 0.0) continue;
        spread(j, [&](int pj, double sj) {
          spread(k, [&](int pk, double sk) {
            sf.H(pj, pk) += sj * sk * q;
            touched[pj] = touched[pk] = true;
          });
        });
      }
    }
    for (int j = 0; j < n; ++j)
      if (touched[j]) sf.quad.push_back(j);
  }
  return sf;
}

Eigen::VectorXd StandardForm::to_original(const Eigen::VectorXd& xs) const {
  Eigen::VectorXd x(map.size());
  for (std::size_t j = 0; j < map.size(); ++j) {
    const auto& col = map[j];
    x[j] = col.offset + col.sign * xs[col.pos] - (col.neg >= 0 ? xs[col.neg] : 0.0);
  }
  return x;
}

Tableau::Tableau(const StandardForm& sf, const SolverOptions& options) : sf_(sf), opt_(options) {
  m_ = static_cast<int>(sf.A.rows());
  n_ = static_cast<int>(sf.A.cols());
  T_.resize(m_, n_ + m_);
  T_.leftCols(n_) = sf.A;
  T_.rightCols(m_).setIdentity();
  beta_ = sf.b;
  value_ = Eigen::VectorXd::Zero(n_ + m_);
  upper_.resize(n_ + m_);
  upper_.head(n_) = sf.upper;
  upper_.tail(m_).setConstant(kInfinity);
  state_.assign(n_ + m_, State::Lower);
  head_.resize(m_);
  for (int i = 0; i < m_; ++i) {
    const int s = sf.slack_of_row[i];
    if (s >= 0) {
      head_[i] = s;
      state_[s] = State::Basic;
      upper_[n_ + i] = 0.0;
    } else {
      head_[i] = n_ + i;
      state_[n_ + i] = State::Basic;
    }
  }
  cap_ = 50 * (m_ + n_ + m_);
}

void Tableau::check_budget() {
  ++iterations_;
  ++phase_iterations_;
  if (iterations_ > cap_)
    throw NumericalFailure("simplex iteration cap exceeded (" + std::to_string(cap_) + ")");
}

void Tableau::pivot(int row, int col) {
  const double piv = T_(row, col);
  T_.row(row) /= piv;
  T_(row, col) = 1.0;
  for (int i = 0; i < m_; ++i) {
    if (i == row) continue;
    const double f = T_(i, col);
    if (f == 0.0) continue;
    T_.row(i) -= f * T_.row(row);
    T_(i, col) = 0.0;
  }
}

void Tableau::leave(int row, bool to_upper) {
  const int out = head_[row];
  state_[out] = to_upper ? State::Upper : State::Lower;
  value_[out] = to_upper ? upper_[out] : 0.0;
}

void Tableau::recompute_basics() {
  Eigen::VectorXd rhs = sf_.b;
  for (int j = 0; j < n_; ++j) {
    if (state_[j] != State::Basic && value_[j] != 0.0) rhs -= sf_.A.col(j) * value_[j];
  }
  beta_ = T_.rightCols(m_) * rhs;
}

Eigen::VectorXd Tableau::reduced_costs(const Eigen::VectorXd& cost) const {
  Eigen::VectorXd d = cost;
  for (int i = 0; i < m_; ++i) {
    const double cb = cost[head_[i]];
    if (cb != 0.0) d -= cb * T_.row(i).transpose();
  }
  return d;
}

bool Tableau::phase_one() {
  bool needed = false;
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(n_ + m_);
  for (int i = 0; i < m_; ++i) {
    cost[n_ + i] = 1.0;
    if (head_[i] >= n_) needed = true;
  }
  if (needed) {
    minimize_linear(cost);
    double residual = 0.0;
    for (int i = 0; i < m_; ++i)
      if (head_[i] >= n_) residual += std::abs(beta_[i]);
    const double scale = std::max(1.0, sf_.b.cwiseAbs().maxCoeff());
    if (residual > opt_.feasibility_tol * scale) return false;
  }
  upper_.tail(m_).setZero();
  for (int i = 0; i < m_; ++i) {
    if (head_[i] < n_) continue;
    int best = -1;
    double best_abs = 1e-7;
    for (int j = 0; j < n_; ++j) {
      if (state_[j] == State::Basic || fixed(j)) continue;
      const double a = std::abs(T_(i, j));
      if (a > best_abs) {
        best_abs = a;
        best = j;
      }
    }
    if (best < 0) continue;  // redundant row: the artificial stays basic, pinned at zero
    const int art = head_[i];
    state_[art] = State::Lower;
    value_[art] = 0.0;
    head_[i] = best;
    state_[best] = State::Basic;
    beta_[i] = value_[best];
    pivot(i, best);
  }
  recompute_basics();
  return true;
}

RunStatus Tableau::minimize_linear(const Eigen::VectorXd& cost_in) {
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(n_ + m_);
  cost.head(std::min<Eigen::Index>(cost_in.size(), n_ + m_)) =
      cost_in.head(std::min<Eigen::Index>(cost_in.size(), n_ + m_));
  phase_iterations_ = 0;
  const double tol = opt_.optimality_tol * std::max(1.0, cost.cwiseAbs().maxCoeff());
  Eigen::VectorXd d = reduced_costs(cost);
  bool fresh = true;
  for (;;) {
    const bool bland = phase_iterations_ >= opt_.dantzig_iterations;
    int q = -1;
    double score = 0.0;
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] == State::Basic || fixed(j)) continue;
      double gain = 0.0;
      if (state_[j] == State::Lower && d[j] < -tol) gain = -d[j];
      else if (state_[j] == State::Upper && d[j] > tol) gain = d[j];
      else if (state_[j] == State::Super && std::abs(d[j]) > tol) gain = std::abs(d[j]);
      if (gain <= 0.0) continue;
      if (gain > score) {
        score = gain;
        q = j;
        if (bland) break;
      }
    }
    if (q < 0) {
      if (fresh) return RunStatus::Optimal;
      d = reduced_costs(cost);
      fresh = true;
      continue;
    }
    check_budget();
    const double dir = d[q] < 0.0 ? 1.0 : -1.0;

    // Ratio test with bound flips; ties prefer the larger pivot, then the lower index.
    double t = dir > 0.0 ? upper_[q] - value_[q] : value_[q];
    int r = -1;
    double r_pivot = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double a = dir * T_(i, q);
      double limit;
      if (a > opt_.pivot_tol) {
        limit = beta_[i] / a;
      } else if (a < -opt_.pivot_tol && std::isfinite(upper_[head_[i]])) {
        limit = (upper_[head_[i]] - beta_[i]) / -a;
      } else {
        continue;
      }
      limit = std::max(limit, 0.0);
      const double slack = 1e-12 * (1.0 + std::abs(limit));
      bool take = false;
      if (limit < t - slack) {
        take = true;
      } else if (r >= 0 && limit <= t + slack) {
        if (bland) take = head_[i] < head_[r];
        else take = std::abs(a) > r_pivot || (std::abs(a) == r_pivot && head_[i] < head_[r]);
      }
      if (take) {
        t = std::min(limit, t);
        r = i;
        r_pivot = std::abs(a);
      }
    }
    if (!std::isfinite(t)) return RunStatus::Unbounded;

    if (t > 0.0) {
      beta_ -= (dir * t) * T_.col(q);
      value_[q] += dir * t;
    }
    if (r < 0) {
      state_[q] = dir > 0.0 ? State::Upper : State::Lower;
      value_[q] = dir > 0.0 ? upper_[q] : 0.0;
    } else {
      const bool to_upper = dir * T_(r, q) < 0.0;
      leave(r, to_upper);
      head_[r] = q;
      state_[q] = State::Basic;
      beta_[r] = value_[q];
      pivot(r, q);
      const double dq = d[q];
      d -= dq * T_.row(r).transpose();
      d[q] = 0.0;
    }
    fresh = false;
    if (phase_iterations_ % 100 == 0) {
      d = reduced_costs(cost);
      fresh = true;
    }
  }
}

RunStatus Tableau::minimize_quadratic(const Eigen::MatrixXd& H, const std::vector<int>& quad,
                                      const Eigen::VectorXd& cost) {
  phase_iterations_ = 0;
  const int nq = static_cast<int>(quad.size());
  Eigen::MatrixXd Hqq(nq, nq);
  for (int a = 0; a < nq; ++a)
    for (int b = 0; b < nq; ++b) Hqq(a, b) = H(quad[a], quad[b]);
  const double hmax = nq > 0 ? Hqq.cwiseAbs().maxCoeff() : 0.0;
  const double curvature_tol = 1e-9 * std::max(hmax, 1e-300);
  std::vector<int> row_of(n_ + m_, -1);
  std::vector<int> super;
  bool stationary = false;

  for (;;) {
    Eigen::VectorXd x = values();
    Eigen::VectorXd g = cost;
    for (int a = 0; a < nq; ++a) {
      double acc = 0.0;
      for (int b = 0; b < nq; ++b) acc += Hqq(a, b) * x[quad[b]];
      g[quad[a]] += acc;
    }
    Eigen::VectorXd gfull = Eigen::VectorXd::Zero(n_ + m_);
    gfull.head(n_) = g;
    const Eigen::VectorXd d = reduced_costs(gfull);
    const double tol = opt_.optimality_tol * std::max(1.0, g.cwiseAbs().maxCoeff());

    if (stationary || super.empty()) {
      const bool bland = phase_iterations_ >= opt_.dantzig_iterations;
      int q = -1;
      double score = 0.0;
      for (int j = 0; j < n_; ++j) {
        if (state_[j] == State::Basic || state_[j] == State::Super || fixed(j)) continue;
        double gain = 0.0;
        if (state_[j] == State::Lower && d[j] < -tol) gain = -d[j];
        else if (state_[j] == State::Upper && d[j] > tol) gain = d[j];
        if (gain > score) {
          score = gain;
          q = j;
          if (bland) break;
        }
      }
      if (q < 0) {
        bool drift = false;
        for (int s : super) drift = drift || std::abs(d[s]) > tol;
        if (!drift) return RunStatus::Optimal;
      } else {
        state_[q] = State::Super;
        super.push_back(q);
      }
      stationary = false;
    }
    check_budget();

    // Reduced Hessian over the superbasic set: Z = [-T_S on basics; I on S].
    const int k = static_cast<int>(super.size());
    std::fill(row_of.begin(), row_of.end(), -1);
    for (int i = 0; i < m_; ++i) row_of[head_[i]] = i;
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(nq, k);
    for (int a = 0; a < nq; ++a) {
      const int v = quad[a];
      if (state_[v] == State::Basic) {
        for (int p = 0; p < k; ++p) W(a, p) = -T_(row_of[v], super[p]);
      } else if (state_[v] == State::Super) {
        for (int p = 0; p < k; ++p)
          if (super[p] == v) W(a, p) = 1.0;
      }
    }
    const Eigen::MatrixXd R = W.transpose() * Hqq * W;
    Eigen::VectorXd dS(k);
    for (int p = 0; p < k; ++p) dS[p] = d[super[p]];

    Eigen::VectorXd step;
    double alpha_max = 1.0;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(R);
    const bool definite = ldlt.info() == Eigen::Success && k > 0 &&
                          ldlt.vectorD().minCoeff() > curvature_tol;
    if (definite) {
      step = -ldlt.solve(dS);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(R);
      const Eigen::VectorXd& lambda = eig.eigenvalues();
      const Eigen::MatrixXd& V = eig.eigenvectors();
      Eigen::VectorXd null_part = Eigen::VectorXd::Zero(k);
      Eigen::VectorXd range_part = Eigen::VectorXd::Zero(k);
      for (int p = 0; p < k; ++p) {
        const double coef = V.col(p).dot(dS);
        if (lambda[p] <= curvature_tol) null_part += coef * V.col(p);
        else range_part += (coef / lambda[p]) * V.col(p);
      }
      if (null_part.cwiseAbs().maxCoeff() > tol) {
        step = -null_part;
        alpha_max = kInfinity;
      } else {
        step = -range_part;
      }
    }
    if (step.cwiseAbs().maxCoeff() == 0.0) {
      stationary = true;
      continue;
    }

    Eigen::VectorXd dbeta = Eigen::VectorXd::Zero(m_);
    for (int p = 0; p < k; ++p)
      if (step[p] != 0.0) dbeta -= step[p] * T_.col(super[p]);

    double alpha = alpha_max;
    int block_row = -1;
    int block_super = -1;
    double block_mag = 0.0;
    auto consider = [&](double limit, double mag, int row, int sup) {
      limit = std::max(limit, 0.0);
      const double slack = 1e-12 * (1.0 + std::abs(limit));
      if (limit < alpha - slack || (limit <= alpha + slack && mag > block_mag &&
                                    (block_row >= 0 || block_super >= 0))) {
        alpha = limit;
        block_row = row;
        block_super = sup;
        block_mag = mag;
      }
    };
    for (int p = 0; p < k; ++p) {
      const int s = super[p];
      if (step[p] < -opt_.pivot_tol * 1e-3) consider(value_[s] / -step[p], -step[p], -1, p);
      else if (step[p] > opt_.pivot_tol * 1e-3 && std::isfinite(upper_[s]))
        consider((upper_[s] - value_[s]) / step[p], step[p], -1, p);
    }
    for (int i = 0; i < m_; ++i) {
      const double db = dbeta[i];
      if (db < -opt_.pivot_tol) consider(beta_[i] / -db, -db, i, -1);
      else if (db > opt_.pivot_tol && std::isfinite(upper_[head_[i]]))
        consider((upper_[head_[i]] - beta_[i]) / db, db, i, -1);
    }
    if (!std::isfinite(alpha)) return RunStatus::Unbounded;

    for (int p = 0; p < k; ++p) value_[super[p]] += alpha * step[p];
    beta_ += alpha * dbeta;

    if (block_row < 0 && block_super < 0) {
      stationary = true;
      continue;
    }
    if (block_super >= 0) {
      const int s = super[block_super];
      const bool to_upper = step[block_super] > 0.0;
      state_[s] = to_upper ? State::Upper : State::Lower;
      value_[s] = to_upper ? upper_[s] : 0.0;
      super.erase(super.begin() + block_super);
    } else {
      const int r = block_row;
      int best = -1;
      double best_abs = 0.0;
      for (int p = 0; p < k; ++p) {
        const double a = std::abs(T_(r, super[p]));
        if (a > best_abs) {
          best_abs = a;
          best = p;
        }
      }
      const int s = super[best];
      leave(r, dbeta[r] > 0.0);
      head_[r] = s;
      state_[s] = State::Basic;
      beta_[r] = value_[s];
      pivot(r, s);
      super.erase(super.begin() + best);
    }
    stationary = false;
    if (phase_iterations_ % 50 == 0) recompute_basics();
  }
}

Eigen::VectorXd Tableau::values() const {
  Eigen::VectorXd x = value_.head(n_);
  for (int i = 0; i < m_; ++i)
    if (head_[i] < n_) x[head_[i]] = beta_[i];
  return x;
}

Eigen::VectorXd Tableau::multipliers(const Eigen::VectorXd& gradient) const {
  Eigen::VectorXd gb(m_);
  for (int i = 0; i < m_; ++i) gb[i] = head_[i] < n_ ? gradient[head_[i]] : 0.0;
  return T_.rightCols(m_).transpose() * gb;
}

std::vector<int> Tableau::basic_columns() const {
  std::vector<int> cols;
  for (int i = 0; i < m_; ++i)
    if (head_[i] < n_) cols.push_back(head_[i]);
  std::sort(cols.begin(), cols.end());
  return cols;
}

}  // namespace vess::detail
