#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vess/lp.hpp"

namespace vess {

// Optimal value z(phi) of an LP along the right-hand-side ray b + phi * direction, phi >= 0.
struct ParametricRay {
  Eigen::VectorXd direction;
  std::vector<double> points;  // interval starts, points[0] == 0
  std::vector<double> slopes;  // slope of z on [points[k], points[k+1])
  double value_at_zero = 0.0;
  double domain_end = kInfinity;  // z is +inf beyond this

  double value(double phi) const;
};

ParametricRay parametric_rhs_ray(const LinearProgram& lp, const Eigen::VectorXd& direction,
                                 const SolverOptions& options = {});

}  // namespace vess
