#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "hyperinv/evolve.hpp"
#include "hyperinv/galerkin.hpp"

namespace hyperinv::testing {

// Timeline of a system with one DOF and coefficients given as functions of t.
inline OperatorTimeline scalar_timeline(const TimeGrid& grid, std::function<double(double)> c,
                                        std::function<double(double)> a,
                                        std::function<double(double)> b = nullptr) {
  OperatorTimeline tl;
  tl.grid = grid;
  tl.ndof = 1;
  tl.has_B = static_cast<bool>(b);
  auto one = [](double v) {
    SpMat m(1, 1);
    m.insert(0, 0) = v;
    return m;
  };
  for (int n = 0; n < grid.nodes(); ++n) {
    const double t = grid.t(n);
    tl.C.push_back(one(c(t)));
    tl.A.push_back(one(a(t)));
    tl.B.push_back(one(b ? b(t) : 0.0));
    tl.Q.push_back(SpMat(1, 1));
  }
  tl.dA = time_derivative(tl.A, grid.dt());
  tl.dB = time_derivative(tl.B, grid.dt());
  tl.dC = time_derivative(tl.C, grid.dt());
  tl.dQ = time_derivative(tl.Q, grid.dt());
  return tl;
}

inline double max_abs_diff(const SpMat& a, const SpMat& b) {
  const Mat d = Mat(a) - Mat(b);
  return d.size() ? d.cwiseAbs().maxCoeff() : 0.0;
}

inline double order(double e_coarse, double e_fine, double ratio = 2.0) {
  return std::log(e_coarse / e_fine) / std::log(ratio);
}

}  // namespace hyperinv::testing
