#pragma once

// Derivative of the forward map and its adjoint.

#include <string>
#include <vector>

#include "hyperinv/forward.hpp"

namespace hyperinv {

/// Dual of ParameterPoint under the plain sample pairing sum_{n,i} g(n,i) h(n,i):
/// each entry already carries the time and space quadrature weights.
using GradientFields = ParameterPoint;

/// Nodal right-hand side of the linearized equation for one operator slot:
///   A: -Abar u,  Q: -Qbar u,  B: -Bbar u',  C: -(dCbar u' + Cbar u'').
SourceTerm linearized_rhs(Slot slot, const Trajectory& u, const OperatorTimeline& direction);

enum class DerivativeMode {
  kDiscrete,  // exact derivative of the discrete forward map
  kNodal,     // linearized equation with the nodal right-hand sides above
};

/// Trajectory of dF(x)[h] with homogeneous initial data.
Trajectory derivative_apply(const ForwardProblem& problem, const ForwardState& state,
                            const ParameterPoint& h,
                            DerivativeMode mode = DerivativeMode::kDiscrete);

/// Gradient densities from the adjoint equation solved backward in time.
GradientFields adjoint_apply_continuous(const ForwardProblem& problem, const ForwardState& state,
                                        const DataVector& v);

/// Exact transpose of h -> observe(derivative_apply(h)).
GradientFields adjoint_apply_discrete(const ForwardProblem& problem, const ForwardState& state,
                                      const DataVector& v);

enum class AdjointMode { kDiscrete, kContinuous };

AdjointMode parse_adjoint_mode(const std::string& name);
std::string to_string(AdjointMode mode);

struct DotTestResult {
  double lhs = 0.0;  // <dF h, v>
  double rhs = 0.0;  // <dF* v, h>
  double mismatch = 0.0;
};

DotTestResult dot_test(const ForwardProblem& problem, const ForwardState& state,
                       const ParameterPoint& h, const DataVector& v, AdjointMode mode);

/// Dot tests over many (h, v) pairs, spread over `threads` workers.
std::vector<DotTestResult> dot_test_batch(const ForwardProblem& problem, const ForwardState& state,
                                          const std::vector<ParameterPoint>& hs,
                                          const std::vector<DataVector>& vs, AdjointMode mode,
                                          int threads = 1);

struct TaylorResult {
  std::vector<double> steps;
  std::vector<double> remainders;  // ||F(x+sh) - F(x) - s dF(x)h||
  std::vector<double> orders;      // between consecutive steps
};

TaylorResult taylor_test(const ForwardProblem& problem, const ForwardState& state,
                         const ParameterPoint& h, const ObservationSpec& spec,
                         const std::vector<double>& steps);

}  // namespace hyperinv
