#pragma once

// Perturbation sequences that do not converge in parameter space while their
// images under the forward map do, and spectral probes of the linearization.

#include <string>
#include <vector>

#include "hyperinv/forward.hpp"

namespace hyperinv {

/// Mother bump exp(-1/(1-t^2)) on (-1, 1) scaled so that the largest sup norm
/// over derivative orders 0..r equals one.
class MotherBump {
 public:
  explicit MotherBump(int r);

  int order() const { return r_; }
  double scale() const { return scale_; }  // max_i sup |psi_raw^(i)|
  double value(double t) const;
  /// i-th derivative of the normalized bump.
  double derivative(double t, int i) const;
  /// sup |psi^(i)| of the normalized bump, i = 0..r.
  const std::vector<double>& sup_norms() const { return sups_; }

 private:
  int r_;
  double scale_ = 1.0;
  std::vector<double> sups_;
};

/// Taylor coefficients c_i = f^(i)(t)/i! of exp(-1/(1-t^2)), i = 0..order.
std::vector<double> raw_bump_jet(double t, int order);

struct BumpSequence {
  int r = 0;
  double t0 = 0.0;
  TimeGrid grid;
  std::vector<int> j;
  std::vector<Vec> samples;       // alpha_j on the time nodes
  std::vector<double> norms;      // parameter_norm(alpha_j, r - 1)
  double gamma = 0.0;             // lower bound used by the experiments
  double gamma_continuous = 0.0;  // sup |psi^(r)|, the j-independent lower bound
  double psi_at_zero = 0.0;
};

BumpSequence bump_sequence(int r, double t0, const TimeGrid& grid, const std::vector<int>& j_list);

struct RankOneSequence {
  enum class Kind { kX, kY };
  Kind kind = Kind::kX;
  std::vector<int> k;       // 1-based indices into the spectrum
  Mat phi;                  // M-orthonormal generalized eigenvectors of (K_V, M), all of them
  Mat psi;                  // K_V-orthonormal rescaling of phi
  Vec eigenvalues;

  /// X_k v = (v . M phi_k) phi_k  or  Y_k v = (v . K_V psi_k) psi_1.
  Vec apply(int k, const Vec& v, const Discretization& disc) const;
  /// Matrix of the k-th operator.
  Mat matrix(int k, const Discretization& disc) const;
  /// Induced operator norm (H for X, V for Y).
  double operator_norm(int k, const Discretization& disc) const;
};

RankOneSequence rank_one_sequence(const Discretization& disc, RankOneSequence::Kind kind,
                                  const std::vector<int>& k_list);

struct IllposedRow {
  int j = 0;
  double param_distance = 0.0;
  double output_distance = 0.0;
};

struct IllposedResult {
  std::string target;
  double delta = 0.0;
  double gamma = 0.0;
  std::vector<IllposedRow> rows;
  bool param_bounded_below = false;  // every param_distance >= delta*gamma/2
  bool output_decreasing = false;    // strictly decreasing in j
  double output_ratio = 0.0;         // last / first
};

/// Perturbed point p_j for one target: additive delta*alpha_j/2, or
/// reciprocal-additive for the Maxwell permeability.
ParameterPoint perturb_with_bump(const ParameterPoint& point, const std::string& target,
                                 double delta, const Vec& alpha);

IllposedResult illposed_experiment(const ForwardProblem& problem, const ParameterPoint& point,
                                   const std::string& target, double delta,
                                   const std::vector<int>& j_list, double t0 = -1.0,
                                   int threads = 1);

struct SvdProbeResult {
  Vec singular_values;
  std::vector<double> decay_ratios;  // sigma_k / sigma_1
  int numerical_rank = 0;            // count of sigma_k / sigma_1 > 1e-8
  int parameter_dofs = 0;
};

/// Parameter directions for the probe: time-constant P1 hat functions on a
/// fixed grid of (px+1) [x (py+1)] nodes over the domain, independent of the mesh.
struct ParameterBasis {
  int px = 29;
  int py = 0;
};

SvdProbeResult svd_probe(const ForwardProblem& problem, const ParameterPoint& point,
                         const std::string& target, int n_sing, const ParameterBasis& basis = {},
                         int threads = 1);

}  // namespace hyperinv
